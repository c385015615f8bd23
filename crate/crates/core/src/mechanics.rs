//! Closed-form immediate impact of a single marketable order, computed from
//! the pre-trade snapshot alone.
//!
//! For a sell order with limit `pi` and size `V` against bids `b_1 > b_2 > ...`:
//!
//! * partially filled (PS): `r = (pi + b_{n+1} - a_1 - b_1) / (a_1 + b_1)`,
//!   with `n` the number of bid levels at or above `pi`;
//! * filled (FS): `r = (b_{n+1} - b_1) / (a_1 + b_1)`, where `b_{n+1}` is the
//!   first level that is not fully consumed.
//!
//! A level priced exactly at the limit executes. Buy orders mirror this with
//! the ask ladder.

use serde::{Deserialize, Serialize};

use crate::classify::{TickReturn, TradeType};
use crate::error::{Error, Result};
use crate::lob::{BookSnapshot, LevelView, Price, Side, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MechanicalOutcome {
    pub kind: TradeType,
    /// Opposite-side levels fully consumed.
    pub n: usize,
    pub omega: Volume,
    pub remainder: Volume,
    pub ret: TickReturn,
    /// Signed relative spread contribution (partial fills only).
    pub spread_term: TickReturn,
    /// Price distance from the old to the new opposite best quote.
    pub gap_term: TickReturn,
    /// Distance from the old opposite best quote to the limit price (partial
    /// fills only).
    pub residual_term: TickReturn,
}

pub fn predict_sell(snapshot: &BookSnapshot, pi: Price, size: Volume) -> Result<MechanicalOutcome> {
    predict(snapshot, Side::Sell, pi, size)
}

pub fn predict_buy(snapshot: &BookSnapshot, pi: Price, size: Volume) -> Result<MechanicalOutcome> {
    predict(snapshot, Side::Buy, pi, size)
}

pub fn predict(snapshot: &BookSnapshot, side: Side, pi: Price, size: Volume) -> Result<MechanicalOutcome> {
    if size.is_zero() || pi.0 <= 0 {
        return Err(Error::Invalid("order needs positive price and size".into()));
    }
    let (Some(a1), Some(b1)) = (snapshot.ask(1), snapshot.bid(1)) else {
        return Err(Error::Invalid("pre-trade book must be two-sided".into()));
    };
    let den = a1.0 + b1.0;
    let frac = |num: i64| TickReturn::new(num, den);

    let (opposite, truncated, crosses): (&[LevelView], bool, fn(Price, Price) -> bool) = match side {
        Side::Sell => (&snapshot.bids, snapshot.bids_truncated(), |pi, p| pi <= p),
        Side::Buy => (&snapshot.asks, snapshot.asks_truncated(), |pi, p| pi >= p),
    };
    let best = opposite[0].price;
    if !crosses(pi, best) {
        return Err(Error::Invalid(format!("limit {pi} does not cross best {best}")));
    }
    let spread_sign = match side {
        Side::Buy => 1,
        Side::Sell => -1,
    };
    // The level that becomes the new opposite best must be visible.
    let level = |i: usize| -> Result<Price> {
        match opposite.get(i - 1) {
            Some(l) => Ok(l.price),
            None if truncated => Err(Error::InsufficientDepth {
                needed: i,
                available: opposite.len(),
            }),
            None => Err(Error::UndefinedReturn),
        }
    };
    let filled = |n: usize, next: Price, omega: Volume| MechanicalOutcome {
        kind: match side {
            Side::Buy => TradeType::FB,
            Side::Sell => TradeType::FS,
        },
        n,
        omega,
        remainder: Volume::ZERO,
        ret: frac(next.0 - best.0),
        spread_term: TickReturn::zero(),
        gap_term: frac(next.0 - best.0),
        residual_term: TickReturn::zero(),
    };

    let mut cum = Volume::ZERO;
    for i in 1.. {
        let price = level(i)?;
        let volume = opposite[i - 1].volume;
        if !crosses(pi, price) {
            // The limit stops above level i: the remainder rests at pi.
            let n = i - 1;
            return Ok(MechanicalOutcome {
                kind: match side {
                    Side::Buy => TradeType::PB,
                    Side::Sell => TradeType::PS,
                },
                n,
                omega: cum,
                remainder: size - cum,
                ret: frac(pi.0 + price.0 - a1.0 - b1.0),
                spread_term: frac(spread_sign * (a1.0 - b1.0)),
                gap_term: frac(price.0 - best.0),
                residual_term: frac(pi.0 - best.0),
            });
        }
        let through = cum + volume;
        if through == size {
            return Ok(filled(i, level(i + 1)?, size));
        }
        if through > size {
            return Ok(filled(i - 1, price, size));
        }
        cum = through;
    }
    unreachable!("loop exits through a return")
}

/// `r_PS - r_FS = -(a_1 - pi) / (a_1 + b_1)` for a sell limit `pi <= b_1`.
pub fn ps_fs_gap(snapshot: &BookSnapshot, pi: Price) -> Result<TickReturn> {
    let (Some(a1), Some(b1)) = (snapshot.ask(1), snapshot.bid(1)) else {
        return Err(Error::Invalid("pre-trade book must be two-sided".into()));
    };
    Ok(TickReturn::new(-(a1.0 - pi.0), a1.0 + b1.0))
}

/// Reflects a snapshot through `p -> (a_1 + b_1) - p`, swapping the sides.
/// The quote sum is unchanged, so returns flip sign exactly.
pub fn mirror(snapshot: &BookSnapshot) -> Option<BookSnapshot> {
    let pivot = snapshot.quote_sum()?;
    let flip = |levels: &[LevelView]| -> Vec<LevelView> {
        levels
            .iter()
            .map(|l| LevelView {
                price: Price(pivot - l.price.0),
                volume: l.volume,
            })
            .collect()
    };
    Some(BookSnapshot {
        depth: snapshot.depth,
        asks: flip(&snapshot.bids),
        bids: flip(&snapshot.asks),
    })
}
