//! Hand-built books and orders with hand-computed outcomes.
//!
//! The base book (0.005 tick, prices in ticks):
//!
//! ```text
//! asks 2002:3 2004:2 2006:4 2008:1 2010:2 2012:3
//! bids 2000:2 1998:3 1996:1 1994:5 1992:4 1990:3
//! ```
//!
//! `a1 + b1 = 4002`. Each `_mirror` variant reflects the book through
//! `p -> 4002 - p` and sends the opposite-side order.

use crate::classify::{TickReturn, TradeType};
use crate::error::{Error, Result};
use crate::flow::TickSize;
use crate::lob::{BookSnapshot, OrderBook, Price, Side, Volume};
use crate::mechanics::MechanicalOutcome;

pub const SCENARIOS: [&str; 10] = [
    "example_ps",
    "example_fs",
    "exact_fill",
    "level1_fs",
    "deep_sweep",
    "example_ps_mirror",
    "example_fs_mirror",
    "exact_fill_mirror",
    "level1_fs_mirror",
    "deep_sweep_mirror",
];

const BIDS: [(i64, u64); 6] = [(2000, 2), (1998, 3), (1996, 1), (1994, 5), (1992, 4), (1990, 3)];
const ASKS: [(i64, u64); 6] = [(2002, 3), (2004, 2), (2006, 4), (2008, 1), (2010, 2), (2012, 3)];
const QUOTE_SUM: i64 = 4002;

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub tick: TickSize,
    pub book: OrderBook,
    pub side: Side,
    pub price: Price,
    pub size: Volume,
    pub expected: MechanicalOutcome,
}

impl Scenario {
    pub fn snapshot(&self) -> BookSnapshot {
        self.book.depth_snapshot(self.book.level_count(Side::Buy).max(self.book.level_count(Side::Sell)) + 1)
    }
}

struct Spec {
    kind: TradeType,
    pi: i64,
    size: u64,
    n: usize,
    omega: u64,
    /// Numerators over 4002: return, spread, gap, residual.
    terms: [i64; 4],
}

fn base(name: &str) -> Option<Spec> {
    let s = match name {
        // Eats 2000:2, 1998:3, 1996:1; one unit rests at 1995.
        "example_ps" => Spec { kind: TradeType::PS, pi: 1995, size: 7, n: 3, omega: 6, terms: [-13, -2, -6, -5] },
        // Same three levels, then one unit from 1994 which stays best.
        "example_fs" => Spec { kind: TradeType::FS, pi: 1990, size: 7, n: 3, omega: 7, terms: [-6, 0, -6, 0] },
        // Exactly clears three levels; 1994 becomes best.
        "exact_fill" => Spec { kind: TradeType::FS, pi: 1990, size: 6, n: 3, omega: 6, terms: [-6, 0, -6, 0] },
        "level1_fs" => Spec { kind: TradeType::FS, pi: 2000, size: 1, n: 0, omega: 1, terms: [0, 0, 0, 0] },
        // Clears five levels (15 units); five rest at 1991 above 1990.
        "deep_sweep" => Spec { kind: TradeType::PS, pi: 1991, size: 20, n: 5, omega: 15, terms: [-21, -2, -10, -9] },
        _ => return None,
    };
    Some(s)
}

pub fn scripted_scenario(name: &str) -> Result<Scenario> {
    let (stem, mirrored) = match name.strip_suffix("_mirror") {
        Some(stem) => (stem, true),
        None => (name, false),
    };
    let spec = base(stem).ok_or_else(|| Error::Invalid(format!("unknown scenario {name:?}")))?;
    let name = SCENARIOS.iter().find(|n| **n == name).copied().expect("catalogue covers every base");
    let frac = |num: i64| {
        let num = if mirrored { -num } else { num };
        TickReturn::new(num, QUOTE_SUM)
    };
    let (book, side, pi, kind) = if mirrored {
        let flip = |levels: &[(i64, u64)]| -> Vec<(i64, u64)> {
            levels.iter().map(|&(p, v)| (QUOTE_SUM - p, v)).collect()
        };
        let kind = match spec.kind {
            TradeType::PS => TradeType::PB,
            TradeType::FS => TradeType::FB,
            TradeType::PB => TradeType::PS,
            TradeType::FB => TradeType::FS,
        };
        (OrderBook::with_levels(&flip(&ASKS), &flip(&BIDS), 1), Side::Buy, QUOTE_SUM - spec.pi, kind)
    } else {
        (OrderBook::with_levels(&BIDS, &ASKS, 1), Side::Sell, spec.pi, spec.kind)
    };
    Ok(Scenario {
        name,
        tick: "0.005".parse().expect("valid tick"),
        book,
        side,
        price: Price(pi),
        size: Volume(spec.size),
        expected: MechanicalOutcome {
            kind,
            n: spec.n,
            omega: Volume(spec.omega),
            remainder: Volume(spec.size - spec.omega),
            ret: frac(spec.terms[0]),
            spread_term: frac(spec.terms[1]),
            gap_term: frac(spec.terms[2]),
            residual_term: frac(spec.terms[3]),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lob::OrderId;
    use crate::mechanics::predict;

    #[test]
    fn catalogue_matches_closed_form_and_engine() {
        for name in SCENARIOS {
            let sc = scripted_scenario(name).unwrap();
            let snap = sc.snapshot();
            let predicted = predict(&snap, sc.side, sc.price, sc.size).unwrap();
            assert_eq!(predicted, sc.expected, "{name}");

            let mut book = sc.book.clone();
            let out = book.apply_limit_order(sc.side, sc.price, sc.size, OrderId(999)).unwrap();
            assert_eq!(out.executed(), sc.expected.omega, "{name}");
            assert_eq!(out.remainder, sc.expected.remainder, "{name}");
            let post = book.depth_snapshot(snap.depth);
            assert_eq!(crate::classify::immediate_return(&snap, &post), Some(sc.expected.ret), "{name}");
        }
    }

    #[test]
    fn example_values() {
        let sc = scripted_scenario("example_ps").unwrap();
        assert_eq!(sc.expected.kind, TradeType::PS);
        assert_eq!(sc.expected.n, 3);
        assert_eq!(sc.expected.omega, Volume(6));
        assert_eq!(sc.expected.remainder, Volume(1));
        assert_eq!(sc.expected.ret, TickReturn::new(-13, 4002));
        assert_eq!(scripted_scenario("level1_fs").unwrap().expected.ret, TickReturn::zero());
        assert!(scripted_scenario("nope").is_err());
    }
}
