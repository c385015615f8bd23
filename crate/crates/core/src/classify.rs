//! Four-way trade typology and the immediate mid-quote return of a trade.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::lob::{BookSnapshot, Price, Side, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TradeType {
    /// Buyer-initiated, partially filled.
    PB,
    /// Seller-initiated, partially filled.
    PS,
    /// Buyer-initiated, filled.
    FB,
    /// Seller-initiated, filled.
    FS,
}

impl TradeType {
    pub const ALL: [TradeType; 4] = [TradeType::PB, TradeType::PS, TradeType::FB, TradeType::FS];

    pub fn index(self) -> usize {
        match self {
            TradeType::PB => 0,
            TradeType::PS => 1,
            TradeType::FB => 2,
            TradeType::FS => 3,
        }
    }

    pub fn side(self) -> Side {
        match self {
            TradeType::PB | TradeType::FB => Side::Buy,
            TradeType::PS | TradeType::FS => Side::Sell,
        }
    }

    pub fn is_partial(self) -> bool {
        matches!(self, TradeType::PB | TradeType::PS)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TradeType::PB => "PB",
            TradeType::PS => "PS",
            TradeType::FB => "FB",
            TradeType::FS => "FS",
        }
    }
}

impl fmt::Display for TradeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TradeType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "PB" => Ok(TradeType::PB),
            "PS" => Ok(TradeType::PS),
            "FB" => Ok(TradeType::FB),
            "FS" => Ok(TradeType::FS),
            other => Err(Error::Invalid(format!("unknown trade type {other:?}"))),
        }
    }
}

/// Trade type from the aggressor side and the unexecuted remainder.
pub fn classify(side: Side, remainder: Volume) -> TradeType {
    match (side, remainder.is_zero()) {
        (Side::Buy, false) => TradeType::PB,
        (Side::Sell, false) => TradeType::PS,
        (Side::Buy, true) => TradeType::FB,
        (Side::Sell, true) => TradeType::FS,
    }
}

/// A dimensionless return held as an exact ratio of tick sums.
///
/// Equality is rational equality, so `1/2 == 2/4`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TickReturn {
    pub num: i64,
    /// Always positive.
    pub den: i64,
}

impl TickReturn {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        if den < 0 {
            TickReturn { num: -num, den: -den }
        } else {
            TickReturn { num, den }
        }
    }

    pub fn zero() -> Self {
        TickReturn { num: 0, den: 1 }
    }

    /// Correctly rounded while both parts stay below 2^53 in magnitude.
    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn signum(self) -> i64 {
        self.num.signum()
    }
}

impl PartialEq for TickReturn {
    fn eq(&self, other: &Self) -> bool {
        self.num as i128 * other.den as i128 == other.num as i128 * self.den as i128
    }
}

impl Eq for TickReturn {}

impl std::ops::Neg for TickReturn {
    type Output = TickReturn;
    fn neg(self) -> TickReturn {
        TickReturn {
            num: -self.num,
            den: self.den,
        }
    }
}

/// `(a1+ + b1+ - a1- - b1-) / (a1- + b1-)`; `None` when either snapshot is
/// one-sided.
pub fn immediate_return(pre: &BookSnapshot, post: &BookSnapshot) -> Option<TickReturn> {
    let before = pre.quote_sum()?;
    let after = post.quote_sum()?;
    Some(TickReturn::new(after - before, before))
}

/// One incoming order's complete execution outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub instrument: String,
    pub timestamp: NaiveDateTime,
    pub seq: u64,
    pub kind: TradeType,
    pub limit_price: Price,
    pub size: Volume,
    /// Executed volume.
    pub omega: Volume,
    pub remainder: Volume,
    /// Opposite-side levels fully consumed.
    pub n_levels_eaten: usize,
    /// `None` when the post-trade book is one-sided.
    pub ret: Option<TickReturn>,
    pub pre: BookSnapshot,
    pub post: BookSnapshot,
}

impl TradeRecord {
    pub fn r(&self) -> Option<f64> {
        self.ret.map(TickReturn::to_f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeStats {
    pub count: usize,
    pub mean_r: Option<f64>,
    pub mean_omega: Option<f64>,
    /// Fraction of trades of this type with exactly zero return.
    pub zero_fraction: Option<f64>,
    pub mean_abs_r: Option<f64>,
}

/// Per-instrument summary mirroring the classic basic-statistics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockStats {
    pub instrument: String,
    /// Indexed by [`TradeType::index`].
    pub per_type: [TypeStats; 4],
    /// Trades with a defined return.
    pub n: usize,
    /// Trades dropped because the return was undefined.
    pub undefined: usize,
    pub mean_omega: f64,
    /// Fraction of partially filled trades.
    pub partial_fraction: f64,
    /// `<r_PB> + <r_PS>`.
    pub partial_symmetry: Option<f64>,
    /// `<r_FB> + <r_FS>`.
    pub filled_symmetry: Option<f64>,
}

impl StockStats {
    pub fn get(&self, kind: TradeType) -> &TypeStats {
        &self.per_type[kind.index()]
    }

    pub fn mean_r(&self, kind: TradeType) -> Option<f64> {
        self.get(kind).mean_r
    }

    pub fn mean_omega(&self, kind: TradeType) -> Option<f64> {
        self.get(kind).mean_omega
    }
}

/// Summary statistics over one instrument's trades. Trades with an undefined
/// return are counted and excluded.
pub fn stock_stats<'a, I>(instrument: &str, trades: I) -> Result<StockStats, Error>
where
    I: IntoIterator<Item = &'a TradeRecord>,
{
    let mut sum_r = [0.0f64; 4];
    let mut sum_abs_r = [0.0f64; 4];
    let mut sum_omega = [0.0f64; 4];
    let mut zeros = [0usize; 4];
    let mut counts = [0usize; 4];
    let mut undefined = 0usize;
    let mut total_omega = 0.0;

    for t in trades {
        let Some(ret) = t.ret else {
            undefined += 1;
            continue;
        };
        let k = t.kind.index();
        let r = ret.to_f64();
        counts[k] += 1;
        sum_r[k] += r;
        sum_abs_r[k] += r.abs();
        sum_omega[k] += t.omega.0 as f64;
        total_omega += t.omega.0 as f64;
        if ret.num == 0 {
            zeros[k] += 1;
        }
    }

    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(Error::Invalid(format!(
            "no trades with a defined return for {instrument}"
        )));
    }

    let per_type = std::array::from_fn(|k| {
        let c = counts[k];
        let mean = |s: f64| (c > 0).then(|| s / c as f64);
        TypeStats {
            count: c,
            mean_r: mean(sum_r[k]),
            mean_omega: mean(sum_omega[k]),
            zero_fraction: mean(zeros[k] as f64),
            mean_abs_r: mean(sum_abs_r[k]),
        }
    });
    let sum_pair = |x: Option<f64>, y: Option<f64>| Some(x? + y?);
    let stats = StockStats {
        instrument: instrument.to_string(),
        n,
        undefined,
        mean_omega: total_omega / n as f64,
        partial_fraction: (counts[0] + counts[1]) as f64 / n as f64,
        partial_symmetry: None,
        filled_symmetry: None,
        per_type,
    };
    Ok(StockStats {
        partial_symmetry: sum_pair(stats.mean_r(TradeType::PB), stats.mean_r(TradeType::PS)),
        filled_symmetry: sum_pair(stats.mean_r(TradeType::FB), stats.mean_r(TradeType::FS)),
        ..stats
    })
}

pub const STATS_CSV_HEADER: &str = "code,mean_r_pb,mean_r_ps,mean_r_fb,mean_r_fs,n,f";

/// Writes one row per instrument; absent means are left blank.
pub fn write_stats_csv<W: Write>(mut w: W, rows: &[StockStats]) -> std::io::Result<()> {
    writeln!(w, "{STATS_CSV_HEADER}")?;
    for s in rows {
        let cell = |k: TradeType| s.mean_r(k).map(|v| format!("{v:e}")).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            s.instrument,
            cell(TradeType::PB),
            cell(TradeType::PS),
            cell(TradeType::FB),
            cell(TradeType::FS),
            s.n,
            s.partial_fraction
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lob::{LevelView, OrderBook};

    fn snap(bid: i64, ask: i64) -> BookSnapshot {
        BookSnapshot {
            depth: 1,
            asks: vec![LevelView {
                price: Price(ask),
                volume: Volume(1),
            }],
            bids: vec![LevelView {
                price: Price(bid),
                volume: Volume(1),
            }],
        }
    }

    #[test]
    fn classification_table() {
        assert_eq!(classify(Side::Sell, Volume(1)), TradeType::PS);
        assert_eq!(classify(Side::Sell, Volume(0)), TradeType::FS);
        assert_eq!(classify(Side::Buy, Volume(0)), TradeType::FB);
        assert_eq!(classify(Side::Buy, Volume(3)), TradeType::PB);
    }

    #[test]
    fn return_of_bid_drop() {
        // a=10.01 b=9.99 -> a=10.01 b=9.97
        let r = immediate_return(&snap(999, 1001), &snap(997, 1001)).unwrap();
        assert_eq!(r, TickReturn::new(-2, 2000));
        assert!((r.to_f64() + 0.001).abs() < 1e-15);
    }

    #[test]
    fn unchanged_quotes_give_zero() {
        let r = immediate_return(&snap(999, 1001), &snap(999, 1001)).unwrap();
        assert_eq!(r, TickReturn::zero());
        assert_eq!(r.to_f64(), 0.0);
    }

    #[test]
    fn level_one_fs_return_is_gap_over_quote_sum() {
        let mut book = OrderBook::with_levels(&[(2000, 2), (1998, 3)], &[(2002, 3)], 1);
        let pre = book.snapshot(5).unwrap();
        book.apply_limit_order(Side::Sell, Price(1998), Volume(2), crate::lob::OrderId(50))
            .unwrap();
        let post = book.snapshot(5).unwrap();
        let r = immediate_return(&pre, &post).unwrap();
        assert_eq!(r, TickReturn::new(1998 - 2000, 2002 + 2000));
        assert!(r.to_f64() < 0.0);
    }

    #[test]
    fn one_sided_post_is_undefined() {
        let empty = BookSnapshot {
            depth: 1,
            asks: vec![],
            bids: snap(999, 1001).bids,
        };
        assert_eq!(immediate_return(&snap(999, 1001), &empty), None);
    }

    fn trade(kind: TradeType, omega: u64, num: i64) -> TradeRecord {
        let s = snap(999, 1001);
        TradeRecord {
            instrument: "X".into(),
            timestamp: chrono::NaiveDate::from_ymd_opt(2003, 6, 2)
                .unwrap()
                .and_hms_opt(10, 0, 0)
                .unwrap(),
            seq: 0,
            kind,
            limit_price: Price(1000),
            size: Volume(omega),
            omega: Volume(omega),
            remainder: Volume(0),
            n_levels_eaten: 0,
            ret: Some(TickReturn::new(num, 2000)),
            pre: s.clone(),
            post: s,
        }
    }

    #[test]
    fn stats_means_and_fractions() {
        let trades = vec![
            trade(TradeType::PB, 10, 4),
            trade(TradeType::PB, 30, 2),
            trade(TradeType::FS, 20, 0),
            trade(TradeType::FS, 40, -2),
        ];
        let s = stock_stats("X", &trades).unwrap();
        assert_eq!(s.n, 4);
        assert_eq!(s.mean_r(TradeType::PB), Some(3.0 / 2000.0));
        assert_eq!(s.mean_r(TradeType::FS), Some(-1.0 / 2000.0));
        assert_eq!(s.mean_r(TradeType::PS), None);
        assert_eq!(s.mean_omega(TradeType::PB), Some(20.0));
        assert_eq!(s.get(TradeType::FS).zero_fraction, Some(0.5));
        assert_eq!(s.partial_fraction, 0.5);
        assert_eq!(s.mean_omega, 25.0);
        assert_eq!(s.partial_symmetry, None);
    }

    #[test]
    fn all_filled_has_zero_partial_fraction() {
        let trades = vec![trade(TradeType::FB, 1, 0), trade(TradeType::FS, 1, 0)];
        let s = stock_stats("X", &trades).unwrap();
        assert_eq!(s.partial_fraction, 0.0);
        assert_eq!(s.filled_symmetry, Some(0.0));
    }

    #[test]
    fn undefined_returns_are_counted_not_averaged() {
        let mut t = trade(TradeType::PS, 5, -3);
        let ok = t.clone();
        t.ret = None;
        let s = stock_stats("X", [&t, &ok]).unwrap();
        assert_eq!(s.n, 1);
        assert_eq!(s.undefined, 1);
        assert!(stock_stats("X", [&t]).is_err());
    }

    #[test]
    fn stats_csv_leaves_absent_means_blank() {
        let s = stock_stats("000001", &[trade(TradeType::FB, 1, 0)]).unwrap();
        let mut buf = Vec::new();
        write_stats_csv(&mut buf, &[s]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let row = text.lines().nth(1).unwrap();
        assert_eq!(row, "000001,,,0e0,,1,0");
    }
}
