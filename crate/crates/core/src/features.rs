//! Regression observations from trades: extraction from the pre-trade book,
//! per-type normalization and the ten-minute intraday bucket.
//!
//! Gaps need one level beyond the last one used (`G_L = a_{L+1} - a_L`), so
//! extraction at `L` levels requires `L + 1` levels on each side.

use std::io::{BufRead, Write};

use chrono::{NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::classify::{stock_stats, StockStats, TradeRecord, TradeType};
use crate::error::{Error, Result};
use crate::flow::TickSize;

pub const BUCKETS: usize = 24;

/// Ten-minute bucket index within the continuous sessions: 0..=11 in the
/// morning, 12..=23 in the afternoon.
pub fn intraday_bucket(t: NaiveTime) -> Result<u8> {
    let secs = t.num_seconds_from_midnight();
    let am = 9 * 3600 + 30 * 60;
    let pm = 13 * 3600;
    let minutes = if (am..am + 7200).contains(&secs) {
        (secs - am) / 60
    } else if (pm..pm + 7200).contains(&secs) {
        120 + (secs - pm) / 60
    } else {
        return Err(Error::Invalid(format!("{t} is outside the continuous sessions")));
    };
    Ok((minutes / 10) as u8)
}

/// Units for the spread and gap regressors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMode {
    /// Spread and gaps divided by `a_1 + b_1`.
    #[default]
    Relative,
    /// Spread and gaps in currency units.
    Raw,
}

/// Unnormalized determinants of one trade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawObservation {
    pub kind: TradeType,
    pub r: f64,
    pub omega: u64,
    pub spread: f64,
    pub va: Vec<u64>,
    pub vb: Vec<u64>,
    pub ga: Vec<f64>,
    pub gb: Vec<f64>,
    pub bucket: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Skip {
    ThinBook,
    UndefinedReturn,
    OutsideSession,
}

/// Reads the determinants of `trade` from its pre-trade snapshot.
pub fn extract(
    trade: &TradeRecord,
    levels: usize,
    mode: NormMode,
    tick: TickSize,
) -> std::result::Result<RawObservation, Skip> {
    let pre = &trade.pre;
    let Some(ret) = trade.ret else {
        return Err(Skip::UndefinedReturn);
    };
    if pre.ask_levels() < levels + 1 || pre.bid_levels() < levels + 1 {
        return Err(Skip::ThinBook);
    }
    let bucket = intraday_bucket(trade.timestamp.time()).map_err(|_| Skip::OutsideSession)?;
    let quote_sum = pre.quote_sum().ok_or(Skip::ThinBook)? as f64;
    let unit = match mode {
        NormMode::Relative => 1.0 / quote_sum,
        NormMode::Raw => tick.to_f64(),
    };
    let scale = |ticks: i64| match mode {
        NormMode::Relative => ticks as f64 / quote_sum,
        NormMode::Raw => ticks as f64 * unit,
    };
    let range = 1..=levels;
    Ok(RawObservation {
        kind: trade.kind,
        r: ret.to_f64(),
        omega: trade.omega.0,
        spread: scale(pre.spread_ticks().ok_or(Skip::ThinBook)?),
        va: range.clone().map(|i| pre.ask_volume(i).unwrap().0).collect(),
        vb: range.clone().map(|i| pre.bid_volume(i).unwrap().0).collect(),
        ga: range.clone().map(|i| scale(pre.ask_gap(i).unwrap())).collect(),
        gb: range.map(|i| scale(pre.bid_gap(i).unwrap())).collect(),
        bucket,
    })
}

/// One normalized regression row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactObservation {
    pub instrument: String,
    pub kind: TradeType,
    /// `r / <r>` with the mean taken over the same instrument and type.
    pub r_norm: f64,
    /// `omega / <omega>`.
    pub omega_norm: f64,
    pub spread_rel: f64,
    /// Depth divided by `<omega>`.
    pub va: Vec<f64>,
    pub vb: Vec<f64>,
    /// Gap divided by `|<r>|`.
    pub ga: Vec<f64>,
    pub gb: Vec<f64>,
    pub bucket: u8,
}

impl ImpactObservation {
    pub fn levels(&self) -> usize {
        self.va.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractCounters {
    pub trades: usize,
    pub kept: usize,
    pub thin_book: usize,
    pub undefined_return: usize,
    pub outside_session: usize,
    /// Observations dropped because their type's mean return is zero.
    pub zero_mean_return: usize,
}

/// Divides each raw observation by its type's means from `stats`. Types
/// whose mean return is zero or absent are dropped, with a warning.
pub fn normalize(
    instrument: &str,
    raws: &[RawObservation],
    stats: &StockStats,
    warnings: &mut Vec<String>,
) -> Vec<ImpactObservation> {
    let mut warned = [false; 4];
    let mut out = Vec::with_capacity(raws.len());
    for raw in raws {
        let k = raw.kind;
        let (Some(mean_r), Some(mean_omega)) = (stats.mean_r(k), stats.mean_omega(k)) else {
            continue;
        };
        if mean_r == 0.0 {
            if !warned[k.index()] {
                warnings.push(format!("{instrument} {k}: mean return is zero, type excluded"));
                warned[k.index()] = true;
            }
            continue;
        }
        let abs_r = mean_r.abs();
        out.push(ImpactObservation {
            instrument: instrument.to_string(),
            kind: k,
            r_norm: raw.r / mean_r,
            omega_norm: raw.omega as f64 / mean_omega,
            spread_rel: raw.spread,
            va: raw.va.iter().map(|&v| v as f64 / mean_omega).collect(),
            vb: raw.vb.iter().map(|&v| v as f64 / mean_omega).collect(),
            ga: raw.ga.iter().map(|&g| g / abs_r).collect(),
            gb: raw.gb.iter().map(|&g| g / abs_r).collect(),
            bucket: raw.bucket,
        });
    }
    out
}

/// Everything extracted for one instrument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub instrument: String,
    pub levels: usize,
    pub mode: NormMode,
    /// Statistics of the trades that survived extraction; these are the
    /// normalizing means.
    pub stats: Option<StockStats>,
    pub counters: ExtractCounters,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub observations: Vec<ImpactObservation>,
}

impl FeatureSet {
    pub fn of_type(&self, kind: TradeType) -> Vec<ImpactObservation> {
        self.observations.iter().filter(|o| o.kind == kind).cloned().collect()
    }
}

/// Two-pass extraction: raw determinants, statistics over the kept trades,
/// then normalization.
pub fn extract_instrument(
    instrument: &str,
    trades: &[TradeRecord],
    levels: usize,
    mode: NormMode,
    tick: TickSize,
) -> FeatureSet {
    let mut counters = ExtractCounters {
        trades: trades.len(),
        ..Default::default()
    };
    let mut raws = Vec::new();
    let mut kept = Vec::new();
    for t in trades {
        match extract(t, levels, mode, tick) {
            Ok(raw) => {
                raws.push(raw);
                kept.push(t);
            }
            Err(Skip::ThinBook) => counters.thin_book += 1,
            Err(Skip::UndefinedReturn) => counters.undefined_return += 1,
            Err(Skip::OutsideSession) => counters.outside_session += 1,
        }
    }
    let mut warnings = Vec::new();
    let stats = stock_stats(instrument, kept.iter().copied()).ok();
    let observations = match &stats {
        Some(s) => normalize(instrument, &raws, s, &mut warnings),
        None => Vec::new(),
    };
    counters.zero_mean_return = raws.len() - observations.len();
    counters.kept = observations.len();
    FeatureSet {
        instrument: instrument.to_string(),
        levels,
        mode,
        stats,
        counters,
        warnings,
        observations,
    }
}

pub fn feature_csv_header(levels: usize) -> String {
    let mut cols = vec!["r_norm".to_string(), "omega_norm".into(), "spread_rel".into()];
    for prefix in ["VA", "VB", "GA", "GB"] {
        cols.extend((1..=levels).map(|i| format!("{prefix}{i}")));
    }
    cols.push("bucket".into());
    cols.join(",")
}

/// Writes one instrument-by-type feature file. Floats use the shortest
/// representation that reads back to the same bits.
pub fn write_feature_csv<W: Write>(mut w: W, obs: &[ImpactObservation], levels: usize) -> Result<()> {
    writeln!(w, "{}", feature_csv_header(levels))?;
    for o in obs {
        if o.levels() < levels {
            return Err(Error::Invalid(format!("observation has {} levels, need {levels}", o.levels())));
        }
        let mut line = format!("{},{},{}", o.r_norm, o.omega_norm, o.spread_rel);
        for v in [&o.va, &o.vb, &o.ga, &o.gb] {
            for x in &v[..levels] {
                line.push(',');
                line.push_str(&x.to_string());
            }
        }
        writeln!(w, "{line},{}", o.bucket)?;
    }
    Ok(())
}

/// Reads a feature file written by [`write_feature_csv`]. Lines starting
/// with `#` are skipped.
pub fn read_feature_csv<R: BufRead>(
    r: R,
    instrument: &str,
    kind: TradeType,
) -> Result<Vec<ImpactObservation>> {
    let mut lines = r
        .lines()
        .enumerate()
        .filter(|(_, l)| !matches!(l, Ok(s) if s.starts_with('#') || s.trim().is_empty()));
    let (_, header) = lines.next().ok_or_else(|| Error::Invalid("empty feature file".into()))?;
    let header = header?;
    let ncols = header.split(',').count();
    if ncols < 8 || (ncols - 4) % 4 != 0 {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected feature header {header:?}"),
        });
    }
    let levels = (ncols - 4) / 4;
    if header != feature_csv_header(levels) {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected feature header {header:?}"),
        });
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let err = |msg: String| Error::Parse { line: idx + 1, msg };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != ncols {
            return Err(err(format!("expected {ncols} fields, found {}", fields.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| err(format!("bad number {s:?}")))
        };
        let block = |k: usize| -> Result<Vec<f64>> {
            fields[3 + k * levels..3 + (k + 1) * levels].iter().map(|s| num(s)).collect()
        };
        let bucket: u8 = fields[ncols - 1]
            .parse()
            .map_err(|_| err(format!("bad bucket {:?}", fields[ncols - 1])))?;
        if bucket as usize >= BUCKETS {
            return Err(err(format!("bucket {bucket} out of range")));
        }
        out.push(ImpactObservation {
            instrument: instrument.to_string(),
            kind,
            r_norm: num(fields[0])?,
            omega_norm: num(fields[1])?,
            spread_rel: num(fields[2])?,
            va: block(0)?,
            vb: block(1)?,
            ga: block(2)?,
            gb: block(3)?,
            bucket,
        });
    }
    Ok(out)
}
