//! Order-flow files, the exchange session calendar, and book replay.
//!
//! The canonical file is UTF-8 CSV with header
//! `timestamp,seq,action,side,price,size,order_id,instrument`. Action is `S`
//! (submit) or `C` (cancel), side is `B` or `S`, and cancels may leave side,
//! price and size blank. Files ending in `.gz` are decompressed on the fly.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};

use crate::classify::{classify, immediate_return, TradeRecord};
use crate::error::{Error, Result};
use crate::lob::{CancelOutcome, OrderBook, OrderId, Price, Side, Volume};

pub const FLOW_CSV_HEADER: &str = "timestamp,seq,action,side,price,size,order_id,instrument";

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// Minimum price increment as an exact decimal: `mantissa * 10^-scale`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TickSize {
    mantissa: i64,
    scale: u32,
}

impl TickSize {
    pub const CENT: TickSize = TickSize {
        mantissa: 1,
        scale: 2,
    };

    pub fn to_f64(self) -> f64 {
        self.mantissa as f64 / 10f64.powi(self.scale as i32)
    }

    /// Converts a decimal price string to ticks; the price must lie on the
    /// tick grid.
    pub fn to_ticks(self, price: &str) -> std::result::Result<Price, String> {
        let (m, s) = parse_decimal(price)?;
        // price / tick = (m * 10^tick_scale) / (tick_mantissa * 10^s)
        let scale = |x: i128, e: u32| -> std::result::Result<i128, String> {
            10i128
                .checked_pow(e)
                .and_then(|p| x.checked_mul(p))
                .ok_or_else(|| format!("price {price:?} overflows"))
        };
        let num = scale(m, self.scale)?;
        let den = scale(self.mantissa as i128, s)?;
        if num % den != 0 {
            return Err(format!("price {price:?} is not a multiple of the tick {self}"));
        }
        let ticks = i64::try_from(num / den).map_err(|_| format!("price {price:?} overflows"))?;
        Ok(Price(ticks))
    }

    pub fn format(self, price: Price) -> String {
        let units = price.0 as i128 * self.mantissa as i128;
        if self.scale == 0 {
            return units.to_string();
        }
        let p = 10i128.pow(self.scale);
        let sign = if units < 0 { "-" } else { "" };
        let a = units.abs();
        format!(
            "{sign}{}.{:0width$}",
            a / p,
            a % p,
            width = self.scale as usize
        )
    }
}

impl Default for TickSize {
    fn default() -> Self {
        TickSize::CENT
    }
}

impl fmt::Display for TickSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format(Price(1)))
    }
}

impl FromStr for TickSize {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (m, scale) = parse_decimal(s).map_err(Error::Invalid)?;
        if m <= 0 {
            return Err(Error::Invalid(format!("tick size must be positive, got {s:?}")));
        }
        let mantissa = i64::try_from(m).map_err(|_| Error::Invalid(format!("tick {s:?} overflows")))?;
        Ok(TickSize { mantissa, scale })
    }
}

fn parse_decimal(s: &str) -> std::result::Result<(i128, u32), String> {
    let bad = || format!("invalid decimal {s:?}");
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) || frac.len() > 18 {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let m: i128 = digits.parse().map_err(|_| bad())?;
    Ok((if neg { -m } else { m }, frac.len() as u32))
}

/// Per-instrument tick sizes with a fallback.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TickTable {
    pub default: TickSize,
    pub overrides: HashMap<String, TickSize>,
}

impl TickTable {
    pub fn uniform(tick: TickSize) -> Self {
        TickTable {
            default: tick,
            overrides: HashMap::new(),
        }
    }

    pub fn get(&self, instrument: &str) -> TickSize {
        self.overrides.get(instrument).copied().unwrap_or(self.default)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Submit {
        side: Side,
        price: Price,
        size: Volume,
    },
    Cancel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderEvent {
    pub timestamp: NaiveDateTime,
    pub seq: u64,
    pub action: Action,
    pub order_id: String,
    pub instrument: String,
}

/// Parses one CSV record. `line` is only used in error messages.
pub fn parse_event(record: &str, line: usize, ticks: &TickTable) -> Result<OrderEvent> {
    let err = |msg: String| Error::Parse { line, msg };
    let fields: Vec<&str> = record.trim_end_matches(['\r', '\n']).split(',').collect();
    if fields.len() != 8 {
        return Err(err(format!("expected 8 fields, found {}", fields.len())));
    }
    let [ts, seq, action, side, price, size, order_id, instrument] = fields[..] else {
        unreachable!()
    };

    let timestamp = NaiveDateTime::parse_from_str(ts, TIMESTAMP_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(ts, "%Y-%m-%dT%H:%M:%S%.f"))
        .map_err(|e| err(format!("bad timestamp {ts:?}: {e}")))?;
    let seq: u64 = seq.parse().map_err(|_| err(format!("bad seq {seq:?}")))?;
    if order_id.is_empty() {
        return Err(err("empty order_id".into()));
    }
    if instrument.is_empty() {
        return Err(err("empty instrument".into()));
    }

    let action = match action {
        "S" => {
            let side = match side {
                "B" => Side::Buy,
                "S" => Side::Sell,
                other => return Err(err(format!("bad side {other:?}"))),
            };
            let price = ticks
                .get(instrument)
                .to_ticks(price)
                .map_err(err)?;
            if price.0 <= 0 {
                return Err(err(format!("price must be positive, got {price}")));
            }
            let size: u64 = size.parse().map_err(|_| err(format!("bad size {size:?}")))?;
            if size == 0 {
                return Err(err("size must be positive".into()));
            }
            Action::Submit {
                side,
                price,
                size: Volume(size),
            }
        }
        "C" => Action::Cancel,
        other => return Err(err(format!("bad action {other:?}"))),
    };

    Ok(OrderEvent {
        timestamp,
        seq,
        action,
        order_id: order_id.to_string(),
        instrument: instrument.to_string(),
    })
}

/// Streaming reader that checks the header and strictly increasing `seq`.
pub struct EventReader<R> {
    lines: std::io::Lines<R>,
    ticks: TickTable,
    line: usize,
    last_seq: Option<u64>,
}

impl<R: BufRead> EventReader<R> {
    pub fn new(reader: R, ticks: TickTable) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Parse {
                line: 1,
                msg: "empty file".into(),
            })?;
        if header.trim_end() != FLOW_CSV_HEADER {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unexpected header {header:?}"),
            });
        }
        Ok(EventReader {
            lines,
            ticks,
            line: 1,
            last_seq: None,
        })
    }
}

impl<R: BufRead> Iterator for EventReader<R> {
    type Item = Result<OrderEvent>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let raw = match self.lines.next()? {
                Ok(raw) => raw,
                Err(e) => return Some(Err(e.into())),
            };
            self.line += 1;
            if raw.trim().is_empty() {
                continue;
            }
            let ev = match parse_event(&raw, self.line, &self.ticks) {
                Ok(ev) => ev,
                Err(e) => return Some(Err(e)),
            };
            if let Some(prev) = self.last_seq {
                if ev.seq <= prev {
                    return Some(Err(Error::OutOfOrder {
                        line: self.line,
                        seq: ev.seq,
                        prev,
                    }));
                }
            }
            self.last_seq = Some(ev.seq);
            return Some(Ok(ev));
        }
    }
}

/// Opens a flow file, transparently gunzipping `*.gz`.
pub fn open_events(path: &Path, ticks: TickTable) -> Result<EventReader<Box<dyn BufRead>>> {
    let file = File::open(path)?;
    let reader: Box<dyn BufRead> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(BufReader::new(GzDecoder::new(file)))
    } else {
        Box::new(BufReader::new(file))
    };
    EventReader::new(reader, ticks)
}

pub fn read_events(path: &Path, ticks: TickTable) -> Result<Vec<OrderEvent>> {
    open_events(path, ticks)?.collect()
}

pub fn format_event(ev: &OrderEvent, tick: TickSize) -> String {
    let ts = ev.timestamp.format("%Y-%m-%dT%H:%M:%S%.f");
    match &ev.action {
        Action::Submit { side, price, size } => format!(
            "{ts},{},S,{},{},{},{},{}",
            ev.seq,
            match side {
                Side::Buy => "B",
                Side::Sell => "S",
            },
            tick.format(*price),
            size.0,
            ev.order_id,
            ev.instrument
        ),
        Action::Cancel => format!("{ts},{},C,,,,{},{}", ev.seq, ev.order_id, ev.instrument),
    }
}

pub fn write_events<W: Write>(mut w: W, events: &[OrderEvent], ticks: &TickTable) -> Result<()> {
    writeln!(w, "{FLOW_CSV_HEADER}")?;
    for ev in events {
        writeln!(w, "{}", format_event(ev, ticks.get(&ev.instrument)))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionPhase {
    CallAuction,
    Cooling,
    ContinuousAm,
    Freeze,
    ContinuousPm,
    Closed,
}

impl SessionPhase {
    pub fn is_continuous(self) -> bool {
        matches!(self, SessionPhase::ContinuousAm | SessionPhase::ContinuousPm)
    }
}

fn hm(h: u32, m: u32) -> NaiveTime {
    NaiveTime::from_hms_opt(h, m, 0).expect("valid clock time")
}

/// Exchange phase at a local clock time. Each boundary belongs to the phase
/// that starts there.
pub fn session_phase(t: NaiveTime) -> SessionPhase {
    if t < hm(9, 15) {
        SessionPhase::Closed
    } else if t < hm(9, 25) {
        SessionPhase::CallAuction
    } else if t < hm(9, 30) {
        SessionPhase::Cooling
    } else if t < hm(11, 30) {
        SessionPhase::ContinuousAm
    } else if t < hm(13, 0) {
        SessionPhase::Freeze
    } else if t < hm(15, 0) {
        SessionPhase::ContinuousPm
    } else {
        SessionPhase::Closed
    }
}

/// Replay counters; rejections are warnings, not failures.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayStats {
    pub events: usize,
    pub submits_applied: usize,
    pub cancels_applied: usize,
    pub cancel_noops: usize,
    pub rejected: usize,
    /// Submits and cancels held during the opening call and cooling periods.
    pub queued_pre_open: usize,
    /// Fills generated while inserting the pre-open queue; never reported as trades.
    pub pre_open_fills: usize,
    pub dropped_freeze: usize,
    pub dropped_closed: usize,
    pub trades: usize,
    pub undefined_returns: usize,
    pub days: usize,
}

/// Single-instrument replay state machine.
pub struct Replayer {
    instrument: String,
    depth: usize,
    book: OrderBook,
    live: HashMap<String, OrderId>,
    names: HashMap<OrderId, String>,
    next_id: u64,
    pending: Vec<OrderEvent>,
    day: Option<NaiveDate>,
    opened: bool,
    closed: bool,
    stats: ReplayStats,
    warnings: Vec<String>,
}

impl Replayer {
    /// `depth` is the number of levels captured in each snapshot.
    pub fn new(instrument: impl Into<String>, depth: usize) -> Self {
        Replayer {
            instrument: instrument.into(),
            depth,
            book: OrderBook::new(),
            live: HashMap::new(),
            names: HashMap::new(),
            next_id: 1,
            pending: Vec::new(),
            day: None,
            opened: false,
            closed: false,
            stats: ReplayStats::default(),
            warnings: Vec::new(),
        }
    }

    pub fn book(&self) -> &OrderBook {
        &self.book
    }

    pub fn stats(&self) -> &ReplayStats {
        &self.stats
    }

    /// Up to the first 100 rejection messages.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Feeds one event; returns a trade when a continuous-session submit
    /// executes.
    pub fn process(&mut self, ev: &OrderEvent) -> Result<Option<TradeRecord>> {
        if ev.instrument != self.instrument {
            return Err(Error::Invalid(format!(
                "event seq {} is for {}, replaying {}",
                ev.seq, ev.instrument, self.instrument
            )));
        }
        self.stats.events += 1;

        let date = ev.timestamp.date();
        if self.day != Some(date) {
            self.reset_day();
            self.day = Some(date);
            self.stats.days += 1;
        }

        match session_phase(ev.timestamp.time()) {
            SessionPhase::CallAuction | SessionPhase::Cooling => {
                self.pending.push(ev.clone());
                self.stats.queued_pre_open += 1;
                Ok(None)
            }
            SessionPhase::ContinuousAm | SessionPhase::ContinuousPm => {
                if !self.opened {
                    self.open();
                }
                Ok(self.apply(ev, true))
            }
            SessionPhase::Freeze => {
                self.stats.dropped_freeze += 1;
                Ok(None)
            }
            SessionPhase::Closed => {
                if ev.timestamp.time() >= hm(15, 0) && !self.closed {
                    // unexecuted orders are removed at the close
                    self.clear_book();
                    self.pending.clear();
                    self.closed = true;
                }
                self.stats.dropped_closed += 1;
                Ok(None)
            }
        }
    }

    fn reset_day(&mut self) {
        self.clear_book();
        self.pending.clear();
        self.opened = false;
        self.closed = false;
    }

    fn clear_book(&mut self) {
        self.book.clear();
        self.live.clear();
        self.names.clear();
    }

    fn open(&mut self) {
        self.opened = true;
        let queued = std::mem::take(&mut self.pending);
        for ev in &queued {
            self.apply(ev, false);
        }
    }

    fn warn(&mut self, msg: String) {
        self.stats.rejected += 1;
        if self.warnings.len() < 100 {
            self.warnings.push(msg);
        }
    }

    fn apply(&mut self, ev: &OrderEvent, emit: bool) -> Option<TradeRecord> {
        match ev.action {
            Action::Cancel => {
                let outcome = match self.live.remove(&ev.order_id) {
                    Some(id) => {
                        self.names.remove(&id);
                        self.book.apply_cancel(id)
                    }
                    None => CancelOutcome::NotFound,
                };
                match outcome {
                    CancelOutcome::Removed(_) => self.stats.cancels_applied += 1,
                    CancelOutcome::NotFound => self.stats.cancel_noops += 1,
                }
                None
            }
            Action::Submit { side, price, size } => {
                let id = match self.live.get(&ev.order_id) {
                    Some(&id) if self.book.contains(id) => id,
                    _ => {
                        let id = OrderId(self.next_id);
                        self.next_id += 1;
                        id
                    }
                };
                let crosses = match side {
                    Side::Buy => self.book.best_ask().is_some_and(|a| a <= price),
                    Side::Sell => self.book.best_bid().is_some_and(|b| b >= price),
                };
                let pre = (emit && crosses).then(|| self.book.depth_snapshot(self.depth));

                let outcome = match self.book.apply_limit_order(side, price, size, id) {
                    Ok(o) => o,
                    Err(e) => {
                        self.warn(format!("seq {}: {e}", ev.seq));
                        return None;
                    }
                };
                self.stats.submits_applied += 1;

                for ex in &outcome.executions {
                    if !self.book.contains(ex.resting_id) {
                        if let Some(name) = self.names.remove(&ex.resting_id) {
                            self.live.remove(&name);
                        }
                    }
                }
                if !outcome.remainder.is_zero() {
                    self.live.insert(ev.order_id.clone(), id);
                    self.names.insert(id, ev.order_id.clone());
                }

                if !outcome.traded() {
                    return None;
                }
                let Some(pre) = pre else {
                    self.stats.pre_open_fills += 1;
                    return None;
                };
                let post = self.book.depth_snapshot(self.depth);
                let ret = immediate_return(&pre, &post);
                self.stats.trades += 1;
                if ret.is_none() {
                    self.stats.undefined_returns += 1;
                }
                Some(TradeRecord {
                    instrument: ev.instrument.clone(),
                    timestamp: ev.timestamp,
                    seq: ev.seq,
                    kind: classify(side, outcome.remainder),
                    limit_price: price,
                    size,
                    omega: outcome.executed(),
                    remainder: outcome.remainder,
                    n_levels_eaten: outcome.levels_cleared,
                    ret,
                    pre,
                    post,
                })
            }
        }
    }
}

/// Replays one instrument's ordered events, capturing `depth` levels per
/// snapshot.
pub fn replay<'a, I>(instrument: &str, events: I, depth: usize) -> Result<(Vec<TradeRecord>, ReplayStats)>
where
    I: IntoIterator<Item = &'a OrderEvent>,
{
    let mut r = Replayer::new(instrument, depth);
    let mut trades = Vec::new();
    for ev in events {
        if let Some(t) = r.process(ev)? {
            trades.push(t);
        }
    }
    Ok((trades, r.stats.clone()))
}

/// Splits a multi-instrument stream into per-instrument streams, keeping
/// order. Instruments come back sorted by code.
pub fn split_by_instrument(events: Vec<OrderEvent>) -> Vec<(String, Vec<OrderEvent>)> {
    let mut map: std::collections::BTreeMap<String, Vec<OrderEvent>> = Default::default();
    for ev in events {
        map.entry(ev.instrument.clone()).or_default().push(ev);
    }
    map.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ticks() -> TickTable {
        TickTable::uniform(TickSize::CENT)
    }

    #[test]
    fn parses_submit() {
        let ev = parse_event(
            "2003-06-02T09:31:05,1042,S,B,9.99,500,ord-77,000001",
            2,
            &ticks(),
        )
        .unwrap();
        assert_eq!(ev.seq, 1042);
        assert_eq!(
            ev.action,
            Action::Submit {
                side: Side::Buy,
                price: Price(999),
                size: Volume(500)
            }
        );
        assert_eq!(ev.order_id, "ord-77");
        assert_eq!(ev.instrument, "000001");
    }

    #[test]
    fn zero_size_is_a_parse_error() {
        let e = parse_event("2003-06-02T09:31:05,1,S,B,9.99,0,x,000001", 7, &ticks()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 7, .. }), "{e}");
    }

    #[test]
    fn cancel_with_blank_fields() {
        let ev = parse_event("2003-06-02T09:31:05,5,C,,,,ord-1,000001", 3, &ticks()).unwrap();
        assert_eq!(ev.action, Action::Cancel);
    }

    #[test]
    fn malformed_fields() {
        for bad in [
            "2003-06-02T09:31:05,5,X,B,9.99,1,o,000001",
            "2003-06-02T09:31:05,5,S,Q,9.99,1,o,000001",
            "2003-06-02 09:31:05,5,S,B,9.99,1,o,000001",
            "2003-06-02T09:31:05,5,S,B,9.995,1,o,000001",
            "2003-06-02T09:31:05,5,S,B,abc,1,o,000001",
            "2003-06-02T09:31:05,5,S,B,9.99,1,,000001",
            "2003-06-02T09:31:05,5,S,B,9.99,1,o",
        ] {
            assert!(parse_event(bad, 1, &ticks()).is_err(), "{bad}");
        }
    }

    #[test]
    fn tick_round_trip() {
        let t: TickSize = "0.005".parse().unwrap();
        assert_eq!(t.to_ticks("9.975").unwrap(), Price(1995));
        assert_eq!(t.format(Price(1995)), "9.975");
        assert_eq!(TickSize::CENT.format(Price(1000)), "10.00");
        assert_eq!(TickSize::CENT.to_ticks("10").unwrap(), Price(1000));
        assert_eq!(t.to_string(), "0.005");
    }

    #[test]
    fn reader_rejects_out_of_order_seq() {
        let text = format!(
            "{FLOW_CSV_HEADER}\n\
             2003-06-02T09:31:05,2,S,B,9.99,1,a,X\n\
             2003-06-02T09:31:06,2,S,B,9.99,1,b,X\n"
        );
        let out: Vec<_> = EventReader::new(text.as_bytes(), ticks()).unwrap().collect();
        assert!(out[0].is_ok());
        assert!(matches!(out[1], Err(Error::OutOfOrder { line: 3, .. })));
    }

    #[test]
    fn reader_rejects_bad_header() {
        assert!(EventReader::new("a,b\n".as_bytes(), ticks()).is_err());
    }

    #[test]
    fn session_boundaries() {
        let t = |h, m, s| NaiveTime::from_hms_opt(h, m, s).unwrap();
        assert_eq!(session_phase(t(9, 20, 0)), SessionPhase::CallAuction);
        assert_eq!(session_phase(t(12, 0, 0)), SessionPhase::Freeze);
        assert_eq!(session_phase(t(14, 59, 59)), SessionPhase::ContinuousPm);
        assert_eq!(session_phase(t(9, 30, 0)), SessionPhase::ContinuousAm);
        assert_eq!(session_phase(t(9, 29, 59)), SessionPhase::Cooling);
        assert_eq!(session_phase(t(9, 25, 0)), SessionPhase::Cooling);
        assert_eq!(session_phase(t(9, 15, 0)), SessionPhase::CallAuction);
        assert_eq!(session_phase(t(9, 14, 59)), SessionPhase::Closed);
        assert_eq!(session_phase(t(11, 30, 0)), SessionPhase::Freeze);
        assert_eq!(session_phase(t(13, 0, 0)), SessionPhase::ContinuousPm);
        assert_eq!(session_phase(t(15, 0, 0)), SessionPhase::Closed);
    }

    fn ev(time: &str, seq: u64, action: Action, id: &str) -> OrderEvent {
        OrderEvent {
            timestamp: NaiveDateTime::parse_from_str(&format!("2003-06-02T{time}"), TIMESTAMP_FORMAT)
                .unwrap(),
            seq,
            action,
            order_id: id.into(),
            instrument: "X".into(),
        }
    }

    fn submit(side: Side, p: i64, v: u64) -> Action {
        Action::Submit {
            side,
            price: Price(p),
            size: Volume(v),
        }
    }

    #[test]
    fn pre_open_orders_enter_at_the_open_without_trades() {
        let events = vec![
            ev("09:16:00", 1, submit(Side::Buy, 100, 5), "b1"),
            ev("09:17:00", 2, submit(Side::Sell, 100, 2), "s1"),
            ev("09:26:00", 3, submit(Side::Sell, 102, 3), "s2"),
            ev("09:30:00", 4, submit(Side::Sell, 101, 1), "s3"),
        ];
        let mut r = Replayer::new("X", 5);
        let mut trades = vec![];
        for e in &events {
            trades.extend(r.process(e).unwrap());
        }
        assert!(trades.is_empty());
        assert_eq!(r.stats().queued_pre_open, 3);
        assert_eq!(r.stats().pre_open_fills, 1);
        assert_eq!(r.book().best_bid(), Some(Price(100)));
        assert_eq!(r.book().volume_at(Side::Buy, Price(100)), Volume(3));
        assert_eq!(r.book().best_ask(), Some(Price(101)));
    }

    #[test]
    fn freeze_events_leave_the_book_alone() {
        let events = vec![
            ev("09:31:00", 1, submit(Side::Buy, 100, 5), "b1"),
            ev("09:31:01", 2, submit(Side::Sell, 102, 5), "s1"),
        ];
        let mut r = Replayer::new("X", 5);
        for e in &events {
            r.process(e).unwrap();
        }
        let before = r.book().clone();
        let t = r
            .process(&ev("12:15:00", 3, submit(Side::Sell, 100, 1), "s2"))
            .unwrap();
        assert!(t.is_none());
        assert_eq!(r.book(), &before);
        assert_eq!(r.stats().dropped_freeze, 1);
    }

    #[test]
    fn close_clears_book_and_resting_submit_is_not_a_trade() {
        let mut r = Replayer::new("X", 5);
        assert!(r
            .process(&ev("10:00:00", 1, submit(Side::Buy, 100, 5), "b1"))
            .unwrap()
            .is_none());
        assert!(!r.book().is_empty());
        r.process(&ev("15:00:00", 2, Action::Cancel, "zz")).unwrap();
        assert!(r.book().is_empty());
    }

    #[test]
    fn cancel_of_filled_order_is_a_noop() {
        let events = vec![
            ev("10:00:00", 1, submit(Side::Buy, 100, 5), "b1"),
            ev("10:00:01", 2, submit(Side::Sell, 105, 5), "a1"),
            ev("10:00:02", 3, submit(Side::Sell, 100, 5), "s1"),
            ev("10:00:03", 4, Action::Cancel, "b1"),
        ];
        let (trades, stats) = replay("X", &events, 5).unwrap();
        assert_eq!(trades.len(), 1);
        assert_eq!(trades[0].ret, None);
        assert_eq!(stats.undefined_returns, 1);
        assert_eq!(stats.cancel_noops, 1);
    }

    #[test]
    fn duplicate_live_id_is_rejected_and_counted() {
        let events = vec![
            ev("10:00:00", 1, submit(Side::Buy, 100, 5), "b1"),
            ev("10:00:01", 2, submit(Side::Buy, 99, 5), "b1"),
        ];
        let mut r = Replayer::new("X", 5);
        for e in &events {
            r.process(e).unwrap();
        }
        assert_eq!(r.stats().rejected, 1);
        assert_eq!(r.warnings().len(), 1);
        assert_eq!(r.book().level_count(Side::Buy), 1);
    }

    #[test]
    fn wrong_instrument_is_an_error() {
        let mut e = ev("10:00:00", 1, Action::Cancel, "x");
        e.instrument = "Y".into();
        assert!(Replayer::new("X", 5).process(&e).is_err());
    }
}
