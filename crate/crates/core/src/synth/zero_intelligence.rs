//! Zero-intelligence order flow: random limit orders, marketable orders
//! and cancellations during the continuous sessions.
//!
//! All draws are integers from a seeded ChaCha8 stream, so a seed gives the
//! same events on every platform. A shadow book tracks state; whenever a
//! side holds fewer than `min_levels` levels, the next event adds a level
//! behind its worst price.

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, NaiveTime, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{Action, OrderEvent, TickSize};
use crate::lob::{OrderBook, OrderId, Price, Side, Volume};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub seed: u64,
    pub instrument: String,
    pub tick: TickSize,
    pub start_date: NaiveDate,
    pub events: usize,
    /// Initial best bid in ticks; the initial ask sits one tick above.
    pub initial_bid: i64,
    /// Relative weights of passive limits, marketable orders and cancels.
    pub limit_weight: u32,
    pub marketable_weight: u32,
    pub cancel_weight: u32,
    /// Passive orders land up to this many ticks behind the opposite best.
    pub max_offset: i64,
    /// Marketable orders reach up to this many opposite levels.
    pub max_reach: usize,
    pub max_size: u64,
    pub min_levels: usize,
    /// Event spacing is uniform on `1..=max_gap_ms` milliseconds.
    pub max_gap_ms: i64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            seed: 1,
            instrument: "000001".into(),
            tick: TickSize::CENT,
            start_date: NaiveDate::from_ymd_opt(2003, 6, 2).expect("valid date"),
            events: 10_000,
            initial_bid: 1000,
            limit_weight: 50,
            marketable_weight: 20,
            cancel_weight: 30,
            max_offset: 12,
            max_reach: 3,
            max_size: 100,
            min_levels: 8,
            max_gap_ms: 3000,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.limit_weight == 0 || self.marketable_weight == 0 || self.cancel_weight == 0 {
            return Err(Error::Invalid("event weights must be positive".into()));
        }
        if self.max_offset < 1 || self.max_reach < 1 || self.max_size < 1 || self.max_gap_ms < 1 {
            return Err(Error::Invalid("offset, reach, size and gap bounds must be positive".into()));
        }
        if self.initial_bid <= (self.min_levels as i64 + 1) * 4 {
            return Err(Error::Invalid("initial bid too close to zero for the seeded book".into()));
        }
        Ok(())
    }
}

struct Clock {
    now: NaiveDateTime,
}

fn hm(h: u32, m: u32) -> NaiveTime {
    NaiveTime::from_hms_opt(h, m, 0).expect("valid time")
}

fn next_weekday(d: NaiveDate) -> NaiveDate {
    let mut d = d.succ_opt().expect("date in range");
    while matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
        d = d.succ_opt().expect("date in range");
    }
    d
}

impl Clock {
    /// Advances and reports whether a new trading day started.
    fn advance(&mut self, ms: i64) -> bool {
        let t = self.now + Duration::milliseconds(ms);
        if t.time() >= hm(11, 30) && t.time() < hm(13, 0) {
            let over = t - t.date().and_time(hm(11, 30));
            self.now = t.date().and_time(hm(13, 0)) + over;
            false
        } else if t.time() >= hm(15, 0) || t.date() != self.now.date() {
            self.now = next_weekday(self.now.date()).and_time(hm(9, 30));
            true
        } else {
            self.now = t;
            false
        }
    }
}

struct Generator<'a> {
    cfg: &'a FlowConfig,
    rng: ChaCha8Rng,
    book: OrderBook,
    clock: Clock,
    next_id: u64,
    seq: u64,
    out: Vec<OrderEvent>,
}

impl Generator<'_> {
    fn emit(&mut self, action: Action, id: u64) {
        self.seq += 1;
        self.out.push(OrderEvent {
            timestamp: self.clock.now,
            seq: self.seq,
            action,
            order_id: id.to_string(),
            instrument: self.cfg.instrument.clone(),
        });
    }

    fn submit(&mut self, side: Side, price: i64, size: u64) {
        let id = self.next_id;
        self.next_id += 1;
        self.book
            .apply_limit_order(side, Price(price), Volume(size), OrderId(id))
            .expect("generated orders are valid");
        self.emit(
            Action::Submit {
                side,
                price: Price(price),
                size: Volume(size),
            },
            id,
        );
    }

    fn size(&mut self) -> u64 {
        self.rng.random_range(1..=self.cfg.max_size)
    }

    fn side(&mut self) -> Side {
        if self.rng.random_bool(0.5) {
            Side::Buy
        } else {
            Side::Sell
        }
    }

    /// Adds a level behind the worst price of `side`, or seeds the side
    /// from the other one when it is empty.
    fn replenish(&mut self, side: Side) {
        let gap = self.rng.random_range(1..=3);
        let size = self.size();
        let worst = |book: &OrderBook, s: Side| -> Option<i64> {
            if book.level_count(s) == 0 {
                return None;
            }
            let snap = book.depth_snapshot(book.level_count(s));
            match s {
                Side::Buy => snap.bids.last().map(|l| l.price.0),
                Side::Sell => snap.asks.last().map(|l| l.price.0),
            }
        };
        let price = match (side, worst(&self.book, side)) {
            (Side::Buy, Some(p)) => p - gap,
            (Side::Sell, Some(p)) => p + gap,
            (Side::Buy, None) => self.book.best_ask().map_or(self.cfg.initial_bid, |a| a.0 - gap),
            (Side::Sell, None) => self.book.best_bid().map_or(self.cfg.initial_bid + 1, |b| b.0 + gap),
        };
        if price > 0 {
            self.submit(side, price, size);
        } else {
            let p = self.book.best_bid().map_or(self.cfg.initial_bid, |b| b.0);
            self.submit(Side::Sell, p + gap, size);
        }
    }

    fn seed_book(&mut self) {
        let bid = self.cfg.initial_bid;
        for i in 0..(self.cfg.min_levels as i64 + 2) {
            let size = self.size();
            self.submit(Side::Buy, bid - 2 * i, size);
            let size = self.size();
            self.submit(Side::Sell, bid + 1 + 2 * i, size);
        }
    }

    fn step(&mut self) {
        let min = self.cfg.min_levels;
        if self.book.level_count(Side::Buy) < min {
            return self.replenish(Side::Buy);
        }
        if self.book.level_count(Side::Sell) < min {
            return self.replenish(Side::Sell);
        }
        let total = self.cfg.limit_weight + self.cfg.marketable_weight + self.cfg.cancel_weight;
        let draw = self.rng.random_range(0..total);
        let side = self.side();
        let best_bid = self.book.best_bid().expect("two-sided").0;
        let best_ask = self.book.best_ask().expect("two-sided").0;
        if draw < self.cfg.limit_weight {
            let offset = self.rng.random_range(1..=self.cfg.max_offset);
            let price = match side {
                Side::Buy => best_ask - offset,
                Side::Sell => best_bid + offset,
            };
            let size = self.size();
            if price > 0 {
                self.submit(side, price, size);
            } else {
                self.submit(Side::Sell, best_bid + offset, size);
            }
        } else if draw < self.cfg.limit_weight + self.cfg.marketable_weight {
            let reach = self.rng.random_range(1..=self.cfg.max_reach);
            let snap = self.book.depth_snapshot(reach);
            let price = match side {
                Side::Buy => snap.asks.last().expect("two-sided").price.0,
                Side::Sell => snap.bids.last().expect("two-sided").price.0,
            };
            let size = self.rng.random_range(1..=2 * self.cfg.max_size);
            self.submit(side, price, size);
        } else {
            let ids = self.book.resting_ids(side);
            let id = ids[self.rng.random_range(0..ids.len())];
            self.book.apply_cancel(id);
            self.emit(Action::Cancel, id.0);
        }
    }

    fn run(mut self) -> Vec<OrderEvent> {
        self.seed_book();
        while self.out.len() < self.cfg.events {
            let gap = self.rng.random_range(1..=self.cfg.max_gap_ms);
            if self.clock.advance(gap) {
                // The replayer clears the book at the close; mirror that.
                self.book.clear();
                self.seed_book();
                continue;
            }
            self.step();
        }
        self.out.truncate(self.cfg.events);
        self.out
    }
}

/// Generates `cfg.events` events starting at 9:30 on `cfg.start_date`.
/// Trading days roll over at 15:00 with a freshly seeded book.
pub fn zero_intelligence_flow(cfg: &FlowConfig) -> Result<Vec<OrderEvent>> {
    cfg.validate()?;
    let gen = Generator {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        book: OrderBook::new(),
        clock: Clock {
            now: cfg.start_date.and_time(hm(9, 30)),
        },
        next_id: 1,
        seq: 0,
        out: Vec::with_capacity(cfg.events),
    };
    Ok(gen.run())
}
