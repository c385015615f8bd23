//! Price-time priority limit order book.
//!
//! Prices are integer tick counts and volumes are integer share counts, so
//! every comparison in the matching path is exact. A market order is modeled
//! as a limit order priced at the opposite extreme.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Price in integer ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Price(pub i64);

impl Price {
    pub fn ticks(self) -> i64 {
        self.0
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}t", self.0)
    }
}

/// Share count.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Volume(pub u64);

impl Volume {
    pub const ZERO: Volume = Volume(0);

    pub fn units(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl std::ops::Add for Volume {
    type Output = Volume;
    fn add(self, rhs: Volume) -> Volume {
        Volume(self.0 + rhs.0)
    }
}

impl std::ops::AddAssign for Volume {
    fn add_assign(&mut self, rhs: Volume) {
        self.0 += rhs.0;
    }
}

impl std::ops::Sub for Volume {
    type Output = Volume;
    fn sub(self, rhs: Volume) -> Volume {
        Volume(self.0 - rhs.0)
    }
}

impl std::ops::SubAssign for Volume {
    fn sub_assign(&mut self, rhs: Volume) {
        self.0 -= rhs.0;
    }
}

impl std::iter::Sum for Volume {
    fn sum<I: Iterator<Item = Volume>>(iter: I) -> Volume {
        Volume(iter.map(|v| v.0).sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrderId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BookError {
    #[error("order id {0:?} already rests on the book")]
    DuplicateOrderId(OrderId),
    #[error("order {0:?} has zero size")]
    ZeroSize(OrderId),
    #[error("order {id:?} has non-positive price {price}")]
    NonPositivePrice { id: OrderId, price: Price },
}

/// One fill against a resting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Execution {
    pub price: Price,
    pub volume: Volume,
    pub resting_id: OrderId,
}

/// Result of matching one incoming limit order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OrderOutcome {
    pub executions: Vec<Execution>,
    /// Unexecuted quantity; when positive it now rests at the order's limit.
    pub remainder: Volume,
    /// Opposite-side price levels emptied by this order.
    pub levels_cleared: usize,
}

impl OrderOutcome {
    pub fn executed(&self) -> Volume {
        self.executions.iter().map(|e| e.volume).sum()
    }

    pub fn traded(&self) -> bool {
        !self.executions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CancelOutcome {
    Removed(Volume),
    NotFound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RestingOrder {
    id: OrderId,
    remaining: Volume,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct Level {
    queue: VecDeque<RestingOrder>,
    total: Volume,
}

/// Two-sided price ladder with a FIFO queue per level.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OrderBook {
    bids: BTreeMap<Price, Level>,
    asks: BTreeMap<Price, Level>,
    index: HashMap<OrderId, (Side, Price)>,
}

impl OrderBook {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a book with one resting order per level, ids assigned from
    /// `first_id` upward (bids first, best to worst, then asks).
    pub fn with_levels(bids: &[(i64, u64)], asks: &[(i64, u64)], first_id: u64) -> Self {
        let mut book = OrderBook::new();
        let mut id = first_id;
        for &(p, v) in bids {
            book.rest(Side::Buy, Price(p), Volume(v), OrderId(id));
            id += 1;
        }
        for &(p, v) in asks {
            book.rest(Side::Sell, Price(p), Volume(v), OrderId(id));
            id += 1;
        }
        book
    }

    pub fn best_bid(&self) -> Option<Price> {
        self.bids.keys().next_back().copied()
    }

    pub fn best_ask(&self) -> Option<Price> {
        self.asks.keys().next().copied()
    }

    pub fn contains(&self, id: OrderId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn order_count(&self) -> usize {
        self.index.len()
    }

    pub fn level_count(&self, side: Side) -> usize {
        match side {
            Side::Buy => self.bids.len(),
            Side::Sell => self.asks.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn clear(&mut self) {
        self.bids.clear();
        self.asks.clear();
        self.index.clear();
    }

    /// Resting volume at an exact price on one side.
    pub fn volume_at(&self, side: Side, price: Price) -> Volume {
        let ladder = match side {
            Side::Buy => &self.bids,
            Side::Sell => &self.asks,
        };
        ladder.get(&price).map_or(Volume::ZERO, |l| l.total)
    }

    /// Ids resting on `side` in matching priority order.
    pub fn resting_ids(&self, side: Side) -> Vec<OrderId> {
        let levels: Box<dyn Iterator<Item = &Level>> = match side {
            Side::Buy => Box::new(self.bids.values().rev()),
            Side::Sell => Box::new(self.asks.values()),
        };
        levels.flat_map(|l| l.queue.iter().map(|o| o.id)).collect()
    }

    /// Matches an incoming limit order against the opposite ladder and rests
    /// any remainder at `price`.
    pub fn apply_limit_order(
        &mut self,
        side: Side,
        price: Price,
        size: Volume,
        id: OrderId,
    ) -> Result<OrderOutcome, BookError> {
        if size.is_zero() {
            return Err(BookError::ZeroSize(id));
        }
        if price.0 <= 0 {
            return Err(BookError::NonPositivePrice { id, price });
        }
        if self.index.contains_key(&id) {
            return Err(BookError::DuplicateOrderId(id));
        }

        let mut outcome = OrderOutcome::default();
        let mut left = size;
        while !left.is_zero() {
            let best = match side {
                Side::Buy => self.asks.first_entry(),
                Side::Sell => self.bids.last_entry(),
            };
            let Some(mut entry) = best else { break };
            let level_price = *entry.key();
            let crosses = match side {
                Side::Buy => level_price <= price,
                Side::Sell => level_price >= price,
            };
            if !crosses {
                break;
            }

            let level = entry.get_mut();
            while !left.is_zero() {
                let Some(front) = level.queue.front_mut() else { break };
                let fill = Volume(front.remaining.0.min(left.0));
                front.remaining -= fill;
                level.total -= fill;
                left -= fill;
                outcome.executions.push(Execution {
                    price: level_price,
                    volume: fill,
                    resting_id: front.id,
                });
                if front.remaining.is_zero() {
                    let done = level.queue.pop_front().expect("front exists");
                    self.index.remove(&done.id);
                }
            }
            if level.queue.is_empty() {
                entry.remove();
                outcome.levels_cleared += 1;
            }
        }

        outcome.remainder = left;
        if !left.is_zero() {
            self.rest(side, price, left, id);
        }
        Ok(outcome)
    }

    pub fn apply_cancel(&mut self, id: OrderId) -> CancelOutcome {
        let Some((side, price)) = self.index.remove(&id) else {
            return CancelOutcome::NotFound;
        };
        let ladder = match side {
            Side::Buy => &mut self.bids,
            Side::Sell => &mut self.asks,
        };
        let level = ladder.get_mut(&price).expect("indexed order has a level");
        let pos = level
            .queue
            .iter()
            .position(|o| o.id == id)
            .expect("indexed order is queued");
        let removed = level.queue.remove(pos).expect("position is valid");
        level.total -= removed.remaining;
        if level.queue.is_empty() {
            ladder.remove(&price);
        }
        CancelOutcome::Removed(removed.remaining)
    }

    /// Top `depth` levels of each side, whatever the book holds.
    pub fn depth_snapshot(&self, depth: usize) -> BookSnapshot {
        let view = |(p, l): (&Price, &Level)| LevelView {
            price: *p,
            volume: l.total,
        };
        BookSnapshot {
            depth,
            asks: self.asks.iter().take(depth).map(view).collect(),
            bids: self.bids.iter().rev().take(depth).map(view).collect(),
        }
    }

    /// Top `depth` levels, or `None` when either side is empty.
    pub fn snapshot(&self, depth: usize) -> Option<BookSnapshot> {
        let snap = self.depth_snapshot(depth);
        snap.is_two_sided().then_some(snap)
    }

    /// Verifies ladder ordering, positive level volumes, index consistency and
    /// an uncrossed book.
    pub fn check_invariants(&self) -> Result<(), String> {
        if let (Some(b), Some(a)) = (self.best_bid(), self.best_ask()) {
            if b >= a {
                return Err(format!("crossed book: bid {b} >= ask {a}"));
            }
        }
        let mut seen = 0usize;
        for (side, ladder) in [(Side::Buy, &self.bids), (Side::Sell, &self.asks)] {
            for (price, level) in ladder {
                if level.queue.is_empty() || level.total.is_zero() {
                    return Err(format!("empty level at {price}"));
                }
                let sum: Volume = level.queue.iter().map(|o| o.remaining).sum();
                if sum != level.total {
                    return Err(format!("level total mismatch at {price}"));
                }
                for o in &level.queue {
                    if o.remaining.is_zero() {
                        return Err(format!("zero-volume order {:?}", o.id));
                    }
                    if self.index.get(&o.id) != Some(&(side, *price)) {
                        return Err(format!("index mismatch for {:?}", o.id));
                    }
                    seen += 1;
                }
            }
        }
        if seen != self.index.len() {
            return Err(format!("index holds {} ids, ladders {}", self.index.len(), seen));
        }
        Ok(())
    }

    fn rest(&mut self, side: Side, price: Price, volume: Volume, id: OrderId) {
        let ladder = match side {
            Side::Buy => &mut self.bids,
            Side::Sell => &mut self.asks,
        };
        let level = ladder.entry(price).or_default();
        level.queue.push_back(RestingOrder {
            id,
            remaining: volume,
        });
        level.total += volume;
        self.index.insert(id, (side, price));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelView {
    pub price: Price,
    pub volume: Volume,
}

/// Immutable top-of-book view. Sides hold fewer than `depth` levels when the
/// book is thin; missing levels are absent rather than padded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BookSnapshot {
    pub depth: usize,
    /// Best (lowest) first.
    pub asks: Vec<LevelView>,
    /// Best (highest) first.
    pub bids: Vec<LevelView>,
}

impl BookSnapshot {
    pub fn is_two_sided(&self) -> bool {
        !self.asks.is_empty() && !self.bids.is_empty()
    }

    pub fn ask_levels(&self) -> usize {
        self.asks.len()
    }

    pub fn bid_levels(&self) -> usize {
        self.bids.len()
    }

    /// `a_i`, 1-based.
    pub fn ask(&self, i: usize) -> Option<Price> {
        i.checked_sub(1).and_then(|k| self.asks.get(k)).map(|l| l.price)
    }

    /// `b_i`, 1-based.
    pub fn bid(&self, i: usize) -> Option<Price> {
        i.checked_sub(1).and_then(|k| self.bids.get(k)).map(|l| l.price)
    }

    pub fn ask_volume(&self, i: usize) -> Option<Volume> {
        i.checked_sub(1).and_then(|k| self.asks.get(k)).map(|l| l.volume)
    }

    pub fn bid_volume(&self, i: usize) -> Option<Volume> {
        i.checked_sub(1).and_then(|k| self.bids.get(k)).map(|l| l.volume)
    }

    /// `a_{i+1} - a_i` in ticks.
    pub fn ask_gap(&self, i: usize) -> Option<i64> {
        Some(self.ask(i + 1)?.0 - self.ask(i)?.0)
    }

    /// `b_i - b_{i+1}` in ticks.
    pub fn bid_gap(&self, i: usize) -> Option<i64> {
        Some(self.bid(i)?.0 - self.bid(i + 1)?.0)
    }

    /// True when the side was cut at `depth` and deeper levels may exist.
    pub fn asks_truncated(&self) -> bool {
        self.asks.len() == self.depth
    }

    pub fn bids_truncated(&self) -> bool {
        self.bids.len() == self.depth
    }

    /// `a_1 + b_1` in ticks, twice the mid-quote.
    pub fn quote_sum(&self) -> Option<i64> {
        Some(self.ask(1)?.0 + self.bid(1)?.0)
    }

    pub fn mid(&self) -> Option<f64> {
        self.quote_sum().map(|s| s as f64 / 2.0)
    }

    pub fn spread_ticks(&self) -> Option<i64> {
        Some(self.ask(1)?.0 - self.bid(1)?.0)
    }

    /// `(a_1 - b_1) / (a_1 + b_1)`.
    pub fn spread_rel(&self) -> Option<f64> {
        Some(self.spread_ticks()? as f64 / self.quote_sum()? as f64)
    }
}
