//! Trade-level immediate price impact toolkit.
//!
//! The pipeline replays order flow through a price-time priority book
//! ([`lob`], [`flow`]), classifies each aggressive order into PB/PS/FB/FS and
//! measures its mid-quote return ([`classify`]), turns trades into normalized
//! regression rows ([`features`]) and calibrates the power-law and
//! logarithmic impact models by grid-scanned least squares ([`regression`]).
//! [`mechanics`] gives closed-form impact predictions used as oracles, and
//! [`synth`] generates fixtures, zero-intelligence flow and model data.

pub mod classify;
pub mod error;
pub mod features;
pub mod flow;
pub mod lob;
pub mod mechanics;
pub mod pipeline;
pub mod regression;
pub mod synth;

pub use classify::{classify, immediate_return, stock_stats, StockStats, TickReturn, TradeRecord, TradeType};
pub use error::{Error, Result};
pub use features::{extract_instrument, intraday_bucket, FeatureSet, ImpactObservation, NormMode};
pub use flow::{parse_event, replay, session_phase, Action, OrderEvent, Replayer, SessionPhase, TickSize, TickTable};
pub use lob::{BookSnapshot, OrderBook, OrderId, Price, Side, Volume};
pub use mechanics::{predict_buy, predict_sell, ps_fs_gap, MechanicalOutcome};
pub use regression::{grid_calibrate, ols_fit, CalibrationResult, ModelKind, ModelSpec};
