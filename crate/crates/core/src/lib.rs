//! Piggyback mining laboratory.
//!
//! A block-level model of proof-of-work longest-chain mining with deviant
//! pools (selfish, lead-stubborn, undercutting) and a piggybacking pool that
//! secretly outruns the chain they slow down. The crate has three layers:
//!
//! - [`chain`]: append-only block tree with longest-public-chain fork choice.
//! - [`strategy`] and [`sim`]: pool state machines and a seeded
//!   discrete-event engine producing [`sim::SimReport`]s.
//! - [`analytic`]: closed-form progress rate, feasibility thresholds, the
//!   binomial overtake race, resilience and the revenue maximizer.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytic;
pub mod chain;
pub mod sim;
pub mod strategy;

pub use chain::{BlockId, BlockTree, ChainStats, PoolId, GENESIS};
pub use sim::{run_simulation, ScenarioConfig, SimReport, StopCondition};
pub use strategy::{PoolSpec, Strategy, StrategyKind};
