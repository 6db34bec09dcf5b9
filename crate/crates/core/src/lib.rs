//! Bandit learning in two-sided many-to-one matching markets.
//!
//! The crate is `no_std` (it only needs `alloc`). It holds the ground-truth
//! market model, offline deferred-acceptance oracles, the stochastic round
//! engine and three online learning policies:
//!
//! * [`etda::Etda`]: explore-then-DA with index estimation and epoch-based
//!   exploration, for responsive markets with `N <= K * C_min`.
//! * [`aetda::Aetda`]: adaptively explore-then-DA, centralized or phased
//!   decentralized, for responsive markets with `N <= C`.
//! * [`oda::Oda`]: online deferred acceptance for substitutable markets.
//!
//! Runs are driven by [`sim::simulate`], which is fully determined by
//! `(spec, policy, seed)`.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod aetda;
pub mod choice;
pub mod da;
pub mod env;
pub mod error;
pub mod etda;
pub mod event;
pub mod market;
pub mod matching;
pub mod oda;
pub mod referee;
pub mod set;
pub mod sim;
pub mod stats;
#[cfg(test)]
mod testutil;

pub use choice::ChoiceFunction;
pub use error::{GateError, MarketError};
pub use market::{GapProfile, MarketSpec, Preconditions, RewardModel};
pub use matching::{Matching, StabilityViolation, StableSet};
pub use set::IndexSet;
pub use sim::{simulate, Policy, RunSummary};
pub use stats::LearnerStats;
