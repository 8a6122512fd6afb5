//! Busy-time scheduling on heterogeneous machines.
//!
//! Jobs are intervals with sizes; machine types trade capacity against cost
//! rate. The goal is to minimize total rate times busy time.

pub mod check;
pub mod error;
pub mod graph;
pub mod harness;
pub mod model;
pub mod offline;
pub mod oneshot;
pub mod online;
pub mod oracle;
pub mod rational;
pub mod schedule;

pub use error::{Error, Result};
pub use rational::Rat;
