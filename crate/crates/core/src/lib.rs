#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Energy trading between an information service provider and an energy
//! service provider in a wireless-powered backscatter network.

pub mod baselines;
pub mod error;
pub mod experiments;
pub mod game;
pub mod instances;
pub mod oracle;
pub mod radio;
pub mod scenario;
pub mod schemes;
pub mod solvers;
pub mod throughput;

pub use error::{Error, Result};
pub use game::{CostModel, Decision, GameOutcome, LeaderStrategy, Objective};
pub use radio::{Device, DeviceKind, RadioEnvironment};
pub use throughput::{Network, Schedule};
