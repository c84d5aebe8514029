//! Joint UAV caching, content delivery, trajectory and transmit-power
//! control under a Lyapunov drift-plus-penalty scheme, with an analytic
//! peak-age-of-information model and a batch simulator.

// `!(x >= 0.0)` is the NaN-rejecting form throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod dpt2;
pub mod error;
pub mod harness;
pub mod lyapunov;
pub mod model;
pub mod paoi;
pub mod qoe;
pub mod solver;

pub use channel::{LinkGain, Position2D, RadioParams};
pub use error::{Error, Result};
pub use harness::{Algo, ExperimentConfig};
pub use lyapunov::{LyapunovParams, VirtualQueues};
pub use model::{BinaryMatrix, FleetState, NetworkConfig, UavLimits};
pub use qoe::QoeParams;
