//! Performance-barrier event-triggered control.
//!
//! Sample-and-hold closed loops are simulated as hybrid systems; an update
//! fires when a trigger condition built from an ISS certificate `V` crosses
//! zero. The performance-barrier trigger lets `V` rise toward a prescribed
//! bound `S(t)` instead of forcing it to decrease monotonically, which
//! spaces updates further apart. A distributed variant replaces the global
//! quantities by dynamic average consensus estimates.

pub mod error;
pub mod linear;
pub mod network;
pub mod nonlinear;
pub mod numerics;
pub mod platoon;
pub mod sim;

pub use error::{EtcError, Result};
pub use linear::{derive_constants, miet_linear, LinearBarrierParams, LinearPlant};
pub use network::{NetworkConstants, NetworkSystem, NetworkTopology};
pub use nonlinear::{Beta, ClassK, ConsensusInit, IssCertificate, PerformanceSpec, QuadConstants, Surrogate, TriggerPolicy};
pub use numerics::{RealMatrix, RealVector};
pub use platoon::{run_benchmark, BenchmarkReport, PlatoonConfig};
pub use sim::{simulate, ClosedLoop, EventLog, SimConfig, Trajectory};
