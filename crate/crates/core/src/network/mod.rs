//! Graphs, dynamic average consensus and distributed triggering.

mod consensus;
mod distributed;
mod system;
mod topology;

pub use consensus::{
    consensus_jump, dac_derivative, simulate_tracking, tracking_bound, tracking_error, ConsensusState, ExpReference,
    Reference, TrackingSample,
};
pub use distributed::{
    baseline_naive, baseline_time_reg, distributed_trigger_values, init_consensus, omega_constants,
    omega_star_on_grid, rho_advisor, w_x, w_xe, OmegaConstants, RhoBounds, OMEGA_GRID_POINTS,
};
pub use system::{AgentDecomposition, AgentRates, BlockQuadraticAgents, NetworkConstants, NetworkSystem};
pub use topology::NetworkTopology;
