//! Hybrid sample-and-hold simulation with event localization.

mod check;
mod csv;
mod engine;
mod field;
mod ode;

use std::sync::Arc;

use serde::Serialize;

pub use check::{check_error_bound, ErrorBoundReport};
pub use csv::{write_events_csv, write_trajectory_csv};
pub use engine::{locate_event, next_event_time, simulate, Snapshot, ZENO_GAP_TOLS, ZENO_SHORT_RUN};
pub use field::{FieldFn, HoldMap, VectorField};
pub use ode::rk4_step;

use crate::error::{EtcError, Result};
use crate::network::NetworkSystem;
use crate::nonlinear::{ScalarFn, Surrogate};
use crate::numerics::RealVector;

/// Everything the engine needs about the plant: the field, the certificate
/// `V`, the surrogate `g` and, for distributed policies, the network split.
#[derive(Clone, Debug)]
pub struct ClosedLoop {
    pub field: VectorField,
    pub lyapunov: LyapunovFn,
    pub surrogate: Surrogate,
    pub network: Option<Arc<NetworkSystem>>,
}

/// Debug-printable wrapper around the certificate evaluator.
#[derive(Clone)]
pub struct LyapunovFn(pub ScalarFn);

impl std::fmt::Debug for LyapunovFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("LyapunovFn")
    }
}

impl LyapunovFn {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

/// Integration and monitoring settings.
#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub step_h: f64,
    pub event_tol: f64,
    pub sample_stride: usize,
    pub seed: u64,
    pub max_events: usize,
    /// Divergence guard on `|x|`.
    pub divergence_bound: f64,
    /// When set, the run also tracks `max_t V(x(t)) - V(x0) exp(-rate t)`.
    pub reference_rate: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            horizon: 10.0,
            step_h: 1e-3,
            event_tol: 1e-9,
            sample_stride: 1,
            seed: 0,
            max_events: 1_000_000,
            divergence_bound: 1e12,
            reference_rate: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(EtcError::Validation(m));
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return bad(format!("sim.horizon must be positive, got {}", self.horizon));
        }
        if !(self.step_h > 0.0 && self.step_h < self.horizon) {
            return bad(format!("sim.step_h must lie in (0, horizon), got {}", self.step_h));
        }
        if !(self.event_tol > 0.0 && self.event_tol < self.step_h) {
            return bad(format!("sim.event_tol must lie in (0, step_h), got {}", self.event_tol));
        }
        if self.sample_stride == 0 {
            return bad("sim.sample_stride must be positive".into());
        }
        if self.max_events == 0 {
            return bad("sim.max_events must be positive".into());
        }
        if let Some(r) = self.reference_rate {
            if !(r.is_finite() && r > 0.0) {
                return bad(format!("sim.reference_rate must be positive, got {r}"));
            }
        }
        Ok(())
    }
}

/// Sampled run. Samples are taken every `sample_stride` steps and at every
/// event (pre-jump, so the hold error there is the one that triggered).
#[derive(Debug, Clone, Default, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<RealVector>,
    pub errors: Vec<RealVector>,
    pub v_values: Vec<f64>,
    pub s_values: Vec<f64>,
    /// `S - V`.
    pub residuals: Vec<f64>,
    /// Index into `EventLog::trigger_times` of the update in force.
    pub epochs: Vec<usize>,
    /// Co-integrated states (spec state, then consensus `a`, `z`).
    pub aux: Vec<RealVector>,
    /// `max (V - S)` over every integration step, not only samples.
    pub max_violation: f64,
    /// `max (V - V0 exp(-r t))` for `SimConfig::reference_rate`.
    pub max_reference_violation: Option<f64>,
    pub steps: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Update instants of a run; `trigger_times[0]` is the initial update.
#[derive(Debug, Clone, Default, Serialize)]
pub struct EventLog {
    pub trigger_times: Vec<f64>,
    pub inter_event_times: Vec<f64>,
    /// Smallest inter-event time, `None` if no event followed the initial update.
    pub empirical_miet: Option<f64>,
    /// Updates after the initial one.
    pub update_count: usize,
    /// Held value `y_k = H x(t_k)` per update.
    pub held: Vec<RealVector>,
}
