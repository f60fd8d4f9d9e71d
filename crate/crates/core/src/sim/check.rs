use serde::Serialize;

use super::{EventLog, Trajectory};
use crate::numerics::norm;

/// Result of checking `|e| <= phi(t - t_k) |x|` along a run.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorBoundReport {
    /// Samples with `t - t_k < 1/L_f`.
    pub checked: usize,
    pub violations: usize,
    /// `max (|e| - phi(t - t_k)|x|)` over checked samples.
    pub max_violation: f64,
}

const SLACK: f64 = 1e-7;

/// Checks the sample-and-hold error bound `|e(t)| <= phi(t - t_k)|x(t)|`,
/// `phi(tau) = L_f tau / (1 - L_f tau)`, on every sample within `1/L_f` of
/// its update.
pub fn check_error_bound(traj: &Trajectory, events: &EventLog, l_f: f64) -> ErrorBoundReport {
    let mut rep = ErrorBoundReport { checked: 0, violations: 0, max_violation: f64::NEG_INFINITY };
    for i in 0..traj.len() {
        let tk = events.trigger_times[traj.epochs[i]];
        let tau = traj.times[i] - tk;
        if !(tau >= 0.0 && l_f * tau < 1.0) {
            continue;
        }
        let phi = l_f * tau / (1.0 - l_f * tau);
        let gap = norm(&traj.errors[i]) - phi * norm(&traj.states[i]);
        rep.checked += 1;
        rep.max_violation = rep.max_violation.max(gap);
        if gap > SLACK {
            rep.violations += 1;
        }
    }
    rep
}
