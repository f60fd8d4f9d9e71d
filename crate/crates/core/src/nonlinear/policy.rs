use super::class_k::ClassK;
use crate::error::{EtcError, Result};

/// Residual gain `beta(S - V)` of the barrier trigger.
#[derive(Clone, Debug)]
pub enum Beta {
    Linear(f64),
    ClassK(ClassK),
}

impl Beta {
    pub fn eval(&self, residual: f64) -> f64 {
        match self {
            Beta::Linear(c) => c * residual,
            Beta::ClassK(k) => k.eval(residual),
        }
    }
}

/// How the consensus estimates `a`, `z` are initialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ConsensusInit {
    /// `a(0) = z(0) = 1 W^x(x0) / N`.
    #[default]
    Average,
    /// `a_i(0) = z_i(0) = W^x_i(x0)`; only the sum is exact.
    Local,
}

/// Trigger rule deciding the next controller update.
#[derive(Clone, Debug)]
pub enum TriggerPolicy {
    /// `g(x, e) + h(V) >= 0`.
    DerivativeBased { sigma: f64 },
    /// `V >= S(t)`.
    FunctionBased,
    /// `g(x, e) + h(V) >= beta(S - V)`.
    PerformanceBarrier { sigma: f64, beta: Beta },
    /// `theta g(x, e) >= eta`; `theta`, `iota` come from the online spec.
    Dynamic { sigma: f64 },
    /// Per-agent `a_i >= c_beta V0 exp(-r t) / N`, with consensus-tracked `a`, `z`.
    DistributedPB { c_beta: f64, rho_a: f64, rho_z: f64, init: ConsensusInit },
    /// Per-agent partition of the derivative trigger.
    NaivePartitioned,
    /// Naive partition monitored only after a dwell time `tau_d`.
    TimeRegularized { tau_d: f64 },
}

impl TriggerPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            TriggerPolicy::DerivativeBased { .. } => "derivative",
            TriggerPolicy::FunctionBased => "function",
            TriggerPolicy::PerformanceBarrier { .. } => "barrier",
            TriggerPolicy::Dynamic { .. } => "dynamic",
            TriggerPolicy::DistributedPB { .. } => "distributed",
            TriggerPolicy::NaivePartitioned => "naive",
            TriggerPolicy::TimeRegularized { .. } => "time-regularized",
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self {
            TriggerPolicy::DerivativeBased { sigma }
            | TriggerPolicy::PerformanceBarrier { sigma, .. }
            | TriggerPolicy::Dynamic { sigma } => Some(*sigma),
            _ => None,
        }
    }

    pub fn is_distributed(&self) -> bool {
        matches!(
            self,
            TriggerPolicy::DistributedPB { .. } | TriggerPolicy::NaivePartitioned | TriggerPolicy::TimeRegularized { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(EtcError::Validation(m));
        if let Some(s) = self.sigma() {
            if !(s > 0.0 && s < 1.0) {
                return bad(format!("policy.sigma must lie in (0, 1), got {s}"));
            }
        }
        match self {
            TriggerPolicy::PerformanceBarrier { beta: Beta::Linear(c), .. } if !(*c >= 0.0 && c.is_finite()) => {
                bad(format!("policy.c_beta must be nonnegative, got {c}"))
            }
            TriggerPolicy::PerformanceBarrier { beta: Beta::ClassK(k), .. } => k.validate("policy.beta"),
            TriggerPolicy::DistributedPB { c_beta, rho_a, rho_z, .. } => {
                if !(*c_beta > 0.0 && c_beta.is_finite()) {
                    return bad(format!("policy.c_beta must be positive, got {c_beta}"));
                }
                if !(*rho_a > 0.0 && *rho_z > 0.0) {
                    return bad(format!("policy.rho_a and policy.rho_z must be positive, got {rho_a}, {rho_z}"));
                }
                Ok(())
            }
            TriggerPolicy::TimeRegularized { tau_d } if !(*tau_d >= 0.0 && tau_d.is_finite()) => {
                bad(format!("policy.tau_d must be nonnegative, got {tau_d}"))
            }
            _ => Ok(()),
        }
    }
}
