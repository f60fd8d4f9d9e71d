use thiserror::Error;

/// Errors raised by the analysis and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EtcError {
    #[error("{op}: dimension mismatch, expected {expected}, got {got}")]
    Dimension {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("theta = {theta} too small: c_alpha must be positive, need theta > {min_theta}")]
    ConstantPositivity { theta: f64, min_theta: f64 },

    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    Bracketing { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("quadrature did not reach tolerance {tol}; best estimate {estimate}")]
    Accuracy { estimate: f64, tol: f64 },

    #[error("argument {value} outside domain: {reason}")]
    Domain { value: f64, reason: String },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("no crossing found in search window [0, {window}]")]
    WindowExhausted {
        window: f64,
        /// Sampled (tau, value) pairs of the scanned curve.
        curve: Vec<(f64, f64)>,
    },

    #[error("bound not applicable: {0}")]
    Inapplicable(String),

    #[error("state diverged at t = {t} (|x| = {norm})")]
    Divergence { t: f64, norm: f64 },

    #[error("suspected Zeno behavior after {events} events at t = {t}; last inter-event times {tail:?}")]
    SuspectedZeno { events: usize, t: f64, tail: Vec<f64> },

    #[error("internal consistency: {0}")]
    Internal(String),
}

impl EtcError {
    /// True for failures of the numerics or of the simulated closed loop, as
    /// opposed to rejected inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            EtcError::Bracketing { .. }
                | EtcError::Accuracy { .. }
                | EtcError::WindowExhausted { .. }
                | EtcError::Divergence { .. }
                | EtcError::SuspectedZeno { .. }
                | EtcError::Internal(_)
                | EtcError::Infeasible(_)
        )
    }
}

pub type Result<T, E = EtcError> = std::result::Result<T, E>;
