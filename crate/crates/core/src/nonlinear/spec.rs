use super::class_k::ClassK;
use crate::error::{EtcError, Result};

/// The performance barrier `S(t; x0)` a run must stay under.
#[derive(Clone, Debug)]
pub enum PerformanceSpec {
    /// `S(t) = V0 exp(-r t)`; `v0 = None` means `V(x0)`.
    Exponential { v0: Option<f64>, r: f64 },
    /// `S' = -h(S)`, `S(0) = s0` (default `V(x0)`), co-integrated with the plant.
    ClassKDerivative { h: ClassK, s0: Option<f64> },
    /// Online specification of the dynamic trigger: `S = eta + V` with
    /// `eta' = -iota(eta) - g`, firing when `theta g >= eta`.
    Online { theta: f64, iota: ClassK, eta0: Option<f64> },
}

/// Run-time quantities a spec value may depend on.
#[derive(Debug, Clone, Copy)]
pub struct SpecContext {
    /// `V(x0)`.
    pub v_x0: f64,
    /// Co-integrated state: `S` for class-K specs, `eta` for online specs.
    pub aux: f64,
    /// `V(x(t))`.
    pub v_now: f64,
}

impl PerformanceSpec {
    pub fn exponential(r: f64) -> Self {
        PerformanceSpec::Exponential { v0: None, r }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PerformanceSpec::Exponential { v0, r } => {
                if !(r.is_finite() && *r > 0.0) {
                    return Err(EtcError::Validation(format!("spec.r must be positive, got {r}")));
                }
                if let Some(v) = v0 {
                    if !(v.is_finite() && *v >= 0.0) {
                        return Err(EtcError::Validation(format!("spec.v0 must be nonnegative, got {v}")));
                    }
                }
                Ok(())
            }
            PerformanceSpec::ClassKDerivative { h, s0 } => {
                h.validate("spec.h")?;
                if let Some(s) = s0 {
                    if !(s.is_finite() && *s >= 0.0) {
                        return Err(EtcError::Validation(format!("spec.s0 must be nonnegative, got {s}")));
                    }
                }
                Ok(())
            }
            PerformanceSpec::Online { theta, iota, eta0 } => {
                if !(theta.is_finite() && *theta > 0.0) {
                    return Err(EtcError::Validation(format!("spec.theta must be positive, got {theta}")));
                }
                iota.validate("spec.iota")?;
                if let Some(e) = eta0 {
                    if !(e.is_finite() && *e >= 0.0) {
                        return Err(EtcError::Validation(format!("spec.eta0 must be nonnegative, got {e}")));
                    }
                }
                Ok(())
            }
        }
    }

    /// The decay term `h(V)` entering derivative and barrier triggers.
    pub fn decay(&self, v: f64) -> Option<f64> {
        match self {
            PerformanceSpec::Exponential { r, .. } => Some(r * v),
            PerformanceSpec::ClassKDerivative { h, .. } => Some(h.eval(v)),
            PerformanceSpec::Online { .. } => None,
        }
    }

    pub fn rate(&self) -> Option<f64> {
        match self {
            PerformanceSpec::Exponential { r, .. } => Some(*r),
            _ => None,
        }
    }

    pub(crate) fn has_aux(&self) -> bool {
        !matches!(self, PerformanceSpec::Exponential { .. })
    }

    /// Initial value of the co-integrated state.
    pub(crate) fn initial_aux(&self, v_x0: f64) -> f64 {
        match self {
            PerformanceSpec::Exponential { v0, .. } => v0.unwrap_or(v_x0),
            PerformanceSpec::ClassKDerivative { s0, .. } => s0.unwrap_or(v_x0),
            PerformanceSpec::Online { eta0, .. } => eta0.unwrap_or(v_x0),
        }
    }

    /// `V0` of an exponential spec.
    pub fn v0(&self, v_x0: f64) -> f64 {
        match self {
            PerformanceSpec::Exponential { v0, .. } => v0.unwrap_or(v_x0),
            _ => v_x0,
        }
    }
}

/// `S(t; x0)`.
pub fn spec_value(spec: &PerformanceSpec, t: f64, ctx: &SpecContext) -> f64 {
    match spec {
        PerformanceSpec::Exponential { v0, r } => v0.unwrap_or(ctx.v_x0) * (-r * t).exp(),
        PerformanceSpec::ClassKDerivative { .. } => ctx.aux,
        PerformanceSpec::Online { .. } => ctx.aux + ctx.v_now,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_at_zero() {
        let ctx = SpecContext { v_x0: 3.0, aux: 0.0, v_now: 3.0 };
        assert_eq!(spec_value(&PerformanceSpec::exponential(0.5), 0.0, &ctx), 3.0);
        let with_v0 = PerformanceSpec::Exponential { v0: Some(4.0), r: 0.5 };
        assert!((spec_value(&with_v0, 2.0, &ctx) - 4.0 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn online_adds_storage() {
        let spec = PerformanceSpec::Online { theta: 1.0, iota: ClassK::linear(1.0), eta0: None };
        let ctx = SpecContext { v_x0: 1.0, aux: 0.25, v_now: 0.5 };
        assert_eq!(spec_value(&spec, 1.0, &ctx), 0.75);
        assert!(spec.decay(1.0).is_none());
    }

    #[test]
    fn validation() {
        assert!(PerformanceSpec::exponential(-1.0).validate().is_err());
        assert!(PerformanceSpec::exponential(0.1).validate().is_ok());
    }
}
