use super::certificate::IssCertificate;
use super::policy::Beta;
use super::spec::{spec_value, PerformanceSpec, SpecContext};
use crate::error::{EtcError, Result};

/// Storage variable of the dynamic trigger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicState {
    pub eta: f64,
}

fn decay(spec: &PerformanceSpec, v: f64) -> Result<f64> {
    spec.decay(v)
        .ok_or_else(|| EtcError::Validation("derivative and barrier triggers need an a-priori spec".into()))
}

/// `g(x, e) + h(V(x))` with the certificate's default surrogate.
pub fn trigger_value_deriv(cert: &IssCertificate, spec: &PerformanceSpec, sigma: f64, x: &[f64], e: &[f64]) -> Result<f64> {
    let v = (cert.v)(x);
    Ok(cert.surrogate().eval(sigma, x, e) + decay(spec, v)?)
}

/// `g(x, e) + h(V(x)) - beta(S(t) - V(x))`.
#[allow(clippy::too_many_arguments)]
pub fn trigger_value_barrier(
    cert: &IssCertificate,
    spec: &PerformanceSpec,
    sigma: f64,
    beta: &Beta,
    x: &[f64],
    e: &[f64],
    t: f64,
    ctx: &SpecContext,
) -> Result<f64> {
    let v = (cert.v)(x);
    let s = spec_value(spec, t, &SpecContext { v_now: v, ..*ctx });
    Ok(cert.surrogate().eval(sigma, x, e) + decay(spec, v)? - beta.eval(s - v))
}

/// `theta g - eta`.
pub fn trigger_value_dynamic(theta: f64, g_val: f64, state: DynamicState) -> f64 {
    theta * g_val - state.eta
}
