use super::certificate::QuadConstants;
use crate::error::{EtcError, Result};
use crate::numerics::{first_root, quad};

/// `phi(tau) = L_f tau / (1 - L_f tau)`, bounding `|e| / |x|` a time `tau`
/// after an update.
pub fn phi(tau: f64, l_f: f64) -> Result<f64> {
    if !(tau >= 0.0 && l_f * tau < 1.0) {
        return Err(EtcError::Domain { value: tau, reason: format!("phi needs 0 <= tau < 1/L_f = {}", 1.0 / l_f) });
    }
    Ok(l_f * tau / (1.0 - l_f * tau))
}

/// Inverse of `phi`: the `tau` with `phi(tau) = s`.
fn phi_inv(s: f64, l_f: f64) -> f64 {
    s / (l_f * (1.0 + s))
}

/// `tau* = xi^{-1}(0)`.
pub fn tau_star(q: &QuadConstants, sigma: f64) -> f64 {
    phi_inv(((1.0 - sigma) * q.c_alpha / q.c_gamma).sqrt(), q.l_f)
}

/// `xi(tau) = ((sigma - 1) c_alpha + c_gamma phi(tau)^2) / c`, with `c = c2`
/// before `tau*` and `c = c1` from `tau*` on.
pub fn xi(tau: f64, q: &QuadConstants, sigma: f64) -> Result<f64> {
    let p = phi(tau, q.l_f)?;
    let num = (sigma - 1.0) * q.c_alpha + q.c_gamma * p * p;
    Ok(if tau < tau_star(q, sigma) { num / q.c2 } else { num / q.c1 })
}

fn check_sigma(q: &QuadConstants, sigma: f64, r: f64) -> Result<f64> {
    let rad = ((1.0 - sigma) * q.c_alpha - r) / q.c_gamma;
    if !(rad > 0.0) || !(sigma > 0.0 && sigma < 1.0) {
        return Err(EtcError::Parameter(format!(
            "need (1 - sigma) c_alpha > r: sigma = {sigma}, c_alpha = {}, r = {r}",
            q.c_alpha
        )));
    }
    Ok(rad)
}

/// Derivative-based MIET `tau^d = sqrt(R) / (L_f + L_f sqrt(R))`,
/// `R = ((1 - sigma) c_alpha - r) / c_gamma`.
pub fn miet_deriv_exp(q: &QuadConstants, sigma: f64, r: f64) -> Result<f64> {
    let rad = check_sigma(q, sigma, r)?;
    Ok(phi_inv(rad.sqrt(), q.l_f))
}

/// `int_0^tau xi(s) ds`, split at the jump of `xi` at `tau*`.
pub fn xi_integral(tau: f64, q: &QuadConstants, sigma: f64) -> Result<f64> {
    phi(tau, q.l_f)?;
    let ts = tau_star(q, sigma);
    let f = |s: f64| xi(s, q, sigma).unwrap_or(f64::NAN);
    if tau <= ts {
        quad(f, 0.0, tau, 1e-14)
    } else {
        Ok(quad(f, 0.0, ts, 1e-14)? + quad(f, ts, tau, 1e-14)?)
    }
}

/// `V(x_k) exp(int_0^dt xi)`, an upper bound on `V` along the inter-event flow.
pub fn gronwall_bound(q: &QuadConstants, sigma: f64, v_tk: f64, dt: f64) -> Result<f64> {
    Ok(v_tk * xi_integral(dt, q, sigma)?.exp())
}

/// `(xi + r) E - c_beta (exp(-r tau) - E)` with `E = exp(int_0^tau xi)`.
pub fn exp_barrier_condition(q: &QuadConstants, sigma: f64, r: f64, c_beta: f64, tau: f64) -> Result<f64> {
    let big_e = xi_integral(tau, q, sigma)?.exp();
    Ok((xi(tau, q, sigma)? + r) * big_e - c_beta * ((-r * tau).exp() - big_e))
}

/// Grid points used to localize the first root of the exponential condition.
pub const EXP_GRID_POINTS: usize = 2000;

/// Barrier MIET: the first `tau > 0` where the exponential condition holds
/// with equality. The scan covers `[0, 1/L_f)`.
pub fn miet_exp_barrier(q: &QuadConstants, sigma: f64, r: f64, c_beta: f64) -> Result<f64> {
    check_sigma(q, sigma, r)?;
    if !(c_beta > 0.0 && c_beta.is_finite()) {
        return Err(EtcError::Parameter(format!("c_beta must be positive, got {c_beta}")));
    }
    let hi = (1.0 - 1e-9) / q.l_f;
    let mut err = None;
    let mut f = |tau: f64| match exp_barrier_condition(q, sigma, r, c_beta, tau) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    };
    let res = first_root(&mut f, 0.0, hi, EXP_GRID_POINTS, 1e-13);
    if let Some(e) = err {
        return Err(e);
    }
    res
}

/// `D = L_{alpha^-1} L_gamma / (sigma* - sigma)`.
pub fn general_d(l_alpha_inv: f64, l_gamma: f64, sigma_star: f64, sigma: f64) -> Result<f64> {
    if !(sigma < sigma_star) {
        return Err(EtcError::Parameter(format!("need sigma < sigma*, got {sigma} >= {sigma_star}")));
    }
    Ok(l_alpha_inv * l_gamma / (sigma_star - sigma))
}

/// `1 / (L_f D + L_f)`.
pub fn miet_deriv_general_bound(l_f: f64, d: f64) -> Result<f64> {
    if !(l_f > 0.0 && d > 0.0) {
        return Err(EtcError::Parameter(format!("need L_f > 0 and D > 0, got {l_f}, {d}")));
    }
    Ok(1.0 / (l_f * d + l_f))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn testbed() -> QuadConstants {
        QuadConstants { c1: 0.5, c2: 0.5, c3: 1.0, c4: 5f64.sqrt(), c_alpha: 0.5, c_gamma: 2.0, l_f: 5f64.sqrt() }
    }

    #[test]
    fn phi_values() {
        let l = 5f64.sqrt();
        assert_eq!(phi(0.0, l).unwrap(), 0.0);
        assert!((phi(0.5 / l, l).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(phi(1.0 / l, l), Err(EtcError::Domain { .. })));
    }

    #[test]
    fn tau_d_closed_form() {
        let t = miet_deriv_exp(&testbed(), 0.25, 0.25).unwrap();
        assert!((t - 0.25 / (5f64.sqrt() * 1.25)).abs() < 1e-15);
        assert!(t <= tau_star(&testbed(), 0.25));
    }

    #[test]
    fn negative_radicand_rejected() {
        assert!(matches!(miet_deriv_exp(&testbed(), 0.6, 0.25), Err(EtcError::Parameter(_))));
    }

    #[test]
    fn xi_hits_minus_r_for_unit_c2() {
        let q = QuadConstants { c1: 1.0, c2: 1.0, ..testbed() };
        let td = miet_deriv_exp(&q, 0.25, 0.25).unwrap();
        assert!((xi(td, &q, 0.25).unwrap() + 0.25).abs() < 1e-12);
        assert!(xi(tau_star(&q, 0.25), &q, 0.25).unwrap().abs() < 1e-12);
    }

    #[test]
    fn barrier_miet_exceeds_derivative() {
        let q = testbed();
        let td = miet_deriv_exp(&q, 0.25, 0.25).unwrap();
        let te = miet_exp_barrier(&q, 0.25, 0.25, 1.0).unwrap();
        assert!(te > td, "{te} <= {td}");
        assert!(exp_barrier_condition(&q, 0.25, 0.25, 1.0, te).unwrap().abs() < 1e-9);
    }

    #[test]
    fn general_bound() {
        assert!((miet_deriv_general_bound(2.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(miet_deriv_general_bound(2.0, 1e12).unwrap() < 1e-12);
    }
}
