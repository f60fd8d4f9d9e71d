//! Linear plants `x' = A x + B K (x + e)`: Lyapunov/Young constants, the
//! three linear triggers and the matrix MIET condition.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{EtcError, Result};
use crate::nonlinear::{IssCertificate, QuadConstants, Surrogate};
use crate::numerics::{eig_sym, first_root, lambda_min, mat_exp, norm_sq, solve_lyapunov, RealMatrix};
use crate::sim::{ClosedLoop, HoldMap, LyapunovFn, Trajectory, VectorField};

/// Linear plant with its quadratic ISS certificate `V = x^T P x`.
#[derive(Debug, Clone, Serialize)]
pub struct LinearPlant {
    pub a: RealMatrix,
    pub b: RealMatrix,
    pub k: RealMatrix,
    pub bk: RealMatrix,
    pub a_cl: RealMatrix,
    pub p: RealMatrix,
    pub q: RealMatrix,
    pub theta: f64,
    pub c_alpha: f64,
    pub c_gamma: f64,
    /// `|P B K|`.
    pub pbk_norm: f64,
    /// `|P|`.
    pub p_norm: f64,
}

/// Floor applied to `c_gamma` when `P B K = 0`.
pub const C_GAMMA_FLOOR: f64 = 1e-12;

/// Solves the closed-loop Lyapunov equation and applies Young's inequality
/// to `2 x^T P B K e`. `theta = None` selects `2|PBK| / lambda_min(Q)`,
/// which gives `c_alpha = lambda_min(Q) / 2`.
pub fn derive_constants(
    a: &RealMatrix,
    b: &RealMatrix,
    k: &RealMatrix,
    q: &RealMatrix,
    theta: Option<f64>,
) -> Result<LinearPlant> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n || k.cols() != n || k.rows() != b.cols() || q.rows() != n {
        return Err(EtcError::Dimension {
            op: "derive_constants",
            expected: format!("A {n}x{n}, B {n}xm, K mx{n}, Q {n}x{n}"),
            got: format!(
                "A {}x{}, B {}x{}, K {}x{}, Q {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols(),
                k.rows(),
                k.cols(),
                q.rows(),
                q.cols()
            ),
        });
    }
    let bk = b.matmul(k)?;
    let a_cl = a + &bk;
    let p = solve_lyapunov(&a_cl, q)?;
    let pbk_norm = p.matmul(&bk)?.norm_2();
    let lq = lambda_min(q)?;
    let min_theta = pbk_norm / lq;
    let theta = match theta {
        Some(t) if !(t.is_finite() && t > 0.0) => {
            return Err(EtcError::Validation(format!("theta must be positive, got {t}")));
        }
        Some(t) => t,
        None if pbk_norm > 0.0 => 2.0 * min_theta,
        None => 1.0,
    };
    if theta <= min_theta {
        return Err(EtcError::ConstantPositivity { theta, min_theta });
    }
    let c_alpha = lq - pbk_norm / theta;
    let c_gamma = (theta * pbk_norm).max(C_GAMMA_FLOOR);
    let p_norm = p.norm_2();
    Ok(LinearPlant { a: a.clone(), b: b.clone(), k: k.clone(), bk, a_cl, p, q: q.clone(), theta, c_alpha, c_gamma, pbk_norm, p_norm })
}

/// Rate, margin and residual gain of the linear barrier design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearBarrierParams {
    pub r: f64,
    pub sigma: f64,
    pub c_beta: f64,
}

impl LinearBarrierParams {
    pub fn validate(&self, plant: &LinearPlant) -> Result<()> {
        let r_max = plant.c_alpha / plant.p_norm;
        if !(self.r > 0.0 && self.r < r_max) {
            return Err(EtcError::Validation(format!(
                "r must lie in (0, c_alpha/|P|) = (0, {r_max}), got {}",
                self.r
            )));
        }
        let s_max = 1.0 - self.r * plant.p_norm / plant.c_alpha;
        if !(self.sigma > 0.0 && self.sigma < s_max) {
            return Err(EtcError::Validation(format!(
                "sigma must lie in (0, 1 - r|P|/c_alpha) = (0, {s_max}), got {}",
                self.sigma
            )));
        }
        if !(self.c_beta >= 0.0 && self.c_beta.is_finite()) {
            return Err(EtcError::Validation(format!("c_beta must be nonnegative, got {}", self.c_beta)));
        }
        Ok(())
    }
}

impl LinearPlant {
    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn v(&self, x: &[f64]) -> f64 {
        self.p.quad_form(x)
    }

    /// Joint Lipschitz constant of `(x, e) -> (A + BK) x + BK e`.
    pub fn lipschitz(&self) -> f64 {
        let n = self.dim();
        let mut m = RealMatrix::zeros(n, 2 * n);
        m.set_block(0, 0, &self.a_cl);
        m.set_block(0, n, &self.bk);
        m.norm_2()
    }

    pub fn quad_constants(&self) -> Result<QuadConstants> {
        let ev = eig_sym(&self.p)?;
        Ok(QuadConstants {
            c1: ev[0],
            c2: ev[ev.len() - 1],
            c3: 2.0 * self.p_norm,
            c4: self.lipschitz(),
            c_alpha: self.c_alpha,
            c_gamma: self.c_gamma,
            l_f: self.lipschitz(),
        })
    }

    pub fn certificate(&self) -> Result<IssCertificate> {
        Ok(IssCertificate::quadratic(self.p.clone(), self.quad_constants()?))
    }

    /// Quadratic upper surrogate, the default.
    pub fn surrogate(&self) -> Surrogate {
        Surrogate::Quadratic { c_alpha: self.c_alpha, c_gamma: self.c_gamma }
    }

    /// Exact Lie derivative `-x^T Q x + 2 x^T P B K e`, usable as a surrogate.
    pub fn lie_derivative(&self) -> Surrogate {
        let q = self.q.clone();
        let pbk = self.p.matmul(&self.bk).expect("square");
        Surrogate::Custom(Arc::new(move |x, e| {
            let pe = pbk.mul_vec(e);
            -q.quad_form(x) + 2.0 * x.iter().zip(&pe).map(|(a, b)| a * b).sum::<f64>()
        }))
    }

    pub fn field(&self) -> Result<VectorField> {
        let a_cl = self.a_cl.clone();
        let bk = self.bk.clone();
        let n = self.dim();
        VectorField::new(
            n,
            HoldMap::Identity,
            self.lipschitz().max(f64::MIN_POSITIVE),
            Arc::new(move |x, e, out| {
                a_cl.mul_vec_into(x, out);
                for i in 0..n {
                    out[i] += bk.row(i).iter().zip(e).map(|(a, b)| a * b).sum::<f64>();
                }
            }),
        )
    }

    /// Sample-and-hold closed loop with the quadratic surrogate.
    pub fn closed_loop(&self) -> Result<ClosedLoop> {
        let p = self.p.clone();
        Ok(ClosedLoop {
            field: self.field()?,
            lyapunov: LyapunovFn(Arc::new(move |x| p.quad_form(x))),
            surrogate: self.surrogate(),
            network: None,
        })
    }
}

/// `(sigma - 1) c_alpha |x|^2 + c_gamma |e|^2`.
pub fn g_linear(plant: &LinearPlant, sigma: f64, x: &[f64], e: &[f64]) -> f64 {
    (sigma - 1.0) * plant.c_alpha * norm_sq(x) + plant.c_gamma * norm_sq(e)
}

/// Derivative-based condition `g + r V`.
pub fn trigger_value_deriv_lin(plant: &LinearPlant, params: &LinearBarrierParams, x: &[f64], e: &[f64]) -> f64 {
    g_linear(plant, params.sigma, x, e) + params.r * plant.v(x)
}

/// Function-based condition `V(x) - V0 exp(-r t)`.
pub fn trigger_value_func_lin(plant: &LinearPlant, v0: f64, r: f64, t: f64, x: &[f64]) -> f64 {
    plant.v(x) - v0 * (-r * t).exp()
}

/// Barrier condition `g + r V - c_beta (V0 exp(-r t) - V)`.
pub fn trigger_value_barrier_lin(
    plant: &LinearPlant,
    params: &LinearBarrierParams,
    x: &[f64],
    e: &[f64],
    t: f64,
    v0: f64,
) -> f64 {
    let v = plant.v(x);
    trigger_value_deriv_lin(plant, params, x, e) - params.c_beta * (v0 * (-params.r * t).exp() - v)
}

/// `G(tau) = exp(A tau) + (int_0^tau exp(A s) ds) B K`, the map `x_k -> x(t_k + tau)`.
pub fn g_of_tau(plant: &LinearPlant, tau: f64) -> Result<RealMatrix> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(EtcError::Domain { value: tau, reason: "tau must be finite and nonnegative".into() });
    }
    let n = plant.dim();
    let ea = mat_exp(&plant.a, tau)?;
    let integral = match plant.a.inverse() {
        Ok(inv) if plant.a.norm_1() * inv.norm_1() < 1e8 => inv.matmul(&(&ea - &RealMatrix::identity(n)))?,
        _ => {
            // exp([[A, I], [0, 0]] tau) carries int_0^tau exp(A s) ds in its
            // top-right block.
            let mut aug = RealMatrix::zeros(2 * n, 2 * n);
            aug.set_block(0, 0, &plant.a);
            aug.set_block(0, n, &RealMatrix::identity(n));
            mat_exp(&aug, tau)?.block(0, n, n, n)
        }
    };
    Ok(&ea + &integral.matmul(&plant.bk)?)
}

/// `M(tau) = c_beta P e^{-r tau} - c_gamma |I - G|^2 I - G^T((c_beta + r) P + (sigma - 1) c_alpha I) G`.
pub fn m_of_tau(plant: &LinearPlant, params: &LinearBarrierParams, tau: f64) -> Result<RealMatrix> {
    let n = plant.dim();
    let g = g_of_tau(plant, tau)?;
    let eye = RealMatrix::identity(n);
    let ig = (&eye - &g).norm_2();
    let inner = &plant.p.scale(params.c_beta + params.r) + &eye.scale((params.sigma - 1.0) * plant.c_alpha);
    let quad = g.transpose().matmul(&inner)?.matmul(&g)?;
    let m = &(&plant.p.scale(params.c_beta * (-params.r * tau).exp()) - &eye.scale(plant.c_gamma * ig * ig)) - &quad;
    Ok(m.symmetrize())
}

/// Grid points of the first-crossing scan.
pub const MIET_GRID_POINTS: usize = 2000;

/// Default search window `[0, 10 / L_f]`.
pub fn miet_window(plant: &LinearPlant) -> f64 {
    10.0 / plant.lipschitz().max(f64::MIN_POSITIVE)
}

/// `lambda_min(M(tau))` on `points + 1` nodes of `[0, window]`.
pub fn lambda_min_curve(plant: &LinearPlant, params: &LinearBarrierParams, window: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    (0..=points)
        .map(|i| {
            let tau = window * i as f64 / points as f64;
            Ok((tau, lambda_min(&m_of_tau(plant, params, tau)?)?))
        })
        .collect()
}

/// `min { tau > 0 : M(tau) singular }`, located as the first zero of
/// `lambda_min(M(tau))`.
pub fn miet_linear(plant: &LinearPlant, params: &LinearBarrierParams) -> Result<f64> {
    params.validate(plant)?;
    miet_linear_in(plant, params, miet_window(plant))
}

pub fn miet_linear_in(plant: &LinearPlant, params: &LinearBarrierParams, window: f64) -> Result<f64> {
    let mut err = None;
    let mut f = |tau: f64| match m_of_tau(plant, params, tau).and_then(|m| lambda_min(&m)) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    };
    let m0 = f(0.0);
    if !(m0 > 0.0) {
        return Err(EtcError::Parameter(format!("M(0) is not positive definite (lambda_min = {m0})")));
    }
    let res = first_root(&mut f, 0.0, window, MIET_GRID_POINTS, 1e-12);
    if let Some(e) = err {
        return Err(e);
    }
    res
}

/// Derivative-based MIET: the same search with the barrier term removed.
pub fn miet_linear_derivative(plant: &LinearPlant, params: &LinearBarrierParams) -> Result<f64> {
    miet_linear(plant, &LinearBarrierParams { c_beta: 0.0, ..*params })
}

/// `max_t V(x(t)) - V0 exp(-r t)` over the samples of a run.
pub fn exp_decay_check(traj: &Trajectory, v0: f64, r: f64) -> f64 {
    traj.times
        .iter()
        .zip(&traj.v_values)
        .map(|(t, v)| v - v0 * (-r * t).exp())
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar() -> LinearPlant {
        derive_constants(
            &RealMatrix::scalar(1.0),
            &RealMatrix::scalar(1.0),
            &RealMatrix::scalar(-2.0),
            &RealMatrix::scalar(1.0),
            Some(2.0),
        )
        .unwrap()
    }

    const PARAMS: LinearBarrierParams = LinearBarrierParams { r: 0.25, sigma: 0.25, c_beta: 1.0 };

    #[test]
    fn scalar_constants() {
        let p = scalar();
        assert!((p.p[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((p.pbk_norm - 1.0).abs() < 1e-15);
        assert!((p.c_alpha - 0.5).abs() < 1e-15);
        assert!((p.c_gamma - 2.0).abs() < 1e-15);
        assert!((p.lipschitz() - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn default_theta_halves_margin() {
        let d = derive_constants(
            &RealMatrix::scalar(1.0),
            &RealMatrix::scalar(1.0),
            &RealMatrix::scalar(-2.0),
            &RealMatrix::scalar(1.0),
            None,
        )
        .unwrap();
        assert_eq!(d.theta, 2.0);
    }

    #[test]
    fn small_theta_names_minimum() {
        let err = derive_constants(
            &RealMatrix::scalar(1.0),
            &RealMatrix::scalar(1.0),
            &RealMatrix::scalar(-2.0),
            &RealMatrix::scalar(1.0),
            Some(0.5),
        )
        .unwrap_err();
        assert_eq!(err, EtcError::ConstantPositivity { theta: 0.5, min_theta: 1.0 });
    }

    #[test]
    fn unstable_loop_infeasible() {
        let err = derive_constants(
            &RealMatrix::scalar(1.0),
            &RealMatrix::scalar(1.0),
            &RealMatrix::scalar(0.5),
            &RealMatrix::scalar(1.0),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, EtcError::Infeasible(_)));
    }

    #[test]
    fn zero_gain_floors_c_gamma() {
        let eye = RealMatrix::identity(2);
        let p = derive_constants(&eye.scale(-1.0), &eye, &RealMatrix::zeros(2, 2), &eye, Some(3.0)).unwrap();
        assert_eq!(p.pbk_norm, 0.0);
        assert!((p.c_alpha - 1.0).abs() < 1e-15);
        assert_eq!(p.c_gamma, C_GAMMA_FLOOR);
    }

    #[test]
    fn surrogate_values() {
        let p = scalar();
        assert_eq!(g_linear(&p, 0.25, &[0.0], &[0.0]), 0.0);
        assert!((g_linear(&p, 0.25, &[1.0], &[0.0]) + 0.375).abs() < 1e-15);
        assert!((g_linear(&p, 0.25, &[1.0], &[0.5]) - 0.125).abs() < 1e-15);
        assert!((trigger_value_deriv_lin(&p, &PARAMS, &[1.0], &[0.0]) + 0.25).abs() < 1e-15);
        let e = (0.125f64).sqrt();
        assert!(trigger_value_deriv_lin(&p, &PARAMS, &[1.0], &[e]).abs() < 1e-15);
    }

    #[test]
    fn barrier_with_zero_residual_is_derivative() {
        let p = scalar();
        let x = [0.8];
        let v0 = p.v(&x) * (0.25f64 * 2.0).exp();
        let b = trigger_value_barrier_lin(&p, &PARAMS, &x, &[0.1], 2.0, v0);
        let d = trigger_value_deriv_lin(&p, &PARAMS, &x, &[0.1]);
        assert!((b - d).abs() < 1e-14);
    }

    #[test]
    fn g_scalar_closed_form() {
        let p = scalar();
        assert!((g_of_tau(&p, 0.0).unwrap()[(0, 0)] - 1.0).abs() < 1e-15);
        let g = g_of_tau(&p, 0.1).unwrap()[(0, 0)];
        assert!((g - (2.0 - 0.1f64.exp())).abs() < 1e-14);
    }

    #[test]
    fn g_singular_a_uses_augmented_route() {
        // A = 0: G(tau) = I + tau B K.
        let p = derive_constants(
            &RealMatrix::scalar(0.0),
            &RealMatrix::scalar(1.0),
            &RealMatrix::scalar(-1.0),
            &RealMatrix::scalar(1.0),
            None,
        )
        .unwrap();
        let g = g_of_tau(&p, 0.3).unwrap()[(0, 0)];
        assert!((g - 0.7).abs() < 1e-14);
    }

    #[test]
    fn m_at_zero() {
        let p = scalar();
        let m = m_of_tau(&p, &PARAMS, 0.0).unwrap();
        assert!((m[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn params_validated() {
        let p = scalar();
        assert!(LinearBarrierParams { r: 1.0, ..PARAMS }.validate(&p).is_err());
        assert!(LinearBarrierParams { sigma: 0.8, ..PARAMS }.validate(&p).is_err());
        assert!(PARAMS.validate(&p).is_ok());
    }
}
