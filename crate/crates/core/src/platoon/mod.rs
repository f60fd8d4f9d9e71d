//! Five-vehicle platoon benchmark.

mod bench;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use bench::{
    run_benchmark, run_design, run_designs, simulate_design, AdvisorReport, BenchmarkReport, CertificateSummary, Design,
    DesignReport, TrialRow,
};

use crate::error::{EtcError, Result};
use crate::network::{AgentDecomposition, AgentRates, NetworkConstants, NetworkSystem, NetworkTopology};
use crate::nonlinear::{IssCertificate, QuadConstants, Surrogate};
use crate::numerics::{eig_sym, lambda_min, solve_lyapunov, RealMatrix};
use crate::sim::{ClosedLoop, HoldMap, LyapunovFn, VectorField};

/// Decay rate the paper reports for the weighted certificate.
pub const PAPER_DECAY_RATE: f64 = 0.145;

const D: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlatoonConfig {
    pub n_vehicles: usize,
    pub k_p: f64,
    pub k_d: f64,
    pub t_v: f64,
    pub t_d: f64,
    pub r: f64,
    pub c_beta: f64,
    /// Margin multiplying the coupled decay terms in `g`.
    pub sigma_factor: f64,
    pub rho_a: f64,
    pub rho_z: f64,
    pub horizon: f64,
    pub n_trials: usize,
    pub seed: u64,
    /// Initial states are uniform on `[-ic_scale, ic_scale]` componentwise.
    pub ic_scale: f64,
    /// Dynamic-trigger weight on `g`.
    pub theta: f64,
    pub c_iota_fast: f64,
    pub c_iota_slow: f64,
    pub step_h: f64,
    pub event_tol: f64,
    /// Trajectory samples are kept every this many steps.
    pub sample_stride: usize,
}

impl Default for PlatoonConfig {
    fn default() -> Self {
        Self {
            n_vehicles: 5,
            k_p: 0.2,
            k_d: 0.7,
            t_v: 0.6,
            t_d: 0.1,
            r: 0.08,
            c_beta: 1.0,
            sigma_factor: 0.75,
            rho_a: 10.0,
            rho_z: 20.0,
            horizon: 400.0,
            n_trials: 50,
            seed: 0,
            ic_scale: 1.0,
            theta: 1.0,
            c_iota_fast: 1.0,
            c_iota_slow: 0.05,
            step_h: 1e-3,
            event_tol: 1e-9,
            sample_stride: 1000,
        }
    }
}

impl PlatoonConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(EtcError::Validation(m));
        if self.n_vehicles < 2 {
            return bad(format!("platoon.n_vehicles must be at least 2, got {}", self.n_vehicles));
        }
        for (k, v) in [
            ("t_v", self.t_v),
            ("t_d", self.t_d),
            ("r", self.r),
            ("rho_a", self.rho_a),
            ("rho_z", self.rho_z),
            ("horizon", self.horizon),
            ("ic_scale", self.ic_scale),
            ("theta", self.theta),
            ("c_iota_fast", self.c_iota_fast),
            ("c_iota_slow", self.c_iota_slow),
            ("step_h", self.step_h),
            ("event_tol", self.event_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("platoon.{k} must be positive, got {v}"));
            }
        }
        if !(self.c_beta.is_finite() && self.c_beta >= 0.0) {
            return bad(format!("platoon.c_beta must be nonnegative, got {}", self.c_beta));
        }
        if !(self.sigma_factor > 0.0 && self.sigma_factor <= 1.0) {
            return bad(format!("platoon.sigma_factor must lie in (0, 1], got {}", self.sigma_factor));
        }
        if !(self.r < self.sigma_factor * PAPER_DECAY_RATE) {
            return bad(format!(
                "platoon.r = {} must stay below sigma_factor * {PAPER_DECAY_RATE} = {}",
                self.r,
                self.sigma_factor * PAPER_DECAY_RATE
            ));
        }
        if self.n_trials == 0 || self.sample_stride == 0 {
            return bad("platoon.n_trials and platoon.sample_stride must be positive".into());
        }
        Ok(())
    }

    /// Per-trial initial condition, drawn from an independent stream.
    pub fn initial_state(&self, trial: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial as u64);
        (0..D * self.n_vehicles).map(|_| rng.random_range(-self.ic_scale..=self.ic_scale)).collect()
    }
}

/// Vehicle matrices, certificate and per-vehicle split.
#[derive(Debug, Clone, Serialize)]
pub struct Platoon {
    pub n: usize,
    pub a_diag: RealMatrix,
    pub a_off: RealMatrix,
    pub e_bar: Vec<f64>,
    pub p: RealMatrix,
    pub pi: f64,
    /// `pi^(N - i)` for vehicle `i = 1..N`.
    pub weights: Vec<f64>,
    pub sigma_factor: f64,
    /// `P A_off`.
    pub pa_off: RealMatrix,
    /// `P E`.
    pub pe: Vec<f64>,
}

/// State `(delta, nu, q, u)` per vehicle; the held signal is `u`.
pub fn build_matrices(cfg: &PlatoonConfig) -> (RealMatrix, RealMatrix, Vec<f64>) {
    let (kp, kd, tv, td) = (cfg.k_p, cfg.k_d, cfg.t_v, cfg.t_d);
    let a_diag = RealMatrix::from_rows(&[
        vec![0.0, -1.0, -tv, 0.0],
        vec![0.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, -1.0 / td, 1.0 / td],
        vec![kp / tv, -kd / tv, -kd, -1.0 / tv],
    ])
    .expect("4x4");
    let a_off = RealMatrix::from_rows(&[
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.0, kd / tv, 0.0, 1.0 / tv],
    ])
    .expect("4x4");
    (a_diag, a_off, vec![0.0, 0.0, 1.0 / td, 0.0])
}

/// Assembles the platoon and its weighted certificate
/// `V = sum_i pi^(N-i) x_i^T P x_i` with `A_diag^T P + P A_diag = -I` and
/// `pi = 31.25 |P A_off|^2`.
pub fn build_platoon(cfg: &PlatoonConfig) -> Result<Platoon> {
    cfg.validate()?;
    let (a_diag, a_off, e_bar) = build_matrices(cfg);
    let p = solve_lyapunov(&a_diag, &RealMatrix::identity(D))?;
    let pa_off = p.matmul(&a_off)?;
    let pi = 31.25 * pa_off.norm_2().powi(2);
    let n = cfg.n_vehicles;
    let weights = (0..n).map(|i| pi.powi((n - 1 - i) as i32)).collect();
    let pe = p.mul_vec(&e_bar);
    Ok(Platoon { n, a_diag, a_off, e_bar, p, pi, weights, sigma_factor: cfg.sigma_factor, pa_off, pe })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Platoon {
    pub fn dim(&self) -> usize {
        D * self.n
    }

    fn blk<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[D * i..D * (i + 1)]
    }

    /// `x' = A_diag x_i + A_off x_{i-1} + E e_i`, with `e_i = u_i(t_k) - u_i`.
    pub fn field_into(&self, x: &[f64], e: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let xi = self.blk(x, i);
            for r in 0..D {
                let mut s = dot(self.a_diag.row(r), xi) + self.e_bar[r] * e[i];
                if i > 0 {
                    s += dot(self.a_off.row(r), self.blk(x, i - 1));
                }
                out[D * i + r] = s;
            }
        }
    }

    pub fn v(&self, x: &[f64]) -> f64 {
        (0..self.n).map(|i| self.weights[i] * self.p.quad_form(self.blk(x, i))).sum()
    }

    /// Exact Lie derivative of `V` along the flow.
    pub fn lie_derivative(&self, x: &[f64], e: &[f64]) -> f64 {
        let mut f = vec![0.0; self.dim()];
        self.field_into(x, e, &mut f);
        (0..self.n)
            .map(|i| 2.0 * self.weights[i] * dot(self.blk(x, i), &self.p.mul_vec(self.blk(&f, i))))
            .sum()
    }

    /// Coupled decay term of vehicle `i` (without the margin):
    /// `pi^(N-i) (-|x_i|^2 + 2 x_i^T P A_off x_{i-1})`.
    fn decay_i(&self, x: &[f64], i: usize) -> f64 {
        let xi = self.blk(x, i);
        let mut s = -dot(xi, xi);
        if i > 0 {
            s += 2.0 * dot(xi, &self.pa_off.mul_vec(self.blk(x, i - 1)));
        }
        self.weights[i] * s
    }

    /// `g(x, e) = s * sum decay_i + sum pi^(N-i) 2 x_i^T P E e_i`.
    pub fn g(&self, x: &[f64], e: &[f64]) -> f64 {
        (0..self.n).map(|i| self.gxe_term(x, e, i)).sum()
    }

    fn gx_term(&self, x: &[f64], i: usize) -> f64 {
        self.sigma_factor * self.decay_i(x, i)
    }

    fn gxe_term(&self, x: &[f64], e: &[f64], i: usize) -> f64 {
        self.gx_term(x, i) + 2.0 * self.weights[i] * dot(self.blk(x, i), &self.pe) * e[i]
    }

    /// `|[A, E]|_2` of the global field.
    pub fn lipschitz(&self) -> f64 {
        let d = self.dim();
        let mut m = RealMatrix::zeros(d, d + self.n);
        for i in 0..self.n {
            m.set_block(D * i, D * i, &self.a_diag);
            if i > 0 {
                m.set_block(D * i, D * (i - 1), &self.a_off);
            }
            for r in 0..D {
                m[(D * i + r, d + i)] = self.e_bar[r];
            }
        }
        m.norm_2()
    }

    /// Block-diagonal `diag(pi^(N-i) P)`.
    pub fn p_big(&self) -> RealMatrix {
        let mut m = RealMatrix::zeros(self.dim(), self.dim());
        for i in 0..self.n {
            m.set_block(D * i, D * i, &self.p.scale(self.weights[i]));
        }
        m
    }

    /// Quadratic constants of the weighted certificate: `c1, c2` from the
    /// sandwich, `c_alpha = lambda/2` and `c_gamma = 2 max_i (w_i |P E|)^2 / lambda`
    /// from Young's inequality on the hold-error terms, where `lambda` is the
    /// smallest eigenvalue of `-(A^T P_big + P_big A)`.
    pub fn quad_constants(&self) -> Result<QuadConstants> {
        let pb = self.p_big();
        let ev = eig_sym(&pb)?;
        let a = self.global_a();
        let t = a.transpose().matmul(&pb)?;
        let mut neg = t.clone();
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                neg[(i, j)] = -(t[(i, j)] + t[(j, i)]);
            }
        }
        let lam = lambda_min(&neg)?;
        if !(lam > 0.0) {
            return Err(EtcError::Infeasible(format!("weighted coupling is not dissipative (lambda = {lam:.3e})")));
        }
        let pe2: f64 = dot(&self.pe, &self.pe);
        let wmax = self.weights.iter().copied().fold(0.0, f64::max);
        Ok(QuadConstants {
            c1: ev[0],
            c2: ev[ev.len() - 1],
            c3: lam,
            c4: 2.0 * pb.norm_2(),
            c_alpha: 0.5 * lam,
            c_gamma: 2.0 * wmax * wmax * pe2 / lam,
            l_f: self.lipschitz(),
        })
    }

    fn global_a(&self) -> RealMatrix {
        let d = self.dim();
        let mut m = RealMatrix::zeros(d, d);
        for i in 0..self.n {
            m.set_block(D * i, D * i, &self.a_diag);
            if i > 0 {
                m.set_block(D * i, D * (i - 1), &self.a_off);
            }
        }
        m
    }

    pub fn certificate(&self) -> Result<IssCertificate> {
        Ok(IssCertificate::quadratic(self.p_big(), self.quad_constants()?))
    }

    /// Smallest observed `-L_f V(x, 0) / V(x)` over seeded uniform states.
    pub fn sampled_decay_rate(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let zero = vec![0.0; self.n];
        let mut best = f64::INFINITY;
        for _ in 0..samples {
            let x: Vec<f64> = (0..self.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            best = best.min(-self.lie_derivative(&x, &zero) / self.v(&x));
        }
        best
    }

    pub fn field(&self) -> Result<VectorField> {
        let me = self.clone();
        let hold = HoldMap::Select((0..self.n).map(|i| D * i + 3).collect());
        VectorField::new(self.dim(), hold, self.lipschitz(), Arc::new(move |x, e, out| me.field_into(x, e, out)))
    }

    /// Network view: 5-vertex path graph, per-vehicle split of `V` and `g`.
    pub fn network(&self, r: f64, c_beta: f64) -> Result<NetworkSystem> {
        let q = self.quad_constants()?;
        let constants = NetworkConstants {
            c_alpha: q.c_alpha,
            c_gamma: q.c_gamma,
            c1: q.c1,
            c2: q.c2,
            r,
            sigma: 1.0 - self.sigma_factor,
            c_beta,
        };
        NetworkSystem::new(NetworkTopology::path(self.n)?, Arc::new(self.clone()), vec![D; self.n], constants)
    }

    pub fn closed_loop(&self, r: f64, c_beta: f64) -> Result<ClosedLoop> {
        let (mv, mg) = (self.clone(), self.clone());
        Ok(ClosedLoop {
            field: self.field()?,
            lyapunov: LyapunovFn(Arc::new(move |x| mv.v(x))),
            surrogate: Surrogate::Custom(Arc::new(move |x, e| mg.g(x, e))),
            network: Some(Arc::new(self.network(r, c_beta)?)),
        })
    }
}

impl AgentDecomposition for Platoon {
    fn n_agents(&self) -> usize {
        self.n
    }

    fn v_i(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.weights[i] * self.p.quad_form(self.blk(x, i));
        }
    }

    fn gx_i(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.gx_term(x, i);
        }
    }

    fn gxe_i(&self, x: &[f64], e: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.gxe_term(x, e, i);
        }
    }

    fn rates(&self, x: &[f64], e: &[f64], xdot: &[f64], edot: &[f64], out: &mut AgentRates) {
        for i in 0..self.n {
            let w = self.weights[i];
            let (xi, di) = (self.blk(x, i), self.blk(xdot, i));
            out.v[i] = 2.0 * w * dot(xi, &self.p.mul_vec(di));
            let mut dec = -2.0 * dot(xi, di);
            if i > 0 {
                let (xp, dp) = (self.blk(x, i - 1), self.blk(xdot, i - 1));
                dec += 2.0 * (dot(di, &self.pa_off.mul_vec(xp)) + dot(xi, &self.pa_off.mul_vec(dp)));
            }
            out.gx[i] = self.sigma_factor * w * dec;
            out.gxe[i] = out.gx[i] + 2.0 * w * (dot(di, &self.pe) * e[i] + dot(xi, &self.pe) * edot[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn displayed_entries() {
        let (ad, ao, e) = build_matrices(&PlatoonConfig::default());
        assert_eq!(ad[(0, 2)], -0.6);
        assert!((e[2] - 10.0).abs() < 1e-12);
        assert!((ao[(3, 1)] - 7.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn split_sums_to_global() {
        let pl = build_platoon(&PlatoonConfig::default()).unwrap();
        let cfg = PlatoonConfig::default();
        let x = cfg.initial_state(3);
        let e: Vec<f64> = (0..5).map(|i| 0.1 * i as f64 - 0.2).collect();
        let mut parts = vec![0.0; 5];
        pl.gxe_i(&x, &e, &mut parts);
        let g = pl.g(&x, &e);
        assert!((parts.iter().sum::<f64>() - g).abs() <= 1e-10 * g.abs().max(1.0));
        pl.v_i(&x, &mut parts);
        assert!((parts.iter().sum::<f64>() - pl.v(&x)).abs() <= 1e-10 * pl.v(&x));
        pl.gx_i(&x, &mut parts);
        let leader = -0.75 * pl.pi.powi(4) * x[..4].iter().map(|v| v * v).sum::<f64>();
        assert!((parts[0] - leader).abs() <= 1e-12 * leader.abs());
    }

    #[test]
    fn analytic_rates_match_finite_difference() {
        struct Fd(Platoon);
        impl AgentDecomposition for Fd {
            fn n_agents(&self) -> usize {
                self.0.n
            }
            fn v_i(&self, x: &[f64], out: &mut [f64]) {
                self.0.v_i(x, out)
            }
            fn gx_i(&self, x: &[f64], out: &mut [f64]) {
                self.0.gx_i(x, out)
            }
            fn gxe_i(&self, x: &[f64], e: &[f64], out: &mut [f64]) {
                self.0.gxe_i(x, e, out)
            }
        }
        let cfg = PlatoonConfig::default();
        let pl = build_platoon(&cfg).unwrap();
        let x = cfg.initial_state(0);
        let e = vec![0.3, -0.1, 0.2, 0.05, -0.4];
        let mut xd = vec![0.0; 20];
        pl.field_into(&x, &e, &mut xd);
        let ed: Vec<f64> = (0..5).map(|i| -xd[4 * i + 3]).collect();
        let (mut a, mut b) = (AgentRates::new(5), AgentRates::new(5));
        pl.rates(&x, &e, &xd, &ed, &mut a);
        Fd(pl.clone()).rates(&x, &e, &xd, &ed, &mut b);
        for i in 0..5 {
            let s = a.v[i].abs().max(1.0);
            assert!((a.v[i] - b.v[i]).abs() < 1e-6 * s);
            assert!((a.gx[i] - b.gx[i]).abs() < 1e-6 * a.gx[i].abs().max(1.0));
            assert!((a.gxe[i] - b.gxe[i]).abs() < 1e-6 * a.gxe[i].abs().max(1.0));
        }
    }
}
