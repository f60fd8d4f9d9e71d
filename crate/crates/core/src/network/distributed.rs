use serde::Serialize;

use super::consensus::ConsensusState;
use super::system::{NetworkConstants, NetworkSystem};
use crate::error::{EtcError, Result};
use crate::nonlinear::{exp_barrier_condition, miet_deriv_exp, ConsensusInit, QuadConstants};

fn per_agent(sys: &NetworkSystem, f: impl FnOnce(&mut [f64], &mut [f64])) -> (Vec<f64>, Vec<f64>) {
    let n = sys.n_agents();
    let (mut g, mut v) = (vec![0.0; n], vec![0.0; n]);
    f(&mut g, &mut v);
    (g, v)
}

/// `W^x_i = gx_i + (r + c_beta) V_i`.
pub fn w_x(sys: &NetworkSystem, x: &[f64]) -> Vec<f64> {
    let k = sys.constants.r + sys.constants.c_beta;
    let (g, v) = per_agent(sys, |g, v| {
        sys.agents.gx_i(x, g);
        sys.agents.v_i(x, v);
    });
    g.iter().zip(&v).map(|(g, v)| g + k * v).collect()
}

/// `W^xe_i = gxe_i + (r + c_beta) V_i`.
pub fn w_xe(sys: &NetworkSystem, x: &[f64], e: &[f64]) -> Vec<f64> {
    let k = sys.constants.r + sys.constants.c_beta;
    let (g, v) = per_agent(sys, |g, v| {
        sys.agents.gxe_i(x, e, g);
        sys.agents.v_i(x, v);
    });
    g.iter().zip(&v).map(|(g, v)| g + k * v).collect()
}

/// Consensus states at `t = 0` (where `e = 0`, so both track `W^x`).
pub fn init_consensus(sys: &NetworkSystem, x0: &[f64], rho_a: f64, rho_z: f64, mode: ConsensusInit) -> ConsensusState {
    let w = w_x(sys, x0);
    let a = match mode {
        ConsensusInit::Average => vec![w.iter().sum::<f64>() / w.len() as f64; w.len()],
        ConsensusInit::Local => w,
    };
    ConsensusState { z: a.clone(), a, rho_a, rho_z }
}

/// Per-agent values `a_i - c_beta V0 exp(-r t) / N`; an update fires when
/// any of them is nonnegative.
pub fn distributed_trigger_values(sys: &NetworkSystem, c: &ConsensusState, t: f64, v0: f64) -> Vec<f64> {
    let k = &sys.constants;
    let thr = k.c_beta * v0 * (-k.r * t).exp() / sys.n_agents() as f64;
    c.a.iter().map(|a| a - thr).collect()
}

/// Naive partition of the centralized derivative trigger: `gxe_i + r V_i`.
pub fn baseline_naive(sys: &NetworkSystem, x: &[f64], e: &[f64]) -> Vec<f64> {
    let r = sys.constants.r;
    let (g, v) = per_agent(sys, |g, v| {
        sys.agents.gxe_i(x, e, g);
        sys.agents.v_i(x, v);
    });
    g.iter().zip(&v).map(|(g, v)| g + r * v).collect()
}

/// Time-regularized naive trigger: inhibited (`None`) until `t_k + tau_d`.
pub fn baseline_time_reg(sys: &NetworkSystem, x: &[f64], e: &[f64], t: f64, t_k: f64, tau_d: f64) -> Option<Vec<f64>> {
    (t >= t_k + tau_d).then(|| baseline_naive(sys, x, e))
}

/// Exponential bounds on the reference-signal rates and the margin `Omega*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaConstants {
    pub omega_xe: f64,
    pub omega_x: f64,
    pub omega_star: f64,
    pub tau_d: f64,
}

/// Grid used to minimize the negated barrier expression over `[0, tau_d]`.
pub const OMEGA_GRID_POINTS: usize = 4000;

fn quad(k: &NetworkConstants, l_f: f64) -> QuadConstants {
    QuadConstants { c1: k.c1, c2: k.c2, c3: 0.0, c4: 0.0, c_alpha: k.c_alpha, c_gamma: k.c_gamma, l_f }
}

/// `-[(xi + r) E - c_beta (exp(-r t) - E)]` minimized over `points` grid
/// nodes on `[0, tau_d]`.
pub fn omega_star_on_grid(k: &NetworkConstants, l_f: f64, tau_d: f64, points: usize) -> Result<f64> {
    let q = quad(k, l_f);
    let mut best = f64::INFINITY;
    for j in 0..=points {
        let tau = tau_d * j as f64 / points as f64;
        best = best.min(-exp_barrier_condition(&q, k.sigma, k.r, k.c_beta, tau)?);
    }
    Ok(best)
}

/// Conservative estimates of `Omega^xe`, `Omega^x` and `Omega*` given the
/// field's Lipschitz constant `l_f` and the Lipschitz constant `l_dv` of the
/// per-agent Jacobian (`|J_V(x) v| <= l_dv |x| |v|`).
///
/// These follow the quadratic-term bounds `|x|^2 <= V/c1`,
/// `|e|^2 <= ((1 - sigma) c_alpha / c1 - r) V / c_gamma` inside the
/// derivative-based window, and `|e|^2 <= c_beta V0 exp(-rt) / c_gamma` overall.
pub fn omega_constants(sys: &NetworkSystem, l_f: f64, l_dv: f64) -> Result<OmegaConstants> {
    let k = sys.constants;
    if !(l_f > 0.0 && l_dv >= 0.0) {
        return Err(EtcError::Parameter(format!("need L_f > 0 and L_dV >= 0, got {l_f}, {l_dv}")));
    }
    if !(k.c_beta > k.min_c_beta()) {
        return Err(EtcError::Parameter(format!(
            "c_beta = {} must exceed (1 - sigma) c_alpha / c1 - r = {}",
            k.c_beta,
            k.min_c_beta()
        )));
    }
    let q = quad(&k, l_f);
    let tau_d = miet_deriv_exp(&q, k.sigma, k.r)?;
    // d/dt of (sigma - 1) c_alpha |x|^2 + c_gamma |e|^2 + (r + c_beta) V.
    let kx = 2.0 * (1.0 - k.sigma) * k.c_alpha + (k.r + k.c_beta) * l_dv;
    let ke = 2.0 * k.c_gamma;
    let d = ((1.0 - k.sigma) * k.c_alpha / k.c1 - k.r).max(0.0);
    let xe = (d / (k.c1 * k.c_gamma)).sqrt();
    let omega_xe = l_f * (kx / k.c1 + (kx + ke) * xe + ke * d / k.c_gamma);
    let omega_x = l_f * kx * (1.0 / k.c1 + (k.c_beta / (k.c1 * k.c_gamma)).sqrt());
    let omega_star = omega_star_on_grid(&k, l_f, tau_d, OMEGA_GRID_POINTS)?;
    if !(omega_star > 0.0) {
        return Err(EtcError::Parameter(format!(
            "Omega* = {omega_star:.3e} is not positive: the barrier expression is not negative on [0, tau_d = {tau_d:.6}]"
        )));
    }
    Ok(OmegaConstants { omega_xe, omega_x, omega_star, tau_d })
}

/// Lower bounds on the consensus gains that guarantee `t_{k+1} - t_k >= tau_d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoBounds {
    pub rho_a_min: f64,
    pub rho_z_min: f64,
}

/// `rho_a > (N Omega^xe / Omega* + r) / lambda2` and
/// `rho_z > (N Omega^x / Omega* + N Omega^x / (c_beta exp(-r tau_d)) + r) / lambda2`.
/// The bounds are conservative; smaller gains often work in practice.
pub fn rho_advisor(sys: &NetworkSystem, om: &OmegaConstants) -> Result<RhoBounds> {
    let n = sys.n_agents();
    if n < 2 {
        return Err(EtcError::Validation("a single agent needs no consensus".into()));
    }
    if !(om.omega_x > 0.0 && om.omega_xe > 0.0 && om.omega_star > 0.0 && om.tau_d > 0.0) {
        return Err(EtcError::Parameter(format!("Omega constants and tau_d must be positive: {om:?}")));
    }
    let k = &sys.constants;
    let nf = n as f64;
    let l2 = sys.topology.lambda2();
    Ok(RhoBounds {
        rho_a_min: (nf * om.omega_xe / om.omega_star + k.r) / l2,
        rho_z_min: (nf * om.omega_x / om.omega_star + nf * om.omega_x / (k.c_beta * (-k.r * om.tau_d).exp()) + k.r) / l2,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::network::{BlockQuadraticAgents, NetworkTopology};
    use crate::numerics::RealMatrix;

    fn scalar_net(n: usize) -> NetworkSystem {
        let agents = BlockQuadraticAgents::uniform(n, RealMatrix::scalar(0.5), 0.25, 0.5, 2.0);
        let k = NetworkConstants { c_alpha: 0.5, c_gamma: 2.0, c1: 0.5, c2: 0.5, r: 0.25, sigma: 0.25, c_beta: 1.0 };
        NetworkSystem::new(NetworkTopology::path(n).unwrap(), Arc::new(agents), vec![1; n], k).unwrap()
    }

    #[test]
    fn sums_match_centralized() {
        let sys = scalar_net(3);
        let x = [0.4, -1.0, 0.7];
        let e = [0.1, 0.05, -0.2];
        let wxe: f64 = w_xe(&sys, &x, &e).iter().sum();
        let n2x: f64 = x.iter().map(|v| v * v).sum();
        let n2e: f64 = e.iter().map(|v| v * v).sum();
        let central = (0.25 - 1.0) * 0.5 * n2x + 2.0 * n2e + 1.25 * 0.5 * n2x;
        assert!((wxe - central).abs() < 1e-12);
        assert_eq!(w_xe(&sys, &x, &[0.0; 3]), w_x(&sys, &x));
        assert!(w_x(&sys, &[0.0; 3]).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn average_init_has_zero_tracking_error() {
        let sys = scalar_net(3);
        let x = [0.4, -1.0, 0.7];
        let c = init_consensus(&sys, &x, 1.0, 2.0, ConsensusInit::Average);
        let avg: f64 = w_x(&sys, &x).iter().sum::<f64>() / 3.0;
        assert!(c.a.iter().chain(&c.z).all(|v| (v - avg).abs() < 1e-15));
        let l = init_consensus(&sys, &x, 1.0, 2.0, ConsensusInit::Local);
        assert!((l.a.iter().sum::<f64>() - 3.0 * avg).abs() < 1e-14);
    }

    #[test]
    fn time_reg_gate() {
        let sys = scalar_net(2);
        assert!(baseline_time_reg(&sys, &[1.0, 1.0], &[0.0; 2], 0.05, 0.0, 0.1).is_none());
        assert_eq!(
            baseline_time_reg(&sys, &[1.0, 1.0], &[0.0; 2], 0.05, 0.0, 0.0),
            Some(baseline_naive(&sys, &[1.0, 1.0], &[0.0; 2]))
        );
    }

    #[test]
    fn omega_and_advisor() {
        let sys = scalar_net(3);
        let om = omega_constants(&sys, 5f64.sqrt(), 1.0).unwrap();
        assert!(om.omega_x > 0.0 && om.omega_xe > 0.0 && om.omega_star > 0.0);
        let fine = omega_star_on_grid(&sys.constants, 5f64.sqrt(), om.tau_d, 10 * OMEGA_GRID_POINTS).unwrap();
        assert!((fine - om.omega_star).abs() <= 0.01 * om.omega_star);
        let b = rho_advisor(&sys, &om).unwrap();
        let doubled = OmegaConstants { omega_x: 2.0 * om.omega_x, ..om };
        let b2 = rho_advisor(&sys, &doubled).unwrap();
        let l2 = sys.topology.lambda2();
        let r = sys.constants.r;
        assert!(((b2.rho_z_min * l2 - r) - 2.0 * (b.rho_z_min * l2 - r)).abs() < 1e-9 * b2.rho_z_min);
        assert!(rho_advisor(&scalar_net(1), &om).is_err());
    }
}
