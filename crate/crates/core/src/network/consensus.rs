use serde::Serialize;

use super::topology::NetworkTopology;
use crate::error::{EtcError, Result};
use crate::numerics::{norm, RealMatrix};
use crate::sim::rk4_step;

/// Right-hand side of the dynamic average consensus `y' = W' - rho L y`.
pub fn dac_derivative(y: &[f64], w_dot: &[f64], rho: f64, lap: &RealMatrix) -> Result<Vec<f64>> {
    let n = lap.rows();
    if y.len() != n || w_dot.len() != n {
        return Err(EtcError::Dimension {
            op: "dac_derivative",
            expected: format!("vectors of length {n}"),
            got: format!("y {}, w_dot {}", y.len(), w_dot.len()),
        });
    }
    let ly = lap.mul_vec(y);
    Ok(w_dot.iter().zip(&ly).map(|(w, l)| w - rho * l).collect())
}

/// Envelope on the tracking error `|y - 1 avg(W)|` when `|W'| <= c exp(-r t)`:
///
/// `c/(rho l2 - r) exp(-r t) + (|eps0| - c/(rho l2 - r)) exp(-rho l2 t)`.
pub fn tracking_bound(c_w_dot: f64, r: f64, rho: f64, lambda2: f64, eps0_norm: f64, t: f64) -> Result<f64> {
    let gap = rho * lambda2 - r;
    if !(gap > 0.0) {
        return Err(EtcError::Inapplicable(format!(
            "tracking bound needs rho * lambda2 > r (rho = {rho}, lambda2 = {lambda2}, r = {r})"
        )));
    }
    let k = c_w_dot / gap;
    Ok(k * (-r * t).exp() + (eps0_norm - k) * (-rho * lambda2 * t).exp())
}

/// Consensus estimates carried by the distributed trigger: `a` tracks the
/// average of `W^xe`, `z` that of `W^x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsensusState {
    pub a: Vec<f64>,
    pub z: Vec<f64>,
    pub rho_a: f64,
    pub rho_z: f64,
}

/// Jump map at an update: `a+ = z`, `z` unchanged.
pub fn consensus_jump(c: &ConsensusState) -> ConsensusState {
    ConsensusState { a: c.z.clone(), ..c.clone() }
}

/// Tracking error `y - 1 avg(W)`.
pub fn tracking_error(y: &[f64], w: &[f64]) -> Vec<f64> {
    let avg = w.iter().sum::<f64>() / w.len() as f64;
    y.iter().map(|v| v - avg).collect()
}

/// One sample of a consensus tracking run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackingSample {
    pub t: f64,
    pub eps_norm: f64,
    pub bound: f64,
}

/// Reference signal for a standalone consensus run.
pub trait Reference {
    fn w(&self, t: f64, out: &mut [f64]);
    fn w_dot(&self, t: f64, out: &mut [f64]);
}

/// `W(t) = w0 * exp(-rate t)` componentwise.
#[derive(Debug, Clone)]
pub struct ExpReference {
    pub w0: Vec<f64>,
    pub rate: f64,
}

impl ExpReference {
    /// Smallest `c` with `|W'(t)| <= c exp(-rate t)`.
    pub fn c_w_dot(&self) -> f64 {
        self.rate * norm(&self.w0)
    }
}

impl Reference for ExpReference {
    fn w(&self, t: f64, out: &mut [f64]) {
        let s = (-self.rate * t).exp();
        for (o, w) in out.iter_mut().zip(&self.w0) {
            *o = w * s;
        }
    }
    fn w_dot(&self, t: f64, out: &mut [f64]) {
        let s = -self.rate * (-self.rate * t).exp();
        for (o, w) in out.iter_mut().zip(&self.w0) {
            *o = w * s;
        }
    }
}

/// Integrates the consensus dynamics with RK4 from `y0` and compares the
/// tracking error against [`tracking_bound`] every `stride` steps.
pub fn simulate_tracking(
    topo: &NetworkTopology,
    reference: &dyn Reference,
    c_w_dot: f64,
    r: f64,
    rho: f64,
    y0: &[f64],
    horizon: f64,
    h: f64,
    stride: usize,
) -> Result<Vec<TrackingSample>> {
    let n = topo.n_agents();
    if y0.len() != n {
        return Err(EtcError::Dimension {
            op: "simulate_tracking",
            expected: format!("y0 of length {n}"),
            got: y0.len().to_string(),
        });
    }
    if !(h > 0.0 && horizon > 0.0 && stride > 0) {
        return Err(EtcError::Validation("need h > 0, horizon > 0 and stride > 0".into()));
    }
    let lap = topo.laplacian();
    let l2 = topo.lambda2();
    let mut w = vec![0.0; n];
    reference.w(0.0, &mut w);
    let eps0 = norm(&tracking_error(y0, &w));
    let steps = (horizon / h).round() as usize;
    let mut y = y0.to_vec();
    let mut next = vec![0.0; n];
    let mut wd = vec![0.0; n];
    let mut out = Vec::with_capacity(steps / stride + 2);
    let sample = |t: f64, y: &[f64], w: &mut [f64]| -> Result<TrackingSample> {
        reference.w(t, w);
        Ok(TrackingSample {
            t,
            eps_norm: norm(&tracking_error(y, w)),
            bound: tracking_bound(c_w_dot, r, rho, l2, eps0, t)?,
        })
    };
    out.push(sample(0.0, &y, &mut w)?);
    for k in 0..steps {
        let t = k as f64 * h;
        rk4_step(
            |s, y, dy| {
                reference.w_dot(s, &mut wd);
                let ly = lap.mul_vec(y);
                for i in 0..n {
                    dy[i] = wd[i] - rho * ly[i];
                }
            },
            t,
            &y,
            h,
            &mut next,
        );
        std::mem::swap(&mut y, &mut next);
        if (k + 1) % stride == 0 || k + 1 == steps {
            out.push(sample((k + 1) as f64 * h, &y, &mut w)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_vanishes_along_ones_at_consensus() {
        let topo = NetworkTopology::path(3).unwrap();
        let d = dac_derivative(&[2.0, 2.0, 2.0], &[0.0; 3], 4.0, topo.laplacian()).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn two_agents_decay_at_twice_rho() {
        // W = (1, -1) constant, y0 = (1, -1): y = (1, -1) exp(-2 rho t).
        let topo = NetworkTopology::path(2).unwrap();
        let re = ExpReference { w0: vec![1.0, -1.0], rate: 0.0 };
        let s = simulate_tracking(&topo, &re, 0.0, 0.0, 1.0, &[1.0, -1.0], 2.0, 1e-3, 100).unwrap();
        for p in &s {
            let exact = 2f64.sqrt() * (-2.0 * p.t).exp();
            assert!((p.eps_norm - exact).abs() < 1e-10, "{p:?}");
        }
    }

    #[test]
    fn bound_endpoints() {
        assert!((tracking_bound(1.0, 1.0, 1.0, 2.0, 0.3, 0.0).unwrap() - 0.3).abs() < 1e-15);
        let k = 1.0 / (2.0 - 1.0);
        let b = tracking_bound(1.0, 1.0, 1.0, 2.0, k, 1.5).unwrap();
        assert!((b - k * (-1.5f64).exp()).abs() < 1e-15);
        assert!(matches!(tracking_bound(1.0, 2.0, 1.0, 2.0, 0.0, 0.0), Err(EtcError::Inapplicable(_))));
    }

    #[test]
    fn jump_copies_z() {
        let c = ConsensusState { a: vec![1.0, 2.0], z: vec![3.0, 4.0], rho_a: 1.0, rho_z: 2.0 };
        let j = consensus_jump(&c);
        assert_eq!(j.a, c.z);
        assert_eq!(j.z, c.z);
        assert_eq!(consensus_jump(&j), j);
    }
}
