use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::topology::NetworkTopology;
use crate::error::{EtcError, Result};
use crate::nonlinear::ScalarFn;
use crate::numerics::RealMatrix;

/// Time derivatives of the per-agent terms along the flow.
#[derive(Debug, Clone, Default)]
pub struct AgentRates {
    pub v: Vec<f64>,
    pub gx: Vec<f64>,
    pub gxe: Vec<f64>,
}

impl AgentRates {
    pub fn new(n: usize) -> Self {
        Self { v: vec![0.0; n], gx: vec![0.0; n], gxe: vec![0.0; n] }
    }
}

const FD_STEP: f64 = 1e-6;

/// Split of the certificate and of its surrogate into per-agent terms:
/// `V = sum V_i`, `g(x, 0) = sum gx_i`, `g(x, e) = sum gxe_i`.
pub trait AgentDecomposition: Send + Sync {
    fn n_agents(&self) -> usize;
    fn v_i(&self, x: &[f64], out: &mut [f64]);
    fn gx_i(&self, x: &[f64], out: &mut [f64]);
    fn gxe_i(&self, x: &[f64], e: &[f64], out: &mut [f64]);

    /// Chain-rule derivatives along `(xdot, edot)`. The default is a central
    /// finite difference with step `1e-6`.
    fn rates(&self, x: &[f64], e: &[f64], xdot: &[f64], edot: &[f64], out: &mut AgentRates) {
        let n = self.n_agents();
        let shift = |base: &[f64], dir: &[f64], s: f64| -> Vec<f64> {
            base.iter().zip(dir).map(|(b, d)| b + s * d).collect()
        };
        let (xp, xm) = (shift(x, xdot, FD_STEP), shift(x, xdot, -FD_STEP));
        let (ep, em) = (shift(e, edot, FD_STEP), shift(e, edot, -FD_STEP));
        let (mut fp, mut fm) = (vec![0.0; n], vec![0.0; n]);
        let inv = 0.5 / FD_STEP;
        self.v_i(&xp, &mut fp);
        self.v_i(&xm, &mut fm);
        for i in 0..n {
            out.v[i] = (fp[i] - fm[i]) * inv;
        }
        self.gx_i(&xp, &mut fp);
        self.gx_i(&xm, &mut fm);
        for i in 0..n {
            out.gx[i] = (fp[i] - fm[i]) * inv;
        }
        self.gxe_i(&xp, &ep, &mut fp);
        self.gxe_i(&xm, &em, &mut fm);
        for i in 0..n {
            out.gxe[i] = (fp[i] - fm[i]) * inv;
        }
    }
}

/// Scalar constants the distributed analysis is parameterized by.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NetworkConstants {
    pub c_alpha: f64,
    pub c_gamma: f64,
    pub c1: f64,
    pub c2: f64,
    pub r: f64,
    pub sigma: f64,
    pub c_beta: f64,
}

impl NetworkConstants {
    /// Lower bound on `c_beta` required by the distributed design.
    pub fn min_c_beta(&self) -> f64 {
        (1.0 - self.sigma) * self.c_alpha / self.c1 - self.r
    }
}

/// Networked plant: graph, per-agent decomposition and constants.
#[derive(Clone)]
pub struct NetworkSystem {
    pub topology: NetworkTopology,
    pub agents: Arc<dyn AgentDecomposition>,
    pub agent_dims: Vec<usize>,
    pub constants: NetworkConstants,
}

impl fmt::Debug for NetworkSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NetworkSystem")
            .field("n_agents", &self.topology.n_agents())
            .field("agent_dims", &self.agent_dims)
            .field("constants", &self.constants)
            .finish_non_exhaustive()
    }
}

impl NetworkSystem {
    pub fn new(
        topology: NetworkTopology,
        agents: Arc<dyn AgentDecomposition>,
        agent_dims: Vec<usize>,
        constants: NetworkConstants,
    ) -> Result<Self> {
        if agents.n_agents() != topology.n_agents() || agent_dims.len() != topology.n_agents() {
            return Err(EtcError::Dimension {
                op: "NetworkSystem::new",
                expected: format!("{} agents", topology.n_agents()),
                got: format!("decomposition {}, dims {}", agents.n_agents(), agent_dims.len()),
            });
        }
        Ok(Self { topology, agents, agent_dims, constants })
    }

    pub fn n_agents(&self) -> usize {
        self.topology.n_agents()
    }

    pub fn dim_x(&self) -> usize {
        self.agent_dims.iter().sum()
    }

    /// Checks `sum_i V_i(x) = V(x)` on seeded uniform samples (relative 1e-10).
    pub fn check_decomposition(&self, v: &ScalarFn, samples: usize, seed: u64) -> Result<f64> {
        let n = self.n_agents();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vi = vec![0.0; n];
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x: Vec<f64> = (0..self.dim_x()).map(|_| rng.random_range(-1.0..1.0)).collect();
            self.agents.v_i(&x, &mut vi);
            let total = v(&x);
            let gap = (vi.iter().sum::<f64>() - total).abs() / total.abs().max(1.0);
            worst = worst.max(gap);
        }
        if worst > 1e-10 {
            return Err(EtcError::Validation(format!(
                "per-agent V_i do not sum to V (relative gap {worst:.3e})"
            )));
        }
        Ok(worst)
    }
}

/// Agents with decoupled quadratic certificates `V_i = x_i^T P_i x_i` and the
/// quadratic surrogate split `gx_i = (sigma - 1) c_alpha |x_i|^2`,
/// `gxe_i = gx_i + c_gamma |e_i|^2`.
#[derive(Debug, Clone)]
pub struct BlockQuadraticAgents {
    pub x_blocks: Vec<Range<usize>>,
    pub e_blocks: Vec<Range<usize>>,
    pub p_blocks: Vec<RealMatrix>,
    pub sigma: f64,
    pub c_alpha: f64,
    pub c_gamma: f64,
}

impl BlockQuadraticAgents {
    /// Equal-size agents of dimension `d` sharing `P`, full-state hold.
    pub fn uniform(n_agents: usize, p: RealMatrix, sigma: f64, c_alpha: f64, c_gamma: f64) -> Self {
        let d = p.rows();
        let blocks: Vec<_> = (0..n_agents).map(|i| i * d..(i + 1) * d).collect();
        Self {
            x_blocks: blocks.clone(),
            e_blocks: blocks,
            p_blocks: vec![p; n_agents],
            sigma,
            c_alpha,
            c_gamma,
        }
    }

    /// Constant `L` with `|J_V(x) v| <= L |x| |v|`, namely `2 max_i |P_i|`.
    pub fn l_dv(&self) -> f64 {
        self.p_blocks.iter().map(|p| 2.0 * p.norm_2()).fold(0.0, f64::max)
    }
}

impl AgentDecomposition for BlockQuadraticAgents {
    fn n_agents(&self) -> usize {
        self.x_blocks.len()
    }

    fn v_i(&self, x: &[f64], out: &mut [f64]) {
        for (i, b) in self.x_blocks.iter().enumerate() {
            out[i] = self.p_blocks[i].quad_form(&x[b.clone()]);
        }
    }

    fn gx_i(&self, x: &[f64], out: &mut [f64]) {
        for (i, b) in self.x_blocks.iter().enumerate() {
            let n2: f64 = x[b.clone()].iter().map(|v| v * v).sum();
            out[i] = (self.sigma - 1.0) * self.c_alpha * n2;
        }
    }

    fn gxe_i(&self, x: &[f64], e: &[f64], out: &mut [f64]) {
        self.gx_i(x, out);
        for (i, b) in self.e_blocks.iter().enumerate() {
            let n2: f64 = e[b.clone()].iter().map(|v| v * v).sum();
            out[i] += self.c_gamma * n2;
        }
    }

    fn rates(&self, x: &[f64], e: &[f64], xdot: &[f64], edot: &[f64], out: &mut AgentRates) {
        for (i, b) in self.x_blocks.iter().enumerate() {
            let xi = &x[b.clone()];
            let di = &xdot[b.clone()];
            let pd = self.p_blocks[i].mul_vec(di);
            out.v[i] = 2.0 * xi.iter().zip(&pd).map(|(a, b)| a * b).sum::<f64>();
            let xd: f64 = xi.iter().zip(di).map(|(a, b)| a * b).sum();
            out.gx[i] = 2.0 * (self.sigma - 1.0) * self.c_alpha * xd;
        }
        for (i, b) in self.e_blocks.iter().enumerate() {
            let ed: f64 = e[b.clone()].iter().zip(&edot[b.clone()]).map(|(a, b)| a * b).sum();
            out.gxe[i] = out.gx[i] + 2.0 * self.c_gamma * ed;
        }
    }
}
