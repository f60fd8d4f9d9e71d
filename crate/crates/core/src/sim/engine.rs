use std::sync::Arc;

use super::{ClosedLoop, EventLog, SimConfig, Trajectory};
use crate::error::{EtcError, Result};
use crate::network::NetworkSystem;
use crate::nonlinear::{spec_value, ConsensusInit, PerformanceSpec, SpecContext, TriggerPolicy};
use crate::numerics::{norm, RealMatrix, RealVector};

/// Bisection on `g` over `[t_lo, t_hi]` for the first time it becomes
/// nonnegative. Returns the lower end of the final bracket, so `g` is still
/// negative at the returned time unless it already was nonnegative at `t_lo`.
pub fn locate_event<G: FnMut(f64) -> f64>(mut g: G, t_lo: f64, t_hi: f64, tol: f64) -> Result<f64> {
    if g(t_lo) >= 0.0 {
        return Ok(t_lo);
    }
    if !(g(t_hi) >= 0.0) {
        return Err(EtcError::Internal(format!("no trigger crossing on [{t_lo}, {t_hi}]")));
    }
    let (mut lo, mut hi) = (t_lo, t_hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}

/// Consecutive inter-event times at most `ZENO_GAP_TOLS * event_tol` long
/// that are reported as suspected Zeno behavior.
pub const ZENO_SHORT_RUN: usize = 20;
pub const ZENO_GAP_TOLS: f64 = 10.0;

/// State of a run at an update instant, used to compare trigger rules on an
/// identical starting point.
#[derive(Debug, Clone)]
pub struct Snapshot {
    /// Absolute time of the update.
    pub t: f64,
    /// State at the update.
    pub x: RealVector,
    /// `V(x0)` of the run the snapshot was taken from.
    pub v_x0: f64,
    /// Co-integrated spec state (`S` or `eta`); `None` uses the spec default.
    pub aux: Option<f64>,
}

/// Runs the hybrid loop from `x0` at `t = 0`.
pub fn simulate(
    cl: &ClosedLoop,
    policy: &TriggerPolicy,
    spec: &PerformanceSpec,
    x0: &[f64],
    cfg: &SimConfig,
) -> Result<(Trajectory, EventLog)> {
    let snap = Snapshot { t: 0.0, x: x0.to_vec(), v_x0: cl.lyapunov.eval(x0), aux: None };
    let mut m = Machine::new(cl, policy, spec, &snap)?;
    m.run(&snap, cfg, false)
}

/// Time of the first event after an update at `snap`, or `None` if none
/// occurs before `cfg.horizon`.
pub fn next_event_time(
    cl: &ClosedLoop,
    policy: &TriggerPolicy,
    spec: &PerformanceSpec,
    snap: &Snapshot,
    cfg: &SimConfig,
) -> Result<Option<f64>> {
    let mut m = Machine::new(cl, policy, spec, snap)?;
    let (_, log) = m.run(snap, cfg, true)?;
    Ok(log.trigger_times.get(1).copied())
}

struct Agents {
    net: Arc<NetworkSystem>,
    n: usize,
    /// Offsets of the consensus states in the monolithic state when consensus runs.
    dac: Option<Dac>,
    w: Refs,
}

/// Per-agent reference signals and scratch space.
struct Refs {
    vi: Vec<f64>,
    gi: Vec<f64>,
    gx: Vec<f64>,
    wx: Vec<f64>,
    wxe: Vec<f64>,
}

/// Consensus layout. The integrated states are the offsets `a - W^xe(x, e)`
/// and `z - W^x(x)`: since `a' = W^xe' - rho_a L a`, the offset obeys
/// `(a - W^xe)' = -rho_a L a`, which needs no derivative of `W` and keeps
/// `1^T (a - W^xe)` constant to rounding.
struct Dac {
    a_off: usize,
    z_off: usize,
    c_beta: f64,
    rho_a: f64,
    rho_z: f64,
    lap: RealMatrix,
}

impl Refs {
    /// Fills `wx`, `wxe` with `W^x_i(x)` and `W^xe_i(x, e)`.
    fn fill(&mut self, net: &NetworkSystem, x: &[f64], e: &[f64], r: f64, c_beta: f64) {
        let k = r + c_beta;
        let d = &net.agents;
        d.v_i(x, &mut self.vi);
        d.gx_i(x, &mut self.gx);
        d.gxe_i(x, e, &mut self.gi);
        for i in 0..self.wx.len() {
            self.wx[i] = self.gx[i] + k * self.vi[i];
            self.wxe[i] = self.gi[i] + k * self.vi[i];
        }
    }
}

struct Machine<'a> {
    cl: &'a ClosedLoop,
    policy: &'a TriggerPolicy,
    spec: &'a PerformanceSpec,
    n: usize,
    dim: usize,
    aux: Option<usize>,
    agents: Option<Agents>,
    sigma: f64,
    r: f64,
    v_x0: f64,
    yk: Vec<f64>,
    gate: f64,
    e: Vec<f64>,
    xdot: Vec<f64>,
}

impl<'a> Machine<'a> {
    fn new(cl: &'a ClosedLoop, policy: &'a TriggerPolicy, spec: &'a PerformanceSpec, snap: &Snapshot) -> Result<Self> {
        policy.validate()?;
        spec.validate()?;
        let n = cl.field.dim_x();
        if snap.x.len() != n {
            return Err(EtcError::Dimension {
                op: "simulate",
                expected: format!("x0 of length {n}"),
                got: format!("{}", snap.x.len()),
            });
        }
        if snap.x.iter().any(|v| !v.is_finite()) {
            return Err(EtcError::Validation("x0 must be finite".into()));
        }
        match (policy, spec) {
            (TriggerPolicy::Dynamic { .. }, PerformanceSpec::Online { .. }) => {}
            (TriggerPolicy::Dynamic { .. }, _) | (_, PerformanceSpec::Online { .. }) => {
                return Err(EtcError::Validation(
                    "the dynamic policy and the online spec must be used together".into(),
                ));
            }
            _ => {}
        }
        if let PerformanceSpec::Exponential { v0: Some(v0), .. } = spec {
            if *v0 < snap.v_x0 {
                return Err(EtcError::Validation(format!("spec.v0 = {v0} is below V(x0) = {}", snap.v_x0)));
            }
        }
        let r = spec.rate().unwrap_or(0.0);
        if policy.is_distributed() && spec.rate().is_none() {
            return Err(EtcError::Validation(format!(
                "the {} policy needs an exponential spec",
                policy.name()
            )));
        }

        let mut dim = n;
        let aux = if spec.has_aux() {
            dim += 1;
            Some(n)
        } else {
            None
        };
        let agents = if policy.is_distributed() {
            let net = cl.network.clone().ok_or_else(|| {
                EtcError::Validation(format!("the {} policy needs a network decomposition", policy.name()))
            })?;
            if net.dim_x() != n {
                return Err(EtcError::Dimension {
                    op: "simulate",
                    expected: format!("network over {n} states"),
                    got: format!("{}", net.dim_x()),
                });
            }
            let na = net.n_agents();
            let dac = match policy {
                TriggerPolicy::DistributedPB { c_beta, rho_a, rho_z, .. } => {
                    let d = Dac {
                        a_off: dim,
                        z_off: dim + na,
                        c_beta: *c_beta,
                        rho_a: *rho_a,
                        rho_z: *rho_z,
                        lap: net.topology.laplacian().clone(),
                    };
                    dim += 2 * na;
                    Some(d)
                }
                _ => None,
            };
            let z = || vec![0.0; na];
            Some(Agents { net, n: na, dac, w: Refs { vi: z(), gi: z(), gx: z(), wx: z(), wxe: z() } })
        } else {
            None
        };

        let de = cl.field.dim_e();
        Ok(Self {
            cl,
            policy,
            spec,
            n,
            dim,
            aux,
            agents,
            sigma: policy.sigma().unwrap_or(0.0),
            r,
            v_x0: snap.v_x0,
            yk: vec![0.0; de],
            gate: f64::NEG_INFINITY,
            e: vec![0.0; de],
            xdot: vec![0.0; n],
        })
    }

    fn initial_state(&mut self, snap: &Snapshot) -> Vec<f64> {
        let mut z = vec![0.0; self.dim];
        z[..self.n].copy_from_slice(&snap.x);
        if let Some(i) = self.aux {
            z[i] = snap.aux.unwrap_or_else(|| self.spec.initial_aux(snap.v_x0));
        }
        self.cl.field.hold().apply(&snap.x, &mut self.yk);
        if let Some(ag) = self.agents.as_mut() {
            if let (Some(dac), TriggerPolicy::DistributedPB { init, .. }) = (&ag.dac, self.policy) {
                let zero = vec![0.0; self.e.len()];
                ag.w.fill(&ag.net, &snap.x, &zero, self.r, dac.c_beta);
                let avg = ag.w.wx.iter().sum::<f64>() / ag.n as f64;
                for i in 0..ag.n {
                    let v = match init {
                        ConsensusInit::Average => avg,
                        ConsensusInit::Local => ag.w.wx[i],
                    };
                    z[dac.a_off + i] = v - ag.w.wx[i];
                    z[dac.z_off + i] = v - ag.w.wx[i];
                }
            }
        }
        z
    }

    fn spec_value(&self, t: f64, z: &[f64], v: f64) -> f64 {
        let ctx = SpecContext { v_x0: self.v_x0, aux: self.aux.map_or(0.0, |i| z[i]), v_now: v };
        spec_value(self.spec, t, &ctx)
    }

    fn deriv(&mut self, z: &[f64], out: &mut [f64]) {
        let n = self.n;
        let x = &z[..n];
        let field = &self.cl.field;
        field.hold().error(&self.yk, x, &mut self.e);
        field.eval_into(x, &self.e, &mut self.xdot);
        out[..n].copy_from_slice(&self.xdot);
        if let Some(i) = self.aux {
            out[i] = match self.spec {
                PerformanceSpec::ClassKDerivative { h, .. } => -h.eval(z[i]),
                PerformanceSpec::Online { iota, .. } => {
                    -iota.eval(z[i]) - self.cl.surrogate.eval(self.sigma, x, &self.e)
                }
                PerformanceSpec::Exponential { .. } => 0.0,
            };
        }
        if let Some(ag) = self.agents.as_mut() {
            if let Some(dac) = &ag.dac {
                ag.w.fill(&ag.net, x, &self.e, self.r, dac.c_beta);
                for i in 0..ag.n {
                    let row = dac.lap.row(i);
                    let mut la = 0.0;
                    let mut lz = 0.0;
                    for j in 0..ag.n {
                        la += row[j] * (z[dac.a_off + j] + ag.w.wxe[j]);
                        lz += row[j] * (z[dac.z_off + j] + ag.w.wx[j]);
                    }
                    out[dac.a_off + i] = -dac.rho_a * la;
                    out[dac.z_off + i] = -dac.rho_z * lz;
                }
            }
        }
    }

    /// Trigger condition; the update fires when it is nonnegative.
    fn condition(&mut self, t: f64, z: &[f64]) -> f64 {
        let n = self.n;
        let x = &z[..n];
        self.cl.field.hold().error(&self.yk, x, &mut self.e);
        let v = self.cl.lyapunov.eval(x);
        let s = self.spec_value(t, z, v);
        let g = |m: &Self| m.cl.surrogate.eval(m.sigma, x, &m.e);
        match self.policy {
            TriggerPolicy::DerivativeBased { .. } => g(self) + self.spec.decay(v).unwrap_or(0.0),
            TriggerPolicy::FunctionBased => v - s,
            TriggerPolicy::PerformanceBarrier { beta, .. } => {
                g(self) + self.spec.decay(v).unwrap_or(0.0) - beta.eval(s - v)
            }
            TriggerPolicy::Dynamic { .. } => {
                let theta = match self.spec {
                    PerformanceSpec::Online { theta, .. } => *theta,
                    _ => 1.0,
                };
                theta * g(self) - z[self.aux.unwrap_or(0)]
            }
            TriggerPolicy::DistributedPB { c_beta, .. } => {
                let r = self.r;
                let ag = self.agents.as_mut().expect("distributed policy without agents");
                let dac = ag.dac.as_ref().expect("consensus layout");
                let (a_off, cb) = (dac.a_off, dac.c_beta);
                ag.w.fill(&ag.net, x, &self.e, r, cb);
                let thr = c_beta * s / ag.n as f64;
                (0..ag.n).map(|i| z[a_off + i] + ag.w.wxe[i] - thr).fold(f64::NEG_INFINITY, f64::max)
            }
            TriggerPolicy::NaivePartitioned => self.naive(x),
            TriggerPolicy::TimeRegularized { .. } => {
                if t < self.gate {
                    f64::NEG_INFINITY
                } else {
                    self.naive(x)
                }
            }
        }
    }

    fn naive(&mut self, x: &[f64]) -> f64 {
        let r = self.r;
        let ag = self.agents.as_mut().expect("distributed policy without agents");
        ag.net.agents.gxe_i(x, &self.e, &mut ag.w.gi);
        ag.net.agents.v_i(x, &mut ag.w.vi);
        (0..ag.n).map(|i| ag.w.gi[i] + r * ag.w.vi[i]).fold(f64::NEG_INFINITY, f64::max)
    }

    fn rk4(&mut self, z: &[f64], h: f64, buf: &mut Rk4, out: &mut [f64]) {
        let d = z.len();
        self.deriv(z, &mut buf.k1);
        for i in 0..d {
            buf.tmp[i] = z[i] + 0.5 * h * buf.k1[i];
        }
        self.deriv(&buf.tmp, &mut buf.k2);
        for i in 0..d {
            buf.tmp[i] = z[i] + 0.5 * h * buf.k2[i];
        }
        self.deriv(&buf.tmp, &mut buf.k3);
        for i in 0..d {
            buf.tmp[i] = z[i] + h * buf.k3[i];
        }
        self.deriv(&buf.tmp, &mut buf.k4);
        for i in 0..d {
            out[i] = z[i] + h / 6.0 * (buf.k1[i] + 2.0 * buf.k2[i] + 2.0 * buf.k3[i] + buf.k4[i]);
        }
    }

    fn at_rest(&self, z: &[f64]) -> bool {
        z[..self.n].iter().all(|v| *v == 0.0) && self.e.iter().all(|v| *v == 0.0)
    }

    fn jump(&mut self, z: &mut [f64]) {
        let n = self.n;
        self.cl.field.hold().apply(&z[..n], &mut self.yk);
        if let Some(ag) = &self.agents {
            if let Some(d) = &ag.dac {
                // a+ = z
                z.copy_within(d.z_off..d.z_off + ag.n, d.a_off);
            }
        }
    }

    fn run(&mut self, snap: &Snapshot, cfg: &SimConfig, first_only: bool) -> Result<(Trajectory, EventLog)> {
        cfg.validate()?;
        let t_end = snap.t + cfg.horizon;
        let mut z = self.initial_state(snap);
        let mut z_new = vec![0.0; self.dim];
        let mut buf = Rk4::new(self.dim);
        let tau_d = match self.policy {
            TriggerPolicy::TimeRegularized { tau_d } => *tau_d,
            _ => 0.0,
        };

        let mut traj = Trajectory { max_violation: f64::NEG_INFINITY, ..Default::default() };
        let v0_ref = self.v_x0;
        if cfg.reference_rate.is_some() {
            traj.max_reference_violation = Some(f64::NEG_INFINITY);
        }
        let mut log = EventLog {
            trigger_times: vec![snap.t],
            held: vec![self.yk.clone()],
            ..Default::default()
        };
        let mut t = snap.t;
        self.gate = t + tau_d;
        self.record(&mut traj, t, &z, 0, cfg, v0_ref);

        let mut c_prev = self.condition(t, &z);
        if c_prev > 0.0 && !self.at_rest(&z) {
            return Err(EtcError::SuspectedZeno { events: 0, t, tail: vec![] });
        }

        let mut steps = 0usize;
        let mut short_run = 0usize;
        while t_end - t > 1e-12 * t_end.abs().max(1.0) {
            let mut h = cfg.step_h;
            let mut t_next = t + h;
            if t_next >= t_end {
                h = t_end - t;
                t_next = t_end;
            }
            if self.gate > t && self.gate < t_next {
                h = self.gate - t;
                t_next = self.gate;
            }
            self.rk4(&z, h, &mut buf, &mut z_new);
            let xn = norm(&z_new[..self.n]);
            if !(xn <= cfg.divergence_bound) {
                return Err(EtcError::Divergence { t: t_next, norm: xn });
            }
            let c_new = self.condition(t_next, &z_new);
            if c_new >= 0.0 && !self.at_rest(&z_new) {
                let t_ev = if c_prev == f64::NEG_INFINITY {
                    // Monitoring just resumed at a dwell-time gate.
                    t_next
                } else {
                    let z0 = z.clone();
                    let mut zt = vec![0.0; self.dim];
                    let mut b2 = Rk4::new(self.dim);
                    let tau = locate_event(
                        |s| {
                            if s == 0.0 {
                                return c_prev;
                            }
                            self.rk4(&z0, s, &mut b2, &mut zt);
                            self.condition(t + s, &zt)
                        },
                        0.0,
                        h,
                        cfg.event_tol,
                    )?;
                    if tau > 0.0 {
                        self.rk4(&z0, tau, &mut b2, &mut z_new);
                    } else {
                        z_new.copy_from_slice(&z0);
                    }
                    t + tau
                };
                t = t_ev;
                std::mem::swap(&mut z, &mut z_new);
                steps += 1;
                self.track(&mut traj, t, &z, v0_ref, cfg);
                self.record(&mut traj, t, &z, log.trigger_times.len() - 1, cfg, v0_ref);

                self.jump(&mut z);
                log.inter_event_times.push(t - log.trigger_times.last().copied().unwrap_or(t));
                log.trigger_times.push(t);
                log.held.push(self.yk.clone());
                self.gate = t + tau_d;
                if first_only {
                    break;
                }
                short_run = if t - log.trigger_times[log.trigger_times.len() - 2] <= ZENO_GAP_TOLS * cfg.event_tol {
                    short_run + 1
                } else {
                    0
                };
                if log.trigger_times.len() - 1 > cfg.max_events || short_run >= ZENO_SHORT_RUN {
                    return Err(zeno(&log, t));
                }
                c_prev = self.condition(t, &z);
                if c_prev > 0.0 && !self.at_rest(&z) {
                    return Err(zeno(&log, t));
                }
                continue;
            }
            t = t_next;
            std::mem::swap(&mut z, &mut z_new);
            c_prev = c_new;
            steps += 1;
            self.track(&mut traj, t, &z, v0_ref, cfg);
            if steps % cfg.sample_stride == 0 || t >= t_end {
                self.record(&mut traj, t, &z, log.trigger_times.len() - 1, cfg, v0_ref);
            }
        }
        if traj.times.last().is_some_and(|&tl| tl < t) {
            self.record(&mut traj, t, &z, log.trigger_times.len() - 1, cfg, v0_ref);
        }
        traj.steps = steps;
        log.update_count = log.trigger_times.len() - 1;
        log.empirical_miet = log.inter_event_times.iter().copied().reduce(f64::min);
        Ok((traj, log))
    }

    fn track(&mut self, traj: &mut Trajectory, t: f64, z: &[f64], v0: f64, cfg: &SimConfig) {
        let v = self.cl.lyapunov.eval(&z[..self.n]);
        let s = self.spec_value(t, z, v);
        traj.max_violation = traj.max_violation.max(v - s);
        if let (Some(r), Some(m)) = (cfg.reference_rate, traj.max_reference_violation.as_mut()) {
            *m = m.max(v - v0 * (-r * t).exp());
        }
    }

    fn record(&mut self, traj: &mut Trajectory, t: f64, z: &[f64], epoch: usize, cfg: &SimConfig, v0: f64) {
        let x = &z[..self.n];
        self.cl.field.hold().error(&self.yk, x, &mut self.e);
        let v = self.cl.lyapunov.eval(x);
        let s = self.spec_value(t, z, v);
        if traj.times.is_empty() {
            traj.max_violation = traj.max_violation.max(v - s);
            if let (Some(r), Some(m)) = (cfg.reference_rate, traj.max_reference_violation.as_mut()) {
                *m = m.max(v - v0 * (-r * t).exp());
            }
        }
        if let Some(&last) = traj.times.last() {
            if t <= last {
                return;
            }
        }
        traj.times.push(t);
        traj.states.push(x.to_vec());
        traj.errors.push(self.e.clone());
        traj.v_values.push(v);
        traj.s_values.push(s);
        traj.residuals.push(s - v);
        traj.epochs.push(epoch);
        let mut aux = z[self.n..].to_vec();
        if let Some(ag) = self.agents.as_mut() {
            if let Some(dac) = &ag.dac {
                let base = self.n;
                ag.w.fill(&ag.net, x, &self.e, self.r, dac.c_beta);
                for i in 0..ag.n {
                    aux[dac.a_off - base + i] += ag.w.wxe[i];
                    aux[dac.z_off - base + i] += ag.w.wx[i];
                }
            }
        }
        traj.aux.push(aux);
    }
}

fn zeno(log: &EventLog, t: f64) -> EtcError {
    let k = log.inter_event_times.len();
    let tail = log.inter_event_times[k.saturating_sub(10)..].to_vec();
    EtcError::SuspectedZeno { events: log.trigger_times.len() - 1, t, tail }
}

struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(d: usize) -> Self {
        Self { k1: vec![0.0; d], k2: vec![0.0; d], k3: vec![0.0; d], k4: vec![0.0; d], tmp: vec![0.0; d] }
    }
}
