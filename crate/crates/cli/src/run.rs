use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use petc_core::linear::{lambda_min_curve, miet_linear_derivative, miet_window, MIET_GRID_POINTS};
use petc_core::network::{simulate_tracking, BlockQuadraticAgents, ExpReference};
use petc_core::nonlinear::{miet_deriv_exp, miet_exp_barrier};
use petc_core::numerics::eig_sym;
use petc_core::platoon::{build_platoon, simulate_design, Design};
use petc_core::sim::{write_events_csv, write_trajectory_csv};
use petc_core::{
    derive_constants, miet_linear, run_benchmark, Beta, ClassK, ClosedLoop, ConsensusInit, LinearBarrierParams,
    LinearPlant, NetworkConstants, NetworkSystem, NetworkTopology, PerformanceSpec, RealMatrix, SimConfig, TriggerPolicy,
};
use serde::Serialize;

use crate::config::{PolicySection, RunConfig, SpecSection, SystemSection};
use crate::error::CliError;

pub struct Context {
    pub out: PathBuf,
    /// Directory of the config file; relative paths inside it resolve here.
    pub base: Option<PathBuf>,
}

impl Context {
    /// Creates the output directory and echoes the effective config into it.
    fn prepare(&self, cfg: &RunConfig) -> Result<(), CliError> {
        fs::create_dir_all(&self.out)?;
        fs::write(self.out.join("effective_config.toml"), cfg.to_toml())?;
        Ok(())
    }

    fn file(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
        fs::write(self.out.join(name), text + "\n")?;
        Ok(())
    }

    fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        match &self.base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        }
    }
}

fn choose<'a>(key: &str, value: &str, options: &[&'a str]) -> Result<&'a str, CliError> {
    if let Some(o) = options.iter().find(|o| **o == value) {
        return Ok(o);
    }
    let near = options
        .iter()
        .map(|o| (strsim::jaro_winkler(value, o), o))
        .filter(|(s, _)| *s > 0.7)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map_or(String::new(), |(_, o)| format!("; did you mean `{o}`?"));
    Err(CliError::Config(format!("`{key}` must be one of {}, got `{value}`{near}", options.join(", "))))
}

fn matrix(key: &str, rows: &[Vec<f64>]) -> Result<RealMatrix, CliError> {
    RealMatrix::from_rows(rows).map_err(|e| CliError::Config(format!("`{key}`: {e}")))
}

fn policy(p: &PolicySection) -> Result<TriggerPolicy, CliError> {
    let init = match choose("policy.init", &p.init, &["average", "local"])? {
        "average" => ConsensusInit::Average,
        _ => ConsensusInit::Local,
    };
    let kinds = ["derivative", "function", "barrier", "dynamic", "distributed", "naive", "time-regularized"];
    let out = match choose("policy.kind", &p.kind, &kinds)? {
        "derivative" => TriggerPolicy::DerivativeBased { sigma: p.sigma },
        "function" => TriggerPolicy::FunctionBased,
        "barrier" => TriggerPolicy::PerformanceBarrier { sigma: p.sigma, beta: Beta::Linear(p.c_beta) },
        "dynamic" => TriggerPolicy::Dynamic { sigma: p.sigma },
        "distributed" => TriggerPolicy::DistributedPB { c_beta: p.c_beta, rho_a: p.rho_a, rho_z: p.rho_z, init },
        "naive" => TriggerPolicy::NaivePartitioned,
        _ => TriggerPolicy::TimeRegularized { tau_d: p.tau_d },
    };
    out.validate()?;
    Ok(out)
}

fn spec(s: &SpecSection) -> Result<PerformanceSpec, CliError> {
    let out = match choose("spec.kind", &s.kind, &["exponential", "online"])? {
        "exponential" => PerformanceSpec::exponential(s.r),
        _ => PerformanceSpec::Online { theta: s.theta, iota: ClassK::linear(s.c_iota), eta0: None },
    };
    out.validate()?;
    Ok(out)
}

fn topology(key: &str, kind: &str, n: usize) -> Result<NetworkTopology, CliError> {
    Ok(match choose(key, kind, &["path", "complete"])? {
        "path" => NetworkTopology::path(n)?,
        _ => NetworkTopology::complete(n)?,
    })
}

fn plant(sys: &SystemSection) -> Result<LinearPlant, CliError> {
    let (a, b, k, q) =
        (matrix("system.a", &sys.a)?, matrix("system.b", &sys.b)?, matrix("system.k", &sys.k)?, matrix("system.q", &sys.q)?);
    Ok(derive_constants(&a, &b, &k, &q, Some(sys.theta))?)
}

fn block_diag(m: &RealMatrix, n: usize) -> RealMatrix {
    let mut out = RealMatrix::zeros(n * m.rows(), n * m.cols());
    for i in 0..n {
        out.set_block(i * m.rows(), i * m.cols(), m);
    }
    out
}

/// `system.agents` decoupled copies of the linear plant, with the network
/// split attached for distributed policies.
fn linear_loop(cfg: &RunConfig) -> Result<ClosedLoop, CliError> {
    let sys = &cfg.system;
    if sys.agents == 0 {
        return Err(CliError::Config("`system.agents` must be at least 1".into()));
    }
    let one = plant(sys)?;
    let n = sys.agents;
    let big = derive_constants(
        &block_diag(&one.a, n),
        &block_diag(&one.b, n),
        &block_diag(&one.k, n),
        &block_diag(&one.q, n),
        Some(sys.theta),
    )?;
    let ev = eig_sym(&one.p)?;
    let constants = NetworkConstants {
        c_alpha: one.c_alpha,
        c_gamma: one.c_gamma,
        c1: ev[0],
        c2: ev[ev.len() - 1],
        r: cfg.spec.r,
        sigma: cfg.policy.sigma,
        c_beta: cfg.policy.c_beta,
    };
    let agents = BlockQuadraticAgents::uniform(n, one.p.clone(), cfg.policy.sigma, one.c_alpha, one.c_gamma);
    let net = NetworkSystem::new(
        topology("system.topology", &sys.topology, n)?,
        Arc::new(agents),
        vec![one.dim(); n],
        constants,
    )?;
    let mut cl = big.closed_loop()?;
    cl.network = Some(Arc::new(net));
    Ok(cl)
}

#[derive(Serialize)]
struct SimSummary {
    policy: &'static str,
    updates: usize,
    empirical_miet: Option<f64>,
    /// `max_t V - S` over every integration step.
    max_violation: f64,
    /// `max_t V - V(x0) exp(-r t)` for exponential specs.
    max_reference_violation: Option<f64>,
    steps: usize,
}

pub fn simulate(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let pol = policy(&cfg.policy)?;
    let sp = spec(&cfg.spec)?;
    ctx.prepare(cfg)?;
    let (cl, x0) = match choose("system.kind", &cfg.system.kind, &["linear", "platoon"])? {
        "linear" => (linear_loop(cfg)?, cfg.system.x0.clone()),
        _ => {
            cfg.platoon.validate()?;
            let pl = build_platoon(&cfg.platoon)?;
            (pl.closed_loop(cfg.spec.r, cfg.policy.c_beta)?, cfg.platoon.initial_state(cfg.system.trial))
        }
    };
    let s = &cfg.sim;
    let sim = SimConfig {
        horizon: s.horizon,
        step_h: s.step_h,
        event_tol: s.event_tol,
        sample_stride: s.sample_stride,
        seed: s.seed,
        max_events: s.max_events,
        divergence_bound: s.divergence_bound,
        reference_rate: sp.rate(),
    };
    let (traj, log) = petc_core::simulate(&cl, &pol, &sp, &x0, &sim)?;
    let mut w = ctx.file("trajectory.csv")?;
    write_trajectory_csv(&traj, &mut w)?;
    w.flush()?;
    let mut w = ctx.file("events.csv")?;
    write_events_csv(&log, &mut w)?;
    w.flush()?;
    let summary = SimSummary {
        policy: pol.name(),
        updates: log.update_count,
        empirical_miet: log.empirical_miet,
        max_violation: traj.max_violation,
        max_reference_violation: traj.max_reference_violation,
        steps: traj.steps,
    };
    ctx.json("summary.json", &summary)?;
    println!(
        "{}: {} updates, empirical MIET {}, max V - S {:.3e}",
        summary.policy,
        summary.updates,
        summary.empirical_miet.map_or("-".into(), |m| format!("{m:.6}")),
        summary.max_violation
    );
    Ok(())
}

#[derive(Serialize)]
struct MietReport {
    /// Derivative-based bound for exponential specs.
    tau_d: f64,
    /// Barrier bound from the exponential condition.
    tau_exp: f64,
    /// Linear barrier MIET from the matrix condition.
    tau_p: f64,
    /// The same condition with `c_beta = 0`.
    tau_p_derivative: f64,
    l_f: f64,
}

pub fn miet(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    choose("system.kind", &cfg.system.kind, &["linear"])?;
    spec(&SpecSection { kind: "exponential".into(), ..cfg.spec.clone() })?;
    ctx.prepare(cfg)?;
    let p = plant(&cfg.system)?;
    let params = LinearBarrierParams { r: cfg.spec.r, sigma: cfg.policy.sigma, c_beta: cfg.policy.c_beta };
    params.validate(&p)?;
    let q = p.quad_constants()?;
    let report = MietReport {
        tau_d: miet_deriv_exp(&q, params.sigma, params.r)?,
        tau_exp: miet_exp_barrier(&q, params.sigma, params.r, params.c_beta)?,
        tau_p: miet_linear(&p, &params)?,
        tau_p_derivative: miet_linear_derivative(&p, &params)?,
        l_f: q.l_f,
    };
    ctx.json("miet.json", &report)?;
    let mut w = ctx.file("lambda_min.csv")?;
    writeln!(w, "tau,lambda_min")?;
    for (t, l) in lambda_min_curve(&p, &params, miet_window(&p), MIET_GRID_POINTS)? {
        writeln!(w, "{t:.16e},{l:.16e}")?;
    }
    w.flush()?;
    println!("tau_d = {:.9}", report.tau_d);
    println!("tau_exp = {:.9}", report.tau_exp);
    println!("tau_p = {:.9}", report.tau_p);
    println!("tau_p (c_beta = 0) = {:.9}", report.tau_p_derivative);
    Ok(())
}

pub fn benchmark(cfg: &RunConfig, ctx: &Context, trajectories: bool) -> Result<(), CliError> {
    let pc = &cfg.platoon;
    pc.validate()?;
    ctx.prepare(cfg)?;
    let report = run_benchmark(pc)?;
    report.write(&ctx.out)?;
    if trajectories {
        let pl = build_platoon(pc)?;
        let cl = pl.closed_loop(pc.r, pc.c_beta)?;
        for d in Design::ALL {
            match simulate_design(pc, &cl, d, 0) {
                Ok((traj, _)) => {
                    let mut w = ctx.file(&format!("trajectory_{}.csv", d.name()))?;
                    write_trajectory_csv(&traj, &mut w)?;
                    w.flush()?;
                }
                Err(e) => eprintln!("petc: no trajectory for {}: {e}", d.name()),
            }
        }
    }
    print!("{}", report.table_csv());
    let failed: usize = report.designs.iter().map(|d| d.failures).sum();
    if failed > 0 {
        eprintln!("petc: {failed} trial(s) aborted; see report.json");
    }
    Ok(())
}

#[derive(Serialize)]
struct TrackingSummary {
    lambda2: f64,
    /// `max_t |eps(t)| - bound(t)`.
    max_excess: f64,
    within_bound: bool,
}

pub fn consensus_check(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let c = &cfg.consensus;
    let topo = if c.edges.is_empty() {
        topology("consensus.topology", &c.topology, c.n_agents)?
    } else {
        let path = ctx.resolve(&c.edges);
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("cannot read edge list {}: {e}", path.display())))?;
        NetworkTopology::parse_edge_list(&text)?
    };
    let n = topo.n_agents();
    if c.w0.len() != n {
        return Err(CliError::Config(format!("`consensus.w0` needs {n} entries, got {}", c.w0.len())));
    }
    if !(c.rate > 0.0 && c.rho > 0.0) {
        return Err(CliError::Config("`consensus.rate` and `consensus.rho` must be positive".into()));
    }
    ctx.prepare(cfg)?;
    let y0 = if c.y0.is_empty() { vec![c.w0.iter().sum::<f64>() / n as f64; n] } else { c.y0.clone() };
    let w = ExpReference { w0: c.w0.clone(), rate: c.rate };
    let samples = simulate_tracking(&topo, &w, w.c_w_dot(), c.rate, c.rho, &y0, c.horizon, c.h, c.stride)?;
    let mut out = ctx.file("tracking.csv")?;
    writeln!(out, "t,eps_norm,bound")?;
    for s in &samples {
        writeln!(out, "{:.16e},{:.16e},{:.16e}", s.t, s.eps_norm, s.bound)?;
    }
    out.flush()?;
    let max_excess = samples.iter().map(|s| s.eps_norm - s.bound).fold(f64::NEG_INFINITY, f64::max);
    let summary = TrackingSummary { lambda2: topo.lambda2(), max_excess, within_bound: max_excess <= 1e-6 };
    ctx.json("summary.json", &summary)?;
    println!(
        "lambda2 = {:.6}, max |eps| - bound = {max_excess:.3e} ({})",
        summary.lambda2,
        if summary.within_bound { "within bound" } else { "bound exceeded" }
    );
    Ok(())
}
