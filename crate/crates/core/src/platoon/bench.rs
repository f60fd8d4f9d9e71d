use std::fmt::Write as _;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::{build_platoon, Platoon, PlatoonConfig, PAPER_DECAY_RATE};
use crate::error::Result;
use crate::network::{omega_constants, rho_advisor, OmegaConstants, RhoBounds};
use crate::nonlinear::{Beta, ClassK, ConsensusInit, PerformanceSpec, TriggerPolicy};
use crate::sim::{simulate, ClosedLoop, EventLog, SimConfig, Trajectory};

/// Trigger designs compared in the benchmark table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    Derivative,
    Barrier,
    Dynamic,
    DynamicSmallDecay,
    Distributed,
}

impl Design {
    pub const ALL: [Design; 5] =
        [Design::Derivative, Design::Barrier, Design::Dynamic, Design::DynamicSmallDecay, Design::Distributed];

    pub fn name(self) -> &'static str {
        match self {
            Design::Derivative => "derivative",
            Design::Barrier => "barrier",
            Design::Dynamic => "dynamic",
            Design::DynamicSmallDecay => "dynamic_small_decay",
            Design::Distributed => "distributed",
        }
    }

    fn setup(self, cfg: &PlatoonConfig) -> (TriggerPolicy, PerformanceSpec) {
        let sigma = 1.0 - cfg.sigma_factor;
        let exp = PerformanceSpec::exponential(cfg.r);
        let online =
            |c: f64| PerformanceSpec::Online { theta: cfg.theta, iota: ClassK::linear(c), eta0: None };
        match self {
            Design::Derivative => (TriggerPolicy::DerivativeBased { sigma }, exp),
            Design::Barrier => (TriggerPolicy::PerformanceBarrier { sigma, beta: Beta::Linear(cfg.c_beta) }, exp),
            Design::Dynamic => (TriggerPolicy::Dynamic { sigma }, online(cfg.c_iota_fast)),
            Design::DynamicSmallDecay => (TriggerPolicy::Dynamic { sigma }, online(cfg.c_iota_slow)),
            Design::Distributed => (
                TriggerPolicy::DistributedPB {
                    c_beta: cfg.c_beta,
                    rho_a: cfg.rho_a,
                    rho_z: cfg.rho_z,
                    init: ConsensusInit::Average,
                },
                exp,
            ),
        }
    }
}

/// Outcome of one seeded trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub updates: Option<usize>,
    pub miet: Option<f64>,
    /// `max_t (V - V0 exp(-r t)) / V0`.
    pub max_violation: Option<f64>,
    /// `max_t (V - V0 exp(-r t))`.
    pub max_violation_abs: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub design: Design,
    /// Minimum over every event of every successful trial.
    pub empirical_miet: Option<f64>,
    /// Mean over the successful trials.
    pub avg_updates: f64,
    /// Largest relative violation `(V - V0 exp(-r t)) / V0`.
    pub max_perf_violation: f64,
    pub max_perf_violation_abs: f64,
    pub failures: usize,
    pub trials: Vec<TrialRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateSummary {
    pub pi: f64,
    pub c1: f64,
    pub c2: f64,
    pub l_f: f64,
    /// Smallest `-L_f V(x, 0) / V(x)` over 10^4 seeded states.
    pub sampled_decay_rate: f64,
    pub paper_decay_rate: f64,
}

/// Consensus-gain advice; the bounds are conservative and gains that violate
/// them frequently work too.
#[derive(Debug, Clone, Serialize)]
pub struct AdvisorReport {
    pub l_dv: f64,
    pub omega: Option<OmegaConstants>,
    pub bounds: Option<RhoBounds>,
    pub rho_a: f64,
    pub rho_z: f64,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkReport {
    pub config: PlatoonConfig,
    pub certificate: CertificateSummary,
    pub advisor: AdvisorReport,
    pub designs: Vec<DesignReport>,
}

fn sim_config(cfg: &PlatoonConfig) -> SimConfig {
    SimConfig {
        horizon: cfg.horizon,
        step_h: cfg.step_h,
        event_tol: cfg.event_tol,
        sample_stride: cfg.sample_stride,
        seed: cfg.seed,
        reference_rate: Some(cfg.r),
        ..SimConfig::default()
    }
}

/// Simulates one trial of one design.
pub fn simulate_design(
    cfg: &PlatoonConfig,
    cl: &ClosedLoop,
    design: Design,
    trial: usize,
) -> Result<(Trajectory, EventLog)> {
    let (policy, spec) = design.setup(cfg);
    simulate(cl, &policy, &spec, &cfg.initial_state(trial), &sim_config(cfg))
}

/// One row of the benchmark table; simulation errors are recorded, not raised.
pub fn run_design(cfg: &PlatoonConfig, pl: &Platoon, cl: &ClosedLoop, design: Design, trial: usize) -> TrialRow {
    let v0 = pl.v(&cfg.initial_state(trial));
    match simulate_design(cfg, cl, design, trial) {
        Ok((traj, log)) => TrialRow {
            trial,
            updates: Some(log.update_count),
            miet: log.empirical_miet,
            max_violation: traj.max_reference_violation.map(|m| m / v0),
            max_violation_abs: traj.max_reference_violation,
            error: None,
        },
        Err(e) => TrialRow {
            trial,
            updates: None,
            miet: None,
            max_violation: None,
            max_violation_abs: None,
            error: Some(e.to_string()),
        },
    }
}

fn aggregate(design: Design, mut trials: Vec<TrialRow>) -> DesignReport {
    trials.sort_by_key(|r| r.trial);
    let ok: Vec<_> = trials.iter().filter(|r| r.error.is_none()).collect();
    let avg_updates = if ok.is_empty() {
        f64::NAN
    } else {
        ok.iter().map(|r| r.updates.unwrap_or(0) as f64).sum::<f64>() / ok.len() as f64
    };
    DesignReport {
        design,
        empirical_miet: ok.iter().filter_map(|r| r.miet).reduce(f64::min),
        avg_updates,
        max_perf_violation: ok.iter().filter_map(|r| r.max_violation).fold(f64::NEG_INFINITY, f64::max),
        max_perf_violation_abs: ok.iter().filter_map(|r| r.max_violation_abs).fold(f64::NEG_INFINITY, f64::max),
        failures: trials.len() - ok.len(),
        trials,
    }
}

fn advisor(cfg: &PlatoonConfig, pl: &Platoon) -> Result<AdvisorReport> {
    let sys = pl.network(cfg.r, cfg.c_beta)?;
    let l_dv = 2.0 * pl.p_big().norm_2();
    let caveat = "advisory only: the bounds are conservative and smaller gains can work in practice";
    let (omega, bounds, note) = match omega_constants(&sys, pl.lipschitz(), l_dv) {
        Ok(om) => match rho_advisor(&sys, &om) {
            Ok(b) => (Some(om), Some(b), caveat.to_string()),
            Err(e) => (Some(om), None, format!("{caveat}; advisor unavailable: {e}")),
        },
        Err(e) => (None, None, format!("{caveat}; Omega constants unavailable: {e}")),
    };
    Ok(AdvisorReport { l_dv, omega, bounds, rho_a: cfg.rho_a, rho_z: cfg.rho_z, note })
}

/// Runs every design on `n_trials` seeded initial conditions (shared across
/// designs). Trials run in parallel; aggregation is order-independent.
pub fn run_benchmark(cfg: &PlatoonConfig) -> Result<BenchmarkReport> {
    run_designs(cfg, &Design::ALL)
}

pub fn run_designs(cfg: &PlatoonConfig, designs: &[Design]) -> Result<BenchmarkReport> {
    let pl = build_platoon(cfg)?;
    let cl = pl.closed_loop(cfg.r, cfg.c_beta)?;
    let q = pl.quad_constants()?;
    let certificate = CertificateSummary {
        pi: pl.pi,
        c1: q.c1,
        c2: q.c2,
        l_f: q.l_f,
        sampled_decay_rate: pl.sampled_decay_rate(10_000, cfg.seed),
        paper_decay_rate: PAPER_DECAY_RATE,
    };
    let jobs: Vec<(Design, usize)> =
        designs.iter().flat_map(|&d| (0..cfg.n_trials).map(move |t| (d, t))).collect();
    let rows: Vec<(Design, TrialRow)> =
        jobs.par_iter().map(|&(d, t)| (d, run_design(cfg, &pl, &cl, d, t))).collect();
    let designs = designs
        .iter()
        .map(|&d| aggregate(d, rows.iter().filter(|(dd, _)| *dd == d).map(|(_, r)| r.clone()).collect()))
        .collect();
    Ok(BenchmarkReport { config: cfg.clone(), certificate, advisor: advisor(cfg, &pl)?, designs })
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.16e}"))
}

impl BenchmarkReport {
    pub fn design(&self, d: Design) -> Option<&DesignReport> {
        self.designs.iter().find(|r| r.design == d)
    }

    /// Table with one row per design.
    pub fn table_csv(&self) -> String {
        let mut s = String::from("design,empirical_miet,avg_updates,max_perf_violation,failures\n");
        for d in &self.designs {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                d.design.name(),
                num(d.empirical_miet),
                num(Some(d.avg_updates)),
                num(Some(d.max_perf_violation)),
                d.failures
            );
        }
        s
    }

    /// Writes `report.json` and `table.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        std::fs::write(dir.join("report.json"), json + "\n")?;
        std::fs::write(dir.join("table.csv"), self.table_csv())
    }
}
