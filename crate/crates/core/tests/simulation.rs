use std::sync::Arc;

use petc_core::linear::{derive_constants, miet_linear, LinearBarrierParams, LinearPlant};
use petc_core::network::{
    omega_constants, rho_advisor, w_x, w_xe, BlockQuadraticAgents, NetworkConstants, NetworkSystem, NetworkTopology,
};
use petc_core::nonlinear::{Beta, ClassK, ConsensusInit, PerformanceSpec, TriggerPolicy};
use petc_core::numerics::{norm, RealMatrix};
use petc_core::platoon::{build_platoon, PlatoonConfig};
use petc_core::sim::{check_error_bound, simulate, ClosedLoop, EventLog, SimConfig, Trajectory};
use proptest::prelude::*;

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

#[test]
fn derivative_run_meets_exponential_spec() {
    let plant = scalar();
    let cl = plant.closed_loop().unwrap();
    let spec = PerformanceSpec::exponential(0.25);
    let cfg = SimConfig { horizon: 10.0, ..Default::default() };
    let (traj, log) = simulate(&cl, &TriggerPolicy::DerivativeBased { sigma: 0.25 }, &spec, &[1.0], &cfg).unwrap();
    for (t, v) in traj.times.iter().zip(&traj.v_values) {
        assert!(*v <= 0.5 * (-0.25 * t).exp() + 1e-9, "t = {t}");
    }
    assert!(log.update_count > 10);
    println!("updates {} miet {:?}", log.update_count, log.empirical_miet);
}

#[test]
fn zero_state_never_triggers() {
    let plant = scalar();
    let cl = plant.closed_loop().unwrap();
    let spec = PerformanceSpec::exponential(0.25);
    let cfg = SimConfig { horizon: 2.0, ..Default::default() };
    for policy in [
        TriggerPolicy::DerivativeBased { sigma: 0.25 },
        TriggerPolicy::FunctionBased,
        TriggerPolicy::PerformanceBarrier { sigma: 0.25, beta: Beta::Linear(1.0) },
    ] {
        let (traj, log) = simulate(&cl, &policy, &spec, &[0.0], &cfg).unwrap();
        assert_eq!(log.update_count, 0);
        assert!(traj.states.iter().all(|x| x[0] == 0.0));
    }
}

#[test]
fn barrier_run_respects_linear_miet() {
    let plant = scalar();
    let params = LinearBarrierParams { r: 0.25, sigma: 0.25, c_beta: 1.0 };
    let tau_p = miet_linear(&plant, &params).unwrap();
    let cl = plant.closed_loop().unwrap();
    let (traj, log) = simulate(
        &cl,
        &TriggerPolicy::PerformanceBarrier { sigma: 0.25, beta: Beta::Linear(1.0) },
        &PerformanceSpec::exponential(0.25),
        &[-0.7],
        &SimConfig { horizon: 10.0, ..Default::default() },
    )
    .unwrap();
    println!("tau_p {tau_p} miet {:?} updates {}", log.empirical_miet, log.update_count);
    assert!(log.empirical_miet.unwrap() >= tau_p - 1e-9);
    assert!(traj.max_violation <= 1e-9);
    let rep = check_error_bound(&traj, &log, plant.lipschitz());
    assert_eq!(rep.violations, 0, "{rep:?}");
}

fn policies() -> Vec<TriggerPolicy> {
    vec![
        TriggerPolicy::DerivativeBased { sigma: 0.25 },
        TriggerPolicy::FunctionBased,
        TriggerPolicy::PerformanceBarrier { sigma: 0.25, beta: Beta::Linear(1.0) },
    ]
}

/// `x + e` equals the held value of the update in force at every sample.
fn hold_identity_gap(traj: &Trajectory, log: &EventLog, sel: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..traj.len() {
        let held = &log.held[traj.epochs[i]];
        let hx = sel(&traj.states[i]);
        for ((h, x), e) in held.iter().zip(&hx).zip(&traj.errors[i]) {
            worst = worst.max((x + e - h).abs());
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scalar_runs_respect_spec_and_hold(x0 in -3.0..3.0f64) {
        prop_assume!(x0.abs() > 1e-3);
        let cl = scalar().closed_loop().unwrap();
        let cfg = SimConfig { horizon: 5.0, ..Default::default() };
        let tau_p = miet_linear(&scalar(), &LinearBarrierParams { r: 0.25, sigma: 0.25, c_beta: 1.0 }).unwrap();
        for p in policies() {
            let (traj, log) = simulate(&cl, &p, &PerformanceSpec::exponential(0.25), &[x0], &cfg).unwrap();
            for (v, s) in traj.v_values.iter().zip(&traj.s_values) {
                prop_assert!(*v <= s + 1e-9);
            }
            prop_assert!(hold_identity_gap(&traj, &log, |x| x.to_vec()) <= 1e-10);
            if let Some(m) = log.empirical_miet {
                prop_assert!(m > 0.0);
            }
            if matches!(p, TriggerPolicy::PerformanceBarrier { .. }) {
                prop_assert!(log.empirical_miet.unwrap() >= tau_p - cfg.event_tol);
                prop_assert!(log.update_count as f64 <= cfg.horizon / tau_p + 1.0);
            }
        }
    }

    #[test]
    fn dynamic_storage_stays_nonnegative(x0 in -3.0..3.0f64, theta in 0.1..2.0f64, c_iota in 0.05..2.0f64) {
        let cl = scalar().closed_loop().unwrap();
        let spec = PerformanceSpec::Online { theta, iota: ClassK::linear(c_iota), eta0: None };
        let cfg = SimConfig { horizon: 5.0, ..Default::default() };
        let (traj, _) = simulate(&cl, &TriggerPolicy::Dynamic { sigma: 0.25 }, &spec, &[x0], &cfg).unwrap();
        for a in &traj.aux {
            prop_assert!(a[0] >= -1e-12, "eta = {}", a[0]);
        }
    }
}

#[test]
fn halving_step_moves_trigger_times_little() {
    let cl = scalar().closed_loop().unwrap();
    let spec = PerformanceSpec::exponential(0.25);
    let policy = TriggerPolicy::PerformanceBarrier { sigma: 0.25, beta: Beta::Linear(1.0) };
    let base = SimConfig { horizon: 5.0, step_h: 1e-3, ..Default::default() };
    let (_, a) = simulate(&cl, &policy, &spec, &[1.3], &base).unwrap();
    let (_, b) = simulate(&cl, &policy, &spec, &[1.3], &SimConfig { step_h: 5e-4, ..base.clone() }).unwrap();
    assert_eq!(a.trigger_times.len(), b.trigger_times.len());
    for (s, t) in a.trigger_times.iter().zip(&b.trigger_times) {
        assert!((s - t).abs() < 10.0 * base.event_tol, "{s} vs {t}");
    }
}

#[test]
fn barrier_contact_satisfies_nagumo() {
    // Every run starts on the barrier (S(0) = V(x0)); later contacts occur
    // for small residual gains.
    let cl = scalar().closed_loop().unwrap();
    let r = 0.25;
    let mut contacts = 0;
    for c_beta in [1.0, 0.01, 0.0] {
        for x0 in [2.0, -0.4] {
            let policy = TriggerPolicy::PerformanceBarrier { sigma: 0.25, beta: Beta::Linear(c_beta) };
            let cfg = SimConfig { horizon: 10.0, ..Default::default() };
            let (traj, _) = simulate(&cl, &policy, &PerformanceSpec::exponential(r), &[x0], &cfg).unwrap();
            for i in 0..traj.len() - 1 {
                let dt = traj.times[i + 1] - traj.times[i];
                if dt < 1e-6 || traj.residuals[i] > 1e-6 * traj.s_values[i] {
                    continue;
                }
                contacts += 1;
                let dv = (traj.v_values[i + 1] - traj.v_values[i]) / dt;
                let ds = (traj.s_values[i + 1] - traj.s_values[i]) / dt;
                assert!(dv <= ds + 1e-4, "t = {}: dV/dt {dv} > dS/dt {ds}", traj.times[i]);
            }
        }
    }
    assert!(contacts >= 6);
}

#[test]
fn class_k_spec_decreases() {
    let cl = scalar().closed_loop().unwrap();
    let spec = PerformanceSpec::ClassKDerivative { h: ClassK::Power { c: 0.3, p: 1.5 }, s0: None };
    let policy = TriggerPolicy::PerformanceBarrier { sigma: 0.25, beta: Beta::Linear(1.0) };
    let (traj, _) = simulate(&cl, &policy, &spec, &[1.5], &SimConfig { horizon: 10.0, ..Default::default() }).unwrap();
    for w in traj.s_values.windows(2) {
        assert!(w[1] < w[0] && w[1] > 0.0);
    }
    for (v, s) in traj.v_values.iter().zip(&traj.s_values) {
        assert!(*v <= s + 1e-9);
    }
}

#[test]
fn platoon_hold_identity() {
    let cfg = PlatoonConfig { horizon: 20.0, ..PlatoonConfig::default() };
    let pl = build_platoon(&cfg).unwrap();
    let cl = pl.closed_loop(cfg.r, cfg.c_beta).unwrap();
    let policy = TriggerPolicy::PerformanceBarrier { sigma: 0.25, beta: Beta::Linear(1.0) };
    let sim = SimConfig { horizon: 20.0, sample_stride: 10, ..Default::default() };
    let (traj, log) = simulate(&cl, &policy, &PerformanceSpec::exponential(cfg.r), &cfg.initial_state(0), &sim).unwrap();
    let gap = hold_identity_gap(&traj, &log, |x| (0..pl.n).map(|i| x[4 * i + 3]).collect());
    assert!(gap <= 1e-10, "{gap}");
    assert!(traj.max_violation <= 1e-9);
}

fn three_agents() -> (ClosedLoop, NetworkSystem) {
    let eye = RealMatrix::identity(3);
    let plant = derive_constants(&eye, &eye, &eye.scale(-2.0), &eye, Some(2.0)).unwrap();
    let agents = BlockQuadraticAgents::uniform(3, RealMatrix::scalar(0.5), 0.25, plant.c_alpha, plant.c_gamma);
    let k = NetworkConstants { c_alpha: 0.5, c_gamma: 2.0, c1: 0.5, c2: 0.5, r: 0.25, sigma: 0.25, c_beta: 1.0 };
    let sys = NetworkSystem::new(NetworkTopology::path(3).unwrap(), Arc::new(agents), vec![1; 3], k).unwrap();
    let mut cl = plant.closed_loop().unwrap();
    cl.network = Some(Arc::new(sys.clone()));
    (cl, sys)
}

#[test]
fn distributed_run_invariants() {
    let (cl, sys) = three_agents();
    let om = omega_constants(&sys, cl.field.lipschitz(), 1.0).unwrap();
    let b = rho_advisor(&sys, &om).unwrap();
    let (rho_a, rho_z) = (1.1 * b.rho_a_min, 1.1 * b.rho_z_min);
    let policy = TriggerPolicy::DistributedPB { c_beta: 1.0, rho_a, rho_z, init: ConsensusInit::Average };
    let x0 = [1.0, -0.5, 0.3];
    let cfg = SimConfig { horizon: 10.0, step_h: 1e-4, ..Default::default() };
    let (traj, log) = simulate(&cl, &policy, &PerformanceSpec::exponential(0.25), &x0, &cfg).unwrap();
    assert!(log.update_count > 0);
    assert!(log.empirical_miet.unwrap() >= om.tau_d - cfg.event_tol);
    let n = 3;
    let avg = |w: &[f64]| w.iter().sum::<f64>() / n as f64;
    let l2 = sys.topology.lambda2();
    // Post-jump tracking error and V at the update in force.
    let mut window: Vec<(f64, f64)> = vec![(0.0, cl.lyapunov.eval(&x0))];
    for i in 0..traj.len() {
        let (x, e, aux) = (&traj.states[i], &traj.errors[i], &traj.aux[i]);
        let (a, z) = (&aux[..n], &aux[n..2 * n]);
        let wxe = w_xe(&sys, x, e);
        let s = traj.s_values[i];
        // Conservation: 1^T a = 1^T W^xe.
        let sum_gap = a.iter().sum::<f64>() - wxe.iter().sum::<f64>();
        assert!(sum_gap.abs() <= 1e-8, "t = {}: {sum_gap}", traj.times[i]);
        // Centralized inequality implied by every local one.
        assert!(wxe.iter().sum::<f64>() <= s + 1e-9 * s.max(1.0));
        assert!(traj.v_values[i] <= s + 1e-9);
        let k = traj.epochs[i];
        let eps: Vec<f64> = a.iter().map(|v| v - avg(&wxe)).collect();
        let (eps_k, v_k) = window[k];
        // The rate bound on W^xe, hence the envelope, covers [t_k, t_k + tau^d).
        let envelope = eps_k.max(om.omega_xe * v_k / (rho_a * l2 - 0.25));
        if traj.times[i] - log.trigger_times[k] < om.tau_d {
            assert!(norm(&eps) <= envelope + 1e-6, "t = {}: |eps_a| {} > {envelope}", traj.times[i], norm(&eps));
        }
        if i + 1 < traj.len() && traj.epochs[i + 1] == k + 1 && window.len() == k + 1 {
            // Pre-jump sample of update k + 1: a+ = z, e+ = 0.
            let wx = w_x(&sys, x);
            let post: Vec<f64> = z.iter().map(|v| v - avg(&wx)).collect();
            window.push((norm(&post), traj.v_values[i]));
        }
    }
}
