use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use petc_bench::{dense, scalar_plant};
use petc_core::numerics::mat_exp;
use petc_core::{miet_linear, simulate, LinearBarrierParams, PerformanceSpec, SimConfig, TriggerPolicy, Beta};

fn kernels(c: &mut Criterion) {
    for n in [4, 16] {
        let a = dense(n);
        c.bench_function(&format!("mat_exp_{n}"), |b| b.iter(|| mat_exp(black_box(&a), 0.3).unwrap()));
    }

    let plant = scalar_plant();
    let params = LinearBarrierParams { r: 0.25, sigma: 0.25, c_beta: 1.0 };
    c.bench_function("miet_linear_scalar", |b| b.iter(|| miet_linear(black_box(&plant), &params).unwrap()));

    let cl = plant.closed_loop().unwrap();
    let policy = TriggerPolicy::PerformanceBarrier { sigma: 0.25, beta: Beta::Linear(1.0) };
    let spec = PerformanceSpec::exponential(0.25);
    let cfg = SimConfig { horizon: 5.0, reference_rate: Some(0.25), ..SimConfig::default() };
    c.bench_function("simulate_barrier_5s", |b| b.iter(|| simulate(&cl, &policy, &spec, black_box(&[1.0]), &cfg).unwrap()));
}

criterion_group!(benches, kernels);
criterion_main!(benches);
