//! Benchmark fixtures shared by the criterion targets.

use petc_core::{derive_constants, LinearPlant, RealMatrix};

/// The scalar testbed `x' = x + u`, `u = -2 x`.
pub fn scalar_plant() -> LinearPlant {
    let s = RealMatrix::scalar;
    derive_constants(&s(1.0), &s(1.0), &s(-2.0), &s(1.0), Some(2.0)).expect("scalar testbed is stabilizable")
}

/// A Hurwitz-ish dense `n x n` matrix with deterministic entries.
pub fn dense(n: usize) -> RealMatrix {
    let data = (0..n * n).map(|k| ((k * 7919 % 23) as f64 - 11.0) / 11.0 - if k % (n + 1) == 0 { 3.0 } else { 0.0 }).collect();
    RealMatrix::from_row_major(n, n, data).expect("square")
}
