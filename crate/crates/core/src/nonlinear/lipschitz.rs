use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::numerics::norm;

/// Safety factor applied to the sampled difference-quotient maximum.
pub const LIPSCHITZ_SAFETY: f64 = 1.2;

/// Heuristic Lipschitz estimate from sampled difference quotients.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LipschitzEstimate {
    /// `raw * 1.2`.
    pub value: f64,
    /// Largest observed `|f(a) - f(b)| / |a - b|`.
    pub raw: f64,
    pub pairs: usize,
}

/// Samples `pairs` seeded point pairs uniformly in `[-radius, radius]^dim`
/// and reports the largest difference quotient times the safety factor. This
/// is a lower estimate of the true constant inflated by a margin, not a bound.
pub fn estimate_lipschitz<F: Fn(&[f64]) -> Vec<f64>>(f: F, dim: usize, radius: f64, pairs: usize, seed: u64) -> LipschitzEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw: f64 = 0.0;
    for _ in 0..pairs {
        let a: Vec<f64> = (0..dim).map(|_| rng.random_range(-radius..=radius)).collect();
        let b: Vec<f64> = (0..dim).map(|_| rng.random_range(-radius..=radius)).collect();
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let dn = norm(&d);
        if dn == 0.0 {
            continue;
        }
        let (fa, fb) = (f(&a), f(&b));
        let df: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| x - y).collect();
        raw = raw.max(norm(&df) / dn);
    }
    LipschitzEstimate { value: raw * LIPSCHITZ_SAFETY, raw, pairs }
}
