use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::class_k::ClassK;
use crate::error::{EtcError, Result};
use crate::numerics::norm;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type PairFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Upper surrogate `g(x, e)` of the Lie derivative of `V`.
#[derive(Clone)]
pub enum Surrogate {
    /// `(sigma - 1) c_alpha |x|^2 + c_gamma |e|^2`.
    Quadratic { c_alpha: f64, c_gamma: f64 },
    /// `(sigma - 1) alpha(|x|) + gamma(|e|)`.
    ClassK { alpha: ClassK, gamma: ClassK },
    /// Any surrogate with its margin already built in; `sigma` is ignored.
    Custom(PairFn),
}

impl Surrogate {
    pub fn eval(&self, sigma: f64, x: &[f64], e: &[f64]) -> f64 {
        match self {
            Surrogate::Quadratic { c_alpha, c_gamma } => {
                let nx: f64 = x.iter().map(|v| v * v).sum();
                let ne: f64 = e.iter().map(|v| v * v).sum();
                (sigma - 1.0) * c_alpha * nx + c_gamma * ne
            }
            Surrogate::ClassK { alpha, gamma } => (sigma - 1.0) * alpha.eval(norm(x)) + gamma.eval(norm(e)),
            Surrogate::Custom(f) => f(x, e),
        }
    }
}

impl fmt::Debug for Surrogate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Surrogate::Quadratic { c_alpha, c_gamma } => write!(f, "Quadratic({c_alpha}, {c_gamma})"),
            Surrogate::ClassK { alpha, gamma } => write!(f, "ClassK({alpha:?}, {gamma:?})"),
            Surrogate::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// Constants of the quadratic (exponential-stability) case:
/// `c1|x|^2 <= V <= c2|x|^2`, `|grad V| <= c3|x|`, `|f| <= ...`, with `L_f`
/// the Lipschitz constant of the closed-loop field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c_alpha: f64,
    pub c_gamma: f64,
    pub l_f: f64,
}

/// ISS Lyapunov certificate with respect to the hold error.
#[derive(Clone)]
pub struct IssCertificate {
    pub v: ScalarFn,
    pub grad_v: GradFn,
    pub alpha: ClassK,
    pub gamma: ClassK,
    pub alpha_inv: ClassK,
    pub l_gamma: f64,
    pub l_alpha_inv: f64,
    pub quad: Option<QuadConstants>,
}

impl IssCertificate {
    /// Certificate for `V = x^T P x` with the given quadratic constants.
    pub fn quadratic(p: crate::numerics::RealMatrix, q: QuadConstants) -> Self {
        let p1 = p.clone();
        let p2 = p;
        IssCertificate {
            v: Arc::new(move |x| p1.quad_form(x)),
            grad_v: Arc::new(move |x| p2.mul_vec(x).into_iter().map(|v| 2.0 * v).collect()),
            alpha: ClassK::Power { c: q.c_alpha, p: 2.0 },
            gamma: ClassK::Power { c: q.c_gamma, p: 2.0 },
            alpha_inv: ClassK::Power { c: 1.0 / q.c_alpha.sqrt(), p: 0.5 },
            l_gamma: 2.0 * q.c_gamma,
            l_alpha_inv: 1.0 / q.c_alpha.sqrt(),
            quad: Some(q),
        }
    }

    pub fn quad_constants(&self) -> Result<QuadConstants> {
        self.quad
            .ok_or_else(|| EtcError::Parameter("certificate has no quadratic constants".into()))
    }

    /// Default surrogate `(sigma - 1) alpha(|x|) + gamma(|e|)`.
    pub fn surrogate(&self) -> Surrogate {
        match self.quad {
            Some(q) => Surrogate::Quadratic { c_alpha: q.c_alpha, c_gamma: q.c_gamma },
            None => Surrogate::ClassK { alpha: self.alpha.clone(), gamma: self.gamma.clone() },
        }
    }

    /// Checks `V(0) = 0`, positivity, and (if present) the quadratic sandwich
    /// on `samples` seeded states drawn uniformly from `[-scale, scale]^dim`.
    pub fn check(&self, dim: usize, samples: usize, scale: f64, seed: u64) -> Result<()> {
        let zero = vec![0.0; dim];
        let v0 = (self.v)(&zero);
        if v0.abs() > 1e-12 {
            return Err(EtcError::Validation(format!("V(0) = {v0}, expected 0")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-scale..scale)).collect();
            let nx2: f64 = x.iter().map(|v| v * v).sum();
            if nx2 == 0.0 {
                continue;
            }
            let v = (self.v)(&x);
            if !(v > 0.0) {
                return Err(EtcError::Validation(format!("V not positive at sampled state (V = {v})")));
            }
            if let Some(q) = self.quad {
                let tol = 1e-12 * nx2.max(1.0);
                if v < q.c1 * nx2 - tol || v > q.c2 * nx2 + tol {
                    return Err(EtcError::Validation(format!(
                        "sandwich c1|x|^2 <= V <= c2|x|^2 violated: {} <= {v} <= {}",
                        q.c1 * nx2,
                        q.c2 * nx2
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for IssCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IssCertificate")
            .field("alpha", &self.alpha)
            .field("gamma", &self.gamma)
            .field("l_gamma", &self.l_gamma)
            .field("l_alpha_inv", &self.l_alpha_inv)
            .field("quad", &self.quad)
            .finish_non_exhaustive()
    }
}
