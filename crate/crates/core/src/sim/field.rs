use std::fmt;
use std::sync::Arc;

use crate::error::{EtcError, Result};

pub type FieldFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;

/// Which part of the state the controller samples and holds. The hold error
/// is `e = y_k - H x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HoldMap {
    /// The whole state is held (`e = x_k - x`).
    Identity,
    /// Only the listed state components are held.
    Select(Vec<usize>),
}

impl HoldMap {
    pub fn dim(&self, dim_x: usize) -> usize {
        match self {
            HoldMap::Identity => dim_x,
            HoldMap::Select(idx) => idx.len(),
        }
    }

    /// `out = H x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        match self {
            HoldMap::Identity => out.copy_from_slice(x),
            HoldMap::Select(idx) => {
                for (o, &i) in out.iter_mut().zip(idx) {
                    *o = x[i];
                }
            }
        }
    }

    /// `out = y - H x`.
    pub fn error(&self, y: &[f64], x: &[f64], out: &mut [f64]) {
        match self {
            HoldMap::Identity => {
                for ((o, a), b) in out.iter_mut().zip(y).zip(x) {
                    *o = a - b;
                }
            }
            HoldMap::Select(idx) => {
                for ((o, a), &i) in out.iter_mut().zip(y).zip(idx) {
                    *o = a - x[i];
                }
            }
        }
    }
}

/// Closed-loop field `x' = f(x, e)` of a sample-and-hold implementation.
#[derive(Clone)]
pub struct VectorField {
    dim_x: usize,
    dim_e: usize,
    hold: HoldMap,
    lipschitz: f64,
    eval: FieldFn,
}

impl VectorField {
    pub fn new(dim_x: usize, hold: HoldMap, lipschitz: f64, eval: FieldFn) -> Result<Self> {
        if dim_x == 0 {
            return Err(EtcError::Validation("vector field needs a positive state dimension".into()));
        }
        if let HoldMap::Select(idx) = &hold {
            if idx.is_empty() || idx.iter().any(|&i| i >= dim_x) {
                return Err(EtcError::Validation(format!(
                    "hold indices {idx:?} must be nonempty and below {dim_x}"
                )));
            }
        }
        if !(lipschitz.is_finite() && lipschitz > 0.0) {
            return Err(EtcError::Validation(format!("lipschitz_L_f must be positive, got {lipschitz}")));
        }
        let dim_e = hold.dim(dim_x);
        Ok(Self { dim_x, dim_e, hold, lipschitz, eval })
    }

    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn dim_e(&self) -> usize {
        self.dim_e
    }

    pub fn hold(&self) -> &HoldMap {
        &self.hold
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn with_lipschitz(mut self, l_f: f64) -> Result<Self> {
        if !(l_f.is_finite() && l_f > 0.0) {
            return Err(EtcError::Validation(format!("lipschitz_L_f must be positive, got {l_f}")));
        }
        self.lipschitz = l_f;
        Ok(self)
    }

    #[inline]
    pub fn eval_into(&self, x: &[f64], e: &[f64], out: &mut [f64]) {
        (self.eval)(x, e, out)
    }

    pub fn eval(&self, x: &[f64], e: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim_x];
        (self.eval)(x, e, &mut out);
        out
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("dim_x", &self.dim_x)
            .field("dim_e", &self.dim_e)
            .field("hold", &self.hold)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}
