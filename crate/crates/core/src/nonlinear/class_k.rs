use std::fmt;
use std::sync::Arc;

use crate::error::{EtcError, Result};

/// Scalar class-K function, extended oddly to negative arguments so that
/// round-off in a residual never produces NaN.
#[derive(Clone)]
pub enum ClassK {
    /// `c s`
    Linear { c: f64 },
    /// `c s^p`
    Power { c: f64, p: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl ClassK {
    pub fn linear(c: f64) -> Self {
        ClassK::Linear { c }
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s < 0.0 {
            return -self.eval(-s);
        }
        match self {
            ClassK::Linear { c } => c * s,
            ClassK::Power { c, p } => c * s.powf(*p),
            ClassK::Custom(f) => f(s),
        }
    }

    /// Structural check for the closed-form variants.
    pub fn validate(&self, what: &str) -> Result<()> {
        let ok = match self {
            ClassK::Linear { c } => c.is_finite() && *c > 0.0,
            ClassK::Power { c, p } => c.is_finite() && p.is_finite() && *c > 0.0 && *p > 0.0,
            ClassK::Custom(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(EtcError::Validation(format!("{what}: not a class-K function ({self:?})")))
        }
    }
}

impl fmt::Debug for ClassK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassK::Linear { c } => write!(f, "Linear({c})"),
            ClassK::Power { c, p } => write!(f, "Power({c}, {p})"),
            ClassK::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_extension() {
        let k = ClassK::Power { c: 2.0, p: 2.0 };
        assert_eq!(k.eval(3.0), 18.0);
        assert_eq!(k.eval(-3.0), -18.0);
        assert_eq!(k.eval(0.0), 0.0);
    }

    #[test]
    fn rejects_nonpositive_gain() {
        assert!(ClassK::linear(0.0).validate("beta").is_err());
        assert!(ClassK::linear(1.0).validate("beta").is_ok());
    }
}
