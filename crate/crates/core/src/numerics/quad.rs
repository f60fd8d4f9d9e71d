use crate::error::{EtcError, Result};

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`.
pub fn quad<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a <= b) {
        return Err(EtcError::Validation(format!("quad: need a <= b, got [{a}, {b}]")));
    }
    if !(tol > 0.0) {
        return Err(EtcError::Validation(format!("quad: tolerance must be positive, got {tol}")));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let mut converged = true;
    let v = recurse(&mut f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut converged);
    if converged && v.is_finite() {
        Ok(v)
    } else {
        Err(EtcError::Accuracy { estimate: v, tol })
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    converged: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *converged = false;
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, converged)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, converged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_integrand() {
        assert_eq!(quad(|_| 0.0, 0.0, 1.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn exponential() {
        let v = quad(f64::exp, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn cubic_is_exact() {
        let v = quad(|s| 2.0 * s * s * s - s + 3.0, -1.0, 2.0, 1e-12).unwrap();
        // 2/4 (16 - 1) - (4 - 1)/2 + 9
        let want = 7.5 - 1.5 + 9.0;
        assert!((v - want).abs() < 1e-12);
    }

    #[test]
    fn singular_integrand_fails() {
        let r = quad(|s| 1.0 / s, 0.0, 1.0, 1e-10);
        assert!(matches!(r, Err(EtcError::Accuracy { .. })));
    }
}
