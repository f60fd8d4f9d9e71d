use crate::error::{EtcError, Result};

/// Search interval for a scalar root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64, tol: f64) -> Result<Self> {
        if !(lo < hi) || !(tol > 0.0) {
            return Err(EtcError::Validation(format!(
                "bracket requires lo < hi and tol > 0, got [{lo}, {hi}] tol {tol}"
            )));
        }
        Ok(Self { lo, hi, tol })
    }
}

/// Bisection on a sign-changing bracket. Returns the midpoint of the final
/// interval, whose width is at most `br.tol`.
pub fn bisect_root<F: FnMut(f64) -> f64>(mut f: F, br: Bracket) -> Result<f64> {
    let (mut lo, mut hi) = (br.lo, br.hi);
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(EtcError::Bracketing { lo, hi, f_lo, f_hi });
    }
    while hi - lo > br.tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of a grid scan for the first sign change.
#[derive(Debug, Clone)]
pub struct Scan {
    /// First bracketing grid cell, if any.
    pub bracket: Option<(f64, f64)>,
    /// Samples visited, including the one past the crossing.
    pub curve: Vec<(f64, f64)>,
}

/// Evaluates `f` on `points + 1` equally spaced nodes of `[lo, hi]`, stopping
/// at the first node where the sign differs from `f(lo)`.
pub fn scan_first_crossing<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, points: usize) -> Scan {
    let points = points.max(1);
    let step = (hi - lo) / points as f64;
    let f0 = f(lo);
    let mut curve = vec![(lo, f0)];
    let mut prev = lo;
    for i in 1..=points {
        let t = if i == points { hi } else { lo + step * i as f64 };
        let v = f(t);
        curve.push((t, v));
        if v == 0.0 || v.signum() != f0.signum() {
            return Scan {
                bracket: Some((prev, t)),
                curve,
            };
        }
        prev = t;
    }
    Scan { bracket: None, curve }
}

/// Smallest root of `f` on `[lo, hi]`: grid scan then bisection.
pub fn first_root<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, points: usize, tol: f64) -> Result<f64> {
    let scan = scan_first_crossing(&mut f, lo, hi, points);
    match scan.bracket {
        Some((a, b)) => bisect_root(&mut f, Bracket::new(a, b, tol)?),
        None => Err(EtcError::WindowExhausted {
            window: hi,
            curve: scan.curve,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_root() {
        let r = bisect_root(|x| x - 1.0, Bracket::new(0.0, 2.0, 1e-12).unwrap()).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_two() {
        let br = Bracket::new(1.0, 2.0, 1e-12).unwrap();
        let r = bisect_root(|x| x * x - 2.0, br).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() <= 1e-12);
    }

    #[test]
    fn no_sign_change() {
        let br = Bracket::new(0.0, 1.0, 1e-9).unwrap();
        assert!(matches!(bisect_root(|x| x + 1.0, br), Err(EtcError::Bracketing { .. })));
    }

    #[test]
    fn bad_bracket() {
        assert!(Bracket::new(1.0, 1.0, 1e-3).is_err());
        assert!(Bracket::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn first_root_picks_smallest() {
        // roots at 0.3 and 0.7
        let r = first_root(|x| (x - 0.3) * (x - 0.7), 0.0, 1.0, 2000, 1e-12).unwrap();
        assert!((r - 0.3).abs() < 1e-10);
    }

    #[test]
    fn exhausted_window_reports_curve() {
        match first_root(|x| x + 1.0, 0.0, 1.0, 10, 1e-9) {
            Err(EtcError::WindowExhausted { curve, .. }) => assert_eq!(curve.len(), 11),
            other => panic!("unexpected {other:?}"),
        }
    }
}
