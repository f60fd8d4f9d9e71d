//! Matrix exponential by scaling and squaring with a degree-13 Padé
//! approximant (Higham's parameters).

use super::matrix::RealMatrix;
use crate::error::{EtcError, Result};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// 1-norm bound below which the [13/13] approximant is accurate to unit
/// roundoff.
const THETA_13: f64 = 5.371920351148152;

/// `exp(a * t)`.
pub fn mat_exp(a: &RealMatrix, t: f64) -> Result<RealMatrix> {
    if !a.is_square() {
        return Err(EtcError::Dimension {
            op: "mat_exp",
            expected: "square matrix".into(),
            got: format!("{}x{}", a.rows(), a.cols()),
        });
    }
    if !t.is_finite() {
        return Err(EtcError::Validation(format!("mat_exp: non-finite time {t}")));
    }
    let n = a.rows();
    let at = a.scale(t);
    let norm = at.norm_1();
    if norm == 0.0 {
        return Ok(RealMatrix::identity(n));
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let x = at.scale(0.5f64.powi(s));

    let ident = RealMatrix::identity(n);
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let x6 = &x4 * &x2;
    let b = &PADE13;

    let u_inner = &(&(&x6.scale(b[13]) + &x4.scale(b[11])) + &x2.scale(b[9])) * &x6;
    let u_tail = &(&(&(&x6.scale(b[7]) + &x4.scale(b[5])) + &x2.scale(b[3])) + &ident.scale(b[1]));
    let u = &x * &(&u_inner + u_tail);

    let v_inner = &(&(&x6.scale(b[12]) + &x4.scale(b[10])) + &x2.scale(b[8])) * &x6;
    let v_tail = &(&(&x6.scale(b[6]) + &x4.scale(b[4])) + &x2.scale(b[2])) + &ident.scale(b[0]);
    let v = &v_inner + &v_tail;

    let mut r = (&v - &u).solve(&(&v + &u))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_generator_gives_identity() {
        let e = mat_exp(&RealMatrix::zeros(2, 2), 5.0).unwrap();
        assert_eq!(e, RealMatrix::identity(2));
    }

    #[test]
    fn scalar_decay() {
        let e = mat_exp(&RealMatrix::diag(&[-1.0]), 1.0).unwrap();
        assert!((e[(0, 0)] - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rotation_generator() {
        let a = RealMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let t = 2.3;
        let e = mat_exp(&a, t).unwrap();
        assert!((e[(0, 0)] - t.cos()).abs() < 1e-14);
        assert!((e[(1, 0)] - t.sin()).abs() < 1e-14);
    }

    #[test]
    fn large_norm_uses_squaring() {
        let e = mat_exp(&RealMatrix::diag(&[-3.0, 2.0]), 10.0).unwrap();
        assert!(((e[(0, 0)] - (-30.0f64).exp()) / (-30.0f64).exp()).abs() < 1e-12);
        assert!(((e[(1, 1)] - 20.0f64.exp()) / 20.0f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn non_square_rejected() {
        let a = RealMatrix::zeros(2, 3);
        assert!(matches!(mat_exp(&a, 1.0), Err(EtcError::Dimension { .. })));
    }
}
