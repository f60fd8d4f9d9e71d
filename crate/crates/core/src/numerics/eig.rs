use super::matrix::{RealMatrix, RealVector};
use crate::error::{EtcError, Result};

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn eig_sym(m: &RealMatrix) -> Result<RealVector> {
    if !m.is_square() {
        return Err(EtcError::Dimension {
            op: "eig_sym",
            expected: "square matrix".into(),
            got: format!("{}x{}", m.rows(), m.cols()),
        });
    }
    if !m.is_symmetric(1e-10) {
        return Err(EtcError::Validation("eig_sym: input is not symmetric".into()));
    }
    Ok(eig_sym_unchecked(m))
}

pub fn lambda_min(m: &RealMatrix) -> Result<f64> {
    Ok(eig_sym(m)?[0])
}

/// Cyclic Jacobi rotations on the symmetrized input.
pub(crate) fn eig_sym_unchecked(m: &RealMatrix) -> RealVector {
    let n = m.rows();
    let sym = m.symmetrize();
    let mut a: Vec<f64> = sym.as_slice().to_vec();
    let scale = sym.norm_fro().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_spectrum() {
        let ev = eig_sym(&RealMatrix::identity(3)).unwrap();
        assert_eq!(ev.len(), 3);
        for v in ev {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn two_vertex_laplacian() {
        let l = RealMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let ev = eig_sym(&l).unwrap();
        assert!(ev[0].abs() < 1e-14);
        assert!((ev[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn characteristic_polynomial_of_tridiagonal() {
        // tridiag(-1, 2, -1) of size n has eigenvalues 2 - 2cos(k pi / (n+1))
        let n = 6;
        let mut m = RealMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 2.0;
            if i + 1 < n {
                m[(i, i + 1)] = -1.0;
                m[(i + 1, i)] = -1.0;
            }
        }
        let ev = eig_sym(&m).unwrap();
        for (k, v) in ev.iter().enumerate() {
            let want = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - want).abs() < 1e-12, "{v} vs {want}");
        }
    }

    #[test]
    fn asymmetric_rejected() {
        let m = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(eig_sym(&m), Err(EtcError::Validation(_))));
    }
}
