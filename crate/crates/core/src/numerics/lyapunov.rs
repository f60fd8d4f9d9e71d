use super::eig::eig_sym_unchecked;
use super::matrix::RealMatrix;
use crate::error::{EtcError, Result};

/// Solves `A^T P + P A + Q = 0` for symmetric positive-definite `P`.
///
/// The equation is vectorized into an `n^2 x n^2` linear system; the systems
/// handled here are small. A non-Hurwitz `A` shows up either as a singular
/// system or as a solution that is not positive definite.
pub fn solve_lyapunov(a: &RealMatrix, q: &RealMatrix) -> Result<RealMatrix> {
    if !a.is_square() || !q.is_square() || a.rows() != q.rows() {
        return Err(EtcError::Dimension {
            op: "solve_lyapunov",
            expected: "square A and Q of equal size".into(),
            got: format!("A {}x{}, Q {}x{}", a.rows(), a.cols(), q.rows(), q.cols()),
        });
    }
    if !q.is_symmetric(1e-12) {
        return Err(EtcError::Validation("solve_lyapunov: Q is not symmetric".into()));
    }
    let qmin = eig_sym_unchecked(q)[0];
    if qmin <= 0.0 {
        return Err(EtcError::Validation(format!(
            "solve_lyapunov: Q is not positive definite (lambda_min = {qmin})"
        )));
    }

    let n = a.rows();
    let nn = n * n;
    let mut kron = RealMatrix::zeros(nn, nn);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for k in 0..n {
                // (A^T P)_{ij} = sum_k A_{ki} P_{kj}
                kron[(row, k * n + j)] += a[(k, i)];
                // (P A)_{ij} = sum_k P_{ik} A_{kj}
                kron[(row, i * n + k)] += a[(k, j)];
            }
        }
    }
    let rhs = RealMatrix::from_row_major(nn, 1, q.as_slice().iter().map(|v| -v).collect())?;
    let vec_p = kron
        .solve(&rhs)
        .map_err(|_| EtcError::Infeasible("Lyapunov operator is singular: A is not Hurwitz".into()))?;
    let p = RealMatrix::from_row_major(n, n, vec_p.as_slice().to_vec())?.symmetrize();

    let ev = eig_sym_unchecked(&p);
    if ev[0] <= 0.0 {
        return Err(EtcError::Infeasible(format!(
            "Lyapunov solution not positive definite (lambda_min = {}): A is not Hurwitz",
            ev[0]
        )));
    }
    Ok(p)
}

/// `|A^T P + P A + Q|_F`.
pub fn lyapunov_residual(a: &RealMatrix, p: &RealMatrix, q: &RealMatrix) -> f64 {
    let at = a.transpose();
    let r = &(&(&at * p) + &(p * a)) + q;
    r.norm_fro()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_case() {
        let p = solve_lyapunov(&RealMatrix::scalar(-1.0), &RealMatrix::scalar(1.0)).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn decoupled_case() {
        let a = RealMatrix::identity(2).scale(-1.0);
        let p = solve_lyapunov(&a, &RealMatrix::identity(2)).unwrap();
        assert!((&p - &RealMatrix::identity(2).scale(0.5)).max_abs() < 1e-15);
    }

    #[test]
    fn non_normal_case_has_small_residual() {
        let a = RealMatrix::from_rows(&[vec![-1.0, 10.0, 0.0], vec![0.0, -2.0, 3.0], vec![-0.5, 0.0, -4.0]])
            .unwrap();
        let q = RealMatrix::identity(3);
        let p = solve_lyapunov(&a, &q).unwrap();
        assert!(lyapunov_residual(&a, &p, &q) <= 1e-9 * q.norm_fro());
        assert!(p.is_symmetric(1e-12));
    }

    #[test]
    fn unstable_rejected() {
        let a = RealMatrix::diag(&[1.0, -1.0]);
        let err = solve_lyapunov(&a, &RealMatrix::identity(2)).unwrap_err();
        assert!(matches!(err, EtcError::Infeasible(_)));
    }

    #[test]
    fn asymmetric_q_rejected() {
        let a = RealMatrix::diag(&[-1.0, -1.0]);
        let q = RealMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(solve_lyapunov(&a, &q), Err(EtcError::Validation(_))));
    }
}
