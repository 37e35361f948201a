//! Eigenvalues of Hermitian matrices by cyclic Jacobi rotations on the real
//! symmetric embedding `[[Re A, −Im A], [Im A, Re A]]`.

use crate::error::{Error, Result};

use super::matrix::ComplexMatrix;

pub const EIGEN_TOLERANCE: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order. The input must be Hermitian within the
/// relative tolerance; only its Hermitian part is used.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::Dimension("eigenvalues need a square matrix".into()));
    }
    if !m.is_hermitian() {
        return Err(Error::Input(format!(
            "matrix is not Hermitian (residual {:.3e})",
            m.hermitian_residual()
        )));
    }
    let n = m.rows();
    let h = m.hermitian_part();
    let size = 2 * n;
    let mut a = vec![vec![0.0f64; size]; size];
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            a[i][j] = z.re;
            a[i + n][j + n] = z.re;
            a[i][j + n] = -z.im;
            a[i + n][j] = z.im;
        }
    }
    let mut values = jacobi_symmetric(a)?;
    values.sort_by(f64::total_cmp);
    // Each eigenvalue appears twice in the embedding.
    Ok(values.into_iter().step_by(2).collect())
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?[0])
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn operator_norm(m: &ComplexMatrix) -> Result<f64> {
    let values = hermitian_eigenvalues(m)?;
    Ok(values.iter().map(|v| v.abs()).fold(0.0, f64::max))
}

fn off_diagonal_norm(a: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if i != j {
                s += v * v;
            }
        }
    }
    s.sqrt()
}

fn jacobi_symmetric(mut a: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let n = a.len();
    let scale = a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    if scale == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let target = EIGEN_TOLERANCE * scale;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= target {
            return Ok((0..n).map(|i| a[i][i]).collect());
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
                for k in 0..n {
                    let (pk, qk) = (a[p][k], a[q][k]);
                    a[p][k] = c * pk - s * qk;
                    a[q][k] = s * pk + c * qk;
                }
            }
        }
    }
    if off_diagonal_norm(&a) <= target {
        return Ok((0..n).map(|i| a[i][i]).collect());
    }
    Err(Error::NoConvergence(MAX_SWEEPS))
}
