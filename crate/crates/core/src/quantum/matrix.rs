use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::Radix;

pub type C64 = Complex64;

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 {
            return Err(Error::Dimension("empty matrix".into()));
        }
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        Self::from_vec(r, c, rows.into_iter().flatten().collect())
    }

    pub fn from_real(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, a) in u.iter().enumerate() {
            for (j, b) in v.iter().enumerate() {
                m[(i, j)] = a * b.conj();
            }
        }
        m
    }

    /// `|e_i⟩⟨e_j|` in dimension `n`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(i, j)] = C64::new(1.0, 0.0);
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|z| z * factor)
    }

    pub fn scale_complex(&self, factor: C64) -> Self {
        self.map(|z| z * factor)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest `|A − A†|` entry.
    pub fn hermitian_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Hermitian within `1e−12 · max|entry|`.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian_residual() <= HERMITIAN_RELATIVE * self.max_abs()
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        m
    }

    /// Kronecker product, first factor slowest.
    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let mut m = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        m[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        m
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut m = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    m.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        Ok(m)
    }

    /// `tr(A B)` without forming the product.
    pub fn trace_product(&self, other: &ComplexMatrix) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// Traces out the subsystems listed in `traced` (0-based).
    pub fn partial_trace(&self, dims: &[usize], traced: &[usize]) -> Result<ComplexMatrix> {
        check_subsystems(self, dims, traced)?;
        if traced.is_empty() {
            return Err(Error::Dimension("nothing to trace out".into()));
        }
        let kept: Vec<usize> = (0..dims.len()).filter(|i| !traced.contains(i)).collect();
        let full = Radix::new(dims);
        let kept_radix = Radix::new(&kept.iter().map(|&i| dims[i]).collect::<Vec<_>>());
        let traced_radix = Radix::new(&traced.iter().map(|&i| dims[i]).collect::<Vec<_>>());
        let compose = |k: &[usize], t: &[usize]| {
            let mut digits = vec![0; dims.len()];
            for (&pos, &d) in kept.iter().zip(k) {
                digits[pos] = d;
            }
            for (&pos, &d) in traced.iter().zip(t) {
                digits[pos] = d;
            }
            full.encode(&digits)
        };
        let index: Vec<Vec<usize>> = kept_radix
            .iter()
            .map(|k| traced_radix.iter().map(|t| compose(&k, &t)).collect())
            .collect();
        let n = kept_radix.len();
        let mut out = Self::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] = index[r]
                    .iter()
                    .zip(&index[c])
                    .map(|(&i, &j)| self[(i, j)])
                    .sum();
            }
        }
        Ok(out)
    }

    /// Transposes the listed subsystems.
    pub fn partial_transpose(&self, dims: &[usize], sites: &[usize]) -> Result<ComplexMatrix> {
        check_subsystems(self, dims, sites)?;
        let full = Radix::new(dims);
        let n = self.rows;
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            let di = full.decode(i);
            for j in 0..n {
                let dj = full.decode(j);
                let (mut a, mut b) = (di.clone(), dj.clone());
                for &s in sites {
                    a[s] = dj[s];
                    b[s] = di[s];
                }
                out[(full.encode(&a), full.encode(&b))] = self[(i, j)];
            }
        }
        Ok(out)
    }
}

pub(crate) const HERMITIAN_RELATIVE: f64 = 1e-12;

fn check_subsystems(m: &ComplexMatrix, dims: &[usize], sites: &[usize]) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension("operator must be square".into()));
    }
    let total: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || total != m.rows {
        return Err(Error::Dimension(format!(
            "subsystem dimensions {:?} do not match size {}",
            dims, m.rows
        )));
    }
    let mut seen = vec![false; dims.len()];
    for &s in sites {
        if s >= dims.len() || seen[s] {
            return Err(Error::Dimension(format!("bad subsystem index {}", s)));
        }
        seen[s] = true;
    }
    Ok(())
}

/// Kronecker product of a list of factors.
pub fn tensor(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    let mut it = factors.iter();
    let first = (*it.next().expect("at least one factor")).clone();
    it.fold(first, |acc, m| acc.kron(m))
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("shape mismatch")
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self
                .row(i)
                .iter()
                .map(|z| format!("{:.4}{:+.4}i", z.re, z.im))
                .collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample(seed: u64, n: usize) -> ComplexMatrix {
        // Small deterministic pseudo-random fill.
        let mut x = seed;
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 33) as f64 / (1u64 << 31) as f64) - 0.5
        };
        let data = (0..n * n).map(|_| c(next(), next())).collect();
        ComplexMatrix::from_vec(n, n, data).unwrap()
    }

    #[test]
    fn identity_kron() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(i2.kron(&i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_trace_is_multiplicative() {
        let a = sample(1, 2);
        let b = sample(2, 3);
        let lhs = a.kron(&b).trace();
        let rhs = a.trace() * b.trace();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn kron_of_units_has_single_entry() {
        let e = ComplexMatrix::unit(2, 0, 0).kron(&ComplexMatrix::unit(2, 1, 1));
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i, j) == (1, 1) { 1.0 } else { 0.0 };
                assert_eq!(e[(i, j)], c(expected, 0.0));
            }
        }
    }

    #[test]
    fn partial_trace_of_product() {
        let a = sample(3, 2);
        let b = sample(4, 3);
        let ab = a.kron(&b);
        let left = ab.partial_trace(&[2, 3], &[1]).unwrap();
        assert!(left.max_abs_diff(&a.scale_complex(b.trace())) < 1e-12);
        let right = ab.partial_trace(&[2, 3], &[0]).unwrap();
        assert!(right.max_abs_diff(&b.scale_complex(a.trace())) < 1e-12);
    }

    #[test]
    fn sequential_partial_traces_compose() {
        let m = sample(5, 12);
        let dims = [2, 3, 2];
        let at_once = m.partial_trace(&dims, &[1, 2]).unwrap();
        let stepwise = m
            .partial_trace(&dims, &[2])
            .unwrap()
            .partial_trace(&[2, 3], &[1])
            .unwrap();
        assert!(at_once.max_abs_diff(&stepwise) < 1e-12);
        assert!((m.partial_trace(&dims, &[0]).unwrap().trace() - m.trace()).norm() < 1e-12);
    }

    #[test]
    fn partial_transpose_of_product_transposes_factor() {
        let a = sample(6, 2);
        let b = sample(7, 2);
        let pt = a.kron(&b).partial_transpose(&[2, 2], &[1]).unwrap();
        assert!(pt.max_abs_diff(&a.kron(&b.transpose())) < 1e-12);
        let full = a.kron(&b).partial_transpose(&[2, 2], &[0, 1]).unwrap();
        assert!(full.max_abs_diff(&a.kron(&b).transpose()) < 1e-12);
    }

    #[test]
    fn dimension_errors() {
        let m = sample(8, 4);
        assert!(m.partial_trace(&[2, 3], &[0]).is_err());
        assert!(m.partial_trace(&[2, 2], &[2]).is_err());
        assert!(m.partial_trace(&[2, 2], &[]).is_err());
        assert!(ComplexMatrix::from_rows(vec![vec![c(1.0, 0.0)], vec![]]).is_err());
    }

    #[test]
    fn hermitian_checks() {
        let a = sample(9, 3);
        assert!(!a.is_hermitian());
        assert!(a.hermitian_part().is_hermitian());
        let h = &a + &a.adjoint();
        assert!(h.is_hermitian());
    }
}
