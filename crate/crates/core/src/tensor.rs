//! Dense row-major tensors indexed in mixed radix (first axis slowest).

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Radix {
    dims: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl Radix {
    pub fn new(dims: &[usize]) -> Self {
        let mut strides = vec![0; dims.len()];
        let mut acc = 1usize;
        for (i, &d) in dims.iter().enumerate().rev() {
            strides[i] = acc;
            acc = acc.saturating_mul(d);
        }
        Radix {
            dims: dims.to_vec(),
            strides,
            len: acc,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn encode(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.dims.len()];
        for (i, &s) in self.strides.iter().enumerate() {
            digits[i] = index / s;
            index %= s;
        }
        digits
    }

    /// Iterates all digit vectors in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.len).map(move |i| self.decode(i))
    }
}

/// Product of `dims` as `u128`, immune to overflow for realistic sizes.
pub(crate) fn checked_volume(dims: impl IntoIterator<Item = usize>) -> u128 {
    dims.into_iter()
        .fold(1u128, |acc, d| acc.saturating_mul(d as u128))
}

/// Sums `data` (shape `dims`) over all axes not listed in `keep`.
/// `keep` must be strictly increasing.
pub(crate) fn marginalize<T: Scalar>(data: &[T], dims: &[usize], keep: &[usize]) -> Vec<T> {
    let full = Radix::new(dims);
    let kept_dims: Vec<usize> = keep.iter().map(|&a| dims[a]).collect();
    let out_radix = Radix::new(&kept_dims);
    let mut out = vec![T::zero(); out_radix.len()];
    for (i, value) in data.iter().enumerate() {
        if value.is_zero() {
            continue;
        }
        let digits = full.decode(i);
        let target: Vec<usize> = keep.iter().map(|&a| digits[a]).collect();
        let j = out_radix.encode(&target);
        out[j] = out[j].clone() + value.clone();
    }
    out
}
