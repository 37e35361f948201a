use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::lhv::{Direction, DirectionalMeasure};
use crate::tensor::{checked_volume, Radix};

use super::eigen::min_eigenvalue;
use super::matrix::{ComplexMatrix, C64, HERMITIAN_RELATIVE};
use super::state::{born_distribution, reduced_norms, DensityOperator, MeasurementSetup, Povm, PSD_TOLERANCE};

/// Default cap on the dilated dimension `d₁·d₂^{S₂}` (or `d₁^{S₁}·d₂`).
pub const DEFAULT_DIMENSION_CAP: u128 = 1 << 14;

/// Tolerance for trace and partial-trace checks.
pub const TRACE_TOLERANCE: f64 = 1e-10;

/// Operator on `C^{d₁} ⊗ (C^{d₂})^{⊗S₂}` (right) or `(C^{d₁})^{⊗S₁} ⊗ C^{d₂}`
/// (left) whose reductions to one copy of the split side all equal the
/// noisy state `η_ρ(γ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceOperator {
    pub direction: Direction,
    pub base_dims: (usize, usize),
    pub copies: usize,
    pub gamma: f64,
    pub matrix: ComplexMatrix,
}

impl SourceOperator {
    /// Subsystem dimensions in tensor order.
    pub fn dims(&self) -> Vec<usize> {
        let (d1, d2) = self.base_dims;
        match self.direction {
            Direction::Right => std::iter::once(d1).chain(std::iter::repeat_n(d2, self.copies)).collect(),
            Direction::Left => std::iter::repeat_n(d1, self.copies).chain(std::iter::once(d2)).collect(),
        }
    }

    /// Subsystem positions of the copies.
    fn copy_positions(&self) -> Vec<usize> {
        match self.direction {
            Direction::Right => (1..=self.copies).collect(),
            Direction::Left => (0..self.copies).collect(),
        }
    }

    /// Reduction keeping only the copy at `slot` (0-based).
    pub fn reduce_to_slot(&self, slot: usize) -> Result<ComplexMatrix> {
        let positions = self.copy_positions();
        let traced: Vec<usize> = positions.iter().enumerate().filter(|(i, _)| *i != slot).map(|(_, &p)| p).collect();
        if traced.is_empty() {
            return Ok(self.matrix.clone());
        }
        self.matrix.partial_trace(&self.dims(), &traced)
    }
}

fn bipartite_dims(rho: &DensityOperator) -> Result<(usize, usize)> {
    match rho.dims() {
        &[d1, d2] => Ok((d1, d2)),
        other => input(format!("bipartite state required, got dims {:?}", other)),
    }
}

/// Builds the source operator
/// `(1−γ) I/D + γ d^{1−S} Σ_p Σ_{kl} ρ_kl ⊗ (|f_k⟩⟨f_l| at copy p) − γ(S−1) τ ⊗ I/d^S`
/// for the right direction (`d = d₂`, `ρ_kl` the blocks of `ρ` and
/// `τ = Σ_k ρ_kk`), and its mirror image for the left direction.
pub fn source_operator(
    rho: &DensityOperator,
    gamma: f64,
    direction: Direction,
    copies: usize,
    cap: u128,
) -> Result<SourceOperator> {
    let (d1, d2) = bipartite_dims(rho)?;
    if !(0.0..=1.0).contains(&gamma) {
        return input(format!("gamma {} outside [0, 1]", gamma));
    }
    if copies == 0 {
        return input("at least one copy required");
    }
    // `fixed` is the side kept once, `split` the side copied.
    let (fixed, split) = match direction {
        Direction::Right => (d1, d2),
        Direction::Left => (d2, d1),
    };
    let volume = checked_volume(std::iter::once(fixed).chain(std::iter::repeat_n(split, copies)));
    if volume > cap {
        return Err(Error::Resource {
            what: "source operator dimension".into(),
            count: volume,
            cap,
        });
    }
    let r = rho.matrix();
    // ρ entry with the fixed index first.
    let entry = |i: usize, k: usize, j: usize, l: usize| match direction {
        Direction::Right => r[(i * d2 + k, j * d2 + l)],
        Direction::Left => r[(k * d2 + i, l * d2 + j)],
    };
    let mut tau = vec![vec![C64::new(0.0, 0.0); fixed]; fixed];
    for (i, row) in tau.iter_mut().enumerate() {
        for (j, t) in row.iter_mut().enumerate() {
            *t = (0..split).map(|k| entry(i, k, j, k)).sum();
        }
    }

    let grid = Radix::new(&vec![split; copies]);
    let slots: Vec<Vec<usize>> = grid.iter().collect();
    let g = grid.len();
    let total = volume as usize;
    let split_f = split as f64;
    let diag = (1.0 - gamma) / total as f64;
    let placed = gamma / split_f.powi(copies as i32 - 1);
    let tau_weight = gamma * (copies - 1) as f64 / split_f.powi(copies as i32);
    let index = |i: usize, a: usize| match direction {
        Direction::Right => i * g + a,
        Direction::Left => a * fixed + i,
    };

    let mut m = ComplexMatrix::zeros(total, total);
    for (ai, a) in slots.iter().enumerate() {
        for (bi, b) in slots.iter().enumerate() {
            let differing: Vec<usize> = (0..copies).filter(|&p| a[p] != b[p]).collect();
            if differing.len() > 1 {
                continue;
            }
            for i in 0..fixed {
                for j in 0..fixed {
                    let mut v = C64::new(0.0, 0.0);
                    match differing.first() {
                        Some(&p) => v += entry(i, a[p], j, b[p]) * placed,
                        None => {
                            for p in 0..copies {
                                v += entry(i, a[p], j, a[p]) * placed;
                            }
                            v -= tau[i][j] * tau_weight;
                            if i == j {
                                v += C64::new(diag, 0.0);
                            }
                        }
                    }
                    m[(index(i, ai), index(j, bi))] = v;
                }
            }
        }
    }
    Ok(SourceOperator {
        direction,
        base_dims: (d1, d2),
        copies,
        gamma,
        matrix: m,
    })
}

/// Largest visibility for which the source operator is positive:
/// `(1 + d₁(S₂−1)‖τ₁‖)^{−1}` (right) or `(1 + d₂(S₁−1)‖τ₂‖)^{−1}` (left).
pub fn source_positivity_bound(rho: &DensityOperator, s1: usize, s2: usize, direction: Direction) -> Result<f64> {
    let (d1, d2) = bipartite_dims(rho)?;
    if s1 == 0 || s2 == 0 {
        return input("setting counts must be at least 1");
    }
    let (n1, n2) = reduced_norms(rho)?;
    let beta = match direction {
        Direction::Right => d1 as f64 * (s2 - 1) as f64 * n1,
        Direction::Left => d2 as f64 * (s1 - 1) as f64 * n2,
    };
    Ok(1.0 / (1.0 + beta))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SourceCheck {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SourceReport {
    pub passes: bool,
    pub min_eigenvalue: f64,
    pub checks: Vec<SourceCheck>,
}

/// Checks Hermiticity, unit trace, every single-copy reduction against
/// `target`, and positivity.
pub fn verify_source_operator(t: &SourceOperator, target: &DensityOperator) -> Result<SourceReport> {
    let (d1, d2) = t.base_dims;
    if target.dims() != [d1, d2] {
        return Err(Error::Dimension(format!("target dims {:?} vs base dims ({}, {})", target.dims(), d1, d2)));
    }
    let mut checks = Vec::new();
    let mut push = |name: String, residual: f64, tolerance: f64| {
        checks.push(SourceCheck {
            name,
            residual,
            tolerance,
            passed: residual <= tolerance,
        });
    };
    let herm = t.matrix.hermitian_residual();
    push("hermitian".into(), herm, HERMITIAN_RELATIVE * t.matrix.max_abs());
    let tr = t.matrix.trace();
    push("trace".into(), (tr - C64::new(1.0, 0.0)).norm(), TRACE_TOLERANCE);
    for slot in 0..t.copies {
        let reduced = t.reduce_to_slot(slot)?;
        push(
            format!("reduction to copy {}", slot + 1),
            reduced.max_abs_diff(target.matrix()),
            TRACE_TOLERANCE,
        );
    }
    let lo = min_eigenvalue(&t.matrix.hermitian_part())?;
    push("min eigenvalue".into(), (-lo).max(0.0), PSD_TOLERANCE);
    Ok(SourceReport {
        passes: checks.iter().all(|c| c.passed),
        min_eigenvalue: lo,
        checks,
    })
}

/// Born measures of the source operator against one setting of the fixed
/// side and all settings of the copied side, one measure per setting of the
/// fixed side. These are the directional measures of the noisy state.
pub fn directional_measures_from_source(
    t: &SourceOperator,
    setup: &MeasurementSetup,
) -> Result<Vec<DirectionalMeasure<f64>>> {
    let (d1, d2) = t.base_dims;
    if setup.dims() != [d1, d2] {
        return Err(Error::Dimension(format!("setup dims {:?} vs base dims ({}, {})", setup.dims(), d1, d2)));
    }
    let (own, other) = match t.direction {
        Direction::Right => (0, 1),
        Direction::Left => (1, 0),
    };
    let others: Vec<&Povm> = setup.povms()[other].iter().collect();
    if others.len() != t.copies {
        return input(format!(
            "source has {} copies but party {} has {} settings",
            t.copies,
            other + 1,
            others.len()
        ));
    }
    let dims = t.dims();
    setup.povms()[own]
        .iter()
        .enumerate()
        .map(|(s, m)| {
            let povms: Vec<&Povm> = match t.direction {
                Direction::Right => std::iter::once(m).chain(others.iter().copied()).collect(),
                Direction::Left => others.iter().copied().chain(std::iter::once(m)).collect(),
            };
            let tensor = born_distribution(&t.matrix, &dims, &povms)?;
            Ok(DirectionalMeasure {
                direction: t.direction,
                setting: s,
                dims: povms.iter().map(|p| p.num_outcomes()).collect(),
                tensor,
            })
        })
        .collect()
}
