use crate::error::{input, Error, Result};
use crate::lhv::{JointMeasure, LhvModel};
use crate::locality::check_distribution;
use crate::tensor::Radix;

use super::matrix::{tensor, ComplexMatrix, C64};
use super::state::{DensityOperator, MeasurementSetup};

/// Convex decomposition `Σ_m γ_m ρ_1^{(m)} ⊗ … ⊗ ρ_N^{(m)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableDecomposition {
    weights: Vec<f64>,
    /// `factors[m][n]` is party `n`'s state in term `m`.
    factors: Vec<Vec<DensityOperator>>,
}

impl SeparableDecomposition {
    pub fn new(weights: Vec<f64>, factors: Vec<Vec<DensityOperator>>, eps: f64) -> Result<Self> {
        if weights.len() != factors.len() {
            return input(format!("{} weights for {} product terms", weights.len(), factors.len()));
        }
        check_distribution(&weights, eps, "separable weights")?;
        let dims: Vec<usize> = factors[0].iter().map(DensityOperator::dim).collect();
        if dims.is_empty() {
            return input("product terms need at least one factor");
        }
        for (m, term) in factors.iter().enumerate() {
            let here: Vec<usize> = term.iter().map(DensityOperator::dim).collect();
            if here != dims {
                return Err(Error::Dimension(format!("term {} has factor dims {:?}, expected {:?}", m + 1, here, dims)));
            }
            if term.iter().any(|f| f.dims().len() != 1) {
                return input(format!("term {} has a composite factor", m + 1));
            }
        }
        Ok(SeparableDecomposition { weights, factors })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn factors(&self) -> &[Vec<DensityOperator>] {
        &self.factors
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors[0].iter().map(DensityOperator::dim).collect()
    }

    fn check_setup(&self, setup: &MeasurementSetup) -> Result<()> {
        if setup.dims() != self.dims() {
            return Err(Error::Dimension(format!(
                "setup dims {:?} vs state dims {:?}",
                setup.dims(),
                self.dims()
            )));
        }
        Ok(())
    }

    /// `responses[n][s][m]`: party `n`'s Born distribution in term `m`.
    fn local_distributions(&self, setup: &MeasurementSetup) -> Vec<Vec<Vec<Vec<f64>>>> {
        setup
            .povms()
            .iter()
            .enumerate()
            .map(|(n, party)| {
                party
                    .iter()
                    .map(|povm| self.factors.iter().map(|term| povm.distribution(term[n].matrix())).collect())
                    .collect()
            })
            .collect()
    }
}

pub fn separable_state(dec: &SeparableDecomposition) -> DensityOperator {
    let dims = dec.dims();
    let d: usize = dims.iter().product();
    let mut total = ComplexMatrix::zeros(d, d);
    for (w, term) in dec.weights.iter().zip(&dec.factors) {
        let mats: Vec<&ComplexMatrix> = term.iter().map(DensityOperator::matrix).collect();
        total = &total + &tensor(&mats).scale(*w);
    }
    DensityOperator::from_parts(dims, total)
}

/// Model with `Ω` the index set of the decomposition, `ν = γ` and responses
/// given by the Born rule on each factor.
pub fn classical_lhv_model(dec: &SeparableDecomposition, setup: &MeasurementSetup) -> Result<LhvModel<f64>> {
    dec.check_setup(setup)?;
    let omega = (1..=dec.weights.len()).map(|m| format!("m{}", m)).collect();
    Ok(LhvModel::from_parts(omega, dec.weights.clone(), dec.local_distributions(setup)))
}

/// `μ = Σ_m γ_m ∏_{(n,s)} tr[ρ_n^{(m)} M_n^{(s)}(·)]` on the joint outcome grid.
pub fn separable_joint_measure(dec: &SeparableDecomposition, setup: &MeasurementSetup) -> Result<JointMeasure<f64>> {
    dec.check_setup(setup)?;
    let scenario = setup.scenario();
    let local = dec.local_distributions(setup);
    let axes = scenario.axes();
    let grid = Radix::new(&scenario.axis_dims());
    let tensor = grid
        .iter()
        .map(|digits| {
            dec.weights
                .iter()
                .enumerate()
                .map(|(m, w)| {
                    axes.iter()
                        .zip(&digits)
                        .fold(*w, |acc, (&(n, s), &k)| acc * local[n][s][m][k])
                })
                .sum()
        })
        .collect();
    Ok(JointMeasure::from_parts(scenario, tensor))
}

fn check_basis(weights: &[f64], basis: &[Vec<C64>]) -> Result<usize> {
    check_distribution(weights, 1e-9, "basis weights")?;
    let d = basis.len();
    if weights.len() != d {
        return input(format!("{} weights for a basis of {} vectors", weights.len(), d));
    }
    for (i, u) in basis.iter().enumerate() {
        if u.len() != d {
            return Err(Error::Dimension(format!("basis vector {} has length {}", i + 1, u.len())));
        }
        for (j, v) in basis.iter().enumerate() {
            let ip: C64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            if (ip - C64::new(target, 0.0)).norm() > 1e-9 {
                return input("basis is not orthonormal");
            }
        }
    }
    Ok(d)
}

/// `Σ_m γ_m |e_m⟩⟨e_m| ⊗ |e_m⟩⟨e_m|`.
pub fn basis_correlated_state(weights: &[f64], basis: &[Vec<C64>]) -> Result<DensityOperator> {
    let d = check_basis(weights, basis)?;
    let mut total = ComplexMatrix::zeros(d * d, d * d);
    for (w, e) in weights.iter().zip(basis) {
        let p = ComplexMatrix::outer(e, e);
        total = &total + &p.kron(&p).scale(*w);
    }
    Ok(DensityOperator::from_parts(vec![d, d], total))
}

/// Joint measure from the pure dilation `|Σ_m √γ_m e_m^{⊗(S₁+S₂)}⟩`, one copy
/// per (party, setting): `μ′ = Σ_{m,l} √γ_m √γ_l ∏ ⟨e_m|M(λ)|e_l⟩`.
pub fn dilated_joint_measure(
    weights: &[f64],
    basis: &[Vec<C64>],
    setup: &MeasurementSetup,
) -> Result<JointMeasure<f64>> {
    let d = check_basis(weights, basis)?;
    if setup.dims().iter().any(|&x| x != d) {
        return Err(Error::Dimension("every site must measure the basis dimension".into()));
    }
    let scenario = setup.scenario();
    let axes = scenario.axes();
    // elements[axis][k][m][l] = ⟨e_m| M(k) |e_l⟩
    let elements: Vec<Vec<Vec<Vec<C64>>>> = axes
        .iter()
        .map(|&(n, s)| {
            setup
                .povm(n, s)
                .effects()
                .iter()
                .map(|e| {
                    basis
                        .iter()
                        .map(|em| {
                            basis
                                .iter()
                                .map(|el| {
                                    let mut acc = C64::new(0.0, 0.0);
                                    for i in 0..d {
                                        for j in 0..d {
                                            acc += em[i].conj() * e[(i, j)] * el[j];
                                        }
                                    }
                                    acc
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let roots: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let grid = Radix::new(&scenario.axis_dims());
    let tensor = grid
        .iter()
        .map(|digits| {
            let mut acc = C64::new(0.0, 0.0);
            for m in 0..d {
                for l in 0..d {
                    let mut term = C64::new(roots[m] * roots[l], 0.0);
                    for (a, &k) in digits.iter().enumerate() {
                        term *= elements[a][k][m][l];
                    }
                    acc += term;
                }
            }
            acc.re
        })
        .collect();
    Ok(JointMeasure::from_parts(scenario, tensor))
}
