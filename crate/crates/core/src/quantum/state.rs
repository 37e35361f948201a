use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::scalar::DEFAULT_EPSILON;
use crate::scenario::{Behavior, Scenario};
use crate::tensor::Radix;

use super::eigen::{min_eigenvalue, operator_norm};
use super::matrix::{ComplexMatrix, C64};

/// Tolerance on negative eigenvalues of states and effects.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Trace-one positive semidefinite operator on `⊗_n C^{d_n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    dims: Vec<usize>,
    matrix: ComplexMatrix,
}

impl DensityOperator {
    /// Checks Hermiticity, unit trace within `eps` and positivity within
    /// [`PSD_TOLERANCE`].
    pub fn new(dims: Vec<usize>, matrix: ComplexMatrix, eps: f64) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) || !matrix.is_square() || matrix.rows() != total {
            return Err(Error::Dimension(format!(
                "dims {:?} do not match a {}x{} matrix",
                dims,
                matrix.rows(),
                matrix.cols()
            )));
        }
        if !matrix.is_hermitian() {
            return input(format!("state is not Hermitian (residual {:.3e})", matrix.hermitian_residual()));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > eps || tr.im.abs() > eps {
            return input(format!("state has trace {:.6}{:+.6}i", tr.re, tr.im));
        }
        let lo = min_eigenvalue(&matrix)?;
        if lo < -PSD_TOLERANCE {
            return input(format!("state has negative eigenvalue {:.3e}", lo));
        }
        Ok(DensityOperator { dims, matrix })
    }

    pub(crate) fn from_parts(dims: Vec<usize>, matrix: ComplexMatrix) -> Self {
        DensityOperator { dims, matrix }
    }

    pub fn pure(dims: Vec<usize>, psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(C64::norm_sqr).sum::<f64>().sqrt();
        if norm == 0.0 {
            return input("zero state vector");
        }
        let v: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        DensityOperator::new(dims, ComplexMatrix::outer(&v, &v), DEFAULT_EPSILON)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let d: usize = dims.iter().product();
        DensityOperator {
            dims,
            matrix: ComplexMatrix::identity(d).scale(1.0 / d as f64),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Reduced state on the listed subsystems.
    pub fn reduced(&self, kept: &[usize]) -> Result<DensityOperator> {
        let traced: Vec<usize> = (0..self.dims.len()).filter(|i| !kept.contains(i)).collect();
        if traced.is_empty() {
            return Ok(self.clone());
        }
        let m = self.matrix.partial_trace(&self.dims, &traced)?;
        Ok(DensityOperator {
            dims: kept.iter().map(|&i| self.dims[i]).collect(),
            matrix: m,
        })
    }

    pub fn kron(&self, other: &DensityOperator) -> DensityOperator {
        DensityOperator {
            dims: self.dims.iter().chain(&other.dims).copied().collect(),
            matrix: self.matrix.kron(&other.matrix),
        }
    }

    fn require_bipartite(&self) -> Result<(usize, usize)> {
        match self.dims[..] {
            [d1, d2] => Ok((d1, d2)),
            _ => input(format!("bipartite state required, got {} subsystems", self.dims.len())),
        }
    }
}

/// Finite-outcome POVM.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    dim: usize,
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<ComplexMatrix>, eps: f64) -> Result<Self> {
        let Some(first) = effects.first() else {
            return input("POVM needs at least one effect");
        };
        let dim = first.rows();
        let mut total = ComplexMatrix::zeros(dim, dim);
        for (k, e) in effects.iter().enumerate() {
            if !e.is_square() || e.rows() != dim {
                return Err(Error::Dimension(format!("effect {} is not {}x{}", k, dim, dim)));
            }
            if !e.is_hermitian() {
                return input(format!("effect {} is not Hermitian", k));
            }
            let lo = min_eigenvalue(e)?;
            if lo < -PSD_TOLERANCE {
                return input(format!("effect {} has negative eigenvalue {:.3e}", k, lo));
            }
            total = &total + e;
        }
        let gap = total.max_abs_diff(&ComplexMatrix::identity(dim));
        if gap > eps {
            return input(format!("effects sum to identity only within {:.3e}", gap));
        }
        Ok(Povm { dim, effects })
    }

    /// Rank-one projectors onto an orthonormal basis (vectors are normalized).
    pub fn projective(basis: &[Vec<C64>]) -> Result<Self> {
        let effects = basis
            .iter()
            .map(|v| {
                let n = v.iter().map(C64::norm_sqr).sum::<f64>().sqrt();
                let u: Vec<C64> = v.iter().map(|z| z / n).collect();
                ComplexMatrix::outer(&u, &u)
            })
            .collect();
        Povm::new(effects, 1e-9)
    }

    pub fn computational(dim: usize) -> Self {
        Povm {
            dim,
            effects: (0..dim).map(|i| ComplexMatrix::unit(dim, i, i)).collect(),
        }
    }

    /// `{I}`: a measurement with a single certain outcome.
    pub fn trivial(dim: usize) -> Self {
        Povm {
            dim,
            effects: vec![ComplexMatrix::identity(dim)],
        }
    }

    /// Qubit spin projectors `(I ± n·σ)/2` along a unit vector; outcome 0 is `+`.
    pub fn spin(direction: [f64; 3]) -> Result<Self> {
        let len = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (len - 1.0).abs() > 1e-9 {
            return input("spin direction must be a unit vector");
        }
        let [x, y, z] = direction;
        let plus = |s: f64| {
            ComplexMatrix::from_rows(vec![
                vec![C64::new(0.5 * (1.0 + s * z), 0.0), C64::new(0.5 * s * x, -0.5 * s * y)],
                vec![C64::new(0.5 * s * x, 0.5 * s * y), C64::new(0.5 * (1.0 - s * z), 0.0)],
            ])
            .expect("2x2")
        };
        Povm::new(vec![plus(1.0), plus(-1.0)], 1e-9)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn num_outcomes(&self) -> usize {
        self.effects.len()
    }

    /// `tr[ρ M(k)]` for every outcome `k`.
    pub fn distribution(&self, rho: &ComplexMatrix) -> Vec<f64> {
        self.effects.iter().map(|e| rho.trace_product(e).re).collect()
    }
}

/// One POVM per (party, setting).
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSetup {
    povms: Vec<Vec<Povm>>,
}

impl MeasurementSetup {
    pub fn new(povms: Vec<Vec<Povm>>) -> Result<Self> {
        if povms.is_empty() || povms.iter().any(Vec::is_empty) {
            return input("every party needs at least one measurement");
        }
        for (n, party) in povms.iter().enumerate() {
            if party.iter().any(|p| p.dim != party[0].dim) {
                return Err(Error::Dimension(format!("party {} mixes POVM dimensions", n + 1)));
            }
        }
        Ok(MeasurementSetup { povms })
    }

    pub fn povms(&self) -> &[Vec<Povm>] {
        &self.povms
    }

    pub fn povm(&self, party: usize, setting: usize) -> &Povm {
        &self.povms[party][setting]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.povms.iter().map(|p| p[0].dim).collect()
    }

    pub fn scenario(&self) -> Scenario {
        Scenario::new(
            self.povms
                .iter()
                .map(|p| p.iter().map(Povm::num_outcomes).collect())
                .collect(),
        )
        .expect("nonempty setup")
    }

    /// Setup keeping only the listed settings of each party.
    pub fn restrict(&self, kept: &[Vec<usize>]) -> Result<MeasurementSetup> {
        if kept.len() != self.povms.len() {
            return input("one setting list per party required");
        }
        let povms = kept
            .iter()
            .zip(&self.povms)
            .map(|(ks, ps)| {
                ks.iter()
                    .map(|&s| ps.get(s).cloned().ok_or_else(|| Error::Input(format!("unknown setting {}", s + 1))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        MeasurementSetup::new(povms)
    }
}

/// `tr[A (E_1(λ_1) ⊗ … ⊗ E_k(λ_k))]` over the outcome grid of the given
/// POVMs, one per subsystem.
pub fn born_distribution(a: &ComplexMatrix, dims: &[usize], povms: &[&Povm]) -> Result<Vec<f64>> {
    if povms.len() != dims.len() || povms.iter().zip(dims).any(|(p, &d)| p.dim != d) {
        return Err(Error::Dimension("POVMs do not match the subsystem dimensions".into()));
    }
    if a.rows() != dims.iter().product::<usize>() {
        return Err(Error::Dimension("operator does not match the subsystem dimensions".into()));
    }
    let space = Radix::new(dims);
    let digits: Vec<Vec<usize>> = space.iter().collect();
    let outcomes = Radix::new(&povms.iter().map(|p| p.num_outcomes()).collect::<Vec<_>>());
    let d = a.rows();
    let mut out = Vec::with_capacity(outcomes.len());
    for o in outcomes.iter() {
        let effects: Vec<&ComplexMatrix> = povms.iter().zip(&o).map(|(p, &k)| &p.effects[k]).collect();
        // Σ_{i,j} A_ij ∏_n E_n[j_n, i_n]
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                let aij = a[(i, j)];
                if aij == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut prod = aij;
                for (n, e) in effects.iter().enumerate() {
                    prod *= e[(digits[j][n], digits[i][n])];
                }
                acc += prod;
            }
        }
        out.push(acc.re);
    }
    Ok(out)
}

/// Born-rule behavior `P(λ|s) = tr[ρ ⊗_n M_n^{(s_n)}(λ_n)]`.
pub fn born_behavior(rho: &DensityOperator, setup: &MeasurementSetup, eps: f64) -> Result<Behavior<f64>> {
    if rho.dims != setup.dims() {
        return Err(Error::Dimension(format!(
            "state dims {:?} vs setup dims {:?}",
            rho.dims,
            setup.dims()
        )));
    }
    let scenario = setup.scenario();
    let tables = scenario
        .setting_tuples()
        .iter()
        .map(|t| {
            let povms: Vec<&Povm> = t.iter().enumerate().map(|(n, &s)| &setup.povms[n][s]).collect();
            born_distribution(&rho.matrix, &rho.dims, &povms)
        })
        .collect::<Result<Vec<_>>>()?;
    Behavior::new(scenario, tables, eps)
}

/// `(1−γ) I/(d₁d₂) + γ ρ`.
pub fn noisy_state(rho: &DensityOperator, gamma: f64) -> Result<DensityOperator> {
    rho.require_bipartite()?;
    if !(0.0..=1.0).contains(&gamma) {
        return input(format!("gamma {} outside [0, 1]", gamma));
    }
    let d = rho.dim();
    let mixed = ComplexMatrix::identity(d).scale((1.0 - gamma) / d as f64);
    Ok(DensityOperator::from_parts(rho.dims.clone(), &mixed + &rho.matrix.scale(gamma)))
}

/// `ψ = d^{−1/2} Σ_m e_m ⊗ e_m`.
pub fn maximally_entangled(d: usize) -> Result<DensityOperator> {
    if d < 2 {
        return input("dimension must be at least 2");
    }
    let mut psi = vec![C64::new(0.0, 0.0); d * d];
    for m in 0..d {
        psi[m * d + m] = C64::new(1.0, 0.0);
    }
    DensityOperator::pure(vec![d, d], &psi)
}

/// Noisy maximally entangled state.
pub fn isotropic_state(d: usize, gamma: f64) -> Result<DensityOperator> {
    noisy_state(&maximally_entangled(d)?, gamma)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PptReport {
    pub min_eigenvalue: f64,
    /// Partial transpose positive within [`PSD_TOLERANCE`].
    pub ppt: bool,
    /// Negative partial transpose proves entanglement.
    pub entangled: bool,
}

/// Minimum eigenvalue of the partial transpose on the second subsystem.
pub fn ppt_check(rho: &DensityOperator) -> Result<PptReport> {
    rho.require_bipartite()?;
    let pt = rho.matrix.partial_transpose(&rho.dims, &[1])?;
    let lo = min_eigenvalue(&pt)?;
    Ok(PptReport {
        min_eigenvalue: lo,
        ppt: lo >= -PSD_TOLERANCE,
        entangled: lo < -PSD_TOLERANCE,
    })
}

/// Operator norms of both reduced states.
pub fn reduced_norms(rho: &DensityOperator) -> Result<(f64, f64)> {
    rho.require_bipartite()?;
    let t1 = rho.matrix.partial_trace(&rho.dims, &[1])?;
    let t2 = rho.matrix.partial_trace(&rho.dims, &[0])?;
    Ok((operator_norm(&t1)?, operator_norm(&t2)?))
}

/// Visibility below which every `S₁×S₂` family of local measurements on the
/// noisy state admits an LHV model: `(1 + β)^{−1}` with
/// `β = min{d₁(S₂−1)‖τ₁‖, d₂(S₁−1)‖τ₂‖}`.
pub fn visibility_threshold(rho: &DensityOperator, s1: usize, s2: usize) -> Result<f64> {
    let (d1, d2) = rho.require_bipartite()?;
    if s1 == 0 || s2 == 0 {
        return input("setting counts must be at least 1");
    }
    let (n1, n2) = reduced_norms(rho)?;
    let beta = (d1 as f64 * (s2 - 1) as f64 * n1).min(d2 as f64 * (s1 - 1) as f64 * n2);
    Ok(1.0 / (1.0 + beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locality::check_nonsignaling;
    use crate::scenario::{behavior_to_correlations, validate_behavior, CorrelationKey};

    fn singlet() -> DensityOperator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityOperator::pure(
            vec![2, 2],
            &[C64::new(0.0, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0), C64::new(0.0, 0.0)],
        )
        .unwrap()
    }

    fn unit(theta: f64, phi: f64) -> [f64; 3] {
        [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
    }

    #[test]
    fn singlet_correlator_is_minus_dot_product() {
        let dirs_a = [unit(0.3, 0.1), unit(1.2, -0.7)];
        let dirs_b = [unit(2.0, 0.4), unit(0.9, 2.5)];
        let setup = MeasurementSetup::new(vec![
            dirs_a.iter().map(|&d| Povm::spin(d).unwrap()).collect(),
            dirs_b.iter().map(|&d| Povm::spin(d).unwrap()).collect(),
        ])
        .unwrap();
        let b = born_behavior(&singlet(), &setup, 1e-9).unwrap();
        assert!(validate_behavior(&b).is_valid());
        assert!(check_nonsignaling(&b).passes);
        let c = behavior_to_correlations(&b).unwrap();
        for (i, a) in dirs_a.iter().enumerate() {
            for (j, bb) in dirs_b.iter().enumerate() {
                let dot: f64 = a.iter().zip(bb).map(|(x, y)| x * y).sum();
                let e = c.get(&CorrelationKey::new(vec![0, 1], vec![i, j])).unwrap();
                assert!((e + dot).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn maximally_mixed_gives_uniform() {
        let rho = DensityOperator::maximally_mixed(vec![2, 3]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let setup = MeasurementSetup::new(vec![
            vec![Povm::spin([1.0, 0.0, 0.0]).unwrap(), Povm::computational(2)],
            vec![
                Povm::computational(3),
                Povm::projective(&[
                    vec![C64::new(s, 0.0), C64::new(s, 0.0), C64::new(0.0, 0.0)],
                    vec![C64::new(s, 0.0), C64::new(-s, 0.0), C64::new(0.0, 0.0)],
                    vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
                ])
                .unwrap(),
            ],
        ])
        .unwrap();
        let b = born_behavior(&rho, &setup, 1e-9).unwrap();
        for table in b.tables() {
            for p in table {
                assert!((p - 1.0 / 6.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trivial_povm_outcome_is_certain() {
        let rho = singlet();
        let setup = MeasurementSetup::new(vec![vec![Povm::trivial(2)], vec![Povm::computational(2)]]).unwrap();
        let b = born_behavior(&rho, &setup, 1e-9).unwrap();
        let m = crate::scenario::marginal(&b, &[0, 0], &[0]).unwrap();
        assert!((m[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs_rejected() {
        let bad = ComplexMatrix::diagonal(&[1.5, -0.5]);
        assert!(DensityOperator::new(vec![2], bad, 1e-9).is_err());
        let short = ComplexMatrix::diagonal(&[0.5, 0.5]);
        assert!(DensityOperator::new(vec![3], short.clone(), 1e-9).is_err());
        assert!(Povm::new(vec![short], 1e-9).is_err());
        assert!(Povm::spin([1.0, 1.0, 0.0]).is_err());
        assert!(noisy_state(&singlet(), 1.5).is_err());
    }

    #[test]
    fn isotropic_reductions_and_limits() {
        for d in [2, 3] {
            let mixed = isotropic_state(d, 0.0).unwrap();
            assert!(mixed.matrix().max_abs_diff(DensityOperator::maximally_mixed(vec![d, d]).matrix()) < 1e-15);
            let rho = isotropic_state(d, 0.7).unwrap();
            let eye = ComplexMatrix::identity(d).scale(1.0 / d as f64);
            assert!(rho.reduced(&[0]).unwrap().matrix().max_abs_diff(&eye) < 1e-14);
            assert!(rho.reduced(&[1]).unwrap().matrix().max_abs_diff(&eye) < 1e-14);
        }
        let psi = maximally_entangled(2).unwrap();
        assert_eq!(noisy_state(&psi, 1.0).unwrap().matrix(), psi.matrix());
    }

    #[test]
    fn ppt_of_isotropic_qubits() {
        let r = ppt_check(&isotropic_state(2, 0.5).unwrap()).unwrap();
        assert!((r.min_eigenvalue + 0.125).abs() < 1e-12);
        assert!(r.entangled);
        let edge = ppt_check(&isotropic_state(2, 1.0 / 3.0).unwrap()).unwrap();
        assert!(edge.min_eigenvalue.abs() < 1e-12);
        assert!(edge.ppt);
    }

    #[test]
    fn thresholds() {
        let psi2 = maximally_entangled(2).unwrap();
        assert!((visibility_threshold(&psi2, 2, 2).unwrap() - 0.5).abs() < 1e-12);
        let psi3 = maximally_entangled(3).unwrap();
        assert!((visibility_threshold(&psi3, 3, 3).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(visibility_threshold(&psi3, 1, 3).unwrap(), 1.0);
        assert_eq!(visibility_threshold(&singlet(), 4, 1).unwrap(), 1.0);
        let single = DensityOperator::maximally_mixed(vec![2]);
        assert!(visibility_threshold(&single, 2, 2).is_err());
    }
}
