use std::collections::BTreeMap;

use crate::error::{input, Result};
use crate::feasibility::{solve_feasibility, FeasibilityResult, LinearFeasibilityProblem};
use crate::scalar::{sum, Scalar};
use crate::scenario::{
    correlations_to_behavior, nonempty_subsets, sign_of_outcome, validate_behavior,
    Behavior, CorrelationKey, CorrelationSet, Scenario, ValidationReport,
};
use crate::tensor::{checked_volume, marginalize, Radix};

use super::{enumerate_deterministic_strategies, strategy_count, DeterministicStrategy, LhvModel};

/// Linear functional `Σ c(s,λ) P(λ|s) ≤ bound`, valid for every local
/// behavior and violated by the behavior it was derived from.
#[derive(Clone, Debug, PartialEq)]
pub struct BellCertificate<T> {
    scenario: Scenario,
    /// Same layout as [`Behavior::tables`].
    pub coefficients: Vec<Vec<T>>,
    pub bound: T,
    /// Functional evaluated on the tested behavior.
    pub value: T,
    /// `value − bound`, positive.
    pub margin: T,
}

impl<T: Scalar> BellCertificate<T> {
    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn evaluate(&self, b: &Behavior<T>) -> T {
        self.coefficients
            .iter()
            .zip(b.tables())
            .flat_map(|(c, p)| c.iter().zip(p))
            .fold(T::zero(), |acc, (c, p)| acc + c.clone() * p.clone())
    }

    /// Value on a deterministic strategy: one coefficient per setting tuple.
    pub fn evaluate_strategy(&self, strategy: &DeterministicStrategy) -> T {
        let mut acc = T::zero();
        for (tuple, c) in self.scenario.setting_tuples().iter().zip(&self.coefficients) {
            let radix = Radix::new(&self.scenario.outcome_dims(tuple));
            acc = acc + c[radix.encode(&strategy.outcomes_for(tuple))].clone();
        }
        acc
    }

    /// Rewrites the functional in correlation coordinates (dichotomic only):
    /// returns the constant term and one coefficient per correlation key.
    pub fn correlator_form(&self) -> Result<(T, BTreeMap<CorrelationKey, T>)> {
        if !self.scenario.is_dichotomic() {
            return input("correlator form needs a dichotomic scenario");
        }
        let n = self.scenario.num_parties();
        let scale = T::from_ratio(1, 1i64 << n);
        let subsets = nonempty_subsets(n);
        let radix = Radix::new(&vec![2; n]);
        let mut constant = T::zero();
        let mut form: BTreeMap<CorrelationKey, T> = BTreeMap::new();
        for (tuple, c) in self.scenario.setting_tuples().iter().zip(&self.coefficients) {
            constant = constant + sum(c) * scale.clone();
            for sites in &subsets {
                let mut acc = T::zero();
                for (i, ci) in c.iter().enumerate() {
                    let o = radix.decode(i);
                    let sign: i64 = sites.iter().map(|&k| sign_of_outcome(o[k])).product();
                    acc = if sign > 0 { acc + ci.clone() } else { acc - ci.clone() };
                }
                let entry = form
                    .entry(CorrelationKey::from_tuple(sites, tuple))
                    .or_insert_with(T::zero);
                *entry = entry.clone() + acc * scale.clone();
            }
        }
        Ok((constant, form))
    }

    /// Coefficients of the full N-site correlators, in setting-tuple order.
    pub fn full_correlator_coefficients(&self) -> Result<Vec<T>> {
        let (_, form) = self.correlator_form()?;
        let all: Vec<usize> = (0..self.scenario.num_parties()).collect();
        Ok(self
            .scenario
            .setting_tuples()
            .iter()
            .map(|t| form[&CorrelationKey::from_tuple(&all, t)].clone())
            .collect())
    }

    /// `c P(o|s) + ... <= bound`, outcomes 0-based and settings 1-based as
    /// in behavior documents.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        for (tuple, c) in self.scenario.setting_tuples().iter().zip(&self.coefficients) {
            let radix = Radix::new(&self.scenario.outcome_dims(tuple));
            let settings: Vec<String> = tuple.iter().map(|s| (s + 1).to_string()).collect();
            for (i, ci) in c.iter().enumerate() {
                if ci.is_zero() {
                    continue;
                }
                let outcomes: Vec<String> = radix.decode(i).iter().map(usize::to_string).collect();
                let sign = if ci.is_negative() { "-" } else { "+" };
                if out.is_empty() {
                    out.push_str(if ci.is_negative() { "-" } else { "" });
                } else {
                    out.push_str(&format!(" {} ", sign));
                }
                out.push_str(&format!("{} P({}|{})", ci.abs(), outcomes.join(","), settings.join(",")));
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        format!("{} <= {}", out, self.bound)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LhvVerdict<T> {
    /// Mixture of the deterministic strategies carrying positive weight.
    Feasible(LhvModel<T>),
    Infeasible(BellCertificate<T>),
    /// Float mode: the LP optimum sits inside the tolerance band.
    Marginal { objective: f64 },
}

impl<T> LhvVerdict<T> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LhvVerdict::Feasible(_))
    }

    pub fn verdict(&self) -> &'static str {
        match self {
            LhvVerdict::Feasible(_) => "feasible",
            LhvVerdict::Infeasible(_) => "infeasible",
            LhvVerdict::Marginal { .. } => "marginal",
        }
    }
}

fn require_valid<T: Scalar>(b: &Behavior<T>) -> Result<()> {
    let report = validate_behavior(b);
    if let Some(issue) = report.issues.first() {
        return input(format!(
            "behavior is not a valid family of distributions ({} issues, first: {})",
            report.issues.len(),
            issue
        ));
    }
    Ok(())
}

fn table_offsets(scenario: &Scenario) -> (Vec<usize>, usize) {
    let mut offsets = Vec::new();
    let mut rows = 1;
    for t in scenario.setting_tuples() {
        offsets.push(rows);
        rows += scenario.outcome_dims(&t).iter().product::<usize>();
    }
    (offsets, rows)
}

fn with_rhs<T: Scalar>(b: &Behavior<T>, matrix: Vec<Vec<T>>, num_vars: usize) -> LinearFeasibilityProblem<T> {
    let mut p = LinearFeasibilityProblem::new(num_vars).expect("at least one variable");
    let rhs = std::iter::once(T::one()).chain(b.tables().iter().flatten().cloned());
    for (row, r) in matrix.into_iter().zip(rhs) {
        p.add_constraint(row, r).expect("rows sized to num_vars");
    }
    p
}

/// Decides membership in the local polytope by an LP over weights of all
/// deterministic strategies.
pub fn lhv_feasibility<T: Scalar>(b: &Behavior<T>, cap: u128) -> Result<LhvVerdict<T>> {
    require_valid(b)?;
    let scenario = b.scenario();
    let strategies = enumerate_deterministic_strategies(scenario, cap)?;
    let tuples = scenario.setting_tuples();
    let radices: Vec<Radix> = tuples.iter().map(|t| Radix::new(&scenario.outcome_dims(t))).collect();
    let (offsets, rows) = table_offsets(scenario);

    let mut matrix = vec![vec![T::zero(); strategies.len()]; rows];
    for (j, st) in strategies.iter().enumerate() {
        matrix[0][j] = T::one();
        for ((t, radix), &off) in tuples.iter().zip(&radices).zip(&offsets) {
            matrix[off + radix.encode(&st.outcomes_for(t))][j] = T::one();
        }
    }
    let problem = with_rhs(b, matrix, strategies.len());

    Ok(match solve_feasibility(&problem) {
        FeasibilityResult::Feasible { solution } => {
            let (support, weights): (Vec<DeterministicStrategy>, Vec<T>) = strategies
                .into_iter()
                .zip(solution)
                .filter(|(_, w)| !w.is_zero())
                .unzip();
            LhvVerdict::Feasible(LhvModel::from_strategies(&support, weights, scenario))
        }
        FeasibilityResult::Infeasible(cert) => {
            let coefficients: Vec<Vec<T>> = offsets
                .iter()
                .zip(&radices)
                .map(|(&off, r)| cert.y[off..off + r.len()].to_vec())
                .collect();
            let mut c = BellCertificate {
                scenario: scenario.clone(),
                coefficients,
                bound: -cert.y[0].clone(),
                value: T::zero(),
                margin: cert.margin,
            };
            c.value = c.evaluate(b);
            LhvVerdict::Infeasible(c)
        }
        FeasibilityResult::Marginal { objective, .. } => LhvVerdict::Marginal { objective },
    })
}

/// Probability distribution on the joint outcome grid of all measurements,
/// one axis per `(party, setting)` in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct JointMeasure<T> {
    scenario: Scenario,
    tensor: Vec<T>,
}

impl<T: Scalar> JointMeasure<T> {
    pub fn new(scenario: Scenario, tensor: Vec<T>, eps: f64) -> Result<Self> {
        let expected = checked_volume(scenario.axis_dims());
        if tensor.len() as u128 != expected {
            return input(format!("joint measure has {} entries, grid has {}", tensor.len(), expected));
        }
        if tensor.iter().any(|p| p.below_zero(eps)) {
            return input("joint measure has a negative entry");
        }
        if !sum(&tensor).near(&T::one(), eps) {
            return input("joint measure does not sum to one");
        }
        Ok(JointMeasure { scenario, tensor })
    }

    pub(crate) fn from_parts(scenario: Scenario, tensor: Vec<T>) -> Self {
        JointMeasure { scenario, tensor }
    }

    /// Product of one distribution per axis.
    pub fn product(scenario: Scenario, factors: &[Vec<T>], eps: f64) -> Result<Self> {
        let dims = scenario.axis_dims();
        if factors.len() != dims.len() || factors.iter().zip(&dims).any(|(f, &d)| f.len() != d) {
            return input("one factor per axis with matching length required");
        }
        let radix = Radix::new(&dims);
        let tensor = radix
            .iter()
            .map(|d| d.iter().zip(factors).fold(T::one(), |acc, (&i, f)| acc * f[i].clone()))
            .collect();
        JointMeasure::new(scenario, tensor, eps)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn tensor(&self) -> &[T] {
        &self.tensor
    }

    pub fn get(&self, digits: &[usize]) -> T {
        self.tensor[Radix::new(&self.scenario.axis_dims()).encode(digits)].clone()
    }

    /// Marginal on the listed axes (strictly increasing positions).
    pub fn marginal(&self, axes: &[usize]) -> Vec<T> {
        marginalize(&self.tensor, &self.scenario.axis_dims(), axes)
    }

    /// The behavior whose tables are the marginals of this measure.
    pub fn behavior(&self, eps: f64) -> Behavior<T> {
        let scenario = &self.scenario;
        let tables = scenario
            .setting_tuples()
            .iter()
            .map(|t| {
                let axes: Vec<usize> = t.iter().enumerate().map(|(n, &s)| scenario.axis_index(n, s)).collect();
                self.marginal(&axes)
            })
            .collect();
        Behavior::new(scenario.clone(), tables, eps).expect("marginals match the scenario")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum JointVerdict<T> {
    Feasible(JointMeasure<T>),
    Infeasible,
    Marginal { objective: f64 },
}

impl<T> JointVerdict<T> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, JointVerdict::Feasible(_))
    }

    pub fn verdict(&self) -> &'static str {
        match self {
            JointVerdict::Feasible(_) => "feasible",
            JointVerdict::Infeasible => "infeasible",
            JointVerdict::Marginal { .. } => "marginal",
        }
    }
}

/// Searches for a joint distribution of all measurements whose marginals
/// reproduce every table of `b`.
pub fn joint_measure_feasibility<T: Scalar>(b: &Behavior<T>, cap: u128) -> Result<JointVerdict<T>> {
    require_valid(b)?;
    let scenario = b.scenario();
    let atoms = strategy_count(scenario, cap)?;
    let grid = Radix::new(&scenario.axis_dims());
    let (offsets, rows) = table_offsets(scenario);
    let mut matrix = vec![vec![T::zero(); atoms]; rows];
    matrix[0] = vec![T::one(); atoms];
    for (t, &off) in scenario.setting_tuples().iter().zip(&offsets) {
        let axes: Vec<usize> = t.iter().enumerate().map(|(n, &s)| scenario.axis_index(n, s)).collect();
        let table = Radix::new(&scenario.outcome_dims(t));
        for i in 0..atoms {
            let digits = grid.decode(i);
            let outcome: Vec<usize> = axes.iter().map(|&a| digits[a]).collect();
            matrix[off + table.encode(&outcome)][i] = T::one();
        }
    }
    let problem = with_rhs(b, matrix, atoms);
    Ok(match solve_feasibility(&problem) {
        FeasibilityResult::Feasible { solution } => {
            JointVerdict::Feasible(JointMeasure::from_parts(scenario.clone(), solution))
        }
        FeasibilityResult::Infeasible(_) => JointVerdict::Infeasible,
        FeasibilityResult::Marginal { objective, .. } => JointVerdict::Marginal { objective },
    })
}

/// Deterministic model with `Ω` the support of `μ` and indicator responses.
pub fn model_from_joint_measure<T: Scalar>(mu: &JointMeasure<T>) -> LhvModel<T> {
    let scenario = &mu.scenario;
    let axes = scenario.axes();
    let grid = Radix::new(&scenario.axis_dims());
    let mut strategies = Vec::new();
    let mut weights = Vec::new();
    for (i, w) in mu.tensor.iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        let mut assignment: Vec<Vec<usize>> = scenario.settings().iter().map(|&s| vec![0; s]).collect();
        for (&(n, s), d) in axes.iter().zip(grid.decode(i)) {
            assignment[n][s] = d;
        }
        strategies.push(DeterministicStrategy { assignment });
        weights.push(w.clone());
    }
    LhvModel::from_strategies(&strategies, weights, scenario)
}

#[derive(Clone, Debug, PartialEq)]
pub enum CorrelationVerdict<T> {
    /// The reconstructed probabilities are not a valid behavior.
    InvalidCorrelations(ValidationReport),
    Checked(LhvVerdict<T>),
}

/// Reconstructs the behavior from a complete correlation set and decides LHV
/// feasibility. Full correlators alone do not determine the answer, so every
/// lower-order mean must be present.
pub fn lhv_check_from_correlations<T: Scalar>(
    c: &CorrelationSet<T>,
    cap: u128,
) -> Result<CorrelationVerdict<T>> {
    let (b, report) = correlations_to_behavior(c)?;
    if !report.is_valid() {
        return Ok(CorrelationVerdict::InvalidCorrelations(report));
    }
    Ok(CorrelationVerdict::Checked(lhv_feasibility(&b, cap)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lhv::{evaluate_model, DEFAULT_STRATEGY_CAP};
    use crate::locality::make_pr_box;
    use crate::scalar::Rational;
    use crate::scenario::behavior_to_correlations;

    const CAP: u128 = DEFAULT_STRATEGY_CAP;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn pr_box_certificate_is_chsh() {
        let pr = make_pr_box();
        let LhvVerdict::Infeasible(cert) = lhv_feasibility(&pr, CAP).unwrap() else {
            panic!("PR box must be nonlocal");
        };
        assert!(cert.margin > q(0, 1));
        assert_eq!(cert.value.clone() - cert.bound.clone(), cert.margin);
        let full = cert.full_correlator_coefficients().unwrap();
        let scale = full[0].clone();
        assert!(!num_traits::Zero::is_zero(&scale));
        let chsh = [q(1, 1), q(1, 1), q(1, 1), q(-1, 1)];
        for (c, h) in full.iter().zip(&chsh) {
            assert_eq!(c.clone(), scale.clone() * h.clone(), "{:?}", full);
        }
        let strategies = enumerate_deterministic_strategies(pr.scenario(), CAP).unwrap();
        let best = strategies
            .iter()
            .map(|s| cert.evaluate_strategy(s))
            .fold(None::<Rational>, |m, v| Some(m.map_or(v.clone(), |m| Scalar::max_of(m, v))))
            .unwrap();
        assert!(best <= cert.bound);
    }

    #[test]
    fn pr_box_joint_measure_infeasible() {
        assert_eq!(joint_measure_feasibility(&make_pr_box(), CAP).unwrap(), JointVerdict::Infeasible);
    }

    #[test]
    fn uniform_behavior_feasible_both_ways() {
        let scn = Scenario::uniform(2, 2, 2).unwrap();
        let b = Behavior::from_fn(scn, 0.0, |_, _| q(1, 4)).unwrap();
        let LhvVerdict::Feasible(m) = lhv_feasibility(&b, CAP).unwrap() else {
            panic!()
        };
        assert_eq!(evaluate_model(&m, b.scenario(), 0.0).unwrap(), b);
        let JointVerdict::Feasible(mu) = joint_measure_feasibility(&b, CAP).unwrap() else {
            panic!()
        };
        assert_eq!(mu.behavior(0.0), b);
        let back = model_from_joint_measure(&mu);
        assert_eq!(evaluate_model(&back, b.scenario(), 0.0).unwrap(), b);
    }

    #[test]
    fn product_joint_measure_gives_product_behavior() {
        let scn = Scenario::uniform(2, 1, 2).unwrap();
        let mu = JointMeasure::product(scn.clone(), &[vec![q(1, 3), q(2, 3)], vec![q(1, 4), q(3, 4)]], 0.0).unwrap();
        let b = mu.behavior(0.0);
        assert_eq!(b.table(&[0, 0]).unwrap(), &[q(1, 12), q(3, 12), q(2, 12), q(6, 12)]);
        let m = model_from_joint_measure(&mu);
        assert_eq!(m.omega().len(), 4);
        assert_eq!(evaluate_model(&m, &scn, 0.0).unwrap(), b);
    }

    #[test]
    fn point_mass_measure_is_single_strategy() {
        let scn = Scenario::uniform(2, 2, 2).unwrap();
        let mut t = vec![q(0, 1); 16];
        t[5] = q(1, 1);
        let mu = JointMeasure::new(scn, t, 0.0).unwrap();
        let m = model_from_joint_measure(&mu);
        assert_eq!(m.omega(), &["0,1|0,1".to_string()]);
    }

    #[test]
    fn invalid_behavior_is_rejected() {
        let scn = Scenario::uniform(1, 1, 2).unwrap();
        let b = Behavior::new(scn, vec![vec![q(1, 2), q(1, 3)]], 0.0).unwrap();
        assert!(lhv_feasibility(&b, CAP).is_err());
        assert!(joint_measure_feasibility(&b, CAP).is_err());
    }

    #[test]
    fn float_mode_pr_box() {
        let pr = make_pr_box().to_float();
        let LhvVerdict::Infeasible(cert) = lhv_feasibility(&pr, CAP).unwrap() else {
            panic!()
        };
        assert!(cert.margin > 0.1);
        let full = cert.full_correlator_coefficients().unwrap();
        for (c, h) in full.iter().zip([1.0, 1.0, 1.0, -1.0]) {
            assert!((c / full[0] - h).abs() < 1e-9, "{:?}", full);
        }
    }

    #[test]
    fn correlation_path() {
        let scn = Scenario::uniform(2, 2, 2).unwrap();
        let zero = Behavior::from_fn(scn, 0.0, |_, _| q(1, 4)).unwrap();
        let c = behavior_to_correlations(&zero).unwrap();
        assert!(matches!(
            lhv_check_from_correlations(&c, CAP).unwrap(),
            CorrelationVerdict::Checked(LhvVerdict::Feasible(_))
        ));
        let pr = behavior_to_correlations(&make_pr_box()).unwrap();
        assert!(matches!(
            lhv_check_from_correlations(&pr, CAP).unwrap(),
            CorrelationVerdict::Checked(LhvVerdict::Infeasible(_))
        ));
        let full_only: BTreeMap<_, _> = pr.means().iter().filter(|(k, _)| k.sites.len() == 2).map(|(k, v)| (k.clone(), v.clone())).collect();
        let partial = CorrelationSet::new(pr.scenario().clone(), full_only, 0.0).unwrap();
        assert!(lhv_check_from_correlations(&partial, CAP).is_err());
    }

    #[test]
    fn overshooting_correlations_are_invalid() {
        let scn = Scenario::uniform(2, 1, 2).unwrap();
        let mut means = BTreeMap::new();
        means.insert(CorrelationKey::new(vec![0], vec![0]), q(1, 1));
        means.insert(CorrelationKey::new(vec![1], vec![0]), q(1, 1));
        means.insert(CorrelationKey::new(vec![0, 1], vec![0, 0]), q(-1, 1));
        let c = CorrelationSet::new(scn, means, 0.0).unwrap();
        assert!(matches!(
            lhv_check_from_correlations(&c, CAP).unwrap(),
            CorrelationVerdict::InvalidCorrelations(_)
        ));
    }
}
