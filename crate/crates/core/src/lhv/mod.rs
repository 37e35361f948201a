//! Local hidden variable models: representation, deterministic strategies,
//! feasibility decisions and explicit constructions.

mod construct;
mod feasibility;

pub use construct::{
    assemble_from_directional_measures, extract_directional_measures, single_multisetting_model,
    Direction, DirectionalMeasure,
};
pub use feasibility::{
    joint_measure_feasibility, lhv_check_from_correlations, lhv_feasibility,
    model_from_joint_measure, BellCertificate, CorrelationVerdict, JointMeasure, JointVerdict,
    LhvVerdict,
};

use std::fmt;

use crate::error::{input, Error, Result};
use crate::locality::check_distribution;
use crate::scalar::Scalar;
use crate::scenario::{sign_of_outcome, Behavior, CorrelationKey, Scenario};
use crate::tensor::{checked_volume, Radix};

/// Default cap on the number of deterministic strategies (and joint-measure
/// atoms) an analysis may enumerate.
pub const DEFAULT_STRATEGY_CAP: u128 = 10_000_000;

/// One outcome per (party, setting).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeterministicStrategy {
    /// `assignment[n][s]` is the outcome party `n` returns for setting `s`.
    pub assignment: Vec<Vec<usize>>,
}

impl DeterministicStrategy {
    pub fn outcome(&self, party: usize, setting: usize) -> usize {
        self.assignment[party][setting]
    }

    /// Outcome tuple produced under a setting tuple.
    pub fn outcomes_for(&self, setting_tuple: &[usize]) -> Vec<usize> {
        setting_tuple
            .iter()
            .enumerate()
            .map(|(n, &s)| self.assignment[n][s])
            .collect()
    }

    /// The vertex behavior this strategy generates.
    pub fn behavior<T: Scalar>(&self, scenario: &Scenario) -> Behavior<T> {
        Behavior::from_fn(scenario.clone(), 0.0, |t, o| {
            if self.outcomes_for(t) == o {
                T::one()
            } else {
                T::zero()
            }
        })
        .expect("strategy matches scenario")
    }

    /// Compact label, parties separated by `|`.
    pub fn label(&self) -> String {
        self.assignment
            .iter()
            .map(|p| p.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join("|")
    }
}

impl fmt::Display for DeterministicStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Number of deterministic strategies, or a resource error above `cap`.
pub fn strategy_count(scenario: &Scenario, cap: u128) -> Result<usize> {
    let count = checked_volume(scenario.axis_dims());
    if count > cap {
        return Err(Error::Resource {
            what: "deterministic strategies".into(),
            count,
            cap,
        });
    }
    Ok(count as usize)
}

/// All deterministic strategies in mixed-radix order, the `(1,1)` digit most
/// significant.
pub fn enumerate_deterministic_strategies(
    scenario: &Scenario,
    cap: u128,
) -> Result<Vec<DeterministicStrategy>> {
    strategy_count(scenario, cap)?;
    let axes = scenario.axes();
    let radix = Radix::new(&scenario.axis_dims());
    Ok(radix
        .iter()
        .map(|digits| {
            let mut assignment: Vec<Vec<usize>> =
                scenario.settings().iter().map(|&s| vec![0; s]).collect();
            for (&(n, s), d) in axes.iter().zip(digits) {
                assignment[n][s] = d;
            }
            DeterministicStrategy { assignment }
        })
        .collect())
}

/// Factorizable model: weights `ν` over a finite `Ω` and per-party response
/// distributions that depend only on the party's own setting and `ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct LhvModel<T> {
    omega: Vec<String>,
    weights: Vec<T>,
    /// `responses[n][s][ω]` is a distribution over outcomes of `(n, s)`.
    responses: Vec<Vec<Vec<Vec<T>>>>,
}

impl<T: Scalar> LhvModel<T> {
    pub fn new(
        omega: Vec<String>,
        weights: Vec<T>,
        responses: Vec<Vec<Vec<Vec<T>>>>,
        eps: f64,
    ) -> Result<Self> {
        if omega.is_empty() {
            return input("model needs at least one hidden-variable value");
        }
        if weights.len() != omega.len() {
            return input(format!("{} weights for {} omega labels", weights.len(), omega.len()));
        }
        check_distribution(&weights, eps, "model weights")?;
        if responses.is_empty() {
            return input("model has no parties");
        }
        for (n, party) in responses.iter().enumerate() {
            if party.is_empty() {
                return input(format!("party {} has no settings", n + 1));
            }
            for (s, per_omega) in party.iter().enumerate() {
                if per_omega.len() != omega.len() {
                    return input(format!(
                        "party {} setting {}: {} responses for {} omega labels",
                        n + 1,
                        s + 1,
                        per_omega.len(),
                        omega.len()
                    ));
                }
                let k = per_omega[0].len();
                for (w, dist) in per_omega.iter().enumerate() {
                    if dist.len() != k {
                        return input(format!("party {} setting {}: ragged responses", n + 1, s + 1));
                    }
                    check_distribution(
                        dist,
                        eps,
                        &format!("response of party {} setting {} at {}", n + 1, s + 1, omega[w]),
                    )?;
                }
            }
        }
        Ok(LhvModel {
            omega,
            weights,
            responses,
        })
    }

    pub(crate) fn from_parts(
        omega: Vec<String>,
        weights: Vec<T>,
        responses: Vec<Vec<Vec<Vec<T>>>>,
    ) -> Self {
        LhvModel {
            omega,
            weights,
            responses,
        }
    }

    /// Deterministic model mixing the given strategies.
    pub fn from_strategies(strategies: &[DeterministicStrategy], weights: Vec<T>, scenario: &Scenario) -> Self {
        let omega = strategies.iter().map(DeterministicStrategy::label).collect();
        let responses = (0..scenario.num_parties())
            .map(|n| {
                (0..scenario.num_settings(n))
                    .map(|s| {
                        let k = scenario.outcome_count(n, s).expect("in range");
                        strategies
                            .iter()
                            .map(|st| indicator(k, st.outcome(n, s)))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        LhvModel::from_parts(omega, weights, responses)
    }

    pub fn omega(&self) -> &[String] {
        &self.omega
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn responses(&self) -> &[Vec<Vec<Vec<T>>>] {
        &self.responses
    }

    pub fn response(&self, party: usize, setting: usize, omega: usize) -> &[T] {
        &self.responses[party][setting][omega]
    }

    /// Scenario implied by the response shapes.
    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::new(
            self.responses
                .iter()
                .map(|p| p.iter().map(|s| s[0].len()).collect())
                .collect(),
        )
    }

    /// `Σ_ω ν(ω) ∏_{n∈A} Σ_λ ξ(λ) P_n(λ|ω)`, the model's correlation function
    /// for a dichotomic key.
    pub fn correlation(&self, key: &CorrelationKey) -> T {
        let mut total = T::zero();
        for (w, nu) in self.weights.iter().enumerate() {
            let mut term = nu.clone();
            for (&n, &s) in key.sites.iter().zip(&key.settings) {
                let dist = &self.responses[n][s][w];
                let mean = dist.iter().enumerate().fold(T::zero(), |acc, (o, p)| {
                    acc + T::from_ratio(sign_of_outcome(o), 1) * p.clone()
                });
                term = term * mean;
            }
            total = total + term;
        }
        total
    }
}

pub(crate) fn indicator<T: Scalar>(k: usize, at: usize) -> Vec<T> {
    (0..k).map(|i| if i == at { T::one() } else { T::zero() }).collect()
}

pub(crate) fn uniform<T: Scalar>(k: usize) -> Vec<T> {
    vec![T::from_ratio(1, k as i64); k]
}

/// `P(λ|s) = Σ_ω ν(ω) ∏_n P_n^{(s_n)}(λ_n|ω)`.
pub fn evaluate_model<T: Scalar>(m: &LhvModel<T>, scenario: &Scenario, eps: f64) -> Result<Behavior<T>> {
    if m.responses.len() != scenario.num_parties() {
        return input(format!(
            "model covers {} parties, scenario has {}",
            m.responses.len(),
            scenario.num_parties()
        ));
    }
    for n in 0..scenario.num_parties() {
        if m.responses[n].len() < scenario.num_settings(n) {
            return input(format!("model lacks settings of party {}", n + 1));
        }
        for s in 0..scenario.num_settings(n) {
            let k = scenario.outcome_count(n, s)?;
            if m.responses[n][s][0].len() != k {
                return input(format!(
                    "party {} setting {}: model has {} outcomes, scenario {}",
                    n + 1,
                    s + 1,
                    m.responses[n][s][0].len(),
                    k
                ));
            }
        }
    }
    Behavior::from_fn(scenario.clone(), eps, |t, o| {
        let mut total = T::zero();
        for (w, nu) in m.weights.iter().enumerate() {
            if nu.is_zero() {
                continue;
            }
            let mut term = nu.clone();
            for (n, (&s, &l)) in t.iter().zip(o).enumerate() {
                let p = &m.responses[n][s][w][l];
                if p.is_zero() {
                    term = T::zero();
                    break;
                }
                term = term * p.clone();
            }
            total = total + term;
        }
        total
    })
}
