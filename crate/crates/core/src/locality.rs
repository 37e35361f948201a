//! Nonsignaling, EPR locality and independence checks, plus the canonical
//! PR-box and context-dependent example families.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::scalar::{max_abs_diff, sum, Rational, Scalar};
use crate::scenario::{
    check_sites, marginal, nonempty_subsets, sign_of_outcome, validate_behavior, Behavior,
    Scenario,
};
use crate::tensor::Radix;

/// Where a marginal discrepancy was found.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    /// 0-based site subset.
    pub sites: Vec<usize>,
    pub first: Vec<usize>,
    pub second: Vec<usize>,
    /// Context labels, only for collection checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contexts: Option<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalityReport {
    pub passes: bool,
    /// Max-norm of the worst marginal difference.
    pub violation: f64,
    pub witness: Option<Witness>,
}

impl LocalityReport {
    fn clean() -> Self {
        LocalityReport {
            passes: true,
            violation: 0.0,
            witness: None,
        }
    }
}

struct Worst<T> {
    value: T,
    witness: Option<Witness>,
}

impl<T: Scalar> Worst<T> {
    fn new() -> Self {
        Worst {
            value: T::zero(),
            witness: None,
        }
    }

    fn offer(&mut self, value: T, witness: impl FnOnce() -> Witness) {
        if value > self.value {
            self.value = value;
            self.witness = Some(witness());
        }
    }

    /// The witness is kept only when the check fails.
    fn report(self, eps: f64) -> LocalityReport {
        let passes = self.value.near_zero(eps);
        LocalityReport {
            passes,
            violation: self.value.to_f64(),
            witness: if passes { None } else { self.witness },
        }
    }
}

/// For every proper site subset and every pair of setting tuples that agree
/// on it, compares the marginals onto the subset.
pub fn check_nonsignaling<T: Scalar>(b: &Behavior<T>) -> LocalityReport {
    let scenario = b.scenario();
    let n = scenario.num_parties();
    let tuples = scenario.setting_tuples();
    let mut worst = Worst::new();
    for sites in nonempty_subsets(n) {
        if sites.len() == n {
            continue;
        }
        // Group tuples by their restriction to `sites`; compare every member
        // against every other so the reported witness is the worst pair.
        let mut groups: BTreeMap<Vec<usize>, Vec<(usize, Vec<T>)>> = BTreeMap::new();
        for (i, t) in tuples.iter().enumerate() {
            let key: Vec<usize> = sites.iter().map(|&k| t[k]).collect();
            let m = marginal(b, t, &sites).expect("valid tuple and sites");
            groups.entry(key).or_default().push((i, m));
        }
        for members in groups.values() {
            for (a, (ia, ma)) in members.iter().enumerate() {
                for (ib, mb) in &members[a + 1..] {
                    worst.offer(max_abs_diff(ma, mb), || Witness {
                        sites: sites.clone(),
                        first: tuples[*ia].clone(),
                        second: tuples[*ib].clone(),
                        contexts: None,
                    });
                }
            }
        }
    }
    worst.report(b.eps())
}

/// Behaviors observed in several experimental contexts. Setting `s` of party
/// `n` denotes the same measurement in every context that has it.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentCollection<T> {
    experiments: Vec<Behavior<T>>,
    contexts: Vec<String>,
}

impl<T: Scalar> ExperimentCollection<T> {
    pub fn new(experiments: Vec<Behavior<T>>, contexts: Vec<String>) -> Result<Self> {
        if experiments.is_empty() {
            return input("collection needs at least one experiment");
        }
        if experiments.len() != contexts.len() {
            return input("one context label per experiment required");
        }
        let parties = experiments[0].scenario().num_parties();
        for (b, label) in experiments.iter().zip(&contexts) {
            if b.scenario().num_parties() != parties {
                return input(format!("context {} has a different party count", label));
            }
        }
        for (i, a) in experiments.iter().enumerate() {
            for (j, b) in experiments.iter().enumerate().skip(i + 1) {
                for party in 0..parties {
                    let shared = a.scenario().num_settings(party).min(b.scenario().num_settings(party));
                    for s in 0..shared {
                        let ka = a.scenario().outcome_count(party, s)?;
                        let kb = b.scenario().outcome_count(party, s)?;
                        if ka != kb {
                            return Err(Error::Input(format!(
                                "party {} setting {} has {} outcomes in context {} but {} in context {}",
                                party + 1,
                                s + 1,
                                ka,
                                contexts[i],
                                kb,
                                contexts[j]
                            )));
                        }
                    }
                }
            }
        }
        Ok(ExperimentCollection {
            experiments,
            contexts,
        })
    }

    pub fn experiments(&self) -> &[Behavior<T>] {
        &self.experiments
    }

    pub fn contexts(&self) -> &[String] {
        &self.contexts
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EprReport {
    pub passes: bool,
    pub violation: f64,
    pub witness: Option<Witness>,
    /// Nonsignaling verdict of each context, in order.
    pub per_context: Vec<LocalityReport>,
}

/// Every experiment must be nonsignaling, and marginals onto any site subset
/// with a given setting assignment must not depend on the context.
pub fn check_epr_local<T: Scalar>(c: &ExperimentCollection<T>) -> EprReport {
    let per_context: Vec<LocalityReport> = c.experiments.iter().map(check_nonsignaling).collect();
    let eps = c
        .experiments
        .iter()
        .map(Behavior::eps)
        .fold(0.0f64, f64::max);
    let parties = c.experiments[0].scenario().num_parties();

    // (sites, settings on sites) -> first (context, marginal) seen.
    let mut seen: BTreeMap<(Vec<usize>, Vec<usize>), (usize, Vec<usize>, Vec<T>)> = BTreeMap::new();
    let mut worst = Worst::new();
    for sites in nonempty_subsets(parties) {
        for (ci, b) in c.experiments.iter().enumerate() {
            for t in b.scenario().setting_tuples() {
                let key = (sites.clone(), sites.iter().map(|&k| t[k]).collect::<Vec<_>>());
                let m = marginal(b, &t, &sites).expect("valid tuple and sites");
                match seen.get(&key) {
                    None => {
                        seen.insert(key, (ci, t, m));
                    }
                    Some((cj, tj, mj)) if *cj != ci => {
                        worst.offer(max_abs_diff(mj, &m), || Witness {
                            sites: sites.clone(),
                            first: tj.clone(),
                            second: t.clone(),
                            contexts: Some((c.contexts[*cj].clone(), c.contexts[ci].clone())),
                        });
                    }
                    Some(_) => {}
                }
            }
        }
    }
    let cross = worst.report(eps);
    let (mut violation, mut witness) = (cross.violation, cross.witness);
    for r in &per_context {
        if r.violation > violation && !r.passes {
            violation = r.violation;
            witness = r.witness.clone();
        }
    }
    EprReport {
        passes: cross.passes && per_context.iter().all(|r| r.passes),
        violation,
        witness,
        per_context,
    }
}

/// Whether the joint tensor under `setting_tuple` equals the outer product
/// of its single-site marginals.
pub fn check_independence<T: Scalar>(b: &Behavior<T>, setting_tuple: &[usize]) -> Result<LocalityReport> {
    let table = b.table(setting_tuple)?;
    let n = b.scenario().num_parties();
    if n == 1 {
        return Ok(LocalityReport::clean());
    }
    let singles: Vec<Vec<T>> = (0..n)
        .map(|k| marginal(b, setting_tuple, &[k]))
        .collect::<Result<_>>()?;
    let radix = Radix::new(&b.scenario().outcome_dims(setting_tuple));
    let mut worst = T::zero();
    for (i, p) in table.iter().enumerate() {
        let o = radix.decode(i);
        let product = o
            .iter()
            .zip(&singles)
            .fold(T::one(), |acc, (&k, m)| acc * m[k].clone());
        worst = T::max_of(worst, (p.clone() - product).abs());
    }
    Ok(LocalityReport {
        passes: worst.near_zero(b.eps()),
        violation: worst.to_f64(),
        witness: None,
    })
}

/// The Popescu–Rohrlich box: `P(λ₁,λ₂|s₁,s₂) = 1/2` iff
/// `ξ(λ₁)ξ(λ₂) = (−1)^{s₁ s₂}` (0-based settings).
pub fn make_pr_box() -> Behavior<Rational> {
    let scenario = Scenario::uniform(2, 2, 2).expect("fixed shape");
    Behavior::from_fn(scenario, 0.0, |s, o| {
        let sign = sign_of_outcome(o[0]) * sign_of_outcome(o[1]);
        let target = if s[0] == 1 && s[1] == 1 { -1 } else { 1 };
        if sign == target {
            Rational::from_ratio(1, 2)
        } else {
            Rational::from_ratio(0, 1)
        }
    })
    .expect("fixed shape")
}

/// Per-party conditional response tables for a two-party, finite-Ω mixture:
/// `party[n][s][ω]` is a distribution over the outcomes of setting `s`.
#[derive(Clone, Debug)]
pub struct ConditionalTables<T> {
    pub omega: usize,
    pub party: [Vec<Vec<Vec<T>>>; 2],
}

/// Builds one bipartite behavior per context,
/// `P(λ₁,λ₂|a,b) = Σ_ω P₁^{(a)}(λ₁|ω) P₂^{(b)}(λ₂|ω) τ(ω)`, where the
/// mixing distribution `τ` is chosen per context.
pub fn make_prop1_family<T: Scalar>(
    tables: &ConditionalTables<T>,
    tau_per_context: &[(String, Vec<T>)],
    eps: f64,
) -> Result<ExperimentCollection<T>> {
    let omega = tables.omega;
    if omega == 0 {
        return input("hidden-variable set is empty");
    }
    let mut outcomes = Vec::with_capacity(2);
    for (n, per_setting) in tables.party.iter().enumerate() {
        if per_setting.is_empty() {
            return input(format!("party {} has no settings", n + 1));
        }
        let mut row = Vec::new();
        for (s, per_omega) in per_setting.iter().enumerate() {
            if per_omega.len() != omega {
                return input(format!("party {} setting {}: need {} conditionals", n + 1, s + 1, omega));
            }
            let k = per_omega[0].len();
            for dist in per_omega {
                check_distribution(dist, eps, &format!("party {} setting {}", n + 1, s + 1))?;
                if dist.len() != k {
                    return input(format!("party {} setting {}: ragged conditionals", n + 1, s + 1));
                }
            }
            row.push(k);
        }
        outcomes.push(row);
    }
    let scenario = Scenario::new(outcomes)?;
    let mut experiments = Vec::new();
    let mut labels = Vec::new();
    for (label, tau) in tau_per_context {
        if tau.len() != omega {
            return input(format!("context {}: τ has {} entries, Ω has {}", label, tau.len(), omega));
        }
        check_distribution(tau, eps, &format!("context {} mixing weights", label))?;
        let b = Behavior::from_fn(scenario.clone(), eps, |s, o| {
            (0..omega).fold(T::zero(), |acc, w| {
                acc + tables.party[0][s[0]][w][o[0]].clone()
                    * tables.party[1][s[1]][w][o[1]].clone()
                    * tau[w].clone()
            })
        })?;
        experiments.push(b);
        labels.push(label.clone());
    }
    ExperimentCollection::new(experiments, labels)
}

pub(crate) fn check_distribution<T: Scalar>(dist: &[T], eps: f64, what: &str) -> Result<()> {
    if dist.is_empty() {
        return input(format!("{}: empty distribution", what));
    }
    if dist.iter().any(|p| p.below_zero(eps)) {
        return input(format!("{}: negative probability", what));
    }
    if !sum(dist).near(&T::one(), eps) {
        return input(format!("{}: does not sum to one", what));
    }
    Ok(())
}

/// Behavior valid and nonsignaling; convenience for callers that need both.
pub fn is_valid_nonsignaling<T: Scalar>(b: &Behavior<T>) -> bool {
    validate_behavior(b).is_valid() && check_nonsignaling(b).passes
}

/// Marginal of `b` onto `sites` for a partial setting assignment, taking the
/// first setting at every other site.
pub fn site_marginal<T: Scalar>(b: &Behavior<T>, sites: &[usize], settings: &[usize]) -> Result<Vec<T>> {
    check_sites(sites, b.scenario().num_parties())?;
    if settings.len() != sites.len() {
        return input("one setting per kept site required");
    }
    let mut tuple = vec![0; b.scenario().num_parties()];
    for (&n, &s) in sites.iter().zip(settings) {
        tuple[n] = s;
    }
    marginal(b, &tuple, sites)
}
