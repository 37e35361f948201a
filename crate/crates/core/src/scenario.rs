//! Correlation scenarios, behaviors, and dichotomic correlation sets.
//!
//! Indices are 0-based throughout the library: party `n`, setting `s`,
//! outcome `k`. The JSON layer translates parties and settings to the
//! 1-based labels used in documents.
//!
//! Probability tensors are dense and lexicographically ordered by outcome
//! tuple with site 1 varying slowest; setting tuples are ordered the same
//! way.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::scalar::{max_abs_diff, sum, ArithmeticMode, Scalar};
use crate::tensor::{marginalize, Radix};

/// The index skeleton of a correlation experiment: `N` parties, `S_n`
/// settings per party and `K_{n,s}` outcomes per (party, setting).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    outcomes: Vec<Vec<usize>>,
    labels: BTreeMap<(usize, usize), Vec<String>>,
}

impl Scenario {
    /// `outcomes[n][s]` is the number of outcomes of setting `s` at party `n`.
    pub fn new(outcomes: Vec<Vec<usize>>) -> Result<Self> {
        if outcomes.is_empty() {
            return input("scenario needs at least one party");
        }
        for (n, per_party) in outcomes.iter().enumerate() {
            if per_party.is_empty() {
                return input(format!("party {} has no settings", n + 1));
            }
            if let Some(s) = per_party.iter().position(|&k| k == 0) {
                return input(format!("party {} setting {} has no outcomes", n + 1, s + 1));
            }
        }
        Ok(Scenario {
            outcomes,
            labels: BTreeMap::new(),
        })
    }

    /// Same number of settings and outcomes everywhere.
    pub fn uniform(parties: usize, settings: usize, outcomes: usize) -> Result<Self> {
        Scenario::new(vec![vec![outcomes; settings]; parties])
    }

    /// Attaches display labels to the outcomes of `(party, setting)`.
    pub fn with_labels(mut self, party: usize, setting: usize, labels: Vec<String>) -> Result<Self> {
        let k = self.outcome_count(party, setting)?;
        if labels.len() != k {
            return input(format!(
                "party {} setting {}: {} labels for {} outcomes",
                party + 1,
                setting + 1,
                labels.len(),
                k
            ));
        }
        self.labels.insert((party, setting), labels);
        Ok(self)
    }

    pub fn labels(&self, party: usize, setting: usize) -> Option<&[String]> {
        self.labels.get(&(party, setting)).map(Vec::as_slice)
    }

    pub fn num_parties(&self) -> usize {
        self.outcomes.len()
    }

    pub fn settings(&self) -> Vec<usize> {
        self.outcomes.iter().map(Vec::len).collect()
    }

    pub fn num_settings(&self, party: usize) -> usize {
        self.outcomes[party].len()
    }

    pub fn outcome_count(&self, party: usize, setting: usize) -> Result<usize> {
        self.outcomes
            .get(party)
            .and_then(|p| p.get(setting))
            .copied()
            .ok_or_else(|| {
                Error::Input(format!("no setting {} at party {}", setting + 1, party + 1))
            })
    }

    pub fn outcome_table(&self) -> &[Vec<usize>] {
        &self.outcomes
    }

    pub fn is_dichotomic(&self) -> bool {
        self.outcomes.iter().flatten().all(|&k| k == 2)
    }

    pub(crate) fn setting_radix(&self) -> Radix {
        Radix::new(&self.settings())
    }

    pub fn num_setting_tuples(&self) -> usize {
        self.setting_radix().len()
    }

    /// All setting tuples in lexicographic order.
    pub fn setting_tuples(&self) -> Vec<Vec<usize>> {
        self.setting_radix().iter().collect()
    }

    pub fn setting_index(&self, tuple: &[usize]) -> Result<usize> {
        self.check_setting_tuple(tuple)?;
        Ok(self.setting_radix().encode(tuple))
    }

    pub fn check_setting_tuple(&self, tuple: &[usize]) -> Result<()> {
        if tuple.len() != self.num_parties() {
            return input(format!(
                "setting tuple has {} entries for {} parties",
                tuple.len(),
                self.num_parties()
            ));
        }
        for (n, &s) in tuple.iter().enumerate() {
            if s >= self.num_settings(n) {
                return input(format!("setting {} out of range at party {}", s + 1, n + 1));
            }
        }
        Ok(())
    }

    /// Outcome counts of each site under a setting tuple.
    pub fn outcome_dims(&self, tuple: &[usize]) -> Vec<usize> {
        tuple
            .iter()
            .enumerate()
            .map(|(n, &s)| self.outcomes[n][s])
            .collect()
    }

    /// One axis per (party, setting), ordered lexicographically by `(n, s)`.
    pub fn axes(&self) -> Vec<(usize, usize)> {
        self.outcomes
            .iter()
            .enumerate()
            .flat_map(|(n, p)| (0..p.len()).map(move |s| (n, s)))
            .collect()
    }

    pub fn axis_dims(&self) -> Vec<usize> {
        self.outcomes.iter().flatten().copied().collect()
    }

    /// Position of axis `(party, setting)` in [`Scenario::axes`].
    pub fn axis_index(&self, party: usize, setting: usize) -> usize {
        self.outcomes[..party].iter().map(Vec::len).sum::<usize>() + setting
    }

    /// Scenario restricted to the listed parties (in the given order).
    pub fn restrict_parties(&self, sites: &[usize]) -> Result<Scenario> {
        check_sites(sites, self.num_parties())?;
        let mut out = Scenario::new(sites.iter().map(|&n| self.outcomes[n].clone()).collect())?;
        for (new_n, &n) in sites.iter().enumerate() {
            for s in 0..self.num_settings(n) {
                if let Some(l) = self.labels(n, s) {
                    out.labels.insert((new_n, s), l.to_vec());
                }
            }
        }
        Ok(out)
    }
}

pub(crate) fn check_sites(sites: &[usize], parties: usize) -> Result<()> {
    if sites.is_empty() {
        return input("site subset is empty");
    }
    if sites.windows(2).any(|w| w[0] >= w[1]) {
        return input("site subset must be strictly increasing");
    }
    if let Some(&bad) = sites.iter().find(|&&n| n >= parties) {
        return input(format!("site {} out of range ({} parties)", bad + 1, parties));
    }
    Ok(())
}

/// All nonempty subsets of `0..n` as strictly increasing vectors, ordered by
/// size and then lexicographically.
pub fn nonempty_subsets(n: usize) -> Vec<Vec<usize>> {
    let mut subsets: Vec<Vec<usize>> = (1u32..(1u32 << n))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    subsets
}

/// The family of joint outcome distributions, one tensor per setting tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct Behavior<T> {
    scenario: Scenario,
    tables: Vec<Vec<T>>,
    eps: f64,
}

impl<T: Scalar> Behavior<T> {
    /// Builds a behavior from one flat tensor per setting tuple.
    ///
    /// Only the structure is checked here; probabilistic validity is the job
    /// of [`validate_behavior`]. `eps` is ignored in exact mode.
    pub fn new(scenario: Scenario, tables: Vec<Vec<T>>, eps: f64) -> Result<Self> {
        let radix = scenario.setting_radix();
        if tables.len() != radix.len() {
            return input(format!(
                "expected {} setting tuples, got {}",
                radix.len(),
                tables.len()
            ));
        }
        for (i, t) in tables.iter().enumerate() {
            let tuple = radix.decode(i);
            let want: usize = scenario.outcome_dims(&tuple).iter().product();
            if t.len() != want {
                return input(format!(
                    "table {} has {} entries, expected {}",
                    fmt_tuple(&tuple),
                    t.len(),
                    want
                ));
            }
        }
        if !(eps >= 0.0) {
            return input("tolerance must be nonnegative");
        }
        Ok(Behavior {
            scenario,
            tables,
            eps: if T::EXACT { 0.0 } else { eps },
        })
    }

    /// Builds a behavior by evaluating `f(setting tuple, outcome tuple)`.
    pub fn from_fn(
        scenario: Scenario,
        eps: f64,
        mut f: impl FnMut(&[usize], &[usize]) -> T,
    ) -> Result<Self> {
        let tables = scenario
            .setting_tuples()
            .iter()
            .map(|tuple| {
                Radix::new(&scenario.outcome_dims(tuple))
                    .iter()
                    .map(|o| f(tuple, &o))
                    .collect()
            })
            .collect();
        Behavior::new(scenario, tables, eps)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn mode(&self) -> ArithmeticMode {
        T::mode(self.eps)
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        if !T::EXACT {
            self.eps = eps;
        }
        self
    }

    pub fn tables(&self) -> &[Vec<T>] {
        &self.tables
    }

    pub fn table(&self, setting_tuple: &[usize]) -> Result<&[T]> {
        let i = self.scenario.setting_index(setting_tuple)?;
        Ok(&self.tables[i])
    }

    /// `P(outcome tuple | setting tuple)`.
    pub fn prob(&self, setting_tuple: &[usize], outcome_tuple: &[usize]) -> Result<&T> {
        let dims = self.scenario.outcome_dims(setting_tuple);
        if outcome_tuple.len() != dims.len() || outcome_tuple.iter().zip(&dims).any(|(o, k)| o >= k) {
            return input(format!("outcome tuple {:?} out of range", outcome_tuple));
        }
        let t = self.table(setting_tuple)?;
        Ok(&t[Radix::new(&dims).encode(outcome_tuple)])
    }

    pub fn map<U: Scalar>(&self, eps: f64, f: impl Fn(&T) -> U) -> Behavior<U> {
        Behavior {
            scenario: self.scenario.clone(),
            tables: self
                .tables
                .iter()
                .map(|t| t.iter().map(&f).collect())
                .collect(),
            eps: if U::EXACT { 0.0 } else { eps },
        }
    }

    pub fn to_float(&self) -> Behavior<f64> {
        let eps = if T::EXACT { crate::scalar::DEFAULT_EPSILON } else { self.eps };
        self.map(eps, |x| x.to_f64())
    }

    /// Largest absolute entrywise difference to another behavior on the same scenario.
    pub fn max_abs_diff(&self, other: &Behavior<T>) -> Result<T> {
        if self.scenario != other.scenario {
            return Err(Error::Dimension("behaviors live on different scenarios".into()));
        }
        Ok(self
            .tables
            .iter()
            .zip(&other.tables)
            .map(|(a, b)| max_abs_diff(a, b))
            .fold(T::zero(), T::max_of))
    }

    /// Convex combination `weight * self + (1 - weight) * other`.
    pub fn mix(&self, weight: &T, other: &Behavior<T>) -> Result<Behavior<T>> {
        if self.scenario != other.scenario {
            return Err(Error::Dimension("behaviors live on different scenarios".into()));
        }
        let rest = T::one() - weight.clone();
        let tables = self
            .tables
            .iter()
            .zip(&other.tables)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| weight.clone() * x.clone() + rest.clone() * y.clone())
                    .collect()
            })
            .collect();
        Behavior::new(self.scenario.clone(), tables, self.eps.max(other.eps))
    }

    /// Sub-behavior keeping only the listed settings of each party.
    pub fn restrict_settings(&self, kept: &[Vec<usize>]) -> Result<Behavior<T>> {
        let n = self.scenario.num_parties();
        if kept.len() != n {
            return input("one kept-settings list per party required");
        }
        let mut outcomes = Vec::with_capacity(n);
        for (party, list) in kept.iter().enumerate() {
            if list.is_empty() {
                return input(format!("party {} keeps no settings", party + 1));
            }
            let mut row = Vec::with_capacity(list.len());
            for &s in list {
                row.push(self.scenario.outcome_count(party, s)?);
            }
            outcomes.push(row);
        }
        let scenario = Scenario::new(outcomes)?;
        let tables = scenario
            .setting_tuples()
            .iter()
            .map(|t| {
                let orig: Vec<usize> = t.iter().enumerate().map(|(p, &s)| kept[p][s]).collect();
                self.table(&orig).map(<[T]>::to_vec)
            })
            .collect::<Result<Vec<_>>>()?;
        Behavior::new(scenario, tables, self.eps)
    }

    /// Behavior of the parties in `sites`, obtained by marginalizing out all
    /// other parties with their first setting.
    pub fn reduce_to_sites(&self, sites: &[usize]) -> Result<Behavior<T>> {
        let scenario = self.scenario.restrict_parties(sites)?;
        let n = self.scenario.num_parties();
        let tables = scenario
            .setting_tuples()
            .iter()
            .map(|t| {
                let mut full = vec![0; n];
                for (i, &site) in sites.iter().enumerate() {
                    full[site] = t[i];
                }
                marginal(self, &full, sites)
            })
            .collect::<Result<Vec<_>>>()?;
        Behavior::new(scenario, tables, self.eps)
    }
}

impl<T: Scalar> fmt::Display for Behavior<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (tuple, table) in self.scenario.setting_tuples().iter().zip(&self.tables) {
            let row: Vec<String> = table.iter().map(ToString::to_string).collect();
            writeln!(f, "{}: [{}]", fmt_tuple(tuple), row.join(", "))?;
        }
        Ok(())
    }
}

/// Renders a 0-based tuple with 1-based labels, e.g. `(1,2)`.
pub(crate) fn fmt_tuple(t: &[usize]) -> String {
    let parts: Vec<String> = t.iter().map(|x| (x + 1).to_string()).collect();
    format!("({})", parts.join(","))
}

/// A single violated behavior invariant.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationIssue {
    /// Entry below zero (beyond tolerance in float mode).
    Negative {
        settings: Vec<usize>,
        outcomes: Vec<usize>,
        value: f64,
    },
    /// Tensor does not sum to one.
    Normalization { settings: Vec<usize>, sum: f64 },
    /// Setting tuple with no table (reported by the document loader).
    MissingTable { settings: Vec<usize> },
    /// Table of the wrong size (reported by the document loader).
    WrongLength {
        settings: Vec<usize>,
        expected: usize,
        found: usize,
    },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::Negative { settings, outcomes, value } => write!(
                f,
                "negative entry {} at settings {} outcome {:?}",
                value,
                fmt_tuple(settings),
                outcomes
            ),
            ValidationIssue::Normalization { settings, sum } => {
                write!(f, "table {} sums to {}", fmt_tuple(settings), sum)
            }
            ValidationIssue::MissingTable { settings } => {
                write!(f, "missing table for settings {}", fmt_tuple(settings))
            }
            ValidationIssue::WrongLength { settings, expected, found } => write!(
                f,
                "table {} has {} entries, expected {}",
                fmt_tuple(settings),
                found,
                expected
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Reports every negativity and normalization violation of `b`.
pub fn validate_behavior<T: Scalar>(b: &Behavior<T>) -> ValidationReport {
    let mut issues = Vec::new();
    for (tuple, table) in b.scenario.setting_tuples().iter().zip(&b.tables) {
        let radix = Radix::new(&b.scenario.outcome_dims(tuple));
        for (i, p) in table.iter().enumerate() {
            if p.below_zero(b.eps) {
                issues.push(ValidationIssue::Negative {
                    settings: tuple.clone(),
                    outcomes: radix.decode(i),
                    value: p.to_f64(),
                });
            }
        }
        let total = sum(table);
        if !total.near(&T::one(), b.eps) {
            issues.push(ValidationIssue::Normalization {
                settings: tuple.clone(),
                sum: total.to_f64(),
            });
        }
    }
    ValidationReport { issues }
}

/// Joint distribution of the outcomes at `kept_sites` under `setting_tuple`.
pub fn marginal<T: Scalar>(
    b: &Behavior<T>,
    setting_tuple: &[usize],
    kept_sites: &[usize],
) -> Result<Vec<T>> {
    check_sites(kept_sites, b.scenario.num_parties())?;
    let table = b.table(setting_tuple)?;
    Ok(marginalize(
        table,
        &b.scenario.outcome_dims(setting_tuple),
        kept_sites,
    ))
}

/// `Σ_λ ∏_n φ_n(λ_n) P(λ | s)`, with each `φ_n` given as its values on the
/// outcomes of the site's setting.
pub fn product_expectation<T: Scalar>(
    b: &Behavior<T>,
    setting_tuple: &[usize],
    functions: &[Vec<T>],
) -> Result<T> {
    let table = b.table(setting_tuple)?;
    let dims = b.scenario.outcome_dims(setting_tuple);
    if functions.len() != dims.len() {
        return input(format!(
            "{} functions for {} sites",
            functions.len(),
            dims.len()
        ));
    }
    for (n, (phi, &k)) in functions.iter().zip(&dims).enumerate() {
        if phi.len() != k {
            return input(format!(
                "function at site {} defined on {} outcomes, setting has {}",
                n + 1,
                phi.len(),
                k
            ));
        }
    }
    let radix = Radix::new(&dims);
    let mut acc = T::zero();
    for (i, p) in table.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let o = radix.decode(i);
        let weight = o
            .iter()
            .zip(functions)
            .fold(T::one(), |w, (&k, phi)| w * phi[k].clone());
        acc = acc + weight * p.clone();
    }
    Ok(acc)
}

/// `ξ(λ)` under the fixed encoding `0 ↦ +1`, `1 ↦ −1`.
pub fn sign_of_outcome(outcome: usize) -> i64 {
    if outcome == 0 {
        1
    } else {
        -1
    }
}

/// A product mean `⟨λ_{n_1} ⋯ λ_{n_M}⟩` identified by its sites and the
/// settings used on those sites.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CorrelationKey {
    pub sites: Vec<usize>,
    pub settings: Vec<usize>,
}

impl CorrelationKey {
    pub fn new(sites: Vec<usize>, settings: Vec<usize>) -> Self {
        CorrelationKey { sites, settings }
    }

    /// Key for the sites in `sites` under the full setting tuple `tuple`.
    pub fn from_tuple(sites: &[usize], tuple: &[usize]) -> Self {
        CorrelationKey {
            sites: sites.to_vec(),
            settings: sites.iter().map(|&n| tuple[n]).collect(),
        }
    }
}

impl fmt::Display for CorrelationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sites: Vec<String> = self.sites.iter().map(|x| (x + 1).to_string()).collect();
        let settings: Vec<String> = self.settings.iter().map(|x| (x + 1).to_string()).collect();
        write!(f, "{}|{}", sites.join(","), settings.join(","))
    }
}

/// All correlation keys of a scenario: every nonempty site subset with every
/// setting assignment on it.
pub fn correlation_keys(scenario: &Scenario) -> Vec<CorrelationKey> {
    let mut keys = Vec::new();
    for sites in nonempty_subsets(scenario.num_parties()) {
        let dims: Vec<usize> = sites.iter().map(|&n| scenario.num_settings(n)).collect();
        for settings in Radix::new(&dims).iter() {
            keys.push(CorrelationKey::new(sites.clone(), settings));
        }
    }
    keys
}

/// Means of products of ±1 outcomes for a dichotomic scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationSet<T> {
    scenario: Scenario,
    means: BTreeMap<CorrelationKey, T>,
    eps: f64,
}

impl<T: Scalar> CorrelationSet<T> {
    /// Checks the scenario is dichotomic, every key is well formed and every
    /// value lies in `[−1, 1]`. Completeness is checked by the consumers.
    pub fn new(scenario: Scenario, means: BTreeMap<CorrelationKey, T>, eps: f64) -> Result<Self> {
        if !scenario.is_dichotomic() {
            return input("correlation sets require two outcomes at every setting");
        }
        for (key, value) in &means {
            check_sites(&key.sites, scenario.num_parties())?;
            if key.settings.len() != key.sites.len() {
                return input(format!("key {} has mismatched settings", key));
            }
            for (&n, &s) in key.sites.iter().zip(&key.settings) {
                if s >= scenario.num_settings(n) {
                    return input(format!("key {} refers to an unknown setting", key));
                }
            }
            if (value.clone() - T::one()).above_zero(eps) || (value.clone() + T::one()).below_zero(eps) {
                return input(format!("mean {} = {} outside [-1, 1]", key, value));
            }
        }
        Ok(CorrelationSet {
            scenario,
            means,
            eps: if T::EXACT { 0.0 } else { eps },
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn means(&self) -> &BTreeMap<CorrelationKey, T> {
        &self.means
    }

    pub fn get(&self, key: &CorrelationKey) -> Option<&T> {
        self.means.get(key)
    }

    pub fn missing_keys(&self) -> Vec<CorrelationKey> {
        correlation_keys(&self.scenario)
            .into_iter()
            .filter(|k| !self.means.contains_key(k))
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.missing_keys().is_empty()
    }

    /// Largest absolute difference over the keys of `self`.
    pub fn max_abs_diff(&self, other: &CorrelationSet<T>) -> T {
        self.means
            .iter()
            .map(|(k, v)| match other.means.get(k) {
                Some(w) => (v.clone() - w.clone()).abs(),
                None => T::one() + T::one(),
            })
            .fold(T::zero(), T::max_of)
    }
}

/// Means of all products of ±1 outcomes, one per site subset and setting
/// assignment. Lower-order means are read off the lexicographically first
/// setting tuple that carries the assignment; for nonsignaling behaviors
/// this choice is immaterial.
pub fn behavior_to_correlations<T: Scalar>(b: &Behavior<T>) -> Result<CorrelationSet<T>> {
    let scenario = b.scenario();
    if !scenario.is_dichotomic() {
        return input("correlations need a dichotomic scenario");
    }
    let n = scenario.num_parties();
    let plus_minus = vec![T::one(), -T::one()];
    let ones = vec![T::one(), T::one()];
    let mut means = BTreeMap::new();
    for key in correlation_keys(scenario) {
        let mut tuple = vec![0; n];
        for (&site, &s) in key.sites.iter().zip(&key.settings) {
            tuple[site] = s;
        }
        let functions: Vec<Vec<T>> = (0..n)
            .map(|site| {
                if key.sites.contains(&site) {
                    plus_minus.clone()
                } else {
                    ones.clone()
                }
            })
            .collect();
        means.insert(key, product_expectation(b, &tuple, &functions)?);
    }
    CorrelationSet::new(scenario.clone(), means, b.eps())
}

/// Reconstructs joint probabilities from a complete correlation set:
/// `P(λ | s) = 2^{−N} [1 + Σ_A ∏_{n∈A} ξ(λ_n) ⟨∏_{n∈A} λ_n⟩_{s_A}]`.
///
/// The result can have negative entries when `c` is not a valid correlation
/// set; they are listed in the returned report, never clipped.
pub fn correlations_to_behavior<T: Scalar>(
    c: &CorrelationSet<T>,
) -> Result<(Behavior<T>, ValidationReport)> {
    let missing = c.missing_keys();
    if !missing.is_empty() {
        let shown: Vec<String> = missing.iter().take(4).map(ToString::to_string).collect();
        return input(format!(
            "correlation set incomplete: {} means missing (e.g. {})",
            missing.len(),
            shown.join(", ")
        ));
    }
    let scenario = c.scenario().clone();
    let n = scenario.num_parties();
    let subsets = nonempty_subsets(n);
    let scale = T::from_ratio(1, 1i64 << n);
    let b = Behavior::from_fn(scenario, c.eps(), |tuple, outcomes| {
        let mut acc = T::one();
        for sites in &subsets {
            let key = CorrelationKey::from_tuple(sites, tuple);
            let sign: i64 = sites.iter().map(|&i| sign_of_outcome(outcomes[i])).product();
            let mean = c.means[&key].clone();
            acc = if sign > 0 { acc + mean } else { acc - mean };
        }
        acc * scale.clone()
    })?;
    let report = validate_behavior(&b);
    Ok((b, report))
}
