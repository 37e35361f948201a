use crate::error::{input, Result};
use crate::locality::check_nonsignaling;
use crate::scalar::{max_abs_diff, sum, Scalar};
use crate::scenario::{fmt_tuple, marginal, Behavior, Scenario};
use crate::tensor::{marginalize, Radix};

use super::feasibility::JointMeasure;
use super::{indicator, uniform, LhvModel};

/// Explicit model for a behavior in which only `free_party` has more than one
/// setting. `Ω` is the set of outcome tuples of the other parties, weighted
/// by their (setting-independent) marginal; the free party responds with the
/// conditional distribution given `ω`, uniform where `ω` has zero weight.
pub fn single_multisetting_model<T: Scalar>(b: &Behavior<T>, free_party: usize) -> Result<LhvModel<T>> {
    let scenario = b.scenario();
    let n = scenario.num_parties();
    if free_party >= n {
        return input(format!("party {} out of range", free_party + 1));
    }
    for p in (0..n).filter(|&p| p != free_party) {
        if scenario.num_settings(p) != 1 {
            return input(format!("party {} has {} settings, expected 1", p + 1, scenario.num_settings(p)));
        }
    }
    let ns = check_nonsignaling(b);
    if !ns.passes {
        return input(format!(
            "behavior is signaling (violation {:.3e}); the common marginal does not exist",
            ns.violation
        ));
    }

    let fixed: Vec<usize> = (0..n).filter(|&p| p != free_party).collect();
    let tuple_for = |s: usize| {
        let mut t = vec![0; n];
        t[free_party] = s;
        t
    };
    // Lowest-index setting supplies τ; nonsignaling makes the choice moot.
    let tau = if fixed.is_empty() {
        vec![T::one()]
    } else {
        marginal(b, &tuple_for(0), &fixed)?
    };
    let fixed_dims: Vec<usize> = fixed.iter().map(|&p| scenario.outcome_count(p, 0).expect("checked")).collect();
    let omega_radix = Radix::new(&fixed_dims);
    let omega: Vec<String> = omega_radix.iter().map(|o| fmt_tuple(&o)).collect();

    let mut responses: Vec<Vec<Vec<Vec<T>>>> = vec![Vec::new(); n];
    for s in 0..scenario.num_settings(free_party) {
        let t = tuple_for(s);
        let k = scenario.outcome_count(free_party, s)?;
        let dims = scenario.outcome_dims(&t);
        let table_radix = Radix::new(&dims);
        let table = b.table(&t)?;
        let mut per_omega = Vec::with_capacity(omega_radix.len());
        for (w, o_fixed) in omega_radix.iter().enumerate() {
            if tau[w].is_zero() {
                per_omega.push(uniform(k));
                continue;
            }
            let mut full = vec![0; n];
            for (&p, &o) in fixed.iter().zip(&o_fixed) {
                full[p] = o;
            }
            let dist = (0..k)
                .map(|l| {
                    full[free_party] = l;
                    table[table_radix.encode(&full)].clone() / tau[w].clone()
                })
                .collect();
            per_omega.push(dist);
        }
        responses[free_party].push(per_omega);
    }
    for (i, &p) in fixed.iter().enumerate() {
        let k = fixed_dims[i];
        responses[p] = vec![omega_radix.iter().map(|o| indicator(k, o[i])).collect()];
    }
    Ok(LhvModel::from_parts(omega, tau, responses))
}

/// Which party's settings are split across the family of measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    /// One measure per setting of party 1, each covering all of party 2.
    Right,
    /// One measure per setting of party 2, each covering all of party 1.
    Left,
}

impl Direction {
    fn own(self) -> usize {
        match self {
            Direction::Right => 0,
            Direction::Left => 1,
        }
    }
}

/// A distribution on the outcomes of one setting of the split party together
/// with all settings of the other party. Axes follow the joint-measure order
/// (party 1's axes first).
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionalMeasure<T> {
    pub direction: Direction,
    /// Setting of the split party (0-based).
    pub setting: usize,
    pub dims: Vec<usize>,
    pub tensor: Vec<T>,
}

impl<T: Scalar> DirectionalMeasure<T> {
    /// Position of the split party's single axis.
    fn own_axis(&self) -> usize {
        match self.direction {
            Direction::Right => 0,
            Direction::Left => self.dims.len() - 1,
        }
    }

    fn other_axes(&self) -> Vec<usize> {
        let own = self.own_axis();
        (0..self.dims.len()).filter(|&a| a != own).collect()
    }

    /// Marginal on the other party's axes.
    pub fn other_marginal(&self) -> Vec<T> {
        marginalize(&self.tensor, &self.dims, &self.other_axes())
    }

    /// Bipartite table for `(own setting, other setting)` in
    /// `(party 1 outcome, party 2 outcome)` order.
    pub fn pair_marginal(&self, other_setting: usize) -> Vec<T> {
        let own = self.own_axis();
        let other = self.other_axes()[other_setting];
        let mut keep = [own, other];
        keep.sort_unstable();
        marginalize(&self.tensor, &self.dims, &keep)
    }
}

fn require_bipartite(scenario: &Scenario) -> Result<()> {
    if scenario.num_parties() != 2 {
        return input(format!(
            "directional measures need two parties, scenario has {}",
            scenario.num_parties()
        ));
    }
    Ok(())
}

fn kept_axes(scenario: &Scenario, direction: Direction, setting: usize) -> Vec<usize> {
    let own = direction.own();
    let other = 1 - own;
    let mut axes: Vec<usize> = (0..scenario.num_settings(other))
        .map(|s| scenario.axis_index(other, s))
        .collect();
    axes.push(scenario.axis_index(own, setting));
    axes.sort_unstable();
    axes
}

/// One marginal of `μ` per setting of the split party, keeping that setting's
/// axis and every axis of the other party.
pub fn extract_directional_measures<T: Scalar>(
    mu: &JointMeasure<T>,
    direction: Direction,
) -> Result<Vec<DirectionalMeasure<T>>> {
    let scenario = mu.scenario();
    require_bipartite(scenario)?;
    let all_dims = scenario.axis_dims();
    Ok((0..scenario.num_settings(direction.own()))
        .map(|s| {
            let axes = kept_axes(scenario, direction, s);
            DirectionalMeasure {
                direction,
                setting: s,
                dims: axes.iter().map(|&a| all_dims[a]).collect(),
                tensor: mu.marginal(&axes),
            }
        })
        .collect())
}

/// Glues compatible directional measures into one joint measure:
/// `μ(λ_own, λ_other) = ∏_s α_s(λ_own^{(s)} | λ_other) · τ(λ_other)`, where
/// `τ` is the shared marginal on the other party and `α_s` the conditionals
/// (uniform on `τ`-null points). Every input is a marginal of the result.
pub fn assemble_from_directional_measures<T: Scalar>(
    scenario: &Scenario,
    measures: &[DirectionalMeasure<T>],
    eps: f64,
) -> Result<JointMeasure<T>> {
    require_bipartite(scenario)?;
    let Some(first) = measures.first() else {
        return input("no directional measures given");
    };
    let direction = first.direction;
    let own = direction.own();
    let other = 1 - own;
    if measures.len() != scenario.num_settings(own) {
        return input(format!(
            "{} measures for {} settings of party {}",
            measures.len(),
            scenario.num_settings(own),
            own + 1
        ));
    }
    let all_dims = scenario.axis_dims();
    for (s, m) in measures.iter().enumerate() {
        let expected: Vec<usize> = kept_axes(scenario, direction, s).iter().map(|&a| all_dims[a]).collect();
        if m.direction != direction || m.setting != s || m.dims != expected {
            return input(format!("measure {} does not match the scenario layout", s + 1));
        }
        if m.tensor.len() != expected.iter().product::<usize>() {
            return input(format!("measure {} has the wrong number of entries", s + 1));
        }
        if m.tensor.iter().any(|p| p.below_zero(eps)) || !sum(&m.tensor).near(&T::one(), eps) {
            return input(format!("measure {} is not a probability distribution", s + 1));
        }
    }
    let tau = first.other_marginal();
    for m in &measures[1..] {
        let gap = max_abs_diff(&tau, &m.other_marginal());
        if !gap.near_zero(eps) {
            return input(format!(
                "measures disagree on party {}'s marginal (gap {})",
                other + 1,
                gap
            ));
        }
    }

    let other_dims: Vec<usize> = (0..scenario.num_settings(other))
        .map(|s| scenario.outcome_count(other, s).expect("in range"))
        .collect();
    let other_radix = Radix::new(&other_dims);
    let grid = Radix::new(&all_dims);
    let own_axes: Vec<usize> = (0..scenario.num_settings(own)).map(|s| scenario.axis_index(own, s)).collect();
    let other_axes: Vec<usize> = (0..scenario.num_settings(other)).map(|s| scenario.axis_index(other, s)).collect();

    let tensor = grid
        .iter()
        .map(|digits| {
            let lo: Vec<usize> = other_axes.iter().map(|&a| digits[a]).collect();
            let w = other_radix.encode(&lo);
            let t = &tau[w];
            let mut value = t.clone();
            for (s, m) in measures.iter().enumerate() {
                let lam = digits[own_axes[s]];
                let k = all_dims[own_axes[s]];
                let alpha = if t.is_zero() {
                    T::from_ratio(1, k as i64)
                } else {
                    let mut local = lo.clone();
                    local.insert(m.own_axis(), lam);
                    m.tensor[Radix::new(&m.dims).encode(&local)].clone() / t.clone()
                };
                value = value * alpha;
            }
            value
        })
        .collect();
    Ok(JointMeasure::from_parts(scenario.clone(), tensor))
}
