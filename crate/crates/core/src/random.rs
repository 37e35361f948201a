//! Random scenarios, behaviors, models, states and measurements for testing
//! and demos. Exact generators keep denominators small so exact LPs stay
//! cheap.

use rand::Rng;

use crate::lhv::LhvModel;
use crate::quantum::{ComplexMatrix, DensityOperator, MeasurementSetup, Povm, SeparableDecomposition, C64};
use crate::quantum::hermitian_eigenvalues;
use crate::scalar::{Rational, Scalar};
use crate::scenario::{Behavior, Scenario};

/// Distribution over `k` points with entries `w_i / Σ w` for integer weights
/// in `0..=max_weight` (never all zero).
pub fn rational_distribution<R: Rng + ?Sized>(rng: &mut R, k: usize, max_weight: u32) -> Vec<Rational> {
    loop {
        let w: Vec<i64> = (0..k).map(|_| rng.gen_range(0..=max_weight) as i64).collect();
        let total: i64 = w.iter().sum();
        if total > 0 {
            return w.iter().map(|&x| Rational::from_ratio(x, total)).collect();
        }
    }
}

pub fn float_distribution<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Scenario with `1..=max_parties` parties, `1..=max_settings` settings per
/// party and `2..=max_outcomes` outcomes per setting.
pub fn scenario<R: Rng + ?Sized>(rng: &mut R, max_parties: usize, max_settings: usize, max_outcomes: usize) -> Scenario {
    let n = rng.gen_range(1..=max_parties);
    Scenario::new(
        (0..n)
            .map(|_| {
                let s = rng.gen_range(1..=max_settings);
                (0..s).map(|_| rng.gen_range(2..=max_outcomes.max(2))).collect()
            })
            .collect(),
    )
    .expect("positive shape")
}

/// Every table an independent random distribution; generally signaling.
pub fn exact_behavior<R: Rng + ?Sized>(rng: &mut R, scn: &Scenario, max_weight: u32) -> Behavior<Rational> {
    let tables = scn
        .setting_tuples()
        .iter()
        .map(|t| rational_distribution(rng, scn.outcome_dims(t).iter().product(), max_weight))
        .collect();
    Behavior::new(scn.clone(), tables, 0.0).expect("shaped by scenario")
}

/// Factorizable model with `omega` hidden values and random responses.
pub fn exact_model<R: Rng + ?Sized>(rng: &mut R, scn: &Scenario, omega: usize, max_weight: u32) -> LhvModel<Rational> {
    let responses = (0..scn.num_parties())
        .map(|n| {
            (0..scn.num_settings(n))
                .map(|s| {
                    let k = scn.outcome_count(n, s).expect("in range");
                    (0..omega).map(|_| rational_distribution(rng, k, max_weight)).collect()
                })
                .collect()
        })
        .collect();
    LhvModel::new(
        (0..omega).map(|w| format!("w{}", w + 1)).collect(),
        rational_distribution(rng, omega, max_weight),
        responses,
        0.0,
    )
    .expect("valid by construction")
}

/// Model whose responses are point masses at random outcomes.
pub fn deterministic_model<R: Rng + ?Sized>(rng: &mut R, scn: &Scenario, omega: usize, max_weight: u32) -> LhvModel<Rational> {
    let responses = (0..scn.num_parties())
        .map(|n| {
            (0..scn.num_settings(n))
                .map(|s| {
                    let k = scn.outcome_count(n, s).expect("in range");
                    (0..omega)
                        .map(|_| {
                            let at = rng.gen_range(0..k);
                            (0..k).map(|i| Rational::from_ratio((i == at) as i64, 1)).collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    LhvModel::new(
        (0..omega).map(|w| format!("w{}", w + 1)).collect(),
        rational_distribution(rng, omega, max_weight),
        responses,
        0.0,
    )
    .expect("valid by construction")
}

fn complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// `G G† / tr` for a random `d × rank` complex `G`.
pub fn density_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_vec(d, rank, (0..d * rank).map(|_| complex(rng)).collect()).expect("sized");
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    m.scale(1.0 / tr).hermitian_part()
}

pub fn density_operator<R: Rng + ?Sized>(rng: &mut R, dims: &[usize]) -> DensityOperator {
    let d: usize = dims.iter().product();
    DensityOperator::new(dims.to_vec(), density_matrix(rng, d, d), 1e-9).expect("valid by construction")
}

pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, dims: &[usize]) -> DensityOperator {
    let d: usize = dims.iter().product();
    let v: Vec<C64> = (0..d).map(|_| complex(rng)).collect();
    DensityOperator::pure(dims.to_vec(), &v).expect("nonzero")
}

/// `k`-outcome POVM: scaled random positive effects plus the remainder
/// `I − Σ` as the last effect.
pub fn povm<R: Rng + ?Sized>(rng: &mut R, d: usize, k: usize) -> Povm {
    if k == 1 {
        return Povm::trivial(d);
    }
    let raw: Vec<ComplexMatrix> = (0..k - 1)
        .map(|_| {
            let rank = rng.gen_range(1..=d);
            density_matrix(rng, d, rank)
        })
        .collect();
    let mut total = ComplexMatrix::zeros(d, d);
    for e in &raw {
        total = &total + e;
    }
    let top = *hermitian_eigenvalues(&total).expect("hermitian").last().expect("nonempty");
    let shrink = rng.gen_range(0.5..1.0) / top;
    let mut effects: Vec<ComplexMatrix> = raw.iter().map(|e| e.scale(shrink)).collect();
    let rest = &ComplexMatrix::identity(d) - &total.scale(shrink);
    effects.push(rest.hermitian_part());
    Povm::new(effects, 1e-9).expect("valid by construction")
}

/// Spin measurement along a uniformly random direction.
pub fn qubit_projective<R: Rng + ?Sized>(rng: &mut R) -> Povm {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).sqrt();
    Povm::spin([r * phi.cos(), r * phi.sin(), z]).expect("unit vector")
}

pub fn setup<R: Rng + ?Sized>(rng: &mut R, dims: &[usize], settings: &[usize], outcomes: usize) -> MeasurementSetup {
    MeasurementSetup::new(
        dims.iter()
            .zip(settings)
            .map(|(&d, &s)| (0..s).map(|_| povm(rng, d, outcomes)).collect())
            .collect(),
    )
    .expect("nonempty")
}

pub fn separable<R: Rng + ?Sized>(rng: &mut R, dims: &[usize], terms: usize) -> SeparableDecomposition {
    let weights = float_distribution(rng, terms);
    let factors = (0..terms)
        .map(|_| {
            dims.iter()
                .map(|&d| {
                    let rank = rng.gen_range(1..=d);
                    DensityOperator::new(vec![d], density_matrix(rng, d, rank), 1e-9).expect("valid")
                })
                .collect()
        })
        .collect();
    SeparableDecomposition::new(weights, factors, 1e-9).expect("valid by construction")
}

/// `v·b + (1−v)·uniform`.
pub fn with_white_noise(b: &Behavior<Rational>, visibility: &Rational) -> Behavior<Rational> {
    let scn = b.scenario().clone();
    let uniform = Behavior::from_fn(scn.clone(), 0.0, |t, _| {
        Rational::from_ratio(1, scn.outcome_dims(t).iter().product::<usize>() as i64)
    })
    .expect("shaped");
    b.mix(visibility, &uniform).expect("same scenario")
}

/// Box correlating parties 1 and 2 as `a ⊕ b = x·y` (settings taken mod 2),
/// uniform on every other party. Needs two outcomes on every setting of the
/// first two parties.
pub fn pr_embedding(scn: &Scenario) -> Option<Behavior<Rational>> {
    let t = scn.outcome_table();
    if t.len() < 2 || t[..2].iter().flatten().any(|&k| k != 2) {
        return None;
    }
    Behavior::from_fn(scn.clone(), 0.0, |tuple, o| {
        let rest: usize = scn.outcome_dims(tuple)[2..].iter().product();
        let hit = (o[0] ^ o[1]) == ((tuple[0] & tuple[1]) & 1);
        Rational::from_ratio(hit as i64, 2 * rest as i64)
    })
    .ok()
}

/// Model-generated behavior, optionally mixed with [`pr_embedding`] (which
/// keeps it nonsignaling) or, when no embedding exists, with an arbitrary
/// table set. Lands on both sides of the local boundary.
pub fn candidate_behavior<R: Rng + ?Sized>(rng: &mut R, scn: &Scenario, max_weight: u32) -> Behavior<Rational> {
    let omega = rng.gen_range(1..=4);
    let base = crate::lhv::evaluate_model(&exact_model(rng, scn, omega, max_weight), scn, 0.0)
        .expect("model matches scenario");
    if rng.gen_bool(0.3) {
        return base;
    }
    let v = Rational::from_ratio(rng.gen_range(1..=8), 8);
    let other = match pr_embedding(scn) {
        Some(pr) => pr,
        None => exact_behavior(rng, scn, max_weight),
    };
    other.mix(&v, &base).expect("same scenario")
}
