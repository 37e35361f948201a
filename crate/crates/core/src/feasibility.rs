//! Linear feasibility `A x = b, x ≥ 0` by phase-1 simplex.
//!
//! Entering and leaving variables follow Bland's rule, so the method
//! terminates and is deterministic. When the phase-1 optimum is positive the
//! dual of that optimum is a Farkas certificate `y` with `yᵀA ≤ 0` and
//! `yᵀb > 0`.

use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::scalar::Scalar;

/// Equality tolerance of float-mode solves.
pub const LP_EPSILON: f64 = 1e-8;

/// Entries of magnitude below this are treated as zero when pivoting in
/// float mode.
const PIVOT_TOLERANCE: f64 = 1e-11;

/// In float mode a phase-1 objective at most `LP_EPSILON * FEASIBLE_FRACTION`
/// counts as zero; between that and `LP_EPSILON` the verdict is marginal.
const FEASIBLE_FRACTION: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearFeasibilityProblem<T> {
    num_vars: usize,
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
}

impl<T: Scalar> LinearFeasibilityProblem<T> {
    pub fn new(num_vars: usize) -> Result<Self> {
        if num_vars == 0 {
            return input("problem needs at least one variable");
        }
        Ok(LinearFeasibilityProblem {
            num_vars,
            rows: Vec::new(),
            rhs: Vec::new(),
        })
    }

    /// Adds the equality `coefficients · x = rhs`.
    pub fn add_constraint(&mut self, coefficients: Vec<T>, rhs: T) -> Result<()> {
        if coefficients.len() != self.num_vars {
            return Err(Error::Dimension(format!(
                "constraint has {} coefficients for {} variables",
                coefficients.len(),
                self.num_vars
            )));
        }
        self.rows.push(coefficients);
        self.rhs.push(rhs);
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[T] {
        &self.rhs
    }

    /// Largest `|A x − b|` over all constraints.
    pub fn residual(&self, x: &[T]) -> T {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| {
                let ax = row
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (a, v)| acc + a.clone() * v.clone());
                (ax - b.clone()).abs()
            })
            .fold(T::zero(), T::max_of)
    }

    /// `yᵀA` and `yᵀb`.
    pub fn combine(&self, y: &[T]) -> (Vec<T>, T) {
        let mut ya = vec![T::zero(); self.num_vars];
        let mut yb = T::zero();
        for ((row, b), yi) in self.rows.iter().zip(&self.rhs).zip(y) {
            if yi.is_zero() {
                continue;
            }
            for (acc, a) in ya.iter_mut().zip(row) {
                if !a.is_zero() {
                    *acc = acc.clone() + yi.clone() * a.clone();
                }
            }
            yb = yb + yi.clone() * b.clone();
        }
        (ya, yb)
    }
}

/// Farkas infeasibility witness, scaled so its largest `|y_i|` is 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FarkasCertificate<T> {
    pub y: Vec<T>,
    /// `yᵀb` after scaling; positive.
    pub margin: T,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FeasibilityResult<T> {
    Feasible { solution: Vec<T> },
    Infeasible(FarkasCertificate<T>),
    /// Float mode only: the phase-1 optimum is within `LP_EPSILON` of zero
    /// but not numerically zero. The best point found is attached.
    Marginal { objective: f64, solution: Vec<T> },
}

impl<T> FeasibilityResult<T> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityResult::Feasible { .. })
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, FeasibilityResult::Infeasible(_))
    }

    pub fn verdict(&self) -> &'static str {
        match self {
            FeasibilityResult::Feasible { .. } => "feasible",
            FeasibilityResult::Infeasible(_) => "infeasible",
            FeasibilityResult::Marginal { .. } => "marginal",
        }
    }
}

struct Tableau<T> {
    /// `m` rows of `n + m + 1` entries: original vars, artificials, rhs.
    rows: Vec<Vec<T>>,
    /// Reduced costs of all `n + m` columns, then `−objective`.
    cost: Vec<T>,
    basis: Vec<usize>,
    tol: f64,
}

impl<T: Scalar> Tableau<T> {
    fn width(&self) -> usize {
        self.cost.len() - 1
    }

    fn entering(&self) -> Option<usize> {
        (0..self.width()).find(|&j| self.cost[j].below_zero(self.tol))
    }

    fn leaving(&self, col: usize) -> Option<usize> {
        let rhs = self.width();
        let mut best: Option<(usize, T)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            let a = &row[col];
            if !a.above_zero(self.tol) {
                continue;
            }
            let ratio = row[rhs].clone() / a.clone();
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        let pivot_row: Vec<T> = self.rows[r].iter().map(|v| v.clone() / p.clone()).collect();
        let support: Vec<usize> = (0..pivot_row.len())
            .filter(|&j| !pivot_row[j].is_zero())
            .collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for &j in &support {
                row[j] = row[j].clone() - f.clone() * pivot_row[j].clone();
            }
            if !T::EXACT {
                row[c] = T::zero();
            }
        }
        if !self.cost[c].is_zero() {
            let f = self.cost[c].clone();
            for &j in &support {
                self.cost[j] = self.cost[j].clone() - f.clone() * pivot_row[j].clone();
            }
            if !T::EXACT {
                self.cost[c] = T::zero();
            }
        }
        self.rows[r] = pivot_row;
        self.basis[r] = c;
    }
}

/// Decides `A x = b, x ≥ 0`.
///
/// Exact mode returns a mathematically exact verdict. Float mode satisfies
/// returned equalities within [`LP_EPSILON`] and reports
/// [`FeasibilityResult::Marginal`] when the phase-1 objective is too close to
/// zero to call.
pub fn solve_feasibility<T: Scalar>(p: &LinearFeasibilityProblem<T>) -> FeasibilityResult<T> {
    let n = p.num_vars;
    let m = p.rows.len();
    if m == 0 {
        return FeasibilityResult::Feasible {
            solution: vec![T::zero(); n],
        };
    }
    let tol = if T::EXACT { 0.0 } else { PIVOT_TOLERANCE };
    let width = n + m;

    // Rows with negative right-hand side are negated so the artificial
    // basis starts feasible.
    let signs: Vec<bool> = p.rhs.iter().map(|b| b.is_negative()).collect();
    let mut rows = Vec::with_capacity(m);
    for (i, (row, b)) in p.rows.iter().zip(&p.rhs).enumerate() {
        let mut t = Vec::with_capacity(width + 1);
        for a in row {
            t.push(if signs[i] { -a.clone() } else { a.clone() });
        }
        for k in 0..m {
            t.push(if k == i { T::one() } else { T::zero() });
        }
        t.push(if signs[i] { -b.clone() } else { b.clone() });
        rows.push(t);
    }
    let mut cost = vec![T::zero(); width + 1];
    for row in &rows {
        for j in (0..n).chain(std::iter::once(width)) {
            if !row[j].is_zero() {
                cost[j] = cost[j].clone() - row[j].clone();
            }
        }
    }
    let mut tab = Tableau {
        rows,
        cost,
        basis: (n..width).collect(),
        tol,
    };

    while let Some(col) = tab.entering() {
        match tab.leaving(col) {
            Some(row) => tab.pivot(row, col),
            // Phase-1 objective is bounded below by zero, so an unbounded
            // ray cannot occur; stop defensively on numerical breakdown.
            None => break,
        }
    }

    let objective = -tab.cost[width].clone();
    let mut solution = vec![T::zero(); n];
    for (i, &bv) in tab.basis.iter().enumerate() {
        if bv < n {
            let v = tab.rows[i][width].clone();
            solution[bv] = if v.is_negative() { T::zero() } else { v };
        }
    }

    let feasible = if T::EXACT {
        objective.is_zero()
    } else {
        objective.to_f64() <= LP_EPSILON * FEASIBLE_FRACTION
    };
    if feasible {
        return FeasibilityResult::Feasible { solution };
    }
    if !T::EXACT && objective.to_f64() <= LP_EPSILON {
        return FeasibilityResult::Marginal {
            objective: objective.to_f64(),
            solution,
        };
    }

    // Dual of the phase-1 optimum: u_i = 1 − (reduced cost of artificial i).
    let mut y: Vec<T> = (0..m)
        .map(|i| {
            let u = T::one() - tab.cost[n + i].clone();
            if signs[i] {
                -u
            } else {
                u
            }
        })
        .collect();
    let scale = y.iter().map(|v| v.abs()).fold(T::zero(), T::max_of);
    if !scale.is_zero() {
        for v in &mut y {
            *v = v.clone() / scale.clone();
        }
    }
    if !T::EXACT {
        for v in &mut y {
            if v.near_zero(PIVOT_TOLERANCE) {
                *v = T::zero();
            }
        }
    }
    let (_, margin) = p.combine(&y);
    FeasibilityResult::Infeasible(FarkasCertificate { y, margin })
}

/// Checks `yᵀA ≤ tol` componentwise and `yᵀb > tol`.
pub fn certificate_is_sound<T: Scalar>(
    p: &LinearFeasibilityProblem<T>,
    cert: &FarkasCertificate<T>,
    tol: f64,
) -> bool {
    if cert.y.len() != p.num_constraints() {
        return false;
    }
    let (ya, yb) = p.combine(&cert.y);
    ya.iter().all(|v| !v.above_zero(tol)) && yb.above_zero(tol)
}
