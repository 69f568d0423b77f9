//! Linear programs in a canonical form with named rows, solved through a
//! pluggable backend.
//!
//! Problems have the form
//!
//! ```text
//! minimize    cᵀx
//! subject to  A_eq x  = b_eq     (duals λ, free)
//!             A_le x ≤ b_le      (duals μ ≥ 0)
//!             l ≤ x ≤ u          (duals z_l ≥ 0, z_u ≥ 0)
//! ```
//!
//! and duals follow the Lagrangian
//! `L = cᵀx + λᵀ(b_eq − A_eq x) + μᵀ(A_le x − b_le) + z_lᵀ(l − x) + z_uᵀ(x − u)`,
//! so stationarity reads `c − A_eqᵀλ + A_leᵀμ − z_l + z_u = 0`. With this
//! convention the dual of a supply-equals-demand row is the marginal cost of
//! demand and an active `≤` row has `∂objective/∂b = −μ`.

mod highs_backend;
mod kkt;
mod lp_format;

use std::sync::Arc;

use thiserror::Error;

pub use highs_backend::HighsBackend;
pub use kkt::{check_kkt, KktReport};
pub use lp_format::write_lp_format;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("solver failure: {0}")]
    NumericalFailure(String),
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    names: Vec<String>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    equalities: Vec<Row>,
    inequalities: Vec<Row>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, name: impl Into<String>, cost: f64, lower: f64, upper: f64) -> usize {
        self.names.push(name.into());
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.names.len() - 1
    }

    /// Adds `Σ coeffs·x = rhs` and returns its index among the equalities.
    pub fn add_equality(&mut self, name: impl Into<String>, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.equalities.push(Row { name: name.into(), coeffs, rhs });
        self.equalities.len() - 1
    }

    /// Adds `Σ coeffs·x ≤ rhs` and returns its index among the inequalities.
    pub fn add_inequality(&mut self, name: impl Into<String>, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.inequalities.push(Row { name: name.into(), coeffs, rhs });
        self.inequalities.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.cost[var] = cost;
    }

    pub fn num_variables(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn equalities(&self) -> &[Row] {
        &self.equalities
    }

    pub fn inequalities(&self) -> &[Row] {
        &self.inequalities
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Checks dimensions and finiteness of all data.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.names.len();
        for j in 0..n {
            if !self.cost[j].is_finite() {
                return Err(LpError::Malformed(format!("cost of {} is not finite", self.names[j])));
            }
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(LpError::Malformed(format!("bounds of {} are inconsistent", self.names[j])));
            }
            if self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(LpError::Malformed(format!("bounds of {} are inconsistent", self.names[j])));
            }
        }
        for row in self.equalities.iter().chain(&self.inequalities) {
            if !row.rhs.is_finite() {
                return Err(LpError::Malformed(format!("rhs of {} is not finite", row.name)));
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::Malformed(format!("{} references variable {j}", row.name)));
                }
                if !a.is_finite() {
                    return Err(LpError::Malformed(format!("coefficient in {} is not finite", row.name)));
                }
            }
        }
        Ok(())
    }
}

/// Optimal primal values together with a dual certificate in the sign
/// convention documented at module level.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub eq_duals: Vec<f64>,
    pub le_duals: Vec<f64>,
    pub lower_duals: Vec<f64>,
    pub upper_duals: Vec<f64>,
}

impl PrimalDualSolution {
    /// `b_eqᵀλ − b_leᵀμ + lᵀz_l − uᵀz_u`, skipping infinite bounds.
    pub fn dual_objective(&self, lp: &LinearProgram) -> f64 {
        let mut value = 0.0;
        for (row, y) in lp.equalities().iter().zip(&self.eq_duals) {
            value += row.rhs * y;
        }
        for (row, y) in lp.inequalities().iter().zip(&self.le_duals) {
            value -= row.rhs * y;
        }
        for j in 0..lp.num_variables() {
            if lp.lower()[j].is_finite() {
                value += lp.lower()[j] * self.lower_duals[j];
            }
            if lp.upper()[j].is_finite() {
                value -= lp.upper()[j] * self.upper_duals[j];
            }
        }
        value
    }
}

pub trait LpBackend: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, lp: &LinearProgram) -> Result<PrimalDualSolution, LpError>;
}

/// Which optimal dual to report when the dual optimum is not unique.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DualPolicy {
    /// Whatever vertex the backend stops at.
    AsReturned,
    /// Among all optimal duals, the one with the smallest sum of inequality
    /// and bound multipliers.
    #[default]
    MinimalMultipliers,
}

#[derive(Clone)]
pub struct LpSolver {
    backend: Arc<dyn LpBackend>,
    policy: DualPolicy,
}

impl Default for LpSolver {
    fn default() -> Self {
        Self { backend: Arc::new(HighsBackend::default()), policy: DualPolicy::default() }
    }
}

impl std::fmt::Debug for LpSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LpSolver")
            .field("backend", &self.backend.name())
            .field("policy", &self.policy)
            .finish()
    }
}

impl LpSolver {
    pub fn new(backend: Arc<dyn LpBackend>, policy: DualPolicy) -> Self {
        Self { backend, policy }
    }

    pub fn with_policy(mut self, policy: DualPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn policy(&self) -> DualPolicy {
        self.policy
    }

    pub fn solve(&self, lp: &LinearProgram) -> Result<PrimalDualSolution, LpError> {
        lp.validate()?;
        let solution = self.backend.solve(lp)?;
        match self.policy {
            DualPolicy::AsReturned => Ok(solution),
            DualPolicy::MinimalMultipliers => match self.minimal_duals(lp, &solution) {
                Ok(selected) => Ok(selected),
                Err(err) => {
                    log::warn!("dual selection failed ({err}); keeping backend duals");
                    Ok(solution)
                }
            },
        }
    }

    /// Re-optimizes over the optimal dual face: duals of rows and bounds that
    /// are inactive at the primal optimum are pinned to zero, stationarity is
    /// imposed, and the sum of nonnegative multipliers is minimized.
    fn minimal_duals(
        &self,
        lp: &LinearProgram,
        solution: &PrimalDualSolution,
    ) -> Result<PrimalDualSolution, LpError> {
        const ACTIVE: f64 = 1e-7;
        let n = lp.num_variables();
        let x = &solution.x;
        let mut dual = LinearProgram::new();
        // stationarity rows: −A_eqᵀλ + A_leᵀμ − z_l + z_u = −c
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];

        let mut eq_vars = Vec::with_capacity(lp.equalities().len());
        for (i, row) in lp.equalities().iter().enumerate() {
            let v = dual.add_variable(format!("y{i}"), 0.0, f64::NEG_INFINITY, f64::INFINITY);
            eq_vars.push(v);
            for &(j, a) in &row.coeffs {
                columns[j].push((v, -a));
            }
        }
        let mut le_vars = Vec::with_capacity(lp.inequalities().len());
        for (i, row) in lp.inequalities().iter().enumerate() {
            let slack = row.rhs - row.activity(x);
            let active = slack.abs() <= ACTIVE * (1.0 + row.rhs.abs()) || solution.le_duals[i] != 0.0;
            if active {
                let v = dual.add_variable(format!("m{i}"), 1.0, 0.0, f64::INFINITY);
                le_vars.push(Some(v));
                for &(j, a) in &row.coeffs {
                    columns[j].push((v, a));
                }
            } else {
                le_vars.push(None);
            }
        }
        let mut lower_vars = vec![None; n];
        let mut upper_vars = vec![None; n];
        for j in 0..n {
            let (l, u) = (lp.lower()[j], lp.upper()[j]);
            if l.is_finite() && ((x[j] - l).abs() <= ACTIVE * (1.0 + l.abs()) || solution.lower_duals[j] != 0.0) {
                let v = dual.add_variable(format!("zl{j}"), 1.0, 0.0, f64::INFINITY);
                lower_vars[j] = Some(v);
                columns[j].push((v, -1.0));
            }
            if u.is_finite() && ((u - x[j]).abs() <= ACTIVE * (1.0 + u.abs()) || solution.upper_duals[j] != 0.0) {
                let v = dual.add_variable(format!("zu{j}"), 1.0, 0.0, f64::INFINITY);
                upper_vars[j] = Some(v);
                columns[j].push((v, 1.0));
            }
        }
        for (j, coeffs) in columns.into_iter().enumerate() {
            dual.add_equality(format!("s{j}"), coeffs, -lp.cost()[j]);
        }
        let selected = self.backend.solve(&dual)?;
        let pick = |v: Option<usize>| v.map_or(0.0, |v| selected.x[v].max(0.0));
        Ok(PrimalDualSolution {
            x: solution.x.clone(),
            objective: solution.objective,
            eq_duals: eq_vars.iter().map(|&v| selected.x[v]).collect(),
            le_duals: le_vars.into_iter().map(pick).collect(),
            lower_duals: lower_vars.into_iter().map(pick).collect(),
            upper_duals: upper_vars.into_iter().map(pick).collect(),
        })
    }
}

/// Solves with the default backend and dual policy.
pub fn solve_lp(lp: &LinearProgram) -> Result<PrimalDualSolution, LpError> {
    LpSolver::default().solve(lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_active_lower_bound() {
        // min x s.t. x ≥ 3, written as a row
        let mut lp = LinearProgram::new();
        let x = lp.add_variable("x", 1.0, f64::NEG_INFINITY, f64::INFINITY);
        lp.add_inequality("x_ge_3", vec![(x, -1.0)], -3.0);
        let s = solve_lp(&lp).unwrap();
        assert_abs_diff_eq!(s.x[0], 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.le_duals[0], 1.0, epsilon = 1e-9);

        // same as a variable bound
        let mut lp = LinearProgram::new();
        lp.add_variable("x", 1.0, 3.0, f64::INFINITY);
        let s = solve_lp(&lp).unwrap();
        assert_abs_diff_eq!(s.x[0], 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.lower_duals[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn balance_dual_is_marginal_cost() {
        let mut lp = LinearProgram::new();
        let g = lp.add_variable("g", 10.0, 0.0, 100.0);
        lp.add_equality("balance", vec![(g, 1.0)], 50.0);
        let s = solve_lp(&lp).unwrap();
        assert_abs_diff_eq!(s.x[0], 50.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.eq_duals[0], 10.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.objective, 500.0, epsilon = 1e-9);
    }

    #[test]
    fn ramp_swing_beyond_limit_is_infeasible() {
        let mut lp = LinearProgram::new();
        let g1 = lp.add_variable("g1", 10.0, 0.0, 100.0);
        let g2 = lp.add_variable("g2", 10.0, 0.0, 100.0);
        lp.add_equality("b1", vec![(g1, 1.0)], 50.0);
        lp.add_equality("b2", vec![(g2, 1.0)], 90.0);
        lp.add_inequality("ramp", vec![(g2, 1.0), (g1, -1.0)], 30.0);
        assert_eq!(solve_lp(&lp), Err(LpError::Infeasible));
    }

    #[test]
    fn unbounded_is_reported() {
        let mut lp = LinearProgram::new();
        lp.add_variable("x", -1.0, 0.0, f64::INFINITY);
        assert_eq!(solve_lp(&lp), Err(LpError::Unbounded));
    }

    #[test]
    fn malformed_input_is_rejected() {
        let mut lp = LinearProgram::new();
        let x = lp.add_variable("x", f64::NAN, 0.0, 1.0);
        lp.add_inequality("r", vec![(x, 1.0)], 1.0);
        assert!(matches!(solve_lp(&lp), Err(LpError::Malformed(_))));
    }

    #[test]
    fn inequality_dual_is_negative_rhs_sensitivity() {
        // min -x - 2y s.t. x + y ≤ 4, x + 3y ≤ 6, x, y ≥ 0
        let build = |b1: f64| {
            let mut lp = LinearProgram::new();
            let x = lp.add_variable("x", -1.0, 0.0, f64::INFINITY);
            let y = lp.add_variable("y", -2.0, 0.0, f64::INFINITY);
            lp.add_inequality("c1", vec![(x, 1.0), (y, 1.0)], b1);
            lp.add_inequality("c2", vec![(x, 1.0), (y, 3.0)], 6.0);
            lp
        };
        let s = solve_lp(&build(4.0)).unwrap();
        assert!(s.le_duals.iter().all(|&m| m >= -1e-9));
        let h = 1e-4;
        let up = solve_lp(&build(4.0 + h)).unwrap().objective;
        let down = solve_lp(&build(4.0 - h)).unwrap().objective;
        let fd = (up - down) / (2.0 * h);
        assert_abs_diff_eq!(fd, -s.le_duals[0], epsilon = 1e-5);
    }

    #[test]
    fn minimal_policy_picks_smallest_multipliers() {
        // min x + y s.t. x + y ≥ 1 (row), x ≥ 0, y ≥ 0, and a redundant row
        // x + y ≥ 1 duplicated: duals split is arbitrary, the minimal sum is 1.
        let mut lp = LinearProgram::new();
        let x = lp.add_variable("x", 1.0, 0.0, f64::INFINITY);
        let y = lp.add_variable("y", 1.0, 0.0, f64::INFINITY);
        lp.add_inequality("a", vec![(x, -1.0), (y, -1.0)], -1.0);
        lp.add_inequality("b", vec![(x, -1.0), (y, -1.0)], -1.0);
        let s = LpSolver::default().solve(&lp).unwrap();
        let total: f64 = s.le_duals.iter().sum::<f64>()
            + s.lower_duals.iter().sum::<f64>()
            + s.upper_duals.iter().sum::<f64>();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
        let report = check_kkt(&lp, &s, 1e-8);
        assert!(report.passed(), "{report:?}");
    }
}
