use super::{LinearProgram, PrimalDualSolution};

/// Residuals of the optimality conditions for a primal-dual pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `|primal − dual| / (1 + |primal|)`
    pub duality_gap: f64,
    /// Largest absolute entry of `c − A_eqᵀλ + A_leᵀμ − z_l + z_u`.
    pub stationarity: f64,
    /// Largest `|multiplier × slack|` over rows and bounds.
    pub complementarity: f64,
    /// Largest negative part of any inequality or bound multiplier.
    pub dual_feasibility: f64,
    /// Largest violation of any row or bound.
    pub primal_feasibility: f64,
    pub tolerance: f64,
}

impl KktReport {
    pub fn passed(&self) -> bool {
        self.duality_gap <= self.tolerance
            && self.stationarity <= self.tolerance
            && self.complementarity <= self.tolerance
            && self.dual_feasibility <= self.tolerance
            && self.primal_feasibility <= self.tolerance
    }
}

pub fn check_kkt(lp: &LinearProgram, solution: &PrimalDualSolution, tol: f64) -> KktReport {
    let n = lp.num_variables();
    let x = &solution.x;

    let mut gradient = lp.cost().to_vec();
    let mut complementarity: f64 = 0.0;
    let mut dual_feasibility: f64 = 0.0;
    let mut primal_feasibility: f64 = 0.0;

    for (row, &y) in lp.equalities().iter().zip(&solution.eq_duals) {
        for &(j, a) in &row.coeffs {
            gradient[j] -= a * y;
        }
        primal_feasibility = primal_feasibility.max((row.activity(x) - row.rhs).abs());
    }
    for (row, &m) in lp.inequalities().iter().zip(&solution.le_duals) {
        for &(j, a) in &row.coeffs {
            gradient[j] += a * m;
        }
        let slack = row.rhs - row.activity(x);
        primal_feasibility = primal_feasibility.max(-slack);
        complementarity = complementarity.max((m * slack).abs());
        dual_feasibility = dual_feasibility.max(-m);
    }
    for j in 0..n {
        let (zl, zu) = (solution.lower_duals[j], solution.upper_duals[j]);
        gradient[j] += zu - zl;
        dual_feasibility = dual_feasibility.max(-zl).max(-zu);
        let (l, u) = (lp.lower()[j], lp.upper()[j]);
        if l.is_finite() {
            primal_feasibility = primal_feasibility.max(l - x[j]);
            complementarity = complementarity.max((zl * (x[j] - l)).abs());
        } else {
            dual_feasibility = dual_feasibility.max(zl.abs());
        }
        if u.is_finite() {
            primal_feasibility = primal_feasibility.max(x[j] - u);
            complementarity = complementarity.max((zu * (u - x[j])).abs());
        } else {
            dual_feasibility = dual_feasibility.max(zu.abs());
        }
    }
    let stationarity = gradient.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let primal_objective = lp.objective_value(x);
    let dual_objective = solution.dual_objective(lp);
    KktReport {
        primal_objective,
        dual_objective,
        duality_gap: (primal_objective - dual_objective).abs() / (1.0 + primal_objective.abs()),
        stationarity,
        complementarity,
        dual_feasibility: dual_feasibility.max(0.0),
        primal_feasibility: primal_feasibility.max(0.0),
        tolerance: tol,
    }
}
