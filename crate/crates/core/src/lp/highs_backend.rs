use highs::{Col, HighsModelStatus, RowProblem, Sense};

use super::{LinearProgram, LpBackend, LpError, PrimalDualSolution, Row};

/// Dual simplex through HiGHS. Vertex solutions keep complementary slackness
/// exact up to rounding.
#[derive(Debug, Clone)]
pub struct HighsBackend {
    pub feasibility_tolerance: f64,
}

impl Default for HighsBackend {
    fn default() -> Self {
        Self { feasibility_tolerance: 1e-9 }
    }
}

fn merged(row: &Row) -> Vec<(usize, f64)> {
    let mut coeffs = row.coeffs.clone();
    coeffs.sort_by_key(|&(j, _)| j);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
    for (j, a) in coeffs {
        match out.last_mut() {
            Some((k, b)) if *k == j => *b += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    out
}

impl HighsBackend {
    fn run(&self, lp: &LinearProgram, with_cost: bool) -> Result<(HighsModelStatus, Option<PrimalDualSolution>), LpError> {
        let mut problem = RowProblem::default();
        let cols: Vec<Col> = (0..lp.num_variables())
            .map(|j| {
                let cost = if with_cost { lp.cost()[j] } else { 0.0 };
                problem.add_column(cost, lp.lower()[j]..=lp.upper()[j])
            })
            .collect();
        for row in lp.equalities() {
            let coeffs: Vec<(Col, f64)> = merged(row).into_iter().map(|(j, a)| (cols[j], a)).collect();
            problem.add_row(row.rhs..=row.rhs, &coeffs);
        }
        for row in lp.inequalities() {
            let coeffs: Vec<(Col, f64)> = merged(row).into_iter().map(|(j, a)| (cols[j], a)).collect();
            problem.add_row(..=row.rhs, &coeffs);
        }
        let mut model = problem.optimise(Sense::Minimise);
        model.make_quiet();
        model.set_option("solver", "simplex");
        model.set_option("primal_feasibility_tolerance", self.feasibility_tolerance);
        model.set_option("dual_feasibility_tolerance", self.feasibility_tolerance);
        let solved = model
            .try_solve()
            .map_err(|status| LpError::NumericalFailure(format!("HiGHS returned {status:?}")))?;
        let status = solved.status();
        if status != HighsModelStatus::Optimal {
            return Ok((status, None));
        }
        let solution = solved.get_solution();
        let n_eq = lp.equalities().len();
        let x = solution.columns().to_vec();
        let row_duals = solution.dual_rows();
        let reduced = solution.dual_columns();
        let eq_duals = row_duals[..n_eq].to_vec();
        // HiGHS reports y with c − Aᵀy = reduced cost; a binding ≤ row has y ≤ 0.
        let le_duals = row_duals[n_eq..].iter().map(|y| (-y).max(0.0)).collect();
        let lower_duals = reduced
            .iter()
            .enumerate()
            .map(|(j, &d)| if lp.lower()[j].is_finite() { d.max(0.0) } else { 0.0 })
            .collect();
        let upper_duals = reduced
            .iter()
            .enumerate()
            .map(|(j, &d)| if lp.upper()[j].is_finite() { (-d).max(0.0) } else { 0.0 })
            .collect();
        let objective = lp.objective_value(&x);
        Ok((
            status,
            Some(PrimalDualSolution { x, objective, eq_duals, le_duals, lower_duals, upper_duals }),
        ))
    }

    fn solve_empty(lp: &LinearProgram) -> Result<PrimalDualSolution, LpError> {
        let feasible = lp.equalities().iter().all(|r| r.rhs.abs() <= 1e-12)
            && lp.inequalities().iter().all(|r| r.rhs >= -1e-12);
        if !feasible {
            return Err(LpError::Infeasible);
        }
        Ok(PrimalDualSolution {
            x: vec![],
            objective: 0.0,
            eq_duals: vec![0.0; lp.equalities().len()],
            le_duals: vec![0.0; lp.inequalities().len()],
            lower_duals: vec![],
            upper_duals: vec![],
        })
    }
}

impl LpBackend for HighsBackend {
    fn name(&self) -> &str {
        "highs"
    }

    fn solve(&self, lp: &LinearProgram) -> Result<PrimalDualSolution, LpError> {
        if lp.num_variables() == 0 {
            return Self::solve_empty(lp);
        }
        match self.run(lp, true)? {
            (_, Some(solution)) => Ok(solution),
            (HighsModelStatus::Infeasible, None) => Err(LpError::Infeasible),
            (HighsModelStatus::Unbounded, None) => Err(LpError::Unbounded),
            (HighsModelStatus::UnboundedOrInfeasible, None) => {
                // a zero objective separates the two cases
                match self.run(lp, false)? {
                    (_, Some(_)) => Err(LpError::Unbounded),
                    _ => Err(LpError::Infeasible),
                }
            }
            (status, None) => Err(LpError::NumericalFailure(format!("HiGHS status {status:?}"))),
        }
    }
}
