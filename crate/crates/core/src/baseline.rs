//! The traditional multi-period dispatch with exogenous reserve requirements,
//! and recourse evaluation of any base schedule against realized scenarios.

use rayon::prelude::*;

use crate::case::PreparedCase;
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpError, LpSolver};
use crate::model::{add_base_flow_rows, base_cost_per_period};
use crate::scenario::Outcome;

/// Base-case schedule `[t][j]` shared by both market models.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseDispatch {
    pub g: Vec<Vec<f64>>,
    pub r_up: Vec<Vec<f64>>,
    pub r_down: Vec<Vec<f64>>,
}

impl BaseDispatch {
    pub fn periods(&self) -> usize {
        self.g.len()
    }
}

/// System-wide reserve requirement as fractions of total period demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReserveRequirement {
    pub up_fraction: f64,
    pub down_fraction: f64,
}

impl ReserveRequirement {
    /// Same fraction in both directions.
    pub fn symmetric(kappa: f64) -> Self {
        Self { up_fraction: kappa, down_fraction: kappa }
    }

    pub fn none() -> Self {
        Self::symmetric(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraditionalSolution {
    pub dispatch: BaseDispatch,
    /// Bid-in base cost over all periods.
    pub cost: f64,
}

/// Solves the reserve-requirement dispatch: output limits, reserve caps,
/// reserve-free ramping and `Σ r ≥ κ·Σ d` in each period. No scenario rows.
pub fn solve_traditional(
    prepared: &PreparedCase,
    requirement: ReserveRequirement,
    solver: &LpSolver,
) -> Result<TraditionalSolution> {
    if !(requirement.up_fraction >= 0.0 && requirement.down_fraction >= 0.0) {
        return Err(Error::Invalid(format!(
            "reserve requirement fractions must be nonnegative, got {} and {}",
            requirement.up_fraction, requirement.down_fraction
        )));
    }
    let case = &prepared.case;
    if case.options.require_initial_ramping && case.initial.is_none() {
        return Err(Error::MissingInitialState);
    }
    let periods = prepared.periods();
    let mut lp = LinearProgram::new();
    let mut g = Vec::with_capacity(periods);
    let mut ru = Vec::with_capacity(periods);
    let mut rd = Vec::with_capacity(periods);
    for t in 0..periods {
        let t1 = t + 1;
        let mut gt = Vec::new();
        let mut ut = Vec::new();
        let mut dt = Vec::new();
        for gen in &case.generators {
            let id = &gen.id;
            gt.push(lp.add_variable(format!("g[{id},t{t1}]"), gen.energy_bid, f64::NEG_INFINITY, f64::INFINITY));
            ut.push(lp.add_variable(format!("r_up[{id},t{t1}]"), gen.reserve_up_bid, 0.0, gen.reserve_up_cap));
            dt.push(lp.add_variable(format!("r_down[{id},t{t1}]"), gen.reserve_down_bid, 0.0, gen.reserve_down_cap));
        }
        g.push(gt);
        ru.push(ut);
        rd.push(dt);
    }

    for t in 0..periods {
        let t1 = t + 1;
        let total: f64 = prepared.demand[t].iter().sum();
        lp.add_equality(format!("balance[t{t1}]"), g[t].iter().map(|&v| (v, 1.0)).collect(), total);
        add_base_flow_rows(&mut lp, prepared, t, &g[t]);
        for (j, gen) in case.generators.iter().enumerate() {
            let id = &gen.id;
            lp.add_inequality(
                format!("output_floor[{id},t{t1}]"),
                vec![(rd[t][j], 1.0), (g[t][j], -1.0)],
                -gen.min_output,
            );
            lp.add_inequality(
                format!("output_ceiling[{id},t{t1}]"),
                vec![(g[t][j], 1.0), (ru[t][j], 1.0)],
                gen.max_output,
            );
            if t > 0 {
                lp.add_inequality(
                    format!("ramp_up[{id},t{t1}]"),
                    vec![(g[t][j], 1.0), (g[t - 1][j], -1.0)],
                    gen.ramp_up,
                );
                lp.add_inequality(
                    format!("ramp_down[{id},t{t1}]"),
                    vec![(g[t][j], -1.0), (g[t - 1][j], 1.0)],
                    gen.ramp_down,
                );
            } else if let Some(init) = &case.initial {
                lp.add_inequality(format!("ramp_up[{id},t{t1}]"), vec![(g[t][j], 1.0)], gen.ramp_up + init.output[j]);
                lp.add_inequality(
                    format!("ramp_down[{id},t{t1}]"),
                    vec![(g[t][j], -1.0)],
                    gen.ramp_down - init.output[j],
                );
            }
        }
        lp.add_inequality(
            format!("requirement_up[t{t1}]"),
            ru[t].iter().map(|&v| (v, -1.0)).collect(),
            -requirement.up_fraction * total,
        );
        lp.add_inequality(
            format!("requirement_down[t{t1}]"),
            rd[t].iter().map(|&v| (v, -1.0)).collect(),
            -requirement.down_fraction * total,
        );
    }

    let raw = solver.solve(&lp)?;
    let pick = |ix: &Vec<Vec<usize>>| -> Vec<Vec<f64>> {
        ix.iter().map(|row| row.iter().map(|&v| raw.x[v]).collect()).collect()
    };
    Ok(TraditionalSolution {
        dispatch: BaseDispatch { g: pick(&g), r_up: pick(&ru), r_down: pick(&rd) },
        cost: raw.objective,
    })
}

/// Cheapest corrective action for one realized outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Recourse {
    pub cost: f64,
    pub dg_up: Vec<f64>,
    pub dg_down: Vec<f64>,
    pub shed: Vec<f64>,
}

/// Re-dispatches within the held reserves and sheds load to meet outcome
/// `outcome` in period `t`. A base outcome costs nothing.
pub fn recourse_evaluate(
    prepared: &PreparedCase,
    dispatch: &BaseDispatch,
    outcome: Outcome,
    t: usize,
    solver: &LpSolver,
) -> Result<Recourse> {
    prepared.check_period(t)?;
    let n_gen = prepared.num_generators();
    let n_load = prepared.num_loads();
    let k = match outcome {
        Outcome::Base => {
            return Ok(Recourse {
                cost: 0.0,
                dg_up: vec![0.0; n_gen],
                dg_down: vec![0.0; n_gen],
                shed: vec![0.0; n_load],
            })
        }
        Outcome::Scenario(k) if k < prepared.num_scenarios() => k,
        Outcome::Scenario(k) => return Err(Error::UnknownScenario(k as u32)),
    };
    let case = &prepared.case;
    let demand = &prepared.demand[t];
    let pi = &prepared.fluctuation[k][t];
    let g = &dispatch.g[t];

    let mut lp = LinearProgram::new();
    let up: Vec<usize> = case
        .generators
        .iter()
        .enumerate()
        .map(|(j, gen)| lp.add_variable(format!("dg_up[{}]", gen.id), gen.redispatch_up_price, 0.0, dispatch.r_up[t][j]))
        .collect();
    let down: Vec<usize> = case
        .generators
        .iter()
        .enumerate()
        .map(|(j, gen)| {
            lp.add_variable(format!("dg_down[{}]", gen.id), -gen.redispatch_down_price, 0.0, dispatch.r_down[t][j])
        })
        .collect();
    let shed: Vec<usize> = case
        .loads
        .iter()
        .enumerate()
        .map(|(l, load)| {
            lp.add_variable(format!("shed[{}]", load.id), load.shedding_price, 0.0, (demand[l] + pi[l]).max(0.0))
        })
        .collect();

    let mut coeffs = Vec::with_capacity(2 * n_gen + n_load);
    for j in 0..n_gen {
        coeffs.push((up[j], 1.0));
        coeffs.push((down[j], -1.0));
    }
    coeffs.extend(shed.iter().map(|&v| (v, 1.0)));
    let needed: f64 = demand.iter().zip(pi).map(|(d, p)| d + p).sum::<f64>() - g.iter().sum::<f64>();
    lp.add_equality("balance", coeffs, needed);

    let shift = &prepared.scenario_shift[k];
    let sid = prepared.scenario_id(k);
    for (line_idx, line) in case.grid.lines.iter().enumerate() {
        if prepared.line_out(k, line_idx) {
            continue;
        }
        let mut row = Vec::new();
        let mut fixed = 0.0;
        for j in 0..n_gen {
            let s = shift.get(line_idx, prepared.generator_bus[j]);
            if s != 0.0 {
                row.push((up[j], s));
                row.push((down[j], -s));
                fixed += s * g[j];
            }
        }
        for l in 0..n_load {
            let s = shift.get(line_idx, prepared.load_bus[l]);
            if s != 0.0 {
                row.push((shed[l], s));
                fixed -= s * (demand[l] + pi[l]);
            }
        }
        let limit = line.limit_in(Some(sid));
        let reverse: Vec<(usize, f64)> = row.iter().map(|&(v, a)| (v, -a)).collect();
        lp.add_inequality(format!("flow+[{}]", line.id), row, limit - fixed);
        lp.add_inequality(format!("flow-[{}]", line.id), reverse, limit + fixed);
    }

    let raw = solver.solve(&lp).map_err(|e| match e {
        LpError::Infeasible => Error::RecourseInfeasible { scenario: sid, period: t + 1 },
        other => Error::Lp(other),
    })?;
    let pick = |ix: &[usize]| ix.iter().map(|&v| raw.x[v]).collect::<Vec<_>>();
    Ok(Recourse { cost: raw.objective, dg_up: pick(&up), dg_down: pick(&down), shed: pick(&shed) })
}

/// Base cost per period and recourse cost per period and scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchEvaluation {
    /// `[t]`
    pub base_cost: Vec<f64>,
    /// `[t][k]`, not probability-weighted.
    pub recourse: Vec<Vec<f64>>,
}

impl DispatchEvaluation {
    /// Realized cost of period `t` under `outcome`.
    pub fn realized(&self, t: usize, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::Base => self.base_cost[t],
            Outcome::Scenario(k) => self.base_cost[t] + self.recourse[t][k],
        }
    }

    /// Expected cost of each period.
    pub fn expected_per_period(&self, probabilities: &[f64]) -> Vec<f64> {
        self.base_cost
            .iter()
            .zip(&self.recourse)
            .map(|(b, rec)| b + rec.iter().zip(probabilities).map(|(c, p)| c * p).sum::<f64>())
            .collect()
    }

    pub fn expected_total(&self, probabilities: &[f64]) -> f64 {
        self.expected_per_period(probabilities).iter().sum()
    }
}

/// Evaluates every (period, scenario) recourse problem of a dispatch.
pub fn evaluate_dispatch(prepared: &PreparedCase, dispatch: &BaseDispatch, solver: &LpSolver) -> Result<DispatchEvaluation> {
    let periods = prepared.periods();
    let n_scen = prepared.num_scenarios();
    let recourse = (0..periods)
        .into_par_iter()
        .map(|t| {
            (0..n_scen)
                .map(|k| recourse_evaluate(prepared, dispatch, Outcome::Scenario(k), t, solver).map(|r| r.cost))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DispatchEvaluation { base_cost: base_cost_per_period(prepared, dispatch), recourse })
}

/// Base cost plus probability-weighted recourse cost over all periods.
pub fn expected_total_cost(prepared: &PreparedCase, dispatch: &BaseDispatch, solver: &LpSolver) -> Result<f64> {
    Ok(evaluate_dispatch(prepared, dispatch, solver)?.expected_total(&prepared.probabilities))
}
