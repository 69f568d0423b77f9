//! The multi-period scenario-oriented energy-reserve co-optimization model and
//! its restricted variant with one generator's schedule held fixed.
//!
//! Variables per period `t`: output `g`, upward and downward reserve `r_U`,
//! `r_D` per generator; per scenario `k`: upward/downward re-dispatch `δg^U`,
//! `δg^D` per generator and shedding `δd` per load. Generator output limits,
//! the ramping–reserve coupling and the reserve caps on re-dispatch are rows,
//! reserve offer caps and the shedding range are variable bounds.

use crate::baseline::BaseDispatch;
use crate::case::PreparedCase;
use crate::error::{Error, Result};
use crate::lp::{check_kkt, KktReport, LinearProgram, LpSolver, PrimalDualSolution};

/// Location of every variable and row of a built model.
#[derive(Debug, Clone, Default)]
pub struct ModelIndex {
    /// `[t][j]`
    pub g: Vec<Vec<usize>>,
    pub r_up: Vec<Vec<usize>>,
    pub r_down: Vec<Vec<usize>>,
    /// `[t][k][j]`
    pub dg_up: Vec<Vec<Vec<usize>>>,
    pub dg_down: Vec<Vec<Vec<usize>>>,
    /// `[t][k][l]`
    pub dd: Vec<Vec<Vec<usize>>>,
    /// Equality rows `[t]`.
    pub balance: Vec<usize>,
    /// Inequality rows `[t][line]` as (forward limit, reverse limit).
    pub flow: Vec<Vec<(usize, usize)>>,
    /// `min_output + r_D − g ≤ 0`, `[t][j]`; absent for a fixed generator.
    pub output_floor: Vec<Vec<Option<usize>>>,
    /// `g + r_U ≤ max_output`, `[t][j]`.
    pub output_ceiling: Vec<Vec<Option<usize>>>,
    /// `g_t − g_{t−1} + r_{U,t−1} ≤ ramp_up`, `[t][j]`.
    pub ramp_up: Vec<Vec<Option<usize>>>,
    /// `−g_t + g_{t−1} + r_{D,t−1} ≤ ramp_down`, `[t][j]`.
    pub ramp_down: Vec<Vec<Option<usize>>>,
    /// Equality rows `[t][k]`.
    pub scenario_balance: Vec<Vec<usize>>,
    /// `[t][k][line]`, absent for lines out of service in `k`.
    pub scenario_flow: Vec<Vec<Vec<Option<(usize, usize)>>>>,
    /// `δg^U − r_U ≤ 0`, `[t][k][j]`.
    pub up_cap: Vec<Vec<Vec<usize>>>,
    /// `δg^D − r_D ≤ 0`, `[t][k][j]`.
    pub down_cap: Vec<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone)]
pub struct ModelVi {
    pub lp: LinearProgram,
    pub index: ModelIndex,
}

/// One generator's period schedule turned into parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Restriction {
    pub generator: usize,
    pub period: usize,
    pub output: f64,
    pub reserve_up: f64,
    pub reserve_down: f64,
}

impl Restriction {
    /// Fixes generator `generator` in `period` at its scheduled quantities.
    pub fn at_optimum(solution: &CooptSolution, generator: usize, period: usize) -> Self {
        Self {
            generator,
            period,
            output: solution.g[period][generator],
            reserve_up: solution.r_up[period][generator],
            reserve_down: solution.r_down[period][generator],
        }
    }
}

fn push_nonzero(row: &mut Vec<(usize, f64)>, var: usize, coef: f64) {
    if coef != 0.0 {
        row.push((var, coef));
    }
}

/// Base-case flow limits of period `t` in both directions over output
/// variables `g`.
pub(crate) fn add_base_flow_rows(
    lp: &mut LinearProgram,
    prepared: &PreparedCase,
    t: usize,
    g: &[usize],
) -> Vec<(usize, usize)> {
    let demand = &prepared.demand[t];
    let mut flows = Vec::with_capacity(prepared.num_lines());
    for (line_idx, line) in prepared.case.grid.lines.iter().enumerate() {
        let mut row = Vec::new();
        for (j, &var) in g.iter().enumerate() {
            push_nonzero(&mut row, var, prepared.shift.get(line_idx, prepared.generator_bus[j]));
        }
        let withdrawn: f64 = demand
            .iter()
            .enumerate()
            .map(|(l, d)| prepared.shift.get(line_idx, prepared.load_bus[l]) * d)
            .sum();
        let reverse: Vec<(usize, f64)> = row.iter().map(|&(v, a)| (v, -a)).collect();
        let t1 = t + 1;
        let fwd = lp.add_inequality(format!("flow+[{},t{t1}]", line.id), row, line.limit + withdrawn);
        let rev = lp.add_inequality(format!("flow-[{},t{t1}]", line.id), reverse, line.limit - withdrawn);
        flows.push((fwd, rev));
    }
    flows
}

/// Builds the co-optimization model. With a restriction, the restricted
/// generator's period quantities become fixed parameters without bid cost and
/// its output and reserve limits for that period are dropped.
pub fn build_model(prepared: &PreparedCase, restriction: Option<&Restriction>) -> Result<ModelVi> {
    let case = &prepared.case;
    let periods = prepared.periods();
    let n_gen = prepared.num_generators();
    let n_load = prepared.num_loads();
    let n_scen = prepared.num_scenarios();
    let n_line = prepared.num_lines();

    if case.options.require_initial_ramping && case.initial.is_none() {
        return Err(Error::MissingInitialState);
    }
    if let Some(r) = restriction {
        if r.generator >= n_gen {
            return Err(Error::UnknownGenerator(format!("#{}", r.generator)));
        }
        prepared.check_period(r.period)?;
    }
    let fixed = |j: usize, t: usize| restriction.filter(|r| r.generator == j && r.period == t);

    let mut lp = LinearProgram::new();
    let mut ix = ModelIndex::default();

    for t in 0..periods {
        let mut g = Vec::with_capacity(n_gen);
        let mut ru = Vec::with_capacity(n_gen);
        let mut rd = Vec::with_capacity(n_gen);
        for (j, gen) in case.generators.iter().enumerate() {
            let id = &gen.id;
            let t1 = t + 1;
            if let Some(r) = fixed(j, t) {
                g.push(lp.add_variable(format!("g[{id},t{t1}]"), 0.0, r.output, r.output));
                ru.push(lp.add_variable(format!("r_up[{id},t{t1}]"), 0.0, r.reserve_up, r.reserve_up));
                rd.push(lp.add_variable(format!("r_down[{id},t{t1}]"), 0.0, r.reserve_down, r.reserve_down));
            } else {
                g.push(lp.add_variable(
                    format!("g[{id},t{t1}]"),
                    gen.energy_bid,
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                ));
                ru.push(lp.add_variable(
                    format!("r_up[{id},t{t1}]"),
                    gen.reserve_up_bid,
                    0.0,
                    gen.reserve_up_cap,
                ));
                rd.push(lp.add_variable(
                    format!("r_down[{id},t{t1}]"),
                    gen.reserve_down_bid,
                    0.0,
                    gen.reserve_down_cap,
                ));
            }
        }
        let mut du_t = Vec::with_capacity(n_scen);
        let mut dd_t = Vec::with_capacity(n_scen);
        let mut ddem_t = Vec::with_capacity(n_scen);
        for k in 0..n_scen {
            let eps = prepared.probabilities[k];
            let sid = prepared.scenario_id(k);
            let demand = &prepared.demand[t];
            let pi = &prepared.fluctuation[k][t];
            du_t.push(
                case.generators
                    .iter()
                    .map(|gen| {
                        lp.add_variable(
                            format!("dg_up[{},k{sid},t{}]", gen.id, t + 1),
                            eps * gen.redispatch_up_price,
                            0.0,
                            f64::INFINITY,
                        )
                    })
                    .collect::<Vec<_>>(),
            );
            dd_t.push(
                case.generators
                    .iter()
                    .map(|gen| {
                        lp.add_variable(
                            format!("dg_down[{},k{sid},t{}]", gen.id, t + 1),
                            -eps * gen.redispatch_down_price,
                            0.0,
                            f64::INFINITY,
                        )
                    })
                    .collect::<Vec<_>>(),
            );
            ddem_t.push(
                case.loads
                    .iter()
                    .enumerate()
                    .map(|(l, load)| {
                        lp.add_variable(
                            format!("shed[{},k{sid},t{}]", load.id, t + 1),
                            eps * load.shedding_price,
                            0.0,
                            (demand[l] + pi[l]).max(0.0),
                        )
                    })
                    .collect::<Vec<_>>(),
            );
        }
        ix.g.push(g);
        ix.r_up.push(ru);
        ix.r_down.push(rd);
        ix.dg_up.push(du_t);
        ix.dg_down.push(dd_t);
        ix.dd.push(ddem_t);
    }

    for t in 0..periods {
        let t1 = t + 1;
        let demand = &prepared.demand[t];
        let total_demand: f64 = demand.iter().sum();

        ix.balance.push(lp.add_equality(
            format!("balance[t{t1}]"),
            ix.g[t].iter().map(|&v| (v, 1.0)).collect(),
            total_demand,
        ));

        ix.flow.push(add_base_flow_rows(&mut lp, prepared, t, &ix.g[t]));

        let mut floor = Vec::with_capacity(n_gen);
        let mut ceiling = Vec::with_capacity(n_gen);
        let mut ramp_up = Vec::with_capacity(n_gen);
        let mut ramp_down = Vec::with_capacity(n_gen);
        for (j, gen) in case.generators.iter().enumerate() {
            let id = &gen.id;
            if fixed(j, t).is_some() {
                floor.push(None);
                ceiling.push(None);
            } else {
                floor.push(Some(lp.add_inequality(
                    format!("output_floor[{id},t{t1}]"),
                    vec![(ix.r_down[t][j], 1.0), (ix.g[t][j], -1.0)],
                    -gen.min_output,
                )));
                ceiling.push(Some(lp.add_inequality(
                    format!("output_ceiling[{id},t{t1}]"),
                    vec![(ix.g[t][j], 1.0), (ix.r_up[t][j], 1.0)],
                    gen.max_output,
                )));
            }
            if t > 0 {
                ramp_up.push(Some(lp.add_inequality(
                    format!("ramp_up[{id},t{t1}]"),
                    vec![(ix.g[t][j], 1.0), (ix.g[t - 1][j], -1.0), (ix.r_up[t - 1][j], 1.0)],
                    gen.ramp_up,
                )));
                ramp_down.push(Some(lp.add_inequality(
                    format!("ramp_down[{id},t{t1}]"),
                    vec![(ix.g[t][j], -1.0), (ix.g[t - 1][j], 1.0), (ix.r_down[t - 1][j], 1.0)],
                    gen.ramp_down,
                )));
            } else if let Some(init) = &case.initial {
                ramp_up.push(Some(lp.add_inequality(
                    format!("ramp_up[{id},t{t1}]"),
                    vec![(ix.g[t][j], 1.0)],
                    gen.ramp_up + init.output[j] - init.reserve_up[j],
                )));
                ramp_down.push(Some(lp.add_inequality(
                    format!("ramp_down[{id},t{t1}]"),
                    vec![(ix.g[t][j], -1.0)],
                    gen.ramp_down - init.output[j] - init.reserve_down[j],
                )));
            } else {
                ramp_up.push(None);
                ramp_down.push(None);
            }
        }
        ix.output_floor.push(floor);
        ix.output_ceiling.push(ceiling);
        ix.ramp_up.push(ramp_up);
        ix.ramp_down.push(ramp_down);

        let mut bal_t = Vec::with_capacity(n_scen);
        let mut flow_t = Vec::with_capacity(n_scen);
        let mut upcap_t = Vec::with_capacity(n_scen);
        let mut downcap_t = Vec::with_capacity(n_scen);
        for k in 0..n_scen {
            let sid = prepared.scenario_id(k);
            let pi = &prepared.fluctuation[k][t];
            let shift = &prepared.scenario_shift[k];
            let mut coeffs = Vec::with_capacity(3 * n_gen + n_load);
            for j in 0..n_gen {
                coeffs.push((ix.g[t][j], 1.0));
                coeffs.push((ix.dg_up[t][k][j], 1.0));
                coeffs.push((ix.dg_down[t][k][j], -1.0));
            }
            for l in 0..n_load {
                coeffs.push((ix.dd[t][k][l], 1.0));
            }
            let total: f64 = demand.iter().zip(pi).map(|(d, p)| d + p).sum();
            bal_t.push(lp.add_equality(format!("balance[k{sid},t{t1}]"), coeffs, total));

            let mut flows = Vec::with_capacity(n_line);
            for (line_idx, line) in case.grid.lines.iter().enumerate() {
                if prepared.line_out(k, line_idx) {
                    flows.push(None);
                    continue;
                }
                let mut row = Vec::new();
                for j in 0..n_gen {
                    let s = shift.get(line_idx, prepared.generator_bus[j]);
                    push_nonzero(&mut row, ix.g[t][j], s);
                    push_nonzero(&mut row, ix.dg_up[t][k][j], s);
                    push_nonzero(&mut row, ix.dg_down[t][k][j], -s);
                }
                let mut withdrawn = 0.0;
                for l in 0..n_load {
                    let s = shift.get(line_idx, prepared.load_bus[l]);
                    push_nonzero(&mut row, ix.dd[t][k][l], s);
                    withdrawn += s * (demand[l] + pi[l]);
                }
                let limit = line.limit_in(Some(sid));
                let reverse: Vec<(usize, f64)> = row.iter().map(|&(v, a)| (v, -a)).collect();
                let fwd = lp.add_inequality(format!("flow+[{},k{sid},t{t1}]", line.id), row, limit + withdrawn);
                let rev = lp.add_inequality(format!("flow-[{},k{sid},t{t1}]", line.id), reverse, limit - withdrawn);
                flows.push(Some((fwd, rev)));
            }
            flow_t.push(flows);

            upcap_t.push(
                (0..n_gen)
                    .map(|j| {
                        lp.add_inequality(
                            format!("up_cap[{},k{sid},t{t1}]", case.generators[j].id),
                            vec![(ix.dg_up[t][k][j], 1.0), (ix.r_up[t][j], -1.0)],
                            0.0,
                        )
                    })
                    .collect(),
            );
            downcap_t.push(
                (0..n_gen)
                    .map(|j| {
                        lp.add_inequality(
                            format!("down_cap[{},k{sid},t{t1}]", case.generators[j].id),
                            vec![(ix.dg_down[t][k][j], 1.0), (ix.r_down[t][j], -1.0)],
                            0.0,
                        )
                    })
                    .collect(),
            );
        }
        ix.scenario_balance.push(bal_t);
        ix.scenario_flow.push(flow_t);
        ix.up_cap.push(upcap_t);
        ix.down_cap.push(downcap_t);
    }

    Ok(ModelVi { lp, index: ix })
}

/// Builds the full co-optimization model.
pub fn build_model_vi(prepared: &PreparedCase) -> Result<ModelVi> {
    build_model(prepared, None)
}

/// Builds the model with generator `generator` fixed in `period` at the
/// quantities of `solution`. Parameters can be moved afterwards with
/// [`ModelVi::set_parameters`].
pub fn build_model_vii_restricted(
    prepared: &PreparedCase,
    solution: &CooptSolution,
    generator: &str,
    period: usize,
) -> Result<ModelVi> {
    let j = prepared
        .case
        .generator_index(generator)
        .ok_or_else(|| Error::UnknownGenerator(generator.to_string()))?;
    prepared.check_period(period)?;
    build_model(prepared, Some(&Restriction::at_optimum(solution, j, period)))
}

impl ModelVi {
    /// Moves the fixed quantities of a restricted model.
    pub fn set_parameters(&mut self, restriction: &Restriction) {
        let (j, t) = (restriction.generator, restriction.period);
        let g = self.index.g[t][j];
        let ru = self.index.r_up[t][j];
        let rd = self.index.r_down[t][j];
        self.lp.set_bounds(g, restriction.output, restriction.output);
        self.lp.set_bounds(ru, restriction.reserve_up, restriction.reserve_up);
        self.lp.set_bounds(rd, restriction.reserve_down, restriction.reserve_down);
    }
}

/// Optimal schedule and every named multiplier of the co-optimization model.
/// Flow multipliers are net values: forward-limit dual minus reverse-limit
/// dual.
#[derive(Debug, Clone, PartialEq)]
pub struct CooptSolution {
    pub objective: f64,
    /// `[t][j]`
    pub g: Vec<Vec<f64>>,
    pub r_up: Vec<Vec<f64>>,
    pub r_down: Vec<Vec<f64>>,
    /// `[t][k][j]`
    pub dg_up: Vec<Vec<Vec<f64>>>,
    pub dg_down: Vec<Vec<Vec<f64>>>,
    /// `[t][k][l]`
    pub shed: Vec<Vec<Vec<f64>>>,

    /// `[t]`
    pub lambda: Vec<f64>,
    /// `[t][line]`
    pub mu: Vec<Vec<f64>>,
    /// `[t][j]`
    pub upsilon_lower: Vec<Vec<f64>>,
    pub upsilon_upper: Vec<Vec<f64>>,
    pub rho_up_lower: Vec<Vec<f64>>,
    pub rho_up_upper: Vec<Vec<f64>>,
    pub rho_down_lower: Vec<Vec<f64>>,
    pub rho_down_upper: Vec<Vec<f64>>,
    pub gamma_up: Vec<Vec<f64>>,
    pub gamma_down: Vec<Vec<f64>>,
    /// `[t][k]`
    pub lambda_k: Vec<Vec<f64>>,
    /// `[t][k][line]`
    pub mu_k: Vec<Vec<Vec<f64>>>,
    /// `[t][k][j]`
    pub alpha_lower: Vec<Vec<Vec<f64>>>,
    pub alpha_upper: Vec<Vec<Vec<f64>>>,
    pub beta_lower: Vec<Vec<Vec<f64>>>,
    pub beta_upper: Vec<Vec<Vec<f64>>>,
    /// `[t][k][l]`
    pub tau_lower: Vec<Vec<Vec<f64>>>,
    pub tau_upper: Vec<Vec<Vec<f64>>>,

    pub kkt: KktReport,
}

impl CooptSolution {
    pub fn periods(&self) -> usize {
        self.g.len()
    }

    pub fn dispatch(&self) -> BaseDispatch {
        BaseDispatch { g: self.g.clone(), r_up: self.r_up.clone(), r_down: self.r_down.clone() }
    }

    fn from_raw(model: &ModelVi, raw: &PrimalDualSolution, kkt: KktReport) -> Self {
        let ix = &model.index;
        let x = |v: usize| raw.x[v];
        let le = |r: usize| raw.le_duals[r];
        let opt = |r: Option<usize>| r.map_or(0.0, le);
        let map2 = |a: &Vec<Vec<usize>>, f: &dyn Fn(usize) -> f64| -> Vec<Vec<f64>> {
            a.iter().map(|row| row.iter().map(|&v| f(v)).collect()).collect()
        };
        let map3 = |a: &Vec<Vec<Vec<usize>>>, f: &dyn Fn(usize) -> f64| -> Vec<Vec<Vec<f64>>> {
            a.iter().map(|m| m.iter().map(|row| row.iter().map(|&v| f(v)).collect()).collect()).collect()
        };
        let lower = |v: usize| raw.lower_duals[v];
        let upper = |v: usize| raw.upper_duals[v];
        CooptSolution {
            objective: raw.objective,
            g: map2(&ix.g, &x),
            r_up: map2(&ix.r_up, &x),
            r_down: map2(&ix.r_down, &x),
            dg_up: map3(&ix.dg_up, &x),
            dg_down: map3(&ix.dg_down, &x),
            shed: map3(&ix.dd, &x),
            lambda: ix.balance.iter().map(|&r| raw.eq_duals[r]).collect(),
            mu: ix.flow.iter().map(|row| row.iter().map(|&(f, b)| le(f) - le(b)).collect()).collect(),
            upsilon_lower: ix.output_floor.iter().map(|row| row.iter().map(|&r| opt(r)).collect()).collect(),
            upsilon_upper: ix.output_ceiling.iter().map(|row| row.iter().map(|&r| opt(r)).collect()).collect(),
            rho_up_lower: map2(&ix.r_up, &lower),
            rho_up_upper: map2(&ix.r_up, &upper),
            rho_down_lower: map2(&ix.r_down, &lower),
            rho_down_upper: map2(&ix.r_down, &upper),
            gamma_up: ix.ramp_up.iter().map(|row| row.iter().map(|&r| opt(r)).collect()).collect(),
            gamma_down: ix.ramp_down.iter().map(|row| row.iter().map(|&r| opt(r)).collect()).collect(),
            lambda_k: ix.scenario_balance.iter().map(|row| row.iter().map(|&r| raw.eq_duals[r]).collect()).collect(),
            mu_k: ix
                .scenario_flow
                .iter()
                .map(|m| {
                    m.iter()
                        .map(|row| row.iter().map(|e| e.map_or(0.0, |(f, b)| le(f) - le(b))).collect())
                        .collect()
                })
                .collect(),
            alpha_lower: map3(&ix.dg_up, &lower),
            alpha_upper: map3(&ix.up_cap, &le),
            beta_lower: map3(&ix.dg_down, &lower),
            beta_upper: map3(&ix.down_cap, &le),
            tau_lower: map3(&ix.dd, &lower),
            tau_upper: map3(&ix.dd, &upper),
            kkt,
        }
    }
}

/// Solves a built model and maps the result into named fields.
pub fn solve_built(prepared: &PreparedCase, model: &ModelVi, solver: &LpSolver) -> Result<CooptSolution> {
    let raw = solver.solve(&model.lp)?;
    let kkt = check_kkt(&model.lp, &raw, prepared.case.options.kkt_tolerance);
    Ok(CooptSolution::from_raw(model, &raw, kkt))
}

pub fn solve_model_vi(prepared: &PreparedCase, solver: &LpSolver) -> Result<CooptSolution> {
    let model = build_model_vi(prepared)?;
    solve_built(prepared, &model, solver)
}

/// Bid-in cost of the base schedule in each period.
pub fn base_cost_per_period(prepared: &PreparedCase, dispatch: &BaseDispatch) -> Vec<f64> {
    (0..prepared.periods())
        .map(|t| {
            prepared
                .case
                .generators
                .iter()
                .enumerate()
                .map(|(j, gen)| {
                    gen.energy_bid * dispatch.g[t][j]
                        + gen.reserve_up_bid * dispatch.r_up[t][j]
                        + gen.reserve_down_bid * dispatch.r_down[t][j]
                })
                .sum()
        })
        .collect()
}

/// Cost of the re-dispatch and shedding actions of scenario `k` in period `t`
/// (not probability-weighted).
pub fn recourse_cost(prepared: &PreparedCase, solution: &CooptSolution, k: usize, t: usize) -> f64 {
    let case = &prepared.case;
    let gens: f64 = case
        .generators
        .iter()
        .enumerate()
        .map(|(j, gen)| {
            gen.redispatch_up_price * solution.dg_up[t][k][j] - gen.redispatch_down_price * solution.dg_down[t][k][j]
        })
        .sum();
    let loads: f64 = case
        .loads
        .iter()
        .enumerate()
        .map(|(l, load)| load.shedding_price * solution.shed[t][k][l])
        .sum();
    gens + loads
}
