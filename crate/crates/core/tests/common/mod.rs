//! Case corpus shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coopt::case::{CaseOptions, GeneratorParams, LoadParams, MarketCase, PreparedCase};
use coopt::lp::{LinearProgram, LpSolver};
use coopt::model::{solve_model_vi, CooptSolution};
use coopt::network::{Grid, Line};
use coopt::samples;
use coopt::scenario::{DemandProfile, Fluctuation, NonBaseScenario, ScenarioSet};

pub fn case_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("cases").join(file)
}

pub fn demo() -> MarketCase {
    coopt::io::load_case(case_path("demo_24.json")).expect("bundled demo loads")
}

pub fn micro_cases() -> Vec<MarketCase> {
    vec![samples::case_a(), samples::case_b(), samples::case_c()]
}

/// One draw of a small networked case; may be infeasible.
fn draw_case(rng: &mut ChaCha8Rng, name: String) -> MarketCase {
    let n_bus = rng.gen_range(1..=5u32);
    let buses: Vec<u32> = (1..=n_bus).collect();
    let periods = rng.gen_range(1..=4usize);

    let mut lines = Vec::new();
    let mut next_id = 1;
    let mut line = |rng: &mut ChaCha8Rng, from: u32, to: u32| {
        let l = Line {
            id: next_id,
            from,
            to,
            reactance: rng.gen_range(0.05..0.3),
            limit: rng.gen_range(40.0..120.0f64).round(),
            scenario_limits: vec![],
        };
        next_id += 1;
        l
    };
    // spanning tree first, so extra lines can fail without islanding a bus
    for b in 2..=n_bus {
        let parent = rng.gen_range(1..b);
        lines.push(line(rng, parent, b));
    }
    let tree = lines.len();
    if n_bus >= 3 {
        for _ in 0..rng.gen_range(0..=2) {
            let a = rng.gen_range(1..=n_bus);
            let b = rng.gen_range(1..=n_bus);
            let taken = lines.iter().any(|l| (l.from, l.to) == (a, b) || (l.from, l.to) == (b, a));
            if a != b && !taken {
                lines.push(line(rng, a, b));
            }
        }
    }

    let n_load = rng.gen_range(1..=3usize);
    let loads: Vec<LoadParams> = (0..n_load)
        .map(|l| LoadParams {
            id: format!("D{}", l + 1),
            bus: rng.gen_range(1..=n_bus),
            max_demand: rng.gen_range(20.0..60.0f64).round(),
            shedding_price: rng.gen_range(500.0..1000.0f64).round(),
        })
        .collect();
    let peak: f64 = loads.iter().map(|l| l.max_demand).sum();

    let n_gen = rng.gen_range(2..=4usize);
    let generators: Vec<GeneratorParams> = (0..n_gen)
        .map(|j| {
            let bid = rng.gen_range(10.0..50.0f64).round() + j as f64 * 0.5;
            GeneratorParams {
                id: format!("G{}", j + 1),
                bus: rng.gen_range(1..=n_bus),
                energy_bid: bid,
                reserve_up_bid: rng.gen_range(1.0..5.0f64).round(),
                reserve_down_bid: rng.gen_range(1.0..5.0f64).round(),
                redispatch_up_price: bid + rng.gen_range(2.0..10.0f64).round(),
                redispatch_down_price: (bid - rng.gen_range(2.0..8.0f64).round()).max(0.0),
                min_output: 0.0,
                max_output: (peak * rng.gen_range(0.6..1.2)).round(),
                reserve_up_cap: rng.gen_range(15.0..40.0f64).round(),
                reserve_down_cap: rng.gen_range(15.0..40.0f64).round(),
                ramp_up: 2.0 * peak,
                ramp_down: 2.0 * peak,
            }
        })
        .collect();

    let coefficients = (0..periods).map(|_| (rng.gen_range(0.6..1.0f64) * 100.0).round() / 100.0).collect();
    let load_ids: Vec<String> = loads.iter().map(|l| l.id.clone()).collect();
    let scenarios = (0..rng.gen_range(0..=3u32))
        .map(|k| {
            let outages = if lines.len() > tree && rng.gen_bool(0.5) {
                vec![lines[rng.gen_range(tree..lines.len())].id]
            } else {
                vec![]
            };
            let fluctuation = match rng.gen_range(0..3) {
                0 => Fluctuation::None,
                1 => {
                    let named = &load_ids[rng.gen_range(0..load_ids.len())];
                    Fluctuation::Percent {
                        others: rng.gen_range(-5.0..5.0f64).round(),
                        loads: BTreeMap::from([(named.clone(), rng.gen_range(-5.0..8.0f64).round())]),
                    }
                }
                _ => {
                    let named = &load_ids[rng.gen_range(0..load_ids.len())];
                    let mw = (0..periods).map(|_| rng.gen_range(-3.0..6.0f64).round()).collect();
                    Fluctuation::Explicit { mw: BTreeMap::from([(named.clone(), mw)]) }
                }
            };
            NonBaseScenario { id: k + 1, probability: rng.gen_range(2..=10) as f64 / 100.0, outages, fluctuation }
        })
        .collect();

    MarketCase {
        name,
        grid: Grid { buses, lines, slack: 1 },
        profile: DemandProfile { max_demand: loads.iter().map(|l| l.max_demand).collect(), coefficients },
        generators,
        loads,
        scenarios: ScenarioSet { scenarios },
        initial: None,
        options: CaseOptions::default(),
    }
}

/// The `index`-th randomized case: the first feasible draw of its own stream.
pub fn random_case(index: u64) -> MarketCase {
    let solver = LpSolver::default();
    for attempt in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1_000 * index + attempt);
        let case = draw_case(&mut rng, format!("random_{index}"));
        let Ok(prepared) = PreparedCase::new(case.clone()) else { continue };
        if solve_model_vi(&prepared, &solver).is_ok() {
            return case;
        }
    }
    panic!("no feasible draw for random case {index}");
}

pub fn random_cases(count: u64) -> Vec<MarketCase> {
    (0..count).map(random_case).collect()
}

/// Prices read off a single-period LP.
#[derive(Debug, Clone, PartialEq)]
pub struct SinglePeriodPrices {
    pub objective: f64,
    /// Per generator: energy, reserve up, reserve down.
    pub generators: Vec<(f64, f64, f64)>,
    /// Per load: energy.
    pub loads: Vec<f64>,
}

/// Builds and solves the one-period co-optimization directly from the case
/// data and derives nodal prices from its duals.
pub fn single_period_oracle(prepared: &PreparedCase, solver: &LpSolver) -> SinglePeriodPrices {
    assert_eq!(prepared.periods(), 1);
    let case = &prepared.case;
    let (gens, loads) = (&case.generators, &case.loads);
    let d = &prepared.demand[0];
    let n_k = prepared.num_scenarios();
    let mut lp = LinearProgram::new();

    let (mut g, mut ru, mut rd) = (Vec::new(), Vec::new(), Vec::new());
    for x in gens {
        g.push(lp.add_variable("g", x.energy_bid, f64::NEG_INFINITY, f64::INFINITY));
        ru.push(lp.add_variable("ru", x.reserve_up_bid, 0.0, x.reserve_up_cap));
        rd.push(lp.add_variable("rd", x.reserve_down_bid, 0.0, x.reserve_down_cap));
    }
    // recourse variables [k][j] and [k][l]
    let mut up = Vec::new();
    let mut dn = Vec::new();
    let mut shed = Vec::new();
    for k in 0..n_k {
        let eps = prepared.probabilities[k];
        let pi = &prepared.fluctuation[k][0];
        up.push(gens.iter().map(|x| lp.add_variable("up", eps * x.redispatch_up_price, 0.0, f64::INFINITY)).collect::<Vec<_>>());
        dn.push(gens.iter().map(|x| lp.add_variable("dn", -eps * x.redispatch_down_price, 0.0, f64::INFINITY)).collect::<Vec<_>>());
        shed.push(
            loads
                .iter()
                .enumerate()
                .map(|(i, x)| lp.add_variable("shed", eps * x.shedding_price, 0.0, (d[i] + pi[i]).max(0.0)))
                .collect::<Vec<_>>(),
        );
    }

    // (variable, bus index, sign) terms projected onto one line
    let on_line = |shift: &coopt::network::ShiftFactorMatrix, line: usize, terms: &[(usize, usize, f64)]| {
        terms
            .iter()
            .filter_map(|&(v, bus, sign)| {
                let s = shift.get(line, bus) * sign;
                (s != 0.0).then_some((v, s))
            })
            .collect::<Vec<_>>()
    };

    let balance = lp.add_equality("balance", g.iter().map(|&v| (v, 1.0)).collect(), d.iter().sum());
    let gen_terms: Vec<(usize, usize, f64)> = g.iter().enumerate().map(|(j, &v)| (v, prepared.generator_bus[j], 1.0)).collect();
    let mut flow = Vec::new();
    for (l, line) in case.grid.lines.iter().enumerate() {
        let row = on_line(&prepared.shift, l, &gen_terms);
        let fixed: f64 = (0..loads.len()).map(|i| prepared.shift.get(l, prepared.load_bus[i]) * d[i]).sum();
        let neg = row.iter().map(|&(v, a)| (v, -a)).collect();
        flow.push((lp.add_inequality("f+", row, line.limit + fixed), lp.add_inequality("f-", neg, line.limit - fixed)));
    }
    for j in 0..gens.len() {
        lp.add_inequality("floor", vec![(rd[j], 1.0), (g[j], -1.0)], -gens[j].min_output);
        lp.add_inequality("ceiling", vec![(g[j], 1.0), (ru[j], 1.0)], gens[j].max_output);
    }

    let mut scen = Vec::new();
    for k in 0..n_k {
        let pi = &prepared.fluctuation[k][0];
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        let mut terms = Vec::new();
        for j in 0..gens.len() {
            coeffs.extend([(g[j], 1.0), (up[k][j], 1.0), (dn[k][j], -1.0)]);
            let bus = prepared.generator_bus[j];
            terms.extend([(g[j], bus, 1.0), (up[k][j], bus, 1.0), (dn[k][j], bus, -1.0)]);
        }
        for i in 0..loads.len() {
            coeffs.push((shed[k][i], 1.0));
            terms.push((shed[k][i], prepared.load_bus[i], 1.0));
        }
        let total: f64 = d.iter().zip(pi).map(|(a, b)| a + b).sum();
        let bal = lp.add_equality("balance_k", coeffs, total);

        let shift = &prepared.scenario_shift[k];
        let mut rows = Vec::new();
        for (l, line) in case.grid.lines.iter().enumerate() {
            if prepared.line_out(k, l) {
                rows.push(None);
                continue;
            }
            let limit = line.limit_in(Some(prepared.scenario_id(k)));
            let row = on_line(shift, l, &terms);
            let fixed: f64 = (0..loads.len()).map(|i| shift.get(l, prepared.load_bus[i]) * (d[i] + pi[i])).sum();
            let neg = row.iter().map(|&(v, a)| (v, -a)).collect();
            rows.push(Some((lp.add_inequality("fk+", row, limit + fixed), lp.add_inequality("fk-", neg, limit - fixed))));
        }
        let up_caps: Vec<usize> =
            (0..gens.len()).map(|j| lp.add_inequality("up_cap", vec![(up[k][j], 1.0), (ru[j], -1.0)], 0.0)).collect();
        let down_caps: Vec<usize> =
            (0..gens.len()).map(|j| lp.add_inequality("down_cap", vec![(dn[k][j], 1.0), (rd[j], -1.0)], 0.0)).collect();
        let caps: Vec<(usize, usize)> = up_caps.into_iter().zip(down_caps).collect();
        scen.push((bal, rows, caps, shed[k].clone()));
    }

    let sol = solver.solve(&lp).expect("single-period oracle solves");
    let net = |rows: &[Option<(usize, usize)>]| -> Vec<f64> {
        rows.iter().map(|r| r.map_or(0.0, |(p, m)| sol.le_duals[p] - sol.le_duals[m])).collect()
    };
    let base_mu = net(&flow.iter().map(|&r| Some(r)).collect::<Vec<_>>());
    let scen_mu: Vec<Vec<f64>> = scen.iter().map(|(_, rows, _, _)| net(rows)).collect();
    let nodal = |bus: usize| -> f64 {
        let mut price = sol.eq_duals[balance] - prepared.shift.column_dot(bus, &base_mu);
        for (k, (bal, ..)) in scen.iter().enumerate() {
            price += sol.eq_duals[*bal] - prepared.scenario_shift[k].column_dot(bus, &scen_mu[k]);
        }
        price
    };
    let generators = (0..gens.len())
        .map(|j| {
            let up: f64 = scen.iter().map(|(_, _, caps, _)| sol.le_duals[caps[j].0]).sum();
            let dn: f64 = scen.iter().map(|(_, _, caps, _)| sol.le_duals[caps[j].1]).sum();
            (nodal(prepared.generator_bus[j]), up, dn)
        })
        .collect();
    let loads = (0..loads.len())
        .map(|i| {
            let discount: f64 = scen.iter().map(|(_, _, _, shed)| sol.upper_duals[shed[i]]).sum();
            nodal(prepared.load_bus[i]) - discount
        })
        .collect();
    SinglePeriodPrices { objective: sol.objective, generators, loads }
}

/// Expected cost of period `t` at the co-optimized schedule.
pub fn period_expected_cost(prepared: &PreparedCase, solution: &CooptSolution, t: usize) -> f64 {
    let base = coopt::model::base_cost_per_period(prepared, &solution.dispatch())[t];
    base + (0..prepared.num_scenarios())
        .map(|k| prepared.probabilities[k] * coopt::model::recourse_cost(prepared, solution, k, t))
        .sum::<f64>()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}
