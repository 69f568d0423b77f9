//! Sampled-outcome simulation of realized system cost and operator net
//! revenue, and the cost comparison against the traditional dispatch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baseline::{evaluate_dispatch, solve_traditional, DispatchEvaluation, ReserveRequirement};
use crate::case::PreparedCase;
use crate::error::{Error, Result};
use crate::lp::LpSolver;
use crate::model::{solve_model_vi, CooptSolution};
use crate::pricing::PriceSystem;
use crate::scenario::Outcome;
use crate::settlement::{ex_ante_settlement, ex_post_settlement, CashFlowDirections};

/// Outcome of every period in one sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realization(pub Vec<Outcome>);

/// Draws each period independently: scenario `k` with probability
/// `probabilities[k]`, the base case otherwise. The stream depends only on
/// `(seed, index)`.
pub fn sample_realization(seed: u64, index: u64, probabilities: &[f64], periods: usize) -> Realization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let outcomes = (0..periods)
        .map(|_| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (k, p) in probabilities.iter().enumerate() {
                acc += p;
                if u < acc {
                    return Outcome::Scenario(k);
                }
            }
            Outcome::Base
        })
        .collect();
    Realization(outcomes)
}

/// Operator cash position per period and outcome for the co-optimized
/// schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct NetRevenueTable {
    /// Ex-ante surplus `[t]`.
    pub ex_ante: Vec<f64>,
    /// Ex-post net inflow to the operator `[t][k]`.
    pub ex_post: Vec<Vec<f64>>,
}

impl NetRevenueTable {
    pub fn new(
        prepared: &PreparedCase,
        solution: &CooptSolution,
        prices: &PriceSystem,
        directions: CashFlowDirections,
    ) -> Result<Self> {
        let ex_ante_ledger = ex_ante_settlement(prepared, solution, prices);
        let periods = prepared.periods();
        let ex_ante = (0..periods).map(|t| ex_ante_ledger.operator_surplus(t)).collect();
        let ex_post = (0..periods)
            .map(|t| {
                (0..prepared.num_scenarios())
                    .map(|k| {
                        let ledger = ex_post_settlement(prepared, solution, Outcome::Scenario(k), t, directions)?;
                        Ok(ledger.operator_surplus(t))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { ex_ante, ex_post })
    }

    pub fn realized(&self, realization: &Realization) -> f64 {
        realization
            .0
            .iter()
            .enumerate()
            .map(|(t, o)| match *o {
                Outcome::Base => self.ex_ante[t],
                Outcome::Scenario(k) => self.ex_ante[t] + self.ex_post[t][k],
            })
            .sum()
    }

    pub fn expected(&self, probabilities: &[f64]) -> f64 {
        self.ex_ante
            .iter()
            .zip(&self.ex_post)
            .map(|(a, post)| a + post.iter().zip(probabilities).map(|(v, p)| v * p).sum::<f64>())
            .sum()
    }
}

/// Mean, sample standard deviation and standard error of a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub std_error: f64,
}

impl Summary {
    /// `mean` is the last running average, so both agree bit for bit.
    fn of(values: &[f64], running: &[f64]) -> Self {
        let n = values.len();
        let mean = running.last().copied().unwrap_or(f64::NAN);
        let std_dev = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { count: n, mean, std_dev, std_error: std_dev / (n as f64).sqrt() }
    }
}

fn running_average(values: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            sum += v;
            sum / (i + 1) as f64
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub samples: usize,
    pub seed: u64,
    /// Realized total cost of each sample.
    pub costs: Vec<f64>,
    pub running_cost: Vec<f64>,
    pub cost: Summary,
    pub net_revenue: Option<Vec<f64>>,
    pub running_net_revenue: Option<Vec<f64>>,
    pub net_revenue_summary: Option<Summary>,
}

/// Simulates `samples` realizations of a dispatch whose recourse costs are
/// tabulated in `evaluation`; with `revenue`, the operator's net revenue is
/// tracked as well.
pub fn run_simulation(
    prepared: &PreparedCase,
    evaluation: &DispatchEvaluation,
    revenue: Option<&NetRevenueTable>,
    samples: usize,
    seed: u64,
) -> Result<SimulationResult> {
    if samples == 0 {
        return Err(Error::Invalid("sample count must be positive".into()));
    }
    let periods = prepared.periods();
    let per_sample: Vec<(f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let r = sample_realization(seed, i, &prepared.probabilities, periods);
            let cost = r.0.iter().enumerate().map(|(t, &o)| evaluation.realized(t, o)).sum();
            let net = revenue.map_or(0.0, |table| table.realized(&r));
            (cost, net)
        })
        .collect();
    let costs: Vec<f64> = per_sample.iter().map(|p| p.0).collect();
    let running_cost = running_average(&costs);
    let cost = Summary::of(&costs, &running_cost);
    let (net_revenue, running_net_revenue, net_revenue_summary) = match revenue {
        Some(_) => {
            let net: Vec<f64> = per_sample.iter().map(|p| p.1).collect();
            let running = running_average(&net);
            let summary = Summary::of(&net, &running);
            (Some(net), Some(running), Some(summary))
        }
        None => (None, None, None),
    };
    Ok(SimulationResult { samples, seed, costs, running_cost, cost, net_revenue, running_net_revenue, net_revenue_summary })
}

/// Values `a, a+step, …` up to `b` inclusive.
pub fn kappa_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(start >= 0.0 && end >= start && step > 0.0) || !end.is_finite() {
        return Err(Error::Invalid(format!("invalid reserve-fraction grid {start}:{end}:{step}")));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
}

pub fn default_kappa_grid() -> Vec<f64> {
    kappa_grid(0.0, 0.10, 0.01).expect("static grid")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Cooptimized,
    Traditional { kappa: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowOutcome {
    Evaluated {
        /// Expected total cost from the recourse tables.
        expected: f64,
        simulated: Summary,
        /// `(mean − co-optimized mean) / co-optimized mean`, in percent.
        gap_percent: f64,
        /// Saving of the co-optimized schedule relative to this row's expected
        /// cost, in percent.
        reduction_percent: f64,
    },
    /// The dispatch or one of its recourse problems has no feasible point.
    Infeasible(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub model: ModelKind,
    pub outcome: RowOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub samples: usize,
    pub seed: u64,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn cooptimized(&self) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.model == ModelKind::Cooptimized)
    }
}

/// Simulates the co-optimized dispatch and the traditional dispatch at every
/// `kappa`, all on the same realizations.
pub fn compare_models(
    prepared: &PreparedCase,
    kappas: &[f64],
    samples: usize,
    seed: u64,
    solver: &LpSolver,
) -> Result<ComparisonTable> {
    let coopt = solve_model_vi(prepared, solver)?;
    let eval = evaluate_dispatch(prepared, &coopt.dispatch(), solver)?;
    let sim = run_simulation(prepared, &eval, None, samples, seed)?;
    let base_mean = sim.cost.mean;
    let base_expected = eval.expected_total(&prepared.probabilities);
    let gap = |mean: f64| 100.0 * (mean - base_mean) / base_mean;
    let mut rows = vec![ComparisonRow {
        model: ModelKind::Cooptimized,
        outcome: RowOutcome::Evaluated {
            expected: base_expected,
            simulated: sim.cost,
            gap_percent: 0.0,
            reduction_percent: 0.0,
        },
    }];
    for &kappa in kappas {
        let evaluated = solve_traditional(prepared, ReserveRequirement::symmetric(kappa), solver)
            .and_then(|trad| evaluate_dispatch(prepared, &trad.dispatch, solver));
        let outcome = match evaluated {
            Ok(eval) => {
                let sim = run_simulation(prepared, &eval, None, samples, seed)?;
                let expected = eval.expected_total(&prepared.probabilities);
                RowOutcome::Evaluated {
                    expected,
                    simulated: sim.cost,
                    gap_percent: gap(sim.cost.mean),
                    reduction_percent: 100.0 * (expected - base_expected) / expected,
                }
            }
            Err(e) if e.is_infeasible_or_unbounded() => RowOutcome::Infeasible(e.to_string()),
            Err(e) => return Err(e),
        };
        rows.push(ComparisonRow { model: ModelKind::Traditional { kappa }, outcome });
    }
    Ok(ComparisonTable { samples, seed, rows })
}
