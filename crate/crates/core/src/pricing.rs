//! Marginal energy and reserve prices from the co-optimization duals, and
//! their check against finite differences of the restricted model.

use rayon::prelude::*;

use crate::case::PreparedCase;
use crate::error::{Error, Result};
use crate::lp::{DualPolicy, LpError, LpSolver};
use crate::model::{build_model, CooptSolution, Restriction};

/// Energy and reserve prices of one generator in one period.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorPrice {
    /// `η^g = ω_0 + Σ_k ω_k`
    pub energy: f64,
    pub base_component: f64,
    /// `[k]`
    pub scenario_components: Vec<f64>,
    pub reserve_up: f64,
    pub reserve_down: f64,
}

/// Energy price of one load in one period.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadPrice {
    /// `η^d = ω_0 + Σ_k ω_k − Σ_k τ̄_k`
    pub energy: f64,
    pub base_component: f64,
    pub scenario_components: Vec<f64>,
    /// `Σ_k τ̄_k`, the discount for a binding shedding bound.
    pub shedding_discount: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSystem {
    /// `[t][j]`
    pub generators: Vec<Vec<GeneratorPrice>>,
    /// `[t][l]`
    pub loads: Vec<Vec<LoadPrice>>,
}

/// `ω_0` and `ω_k` at a bus index for period `t`.
fn bus_components(prepared: &PreparedCase, solution: &CooptSolution, t: usize, bus: usize) -> (f64, Vec<f64>) {
    let base = solution.lambda[t] - prepared.shift.column_dot(bus, &solution.mu[t]);
    let scen = (0..prepared.num_scenarios())
        .map(|k| solution.lambda_k[t][k] - prepared.scenario_shift[k].column_dot(bus, &solution.mu_k[t][k]))
        .collect();
    (base, scen)
}

fn resum(base: f64, parts: &[f64]) -> f64 {
    parts.iter().fold(base, |acc, p| acc + p)
}

/// Generator energy prices with their base/scenario decomposition, `[t][j]`,
/// reserve fields filled from [`reserve_prices`].
pub fn energy_price_generators(prepared: &PreparedCase, solution: &CooptSolution) -> Vec<Vec<GeneratorPrice>> {
    let reserves = reserve_prices(solution);
    (0..solution.periods())
        .map(|t| {
            prepared
                .generator_bus
                .iter()
                .enumerate()
                .map(|(j, &bus)| {
                    let (base_component, scenario_components) = bus_components(prepared, solution, t, bus);
                    GeneratorPrice {
                        energy: resum(base_component, &scenario_components),
                        base_component,
                        scenario_components,
                        reserve_up: reserves[t][j].0,
                        reserve_down: reserves[t][j].1,
                    }
                })
                .collect()
        })
        .collect()
}

/// Load energy prices, `[t][l]`.
pub fn energy_price_loads(prepared: &PreparedCase, solution: &CooptSolution) -> Vec<Vec<LoadPrice>> {
    (0..solution.periods())
        .map(|t| {
            prepared
                .load_bus
                .iter()
                .enumerate()
                .map(|(l, &bus)| {
                    let (base_component, scenario_components) = bus_components(prepared, solution, t, bus);
                    let shedding_discount: f64 = solution.tau_upper[t].iter().map(|row| row[l]).sum();
                    LoadPrice {
                        energy: resum(base_component, &scenario_components) - shedding_discount,
                        base_component,
                        scenario_components,
                        shedding_discount,
                    }
                })
                .collect()
        })
        .collect()
}

/// `(η^U, η^D)` per `[t][j]`: sums over scenarios of the re-dispatch cap
/// multipliers.
pub fn reserve_prices(solution: &CooptSolution) -> Vec<Vec<(f64, f64)>> {
    solution
        .alpha_upper
        .iter()
        .zip(&solution.beta_upper)
        .zip(&solution.r_up)
        .map(|((alpha, beta), r)| {
            (0..r.len())
                .map(|j| (alpha.iter().map(|a| a[j]).sum(), beta.iter().map(|b| b[j]).sum()))
                .collect()
        })
        .collect()
}

pub fn price_system(prepared: &PreparedCase, solution: &CooptSolution) -> PriceSystem {
    PriceSystem {
        generators: energy_price_generators(prepared, solution),
        loads: energy_price_loads(prepared, solution),
    }
}

/// Which fixed quantity is perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Output,
    ReserveUp,
    ReserveDown,
}

impl Quantity {
    pub const ALL: [Quantity; 3] = [Quantity::Output, Quantity::ReserveUp, Quantity::ReserveDown];

    pub fn label(self) -> &'static str {
        match self {
            Quantity::Output => "g",
            Quantity::ReserveUp => "r_up",
            Quantity::ReserveDown => "r_down",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeStatus {
    /// One-sided differences agree; the central difference is meaningful.
    Smooth,
    /// One-sided differences disagree beyond tolerance.
    Kink,
    /// A perturbation leaves the quantity's physical range; only one side
    /// was evaluated.
    Boundary,
    /// A perturbed restricted model has no feasible point.
    RestrictedSolveInfeasible,
    /// A ramping row involving the quantity binds, so the price formula
    /// and the restricted model need not agree.
    RampingBinding,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeEntry {
    pub quantity: Quantity,
    pub analytic: f64,
    /// `−ΔF/Δx` slopes; absent when that side was not evaluated.
    pub forward: Option<f64>,
    pub backward: Option<f64>,
    pub central: Option<f64>,
    pub abs_error: Option<f64>,
    pub tolerance: f64,
    pub status: EnvelopeStatus,
}

impl EnvelopeEntry {
    pub fn passed(&self) -> bool {
        self.status == EnvelopeStatus::Smooth && self.abs_error.is_some_and(|e| e <= self.tolerance)
    }

    /// Whether the analytic price lies between the one-sided slopes, the
    /// weaker statement that survives a kink.
    pub fn within_one_sided(&self) -> bool {
        match (self.forward, self.backward) {
            (Some(f), Some(b)) => {
                let slack = self.tolerance;
                self.analytic >= f.min(b) - slack && self.analytic <= f.max(b) + slack
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub generator: String,
    pub period: usize,
    pub entries: Vec<EnvelopeEntry>,
}

/// Perturbs generator `generator`'s quantities in `period` by `±step` in the
/// restricted model and compares `−ΔF/Δx` with the formula prices.
pub fn envelope_check(
    prepared: &PreparedCase,
    solution: &CooptSolution,
    prices: &PriceSystem,
    generator: &str,
    period: usize,
    step: f64,
    solver: &LpSolver,
) -> Result<EnvelopeReport> {
    let j = prepared
        .case
        .generator_index(generator)
        .ok_or_else(|| Error::UnknownGenerator(generator.to_string()))?;
    prepared.check_period(period)?;
    if !(step > 0.0) {
        return Err(Error::Invalid(format!("finite-difference step must be positive, got {step}")));
    }
    let gen = &prepared.case.generators[j];
    let at = Restriction::at_optimum(solution, j, period);
    let mut model = build_model(prepared, Some(&at))?;
    let solver = solver.clone().with_policy(DualPolicy::AsReturned);

    let mut value = |r: &Restriction| -> Result<Option<f64>> {
        model.set_parameters(r);
        match solver.solve(&model.lp) {
            Ok(sol) => Ok(Some(sol.objective)),
            Err(LpError::Infeasible) => Ok(None),
            Err(e) => Err(e.into()),
        }
    };
    let center = value(&at)?;

    let ramp_tol = 1e-9;
    let next = period + 1;
    let gamma = |v: &Vec<Vec<f64>>, t: usize| v.get(t).map_or(0.0, |row| row[j].abs());
    let ramp_g = gamma(&solution.gamma_up, period)
        + gamma(&solution.gamma_down, period)
        + gamma(&solution.gamma_up, next)
        + gamma(&solution.gamma_down, next);
    let ramp_up = gamma(&solution.gamma_up, next);
    let ramp_down = gamma(&solution.gamma_down, next);

    let price = &prices.generators[period][j];
    let mut entries = Vec::with_capacity(3);
    for quantity in Quantity::ALL {
        let (x, lo, hi, analytic, ramp) = match quantity {
            Quantity::Output => (at.output, f64::NEG_INFINITY, f64::INFINITY, price.energy, ramp_g),
            Quantity::ReserveUp => (at.reserve_up, 0.0, gen.reserve_up_cap, price.reserve_up, ramp_up),
            Quantity::ReserveDown => (at.reserve_down, 0.0, gen.reserve_down_cap, price.reserve_down, ramp_down),
        };
        let shifted = |dx: f64| {
            let mut r = at;
            match quantity {
                Quantity::Output => r.output += dx,
                Quantity::ReserveUp => r.reserve_up += dx,
                Quantity::ReserveDown => r.reserve_down += dx,
            }
            r
        };
        let up_ok = x + step <= hi;
        let down_ok = x - step >= lo;
        let plus = if up_ok { value(&shifted(step))? } else { None };
        let minus = if down_ok { value(&shifted(-step))? } else { None };
        let forward = center.zip(plus).map(|(c, p)| -(p - c) / step);
        let backward = center.zip(minus).map(|(c, m)| -(c - m) / step);
        let central = plus.zip(minus).map(|(p, m)| -(p - m) / (2.0 * step));
        let tolerance = 1e-4 * (1.0 + analytic.abs());
        let infeasible = center.is_none() || (up_ok && plus.is_none()) || (down_ok && minus.is_none());
        let status = if infeasible {
            EnvelopeStatus::RestrictedSolveInfeasible
        } else if !(up_ok && down_ok) {
            EnvelopeStatus::Boundary
        } else if ramp > ramp_tol {
            EnvelopeStatus::RampingBinding
        } else if (forward.unwrap() - backward.unwrap()).abs() > tolerance {
            EnvelopeStatus::Kink
        } else {
            EnvelopeStatus::Smooth
        };
        entries.push(EnvelopeEntry {
            quantity,
            analytic,
            forward,
            backward,
            central,
            abs_error: central.map(|c| (analytic - c).abs()),
            tolerance,
            status,
        });
    }
    Ok(EnvelopeReport { generator: gen.id.clone(), period, entries })
}

/// Runs [`envelope_check`] for every generator and period.
pub fn envelope_check_all(
    prepared: &PreparedCase,
    solution: &CooptSolution,
    prices: &PriceSystem,
    step: f64,
    solver: &LpSolver,
) -> Result<Vec<EnvelopeReport>> {
    let pairs: Vec<(usize, usize)> = (0..prepared.periods())
        .flat_map(|t| (0..prepared.num_generators()).map(move |j| (t, j)))
        .collect();
    pairs
        .into_par_iter()
        .map(|(t, j)| envelope_check(prepared, solution, prices, &prepared.case.generators[j].id, t, step, solver))
        .collect()
}
