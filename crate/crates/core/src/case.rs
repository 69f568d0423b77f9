//! Market participants, the assembled market case, and the derived data every
//! model needs (shift factors, demand and fluctuation vectors).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{CaseIssue, Error, IssueKind, Result};
use crate::network::{
    apply_outages, compute_shift_factors, contingency_shift_factors, validate_case, BusId, Grid,
    ShiftFactorMatrix,
};
use crate::scenario::{materialize_fluctuations, scenario_probabilities, DemandProfile, ScenarioSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub id: String,
    pub bus: BusId,
    /// $/MWh
    pub energy_bid: f64,
    /// $/MW
    pub reserve_up_bid: f64,
    /// $/MW
    pub reserve_down_bid: f64,
    /// Price of upward re-dispatch, $/MWh.
    pub redispatch_up_price: f64,
    /// Price of downward re-dispatch, $/MWh.
    pub redispatch_down_price: f64,
    pub min_output: f64,
    pub max_output: f64,
    pub reserve_up_cap: f64,
    pub reserve_down_cap: f64,
    /// MW per period.
    pub ramp_up: f64,
    /// MW per period.
    pub ramp_down: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadParams {
    pub id: String,
    pub bus: BusId,
    pub max_demand: f64,
    /// Value of lost load, $/MWh.
    pub shedding_price: f64,
}

/// Schedule in force before the first period, aligned with the generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub output: Vec<f64>,
    pub reserve_up: Vec<f64>,
    pub reserve_down: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseOptions {
    /// Emit ramping rows into the first period; needs an initial state.
    pub require_initial_ramping: bool,
    /// Pass threshold for the optimality report of every solve.
    pub kkt_tolerance: f64,
}

impl Default for CaseOptions {
    fn default() -> Self {
        Self { require_initial_ramping: false, kkt_tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketCase {
    pub name: String,
    pub grid: Grid,
    pub generators: Vec<GeneratorParams>,
    pub loads: Vec<LoadParams>,
    pub profile: DemandProfile,
    pub scenarios: ScenarioSet,
    pub initial: Option<InitialState>,
    pub options: CaseOptions,
}

fn issue(path: impl Into<String>, message: impl Into<String>) -> CaseIssue {
    CaseIssue { kind: IssueKind::Semantic, path: path.into(), message: message.into() }
}

impl MarketCase {
    pub fn periods(&self) -> usize {
        self.profile.periods()
    }

    pub fn load_ids(&self) -> Vec<String> {
        self.loads.iter().map(|l| l.id.clone()).collect()
    }

    pub fn generator_index(&self, id: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.id == id)
    }

    /// Every semantic problem with the case; empty when the case is usable.
    pub fn issues(&self) -> Vec<CaseIssue> {
        let mut issues = Vec::new();
        if let Err(grid_issues) = validate_case(self.grid.clone()) {
            issues.extend(grid_issues.into_iter().map(|g| issue("grid", g.to_string())));
        }
        let buses: BTreeSet<BusId> = self.grid.buses.iter().copied().collect();

        if self.periods() == 0 {
            issues.push(issue("load_coefficients", "at least one period is required"));
        }
        for (t, c) in self.profile.coefficients.iter().enumerate() {
            if !(*c > 0.0) || !c.is_finite() {
                issues.push(issue(format!("load_coefficients[{t}]"), "coefficient must be positive"));
            }
        }

        let mut seen = BTreeSet::new();
        for (j, g) in self.generators.iter().enumerate() {
            let path = format!("generators[{j}]");
            if !seen.insert(g.id.clone()) {
                issues.push(issue(format!("{path}.id"), format!("duplicate generator id {:?}", g.id)));
            }
            if !buses.contains(&g.bus) {
                issues.push(issue(format!("{path}.bus"), format!("unknown bus {}", g.bus)));
            }
            let numbers = [
                g.energy_bid,
                g.reserve_up_bid,
                g.reserve_down_bid,
                g.redispatch_up_price,
                g.redispatch_down_price,
                g.min_output,
                g.max_output,
                g.reserve_up_cap,
                g.reserve_down_cap,
                g.ramp_up,
                g.ramp_down,
            ];
            if numbers.iter().any(|v| !v.is_finite()) {
                issues.push(issue(path.clone(), "all parameters must be finite"));
            }
            if g.min_output > g.max_output {
                issues.push(issue(format!("{path}.min_output"), "minimum output exceeds maximum output"));
            }
            for (field, v) in [
                ("reserve_up_cap", g.reserve_up_cap),
                ("reserve_down_cap", g.reserve_down_cap),
                ("ramp_up", g.ramp_up),
                ("ramp_down", g.ramp_down),
            ] {
                if v < 0.0 {
                    issues.push(issue(format!("{path}.{field}"), "must be nonnegative"));
                }
            }
        }

        let mut seen = BTreeSet::new();
        for (l, load) in self.loads.iter().enumerate() {
            let path = format!("loads[{l}]");
            if !seen.insert(load.id.clone()) {
                issues.push(issue(format!("{path}.id"), format!("duplicate load id {:?}", load.id)));
            }
            if !buses.contains(&load.bus) {
                issues.push(issue(format!("{path}.bus"), format!("unknown bus {}", load.bus)));
            }
            if !(load.max_demand >= 0.0) || !load.max_demand.is_finite() {
                issues.push(issue(format!("{path}.max_demand"), "must be a nonnegative number"));
            }
            if !load.shedding_price.is_finite() {
                issues.push(issue(format!("{path}.shedding_price"), "must be finite"));
            }
        }

        let mut seen = BTreeSet::new();
        let mut total = 0.0;
        for (k, s) in self.scenarios.scenarios.iter().enumerate() {
            let path = format!("scenarios[{k}]");
            if !seen.insert(s.id) {
                issues.push(issue(format!("{path}.id"), format!("duplicate scenario id {}", s.id)));
            }
            if !(s.probability > 0.0 && s.probability < 1.0) {
                issues.push(issue(format!("{path}.probability"), "must lie in (0, 1)"));
            }
            total += s.probability;
            match apply_outages(&self.grid, &s.outages) {
                Ok(_) => {}
                Err(e) => issues.push(issue(format!("{path}.outages"), e.to_string())),
            }
            if self.periods() > 0 && self.profile.max_demand.len() == self.loads.len() {
                if let Err(e) = materialize_fluctuations(s, &self.profile, &self.load_ids()) {
                    issues.push(issue(format!("{path}.fluctuation"), e.to_string()));
                }
            }
        }
        for line in &self.grid.lines {
            for limit in &line.scenario_limits {
                if self.scenarios.position(limit.scenario).is_none() {
                    issues.push(issue(
                        format!("lines[id={}].scenario_limits", line.id),
                        format!("unknown scenario {}", limit.scenario),
                    ));
                }
            }
        }
        if total >= 1.0 {
            issues.push(issue("scenarios", format!("probabilities sum to {total}, must be below 1")));
        }

        if let Some(init) = &self.initial {
            let n = self.generators.len();
            if init.output.len() != n || init.reserve_up.len() != n || init.reserve_down.len() != n {
                issues.push(issue("initial_state", "must cover every generator exactly once"));
            }
        } else if self.options.require_initial_ramping {
            issues.push(issue("initial_state", Error::MissingInitialState.to_string()));
        }
        issues.dedup();
        issues
    }

    /// Bid-ordering and shedding-price recommendations that do not make the
    /// case unusable.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for g in &self.generators {
            if !(g.redispatch_down_price <= g.energy_bid && g.energy_bid <= g.redispatch_up_price) {
                out.push(format!(
                    "generator {}: expected downward re-dispatch price <= energy bid <= upward re-dispatch price",
                    g.id
                ));
            }
        }
        let max_up = self.generators.iter().map(|g| g.redispatch_up_price).fold(f64::NEG_INFINITY, f64::max);
        for l in &self.loads {
            if l.shedding_price <= max_up {
                out.push(format!(
                    "load {}: shedding price {} does not exceed the highest upward re-dispatch price {}",
                    l.id, l.shedding_price, max_up
                ));
            }
        }
        out
    }

    /// The single-period case made of period `period` (zero-based) of this
    /// one, without an initial state.
    pub fn period_slice(&self, period: usize) -> Result<MarketCase> {
        use crate::scenario::Fluctuation;
        if period >= self.periods() {
            return Err(Error::PeriodOutOfRange { period: period + 1, periods: self.periods() });
        }
        let mut sliced = self.clone();
        sliced.name = format!("{}@t{}", self.name, period + 1);
        sliced.profile.coefficients = vec![self.profile.coefficients[period]];
        sliced.initial = None;
        sliced.options.require_initial_ramping = false;
        for s in &mut sliced.scenarios.scenarios {
            if let Fluctuation::Explicit { mw } = &mut s.fluctuation {
                for series in mw.values_mut() {
                    *series = vec![series[period]];
                }
            }
        }
        Ok(sliced)
    }
}

/// A validated case together with the data derived from it once.
#[derive(Debug, Clone)]
pub struct PreparedCase {
    pub case: MarketCase,
    pub shift: ShiftFactorMatrix,
    /// Post-contingency shift factors per scenario, over the base line set.
    pub scenario_shift: Vec<ShiftFactorMatrix>,
    pub generator_bus: Vec<usize>,
    pub load_bus: Vec<usize>,
    /// `[period][load]`
    pub demand: Vec<Vec<f64>>,
    /// `[scenario][period][load]`
    pub fluctuation: Vec<Vec<Vec<f64>>>,
    pub base_probability: f64,
    pub probabilities: Vec<f64>,
}

impl PreparedCase {
    pub fn new(case: MarketCase) -> Result<Self> {
        let issues = case.issues();
        if !issues.is_empty() {
            return Err(Error::Case(issues));
        }
        let grid = &case.grid;
        let shift = compute_shift_factors(grid)?;
        let scenario_shift = case
            .scenarios
            .scenarios
            .iter()
            .map(|s| contingency_shift_factors(grid, &s.outages))
            .collect::<Result<Vec<_>>>()?;
        let generator_bus = case.generators.iter().map(|g| grid.bus_index(g.bus).expect("validated")).collect();
        let load_bus = case.loads.iter().map(|l| grid.bus_index(l.bus).expect("validated")).collect();
        let demand = (0..case.periods()).map(|t| case.profile.demand(t)).collect();
        let ids = case.load_ids();
        let fluctuation = case
            .scenarios
            .scenarios
            .iter()
            .map(|s| materialize_fluctuations(s, &case.profile, &ids))
            .collect::<Result<Vec<_>>>()?;
        let (base_probability, probabilities) = scenario_probabilities(&case.scenarios);
        Ok(Self {
            case,
            shift,
            scenario_shift,
            generator_bus,
            load_bus,
            demand,
            fluctuation,
            base_probability,
            probabilities,
        })
    }

    pub fn periods(&self) -> usize {
        self.case.periods()
    }

    pub fn num_generators(&self) -> usize {
        self.case.generators.len()
    }

    pub fn num_loads(&self) -> usize {
        self.case.loads.len()
    }

    pub fn num_scenarios(&self) -> usize {
        self.case.scenarios.len()
    }

    pub fn num_lines(&self) -> usize {
        self.case.grid.lines.len()
    }

    pub fn scenario_id(&self, k: usize) -> u32 {
        self.case.scenarios.scenarios[k].id
    }

    /// Whether scenario `k` takes line `l` out of service.
    pub fn line_out(&self, k: usize, l: usize) -> bool {
        let id = self.case.grid.lines[l].id;
        self.case.scenarios.scenarios[k].outages.contains(&id)
    }

    pub fn check_period(&self, period: usize) -> Result<()> {
        if period >= self.periods() {
            Err(Error::PeriodOutOfRange { period: period + 1, periods: self.periods() })
        } else {
            Ok(())
        }
    }
}
