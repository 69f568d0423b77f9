//! Demand profile and the non-base scenario set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::LineId;

/// Per-load maximum demand scaled by a per-period load coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandProfile {
    pub max_demand: Vec<f64>,
    pub coefficients: Vec<f64>,
}

impl DemandProfile {
    pub fn periods(&self) -> usize {
        self.coefficients.len()
    }

    /// Base demand vector `d_t` for a zero-based period.
    pub fn demand(&self, period: usize) -> Vec<f64> {
        let c = self.coefficients[period];
        self.max_demand.iter().map(|d| c * d).collect()
    }
}

/// Load deviation in a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fluctuation {
    /// Base load.
    None,
    /// Percentage changes of each period's base demand: named loads use their
    /// own percentage, every other load uses `others`.
    Percent {
        #[serde(default)]
        others: f64,
        #[serde(default)]
        loads: BTreeMap<String, f64>,
    },
    /// Signed MW deviations per load and period; unlisted loads do not move.
    Explicit { mw: BTreeMap<String, Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonBaseScenario {
    pub id: u32,
    pub probability: f64,
    #[serde(default)]
    pub outages: Vec<LineId>,
    pub fluctuation: Fluctuation,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioSet {
    pub scenarios: Vec<NonBaseScenario>,
}

impl ScenarioSet {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn position(&self, id: u32) -> Option<usize> {
        self.scenarios.iter().position(|s| s.id == id)
    }
}

/// What happens in one period: the base case or one of the non-base
/// scenarios, by position in the scenario set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Base,
    Scenario(usize),
}

/// Expands a scenario's fluctuation rule into explicit MW vectors, indexed
/// `[period][load]`.
pub fn materialize_fluctuations(
    scenario: &NonBaseScenario,
    profile: &DemandProfile,
    load_ids: &[String],
) -> Result<Vec<Vec<f64>>> {
    let periods = profile.periods();
    let loads = profile.max_demand.len();
    let resolve = |name: &str| {
        load_ids
            .iter()
            .position(|id| id == name)
            .ok_or_else(|| Error::UnknownLoad(name.to_string()))
    };
    let mut pi = vec![vec![0.0; loads]; periods];
    match &scenario.fluctuation {
        Fluctuation::None => {}
        Fluctuation::Percent { others, loads: named } => {
            let mut pct = vec![*others; loads];
            for (name, p) in named {
                pct[resolve(name)?] = *p;
            }
            for (t, row) in pi.iter_mut().enumerate() {
                let d = profile.demand(t);
                for l in 0..loads {
                    row[l] = pct[l] / 100.0 * d[l];
                }
            }
        }
        Fluctuation::Explicit { mw } => {
            for (name, series) in mw {
                let l = resolve(name)?;
                if series.len() != periods {
                    return Err(Error::Invalid(format!(
                        "scenario {}: load {name:?} has {} fluctuation values for {periods} periods",
                        scenario.id,
                        series.len()
                    )));
                }
                for (t, v) in series.iter().enumerate() {
                    pi[t][l] = *v;
                }
            }
        }
    }
    for (t, row) in pi.iter().enumerate() {
        let d = profile.demand(t);
        for l in 0..loads {
            let after = d[l] + row[l];
            if after < -1e-12 * (1.0 + d[l].abs()) {
                return Err(Error::NegativePostFluctuationDemand {
                    scenario: scenario.id,
                    load: load_ids[l].clone(),
                    period: t + 1,
                    demand: after,
                });
            }
        }
    }
    Ok(pi)
}

/// Base-case probability `ε₀ = 1 − Σ εₖ` followed by the scenario
/// probabilities in set order.
pub fn scenario_probabilities(set: &ScenarioSet) -> (f64, Vec<f64>) {
    let eps: Vec<f64> = set.scenarios.iter().map(|s| s.probability).collect();
    let total: f64 = eps.iter().sum();
    (1.0 - total, eps)
}
