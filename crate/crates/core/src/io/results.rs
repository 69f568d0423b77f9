//! CSV result files and the run manifest.
//!
//! Money is written with two decimals, prices and quantities with six.
//! Bodies depend only on the inputs, so repeated runs produce identical
//! files; timings live in the manifest alone.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::case::PreparedCase;
use crate::error::Result;
use crate::lp::KktReport;
use crate::model::CooptSolution;
use crate::montecarlo::{ComparisonTable, ModelKind, RowOutcome, SimulationResult};
use crate::pricing::{EnvelopeReport, PriceSystem};
use crate::settlement::{Party, ProfitReport, SettlementLedger, SurplusReport};

fn fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

pub fn money(v: f64) -> String {
    fixed(v, 2)
}

pub fn quantity(v: f64) -> String {
    fixed(v, 6)
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), quantity)
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    Ok(csv::Writer::from_path(path)?)
}

/// Primal schedule, one row per variable, headed by the objective.
pub fn write_solution(path: &Path, prepared: &PreparedCase, solution: &CooptSolution) -> Result<()> {
    let case = &prepared.case;
    let mut w = writer(path)?;
    w.write_record(["variable", "participant", "scenario", "period", "value"])?;
    w.write_record(["objective", "", "", "", &money(solution.objective)])?;
    for t in 0..solution.periods() {
        let period = (t + 1).to_string();
        for (j, gen) in case.generators.iter().enumerate() {
            for (name, v) in [("g", solution.g[t][j]), ("r_up", solution.r_up[t][j]), ("r_down", solution.r_down[t][j])] {
                w.write_record([name, gen.id.as_str(), "", &period, &quantity(v)])?;
            }
        }
        for k in 0..prepared.num_scenarios() {
            let sid = prepared.scenario_id(k).to_string();
            for (j, gen) in case.generators.iter().enumerate() {
                w.write_record(["dg_up", gen.id.as_str(), &sid, &period, &quantity(solution.dg_up[t][k][j])])?;
                w.write_record(["dg_down", gen.id.as_str(), &sid, &period, &quantity(solution.dg_down[t][k][j])])?;
            }
            for (l, load) in case.loads.iter().enumerate() {
                w.write_record(["shed", load.id.as_str(), &sid, &period, &quantity(solution.shed[t][k][l])])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Named multipliers per period.
pub fn write_duals(path: &Path, prepared: &PreparedCase, solution: &CooptSolution) -> Result<()> {
    let case = &prepared.case;
    let mut w = writer(path)?;
    w.write_record(["dual", "element", "scenario", "period", "value"])?;
    for t in 0..solution.periods() {
        let period = (t + 1).to_string();
        w.write_record(["lambda", "", "", &period, &quantity(solution.lambda[t])])?;
        for (i, line) in case.grid.lines.iter().enumerate() {
            w.write_record(["mu", &line.id.to_string(), "", &period, &quantity(solution.mu[t][i])])?;
        }
        for (j, gen) in case.generators.iter().enumerate() {
            for (name, v) in [
                ("upsilon_lower", solution.upsilon_lower[t][j]),
                ("upsilon_upper", solution.upsilon_upper[t][j]),
                ("rho_up_upper", solution.rho_up_upper[t][j]),
                ("rho_down_upper", solution.rho_down_upper[t][j]),
                ("gamma_up", solution.gamma_up[t][j]),
                ("gamma_down", solution.gamma_down[t][j]),
            ] {
                w.write_record([name, gen.id.as_str(), "", &period, &quantity(v)])?;
            }
        }
        for k in 0..prepared.num_scenarios() {
            let sid = prepared.scenario_id(k).to_string();
            w.write_record(["lambda_k", "", &sid, &period, &quantity(solution.lambda_k[t][k])])?;
            for (i, line) in case.grid.lines.iter().enumerate() {
                if !prepared.line_out(k, i) {
                    w.write_record(["mu_k", &line.id.to_string(), &sid, &period, &quantity(solution.mu_k[t][k][i])])?;
                }
            }
            for (j, gen) in case.generators.iter().enumerate() {
                w.write_record(["alpha_upper", gen.id.as_str(), &sid, &period, &quantity(solution.alpha_upper[t][k][j])])?;
                w.write_record(["beta_upper", gen.id.as_str(), &sid, &period, &quantity(solution.beta_upper[t][k][j])])?;
            }
            for (l, load) in case.loads.iter().enumerate() {
                w.write_record(["tau_upper", load.id.as_str(), &sid, &period, &quantity(solution.tau_upper[t][k][l])])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Headline prices with their base and per-scenario components.
pub fn write_prices(path: &Path, prepared: &PreparedCase, prices: &PriceSystem) -> Result<()> {
    let case = &prepared.case;
    let mut w = writer(path)?;
    let mut header: Vec<String> = ["kind", "participant", "period", "energy", "reserve_up", "reserve_down", "shedding_discount", "omega_base"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..prepared.num_scenarios()).map(|k| format!("omega_k{}", prepared.scenario_id(k))));
    w.write_record(&header)?;
    for t in 0..prices.generators.len() {
        let period = (t + 1).to_string();
        for (j, p) in prices.generators[t].iter().enumerate() {
            let mut row = vec![
                "generator".to_string(),
                case.generators[j].id.clone(),
                period.clone(),
                quantity(p.energy),
                quantity(p.reserve_up),
                quantity(p.reserve_down),
                String::new(),
                quantity(p.base_component),
            ];
            row.extend(p.scenario_components.iter().map(|v| quantity(*v)));
            w.write_record(&row)?;
        }
        for (l, p) in prices.loads[t].iter().enumerate() {
            let mut row = vec![
                "load".to_string(),
                case.loads[l].id.clone(),
                period.clone(),
                quantity(p.energy),
                String::new(),
                String::new(),
                quantity(p.shedding_discount),
                quantity(p.base_component),
            ];
            row.extend(p.scenario_components.iter().map(|v| quantity(*v)));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_envelope(path: &Path, reports: &[EnvelopeReport]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["generator", "period", "quantity", "analytic", "forward", "backward", "central", "abs_error", "status", "passed"])?;
    for r in reports {
        for e in &r.entries {
            w.write_record([
                r.generator.clone(),
                (r.period + 1).to_string(),
                e.quantity.label().to_string(),
                quantity(e.analytic),
                opt(e.forward),
                opt(e.backward),
                opt(e.central),
                e.abs_error.map_or(String::new(), |v| format!("{v:.3e}")),
                format!("{:?}", e.status),
                e.passed().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn party_label(prepared: &PreparedCase, party: Party) -> (&'static str, String) {
    match party {
        Party::Generator(j) => ("generator", prepared.case.generators[j].id.clone()),
        Party::Load(l) => ("load", prepared.case.loads[l].id.clone()),
        Party::Operator => ("operator", String::new()),
    }
}

pub fn write_ledger(path: &Path, prepared: &PreparedCase, ledger: &SettlementLedger) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["period", "party", "participant", "flow", "amount"])?;
    for e in &ledger.entries {
        let (kind, id) = party_label(prepared, e.party);
        w.write_record([(e.period + 1).to_string(), kind.to_string(), id, e.kind.label().to_string(), money(e.amount)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_profit(path: &Path, report: &ProfitReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["generator", "period", "profit"])?;
    for g in &report.generators {
        for (t, v) in g.per_period.iter().enumerate() {
            w.write_record([g.id.clone(), (t + 1).to_string(), money(*v)])?;
        }
        w.write_record([g.id.clone(), "total".to_string(), money(g.total)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_surplus(path: &Path, report: &SurplusReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["period", "expected_surplus"])?;
    for (t, v) in report.per_period.iter().enumerate() {
        w.write_record([(t + 1).to_string(), format!("{v:.3e}")])?;
    }
    w.write_record(["total".to_string(), format!("{:.3e}", report.total)])?;
    w.flush()?;
    Ok(())
}

/// Running averages after every sample.
pub fn write_convergence(path: &Path, result: &SimulationResult) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["samples", "cost", "running_cost", "net_revenue", "running_net_revenue"])?;
    for i in 0..result.samples {
        let net = result.net_revenue.as_ref().map_or(String::new(), |v| money(v[i]));
        let running_net = result.running_net_revenue.as_ref().map_or(String::new(), |v| money(v[i]));
        w.write_record([(i + 1).to_string(), money(result.costs[i]), money(result.running_cost[i]), net, running_net])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_comparison(path: &Path, table: &ComparisonTable) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["model", "kappa", "expected_cost", "mean_cost", "std_error", "samples", "gap_percent", "reduction_percent", "status"])?;
    for row in &table.rows {
        let (model, kappa) = match row.model {
            ModelKind::Cooptimized => ("cooptimized", String::new()),
            ModelKind::Traditional { kappa } => ("traditional", format!("{kappa}")),
        };
        let record = match &row.outcome {
            RowOutcome::Evaluated { expected, simulated, gap_percent, reduction_percent } => [
                model.to_string(),
                kappa,
                money(*expected),
                money(simulated.mean),
                money(simulated.std_error),
                simulated.count.to_string(),
                format!("{gap_percent:.4}"),
                format!("{reduction_percent:.4}"),
                "ok".to_string(),
            ],
            RowOutcome::Infeasible(reason) => [
                model.to_string(),
                kappa,
                String::new(),
                String::new(),
                String::new(),
                table.samples.to_string(),
                String::new(),
                String::new(),
                format!("infeasible: {reason}"),
            ],
        };
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn kkt_json(report: &KktReport) -> serde_json::Value {
    serde_json::json!({
        "passed": report.passed(),
        "primal_objective": report.primal_objective,
        "dual_objective": report.dual_objective,
        "duality_gap": report.duality_gap,
        "stationarity": report.stationarity,
        "complementarity": report.complementarity,
        "dual_feasibility": report.dual_feasibility,
        "primal_feasibility": report.primal_feasibility,
        "tolerance": report.tolerance,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Everything needed to rerun a command and get the same files.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub case_path: PathBuf,
    pub case_name: String,
    pub case_sha256: String,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub kappa_grid: Option<Vec<f64>>,
    pub outputs: Vec<String>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        Ok(())
    }
}
