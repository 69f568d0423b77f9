//! Two-stage settlement: ex-ante energy, reserve and fluctuation payments at
//! the cleared prices, then per-period re-dispatch and shedding payments once
//! the period's outcome is known.

use crate::case::PreparedCase;
use crate::error::{Error, Result};
use crate::model::CooptSolution;
use crate::pricing::PriceSystem;
use crate::scenario::Outcome;

/// Who pays whom for an ex-post quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToParticipant,
    FromParticipant,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::ToParticipant => 1.0,
            Direction::FromParticipant => -1.0,
        }
    }
}

/// Directions of the ex-post cash flows, exposed for sensitivity studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CashFlowDirections {
    /// Upward re-dispatch at `c̄`.
    pub redispatch_up: Direction,
    /// Downward re-dispatch at `c̲`.
    pub redispatch_down: Direction,
    /// Shedding at `c_L`.
    pub shedding: Direction,
}

impl Default for CashFlowDirections {
    fn default() -> Self {
        Self {
            redispatch_up: Direction::ToParticipant,
            redispatch_down: Direction::FromParticipant,
            shedding: Direction::ToParticipant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Party {
    Generator(usize),
    Load(usize),
    Operator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    Energy,
    ReserveUp,
    ReserveDown,
    Fluctuation,
    RedispatchUp,
    RedispatchDown,
    Shedding,
    /// The operator's balancing entry.
    Surplus,
}

impl FlowKind {
    pub fn label(self) -> &'static str {
        match self {
            FlowKind::Energy => "energy",
            FlowKind::ReserveUp => "reserve_up",
            FlowKind::ReserveDown => "reserve_down",
            FlowKind::Fluctuation => "fluctuation",
            FlowKind::RedispatchUp => "redispatch_up",
            FlowKind::RedispatchDown => "redispatch_down",
            FlowKind::Shedding => "shedding",
            FlowKind::Surplus => "surplus",
        }
    }

    pub fn is_ex_post(self) -> bool {
        matches!(self, FlowKind::RedispatchUp | FlowKind::RedispatchDown | FlowKind::Shedding)
    }
}

/// One cash flow. `amount` is what `party` receives; payments are negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry {
    /// Zero-based.
    pub period: usize,
    pub party: Party,
    pub kind: FlowKind,
    pub amount: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SettlementLedger {
    pub entries: Vec<LedgerEntry>,
}

impl SettlementLedger {
    pub fn extend(&mut self, other: SettlementLedger) {
        self.entries.extend(other.entries);
    }

    /// Net amount `party` receives in `period`.
    pub fn received(&self, party: Party, period: usize) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.party == party && e.period == period)
            .map(|e| e.amount)
            .sum()
    }

    /// Operator net position in `period`, from the participant entries.
    pub fn operator_surplus(&self, period: usize) -> f64 {
        -self
            .entries
            .iter()
            .filter(|e| e.period == period && e.party != Party::Operator)
            .map(|e| e.amount)
            .sum::<f64>()
    }

    /// Appends the operator's balancing entry for every period with flows,
    /// so every period sums to zero.
    pub fn close(mut self) -> Self {
        let mut periods: Vec<usize> = self.entries.iter().map(|e| e.period).collect();
        periods.sort_unstable();
        periods.dedup();
        self.entries.retain(|e| e.party != Party::Operator);
        for t in periods {
            let amount = self.operator_surplus(t);
            self.entries.push(LedgerEntry { period: t, party: Party::Operator, kind: FlowKind::Surplus, amount });
        }
        self
    }

    /// Sum of every entry in `period`; zero for a closed ledger.
    pub fn imbalance(&self, period: usize) -> f64 {
        self.entries.iter().filter(|e| e.period == period).map(|e| e.amount).sum()
    }
}

/// Fluctuation charge `Σ_k ω^d_k π_k` of every load, `[t][l]`; negative
/// values are credits.
pub fn fluctuation_charges(prepared: &PreparedCase, prices: &PriceSystem) -> Vec<Vec<f64>> {
    prices
        .loads
        .iter()
        .enumerate()
        .map(|(t, row)| {
            row.iter()
                .enumerate()
                .map(|(l, price)| {
                    price
                        .scenario_components
                        .iter()
                        .enumerate()
                        .map(|(k, w)| w * prepared.fluctuation[k][t][l])
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Energy, reserve and fluctuation flows of every period.
pub fn ex_ante_settlement(prepared: &PreparedCase, solution: &CooptSolution, prices: &PriceSystem) -> SettlementLedger {
    let charges = fluctuation_charges(prepared, prices);
    let mut entries = Vec::new();
    for t in 0..solution.periods() {
        for (j, p) in prices.generators[t].iter().enumerate() {
            let party = Party::Generator(j);
            entries.push(LedgerEntry { period: t, party, kind: FlowKind::Energy, amount: p.energy * solution.g[t][j] });
            entries.push(LedgerEntry {
                period: t,
                party,
                kind: FlowKind::ReserveUp,
                amount: p.reserve_up * solution.r_up[t][j],
            });
            entries.push(LedgerEntry {
                period: t,
                party,
                kind: FlowKind::ReserveDown,
                amount: p.reserve_down * solution.r_down[t][j],
            });
        }
        for (l, p) in prices.loads[t].iter().enumerate() {
            let party = Party::Load(l);
            entries.push(LedgerEntry {
                period: t,
                party,
                kind: FlowKind::Energy,
                amount: -p.energy * prepared.demand[t][l],
            });
            entries.push(LedgerEntry { period: t, party, kind: FlowKind::Fluctuation, amount: -charges[t][l] });
        }
    }
    SettlementLedger { entries }
}

fn ex_post_entries(
    prepared: &PreparedCase,
    solution: &CooptSolution,
    k: usize,
    t: usize,
    weight: f64,
    directions: CashFlowDirections,
    entries: &mut Vec<LedgerEntry>,
) {
    let case = &prepared.case;
    for (j, gen) in case.generators.iter().enumerate() {
        let party = Party::Generator(j);
        entries.push(LedgerEntry {
            period: t,
            party,
            kind: FlowKind::RedispatchUp,
            amount: weight * directions.redispatch_up.sign() * gen.redispatch_up_price * solution.dg_up[t][k][j],
        });
        entries.push(LedgerEntry {
            period: t,
            party,
            kind: FlowKind::RedispatchDown,
            amount: weight * directions.redispatch_down.sign() * gen.redispatch_down_price * solution.dg_down[t][k][j],
        });
    }
    for (l, load) in case.loads.iter().enumerate() {
        entries.push(LedgerEntry {
            period: t,
            party: Party::Load(l),
            kind: FlowKind::Shedding,
            amount: weight * directions.shedding.sign() * load.shedding_price * solution.shed[t][k][l],
        });
    }
}

/// The `t`-th ex-post step for a realized outcome. A base outcome moves no
/// money.
pub fn ex_post_settlement(
    prepared: &PreparedCase,
    solution: &CooptSolution,
    outcome: Outcome,
    t: usize,
    directions: CashFlowDirections,
) -> Result<SettlementLedger> {
    prepared.check_period(t)?;
    let mut entries = Vec::new();
    match outcome {
        Outcome::Base => {}
        Outcome::Scenario(k) if k < prepared.num_scenarios() => {
            ex_post_entries(prepared, solution, k, t, 1.0, directions, &mut entries)
        }
        Outcome::Scenario(k) => return Err(Error::UnknownScenario(k as u32)),
    }
    Ok(SettlementLedger { entries })
}

/// Probability-weighted ex-post flows of every period and scenario.
pub fn expected_ex_post_settlement(
    prepared: &PreparedCase,
    solution: &CooptSolution,
    directions: CashFlowDirections,
) -> SettlementLedger {
    let mut entries = Vec::new();
    for t in 0..solution.periods() {
        for (k, &eps) in prepared.probabilities.iter().enumerate() {
            ex_post_entries(prepared, solution, k, t, eps, directions, &mut entries);
        }
    }
    SettlementLedger { entries }
}

/// Ex-ante flows plus expected ex-post flows, closed by operator entries.
pub fn expected_settlement(
    prepared: &PreparedCase,
    solution: &CooptSolution,
    prices: &PriceSystem,
    directions: CashFlowDirections,
) -> SettlementLedger {
    let mut ledger = ex_ante_settlement(prepared, solution, prices);
    ledger.extend(expected_ex_post_settlement(prepared, solution, directions));
    ledger.close()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurplusReport {
    pub per_period: Vec<f64>,
    pub total: f64,
}

/// Operator net revenue per period: ex-ante surplus plus expected ex-post
/// net inflow.
pub fn expected_merchandise_surplus(
    prepared: &PreparedCase,
    solution: &CooptSolution,
    prices: &PriceSystem,
    directions: CashFlowDirections,
) -> SurplusReport {
    let ledger = expected_settlement(prepared, solution, prices, directions);
    let per_period: Vec<f64> = (0..solution.periods()).map(|t| ledger.operator_surplus(t)).collect();
    let total = per_period.iter().sum();
    SurplusReport { per_period, total }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorProfit {
    pub id: String,
    /// Receipts minus bid-in costs, `[t]`.
    pub per_period: Vec<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfitReport {
    pub generators: Vec<GeneratorProfit>,
}

/// Each generator's ledger receipts minus its bid-in base cost and expected
/// re-dispatch cost, per period.
pub fn generator_profit_report(
    prepared: &PreparedCase,
    solution: &CooptSolution,
    ledger: &SettlementLedger,
) -> ProfitReport {
    let case = &prepared.case;
    let generators = case
        .generators
        .iter()
        .enumerate()
        .map(|(j, gen)| {
            let per_period: Vec<f64> = (0..solution.periods())
                .map(|t| {
                    let redispatch: f64 = prepared
                        .probabilities
                        .iter()
                        .enumerate()
                        .map(|(k, eps)| {
                            eps * (gen.redispatch_up_price * solution.dg_up[t][k][j]
                                - gen.redispatch_down_price * solution.dg_down[t][k][j])
                        })
                        .sum();
                    let cost = gen.energy_bid * solution.g[t][j]
                        + gen.reserve_up_bid * solution.r_up[t][j]
                        + gen.reserve_down_bid * solution.r_down[t][j]
                        + redispatch;
                    ledger.received(Party::Generator(j), t) - cost
                })
                .collect();
            let total = per_period.iter().sum();
            GeneratorProfit { id: gen.id.clone(), per_period, total }
        })
        .collect();
    ProfitReport { generators }
}
