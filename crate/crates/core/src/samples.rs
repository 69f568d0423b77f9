//! Small hand-checkable market cases.
//!
//! * `case_a`: one bus, one generator, one 50 MW load, one period, no scenarios.
//! * `case_b`: `case_a` plus a 10% probability scenario raising the load by 10 MW.
//! * `case_c`: two periods with demand 50 and 90 MW, ramp-up limit 45 MW and
//!   the `case_b` scenario in both periods.

use std::collections::BTreeMap;

use crate::case::{CaseOptions, GeneratorParams, LoadParams, MarketCase};
use crate::network::Grid;
use crate::scenario::{DemandProfile, Fluctuation, NonBaseScenario, ScenarioSet};

pub fn unit_generator(id: &str, bus: u32) -> GeneratorParams {
    GeneratorParams {
        id: id.to_string(),
        bus,
        energy_bid: 10.0,
        reserve_up_bid: 1.0,
        reserve_down_bid: 1.0,
        redispatch_up_price: 12.0,
        redispatch_down_price: 8.0,
        min_output: 0.0,
        max_output: 100.0,
        reserve_up_cap: 20.0,
        reserve_down_cap: 20.0,
        ramp_up: 100.0,
        ramp_down: 100.0,
    }
}

pub fn case_a() -> MarketCase {
    MarketCase {
        name: "case_a".into(),
        grid: Grid { buses: vec![1], lines: vec![], slack: 1 },
        generators: vec![unit_generator("G1", 1)],
        loads: vec![LoadParams { id: "D1".into(), bus: 1, max_demand: 50.0, shedding_price: 1000.0 }],
        profile: DemandProfile { max_demand: vec![50.0], coefficients: vec![1.0] },
        scenarios: ScenarioSet::default(),
        initial: None,
        options: CaseOptions::default(),
    }
}

fn load_step(periods: usize) -> NonBaseScenario {
    NonBaseScenario {
        id: 1,
        probability: 0.1,
        outages: vec![],
        fluctuation: Fluctuation::Explicit { mw: BTreeMap::from([("D1".to_string(), vec![10.0; periods])]) },
    }
}

pub fn case_b() -> MarketCase {
    let mut case = case_a();
    case.name = "case_b".into();
    case.scenarios.scenarios.push(load_step(1));
    case
}

pub fn case_c() -> MarketCase {
    let mut case = case_a();
    case.name = "case_c".into();
    case.loads[0].max_demand = 100.0;
    case.profile = DemandProfile { max_demand: vec![100.0], coefficients: vec![0.5, 0.9] };
    case.generators[0].ramp_up = 45.0;
    case.scenarios.scenarios.push(load_step(2));
    case
}
