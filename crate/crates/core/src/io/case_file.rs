//! The JSON case format.
//!
//! ```json
//! {
//!   "meta": { "name": "case_b", "periods": 1 },
//!   "buses": [1],
//!   "lines": [],
//!   "generators": [{ "id": "G1", "bus": 1, "energy_bid": 10, ... }],
//!   "loads": [{ "id": "D1", "bus": 1, "max_demand": 50, "shedding_price": 1000 }],
//!   "load_coefficients": [1.0],
//!   "scenarios": [{ "id": 1, "probability": 0.1, "outages": [],
//!                   "fluctuation": { "kind": "explicit", "mw": { "D1": [10] } } }],
//!   "options": { "slack_bus": 1 }
//! }
//! ```
//!
//! Loading reports every schema problem at once, each with a JSON path, and
//! then every semantic problem of the assembled case.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::case::{CaseOptions, GeneratorParams, InitialState, LoadParams, MarketCase};
use crate::error::{CaseIssue, Error, IssueKind, Result};
use crate::network::{BusId, Grid, Line};
use crate::scenario::{DemandProfile, NonBaseScenario, ScenarioSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub name: String,
    pub periods: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionsSection {
    pub slack_bus: BusId,
    #[serde(default)]
    pub require_initial_ramping: bool,
    #[serde(default = "default_kkt_tolerance")]
    pub kkt_tolerance: f64,
}

fn default_kkt_tolerance() -> f64 {
    CaseOptions::default().kkt_tolerance
}

/// On-disk layout of a case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseFile {
    pub meta: Meta,
    pub buses: Vec<BusId>,
    #[serde(default)]
    pub lines: Vec<Line>,
    pub generators: Vec<GeneratorParams>,
    pub loads: Vec<LoadParams>,
    pub load_coefficients: Vec<f64>,
    #[serde(default)]
    pub scenarios: Vec<NonBaseScenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialState>,
    pub options: OptionsSection,
}

impl CaseFile {
    pub fn into_case(self) -> MarketCase {
        MarketCase {
            name: self.meta.name,
            grid: Grid { buses: self.buses, lines: self.lines, slack: self.options.slack_bus },
            profile: DemandProfile {
                max_demand: self.loads.iter().map(|l| l.max_demand).collect(),
                coefficients: self.load_coefficients,
            },
            generators: self.generators,
            loads: self.loads,
            scenarios: ScenarioSet { scenarios: self.scenarios },
            initial: self.initial_state,
            options: CaseOptions {
                require_initial_ramping: self.options.require_initial_ramping,
                kkt_tolerance: self.options.kkt_tolerance,
            },
        }
    }

    pub fn from_case(case: &MarketCase) -> Self {
        Self {
            meta: Meta { name: case.name.clone(), periods: case.periods() },
            buses: case.grid.buses.clone(),
            lines: case.grid.lines.clone(),
            generators: case.generators.clone(),
            loads: case.loads.clone(),
            load_coefficients: case.profile.coefficients.clone(),
            scenarios: case.scenarios.scenarios.clone(),
            initial_state: case.initial.clone(),
            options: OptionsSection {
                slack_bus: case.grid.slack,
                require_initial_ramping: case.options.require_initial_ramping,
                kkt_tolerance: case.options.kkt_tolerance,
            },
        }
    }
}

#[derive(Clone, Copy)]
enum Ty {
    Uint,
    Number,
    Str,
    Bool,
}

impl Ty {
    fn matches(self, v: &Value) -> bool {
        match self {
            Ty::Uint => v.as_u64().is_some_and(|n| n <= u32::MAX as u64),
            Ty::Number => v.is_number(),
            Ty::Str => v.is_string(),
            Ty::Bool => v.is_boolean(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Ty::Uint => "a nonnegative integer",
            Ty::Number => "a number",
            Ty::Str => "a string",
            Ty::Bool => "a boolean",
        }
    }
}

struct Schema {
    issues: Vec<CaseIssue>,
}

impl Schema {
    fn push(&mut self, path: &str, message: impl Into<String>) {
        self.issues.push(CaseIssue { kind: IssueKind::Schema, path: path.to_string(), message: message.into() });
    }

    fn object<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a Map<String, Value>> {
        let obj = v.as_object();
        if obj.is_none() {
            self.push(path, "expected an object");
        }
        obj
    }

    fn array<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a Vec<Value>> {
        let arr = v.as_array();
        if arr.is_none() {
            self.push(path, "expected an array");
        }
        arr
    }

    fn scalar(&mut self, v: &Value, path: &str, ty: Ty) {
        if !ty.matches(v) {
            self.push(path, format!("expected {}", ty.name()));
        }
    }

    fn scalars(&mut self, v: &Value, path: &str, ty: Ty) -> Option<usize> {
        let arr = self.array(v, path)?;
        for (i, item) in arr.iter().enumerate() {
            self.scalar(item, &format!("{path}[{i}]"), ty);
        }
        Some(arr.len())
    }

    /// Checks `fields` of an object and flags any key not listed.
    fn record<'a>(
        &mut self,
        v: &'a Value,
        path: &str,
        fields: &[(&str, bool, Option<Ty>)],
    ) -> Option<&'a Map<String, Value>> {
        let obj = self.object(v, path)?;
        for &(name, required, ty) in fields {
            match obj.get(name) {
                None if required => self.push(&format!("{path}.{name}"), "missing field"),
                None => {}
                Some(value) => {
                    if let Some(ty) = ty {
                        self.scalar(value, &format!("{path}.{name}"), ty);
                    }
                }
            }
        }
        for key in obj.keys() {
            if !fields.iter().any(|f| f.0 == key) {
                self.push(&format!("{path}.{key}"), "unknown field");
            }
        }
        Some(obj)
    }

    fn list_of(&mut self, root: &Map<String, Value>, key: &str, required: bool, mut each: impl FnMut(&mut Self, &Value, &str)) {
        match root.get(key) {
            None if required => self.push(key, "missing field"),
            None => {}
            Some(v) => {
                if let Some(items) = self.array(v, key) {
                    for (i, item) in items.iter().enumerate() {
                        each(self, item, &format!("{key}[{i}]"));
                    }
                }
            }
        }
    }
}

const GENERATOR_FIELDS: [&str; 11] = [
    "energy_bid",
    "reserve_up_bid",
    "reserve_down_bid",
    "redispatch_up_price",
    "redispatch_down_price",
    "min_output",
    "max_output",
    "reserve_up_cap",
    "reserve_down_cap",
    "ramp_up",
    "ramp_down",
];

fn check_fluctuation(s: &mut Schema, v: &Value, path: &str, periods: Option<usize>) {
    let Some(obj) = s.object(v, path) else { return };
    match obj.get("kind").and_then(Value::as_str) {
        Some("none") => {
            s.record(v, path, &[("kind", true, Some(Ty::Str))]);
        }
        Some("percent") => {
            if let Some(obj) =
                s.record(v, path, &[("kind", true, Some(Ty::Str)), ("others", false, Some(Ty::Number)), ("loads", false, None)])
            {
                if let Some(loads) = obj.get("loads") {
                    let lp = format!("{path}.loads");
                    if let Some(map) = s.object(loads, &lp) {
                        for (name, pct) in map {
                            s.scalar(pct, &format!("{lp}.{name}"), Ty::Number);
                        }
                    }
                }
            }
        }
        Some("explicit") => {
            if let Some(obj) = s.record(v, path, &[("kind", true, Some(Ty::Str)), ("mw", true, None)]) {
                if let Some(mw) = obj.get("mw") {
                    let mp = format!("{path}.mw");
                    if let Some(map) = s.object(mw, &mp) {
                        for (name, series) in map {
                            let sp = format!("{mp}.{name}");
                            if let (Some(n), Some(t)) = (s.scalars(series, &sp, Ty::Number), periods) {
                                if n != t {
                                    s.push(&sp, format!("expected {t} values, one per period, found {n}"));
                                }
                            }
                        }
                    }
                }
            }
        }
        Some(other) => s.push(&format!("{path}.kind"), format!("unknown fluctuation kind {other:?}")),
        None => s.push(&format!("{path}.kind"), "missing fluctuation kind (none, percent or explicit)"),
    }
}

/// Structural problems of a parsed case document.
pub fn schema_issues(doc: &Value) -> Vec<CaseIssue> {
    let mut s = Schema { issues: Vec::new() };
    let top = [
        ("meta", true, None),
        ("buses", true, None),
        ("lines", false, None),
        ("generators", true, None),
        ("loads", true, None),
        ("load_coefficients", true, None),
        ("scenarios", false, None),
        ("initial_state", false, None),
        ("options", true, None),
    ];
    let Some(root) = s.record(doc, "$", &top) else { return s.issues };
    // Report top-level keys without the `$.` prefix.
    for issue in &mut s.issues {
        if let Some(rest) = issue.path.strip_prefix("$.") {
            issue.path = rest.to_string();
        }
    }

    let mut periods = None;
    if let Some(meta) = root.get("meta") {
        if let Some(m) = s.record(meta, "meta", &[("name", true, Some(Ty::Str)), ("periods", true, Some(Ty::Uint))]) {
            periods = m.get("periods").and_then(Value::as_u64).map(|p| p as usize);
        }
    }
    if let Some(buses) = root.get("buses") {
        s.scalars(buses, "buses", Ty::Uint);
    }
    s.list_of(root, "lines", false, |s, v, p| {
        if let Some(obj) = s.record(
            v,
            p,
            &[
                ("id", true, Some(Ty::Uint)),
                ("from", true, Some(Ty::Uint)),
                ("to", true, Some(Ty::Uint)),
                ("reactance", true, Some(Ty::Number)),
                ("limit", true, Some(Ty::Number)),
                ("scenario_limits", false, None),
            ],
        ) {
            if let Some(limits) = obj.get("scenario_limits") {
                let lp = format!("{p}.scenario_limits");
                if let Some(items) = s.array(limits, &lp) {
                    for (i, item) in items.iter().enumerate() {
                        s.record(
                            item,
                            &format!("{lp}[{i}]"),
                            &[("scenario", true, Some(Ty::Uint)), ("limit", true, Some(Ty::Number))],
                        );
                    }
                }
            }
        }
    });
    s.list_of(root, "generators", true, |s, v, p| {
        let mut fields: Vec<(&str, bool, Option<Ty>)> = vec![("id", true, Some(Ty::Str)), ("bus", true, Some(Ty::Uint))];
        fields.extend(GENERATOR_FIELDS.iter().map(|f| (*f, true, Some(Ty::Number))));
        s.record(v, p, &fields);
    });
    s.list_of(root, "loads", true, |s, v, p| {
        s.record(
            v,
            p,
            &[
                ("id", true, Some(Ty::Str)),
                ("bus", true, Some(Ty::Uint)),
                ("max_demand", true, Some(Ty::Number)),
                ("shedding_price", true, Some(Ty::Number)),
            ],
        );
    });
    if let Some(coefs) = root.get("load_coefficients") {
        if let (Some(n), Some(t)) = (s.scalars(coefs, "load_coefficients", Ty::Number), periods) {
            if n != t {
                s.push("load_coefficients", format!("expected {t} coefficients (meta.periods), found {n}"));
            }
        }
    }
    s.list_of(root, "scenarios", false, |s, v, p| {
        if let Some(obj) = s.record(
            v,
            p,
            &[
                ("id", true, Some(Ty::Uint)),
                ("probability", true, Some(Ty::Number)),
                ("outages", false, None),
                ("fluctuation", true, None),
            ],
        ) {
            if let Some(out) = obj.get("outages") {
                s.scalars(out, &format!("{p}.outages"), Ty::Uint);
            }
            if let Some(f) = obj.get("fluctuation") {
                check_fluctuation(s, f, &format!("{p}.fluctuation"), periods);
            }
        }
    });
    if let Some(init) = root.get("initial_state") {
        if !init.is_null() {
            if let Some(obj) =
                s.record(init, "initial_state", &[("output", true, None), ("reserve_up", true, None), ("reserve_down", true, None)])
            {
                for key in ["output", "reserve_up", "reserve_down"] {
                    if let Some(v) = obj.get(key) {
                        s.scalars(v, &format!("initial_state.{key}"), Ty::Number);
                    }
                }
            }
        }
    }
    if let Some(opts) = root.get("options") {
        s.record(
            opts,
            "options",
            &[
                ("slack_bus", true, Some(Ty::Uint)),
                ("require_initial_ramping", false, Some(Ty::Bool)),
                ("kkt_tolerance", false, Some(Ty::Number)),
            ],
        );
    }
    s.issues
}

/// Parses and validates a case document. `origin` only labels errors.
pub fn parse_case(text: &str, origin: &Path) -> Result<MarketCase> {
    let doc: Value =
        serde_json::from_str(text).map_err(|source| Error::Parse { path: origin.to_path_buf(), source })?;
    let schema = schema_issues(&doc);
    if !schema.is_empty() {
        return Err(Error::Case(schema));
    }
    let file: CaseFile =
        serde_json::from_value(doc).map_err(|source| Error::Parse { path: origin.to_path_buf(), source })?;
    let case = file.into_case();
    let issues = case.issues();
    if !issues.is_empty() {
        return Err(Error::Case(issues));
    }
    Ok(case)
}

pub fn load_case(path: impl AsRef<Path>) -> Result<MarketCase> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_case(&text, path)
}

pub fn case_to_json(case: &MarketCase) -> Result<String> {
    Ok(serde_json::to_string_pretty(&CaseFile::from_case(case))?)
}

pub fn save_case(case: &MarketCase, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, case_to_json(case)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;

    fn parse(text: &str) -> Result<MarketCase> {
        parse_case(text, Path::new("inline.json"))
    }

    #[test]
    fn samples_round_trip() {
        for case in [samples::case_a(), samples::case_b(), samples::case_c()] {
            let text = case_to_json(&case).unwrap();
            assert_eq!(parse(&text).unwrap(), case);
        }
    }

    #[test]
    fn every_schema_problem_is_reported() {
        let mut doc: Value = serde_json::from_str(&case_to_json(&samples::case_b()).unwrap()).unwrap();
        doc["load_coefficients"] = serde_json::json!([1.0, 0.5]);
        doc["generators"][0]["bus"] = serde_json::json!("one");
        doc["loads"][0].as_object_mut().unwrap().remove("shedding_price");
        doc["color"] = serde_json::json!("blue");
        doc["scenarios"][0]["fluctuation"]["kind"] = serde_json::json!("gaussian");
        let Err(Error::Case(issues)) = parse(&doc.to_string()) else { panic!("expected schema errors") };
        let paths: Vec<&str> = issues.iter().map(|i| i.path.as_str()).collect();
        for expected in [
            "load_coefficients",
            "generators[0].bus",
            "loads[0].shedding_price",
            "color",
            "scenarios[0].fluctuation.kind",
        ] {
            assert!(paths.contains(&expected), "{expected} not in {paths:?}");
        }
        assert!(issues.iter().all(|i| i.kind == IssueKind::Schema));
    }

    #[test]
    fn semantic_problems_follow_a_clean_schema() {
        let mut doc: Value = serde_json::from_str(&case_to_json(&samples::case_b()).unwrap()).unwrap();
        doc["generators"][0]["bus"] = serde_json::json!(9);
        doc["scenarios"][0]["probability"] = serde_json::json!(1.5);
        let Err(Error::Case(issues)) = parse(&doc.to_string()) else { panic!("expected semantic errors") };
        assert!(issues.len() >= 2);
        assert!(issues.iter().all(|i| i.kind == IssueKind::Semantic));
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(parse("{ not json"), Err(Error::Parse { .. })));
    }

    #[test]
    fn explicit_series_length_is_checked() {
        let mut doc: Value = serde_json::from_str(&case_to_json(&samples::case_c()).unwrap()).unwrap();
        doc["scenarios"][0]["fluctuation"]["mw"]["D1"] = serde_json::json!([1.0]);
        let Err(Error::Case(issues)) = parse(&doc.to_string()) else { panic!() };
        assert_eq!(issues[0].path, "scenarios[0].fluctuation.mw.D1");
    }
}
