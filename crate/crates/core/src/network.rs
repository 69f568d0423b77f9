//! Grid topology, DC shift factors and contingency topologies.
//!
//! Shift factors are computed from the reduced nodal susceptance matrix with an
//! explicit slack bus. Post-contingency factors are obtained by recomputing on
//! the reduced topology, never through outage distribution factors.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shift factors smaller than this are inverse round-off.
const ROUND_OFF: f64 = 1e-12;

pub type BusId = u32;
pub type LineId = u32;

/// Flow limit that applies to a line in one non-base scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioLimit {
    pub scenario: u32,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: LineId,
    pub from: BusId,
    pub to: BusId,
    /// Series reactance in p.u.
    pub reactance: f64,
    /// Base-case flow limit in MW, applied in both directions.
    pub limit: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scenario_limits: Vec<ScenarioLimit>,
}

impl Line {
    /// Flow limit in `scenario`, falling back to the base limit.
    pub fn limit_in(&self, scenario: Option<u32>) -> f64 {
        scenario
            .and_then(|k| self.scenario_limits.iter().find(|s| s.scenario == k))
            .map_or(self.limit, |s| s.limit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub buses: Vec<BusId>,
    pub lines: Vec<Line>,
    pub slack: BusId,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridIssue {
    Empty,
    DuplicateBus(BusId),
    DuplicateLine(LineId),
    UnknownBus { line: LineId, bus: BusId },
    SelfLoop(LineId),
    NonPositiveReactance(LineId),
    NonPositiveLimit { line: LineId, scenario: Option<u32> },
    UnknownSlack(BusId),
    Disconnected(Vec<BusId>),
}

impl fmt::Display for GridIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridIssue::Empty => write!(f, "grid has no buses"),
            GridIssue::DuplicateBus(b) => write!(f, "duplicate bus id {b}"),
            GridIssue::DuplicateLine(l) => write!(f, "duplicate line id {l}"),
            GridIssue::UnknownBus { line, bus } => {
                write!(f, "line {line} references unknown bus {bus}")
            }
            GridIssue::SelfLoop(l) => write!(f, "line {l} connects a bus to itself"),
            GridIssue::NonPositiveReactance(l) => write!(f, "line {l} has non-positive reactance"),
            GridIssue::NonPositiveLimit { line, scenario: None } => {
                write!(f, "line {line} has non-positive flow limit")
            }
            GridIssue::NonPositiveLimit { line, scenario: Some(k) } => {
                write!(f, "line {line} has non-positive flow limit in scenario {k}")
            }
            GridIssue::UnknownSlack(b) => write!(f, "slack bus {b} does not exist"),
            GridIssue::Disconnected(buses) => {
                write!(f, "buses {buses:?} are not connected to the slack bus")
            }
        }
    }
}

impl Grid {
    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.buses.iter().position(|&b| b == id)
    }

    pub fn line_index(&self, id: LineId) -> Option<usize> {
        self.lines.iter().position(|l| l.id == id)
    }

    pub fn slack_index(&self) -> usize {
        self.bus_index(self.slack).expect("validated grid has a slack bus")
    }

    /// Buses that cannot be reached from the slack bus.
    fn unreachable_buses(&self) -> Vec<BusId> {
        let index: HashMap<BusId, usize> =
            self.buses.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        let mut adjacency = vec![Vec::new(); self.buses.len()];
        for line in &self.lines {
            if let (Some(&a), Some(&b)) = (index.get(&line.from), index.get(&line.to)) {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        let Some(&start) = index.get(&self.slack) else {
            return self.buses.clone();
        };
        let mut seen = vec![false; self.buses.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        self.buses
            .iter()
            .zip(&seen)
            .filter(|(_, &s)| !s)
            .map(|(&b, _)| b)
            .collect()
    }
}

/// Checks a grid and returns it unchanged if it is usable, otherwise every
/// violation found.
pub fn validate_case(grid: Grid) -> std::result::Result<Grid, Vec<GridIssue>> {
    let mut issues = Vec::new();
    if grid.buses.is_empty() {
        issues.push(GridIssue::Empty);
        return Err(issues);
    }
    let mut seen = BTreeSet::new();
    for &b in &grid.buses {
        if !seen.insert(b) {
            issues.push(GridIssue::DuplicateBus(b));
        }
    }
    let mut seen_lines = BTreeSet::new();
    for line in &grid.lines {
        if !seen_lines.insert(line.id) {
            issues.push(GridIssue::DuplicateLine(line.id));
        }
        for bus in [line.from, line.to] {
            if !seen.contains(&bus) {
                issues.push(GridIssue::UnknownBus { line: line.id, bus });
            }
        }
        if line.from == line.to {
            issues.push(GridIssue::SelfLoop(line.id));
        }
        if !(line.reactance > 0.0) {
            issues.push(GridIssue::NonPositiveReactance(line.id));
        }
        if !(line.limit > 0.0) {
            issues.push(GridIssue::NonPositiveLimit { line: line.id, scenario: None });
        }
        for s in &line.scenario_limits {
            if !(s.limit > 0.0) {
                issues.push(GridIssue::NonPositiveLimit {
                    line: line.id,
                    scenario: Some(s.scenario),
                });
            }
        }
    }
    if !seen.contains(&grid.slack) {
        issues.push(GridIssue::UnknownSlack(grid.slack));
    } else {
        let unreachable = grid.unreachable_buses();
        if !unreachable.is_empty() {
            issues.push(GridIssue::Disconnected(unreachable));
        }
    }
    if issues.is_empty() {
        Ok(grid)
    } else {
        Err(issues)
    }
}

/// Line-by-bus matrix of DC power transfer distribution factors. Entry
/// `(l, b)` is the flow on line `l` caused by injecting 1 MW at bus `b` and
/// withdrawing it at the slack bus.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftFactorMatrix {
    matrix: DMatrix<f64>,
}

impl ShiftFactorMatrix {
    pub fn lines(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn buses(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn get(&self, line: usize, bus: usize) -> f64 {
        self.matrix[(line, bus)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Line flows for a nodal injection vector (balanced by the slack).
    pub fn flows(&self, injection: &[f64]) -> Vec<f64> {
        assert_eq!(injection.len(), self.buses());
        (0..self.lines())
            .map(|l| {
                injection
                    .iter()
                    .enumerate()
                    .map(|(b, p)| self.matrix[(l, b)] * p)
                    .sum()
            })
            .collect()
    }

    /// `S(:, bus)ᵀ · v` for a vector over lines.
    pub fn column_dot(&self, bus: usize, per_line: &[f64]) -> f64 {
        per_line
            .iter()
            .enumerate()
            .map(|(l, v)| self.matrix[(l, bus)] * v)
            .sum()
    }
}

/// Shift factors of a validated grid.
pub fn compute_shift_factors(grid: &Grid) -> Result<ShiftFactorMatrix> {
    let n = grid.buses.len();
    let slack = grid.slack_index();
    let index: HashMap<BusId, usize> =
        grid.buses.iter().enumerate().map(|(i, &b)| (b, i)).collect();

    // reduced index: every bus except the slack
    let reduced = |b: usize| if b < slack { Some(b) } else if b > slack { Some(b - 1) } else { None };

    let mut susceptance = DMatrix::<f64>::zeros(n.saturating_sub(1), n.saturating_sub(1));
    for line in &grid.lines {
        let b = 1.0 / line.reactance;
        let (i, j) = (index[&line.from], index[&line.to]);
        if let Some(ri) = reduced(i) {
            susceptance[(ri, ri)] += b;
        }
        if let Some(rj) = reduced(j) {
            susceptance[(rj, rj)] += b;
        }
        if let (Some(ri), Some(rj)) = (reduced(i), reduced(j)) {
            susceptance[(ri, rj)] -= b;
            susceptance[(rj, ri)] -= b;
        }
    }

    let reactance_inv = if n > 1 {
        let lu = susceptance.lu();
        let inverse = lu.try_inverse().ok_or(Error::SingularNetworkMatrix)?;
        if inverse.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularNetworkMatrix);
        }
        inverse
    } else {
        DMatrix::zeros(0, 0)
    };

    let mut matrix = DMatrix::<f64>::zeros(grid.lines.len(), n);
    for (l, line) in grid.lines.iter().enumerate() {
        let b = 1.0 / line.reactance;
        let (from, to) = (reduced(index[&line.from]), reduced(index[&line.to]));
        for bus in 0..n {
            let Some(rb) = reduced(bus) else { continue };
            let theta_from = from.map_or(0.0, |r| reactance_inv[(r, rb)]);
            let theta_to = to.map_or(0.0, |r| reactance_inv[(r, rb)]);
            let s = b * (theta_from - theta_to);
            // drop round-off left by the inverse
            matrix[(l, bus)] = if s.abs() < ROUND_OFF { 0.0 } else { s };
        }
    }
    Ok(ShiftFactorMatrix { matrix })
}

/// Removes the listed lines. Fails if a line is unknown or if the removal
/// separates any bus from the slack.
pub fn apply_outages(grid: &Grid, outages: &[LineId]) -> Result<Grid> {
    for &id in outages {
        if grid.line_index(id).is_none() {
            return Err(Error::UnknownLine(id));
        }
    }
    let reduced = Grid {
        buses: grid.buses.clone(),
        lines: grid
            .lines
            .iter()
            .filter(|l| !outages.contains(&l.id))
            .cloned()
            .collect(),
        slack: grid.slack,
    };
    let unreachable = reduced.unreachable_buses();
    if !unreachable.is_empty() {
        return Err(Error::IslandingOutage {
            lines: outages.to_vec(),
            isolated: unreachable,
        });
    }
    Ok(reduced)
}

/// Post-contingency shift factors laid out over the base grid's lines; rows of
/// outaged lines are zero.
pub fn contingency_shift_factors(grid: &Grid, outages: &[LineId]) -> Result<ShiftFactorMatrix> {
    if outages.is_empty() {
        return compute_shift_factors(grid);
    }
    let reduced = apply_outages(grid, outages)?;
    let partial = compute_shift_factors(&reduced)?;
    let mut matrix = DMatrix::<f64>::zeros(grid.lines.len(), grid.buses.len());
    for (r, line) in reduced.lines.iter().enumerate() {
        let l = grid.line_index(line.id).expect("line from base grid");
        matrix.row_mut(l).copy_from(&partial.matrix.row(r));
    }
    Ok(ShiftFactorMatrix { matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn line(id: LineId, from: BusId, to: BusId, x: f64) -> Line {
        Line { id, from, to, reactance: x, limit: 100.0, scenario_limits: vec![] }
    }

    fn triangle() -> Grid {
        Grid {
            buses: vec![1, 2, 3],
            lines: vec![line(1, 1, 2, 0.1), line(2, 1, 3, 0.1), line(3, 2, 3, 0.1)],
            slack: 3,
        }
    }

    /// Flows from an independent solve of the nodal balance equations
    /// (Gaussian elimination on the full Laplacian with the slack angle pinned).
    fn oracle_flows(grid: &Grid, injection: &[f64]) -> Vec<f64> {
        let n = grid.buses.len();
        let s = grid.slack_index();
        let mut a = vec![vec![0.0; n + 1]; n];
        for l in &grid.lines {
            let (i, j) = (grid.bus_index(l.from).unwrap(), grid.bus_index(l.to).unwrap());
            let b = 1.0 / l.reactance;
            a[i][i] += b;
            a[j][j] += b;
            a[i][j] -= b;
            a[j][i] -= b;
        }
        for (i, row) in a.iter_mut().enumerate() {
            row[n] = injection[i];
        }
        for v in a[s].iter_mut() {
            *v = 0.0;
        }
        a[s][s] = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
                .unwrap();
            a.swap(col, pivot);
            for r in 0..n {
                if r != col {
                    let factor = a[r][col] / a[col][col];
                    for c in col..=n {
                        a[r][c] -= factor * a[col][c];
                    }
                }
            }
        }
        let theta: Vec<f64> = (0..n).map(|i| a[i][n] / a[i][i]).collect();
        grid.lines
            .iter()
            .map(|l| {
                let (i, j) = (grid.bus_index(l.from).unwrap(), grid.bus_index(l.to).unwrap());
                (theta[i] - theta[j]) / l.reactance
            })
            .collect()
    }

    #[test]
    fn minimal_grids_validate() {
        let two = Grid { buses: vec![1, 2], lines: vec![line(1, 1, 2, 0.1)], slack: 1 };
        assert!(validate_case(two).is_ok());
        let path = Grid {
            buses: vec![1, 2, 3],
            lines: vec![line(1, 1, 2, 0.1), line(2, 2, 3, 0.2)],
            slack: 1,
        };
        assert!(validate_case(path).is_ok());
    }

    #[test]
    fn isolated_bus_is_reported() {
        let grid = Grid {
            buses: vec![1, 2, 3, 4],
            lines: vec![line(1, 1, 2, 0.1), line(2, 2, 3, 0.1)],
            slack: 1,
        };
        assert_eq!(validate_case(grid).unwrap_err(), vec![GridIssue::Disconnected(vec![4])]);
    }

    #[test]
    fn all_violations_are_collected() {
        let grid = Grid {
            buses: vec![1, 2, 2],
            lines: vec![line(1, 1, 2, 0.0), line(1, 1, 2, -1.0)],
            slack: 1,
        };
        let issues = validate_case(grid).unwrap_err();
        assert!(issues.contains(&GridIssue::DuplicateBus(2)));
        assert!(issues.contains(&GridIssue::DuplicateLine(1)));
        assert!(issues.contains(&GridIssue::NonPositiveReactance(1)));
    }

    #[test]
    fn single_line_carries_everything() {
        let grid = Grid { buses: vec![1, 2], lines: vec![line(1, 1, 2, 0.1)], slack: 2 };
        let s = compute_shift_factors(&grid).unwrap();
        assert_abs_diff_eq!(s.get(0, 0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.get(0, 1), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn triangle_splits_two_thirds() {
        let grid = triangle();
        let s = compute_shift_factors(&grid).unwrap();
        let oracle = oracle_flows(&grid, &[1.0, 0.0, -1.0]);
        assert_abs_diff_eq!(oracle[1], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle[0], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.get(1, 0), oracle[1], epsilon = 1e-12);
        assert_abs_diff_eq!(s.get(0, 0), oracle[0], epsilon = 1e-12);
        for l in 0..3 {
            assert_eq!(s.get(l, 2), 0.0);
        }
    }

    #[test]
    fn outage_leaves_single_path() {
        let grid = triangle();
        let reduced = apply_outages(&grid, &[1]).unwrap();
        assert_eq!(reduced.lines.len(), 2);
        let s = contingency_shift_factors(&grid, &[1]).unwrap();
        assert_abs_diff_eq!(s.get(1, 0), 1.0, epsilon = 1e-12);
        assert_eq!(s.get(0, 0), 0.0);
    }

    #[test]
    fn removing_only_line_islands() {
        let grid = Grid { buses: vec![1, 2], lines: vec![line(1, 1, 2, 0.1)], slack: 1 };
        assert!(matches!(apply_outages(&grid, &[1]), Err(Error::IslandingOutage { .. })));
        assert!(matches!(apply_outages(&grid, &[9]), Err(Error::UnknownLine(9))));
    }

    #[test]
    fn scenario_limit_defaults_to_base() {
        let mut l = line(1, 1, 2, 0.1);
        l.scenario_limits.push(ScenarioLimit { scenario: 2, limit: 130.0 });
        assert_eq!(l.limit_in(None), 100.0);
        assert_eq!(l.limit_in(Some(1)), 100.0);
        assert_eq!(l.limit_in(Some(2)), 130.0);
    }

    fn mesh() -> Grid {
        Grid {
            buses: vec![1, 2, 3, 4, 5],
            lines: vec![
                line(1, 1, 2, 0.06),
                line(2, 1, 3, 0.24),
                line(3, 2, 3, 0.18),
                line(4, 2, 4, 0.18),
                line(5, 2, 5, 0.12),
                line(6, 3, 4, 0.03),
                line(7, 4, 5, 0.24),
            ],
            slack: 1,
        }
    }

    #[test]
    fn mesh_matches_oracle_and_kcl() {
        let grid = mesh();
        let s = compute_shift_factors(&grid).unwrap();
        for b in 0..grid.buses.len() {
            let mut inj = vec![0.0; grid.buses.len()];
            inj[b] += 1.0;
            inj[grid.slack_index()] -= 1.0;
            let oracle = oracle_flows(&grid, &inj);
            for l in 0..grid.lines.len() {
                assert_abs_diff_eq!(s.get(l, b), oracle[l], epsilon = 1e-9);
                assert!(s.get(l, b).abs() <= 1.0 + 1e-12);
            }
            // KCL at every bus
            let flows = s.flows(&{
                let mut e = vec![0.0; grid.buses.len()];
                e[b] = 1.0;
                e
            });
            for (node, &bus) in grid.buses.iter().enumerate() {
                let net: f64 = grid
                    .lines
                    .iter()
                    .zip(&flows)
                    .map(|(l, f)| if l.from == bus { *f } else if l.to == bus { -*f } else { 0.0 })
                    .sum();
                assert_abs_diff_eq!(net, inj[node], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn contingency_equals_reduced_grid_factors() {
        let grid = mesh();
        let reduced = apply_outages(&grid, &[3]).unwrap();
        let direct = compute_shift_factors(&reduced).unwrap();
        let laid_out = contingency_shift_factors(&grid, &[3]).unwrap();
        for (r, l) in reduced.lines.iter().enumerate() {
            let full = grid.line_index(l.id).unwrap();
            for b in 0..5 {
                assert_eq!(laid_out.get(full, b), direct.get(r, b));
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn shift_factors_are_linear(
            p in proptest::collection::vec(-100.0f64..100.0, 5),
            q in proptest::collection::vec(-100.0f64..100.0, 5),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let s = compute_shift_factors(&mesh()).unwrap();
            let mix: Vec<f64> = p.iter().zip(&q).map(|(x, y)| a * x + b * y).collect();
            let lhs = s.flows(&mix);
            let fp = s.flows(&p);
            let fq = s.flows(&q);
            for l in 0..lhs.len() {
                let rhs = a * fp[l] + b * fq[l];
                proptest::prop_assert!((lhs[l] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
            }
        }
    }
}
