use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::lp::LpError;
use crate::network::{GridIssue, LineId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Problem found while reading a case file, with the JSON path it refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseIssue {
    pub kind: IssueKind,
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueKind {
    Schema,
    Semantic,
}

impl fmt::Display for CaseIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            IssueKind::Schema => "schema",
            IssueKind::Semantic => "semantic",
        };
        write!(f, "{kind} error at {}: {}", self.path, self.message)
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {}", join(.0))]
    InvalidGrid(Vec<GridIssue>),
    #[error("nodal susceptance matrix is singular")]
    SingularNetworkMatrix,
    #[error("outage of lines {lines:?} isolates buses {isolated:?}")]
    IslandingOutage { lines: Vec<LineId>, isolated: Vec<u32> },
    #[error("unknown line {0}")]
    UnknownLine(LineId),
    #[error("unknown load {0:?}")]
    UnknownLoad(String),
    #[error("unknown generator {0:?}")]
    UnknownGenerator(String),
    #[error("unknown scenario {0}")]
    UnknownScenario(u32),
    #[error("period {period} out of range 1..={periods}")]
    PeriodOutOfRange { period: usize, periods: usize },
    #[error("scenario {scenario}: demand of load {load:?} in period {period} becomes negative ({demand} MW)")]
    NegativePostFluctuationDemand { scenario: u32, load: String, period: usize, demand: f64 },
    #[error("first-period ramping requested but the case has no initial state")]
    MissingInitialState,
    #[error("recourse for scenario {scenario} in period {period} is infeasible")]
    RecourseInfeasible { scenario: u32, period: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("invalid case: {}", join(.0))]
    Case(Vec<CaseIssue>),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the optimization problem itself rather
    /// than by malformed input.
    pub fn is_infeasible_or_unbounded(&self) -> bool {
        matches!(
            self,
            Error::Lp(LpError::Infeasible | LpError::Unbounded) | Error::RecourseInfeasible { .. }
        )
    }

    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::IslandingOutage { .. }
                | Error::UnknownLine(_)
                | Error::UnknownLoad(_)
                | Error::UnknownGenerator(_)
                | Error::UnknownScenario(_)
                | Error::PeriodOutOfRange { .. }
                | Error::NegativePostFluctuationDemand { .. }
                | Error::MissingInitialState
                | Error::Parse { .. }
                | Error::Case(_)
                | Error::Invalid(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}
