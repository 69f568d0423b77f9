//! Multi-period scenario-oriented energy-reserve market clearing.
//!
//! The crate builds and solves the co-optimization LP over a DC network with
//! line-outage and load-fluctuation scenarios, prices energy and reserve
//! from its duals, settles the market in an ex-ante and a per-period ex-post
//! stage, and compares the result with a reserve-requirement dispatch by
//! Monte Carlo simulation.
//!
//! ```no_run
//! use coopt::{case::PreparedCase, lp::LpSolver, model::solve_model_vi, pricing::price_system};
//!
//! let case = coopt::io::load_case("cases/case_b.json")?;
//! let prepared = PreparedCase::new(case)?;
//! let solution = solve_model_vi(&prepared, &LpSolver::default())?;
//! let prices = price_system(&prepared, &solution);
//! println!("{} {}", solution.objective, prices.generators[0][0].energy);
//! # Ok::<(), coopt::error::Error>(())
//! ```

pub mod baseline;
pub mod case;
pub mod error;
pub mod io;
pub mod lp;
pub mod model;
pub mod montecarlo;
pub mod network;
pub mod pricing;
pub mod samples;
pub mod scenario;
pub mod settlement;

pub use error::{Error, Result};
