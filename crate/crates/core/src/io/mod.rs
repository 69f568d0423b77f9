//! Case files in, CSV results and a manifest out.

pub mod case_file;
pub mod results;

pub use case_file::{case_to_json, load_case, parse_case, save_case, CaseFile};
