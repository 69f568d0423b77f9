//! C interface to the market-clearing engine.
//!
//! Cases and solutions are opaque handles created and released through this
//! API. Every fallible call returns a [`CooptStatus`]; on failure the message
//! of the last error on the calling thread is available from
//! [`coopt_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use coopt::baseline::evaluate_dispatch;
use coopt::case::PreparedCase;
use coopt::lp::LpSolver;
use coopt::model::{solve_model_vi, CooptSolution as Solution};
use coopt::montecarlo::{run_simulation, NetRevenueTable};
use coopt::pricing::{price_system, PriceSystem};
use coopt::settlement::{expected_merchandise_surplus, expected_settlement, generator_profit_report, CashFlowDirections};
use coopt::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CooptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed or inconsistent case data.
    InputError = 3,
    /// The optimization problem has no optimal solution.
    Infeasible = 4,
    /// Period, generator, load or scenario index out of range.
    OutOfRange = 5,
    InternalError = 6,
}

/// A validated market case.
pub struct CooptCase {
    prepared: PreparedCase,
}

/// An optimal schedule with its prices.
pub struct CooptSolution {
    solution: Solution,
    prices: PriceSystem,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CooptGeneratorPrices {
    /// $/MWh
    pub energy: f64,
    /// $/MW
    pub reserve_up: f64,
    /// $/MW
    pub reserve_down: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CooptSimulationSummary {
    pub samples: usize,
    pub mean_cost: f64,
    pub cost_std_error: f64,
    pub mean_net_revenue: f64,
    pub net_revenue_std_error: f64,
    /// Expected total cost from the recourse tables.
    pub expected_cost: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(err: &Error) -> CooptStatus {
    if err.is_infeasible_or_unbounded() {
        CooptStatus::Infeasible
    } else if matches!(err, Error::PeriodOutOfRange { .. } | Error::UnknownScenario(_)) {
        CooptStatus::OutOfRange
    } else if err.is_input_error() {
        CooptStatus::InputError
    } else {
        CooptStatus::InternalError
    }
}

/// Runs `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), CooptStatus>) -> CooptStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CooptStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("panic inside the engine");
            CooptStatus::InternalError
        }
    }
}

fn fail(err: Error) -> CooptStatus {
    set_error(err.to_string());
    status_of(&err)
}

unsafe fn text<'a>(ptr: *const c_char) -> Result<&'a str, CooptStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(CooptStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        CooptStatus::InvalidUtf8
    })
}

unsafe fn handle<'a, T>(ptr: *const T) -> Result<&'a T, CooptStatus> {
    ptr.as_ref().ok_or_else(|| {
        set_error("null handle");
        CooptStatus::NullPointer
    })
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), CooptStatus> {
    if out.is_null() {
        set_error("null output pointer");
        return Err(CooptStatus::NullPointer);
    }
    out.write(value);
    Ok(())
}

/// Checks a handle output slot and clears it, so callers see null on failure.
unsafe fn slot<T>(out: *mut *mut T) -> Result<(), CooptStatus> {
    if out.is_null() {
        set_error("null output pointer");
        return Err(CooptStatus::NullPointer);
    }
    out.write(std::ptr::null_mut());
    Ok(())
}

fn index(i: usize, len: usize, what: &str) -> Result<usize, CooptStatus> {
    if i < len {
        Ok(i)
    } else {
        set_error(format!("{what} index {i} out of range (0..{len})"));
        Err(CooptStatus::OutOfRange)
    }
}

fn prepare(case: coopt::case::MarketCase) -> Result<*mut CooptCase, CooptStatus> {
    let prepared = PreparedCase::new(case).map_err(fail)?;
    Ok(Box::into_raw(Box::new(CooptCase { prepared })))
}

/// Parses a case from a NUL-terminated JSON document.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn coopt_case_from_json(json: *const c_char, out: *mut *mut CooptCase) -> CooptStatus {
    guard(|| {
        slot(out)?;
        let doc = text(json)?;
        let case = coopt::io::parse_case(doc, Path::new("<memory>")).map_err(fail)?;
        write(out, prepare(case)?)
    })
}

/// Loads a case file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn coopt_case_from_file(path: *const c_char, out: *mut *mut CooptCase) -> CooptStatus {
    guard(|| {
        slot(out)?;
        let path = text(path)?;
        let case = coopt::io::load_case(path).map_err(fail)?;
        write(out, prepare(case)?)
    })
}

/// Releases a case. Null is ignored.
///
/// # Safety
/// `case` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn coopt_case_free(case: *mut CooptCase) {
    if !case.is_null() {
        drop(Box::from_raw(case));
    }
}

/// Number of periods, or 0 for a null handle.
///
/// # Safety
/// `case` must be null or a live case handle.
#[no_mangle]
pub unsafe extern "C" fn coopt_case_periods(case: *const CooptCase) -> usize {
    case.as_ref().map_or(0, |c| c.prepared.periods())
}

/// # Safety
/// `case` must be null or a live case handle.
#[no_mangle]
pub unsafe extern "C" fn coopt_case_generators(case: *const CooptCase) -> usize {
    case.as_ref().map_or(0, |c| c.prepared.num_generators())
}

/// # Safety
/// `case` must be null or a live case handle.
#[no_mangle]
pub unsafe extern "C" fn coopt_case_loads(case: *const CooptCase) -> usize {
    case.as_ref().map_or(0, |c| c.prepared.num_loads())
}

/// # Safety
/// `case` must be null or a live case handle.
#[no_mangle]
pub unsafe extern "C" fn coopt_case_scenarios(case: *const CooptCase) -> usize {
    case.as_ref().map_or(0, |c| c.prepared.num_scenarios())
}

/// Base-case probability.
///
/// # Safety
/// `case` must be a live case handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coopt_case_base_probability(case: *const CooptCase, out: *mut f64) -> CooptStatus {
    guard(|| write(out, handle(case)?.prepared.base_probability))
}

/// Solves the co-optimization model and prices the result.
///
/// # Safety
/// `case` must be a live case handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coopt_solve(case: *const CooptCase, out: *mut *mut CooptSolution) -> CooptStatus {
    guard(|| {
        slot(out)?;
        let prepared = &handle(case)?.prepared;
        let solution = solve_model_vi(prepared, &LpSolver::default()).map_err(fail)?;
        let prices = price_system(prepared, &solution);
        write(out, Box::into_raw(Box::new(CooptSolution { solution, prices })))
    })
}

/// Releases a solution. Null is ignored.
///
/// # Safety
/// `solution` must come from [`coopt_solve`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn coopt_solution_free(solution: *mut CooptSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Optimal expected system cost.
///
/// # Safety
/// `solution` must be a live solution handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coopt_solution_objective(solution: *const CooptSolution, out: *mut f64) -> CooptStatus {
    guard(|| write(out, handle(solution)?.solution.objective))
}

/// Whether the optimality certificate of the solve passed.
///
/// # Safety
/// `solution` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn coopt_solution_kkt_passed(solution: *const CooptSolution) -> bool {
    solution.as_ref().is_some_and(|s| s.solution.kkt.passed())
}

/// Scheduled output, upward and downward reserve of a generator (zero-based
/// indices), written to `out[0..3]`.
///
/// # Safety
/// `solution` must be a live solution handle and `out` point to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn coopt_solution_schedule(
    solution: *const CooptSolution,
    period: usize,
    generator: usize,
    out: *mut f64,
) -> CooptStatus {
    guard(|| {
        let s = &handle(solution)?.solution;
        let t = index(period, s.periods(), "period")?;
        let j = index(generator, s.g[t].len(), "generator")?;
        if out.is_null() {
            set_error("null output pointer");
            return Err(CooptStatus::NullPointer);
        }
        std::slice::from_raw_parts_mut(out, 3).copy_from_slice(&[s.g[t][j], s.r_up[t][j], s.r_down[t][j]]);
        Ok(())
    })
}

/// Energy and reserve prices of a generator.
///
/// # Safety
/// `solution` must be a live solution handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coopt_generator_prices(
    solution: *const CooptSolution,
    period: usize,
    generator: usize,
    out: *mut CooptGeneratorPrices,
) -> CooptStatus {
    guard(|| {
        let prices = &handle(solution)?.prices;
        let t = index(period, prices.generators.len(), "period")?;
        let j = index(generator, prices.generators[t].len(), "generator")?;
        let p = &prices.generators[t][j];
        write(out, CooptGeneratorPrices { energy: p.energy, reserve_up: p.reserve_up, reserve_down: p.reserve_down })
    })
}

/// Energy price of a load.
///
/// # Safety
/// `solution` must be a live solution handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coopt_load_price(
    solution: *const CooptSolution,
    period: usize,
    load: usize,
    out: *mut f64,
) -> CooptStatus {
    guard(|| {
        let prices = &handle(solution)?.prices;
        let t = index(period, prices.loads.len(), "period")?;
        let l = index(load, prices.loads[t].len(), "load")?;
        write(out, prices.loads[t][l].energy)
    })
}

/// Expected operator surplus over all periods.
///
/// # Safety
/// Both handles must be live, `solution` obtained from `case`, and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn coopt_expected_surplus(
    case: *const CooptCase,
    solution: *const CooptSolution,
    out: *mut f64,
) -> CooptStatus {
    guard(|| {
        let prepared = &handle(case)?.prepared;
        let s = handle(solution)?;
        let report = expected_merchandise_surplus(prepared, &s.solution, &s.prices, CashFlowDirections::default());
        write(out, report.total)
    })
}

/// Total profit of a generator over all periods.
///
/// # Safety
/// Both handles must be live, `solution` obtained from `case`, and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn coopt_generator_profit(
    case: *const CooptCase,
    solution: *const CooptSolution,
    generator: usize,
    out: *mut f64,
) -> CooptStatus {
    guard(|| {
        let prepared = &handle(case)?.prepared;
        let s = handle(solution)?;
        let j = index(generator, prepared.num_generators(), "generator")?;
        let ledger = expected_settlement(prepared, &s.solution, &s.prices, CashFlowDirections::default());
        let report = generator_profit_report(prepared, &s.solution, &ledger);
        write(out, report.generators[j].total)
    })
}

/// Monte Carlo run of the co-optimized schedule.
///
/// # Safety
/// Both handles must be live, `solution` obtained from `case`, and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn coopt_simulate(
    case: *const CooptCase,
    solution: *const CooptSolution,
    samples: usize,
    seed: u64,
    out: *mut CooptSimulationSummary,
) -> CooptStatus {
    guard(|| {
        let prepared = &handle(case)?.prepared;
        let s = handle(solution)?;
        let solver = LpSolver::default();
        let table = NetRevenueTable::new(prepared, &s.solution, &s.prices, CashFlowDirections::default()).map_err(fail)?;
        let eval = evaluate_dispatch(prepared, &s.solution.dispatch(), &solver).map_err(fail)?;
        let sim = run_simulation(prepared, &eval, Some(&table), samples, seed).map_err(fail)?;
        let net = sim.net_revenue_summary.expect("net revenue tracked");
        write(
            out,
            CooptSimulationSummary {
                samples: sim.samples,
                mean_cost: sim.cost.mean,
                cost_std_error: sim.cost.std_error,
                mean_net_revenue: net.mean,
                net_revenue_std_error: net.std_error,
                expected_cost: eval.expected_total(&prepared.probabilities),
            },
        )
    })
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn coopt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn coopt_status_message(status: CooptStatus) -> *const c_char {
    let s: &'static CStr = match status {
        CooptStatus::Ok => c"ok",
        CooptStatus::NullPointer => c"null pointer argument",
        CooptStatus::InvalidUtf8 => c"string is not valid UTF-8",
        CooptStatus::InputError => c"invalid input",
        CooptStatus::Infeasible => c"problem is infeasible or unbounded",
        CooptStatus::OutOfRange => c"index out of range",
        CooptStatus::InternalError => c"internal error",
    };
    s.as_ptr()
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn coopt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
