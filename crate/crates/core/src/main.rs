use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use coopt::baseline::evaluate_dispatch;
use coopt::case::{InitialState, MarketCase, PreparedCase};
use coopt::io::results::{self, Manifest};
use coopt::lp::LpSolver;
use coopt::model::solve_model_vi;
use coopt::montecarlo::{compare_models, default_kappa_grid, kappa_grid, run_simulation, NetRevenueTable, RowOutcome};
use coopt::pricing::{envelope_check_all, price_system};
use coopt::settlement::{expected_merchandise_surplus, expected_settlement, generator_profit_report, CashFlowDirections};
use coopt::{Error, Result};

#[derive(Parser)]
#[command(name = "coopt", version, about = "Scenario-based energy-reserve market clearing, pricing and settlement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the co-optimization model and write the schedule, duals and KKT report.
    Solve(Common),
    /// Compute marginal prices and check them against the restricted model.
    Price(Common),
    /// Run the ex-ante and expected ex-post settlement.
    Settle(Common),
    /// Monte Carlo cost and operator net revenue of the co-optimized schedule.
    Simulate(Common),
    /// Compare the co-optimized and reserve-requirement schedules.
    Compare(Common),
    /// Check a case file and print diagnostics.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    case: PathBuf,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Reserve fractions as start:end:step.
    #[arg(long)]
    kappa_grid: Option<String>,
    /// JSON file with `output`, `reserve_up` and `reserve_down` arrays; enables
    /// first-period ramping.
    #[arg(long)]
    initial_state: Option<PathBuf>,
    /// Treat warnings as errors.
    #[arg(long)]
    strict: bool,
}

struct Run<'a> {
    name: &'static str,
    args: &'a Common,
    case_bytes: Vec<u8>,
    case_name: String,
    outputs: Vec<String>,
    timings: BTreeMap<String, f64>,
    clock: Instant,
}

impl<'a> Run<'a> {
    fn lap(&mut self, stage: &str) {
        self.timings.insert(stage.to_string(), self.clock.elapsed().as_secs_f64());
        self.clock = Instant::now();
    }

    fn path(&mut self, file: &str) -> PathBuf {
        self.outputs.push(file.to_string());
        self.args.out_dir.join(file)
    }

    fn finish(self, seed: Option<u64>, samples: Option<usize>, kappa: Option<Vec<f64>>) -> Result<()> {
        Manifest {
            tool: "coopt".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.name.into(),
            case_path: self.args.case.clone(),
            case_name: self.case_name,
            case_sha256: results::sha256_hex(&self.case_bytes),
            seed,
            samples,
            kappa_grid: kappa,
            outputs: self.outputs,
            timings: self.timings,
        }
        .write(&self.args.out_dir.join("manifest.json"))
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let nums: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match nums.as_deref() {
        Some([a, b, step]) => kappa_grid(*a, *b, *step),
        _ => Err(Error::Invalid(format!("--kappa-grid expects start:end:step, got {spec:?}"))),
    }
}

fn load(args: &Common) -> Result<(MarketCase, Vec<u8>)> {
    let bytes = std::fs::read(&args.case)?;
    let text = String::from_utf8_lossy(&bytes);
    let mut case = coopt::io::parse_case(&text, &args.case)?;
    if let Some(path) = &args.initial_state {
        let raw = std::fs::read_to_string(path)?;
        let init: InitialState =
            serde_json::from_str(&raw).map_err(|source| Error::Parse { path: path.clone(), source })?;
        case.initial = Some(init);
        case.options.require_initial_ramping = true;
        let issues = case.issues();
        if !issues.is_empty() {
            return Err(Error::Case(issues));
        }
    }
    let warnings = case.warnings();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if args.strict && !warnings.is_empty() {
        return Err(Error::Invalid(format!("{} warning(s) in strict mode", warnings.len())));
    }
    Ok((case, bytes))
}

fn execute(command: &Command) -> Result<()> {
    let (name, args) = match command {
        Command::Solve(a) => ("solve", a),
        Command::Price(a) => ("price", a),
        Command::Settle(a) => ("settle", a),
        Command::Simulate(a) => ("simulate", a),
        Command::Compare(a) => ("compare", a),
        Command::Validate(a) => ("validate", a),
    };
    let clock = Instant::now();
    let (case, case_bytes) = load(args)?;
    let mut run = Run {
        name,
        args,
        case_name: case.name.clone(),
        case_bytes,
        outputs: Vec::new(),
        timings: BTreeMap::new(),
        clock,
    };
    run.lap("load");
    let prepared = PreparedCase::new(case)?;
    run.lap("prepare");

    if name == "validate" {
        println!(
            "case {}: {} buses, {} lines, {} generators, {} loads, T = {}, K = {}, base probability {:.4}",
            prepared.case.name,
            prepared.case.grid.buses.len(),
            prepared.num_lines(),
            prepared.num_generators(),
            prepared.num_loads(),
            prepared.periods(),
            prepared.num_scenarios(),
            prepared.base_probability
        );
        return Ok(());
    }

    std::fs::create_dir_all(&args.out_dir)?;
    let solver = LpSolver::default();

    if name == "compare" {
        let grid = match &args.kappa_grid {
            Some(spec) => parse_grid(spec)?,
            None => default_kappa_grid(),
        };
        let table = compare_models(&prepared, &grid, args.samples, args.seed, &solver)?;
        run.lap("compare");
        let path = run.path("comparison.csv");
        results::write_comparison(&path, &table)?;
        for row in &table.rows {
            match &row.outcome {
                RowOutcome::Evaluated { expected, simulated, reduction_percent, .. } => println!(
                    "{:?}: expected {:.2}, simulated {:.2} ± {:.2}, co-optimized saves {:.3}%",
                    row.model, expected, simulated.mean, simulated.std_error, reduction_percent
                ),
                RowOutcome::Infeasible(reason) => println!("{:?}: infeasible ({reason})", row.model),
            }
        }
        return run.finish(Some(args.seed), Some(args.samples), Some(grid));
    }

    let solution = solve_model_vi(&prepared, &solver)?;
    run.lap("solve");

    match name {
        "solve" => {
            let path = run.path("solution.csv");
            results::write_solution(&path, &prepared, &solution)?;
            let path = run.path("duals.csv");
            results::write_duals(&path, &prepared, &solution)?;
            let path = run.path("kkt.json");
            std::fs::write(&path, serde_json::to_string_pretty(&results::kkt_json(&solution.kkt))? + "\n")?;
            println!("objective {:.6}", solution.objective);
            println!(
                "KKT {}: gap {:.2e}, stationarity {:.2e}, complementarity {:.2e}",
                if solution.kkt.passed() { "passed" } else { "FAILED" },
                solution.kkt.duality_gap,
                solution.kkt.stationarity,
                solution.kkt.complementarity
            );
            run.finish(None, None, None)
        }
        "price" => {
            let prices = price_system(&prepared, &solution);
            let reports = envelope_check_all(&prepared, &solution, &prices, 1e-3, &solver)?;
            run.lap("price");
            let path = run.path("prices.csv");
            results::write_prices(&path, &prepared, &prices)?;
            let path = run.path("envelope.csv");
            results::write_envelope(&path, &reports)?;
            let entries: Vec<_> = reports.iter().flat_map(|r| &r.entries).collect();
            let smooth = entries.iter().filter(|e| e.status == coopt::pricing::EnvelopeStatus::Smooth).count();
            let passed = entries.iter().filter(|e| e.passed()).count();
            println!("envelope check: {passed}/{smooth} smooth points agree ({} points total)", entries.len());
            run.finish(None, None, None)
        }
        "settle" => {
            let prices = price_system(&prepared, &solution);
            let directions = CashFlowDirections::default();
            let ledger = expected_settlement(&prepared, &solution, &prices, directions);
            let profit = generator_profit_report(&prepared, &solution, &ledger);
            let surplus = expected_merchandise_surplus(&prepared, &solution, &prices, directions);
            run.lap("settle");
            let path = run.path("ledger.csv");
            results::write_ledger(&path, &prepared, &ledger)?;
            let path = run.path("profit.csv");
            results::write_profit(&path, &profit)?;
            let path = run.path("surplus.csv");
            results::write_surplus(&path, &surplus)?;
            let worst = surplus.per_period.iter().copied().fold(f64::INFINITY, f64::min);
            println!("expected merchandise surplus {:.3e} (worst period {:.3e})", surplus.total, worst);
            for g in &profit.generators {
                println!("{}: total profit {:.2}", g.id, g.total);
            }
            run.finish(None, None, None)
        }
        "simulate" => {
            let prices = price_system(&prepared, &solution);
            let table = NetRevenueTable::new(&prepared, &solution, &prices, CashFlowDirections::default())?;
            let eval = evaluate_dispatch(&prepared, &solution.dispatch(), &solver)?;
            let sim = run_simulation(&prepared, &eval, Some(&table), args.samples, args.seed)?;
            run.lap("simulate");
            let path = run.path("convergence.csv");
            results::write_convergence(&path, &sim)?;
            println!(
                "average cost {:.2} ± {:.2} (expected {:.2}) over {} samples",
                sim.cost.mean,
                sim.cost.std_error,
                eval.expected_total(&prepared.probabilities),
                sim.samples
            );
            if let Some(net) = sim.net_revenue_summary {
                println!("average operator net revenue {:.4} ± {:.4}", net.mean, net.std_error);
            }
            run.finish(Some(args.seed), Some(args.samples), None)
        }
        _ => unreachable!("all commands handled"),
    }
}

fn exit_code(err: &Error) -> u8 {
    if err.is_infeasible_or_unbounded() {
        1
    } else if err.is_input_error() {
        2
    } else {
        3
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
