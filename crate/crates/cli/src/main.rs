//! Command-line harness: generate benchmark instances, run the scheduling
//! algorithms with bound verification, verify stored results, or run a whole
//! suite. Exit codes: 0 all bounds pass, 1 a bound failed, 2 input error,
//! 3 budget exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mkspan::balance::{GraphBalancingInstance, TreeDecomposition};
use mkspan::model::{ratio, Instance, Rat};
use mkspan::reopt::ReoptInput;
use mkspan_cli::gen::{self, GeneratorSpec};
use mkspan_cli::report::{BoundCheck, RunReport};
use mkspan_cli::runner::{self, OracleMode, RunError};

#[derive(Parser)]
#[command(name = "mkspan", about = "Scheduling benchmarks: makespan bounds verified exactly")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleFlag {
    On,
    Off,
    Auto,
}

impl From<OracleFlag> for OracleMode {
    fn from(f: OracleFlag) -> Self {
        match f {
            OracleFlag::On => OracleMode::On,
            OracleFlag::Off => OracleMode::Off,
            OracleFlag::Auto => OracleMode::Auto,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmFlag {
    AUm,
    ARes,
    Fpt,
    Balance,
    ReoptId,
    ReoptUn,
}

#[derive(Subcommand)]
enum Command {
    /// Write deterministic instance files described by a generator spec.
    Generate {
        /// Generator spec as inline JSON, or a path to a JSON file.
        #[arg(long)]
        spec: String,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run one algorithm on an instance file and verify its bounds.
    Run {
        #[arg(value_enum)]
        algorithm: AlgorithmFlag,
        /// Instance file (scheduling JSON, graph JSON, or reopt JSON).
        #[arg(long)]
        instance: PathBuf,
        /// Tree decomposition file (balance only).
        #[arg(long)]
        decomposition: Option<PathBuf>,
        /// Accuracy parameter as NUM/DEN.
        #[arg(long, default_value = "1/2")]
        eps: String,
        /// Speed ratio bound as NUM/DEN (uniform reoptimization).
        #[arg(long, default_value = "2/1")]
        b: String,
        #[arg(long, default_value_t = 20)]
        k_cap: usize,
        #[arg(long, default_value_t = 1_000_000)]
        config_cap: usize,
        #[arg(long, value_enum, default_value_t = OracleFlag::Auto)]
        oracle: OracleFlag,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-verify a stored report against its instance file.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Generate-and-run a canned battery across all algorithms.
    Suite {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        runs_per_algorithm: usize,
        #[arg(long, value_enum, default_value_t = OracleFlag::Auto)]
        oracle: OracleFlag,
    },
}

fn parse_rat(text: &str) -> Result<Rat, String> {
    let parts: Vec<&str> = text.split('/').collect();
    match parts.as_slice() {
        [n] => n.parse::<i64>().map(|v| ratio(v, 1)).map_err(|e| e.to_string()),
        [n, d] => {
            let n: i64 = n.parse().map_err(|e: std::num::ParseIntError| e.to_string())?;
            let d: i64 = d.parse().map_err(|e: std::num::ParseIntError| e.to_string())?;
            if d == 0 {
                return Err("zero denominator".into());
            }
            Ok(ratio(n, d))
        }
        _ => Err(format!("cannot parse rational: {text}")),
    }
}

fn read_text(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(report: &RunReport, out: Option<&Path>) -> Result<(), String> {
    let json = report.to_json();
    match out {
        Some(path) => fs::write(path, &json).map_err(|e| e.to_string())?,
        None => println!("{json}"),
    }
    eprintln!("{}", RunReport::table_header());
    eprintln!("{}", report.table_row());
    Ok(())
}

fn exit_for(reports: &[RunReport]) -> ExitCode {
    if reports.iter().all(|r| r.all_pass()) {
        ExitCode::from(0)
    } else {
        ExitCode::from(1)
    }
}

fn run_error_exit(e: &RunError) -> ExitCode {
    match e {
        RunError::Input(m) => {
            eprintln!("input error: {m}");
            ExitCode::from(2)
        }
        RunError::Budget(m) => {
            eprintln!("budget exceeded: {m}");
            ExitCode::from(3)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("input error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Generate { spec, out } => {
            let text = if spec.trim_start().starts_with('{') {
                spec
            } else {
                read_text(Path::new(&spec))?
            };
            let spec: GeneratorSpec = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            fs::create_dir_all(&out).map_err(|e| e.to_string())?;
            for (name, body) in gen::generate(&spec) {
                let path = out.join(&name);
                fs::write(&path, body).map_err(|e| e.to_string())?;
                println!("{}", path.display());
            }
            Ok(ExitCode::from(0))
        }
        Command::Run {
            algorithm,
            instance,
            decomposition,
            eps,
            b,
            k_cap,
            config_cap,
            oracle,
            out,
        } => {
            let eps = parse_rat(&eps)?;
            let b = parse_rat(&b)?;
            let mode: OracleMode = oracle.into();
            let text = read_text(&instance)?;
            let result = match algorithm {
                AlgorithmFlag::AUm => {
                    let inst = Instance::from_json(&text).map_err(|e| e.to_string())?;
                    runner::run_a_um(&inst, mode)
                }
                AlgorithmFlag::ARes => {
                    let inst = Instance::from_json(&text).map_err(|e| e.to_string())?;
                    runner::run_a_res(&inst, mode)
                }
                AlgorithmFlag::Fpt => {
                    let inst = Instance::from_json(&text).map_err(|e| e.to_string())?;
                    runner::run_fpt(&inst, &eps, k_cap, mode)
                }
                AlgorithmFlag::Balance => {
                    let g = GraphBalancingInstance::from_json(&text)?;
                    let td_path = decomposition
                        .ok_or_else(|| "balance needs --decomposition".to_string())?;
                    let td = TreeDecomposition::from_json(&read_text(&td_path)?)?;
                    runner::run_balance(&g, &td, mode)
                }
                AlgorithmFlag::ReoptId => {
                    let input = ReoptInput::from_json(&text).map_err(|e| e.to_string())?;
                    runner::run_reopt_id(&input, &eps, config_cap, mode)
                }
                AlgorithmFlag::ReoptUn => {
                    let input = ReoptInput::from_json(&text).map_err(|e| e.to_string())?;
                    runner::run_reopt_un(&input, &eps, &b, config_cap, mode)
                }
            };
            match result {
                Ok(report) => {
                    emit(&report, out.as_deref())?;
                    Ok(exit_for(std::slice::from_ref(&report)))
                }
                Err(e) => Ok(run_error_exit(&e)),
            }
        }
        Command::Verify { instance, report } => {
            let report_text = read_text(&report)?;
            let stored: RunReport =
                serde_json::from_str(&report_text).map_err(|e| e.to_string())?;
            let sigma = stored
                .assignment
                .clone()
                .ok_or_else(|| "report has no assignment to verify".to_string())?;
            let inst = Instance::from_json(&read_text(&instance)?).map_err(|e| e.to_string())?;
            match runner::verify_assignment(&inst, &sigma) {
                Ok(mut fresh) => {
                    let consistent = fresh.makespan == stored.makespan;
                    fresh.bounds.push(BoundCheck {
                        name: "stored_makespan_matches".into(),
                        bound: stored.makespan.to_string(),
                        achieved: fresh.makespan.to_string(),
                        pass: consistent,
                    });
                    emit(&fresh, None)?;
                    Ok(exit_for(std::slice::from_ref(&fresh)))
                }
                Err(e) => Ok(run_error_exit(&e)),
            }
        }
        Command::Suite { seed, runs_per_algorithm, oracle } => {
            let mode: OracleMode = oracle.into();
            let reports = run_suite(seed, runs_per_algorithm, mode)?;
            println!("{}", RunReport::table_header());
            for r in &reports {
                println!("{}", r.table_row());
            }
            let pass = reports.iter().filter(|r| r.all_pass()).count();
            println!("{pass}/{} runs pass all bounds", reports.len());
            Ok(exit_for(&reports))
        }
    }
}

/// Independent (algorithm, seed) pairs run concurrently; the report order is
/// fixed by index, so suite output is deterministic apart from wall times.
fn run_suite(seed: u64, runs: usize, mode: OracleMode) -> Result<Vec<RunReport>, String> {
    let mut tasks: Vec<Box<dyn FnOnce() -> Result<RunReport, RunError> + Send>> = Vec::new();
    for r in 0..runs {
        let s = seed.wrapping_add(r as u64);
        tasks.push(Box::new(move || {
            let inst = gen::fully_feasible_planted(3, 6, 9, s);
            runner::run_a_um(&inst, mode)
        }));
        tasks.push(Box::new(move || {
            let inst = gen::restricted_random(3, 8, 9, None, s);
            runner::run_a_res(&inst, mode)
        }));
        tasks.push(Box::new(move || {
            let inst = gen::fully_feasible_planted(2, 5, 9, s.wrapping_add(7000));
            runner::run_fpt(&inst, &ratio(1, 2), 12, mode)
        }));
        tasks.push(Box::new(move || {
            let (g, td) = gen::graph_balancing_random(5, 8, 9, 2, r % 2 == 0, s);
            runner::run_balance(&g, &td, mode)
        }));
        tasks.push(Box::new(move || {
            let input = gen::reopt_perturbation(3, 6, 9, 1, 1, r % 2, None, s);
            runner::run_reopt_id(&input, &ratio(1, 2), 1_000_000, mode)
        }));
        tasks.push(Box::new(move || {
            let input = gen::reopt_perturbation(2, 4, 6, 1, 0, 0, Some(2), s);
            runner::run_reopt_un(&input, &ratio(1, 2), &ratio(2, 1), 200_000, mode)
        }));
    }

    let results: Vec<Result<RunReport, RunError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = tasks.into_iter().map(|t| scope.spawn(t)).collect();
        handles.into_iter().map(|h| h.join().expect("suite worker panicked")).collect()
    });

    let mut reports = Vec::new();
    for res in results {
        match res {
            Ok(r) => reports.push(r),
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(reports)
}
