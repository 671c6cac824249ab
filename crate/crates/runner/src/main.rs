use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use ri_mech_runner::config::{self, ScenarioConfig};
use ri_mech_runner::report::{invariant_report, read_results, write_result};
use ri_mech_runner::{run_scenario, RunError, RunOptions, RunResult};

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "ri-mech", version, about = "Run reparametrization-invariant mechanics scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory for CSV tables and result files (RI_MECH_OUT takes precedence)
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Multiplier applied to every check threshold
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,

    /// Worker threads for `suite` (0 picks the number of cores)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Seed overriding each scenario's own
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file, or a built-in one given as `preset:NAME`
    Run { config: String },
    /// Run every `*.json` scenario in a directory
    Suite { dir: PathBuf },
    /// Summarize the result files in a directory
    Report { dir: PathBuf },
}

fn load(arg: &str) -> Result<ScenarioConfig, RunError> {
    match arg.strip_prefix("preset:") {
        Some(name) => Ok(config::preset(name)?),
        None => Ok(config::load_scenario(Path::new(arg))?),
    }
}

fn print_result(r: &RunResult) {
    for c in &r.checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        println!(
            "{status} {} [{}] {}: {:.3e} <= {:.3e}{}",
            r.name,
            c.criterion,
            c.name,
            c.measured,
            c.threshold,
            if c.detail.is_empty() { String::new() } else { format!(" ({})", c.detail) }
        );
    }
}

fn exit_for(e: &RunError) -> ExitCode {
    eprintln!("error: {e}");
    if let RunError::Config(config::ConfigError::Schema(issues)) = e {
        for i in issues {
            eprintln!("  {}: {}", i.path, i.message);
        }
    }
    ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_FAIL })
}

fn run_one(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunResult, RunError> {
    let r = run_scenario(cfg, opts)?;
    write_result(&opts.out_dir, &r)?;
    Ok(r)
}

fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| RunError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn suite(dir: &Path, opts: &RunOptions, threads: usize) -> ExitCode {
    let files = match scenario_files(dir) {
        Ok(f) => f,
        Err(e) => return exit_for(&e),
    };
    // validate everything before running anything
    let mut configs = Vec::new();
    let mut bad = false;
    for f in &files {
        match config::load_scenario(f) {
            Ok(c) => configs.push(c),
            Err(e) => {
                bad = true;
                exit_for(&RunError::Config(e));
            }
        }
    }
    let mut owners: BTreeMap<String, &str> = BTreeMap::new();
    for c in &configs {
        for out in c
            .outputs
            .iter()
            .map(|o| o.path.clone())
            .chain([format!("{}{}", c.name, ri_mech_runner::report::RESULT_SUFFIX)])
        {
            if let Some(prev) = owners.insert(out.clone(), &c.name) {
                eprintln!("error: {out} is written by both {prev} and {}", c.name);
                bad = true;
            }
        }
    }
    if bad {
        return ExitCode::from(EXIT_CONFIG);
    }

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAIL);
        }
    };
    let outcomes: Vec<Result<RunResult, RunError>> = pool.install(|| configs.par_iter().map(|c| run_one(c, opts)).collect());
    let mut results = Vec::new();
    let mut code = ExitCode::SUCCESS;
    for o in outcomes {
        match o {
            Ok(r) => results.push(r),
            Err(e) => code = exit_for(&e),
        }
    }
    let report = invariant_report(&results);
    print!("{}", report.render());
    if code == ExitCode::SUCCESS && !report.passed() {
        code = ExitCode::from(EXIT_FAIL);
    }
    code
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        out_dir: std::env::var_os("RI_MECH_OUT").map_or_else(|| cli.out.clone(), PathBuf::from),
        tol_scale: cli.tol_scale,
        seed: cli.seed,
    };
    if !(opts.tol_scale > 0.0 && opts.tol_scale.is_finite()) {
        eprintln!("error: --tol-scale must be positive");
        return ExitCode::from(EXIT_CONFIG);
    }
    match &cli.command {
        Command::Run { config } => match load(config).and_then(|c| run_one(&c, &opts)) {
            Ok(r) => {
                print_result(&r);
                if r.passed {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_FAIL)
                }
            }
            Err(e) => exit_for(&e),
        },
        Command::Suite { dir } => suite(dir, &opts, cli.threads),
        Command::Report { dir } => match read_results(dir) {
            Ok(results) => {
                let report = invariant_report(&results);
                print!("{}", report.render());
                for f in &report.failures {
                    eprintln!("failed: {f}");
                }
                if report.passed() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_FAIL)
                }
            }
            Err(e) => exit_for(&e),
        },
    }
}
