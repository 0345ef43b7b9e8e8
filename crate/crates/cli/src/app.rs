//! Argument parsing, thread-pool setup and exit codes.

use crate::acceptance::{print_table, run_acceptance, write_rows_csv, Options};
use crate::config::ScenarioConfig;
use crate::scenario::run_scenario;
use clap::{Parser, Subcommand};
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "phasewave", version, about = "Phase-space transport experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `[run] seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (falls back to PHASEWAVE_THREADS).
        #[arg(long)]
        threads: Option<usize>,
        /// Exit with status 1 when any check fails.
        #[arg(long)]
        check: bool,
        /// Also write SVG plots.
        #[arg(long)]
        plot: bool,
    },
    /// Run the acceptance suite.
    Acceptance {
        /// Criterion tag (e.g. `sound`) or number.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long)]
        threads: Option<usize>,
        /// Keep every scenario's artifacts here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace a row's tolerance, as `ID=VALUE`.
        #[arg(long = "override-tol", value_parser = parse_override)]
        override_tol: Vec<(String, f64)>,
    },
}

fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (id, v) = s.split_once('=').ok_or_else(|| format!("expected ID=VALUE, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("bad tolerance {v:?}: {e}"))?;
    Ok((id.trim().to_string(), v))
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, String> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var("PHASEWAVE_THREADS") {
        Ok(s) if !s.trim().is_empty() => {
            s.trim().parse().map(Some).map_err(|_| format!("PHASEWAVE_THREADS must be a thread count, got {s:?}"))
        }
        _ => Ok(None),
    }
}

fn in_pool<T: Send>(n: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, String> {
    match n {
        Some(0) => Err("thread count must be at least 1".into()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| e.to_string())?;
            Ok(pool.install(job))
        }
        None => Ok(job()),
    }
}

fn code_for(e: &phasewave::Error) -> i32 {
    if e.is_configuration() {
        EXIT_CONFIG
    } else {
        EXIT_RUNTIME
    }
}

/// Parses `std::env::args` and runs; returns the process exit status.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    execute(cli)
}

pub fn execute(cli: Cli) -> i32 {
    match cli.command {
        Command::Run { config, out, seed, threads: t, check, plot } => {
            let src = match std::fs::read_to_string(&config) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{}: {e}", config.display());
                    return EXIT_CONFIG;
                }
            };
            let mut cfg = match ScenarioConfig::parse(&src) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{}: {e}", config.display());
                    return EXIT_CONFIG;
                }
            };
            if let Some(s) = seed {
                cfg.run.seed = s;
            }
            let n = match threads(t) {
                Ok(n) => n,
                Err(e) => {
                    eprintln!("{e}");
                    return EXIT_CONFIG;
                }
            };
            let plot = plot || cfg.output.plot;
            let result = match in_pool(n, || run_scenario(&cfg, plot)) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{e}");
                    return EXIT_RUNTIME;
                }
            };
            let artifacts = match result {
                Ok(a) => a,
                Err(e) => {
                    eprintln!("{}: {e}", cfg.scenario.name());
                    return code_for(&e);
                }
            };
            let dir = out.or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out").join(cfg.scenario.name()));
            if let Err(e) = artifacts.write_to(&dir) {
                eprintln!("{}: {e}", dir.display());
                return EXIT_RUNTIME;
            }
            print!("{}", artifacts.summary());
            if check && !artifacts.passed() {
                for c in artifacts.checks().iter().filter(|c| !c.pass) {
                    eprintln!("check failed: {} = {:e} (tolerance {:e})", c.name, c.value, c.tolerance);
                }
                return EXIT_CHECK_FAILED;
            }
            EXIT_OK
        }
        Command::Acceptance { filter, threads: t, out, override_tol } => {
            let n = match threads(t) {
                Ok(n) => n,
                Err(e) => {
                    eprintln!("{e}");
                    return EXIT_CONFIG;
                }
            };
            let opts = Options { filter, overrides: override_tol, out };
            let rows = match in_pool(n, || run_acceptance(&opts)) {
                Ok(Ok(rows)) => rows,
                Ok(Err(e)) => {
                    eprintln!("acceptance: {e}");
                    return code_for(&e);
                }
                Err(e) => {
                    eprintln!("{e}");
                    return EXIT_RUNTIME;
                }
            };
            if let Some(dir) = &opts.out {
                if let Err(e) = write_rows_csv(&rows, dir) {
                    eprintln!("{}: {e}", dir.display());
                    return EXIT_RUNTIME;
                }
            }
            match print_table(&rows, std::io::stdout().lock()) {
                Ok(true) => EXIT_OK,
                Ok(false) => EXIT_CHECK_FAILED,
                Err(_) => EXIT_RUNTIME,
            }
        }
    }
}
