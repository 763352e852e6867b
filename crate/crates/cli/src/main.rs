use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use circlab::lab::appendix::MAX_DEPTH;
use circlab::lab::config::{Diagnostics, ScenarioConfig};
use circlab::lab::manifest::MANIFEST_FILE;
use circlab::lab::run::SUMMARY_FILE;
use circlab::lab::{run_scenario, verify_appendix, RunStatus};

const EXIT_VALIDATION: u8 = 2;
const EXIT_VIOLATION: u8 = 4;

#[derive(Parser)]
#[command(
    name = "circlab",
    version,
    about = "Forced parabolic equations on the circle: simulation and diagnostics"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Output directory, overriding `[output] dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed, overriding `[run] seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario with the diagnostics its file enables.
    Simulate { config: PathBuf },
    /// Lyapunov spectrum only.
    Spectrum { config: PathBuf },
    /// Phase extraction and reduced-ODE check only.
    Phase { config: PathBuf },
    /// Omega-limit sampling only.
    Omega { config: PathBuf },
    /// Zero-number monitor only.
    Zeros { config: PathBuf },
    /// Check the dyadic amplitude bound without solving the PDE.
    VerifyAppendix {
        #[arg(long, value_name = "N", default_value_t = 20)]
        n_max: u32,
    },
}

fn load(path: &PathBuf, g: &Global) -> Result<ScenarioConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut cfg = ScenarioConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(out) = &g.out {
        cfg.output_dir = out.to_string_lossy().into_owned();
    }
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(path: &PathBuf, only: Option<Diagnostics>, g: &Global) -> ExitCode {
    let mut cfg = match load(path, g) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    if let Some(d) = only {
        cfg.diagnostics = d;
    }
    let manifest = run_scenario(&cfg);
    let dir = PathBuf::from(&cfg.output_dir);
    if !g.quiet {
        if let Ok(summary) = fs::read_to_string(dir.join(SUMMARY_FILE)) {
            print!("{summary}");
        }
        println!("manifest: {}", dir.join(MANIFEST_FILE).display());
    }
    match manifest.status {
        RunStatus::Ok => {}
        RunStatus::Failed => eprintln!("error: {}", manifest.error.as_deref().unwrap_or("run failed")),
        RunStatus::Violation => {
            for v in &manifest.violations {
                eprintln!("violation: {v}");
            }
        }
    }
    ExitCode::from(manifest.status.exit_code() as u8)
}

fn only(f: impl FnOnce(&mut Diagnostics)) -> Option<Diagnostics> {
    let mut d = Diagnostics::NONE;
    f(&mut d);
    Some(d)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    match &cli.command {
        Command::Simulate { config } => run(config, None, g),
        Command::Spectrum { config } => run(config, only(|d| d.spectrum = true), g),
        Command::Phase { config } => run(config, only(|d| d.phase = true), g),
        Command::Omega { config } => run(config, only(|d| d.omega = true), g),
        Command::Zeros { config } => run(config, only(|d| d.zeros = true), g),
        Command::VerifyAppendix { n_max } => {
            if *n_max > MAX_DEPTH {
                eprintln!("error: --n-max must be at most {MAX_DEPTH}, got {n_max}");
                return ExitCode::from(EXIT_VALIDATION);
            }
            let report = verify_appendix(*n_max);
            if !g.quiet {
                print!("{}", report.render());
            }
            if report.all_hold() {
                ExitCode::SUCCESS
            } else {
                eprintln!("violation: amplitude fell below the bound");
                ExitCode::from(EXIT_VIOLATION)
            }
        }
    }
}
