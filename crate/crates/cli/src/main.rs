//! `qplab`: experiment runner for quasi-periodic Schrödinger cocycles.
//!
//! Exit codes: 0 success, 1 failed check or other error, 2 config error,
//! 3 precision exhausted, 4 non-convergence.

mod config;
mod experiments;
mod output;

use clap::{Parser, Subcommand};
use config::ExperimentConfig;
use experiments::*;
use output::{Out, Stamp};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qplab", version, about = "Spectral experiments for quasi-periodic cocycles")]
struct Cli {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Working precision in bits; overrides the config.
    #[arg(long, global = true)]
    precision: Option<u32>,
    /// RNG seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// ε₀-resonances of a phase.
    Resonances,
    /// Finite-K lower bounds for the resonance exponent.
    Delta,
    /// IDS by Sturm counting and by rotation number.
    IdsScan,
    /// Labelled plateaus and their edges.
    GapEdges,
    /// Weyl m-functions along a horizontal line.
    Mfunc,
    /// Window masses over an ε-grid and their log–log slope.
    MeasureScaling,
    /// Predicted local scaling exponent f(ε).
    PredictF,
    /// det P profile of the subordinacy matrices.
    DetpProfile,
    /// Lyapunov exponent over an energy grid.
    Lyapunov,
    /// Fibered rotation number over an energy grid.
    Rotation,
    /// Anosov–Katok construction.
    AkBuild,
    /// Construction plus goodness report and checks.
    AkVerify,
    /// Quick built-in checks.
    Selftest,
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, RunError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None if matches!(cli.cmd, Cmd::Selftest) => serde_json::from_str("{}").expect("defaults parse"),
        None => return Err(config::ConfigError("--config is required".into()).into()),
    };
    if let Some(b) = cli.precision {
        cfg.precision_bits = b;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(config::ConfigError("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
    }
    let mut out = Out::new(&cli.out, Stamp { hash: cfg.hash(), precision_bits: cfg.precision_bits })?;
    let f = match cli.cmd {
        Cmd::Resonances => resonances_cmd,
        Cmd::Delta => delta_cmd,
        Cmd::IdsScan => ids_scan_cmd,
        Cmd::GapEdges => gap_edges_cmd,
        Cmd::Mfunc => mfunc_cmd,
        Cmd::MeasureScaling => measure_scaling_cmd,
        Cmd::PredictF => predict_f_cmd,
        Cmd::DetpProfile => detp_profile_cmd,
        Cmd::Lyapunov => lyapunov_cmd,
        Cmd::Rotation => rotation_cmd,
        Cmd::AkBuild => ak_build_cmd,
        Cmd::AkVerify => ak_verify_cmd,
        Cmd::Selftest => selftest_cmd,
    };
    f(&cfg, &mut out)?;
    Ok(out.written)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qplab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
