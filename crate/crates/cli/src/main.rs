//! `orlicz-lab`: certify Orlicz functions, estimate pull-back Carleson
//! profiles, run the compactness battery and build concave majorants, writing
//! JSON and CSV artifacts plus a manifest.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use orlicz_lab::Error;

use crate::config::AnalysisConfig;

/// Exit statuses besides the battery's 0 / 2 / 3.
pub mod code {
    pub const CONFIG: i32 = 64;
    pub const SELF_MAP: i32 = 65;
    pub const EXHAUSTED: i32 = 66;
    pub const SOFTWARE: i32 = 70;
    pub const IO: i32 = 74;
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: String) -> Self {
        Self {
            code: code::CONFIG,
            message,
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        Self {
            code: code::IO,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::SelfMapViolation { .. } => code::SELF_MAP,
            Error::ExhaustedDomain { .. } => code::EXHAUSTED,
            Error::Io(_) | Error::Csv(_) => code::IO,
            Error::NonFiniteSample { .. } => code::SOFTWARE,
            _ => code::CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(name = "orlicz-lab", version, about)]
struct Cli {
    /// JSON analysis config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "ORLICZ_LAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Growth-class certificates and implication checks for the configured ψ.
    Certify,
    /// Carleson profile of the pull-back measure.
    Profile,
    /// Full compactness battery with consistency rows.
    Analyze,
    /// Breakpoint sequence, concave majorant and exported ψ for `f`, `g`.
    Lemma32,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Certify => "certify",
            Command::Profile => "profile",
            Command::Analyze => "analyze",
            Command::Lemma32 => "lemma32",
        }
    }
}

fn run(cli: Cli) -> Result<i32, Failure> {
    let Some(path) = &cli.config else {
        return Err(Failure::config("--config is required".into()));
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let mut cfg = AnalysisConfig::parse(&text)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure {
                code: code::SOFTWARE,
                message: e.to_string(),
            })?;
    }
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("orlicz-lab-out"));
    let mut out = output::Outputs::create(dir, cli.command.name())?;
    let status = match cli.command {
        Command::Certify => commands::certify(&cfg, &mut out),
        Command::Profile => commands::profile(&cfg, &mut out),
        Command::Analyze => commands::analyze(&cfg, &mut out),
        Command::Lemma32 => commands::lemma32(&cfg, &mut out),
    }?;
    out.finish(&cfg, status.exit_code, status.consistency)?;
    if let Some(msg) = status.message {
        eprintln!("{msg}");
    }
    Ok(status.exit_code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are config errors; 2 is reserved for inconsistency
            return ExitCode::from(if e.use_stderr() { code::CONFIG as u8 } else { 0 });
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    ExitCode::from(code as u8)
}
