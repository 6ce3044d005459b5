//! Batch front end for the `hilbertize` library: JSON bundle files in,
//! JSON or CSV reports out.

pub mod commands;
pub mod schema;

use std::path::PathBuf;

use clap::{Args, Parser, ValueEnum};

pub use commands::{run, Output};
pub use schema::BundleFileV1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Core(#[from] hilbertize::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for anything wrong with the input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.root() {
                hilbertize::Error::NonConvergence { .. } | hilbertize::Error::Certificate(_) => 3,
                _ => 2,
            },
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CommandName {
    Loewner,
    Renorm,
    Check,
    Expect,
    Continuity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum ModeArg {
    #[default]
    Blend,
    Optimal,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Bundle file (JSON, schema version 1)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Built-in fixture name
    #[arg(long)]
    pub fixture: Option<String>,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{s} is not a positive finite number"))
    }
}

fn eps_value(s: &str) -> Result<f64, String> {
    let v = positive_f64(s)?;
    if v <= 0.1 {
        Ok(v)
    } else {
        Err(format!("eps {s} outside (0, 0.1]"))
    }
}

/// One batch job.
#[derive(Debug, Clone, Parser)]
#[command(name = "hilbertize", version, about = "Fiberwise Hilbert renorming and finite-index expectations")]
pub struct JobSpec {
    #[arg(value_enum)]
    pub command: CommandName,
    #[command(flatten)]
    pub source: Source,
    /// Löwner ascent tolerance, in (0, 0.1]
    #[arg(long, default_value_t = 1e-7, value_parser = eps_value)]
    pub eps: f64,
    /// Grid spacing for `expect`
    #[arg(long, default_value_t = 0.25, value_parser = positive_f64)]
    pub grid_h: f64,
    /// Refinement levels for `continuity` (each halves the spacing)
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..=8))]
    pub levels: u32,
    #[arg(long, value_enum, default_value_t = ModeArg::Blend)]
    pub mode: ModeArg,
    /// Direction count for `renorm`/`continuity`, test elements per grid point for `expect`
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=1_000_000))]
    pub sample: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

impl JobSpec {
    pub fn load(&self) -> Result<BundleFileV1, CliError> {
        let text = match (&self.source.input, &self.source.fixture) {
            (Some(path), _) => std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?,
            (None, Some(name)) => schema::fixture(name)?.to_string(),
            (None, None) => return Err(CliError::Usage("one of --input or --fixture is required".into())),
        };
        BundleFileV1::parse(&text)
    }
}
