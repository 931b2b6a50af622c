//! `fxgraph`: preset generation, project synthesis, rendering, validation
//! and inspection over a dataset root.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Stable exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const UNKNOWN_PLUGIN: u8 = 2;
    pub const IO: u8 = 3;
    pub const INFEASIBLE: u8 = 4;
    pub const BACKEND: u8 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// Violations were already reported on stdout.
    #[error("validation failed")]
    Invalid,
    #[error("{0}")]
    UnknownPlugin(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Backend(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Invalid => exit::USAGE,
            CliError::UnknownPlugin(_) => exit::UNKNOWN_PLUGIN,
            CliError::Io(_) => exit::IO,
            CliError::Infeasible(_) => exit::INFEASIBLE,
            CliError::Backend(_) => exit::BACKEND,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fxgraph", version, about = "Audio-effect graph dataset pipeline")]
pub struct Cli {
    /// Dataset root; every other path is relative to it.
    #[arg(long, global = true, default_value = ".")]
    pub root: PathBuf,
    /// Run seed. A random seed is drawn and logged when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Plugin registry file (defaults to $FXGRAPH_REGISTRY, then the built-in inventory).
    #[arg(long, global = true)]
    pub registry: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample preset files for the selected plugins.
    GenPresets(GenPresets),
    /// Synthesize project files from a stem corpus.
    GenProjects(GenProjects),
    /// Render every project under the root.
    Render(Render),
    /// Check project files; one JSON record per file on stdout.
    Validate(Validate),
    /// Summarize a project, preset or packed file.
    Inspect(Inspect),
}

#[derive(Debug, Args)]
pub struct GenPresets {
    /// Plugin to generate for, as NAME TYPE. Repeatable.
    #[arg(long, num_args = 2, value_names = ["NAME", "TYPE"], action = clap::ArgAction::Append)]
    pub plugin_name: Vec<String>,
    /// File with one plugin per line: `NAME` or `NAME,TYPE`.
    #[arg(long)]
    pub plugin_list: Option<PathBuf>,
    /// Every plugin flagged as part of the reduced inventory (the default).
    #[arg(long, conflicts_with = "use_full_set")]
    pub use_reduced_set: bool,
    /// Every registered plugin.
    #[arg(long)]
    pub use_full_set: bool,
    /// Presets written per plugin.
    #[arg(long, default_value_t = 10)]
    pub presets: usize,
    /// Probability that a sampled parameter keeps its default marker.
    #[arg(long, default_value_t = 0.0)]
    pub default_prob: f64,
    /// Keep cluster representatives of a larger candidate pool instead of raw draws.
    #[arg(long)]
    pub validate_generation: bool,
    /// Candidate pool size for --validate-generation (default 4x --presets).
    #[arg(long)]
    pub candidates: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Profile {
    Shallow,
    Deep,
}

#[derive(Debug, Args)]
pub struct GenProjects {
    /// Number of projects.
    #[arg(long, short = 'n', default_value_t = 100)]
    pub count: usize,
    /// Base configuration the other flags override.
    #[arg(long, value_enum, default_value_t = Profile::Shallow)]
    pub profile: Profile,
    #[arg(long)]
    pub min_chains: Option<usize>,
    #[arg(long)]
    pub max_chains: Option<usize>,
    #[arg(long)]
    pub min_stems: Option<usize>,
    #[arg(long)]
    pub max_stems: Option<usize>,
    /// Chain depth distribution, e.g. `0.1,0.6,0.3`.
    #[arg(long, value_delimiter = ',')]
    pub chain_depth: Option<Vec<f64>>,
    #[arg(long)]
    pub sidechain_prob: Option<f64>,
    #[arg(long)]
    pub splitter_prob: Option<f64>,
    #[arg(long)]
    pub complexity: Option<f64>,
    #[arg(long)]
    pub variable_density: bool,
    /// Edge gain range in dB, `LO,HI`.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub gain_range_db: Option<Vec<f64>>,
    /// Allowed stem labels, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
    /// Stem corpus parser.
    #[arg(long, default_value = "flat")]
    pub dataset_name: String,
    /// Exit with status 4 when more than this fraction of projects is infeasible.
    #[arg(long, default_value_t = 0.05)]
    pub max_infeasible_rate: f64,
    /// Write this many tracks of synthetic stems first if the stem directory has none.
    #[arg(long)]
    pub synthetic_stems: Option<usize>,
    /// Length of synthetic stems in seconds.
    #[arg(long, default_value_t = 10.0)]
    pub stem_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Human,
    Packed,
}

#[derive(Debug, Args)]
pub struct Render {
    /// Worker threads (default: available cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Human)]
    pub mode: Mode,
    /// `internal`, `identity` or `external:<endpoint>`.
    #[arg(long, default_value = "internal")]
    pub backend: String,
    /// Exit 0 only if at least this fraction of projects renders.
    #[arg(long, default_value_t = 1.0)]
    pub min_success: f64,
}

#[derive(Debug, Args)]
pub struct Validate {
    /// Project files or directories (default: the root's project directory).
    pub paths: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Inspect {
    /// A project `.yaml`, preset `.json` or packed container.
    pub path: PathBuf,
    /// Print the exported node graph of a project.
    #[arg(long)]
    pub graph: bool,
}

/// Accept `--flag_name` for `--flag-name`.
fn canonical_args(args: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut passthrough = false;
    for a in args {
        if passthrough || a == "--" || !a.starts_with("--") {
            passthrough |= a == "--";
            out.push(a);
            continue;
        }
        let (flag, rest) = match a.find('=') {
            Some(i) => a.split_at(i),
            None => (a.as_str(), ""),
        };
        out.push(format!("{}{rest}", flag.replace('_', "-")));
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse_from(canonical_args(std::env::args())) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            if !matches!(e, CliError::Invalid) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.code())
        }
    }
}
