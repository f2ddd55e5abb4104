//! `texmatch` command-line front end. Every subcommand is a thin layer over
//! `texmatch-core`; this crate owns argument parsing, file I/O and exit codes.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod io;
mod params;

pub use io::query_id;
pub use params::ParamsFile;

/// Exit status for each failure class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const PARSE: i32 = 2;
    pub const IO: i32 = 3;
    pub const CONTRACT: i32 = 4;
    pub const MALFORMED: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Contract(String),
    #[error("{path}: {msg}")]
    Malformed { path: PathBuf, msg: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => exit::PARSE,
            CliError::Io { .. } => exit::IO,
            CliError::Contract(_) => exit::CONTRACT,
            CliError::Malformed { .. } => exit::MALFORMED,
        }
    }

    pub(crate) fn contract(e: impl std::fmt::Display) -> Self {
        CliError::Contract(e.to_string())
    }

    /// Classifies a core error raised while processing `path`.
    pub(crate) fn core(path: impl Into<PathBuf>, e: texmatch_core::Error) -> Self {
        use texmatch_core::Error as E;
        let path = path.into();
        match e {
            E::Io(source) => CliError::Io { path, source },
            E::Format(f) => CliError::Malformed { path, msg: f.to_string() },
            other => CliError::Contract(format!("{}: {other}", path.display())),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "texmatch", version, about = "Texture-template fingerprint extraction, matching and search")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// TOML file with [graph], [extraction] and [fusion] tables
    #[arg(long, global = true)]
    pub params: Option<PathBuf>,
    /// Overrides the seed of generated data
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for search and extraction (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file; standard output when omitted
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract a texture template from a PGM image
    Extract(ExtractArgs),
    /// Compare a latent template with a reference template
    Match(MatchArgs),
    /// Search a gallery with every template in a query directory
    Search(SearchArgs),
    /// Cumulative match characteristic from search results
    Cmc(CmcArgs),
    /// ROC table over genuine and impostor descriptor similarities
    Roc(RocArgs),
    /// Generate synthetic references, latents and ground truth
    Synth(SynthArgs),
    /// Single-thread comparison latency
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Latent,
    Reference,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// raw, e1, e2 or t
    #[arg(long, default_value = "raw")]
    pub variant: String,
    #[arg(long)]
    pub stride: Option<u16>,
    /// Full descriptor length (96, 192 or 384)
    #[arg(long)]
    pub desc_len: Option<usize>,
    /// Foreground mask image (nonzero = foreground), replaces automatic segmentation
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// FTD1 matrix replacing the computed descriptors, one row per minutia
    #[arg(long)]
    pub import_descriptors: Option<PathBuf>,
    /// Also write the orientation field and ROI as CSV
    #[arg(long)]
    pub field_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[arg(long)]
    pub latent: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Emit the full result as JSON instead of one summary line
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Directory of query templates; files sharing a stem form one query
    #[arg(long)]
    pub query_dir: PathBuf,
    /// Gallery manifest (subject_id, variant, template_path)
    #[arg(long)]
    pub gallery: PathBuf,
    #[arg(long)]
    pub topk: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CmcArgs {
    /// JSON written by `texmatch search`
    #[arg(long)]
    pub results: PathBuf,
    /// CSV with query_id,subject_id rows
    #[arg(long)]
    pub mates: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub max_rank: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct RocArgs {
    /// CSV with score,genuine rows (genuine is 1 or 0)
    #[arg(long, conflicts_with = "synth")]
    pub scores: Option<PathBuf>,
    /// Synthetic config; scores come from planted correspondences
    #[arg(long)]
    pub synth: Option<PathBuf>,
    /// Number of synthetic subjects
    #[arg(long, default_value_t = 20)]
    pub count: u64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Synthetic data configuration (TOML); defaults when omitted
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub count: u64,
    /// Skip writing PGM images
    #[arg(long)]
    pub no_images: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Latent templates; synthetic 240-point latents when omitted
    #[arg(long, num_args = 1..)]
    pub latent: Vec<PathBuf>,
    /// Reference templates; synthetic 600-point references when omitted
    #[arg(long = "ref", num_args = 1..)]
    pub reference: Vec<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub comparisons: usize,
}

/// Parses `args` and runs the command; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::PARSE } else { exit::OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("texmatch: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    let params = match &cli.global.params {
        Some(p) => ParamsFile::load(p)?,
        None => ParamsFile::default(),
    };
    let threads = cli.global.threads.unwrap_or(0);
    if cli.global.threads == Some(0) {
        return Err(CliError::Parse("--threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(CliError::contract)?;
    let g = &cli.global;
    match &cli.command {
        Command::Extract(a) => pool.install(|| commands::extract(g, &params, a)),
        Command::Match(a) => commands::match_pair(g, &params, a),
        Command::Search(a) => pool.install(|| commands::search(g, &params, a)),
        Command::Cmc(a) => commands::cmc(g, a),
        Command::Roc(a) => pool.install(|| commands::roc(g, &params, a)),
        Command::Synth(a) => pool.install(|| commands::synth(g, &params, a)),
        Command::Bench(a) => commands::bench(g, &params, a),
    }
}
