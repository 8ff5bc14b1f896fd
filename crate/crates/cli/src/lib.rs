//! The `scg` pipeline as subcommands over files.
//!
//! Stages communicate only through files: patches become graphs (JSONL),
//! graphs become feature tables, feature tables join into a dataset, and the
//! dataset feeds evaluation, significance tests and embeddings.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use scg_core::dataset::FeatureCombination;
use scg_core::ml::ClassifierKind;
use scg_core::stats::Alternative;

pub mod artifact;
mod commands;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "scg", version, about = "Source code graph features for just-in-time bug prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Directory that receives the outputs; created if missing.
    #[arg(long)]
    out_dir: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    workers: Option<u16>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Patch directory (`<commit_id>.patch` files) to `graphs.jsonl`.
    Extract {
        #[arg(long)]
        patches: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// `graphs.jsonl` to `features_A.csv` and `features_D.csv`.
    Features {
        #[arg(long)]
        graphs: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// C, A and D feature tables to `dataset.csv`.
    Join {
        #[arg(long = "c")]
        c_features: PathBuf,
        #[arg(long = "a")]
        a_features: PathBuf,
        #[arg(long = "d")]
        d_features: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Classifier x feature-combination matrix to `report.json` and `f1_table.csv`.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = scg_core::eval::DEFAULT_TRAIN_FRACTION, value_parser = parse_fraction)]
        train_fraction: f64,
        #[arg(long, value_delimiter = ',', default_value = "lr,rf,knn")]
        classifiers: Vec<ClassifierKind>,
        #[arg(long, value_delimiter = ',', default_value = "C,A,D,CA,CD,AD,CAD")]
        combos: Vec<FeatureCombination>,
        /// Dataset name in the F1 table; defaults to the dataset's directory name.
        #[arg(long)]
        name: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Wilcoxon tests over F1 tables (`wilcoxon.csv`), or Welch tests of
    /// buggy against clean values of dataset columns (`ttest.csv`).
    Stats {
        #[arg(long = "f1-table", num_args = 1.., conflicts_with_all = ["dataset", "columns"], required_unless_present = "dataset")]
        f1_tables: Vec<PathBuf>,
        #[arg(long, requires = "columns")]
        dataset: Option<PathBuf>,
        /// Feature columns such as `a4` or `c1,d12`.
        #[arg(long = "column", num_args = 1.., value_delimiter = ',', value_parser = parse_column)]
        columns: Vec<String>,
        #[arg(long, default_value = "two-sided")]
        alternative: Alternative,
        #[command(flatten)]
        common: Common,
    },
    /// Standardized dataset features to a 2-D t-SNE `embedding.tsv`.
    Embed {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 30.0)]
        perplexity: f64,
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
        #[arg(long, default_value = "CAD")]
        combo: FeatureCombination,
        #[command(flatten)]
        common: Common,
    },
    /// Synthetic corpus: `c_features.csv`, `features_A.csv`, `features_D.csv`, `spec.json`.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = scg_core::synth::DEFAULT_BUGGY_FRACTION)]
        buggy_fraction: f64,
        #[arg(long, default_value_t = 0.9)]
        c_overlap: f64,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie strictly between 0 and 1, got {v}"))
    }
}

fn parse_column(s: &str) -> Result<String, String> {
    scg_core::dataset::feature_column(s)
        .map(|_| s.to_string())
        .ok_or_else(|| format!("`{s}` is not a feature column (c1..c15, a1..a12, d1..d12)"))
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Extract { common, .. }
            | Command::Features { common, .. }
            | Command::Join { common, .. }
            | Command::Eval { common, .. }
            | Command::Stats { common, .. }
            | Command::Embed { common, .. }
            | Command::Synth { common, .. } => common,
        }
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("SCG_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Runs one invocation; `args` includes the program name. Returns the
/// process exit status: 0 on success, 1 on usage errors, 2 on data errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let workers = cli.command.common().workers.map_or(0, usize::from);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_DATA;
        }
    };
    match pool.install(|| commands::dispatch(cli.command)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_DATA
        }
    }
}
