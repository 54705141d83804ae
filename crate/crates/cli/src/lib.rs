//! Command-line driver: parses flags, layers configuration and runs one stage
//! or the whole analysis pipeline.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 data error,
//! 4 internal invariant failure.

pub mod config;
pub mod error;
pub mod session;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{Overrides, RunConfig, SEED_ENV};
pub use error::CliError;
pub use session::Session;

#[derive(Debug, Parser)]
#[command(
    name = "binquest",
    version,
    about = "Exploratory analysis of yes/no questionnaire data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the matrix against its schema and list constant answers.
    Validate,
    /// Bernoulli proportion and variance per answer.
    Stats,
    /// Group co-occurring answers and pick one representative per group.
    ClusterQuestions,
    /// Cluster respondents on the representative answers.
    ClusterRespondents,
    /// Internal validity indices over a range of cluster counts.
    Sweep,
    /// Monothetic decision tree over the answers.
    Monothetic,
    /// Mine answer pairs with a significant conversion rate.
    Rules,
    /// GrapeShape and HalfPie charts with an HTML index.
    Charts,
    /// Compare clusters and answers across score or covariate segments.
    Stratify,
    /// Generate a synthetic matrix from a Bernoulli mixture spec.
    Synth,
    /// Every stage in order.
    Pipeline,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub matrix: Option<PathBuf>,
    #[arg(long, global = true)]
    pub schema: Option<PathBuf>,
    /// Per-respondent numeric scores (`id,value`).
    #[arg(long, global = true)]
    pub scores: Option<PathBuf>,
    /// Per-respondent categorical covariate (`id,value`).
    #[arg(long, global = true)]
    pub covariates: Option<PathBuf>,
    /// Mixture spec for `synth`.
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// K-means restarts for both answer and respondent clustering.
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    #[arg(long, global = true)]
    pub k_questions: Option<usize>,
    #[arg(long, global = true)]
    pub k_respondents: Option<usize>,
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub min_support: Option<usize>,
    #[arg(long, global = true)]
    pub min_conversion: Option<f64>,
    #[arg(long, global = true)]
    pub k_min: Option<usize>,
    #[arg(long, global = true)]
    pub k_max: Option<usize>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

impl Options {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            matrix: self.matrix.clone(),
            schema: self.schema.clone(),
            scores: self.scores.clone(),
            covariates: self.covariates.clone(),
            spec: self.spec.clone(),
            out: self.out.clone(),
            seed: self.seed,
            restarts: self.restarts,
            k_questions: self.k_questions,
            k_respondents: self.k_respondents,
            depth: self.depth,
            alpha: self.alpha,
            min_support: self.min_support,
            min_conversion: self.min_conversion,
            k_min: self.k_min,
            k_max: self.k_max,
            threads: self.threads,
        }
    }
}

/// Runs one command and returns the artifacts it wrote.
pub fn execute(command: Command, config: RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let threads = config.threads;
    let work = move || {
        let mut session = Session::new(config);
        match command {
            Command::Validate => session.run_validate(),
            Command::Stats => session.run_stats(),
            Command::ClusterQuestions => session.run_cluster_questions(),
            Command::ClusterRespondents => session.run_cluster_respondents(),
            Command::Sweep => session.run_sweep(),
            Command::Monothetic => session.run_monothetic(),
            Command::Rules => session.run_rules(),
            Command::Charts => session.run_charts(),
            Command::Stratify => session.run_stratify(),
            Command::Synth => session.run_synth(),
            Command::Pipeline => session.run_pipeline(),
        }
        .map(|()| session.written().to_vec())
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let result = RunConfig::resolve(
        cli.options.config.as_deref(),
        env_seed.as_deref(),
        &cli.options.overrides(),
    )
    .and_then(|cfg| {
        let out = cfg.out_dir();
        execute(cli.command, cfg).map(|written| (out, written))
    });
    match result {
        Ok((out, written)) => {
            for path in written {
                println!("wrote {}", out.join(path).display());
            }
            0
        }
        Err(e) => {
            eprintln!("binquest: {}", e.message());
            e.exit_code()
        }
    }
}
