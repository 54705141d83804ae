//! Run configuration: JSON file, then `BINQUEST_SEED`, then command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use binquest_core::charts::{ColorScale, MarginMode};
use binquest_core::cluster::{
    ClusterConfig, Distance, Orientation, DEFAULT_MAX_ITER, DEFAULT_RESTARTS,
};
use binquest_core::rules::MiningConfig;
use binquest_core::validity::SweepMethod;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SEED_ENV: &str = "BINQUEST_SEED";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub matrix: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub covariates: Option<PathBuf>,
    pub spec: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuestionClustering {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub distance: Distance,
    /// Representative forced for a given answer cluster index.
    pub overrides: BTreeMap<usize, String>,
}

impl Default for QuestionClustering {
    fn default() -> Self {
        Self {
            k: 10,
            restarts: DEFAULT_RESTARTS,
            max_iter: DEFAULT_MAX_ITER,
            distance: Distance::SquaredEuclidean,
            overrides: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RespondentClustering {
    /// Chosen by the analyst after reading the sweep; no default.
    pub k: Option<usize>,
    pub restarts: usize,
    pub max_iter: usize,
    pub distance: Distance,
    /// Cluster respondents on the representative answers only.
    pub use_representatives: bool,
}

impl Default for RespondentClustering {
    fn default() -> Self {
        Self {
            k: None,
            restarts: DEFAULT_RESTARTS,
            max_iter: DEFAULT_MAX_ITER,
            distance: Distance::SquaredEuclidean,
            use_representatives: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub k_min: usize,
    pub k_max: usize,
    /// `k` for the agglomerative rows; `k_max` when absent.
    pub agglomerative_k: Option<usize>,
    pub include_agglomerative: bool,
    /// K-means restarts per sweep row; the respondent setting when absent.
    pub restarts: Option<usize>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            k_min: 2,
            k_max: 15,
            agglomerative_k: None,
            include_agglomerative: true,
            restarts: None,
        }
    }
}

impl SweepSettings {
    pub fn methods(&self) -> Vec<SweepMethod> {
        let mut m = vec![SweepMethod::Kmeans];
        if self.include_agglomerative {
            m.extend([
                SweepMethod::AgglomerativeWard,
                SweepMethod::AgglomerativeL1Complete,
            ]);
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonotheticSettings {
    pub depth: usize,
}

impl Default for MonotheticSettings {
    fn default() -> Self {
        Self { depth: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChartSettings {
    pub grape_radius: f64,
    pub colors: ColorScale,
    /// HalfPie charts drawn for the strongest rules and segment answers.
    pub max_halfpies: usize,
    pub halfpie_margin: MarginMode,
}

impl Default for ChartSettings {
    fn default() -> Self {
        Self {
            grape_radius: 12.0,
            colors: ColorScale::default(),
            max_halfpies: 20,
            halfpie_margin: MarginMode::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StratifySettings {
    /// Top fractions of the score ranking compared against everyone.
    pub quantiles: Vec<f64>,
    pub alpha: f64,
}

impl Default for StratifySettings {
    fn default() -> Self {
        Self {
            quantiles: vec![0.05, 0.15],
            alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; the rayon default when absent.
    pub threads: Option<usize>,
    pub paths: Paths,
    pub questions: QuestionClustering,
    pub respondents: RespondentClustering,
    pub sweep: SweepSettings,
    pub monothetic: MonotheticSettings,
    pub mining: MiningConfig,
    pub charts: ChartSettings,
    pub stratify: StratifySettings,
}

/// Values given on the command line; `None` leaves the lower layers alone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub matrix: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub covariates: Option<PathBuf>,
    pub spec: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub k_questions: Option<usize>,
    pub k_respondents: Option<usize>,
    pub depth: Option<usize>,
    pub alpha: Option<f64>,
    pub min_support: Option<usize>,
    pub min_conversion: Option<f64>,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Parses a JSON config; blank text yields the defaults.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("line {} column {}: {e}", e.line(), e.column())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
            .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
    }

    /// Layers the environment seed and then the flags over the file values.
    pub fn resolve(
        file: Option<&Path>,
        env_seed: Option<&str>,
        flags: &Overrides,
    ) -> Result<Self, CliError> {
        let mut cfg = match file {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(raw) = env_seed {
            cfg.seed = raw.trim().parse().map_err(|_| {
                CliError::Config(format!("{SEED_ENV}={raw:?} is not an unsigned integer"))
            })?;
        }
        cfg.apply(flags);
        cfg.check()?;
        Ok(cfg)
    }

    fn apply(&mut self, f: &Overrides) {
        let p = &mut self.paths;
        for (slot, value) in [
            (&mut p.matrix, &f.matrix),
            (&mut p.schema, &f.schema),
            (&mut p.scores, &f.scores),
            (&mut p.covariates, &f.covariates),
            (&mut p.spec, &f.spec),
            (&mut p.out, &f.out),
        ] {
            if value.is_some() {
                slot.clone_from(value);
            }
        }
        if let Some(v) = f.seed {
            self.seed = v;
        }
        if let Some(v) = f.restarts {
            self.questions.restarts = v;
            self.respondents.restarts = v;
        }
        if let Some(v) = f.k_questions {
            self.questions.k = v;
        }
        if f.k_respondents.is_some() {
            self.respondents.k = f.k_respondents;
        }
        if let Some(v) = f.depth {
            self.monothetic.depth = v;
        }
        if let Some(v) = f.alpha {
            self.mining.alpha = v;
            self.stratify.alpha = v;
        }
        if let Some(v) = f.min_support {
            self.mining.min_support = v;
        }
        if let Some(v) = f.min_conversion {
            self.mining.min_abs_conversion = v;
        }
        if let Some(v) = f.k_min {
            self.sweep.k_min = v;
        }
        if let Some(v) = f.k_max {
            self.sweep.k_max = v;
        }
        if f.threads.is_some() {
            self.threads = f.threads;
        }
    }

    pub fn check(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.questions.k == 0 || self.questions.restarts == 0 || self.questions.max_iter == 0 {
            return bad("questions.k, restarts and max_iter must be positive");
        }
        if self.respondents.k == Some(0)
            || self.respondents.restarts == 0
            || self.respondents.max_iter == 0
        {
            return bad("respondents.k, restarts and max_iter must be positive");
        }
        if self.sweep.k_min < 2 || self.sweep.k_min > self.sweep.k_max {
            return bad("sweep needs 2 <= k_min <= k_max");
        }
        if self.sweep.restarts == Some(0) || self.sweep.agglomerative_k.is_some_and(|k| k < 2) {
            return bad("sweep.restarts must be positive and agglomerative_k at least 2");
        }
        if self.monothetic.depth == 0 {
            return bad("monothetic.depth must be at least 1");
        }
        if self.threads == Some(0) {
            return bad("threads must be positive");
        }
        if self.charts.grape_radius.is_nan() || self.charts.grape_radius <= 0.0 {
            return bad("charts.grape_radius must be positive");
        }
        if self
            .stratify
            .quantiles
            .iter()
            .any(|q| !(*q > 0.0 && *q <= 1.0))
        {
            return bad("stratify.quantiles must lie in (0, 1]");
        }
        if !(self.stratify.alpha > 0.0 && self.stratify.alpha < 1.0) {
            return bad("stratify.alpha must lie in (0, 1)");
        }
        self.mining
            .check()
            .map_err(|e| CliError::Config(format!("mining: {e}")))
    }

    pub fn question_config(&self) -> ClusterConfig {
        ClusterConfig {
            k: self.questions.k,
            restarts: self.questions.restarts,
            seed: self.seed,
            max_iter: self.questions.max_iter,
            distance: self.questions.distance,
            orientation: Orientation::Columns,
        }
    }

    /// Respondent clustering settings; errors when no `k` was chosen.
    pub fn respondent_config(&self) -> Result<ClusterConfig, CliError> {
        let k = self.respondents.k.ok_or_else(|| {
            CliError::Config(
                "respondent cluster count not set: pick one from the sweep and pass --k-respondents".into(),
            )
        })?;
        Ok(ClusterConfig {
            k,
            ..self.sweep_kmeans_config(self.respondents.restarts)
        })
    }

    pub fn sweep_config(&self) -> ClusterConfig {
        self.sweep_kmeans_config(self.sweep.restarts.unwrap_or(self.respondents.restarts))
    }

    fn sweep_kmeans_config(&self, restarts: usize) -> ClusterConfig {
        ClusterConfig {
            k: self.sweep.k_min,
            restarts,
            seed: self.seed,
            max_iter: self.respondents.max_iter,
            distance: self.respondents.distance,
            orientation: Orientation::Rows,
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.paths
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}
