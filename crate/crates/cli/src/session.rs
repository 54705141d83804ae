//! Stage-by-stage execution with cached intermediate results.
//!
//! Each stage computes its prerequisites on demand, so a single command and the
//! full pipeline share the same code path and write identical artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use binquest_core::charts::{
    gallery_html, render_grapeshape, render_halfpie, render_segment_bars, BarGroup, ChartDocument,
    GrapeLayout, HalfPieSpec,
};
use binquest_core::cluster::{kmeans_fit, select_representatives, ClusterModel};
use binquest_core::corpus::{
    load_matrix, save_matrix, save_schema, synth_mixture, validate, MixtureSpec, ResponseMatrix,
};
use binquest_core::monothetic::{monothetic_fit, MonotheticTree};
use binquest_core::points::{cluster_means, Points};
use binquest_core::rules::{mine_rules, write_rules_csv, write_rules_report, MiningResult};
use binquest_core::stats::{all_stats, write_stats_csv, ConditionalStats, QuestionStats};
use binquest_core::stratify::{
    categorical_segments, cluster_distribution, segment_question_profile, top_quantile_mask,
    write_distribution_csv, write_profile_csv, CategoryTable, ScoreTable,
};
use binquest_core::validity::{sweep_plan, SelectionTable, SweepPlan};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub type Result<T> = std::result::Result<T, CliError>;

pub struct QuestionStage {
    pub model: ClusterModel,
    pub representatives: Vec<String>,
}

pub struct RespondentStage {
    /// Codes of the columns the respondents were clustered on.
    pub columns: Vec<String>,
    pub model: ClusterModel,
}

pub struct Session {
    pub config: RunConfig,
    out: PathBuf,
    written: Vec<PathBuf>,
    matrix: Option<ResponseMatrix>,
    stats: Option<Vec<QuestionStats>>,
    questions: Option<QuestionStage>,
    respondents: Option<RespondentStage>,
    rules: Option<MiningResult>,
}

#[derive(Serialize)]
struct QuestionClustersFile<'a> {
    codes: Vec<&'a str>,
    representatives: &'a [String],
    model: &'a ClusterModel,
}

#[derive(Serialize)]
struct RespondentClustersFile<'a> {
    columns: &'a [String],
    model: &'a ClusterModel,
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Invariant(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn csv_text(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory cannot fail");
    buf
}

/// File-name-safe form of a code or segment name.
pub fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// `0.05 → top5`, `0.125 → top12.5`.
pub fn quantile_name(q: f64) -> String {
    let pct = format!("{:.4}", q * 100.0);
    let pct = pct.trim_end_matches('0').trim_end_matches('.');
    format!("top{pct}")
}

/// Verifies that a fitted model is internally consistent.
fn check_model(what: &str, points: &Points, model: &ClusterModel) -> Result<()> {
    let k = model.k();
    let fail = |m: String| Err(CliError::Invariant(format!("{what}: {m}")));
    if model.labels.len() != points.len() || model.labels.iter().any(|&l| l >= k) {
        return fail("labels do not cover the items".into());
    }
    for (c, mean) in cluster_means(points, &model.labels, k).iter().enumerate() {
        let Some(mean) = mean else {
            return fail(format!("cluster {c} is empty"));
        };
        if mean
            .iter()
            .zip(&model.centroids[c])
            .any(|(a, b)| (a - b).abs() > 1e-9)
        {
            return fail(format!("centroid {c} differs from its members' mean"));
        }
    }
    Ok(())
}

impl Session {
    pub fn new(config: RunConfig) -> Self {
        let out = config.out_dir();
        Self {
            config,
            out,
            written: Vec::new(),
            matrix: None,
            stats: None,
            questions: None,
            respondents: None,
            rules: None,
        }
    }

    /// Artifacts written so far, relative to the output directory.
    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn emit(&mut self, rel: impl AsRef<Path>, bytes: impl AsRef<[u8]>) -> Result<()> {
        let rel = rel.as_ref();
        let path = self.out.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| CliError::Write {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        fs::write(&path, bytes).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
        self.written.push(rel.to_path_buf());
        Ok(())
    }

    fn required(path: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
        path.clone()
            .ok_or_else(|| CliError::Config(format!("missing input: pass --{flag}")))
    }

    pub fn matrix(&mut self) -> Result<&ResponseMatrix> {
        if self.matrix.is_none() {
            let m = Self::required(&self.config.paths.matrix, "matrix")?;
            let s = Self::required(&self.config.paths.schema, "schema")?;
            self.matrix = Some(load_matrix(m, s)?);
        }
        Ok(self.matrix.as_ref().expect("loaded above"))
    }

    fn stats(&mut self) -> Result<&[QuestionStats]> {
        if self.stats.is_none() {
            let s = all_stats(self.matrix()?);
            self.stats = Some(s);
        }
        Ok(self.stats.as_deref().expect("computed above"))
    }

    fn question_stage(&mut self) -> Result<&QuestionStage> {
        if self.questions.is_none() {
            let cfg = self.config.question_config();
            let overrides = self.config.questions.overrides.clone();
            let stats = self.stats()?.to_vec();
            let matrix = self.matrix()?;
            let model = kmeans_fit(matrix, &cfg)?;
            check_model(
                "question clustering",
                &Points::matrix_columns(matrix),
                &model,
            )?;
            let representatives = select_representatives(&model, &stats, &overrides)?;
            self.questions = Some(QuestionStage {
                model,
                representatives,
            });
        }
        Ok(self.questions.as_ref().expect("computed above"))
    }

    /// Matrix the respondents are clustered on.
    fn respondent_matrix(&mut self) -> Result<ResponseMatrix> {
        if self.config.respondents.use_representatives {
            let reps = self.question_stage()?.representatives.clone();
            Ok(self.matrix()?.select_columns(&reps)?)
        } else {
            Ok(self.matrix()?.clone())
        }
    }

    fn respondent_stage(&mut self) -> Result<&RespondentStage> {
        if self.respondents.is_none() {
            let cfg = self.config.respondent_config()?;
            let reduced = self.respondent_matrix()?;
            let model = kmeans_fit(&reduced, &cfg)?;
            check_model(
                "respondent clustering",
                &Points::matrix_rows(&reduced),
                &model,
            )?;
            self.respondents = Some(RespondentStage {
                columns: reduced.codes().map(str::to_string).collect(),
                model,
            });
        }
        Ok(self.respondents.as_ref().expect("computed above"))
    }

    fn rule_stage(&mut self) -> Result<&MiningResult> {
        if self.rules.is_none() {
            let cfg = self.config.mining.clone();
            let result = mine_rules(self.matrix()?, &cfg)?;
            if result
                .rules
                .iter()
                .any(|r| r.support < cfg.min_support || !r.test.significant)
            {
                return Err(CliError::Invariant(
                    "a retained rule fails its own filters".into(),
                ));
            }
            self.rules = Some(result);
        }
        Ok(self.rules.as_ref().expect("computed above"))
    }

    pub fn run_validate(&mut self) -> Result<()> {
        Self::required(&self.config.paths.matrix, "matrix")?;
        Self::required(&self.config.paths.schema, "schema")?;
        match self.matrix().map(validate) {
            Ok(report) => {
                self.emit("validation.txt", report.to_string())?;
                if report.ok {
                    Ok(())
                } else {
                    Err(CliError::Data(binquest_core::Error::Shape(
                        "matrix failed validation; see validation.txt".into(),
                    )))
                }
            }
            Err(err) => {
                self.emit(
                    "validation.txt",
                    format!("ok: false\nerror: {}\n", err.message()),
                )?;
                Err(err)
            }
        }
    }

    pub fn run_stats(&mut self) -> Result<()> {
        let stats = self.stats()?.to_vec();
        self.emit("stats.csv", csv_text(|b| write_stats_csv(&stats, b)))
    }

    pub fn run_cluster_questions(&mut self) -> Result<()> {
        let codes: Vec<String> = self.matrix()?.codes().map(str::to_string).collect();
        let stats = self.stats()?.to_vec();
        let stage = self.question_stage()?;
        let file = json(&QuestionClustersFile {
            codes: codes.iter().map(String::as_str).collect(),
            representatives: &stage.representatives,
            model: &stage.model,
        })?;
        let mut reps = String::from("cluster,representative,variance,members\n");
        for (c, members) in stage.model.members().iter().enumerate() {
            let rep = &stage.representatives[c];
            let variance = stats
                .iter()
                .find(|s| &s.code == rep)
                .map_or(0.0, |s| s.variance);
            let names: Vec<&str> = members.iter().map(|&j| codes[j].as_str()).collect();
            let _ = writeln!(reps, "{c},{rep},{variance:.6},{}", names.join(" "));
        }
        self.emit("question_clusters.json", file)?;
        self.emit("representatives.csv", reps)
    }

    pub fn run_cluster_respondents(&mut self) -> Result<()> {
        let ids = self.matrix()?.respondent_ids().to_vec();
        let stage = self.respondent_stage()?;
        let file = json(&RespondentClustersFile {
            columns: &stage.columns,
            model: &stage.model,
        })?;
        let mut labels = String::from("id,cluster\n");
        for (id, l) in ids.iter().zip(&stage.model.labels) {
            let _ = writeln!(labels, "{id},{l}");
        }
        let reduced = (stage.columns.len(), stage.model.inertia);
        self.emit("respondent_clusters.json", file)?;
        self.emit("respondent_labels.csv", labels)?;

        // Same k on every column, for comparison with the reduced run.
        let cfg = self.config.respondent_config()?;
        let full_matrix = self.matrix()?;
        let full = if reduced.0 == full_matrix.n_cols() {
            reduced
        } else {
            (full_matrix.n_cols(), kmeans_fit(full_matrix, &cfg)?.inertia)
        };
        let mut dims = String::from("columns,n_columns,inertia,inertia_per_column\n");
        for (name, (m, inertia)) in [("full", full), ("reduced", reduced)] {
            let _ = writeln!(dims, "{name},{m},{inertia:.6},{:.6}", inertia / m as f64);
        }
        self.emit("dimensionality.csv", dims)
    }

    pub fn sweep_table(&mut self) -> Result<SelectionTable> {
        let s = self.config.sweep.clone();
        let kcfg = self.config.sweep_config();
        let reduced = self.respondent_matrix()?;
        let points = Points::matrix_rows(&reduced);
        let n = points.len();
        if s.k_max > n {
            return Err(CliError::Config(format!(
                "sweep k_max {} exceeds {n} respondents",
                s.k_max
            )));
        }
        let plan = if s.include_agglomerative {
            SweepPlan::kmeans_range_with_agglomerative(
                s.k_min,
                s.k_max,
                s.agglomerative_k.unwrap_or(s.k_max),
            )
        } else {
            SweepPlan::grid(&s.methods(), s.k_min, s.k_max)
        };
        Ok(sweep_plan(&points, &plan, &kcfg)?)
    }

    pub fn run_sweep(&mut self) -> Result<()> {
        let table = self.sweep_table()?;
        self.emit("sweep.csv", csv_text(|b| table.write_csv(b)))
    }

    pub fn monothetic_tree(&mut self) -> Result<MonotheticTree> {
        let depth = self.config.monothetic.depth;
        Ok(monothetic_fit(self.matrix()?, depth)?)
    }

    pub fn run_monothetic(&mut self) -> Result<()> {
        let tree = self.monothetic_tree()?;
        self.emit("monothetic.json", tree.to_json()?)?;
        self.emit("monothetic.txt", tree.render_text())
    }

    pub fn run_rules(&mut self) -> Result<()> {
        let result = self.rule_stage()?;
        let csv = csv_text(|b| write_rules_csv(&result.rules, b));
        let report = csv_text(|b| write_rules_report(&result.rules, b));
        let summary = json(&result.summary)?;
        self.emit("rules.csv", csv)?;
        self.emit("rules.txt", report)?;
        self.emit("mining_summary.json", summary)
    }

    pub fn run_charts(&mut self) -> Result<()> {
        let charts = self.config.charts.clone();
        let alpha = self.config.mining.alpha;
        let stage = self.respondent_stage()?;
        let layout = GrapeLayout::bunch(&stage.columns, charts.grape_radius)?;
        let mut docs = render_grapeshape(&stage.model, &layout, &charts.colors)?;
        let rules = &self.rule_stage()?.rules;
        for rule in rules.iter().take(charts.max_halfpies) {
            let spec = HalfPieSpec {
                margin: charts.halfpie_margin,
                ..HalfPieSpec::new(rule.cond.clone(), alpha)
            };
            let mut doc = render_halfpie(&spec)?;
            doc.name = format!(
                "halfpie_{}_{}.svg",
                file_safe(&rule.b_code),
                file_safe(&rule.a_code)
            );
            docs.push(doc);
        }
        self.emit_gallery("charts", "Clusters and rules", docs)
    }

    fn emit_gallery(&mut self, dir: &str, title: &str, docs: Vec<ChartDocument>) -> Result<()> {
        let names: Vec<String> = docs.iter().map(|d| d.name.clone()).collect();
        for doc in docs {
            self.emit(Path::new(dir).join(&doc.name), doc.svg)?;
        }
        self.emit(
            Path::new(dir).join("index.html"),
            gallery_html(title, &names),
        )
    }

    pub fn has_segments(&self) -> bool {
        self.config.paths.scores.is_some() || self.config.paths.covariates.is_some()
    }

    pub fn run_stratify(&mut self) -> Result<()> {
        if !self.has_segments() {
            return Err(CliError::Config(
                "stratify needs --scores or --covariates".into(),
            ));
        }
        let settings = self.config.stratify.clone();
        let charts = self.config.charts.clone();
        let ids = self.matrix()?.respondent_ids().to_vec();
        let (labels, k) = {
            let stage = self.respondent_stage()?;
            (stage.model.labels.clone(), stage.model.k())
        };

        // (family, segment name, mask)
        let mut segments: Vec<(&str, String, Vec<bool>)> = Vec::new();
        if let Some(path) = self.config.paths.scores.clone() {
            let scores = ScoreTable::load(path)?;
            for &q in &settings.quantiles {
                segments.push((
                    "scores",
                    quantile_name(q),
                    top_quantile_mask(&scores, &ids, q)?,
                ));
            }
        }
        if let Some(path) = self.config.paths.covariates.clone() {
            let table = CategoryTable::load(path)?;
            let found = categorical_segments(&table, &ids)?;
            let mut missing = String::from("id\n");
            for id in &found.missing {
                let _ = writeln!(missing, "{id}");
            }
            self.emit("stratify/missing_covariates.csv", missing)?;
            for (value, mask) in found.segments {
                segments.push((
                    "covariates",
                    format!("category_{}", file_safe(&value)),
                    mask,
                ));
            }
        }

        let n = ids.len();
        let mut docs = Vec::new();
        let mut bars: BTreeMap<&str, Vec<BarGroup>> = BTreeMap::new();
        let mut halfpies: Vec<(f64, ChartDocument)> = Vec::new();
        for (family, name, mask) in &segments {
            let dist = cluster_distribution(&labels, k, mask)?;
            let profile = segment_question_profile(self.matrix()?, mask, settings.alpha)?;
            self.emit(
                format!("stratify/distribution_{name}.csv"),
                csv_text(|b| write_distribution_csv(name, &dist, b)),
            )?;
            self.emit(
                format!("stratify/profile_{name}.csv"),
                csv_text(|b| write_profile_csv(name, &profile, b)),
            )?;
            let family_bars = bars.entry(*family).or_insert_with(|| {
                vec![BarGroup {
                    label: "everyone".into(),
                    values: dist.clusters.iter().map(|c| c.overall_share).collect(),
                }]
            });
            family_bars.push(BarGroup {
                label: name.clone(),
                values: dist.clusters.iter().map(|c| c.share).collect(),
            });
            if profile.segment_size == n {
                continue;
            }
            for q in &profile.questions {
                let Some(test) = q.test.as_ref().filter(|t| t.significant) else {
                    continue;
                };
                let cond = ConditionalStats::from_counts(
                    q.code.clone(),
                    name.clone(),
                    n,
                    profile.segment_size,
                    q.yes_overall,
                    q.yes_segment,
                )?;
                let spec = HalfPieSpec {
                    margin: charts.halfpie_margin,
                    ..HalfPieSpec::new(cond, settings.alpha)
                };
                let mut doc = render_halfpie(&spec)?;
                doc.name = format!("halfpie_{}_{}.svg", name, file_safe(&q.code));
                halfpies.push((test.z.abs(), doc));
            }
        }
        let clusters: Vec<String> = (0..k).map(|c| c.to_string()).collect();
        for (family, series) in &bars {
            docs.push(render_segment_bars(
                &format!("cluster_shares_{family}.svg"),
                "Share of each segment per cluster",
                &clusters,
                series,
            )?);
        }
        halfpies.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.name.cmp(&b.1.name)));
        docs.extend(
            halfpies
                .into_iter()
                .take(charts.max_halfpies)
                .map(|(_, d)| d),
        );
        self.emit_gallery("stratify/charts", "Segments", docs)
    }

    pub fn run_synth(&mut self) -> Result<()> {
        let path = Self::required(&self.config.paths.spec, "spec")?;
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let spec: MixtureSpec = serde_json::from_str(&text).map_err(|e| {
            CliError::Config(format!(
                "{}: line {} column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })?;
        let (matrix, labels) = synth_mixture(&spec)?;
        fs::create_dir_all(&self.out).map_err(|source| CliError::Write {
            path: self.out.clone(),
            source,
        })?;
        save_matrix(&matrix, self.out.join("matrix.csv"))?;
        save_schema(matrix.questions(), self.out.join("schema.json"))?;
        self.written.push("matrix.csv".into());
        self.written.push("schema.json".into());
        let mut text = String::from("id,component\n");
        for (id, l) in matrix.respondent_ids().iter().zip(&labels) {
            let _ = writeln!(text, "{id},{l}");
        }
        self.emit("labels.csv", text)
    }

    pub fn run_pipeline(&mut self) -> Result<()> {
        self.run_validate()?;
        self.run_stats()?;
        self.run_cluster_questions()?;
        self.run_cluster_respondents()?;
        self.run_sweep()?;
        self.run_monothetic()?;
        self.run_rules()?;
        self.run_charts()?;
        if self.has_segments() {
            self.run_stratify()?;
        }
        Ok(())
    }
}
