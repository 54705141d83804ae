use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use binquest_core::corpus::{
    save_matrix, save_schema, synth_mixture, MixtureSpec, QuestionMeta, ResponseMatrix,
};
use binquest_core::rng::SeededRng;
use tempfile::TempDir;

fn binquest(args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_binquest"));
    cmd.args(args).env_remove("BINQUEST_SEED");
    if let Some(s) = env_seed {
        cmd.env("BINQUEST_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Two opposite profiles over 12 answers, 200 rows.
fn two_component_spec(seed: u64) -> MixtureSpec {
    MixtureSpec {
        weights: vec![0.5, 0.5],
        probs: vec![
            (0..12)
                .map(|j| if j % 2 == 0 { 0.9 } else { 0.1 })
                .collect(),
            (0..12)
                .map(|j| if j % 2 == 0 { 0.1 } else { 0.9 })
                .collect(),
        ],
        n_rows: 200,
        seed,
        groups: None,
    }
}

struct Corpus {
    dir: TempDir,
    matrix: PathBuf,
    schema: PathBuf,
    truth: Vec<usize>,
}

fn write_corpus(matrix: &ResponseMatrix, truth: Vec<usize>) -> Corpus {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("matrix.csv");
    let sc = dir.path().join("schema.json");
    save_matrix(matrix, &m).unwrap();
    save_schema(matrix.questions(), &sc).unwrap();
    Corpus {
        dir,
        matrix: m,
        schema: sc,
        truth,
    }
}

fn two_component_corpus() -> Corpus {
    let (m, truth) = synth_mixture(&two_component_spec(21)).unwrap();
    write_corpus(&m, truth)
}

fn read_labels(path: &Path) -> Vec<usize> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect()
}

/// Fraction of rows whose label matches the truth under the best mapping.
fn agreement(labels: &[usize], truth: &[usize], k: usize) -> f64 {
    fn perms(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(k - 1) {
            for i in 0..=p.len() {
                let mut q = p.clone();
                q.insert(i, k - 1);
                out.push(q);
            }
        }
        out
    }
    perms(k)
        .iter()
        .map(|p| {
            labels
                .iter()
                .zip(truth)
                .filter(|(&l, &t)| p[l] == t)
                .count()
        })
        .max()
        .unwrap() as f64
        / labels.len() as f64
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn pipeline_args<'a>(c: &'a Corpus, out: &'a Path, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec![
        "pipeline",
        "--matrix",
        s(&c.matrix),
        "--schema",
        s(&c.schema),
        "--out",
        s(out),
        "--k-respondents",
        "2",
        "--restarts",
        "40",
        "--k-max",
        "5",
    ];
    args.extend_from_slice(extra);
    args
}

const DECLARED: [&str; 16] = [
    "validation.txt",
    "stats.csv",
    "question_clusters.json",
    "representatives.csv",
    "respondent_clusters.json",
    "respondent_labels.csv",
    "dimensionality.csv",
    "sweep.csv",
    "monothetic.json",
    "monothetic.txt",
    "rules.csv",
    "rules.txt",
    "mining_summary.json",
    "charts/grapeshape_cluster_0.svg",
    "charts/grapeshape_cluster_1.svg",
    "charts/index.html",
];

#[test]
fn synth_writes_matrix_schema_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        serde_json::to_string(&two_component_spec(3)).unwrap(),
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = binquest(&["synth", "--spec", s(&spec), "--out", s(&out)], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["matrix.csv", "schema.json", "labels.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let (expected, truth) = synth_mixture(&two_component_spec(3)).unwrap();
    let mut want = Vec::new();
    binquest_core::corpus::write_matrix(&expected, &mut want).unwrap();
    assert_eq!(fs::read(out.join("matrix.csv")).unwrap(), want);
    assert_eq!(read_labels(&out.join("labels.csv")), truth);
}

#[test]
fn pipeline_emits_every_artifact_and_recovers_components() {
    let c = two_component_corpus();
    let out = c.dir.path().join("out");
    let o = binquest(&pipeline_args(&c, &out, &[]), None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in DECLARED {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let labels = read_labels(&out.join("respondent_labels.csv"));
    assert!(agreement(&labels, &c.truth, 2) >= 0.99);
    let index = fs::read_to_string(out.join("charts/index.html")).unwrap();
    assert!(index.contains("grapeshape_cluster_1.svg"));
}

#[test]
fn runs_are_byte_identical_across_runs_and_thread_counts() {
    let c = two_component_corpus();
    let a = c.dir.path().join("a");
    let b = c.dir.path().join("b");
    let t = c.dir.path().join("t");
    assert!(binquest(&pipeline_args(&c, &a, &["--seed", "4"]), None)
        .status
        .success());
    assert!(binquest(&pipeline_args(&c, &b, &["--seed", "4"]), None)
        .status
        .success());
    assert!(binquest(
        &pipeline_args(&c, &t, &["--seed", "4", "--threads", "3"]),
        None
    )
    .status
    .success());
    let first = tree(&a);
    assert!(first.len() >= DECLARED.len());
    assert_eq!(first, tree(&b));
    assert_eq!(first, tree(&t));
}

#[test]
fn seed_precedence_is_flag_then_env_then_file() {
    let c = two_component_corpus();
    let cfg = c.dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"seed": 1}"#).unwrap();
    let run = |name: &str, extra: &[&str], env: Option<&str>| {
        let out = c.dir.path().join(name);
        let mut args = vec![
            "cluster-questions",
            "--config",
            s(&cfg),
            "--matrix",
            s(&c.matrix),
            "--schema",
            s(&c.schema),
            "--out",
            s(&out),
            "--restarts",
            "3",
            "--k-questions",
            "4",
        ];
        args.extend_from_slice(extra);
        let o = binquest(&args, env);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = fs::read_to_string(out.join("question_clusters.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["model"]["config"]["seed"].as_u64().unwrap()
    };
    assert_eq!(run("file", &[], None), 1);
    assert_eq!(run("env", &[], Some("77")), 77);
    assert_eq!(run("flag", &["--seed", "9"], Some("77")), 9);
}

#[test]
fn restarts_flag_overrides_file_value() {
    let c = two_component_corpus();
    let cfg = c.dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"questions": {"restarts": 2000}}"#).unwrap();
    let out = c.dir.path().join("out");
    let o = binquest(
        &[
            "cluster-questions",
            "--config",
            s(&cfg),
            "--matrix",
            s(&c.matrix),
            "--schema",
            s(&c.schema),
            "--out",
            s(&out),
            "--restarts",
            "10",
        ],
        None,
    );
    assert!(o.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("question_clusters.json")).unwrap())
            .unwrap();
    assert_eq!(v["model"]["config"]["restarts"], 10);
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    let o = binquest(&["frobnicate"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\n  \"seed\": 1,\n  \"nope\": true\n}").unwrap();
    let o = binquest(&["stats", "--config", s(&cfg)], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let o = binquest(&["stats"], None);
    assert_eq!(o.status.code(), Some(2));

    let o = binquest(
        &["stats", "--matrix", "m.csv", "--schema", "s.json"],
        Some("not-a-number"),
    );
    assert_eq!(o.status.code(), Some(2));

    let c = two_component_corpus();
    let out = c.dir.path().join("out");
    let o = binquest(
        &[
            "cluster-respondents",
            "--matrix",
            s(&c.matrix),
            "--schema",
            s(&c.schema),
            "--out",
            s(&out),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(2), "respondent k has no default");
}

#[test]
fn data_errors_exit_with_three_and_are_reported() {
    let c = two_component_corpus();
    let text = fs::read_to_string(&c.matrix).unwrap();
    let broken: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 3 {
                l.replacen(",1", ",2", 1).replacen(",0", ",2", 1)
            } else {
                l.to_string()
            }
        })
        .collect();
    fs::write(&c.matrix, broken.join("\n") + "\n").unwrap();
    let out = c.dir.path().join("out");
    let o = binquest(
        &[
            "validate",
            "--matrix",
            s(&c.matrix),
            "--schema",
            s(&c.schema),
            "--out",
            s(&out),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(3));
    let report = fs::read_to_string(out.join("validation.txt")).unwrap();
    assert!(report.starts_with("ok: false"));
    assert!(report.contains("row 3"), "{report}");
}

#[test]
fn stratify_reports_segments_and_missing_covariates() {
    let c = two_component_corpus();
    let ids: Vec<String> = (1..=200).map(|i| format!("r{i}")).collect();
    let scores = c.dir.path().join("scores.csv");
    let mut text = String::from("id,return\n");
    for (i, id) in ids.iter().enumerate() {
        // component 1 scores higher
        text.push_str(&format!(
            "{id},{}\n",
            c.truth[i] as f64 * 10.0 + i as f64 / 1000.0
        ));
    }
    fs::write(&scores, text).unwrap();
    let cov = c.dir.path().join("gender.csv");
    let mut text = String::from("id,gender\n");
    for id in ids.iter().skip(5) {
        text.push_str(&format!(
            "{id},{}\n",
            if id.len() % 2 == 0 { "F" } else { "M" }
        ));
    }
    fs::write(&cov, text).unwrap();
    let out = c.dir.path().join("out");
    let o = binquest(
        &[
            "stratify",
            "--matrix",
            s(&c.matrix),
            "--schema",
            s(&c.schema),
            "--out",
            s(&out),
            "--scores",
            s(&scores),
            "--covariates",
            s(&cov),
            "--k-respondents",
            "2",
            "--restarts",
            "20",
        ],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "stratify/distribution_top5.csv",
        "stratify/profile_top15.csv",
        "stratify/distribution_category_F.csv",
        "stratify/profile_category_M.csv",
        "stratify/missing_covariates.csv",
        "stratify/charts/cluster_shares_scores.svg",
        "stratify/charts/index.html",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let missing = fs::read_to_string(out.join("stratify/missing_covariates.csv")).unwrap();
    assert_eq!(missing.lines().count(), 6);
    // the top 5% all come from one component, so one cluster holds every member
    let dist = fs::read_to_string(out.join("stratify/distribution_top5.csv")).unwrap();
    let shares: Vec<f64> = dist
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert!(shares.contains(&1.0), "{dist}");
}

/// Rows drawn from three profiles over four latent answers, each answer
/// repeated as five near-copies with 3% flip noise.
fn redundant_corpus() -> (ResponseMatrix, Vec<usize>) {
    let base = MixtureSpec {
        weights: vec![0.4, 0.3, 0.3],
        probs: vec![
            vec![0.9, 0.1, 0.8, 0.2],
            vec![0.1, 0.9, 0.8, 0.1],
            vec![0.2, 0.2, 0.1, 0.9],
        ],
        n_rows: 300,
        seed: 8,
        groups: None,
    };
    let (m, truth) = synth_mixture(&base).unwrap();
    let mut rng = SeededRng::new(99);
    let copies = 5;
    let rows: Vec<Vec<u8>> = m
        .rows()
        .map(|r| {
            r.iter()
                .flat_map(|&v| std::iter::repeat_n(v, copies).collect::<Vec<_>>())
                .map(|v| if rng.next_f64() < 0.03 { 1 - v } else { v })
                .collect()
        })
        .collect();
    let questions = (0..4 * copies)
        .map(|j| {
            QuestionMeta::new(
                format!("Q{}{}", j / copies + 1, (b'A' + (j % copies) as u8) as char),
                (j / copies + 1) as u32,
                "copy",
            )
        })
        .collect();
    let ids = m.respondent_ids().to_vec();
    (
        ResponseMatrix::from_rows(ids, questions, &rows).unwrap(),
        truth,
    )
}

#[test]
fn representative_columns_lower_inertia_per_column() {
    let (m, truth) = redundant_corpus();
    let c = write_corpus(&m, truth);
    let out = c.dir.path().join("out");
    let o = binquest(
        &[
            "cluster-respondents",
            "--matrix",
            s(&c.matrix),
            "--schema",
            s(&c.schema),
            "--out",
            s(&out),
            "--k-questions",
            "4",
            "--k-respondents",
            "3",
            "--restarts",
            "100",
        ],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dims = fs::read_to_string(out.join("dimensionality.csv")).unwrap();
    let per_col: BTreeMap<String, f64> = dims
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[3].parse().unwrap())
        })
        .collect();
    assert!(per_col["reduced"] <= per_col["full"], "{dims}");
    let o = binquest(
        &[
            "cluster-questions",
            "--matrix",
            s(&c.matrix),
            "--schema",
            s(&c.schema),
            "--out",
            s(&out),
            "--k-questions",
            "4",
            "--restarts",
            "100",
        ],
        None,
    );
    assert!(o.status.success());
    let reps = fs::read_to_string(out.join("representatives.csv")).unwrap();
    // every answer cluster is one latent answer's copies
    for line in reps.lines().skip(1) {
        let members = line.split(',').nth(3).unwrap();
        let prefixes: std::collections::BTreeSet<&str> =
            members.split(' ').map(|c| &c[..2]).collect();
        assert_eq!(prefixes.len(), 1, "{reps}");
    }
}
