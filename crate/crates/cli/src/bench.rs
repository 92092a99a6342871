//! Leaderboard runs over a directory of labeled series.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mmpad::metrics::{rank_table, MethodSummary};
use mmpad::{evaluate, Aggregation, Budget, DetectorConfig, EvalReport, Metric, Threads, Window};
use serde::Serialize;

use crate::commands::{data_err, resolve_eval_window};
use crate::{BenchArgs, CliError};

/// Metric used for the summary rows.
const RANK_METRIC: Metric = Metric::VusPr;

#[derive(Debug, Serialize)]
pub struct BenchReport {
    /// dataset → method → metrics (or the error that prevented them).
    pub per_dataset: BTreeMap<String, BTreeMap<String, Cell>>,
    pub summary: Vec<MethodSummary>,
    /// Datasets on which every method produced metrics; the summary covers only these.
    pub ranked_datasets: Vec<String>,
    pub config_echo: ConfigEcho,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Scored(EvalReport),
    Failed { error: String },
}

#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub data_dir: PathBuf,
    pub datasets: Vec<String>,
    pub configs: BTreeMap<String, DetectorConfig>,
    pub external_methods: Vec<String>,
    pub eval_window: String,
    pub rank_metric: Metric,
}

/// Parses `name key=value ...` lines; blank lines and `#` comments are skipped.
pub fn parse_configs(
    text: &str,
    threads: Threads,
) -> Result<BTreeMap<String, DetectorConfig>, String> {
    let mut out = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = idx + 1;
        let mut parts = line.split_whitespace();
        let name = parts.next().expect("non-empty line");
        if name.contains('=') {
            return Err(format!(
                "line {lineno}: configuration name missing before {name:?}"
            ));
        }
        let mut cfg = DetectorConfig {
            threads,
            ..DetectorConfig::default()
        };
        for kv in parts {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| format!("line {lineno}: expected key=value, got {kv:?}"))?;
            let bad = |e: &dyn std::fmt::Display| format!("line {lineno}: {key}: {e}");
            match key {
                "window" => cfg.window = value.parse::<Window>().map_err(|e| bad(&e))?,
                "k" => cfg.k = value.parse().map_err(|e| bad(&e))?,
                "dim" => cfg.d_star = value.parse().map_err(|e| bad(&e))?,
                "agg" => cfg.aggregation = value.parse::<Aggregation>().map_err(|e| bad(&e))?,
                "budget" => cfg.budget = value.parse::<Budget>().map_err(|e| bad(&e))?,
                "normalize" => cfg.normalize = value.parse().map_err(|e| bad(&e))?,
                "threads" => cfg.threads = value.parse::<Threads>().map_err(|e| bad(&e))?,
                _ => return Err(format!("line {lineno}: unknown key {key:?}")),
            }
        }
        cfg.validate().map_err(|e| format!("line {lineno}: {e}"))?;
        if out.insert(name.to_owned(), cfg).is_some() {
            return Err(format!("line {lineno}: duplicate configuration {name:?}"));
        }
    }
    if out.is_empty() {
        return Err("no configurations".to_owned());
    }
    Ok(out)
}

fn csv_files(dir: &Path) -> std::io::Result<Vec<(String, PathBuf)>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "csv") {
            let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
            files.push((stem, path));
        }
    }
    files.sort();
    Ok(files)
}

fn subdirectories(dir: &Path) -> std::io::Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        if entry.path().is_dir() {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();
    Ok(names)
}

pub(crate) fn run(args: &BenchArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| data_err(format!("--config {}", args.config.display()), e))?;
    let configs = parse_configs(&text, args.threads)
        .map_err(|e| CliError::Usage(format!("--config {}: {e}", args.config.display())))?;

    let datasets = csv_files(&args.data_dir)
        .map_err(|e| data_err(format!("--data-dir {}", args.data_dir.display()), e))?;
    if datasets.is_empty() {
        return Err(CliError::Data(format!(
            "--data-dir {}: no .csv files",
            args.data_dir.display()
        )));
    }

    let external = match &args.external_scores {
        Some(dir) => subdirectories(dir)
            .map_err(|e| data_err(format!("--external-scores {}", dir.display()), e))?,
        None => Vec::new(),
    };
    if let Some(clash) = external.iter().find(|m| configs.contains_key(*m)) {
        return Err(CliError::Usage(format!(
            "--external-scores: method {clash:?} also names a configuration"
        )));
    }

    let mut per_dataset = BTreeMap::new();
    for (name, path) in &datasets {
        eprintln!("bench: {name}");
        let row = bench_dataset(path, &configs, &external, args);
        per_dataset.insert(name.clone(), row);
    }

    let methods: Vec<String> = configs
        .keys()
        .cloned()
        .chain(external.iter().cloned())
        .collect();
    let ranked: Vec<String> = per_dataset
        .iter()
        .filter(|(_, row)| row.values().all(|c| matches!(c, Cell::Scored(_))))
        .map(|(d, _)| d.clone())
        .collect();
    let mut table: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for method in &methods {
        let scores = table.entry(method.clone()).or_default();
        for d in &ranked {
            if let Cell::Scored(r) = &per_dataset[d][method] {
                scores.insert(
                    d.clone(),
                    r.get(RANK_METRIC).expect("rank metric evaluated"),
                );
            }
        }
    }
    let summary = if ranked.is_empty() {
        Vec::new()
    } else {
        rank_table(&table).map_err(|e| data_err("ranking", e))?
    };

    let report = BenchReport {
        per_dataset,
        summary,
        ranked_datasets: ranked,
        config_echo: ConfigEcho {
            data_dir: args.data_dir.clone(),
            datasets: datasets.iter().map(|(n, _)| n.clone()).collect(),
            configs,
            external_methods: external,
            eval_window: args.eval_window.to_string(),
            rank_metric: RANK_METRIC,
        },
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    std::fs::write(&args.report, json)
        .map_err(|e| data_err(format!("--report {}", args.report.display()), e))
}

fn bench_dataset(
    path: &Path,
    configs: &BTreeMap<String, DetectorConfig>,
    external: &[String],
    args: &BenchArgs,
) -> BTreeMap<String, Cell> {
    let failed_everywhere = |msg: String| {
        configs
            .keys()
            .chain(external)
            .map(|m| (m.clone(), Cell::Failed { error: msg.clone() }))
            .collect()
    };
    let ts = match mmpad::read_csv(path) {
        Ok(ts) => ts,
        Err(e) => return failed_everywhere(e.to_string()),
    };
    let Some(labels) = ts.labels() else {
        return failed_everywhere("no `Label` column".to_owned());
    };
    let window = resolve_eval_window(&ts, args.eval_window);
    let cell = |scores: mmpad::Result<mmpad::ScoreVector>| -> Cell {
        let result = scores.and_then(|s| {
            if s.len() != labels.len() {
                return Err(mmpad::Error::LengthMismatch {
                    what: "scores",
                    expected: labels.len(),
                    got: s.len(),
                });
            }
            evaluate(s.as_slice(), labels, window, &Metric::ALL)
        });
        match result {
            Ok(r) => Cell::Scored(r),
            Err(e) => Cell::Failed {
                error: e.to_string(),
            },
        }
    };

    let mut row = BTreeMap::new();
    for (name, cfg) in configs {
        row.insert(name.clone(), cell(mmpad::score(&ts, cfg)));
    }
    if let Some(dir) = &args.external_scores {
        let file = format!("{}.csv", path.file_stem().unwrap().to_string_lossy());
        for method in external {
            row.insert(
                method.clone(),
                cell(mmpad::read_scores(dir.join(method).join(&file))),
            );
        }
    }
    row
}
