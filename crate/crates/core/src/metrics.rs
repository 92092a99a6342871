//! Threshold-free evaluation: AUC-ROC, AUC-PR and their range-aware
//! volume variants, plus leaderboard ranking.
//!
//! Labels may be fractional; a position with label `l` counts as a
//! positive of weight `l` and a negative of weight `1 - l`. Tied scores
//! form a single threshold step.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "auc-pr")]
    AucPr,
    #[serde(rename = "auc-roc")]
    AucRoc,
    #[serde(rename = "vus-pr")]
    VusPr,
    #[serde(rename = "vus-roc")]
    VusRoc,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::AucPr, Metric::AucRoc, Metric::VusPr, Metric::VusRoc];

    pub fn name(self) -> &'static str {
        match self {
            Metric::AucPr => "auc-pr",
            Metric::AucRoc => "auc-roc",
            Metric::VusPr => "vus-pr",
            Metric::VusRoc => "vus-roc",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::param(format!("unknown metric {s:?}")))
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Score order shared by every label vector evaluated against the same
/// scores.
struct ScoreOrder {
    /// Positions sorted by descending score.
    order: Vec<usize>,
    /// End (exclusive) of each tie group within `order`.
    group_ends: Vec<usize>,
}

impl ScoreOrder {
    fn new(scores: &[f64]) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::UndefinedMetric("empty score vector".into()));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::param(format!("score at position {i} is not finite")));
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let mut group_ends = Vec::new();
        for w in 1..order.len() {
            if scores[order[w]] != scores[order[w - 1]] {
                group_ends.push(w);
            }
        }
        group_ends.push(order.len());
        Ok(Self { order, group_ends })
    }

    /// Cumulative `(tp, fp)` weight after each tie group, plus totals.
    fn steps(&self, labels: &[f64]) -> (Vec<(f64, f64)>, f64, f64) {
        let mut steps = Vec::with_capacity(self.group_ends.len());
        let (mut tp, mut fp) = (0.0, 0.0);
        let mut start = 0;
        for &end in &self.group_ends {
            for &i in &self.order[start..end] {
                tp += labels[i];
                fp += 1.0 - labels[i];
            }
            steps.push((tp, fp));
            start = end;
        }
        (steps, tp, fp)
    }

    fn roc(&self, labels: &[f64]) -> Result<f64> {
        let (steps, pos, neg) = self.steps(labels);
        if pos <= 0.0 || neg <= 0.0 {
            return Err(Error::UndefinedMetric(
                "AUC-ROC needs both positive and negative weight".into(),
            ));
        }
        let mut area = 0.0;
        let (mut tp_prev, mut fp_prev) = (0.0, 0.0);
        for (tp, fp) in steps {
            area += (fp - fp_prev) * (tp + tp_prev) / 2.0;
            tp_prev = tp;
            fp_prev = fp;
        }
        Ok(area / (pos * neg))
    }

    fn pr(&self, labels: &[f64]) -> Result<f64> {
        let (steps, pos, _) = self.steps(labels);
        if pos <= 0.0 {
            return Err(Error::UndefinedMetric(
                "AUC-PR needs positive label weight".into(),
            ));
        }
        let mut ap = 0.0;
        let mut tp_prev = 0.0;
        for (tp, fp) in steps {
            if tp > tp_prev {
                ap += (tp - tp_prev) / pos * (tp / (tp + fp));
            }
            tp_prev = tp;
        }
        Ok(ap)
    }
}

fn check_labels(scores: &[f64], labels: &[f64]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "labels",
            expected: scores.len(),
            got: labels.len(),
        });
    }
    if let Some(i) = labels.iter().position(|l| !(0.0..=1.0).contains(l)) {
        return Err(Error::param(format!(
            "label at position {i} is outside [0, 1]: {}",
            labels[i]
        )));
    }
    Ok(())
}

/// Area under the ROC curve by exact trapezoidal integration.
pub fn auc_roc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    check_labels(scores, labels)?;
    ScoreOrder::new(scores)?.roc(labels)
}

/// Average precision: recall increments times precision, summed over
/// descending thresholds.
pub fn auc_pr(scores: &[f64], labels: &[f64]) -> Result<f64> {
    check_labels(scores, labels)?;
    ScoreOrder::new(scores)?.pr(labels)
}

/// Distance from every position to the nearest anomalous one.
fn distance_to_anomaly(labels: &[u8]) -> Vec<usize> {
    let n = labels.len();
    let mut dist = vec![usize::MAX; n];
    let mut last: Option<usize> = None;
    for i in 0..n {
        if labels[i] != 0 {
            last = Some(i);
        }
        if let Some(a) = last {
            dist[i] = i - a;
        }
    }
    last = None;
    for i in (0..n).rev() {
        if labels[i] != 0 {
            last = Some(i);
        }
        if let Some(a) = last {
            dist[i] = dist[i].min(a - i);
        }
    }
    dist
}

fn ramp(dist: &[usize], w: usize) -> Vec<f64> {
    dist.iter()
        .map(|&t| match t {
            0 => 1.0,
            t if t <= w => 1.0 - t as f64 / (w + 1) as f64,
            _ => 0.0,
        })
        .collect()
}

/// Extends each anomaly segment with linear ramps of width `w`: offset
/// `t` in `[1, w]` outside a segment gets `1 - t / (w + 1)`, overlapping
/// ramps taking the maximum.
pub fn smooth_labels(labels: &[u8], w: usize) -> Vec<f64> {
    ramp(&distance_to_anomaly(labels), w)
}

fn volume(
    scores: &[f64],
    labels: &[u8],
    ell: usize,
    area: impl Fn(&ScoreOrder, &[f64]) -> Result<f64>,
) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "labels",
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let order = ScoreOrder::new(scores)?;
    let dist = distance_to_anomaly(labels);
    let ell = ell.min(scores.len());
    let mut sum = 0.0;
    for w in 0..=ell {
        sum += area(&order, &ramp(&dist, w))?;
    }
    Ok(sum / (ell + 1) as f64)
}

/// Mean AUC-PR over buffer widths `0..=ell` (capped at `n`).
pub fn vus_pr(scores: &[f64], labels: &[u8], ell: usize) -> Result<f64> {
    volume(scores, labels, ell, ScoreOrder::pr)
}

/// Mean AUC-ROC over buffer widths `0..=ell` (capped at `n`).
pub fn vus_roc(scores: &[f64], labels: &[u8], ell: usize) -> Result<f64> {
    volume(scores, labels, ell, ScoreOrder::roc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metrics: BTreeMap<Metric, f64>,
    pub eval_window: usize,
}

impl EvalReport {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        self.metrics.get(&metric).copied()
    }

    /// One `name=value` line per metric, preceded by the window.
    pub fn to_text(&self) -> String {
        let mut out = format!("eval_window={}\n", self.eval_window);
        for (m, v) in &self.metrics {
            out.push_str(&format!("{}={v}\n", m.name()));
        }
        out
    }
}

/// Evaluates binary labels against scores.
pub fn evaluate(
    scores: &[f64],
    labels: &[u8],
    eval_window: usize,
    metrics: &[Metric],
) -> Result<EvalReport> {
    let binary: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let mut out = BTreeMap::new();
    for &m in metrics {
        let v = match m {
            Metric::AucPr => auc_pr(scores, &binary)?,
            Metric::AucRoc => auc_roc(scores, &binary)?,
            Metric::VusPr => vus_pr(scores, labels, eval_window)?,
            Metric::VusRoc => vus_roc(scores, labels, eval_window)?,
        };
        out.insert(m, v);
    }
    Ok(EvalReport {
        metrics: out,
        eval_window,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub mean_score: f64,
    pub mean_rank: f64,
}

/// Per-dataset ranks (1 = best, ties averaged) and their means.
///
/// `per_method` maps method → dataset → score. Methods come back in name
/// order.
pub fn rank_table(
    per_method: &BTreeMap<String, BTreeMap<String, f64>>,
) -> Result<Vec<MethodSummary>> {
    let datasets: BTreeSet<&String> = per_method.values().flat_map(|m| m.keys()).collect();
    for (method, scores) in per_method {
        if let Some(missing) = datasets.iter().find(|d| !scores.contains_key(**d)) {
            return Err(Error::MissingData {
                method: method.clone(),
                dataset: (*missing).clone(),
            });
        }
    }
    let methods: Vec<&String> = per_method.keys().collect();
    let mut rank_sums = vec![0.0; methods.len()];
    for dataset in &datasets {
        let scores: Vec<f64> = methods.iter().map(|m| per_method[*m][*dataset]).collect();
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        let mut start = 0;
        while start < order.len() {
            let mut end = start + 1;
            while end < order.len() && scores[order[end]] == scores[order[start]] {
                end += 1;
            }
            // positions start..end hold ranks start+1..=end
            let rank = (start + 1 + end) as f64 / 2.0;
            for &m in &order[start..end] {
                rank_sums[m] += rank;
            }
            start = end;
        }
    }
    let n_data = datasets.len().max(1) as f64;
    Ok(methods
        .iter()
        .zip(rank_sums)
        .map(|(m, rank_sum)| MethodSummary {
            method: (*m).clone(),
            mean_score: per_method[*m].values().sum::<f64>() / n_data,
            mean_rank: rank_sum / n_data,
        })
        .collect())
}
