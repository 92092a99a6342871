//! Acceptance criteria 1-9.
//!
//! Runs without the libtest harness: criteria execute sequentially, so the
//! timing checks are not disturbed by parallel tests, and each prints one
//! PASS/FAIL line. The process exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use mmpad::distance::{
    compute_sliding_stats, streamed_rows, znorm_distance_pair_oracle, znorm_distance_row,
};
use mmpad::knn::{exclusion_length, find_knn_row};
use mmpad::metrics::{auc_pr, auc_roc, vus_pr};
use mmpad::oracle::{brute_force_pipeline, knn_repeated_min, postprocess_literal};
use mmpad::postprocess::{reduce_profile, smooth};
use mmpad::synth::{generate, SynthConfig};
use mmpad::{
    score, write_scores, Aggregation, Budget, DetectorConfig, ProfileTensor, Threads, TimeSeries,
    Window,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn noisy_series(rng: &mut StdRng, n: usize, d: usize) -> TimeSeries {
    let channels = (0..d)
        .map(|_| {
            let period = rng.gen_range(8.0..60.0);
            let amp = rng.gen_range(0.2..3.0);
            let offset = rng.gen_range(-50.0..50.0);
            let noise = rng.gen_range(0.05..1.0);
            let mut walk = 0.0;
            (0..n)
                .map(|t| {
                    walk += rng.gen_range(-0.05..0.05);
                    offset
                        + walk
                        + amp * (std::f64::consts::TAU * t as f64 / period).sin()
                        + noise * rng.gen_range(-1.0..1.0)
                })
                .collect()
        })
        .collect();
    TimeSeries::from_channels(channels).unwrap()
}

// 1 -----------------------------------------------------------------------

fn knn_kernel() -> Outcome {
    let mut rng = StdRng::seed_from_u64(101);
    let start = Instant::now();
    let (mut with_dups, mut mismatches) = (0, 0);
    for r in 0..500 {
        let n_ref = rng.gen_range(50..=2000);
        let k = rng.gen_range(1..=15);
        let ell = rng.gen_range(1..=50);
        let dup_row = r % 3 == 0;
        let mut row: Vec<f64> = if dup_row {
            // few distinct levels, so many exact ties
            let levels = rng.gen_range(2..20);
            (0..n_ref)
                .map(|_| rng.gen_range(0..levels) as f64 * 0.25)
                .collect()
        } else {
            (0..n_ref).map(|_| rng.gen_range(0.0..10.0)).collect()
        };
        if dup_row || rng.gen_bool(0.2) {
            with_dups += 1;
            for _ in 0..n_ref / 10 {
                let (a, b) = (rng.gen_range(0..n_ref), rng.gen_range(0..n_ref));
                row[a] = row[b];
            }
        }
        // masked query zone
        let q = rng.gen_range(0..n_ref);
        for v in &mut row[q.saturating_sub(ell)..(q + ell + 1).min(n_ref)] {
            *v = f64::INFINITY;
        }
        let fast = find_knn_row(&row, k, ell).unwrap();
        let slow = knn_repeated_min(&row, k, ell);
        let same_values = fast
            .values
            .iter()
            .zip(&slow.values)
            .all(|(a, b)| a.to_bits() == b.to_bits());
        if fast.indices != slow.indices || !same_values {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    let dup_share = with_dups as f64 / 500.0;
    outcome(
        mismatches == 0 && dup_share >= 0.2 && elapsed < Duration::from_secs(10),
        format!(
            "500 rows, {:.0}% with duplicates, {mismatches} mismatches, {} (limit 10s)",
            dup_share * 100.0,
            secs(elapsed)
        ),
    )
}

// 2 -----------------------------------------------------------------------

fn close(a: f64, b: f64, rel: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= rel * b.abs().max(1.0)
}

fn distance_rows() -> Outcome {
    let mut rng = StdRng::seed_from_u64(202);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..100 {
        let m = rng.gen_range(4..=200);
        let n = rng.gen_range(2 * m..=1000.max(2 * m)).min(1000);
        let d = rng.gen_range(1..=4);
        let mut ts_channels = noisy_series(&mut rng, n, d).channels().to_vec();
        if rng.gen_bool(0.3) {
            // a flat stretch gives constant windows
            let c = rng.gen_range(0..d);
            let s = rng.gen_range(0..n - m);
            let level = ts_channels[c][s];
            for v in &mut ts_channels[c][s..(s + m + 5).min(n)] {
                *v = level;
            }
        }
        let ts = TimeSeries::from_channels(ts_channels).unwrap();
        let stats = compute_sliding_stats(&ts, m).unwrap();
        let n_sub = n - m + 1;
        let ell = exclusion_length(m);
        let i = rng.gen_range(0..n_sub);
        let from = rng.gen_range(0..=i);

        let direct = znorm_distance_row(&ts, &stats, i, false, ell).unwrap();
        let streamed = streamed_rows(&ts, &stats, from, i - from + 1, ell).unwrap();
        let streamed = streamed.last().unwrap();
        for c in 0..d {
            let x = ts.channel(c);
            for j in 0..n_sub {
                let want = znorm_distance_pair_oracle(&x[i..i + m], &x[j..j + m]).unwrap();
                let masked = i.abs_diff(j) <= ell;
                let got_d = direct.get(j, c);
                let got_s = streamed.get(j, c);
                let ok_s = if masked {
                    got_s == f64::INFINITY
                } else {
                    close(got_s, want, 1e-6)
                };
                if !close(got_d, want, 1e-6) || !ok_s {
                    failures += 1;
                }
                for got in [got_d, if masked { want } else { got_s }] {
                    worst = worst.max((got - want).abs() / want.abs().max(1.0));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures == 0 && elapsed < Duration::from_secs(30),
        format!(
            "100 cases, worst scaled error {worst:.2e} (tol 1e-6), {failures} failures, {} (limit 30s)",
            secs(elapsed)
        ),
    )
}

// 3 -----------------------------------------------------------------------

fn end_to_end() -> Outcome {
    let mut rng = StdRng::seed_from_u64(303);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for case in 0..50 {
        let n = rng.gen_range(40..=400);
        let d = rng.gen_range(1..=4);
        let ts = noisy_series(&mut rng, n, d);
        let window = if rng.gen_bool(0.2) {
            Window::Auto
        } else {
            Window::Fixed(rng.gen_range(3..=(n / 4).max(3)))
        };
        let d_star = if rng.gen_bool(0.5) {
            rng.gen_range(1..=d) as f64
        } else {
            rng.gen_range(0.05..0.95)
        };
        let cfg = DetectorConfig {
            window,
            k: rng.gen_range(1..=5),
            d_star,
            aggregation: if case % 2 == 0 {
                Aggregation::Pre
            } else {
                Aggregation::Post
            },
            budget: Budget::None,
            normalize: rng.gen_bool(0.8),
            threads: Threads::Auto,
        };
        let slow = brute_force_pipeline(&ts, &cfg);
        let fast = score(&ts, &cfg);
        match (fast, slow) {
            (Ok(f), Ok(s)) => {
                let err = f
                    .as_slice()
                    .iter()
                    .zip(s.as_slice())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                worst = worst.max(err);
                if f.len() != n || err > 1e-9 {
                    failures.push(format!("case {case}: error {err:.2e}"));
                }
            }
            (Err(a), Err(b)) if a.to_string() == b.to_string() => {}
            (f, s) => failures.push(format!(
                "case {case}: fast {:?} vs oracle {:?}",
                f.err(),
                s.err()
            )),
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures.is_empty() && elapsed < Duration::from_secs(120),
        format!(
            "50 configs, max abs error {worst:.2e} (tol 1e-9), {} failures {:?}, {} (limit 120s)",
            failures.len(),
            failures,
            secs(elapsed)
        ),
    )
}

// 4 -----------------------------------------------------------------------

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()))
}

fn reduction_transcription() -> Outcome {
    let mut rng = StdRng::seed_from_u64(404);
    let mut failures = 0;
    let mut bad_len = 0;
    for _ in 0..200 {
        let n_sub = rng.gen_range(1..=80);
        let dims = rng.gen_range(1..=5);
        let k = rng.gen_range(1..=5);
        let m = rng.gen_range(1..=30);
        let p_missing = [0.0, 0.1, 0.4, 0.9][rng.gen_range(0..4)];
        let values: Vec<f64> = (0..n_sub * dims * k)
            .map(|_| {
                if rng.gen_bool(p_missing) {
                    f64::INFINITY
                } else {
                    rng.gen_range(0.0..20.0)
                }
            })
            .collect();
        let p = ProfileTensor::from_values(n_sub, dims, k, values).unwrap();
        let d_star = rng.gen_range(1..=dims);
        let k_star = rng.gen_range(1..=k);
        let fast = smooth(&reduce_profile(&p, d_star, k_star).unwrap(), m).unwrap();
        let literal = postprocess_literal(&p, d_star, k_star, m);
        if fast.len() != n_sub + m - 1 {
            bad_len += 1;
        }
        if !same_bits(fast.as_slice(), &literal) {
            failures += 1;
        }
    }
    outcome(
        failures == 0 && bad_len == 0,
        format!("200 tensors, {failures} mismatches, {bad_len} wrong lengths"),
    )
}

// 5 -----------------------------------------------------------------------

/// Generator settings for the K-of-N suite.
fn k_of_n_config(seed: u64) -> SynthConfig {
    SynthConfig {
        n: 2000,
        d: 8,
        k_anom: 1,
        anomaly_start: 1200,
        anomaly_len: 40,
        base_period: 20.0,
        noise_sigma: 0.8,
        seed,
    }
}

fn argmax(y: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in y.iter().enumerate() {
        if *v > y[best] {
            best = i;
        }
    }
    best
}

fn k_of_n() -> Outcome {
    let start = Instant::now();
    let (mut pre_inside, mut naive_outside) = (0, 0);
    for seed in 0..20 {
        let cfg = k_of_n_config(seed);
        let ts = generate(&cfg).unwrap();
        let pre_cfg = DetectorConfig::univariate();
        let pre = mmpad::detect(&ts, &pre_cfg).unwrap();
        let naive = score(
            &ts,
            &DetectorConfig {
                d_star: cfg.d as f64,
                ..pre_cfg
            },
        )
        .unwrap();
        let m = pre.window;
        let iv = cfg.interval();
        let inside = |t: usize| t + m >= iv.start && t < iv.end + m;
        if inside(argmax(pre.scores.as_slice())) {
            pre_inside += 1;
        }
        if !inside(argmax(naive.as_slice())) {
            naive_outside += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        pre_inside >= 18 && naive_outside >= 10 && elapsed < Duration::from_secs(60),
        format!(
            "pre-sorting peak inside {pre_inside}/20 (need 18), all-dimension peak outside {naive_outside}/20 (need 10), {} (limit 60s)",
            secs(elapsed)
        ),
    )
}

// 6 -----------------------------------------------------------------------

fn roc_all_pairs(scores: &[f64], labels: &[f64]) -> f64 {
    let (mut num, mut pos, mut neg) = (0.0, 0.0, 0.0);
    for i in 0..scores.len() {
        pos += labels[i];
        neg += 1.0 - labels[i];
        for j in 0..scores.len() {
            let w = labels[i] * (1.0 - labels[j]);
            if scores[i] > scores[j] {
                num += w;
            } else if scores[i] == scores[j] {
                num += 0.5 * w;
            }
        }
    }
    num / (pos * neg)
}

fn pr_thresholds(scores: &[f64], labels: &[f64]) -> f64 {
    let mut thresholds = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let pos: f64 = labels.iter().sum();
    let (mut ap, mut prev_recall) = (0.0, 0.0);
    for t in thresholds {
        let (mut tp, mut flagged) = (0.0, 0.0);
        for (s, l) in scores.iter().zip(labels) {
            if *s >= t {
                tp += l;
                flagged += 1.0;
            }
        }
        let recall = tp / pos;
        if tp > 0.0 {
            ap += (recall - prev_recall) * (tp / flagged);
        }
        prev_recall = recall;
    }
    ap
}

fn ramped_labels(labels: &[u8], w: usize) -> Vec<f64> {
    (0..labels.len())
        .map(|i| {
            let mut best: f64 = 0.0;
            for (a, &l) in labels.iter().enumerate() {
                if l == 1 {
                    let t = i.abs_diff(a);
                    let v = if t == 0 {
                        1.0
                    } else if t <= w {
                        1.0 - t as f64 / (w + 1) as f64
                    } else {
                        0.0
                    };
                    best = best.max(v);
                }
            }
            best
        })
        .collect()
}

fn metric_oracles() -> Outcome {
    let mut rng = StdRng::seed_from_u64(606);
    let (mut roc_err, mut pr_err, mut vus_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut identity_failures = 0;
    let mut arrays = 0;
    while arrays < 200 {
        let n = rng.gen_range(2..=200);
        let levels = if rng.gen_bool(0.3) { 5 } else { 1_000_000 };
        let scores: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(0..levels) as f64 / 7.0)
            .collect();
        let labels: Vec<u8> = if rng.gen_bool(0.5) {
            (0..n).map(|_| u8::from(rng.gen_bool(0.2))).collect()
        } else {
            let start = rng.gen_range(0..n);
            let len = rng.gen_range(1..=(n / 5).max(1));
            (0..n)
                .map(|t| u8::from(t >= start && t < start + len))
                .collect()
        };
        let pos = labels.iter().filter(|&&l| l == 1).count();
        if pos == 0 || pos == n {
            continue;
        }
        arrays += 1;
        let binary: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
        roc_err = roc_err
            .max((auc_roc(&scores, &binary).unwrap() - roc_all_pairs(&scores, &binary)).abs());
        let ap = auc_pr(&scores, &binary).unwrap();
        pr_err = pr_err.max((ap - pr_thresholds(&scores, &binary)).abs());
        if vus_pr(&scores, &labels, 0).unwrap().to_bits() != ap.to_bits() {
            identity_failures += 1;
        }
        let ell = rng.gen_range(0..=20);
        let terms: f64 = (0..=ell.min(n))
            .map(|w| pr_thresholds(&scores, &ramped_labels(&labels, w)))
            .sum();
        let want = terms / (ell.min(n) + 1) as f64;
        vus_err = vus_err.max((vus_pr(&scores, &labels, ell).unwrap() - want).abs());
    }
    outcome(
        roc_err <= 1e-12 && pr_err <= 1e-12 && vus_err <= 1e-12 && identity_failures == 0,
        format!(
            "200 arrays, max error auc-roc {roc_err:.1e} auc-pr {pr_err:.1e} vus-pr {vus_err:.1e} (tol 1e-12), {identity_failures} vus-pr(0) != auc-pr"
        ),
    )
}

// 7 -----------------------------------------------------------------------

fn determinism() -> Outcome {
    let mut rng = StdRng::seed_from_u64(707);
    let ts = noisy_series(&mut rng, 10_000, 3);
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for t in [1, 2, 8] {
        let cfg = DetectorConfig {
            k: 3,
            d_star: 2.0,
            threads: Threads::Fixed(t),
            ..DetectorConfig::default()
        };
        let path = dir.path().join(format!("t{t}.csv"));
        write_scores(&score(&ts, &cfg).unwrap(), &path).unwrap();
        files.push(std::fs::read(&path).unwrap());
    }
    let same = files.windows(2).all(|w| w[0] == w[1]);
    outcome(
        same,
        format!(
            "n=10000 d=3 with 1/2/8 workers: score files {}",
            if same { "byte-identical" } else { "differ" }
        ),
    )
}

// 8 -----------------------------------------------------------------------

fn timed_score(ts: &TimeSeries, k: usize) -> Duration {
    let cfg = DetectorConfig {
        window: Window::Fixed(64),
        k,
        budget: Budget::None,
        threads: Threads::Fixed(1),
        ..DetectorConfig::default()
    };
    (0..3)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(score(ts, &cfg).unwrap());
            t.elapsed()
        })
        .min()
        .unwrap()
}

fn complexity() -> Outcome {
    let mut rng = StdRng::seed_from_u64(808);
    let long = noisy_series(&mut rng, 8000, 2);
    let short =
        TimeSeries::from_channels(long.channels().iter().map(|c| c[..4000].to_vec()).collect())
            .unwrap();
    let t4 = timed_score(&short, 5);
    let t8 = timed_score(&long, 5);
    let t4k15 = timed_score(&short, 15);
    let (r_n, r_k) = (
        t8.as_secs_f64() / t4.as_secs_f64(),
        t4k15.as_secs_f64() / t4.as_secs_f64(),
    );
    outcome(
        r_n <= 5.0 && r_k <= 1.5,
        format!(
            "n 4000->8000 ratio {r_n:.2} (limit 5), k 5->15 ratio {r_k:.2} (limit 1.5); {} / {} / {}",
            secs(t4),
            secs(t8),
            secs(t4k15)
        ),
    )
}

// 9 -----------------------------------------------------------------------

fn affine_invariance() -> Outcome {
    let mut rng = StdRng::seed_from_u64(909);
    let mut worst: f64 = 0.0;
    for case in 0..6 {
        let ts = noisy_series(&mut rng, 1500, 3);
        let moved = TimeSeries::from_channels(
            ts.channels()
                .iter()
                .map(|c| c.iter().map(|v| 3.0 * v - 7.0).collect())
                .collect(),
        )
        .unwrap();
        let cfg = DetectorConfig {
            k: 1 + case % 3,
            d_star: [1.0, 0.5, 3.0][case % 3],
            aggregation: if case % 2 == 0 {
                Aggregation::Pre
            } else {
                Aggregation::Post
            },
            ..DetectorConfig::default()
        };
        let a = score(&ts, &cfg).unwrap();
        let b = score(&moved, &cfg).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            worst = worst.max((x - y).abs());
        }
    }
    outcome(
        worst <= 1e-6,
        format!("6 series under x -> 3x - 7, max score change {worst:.2e} (tol 1e-6)"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> std::process::ExitCode {
    let criteria: [Criterion; 9] = [
        ("kNN kernel vs repeated-minimum oracle", knn_kernel),
        ("distance rows vs two-window oracle", distance_rows),
        ("end-to-end vs brute-force pipeline", end_to_end),
        (
            "reduction vs literal transcription",
            reduction_transcription,
        ),
        ("K-of-N peak placement", k_of_n),
        ("metric oracles", metric_oracles),
        ("determinism across worker counts", determinism),
        ("complexity smoke test", complexity),
        ("affine invariance", affine_invariance),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {}: {tag} {name}: {}", i + 1, result.detail);
        if !result.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria passed");
        std::process::ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::ExitCode::FAILURE
    }
}
