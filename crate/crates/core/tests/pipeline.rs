use mmpad::detector::{fit_budget, proxy_cost};
use mmpad::knn::find_knn_row;
use mmpad::oracle::{brute_force_profile, knn_repeated_min};
use mmpad::synth::{generate, SynthConfig};
use mmpad::{
    build_profile, detect, read_csv, read_scores, write_csv, write_scores, Aggregation, Budget,
    DetectorConfig, TimeSeries, Window,
};
use proptest::prelude::*;

#[test]
fn csv_and_score_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ts = generate(&SynthConfig {
        n: 300,
        d: 3,
        anomaly_start: 100,
        anomaly_len: 20,
        seed: 5,
        ..SynthConfig::default()
    })
    .unwrap();
    let path = dir.path().join("s.csv");
    write_csv(&ts, &path).unwrap();
    assert_eq!(read_csv(&path).unwrap(), ts);

    let scores = detect(&ts, &DetectorConfig::default()).unwrap().scores;
    let spath = dir.path().join("y.csv");
    write_scores(&scores, &spath).unwrap();
    assert_eq!(read_scores(&spath).unwrap(), scores);
}

#[test]
fn budget_downsamples_and_maps_back() {
    let ts = generate(&SynthConfig {
        n: 6000,
        d: 2,
        anomaly_start: 4000,
        anomaly_len: 200,
        base_period: 80.0,
        ..SynthConfig::default()
    })
    .unwrap();
    let cfg = DetectorConfig {
        budget: Budget::Cost(proxy_cost(2000, 20, 2)),
        ..DetectorConfig::default()
    };
    let det = detect(&ts, &cfg).unwrap();
    assert_eq!(det.factor, 4);
    assert_eq!(det.scores.len(), 6000);
    assert!(det.scores.as_slice().iter().all(|v| v.is_finite()));
    // the inferred window follows the halved period
    assert!((18..=22).contains(&det.window), "window {}", det.window);

    let fit = fit_budget(&ts, 80, proxy_cost(2000, 20, 2), false);
    assert_eq!((fit.factor, fit.window, fit.series.len()), (4, 20, 1500));
}

#[test]
fn peak_lands_on_the_anomaly_for_the_default_generator() {
    let cfg = SynthConfig::default();
    let ts = generate(&cfg).unwrap();
    let det = detect(
        &ts,
        &DetectorConfig {
            window: Window::Fixed(50),
            ..DetectorConfig::default()
        },
    )
    .unwrap();
    let y = det.scores.as_slice();
    let peak = (0..y.len()).fold(0, |b, i| if y[i] > y[b] { i } else { b });
    assert!(peak + 50 >= 1200 && peak < 1300 + 50, "peak at {peak}");
}

#[test]
fn profiles_match_oracle_on_an_eight_channel_series() {
    let ts = generate(&SynthConfig {
        n: 400,
        anomaly_start: 250,
        anomaly_len: 30,
        base_period: 25.0,
        ..SynthConfig::default()
    })
    .unwrap();
    for mode in [Aggregation::Pre, Aggregation::Post] {
        let fast = build_profile(&ts, 25, 3, mode).unwrap();
        let slow = brute_force_profile(&ts, 25, 3, mode).unwrap();
        for (a, b) in fast.values().iter().zip(slow.values()) {
            assert!((a - b).abs() < 1e-9 || a == b);
        }
    }
}

fn short_series() -> impl Strategy<Value = TimeSeries> {
    (1usize..=3, 24usize..80).prop_flat_map(|(d, n)| {
        prop::collection::vec(prop::collection::vec(-3.0f64..3.0, n), d)
            .prop_map(|ch| TimeSeries::from_channels(ch).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn knn_agrees_with_repeated_minimum(
        row in prop::collection::vec(prop::sample::select(vec![0.0, 0.5, 1.0, 1.5, f64::INFINITY]), 2..200),
        k in 1usize..8,
        ell in 1usize..10,
    ) {
        let fast = find_knn_row(&row, k, ell).unwrap();
        let slow = knn_repeated_min(&row, k, ell);
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn profile_is_nondecreasing_in_neighbor_order(ts in short_series(), k in 1usize..4) {
        let m = 6;
        let p = build_profile(&ts, m, k, Aggregation::Pre).unwrap();
        for i in 0..p.n_sub() {
            for dim in 0..p.dims() {
                let nb = p.neighbors(i, dim);
                prop_assert!(nb.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn scores_cover_every_timestamp(ts in short_series(), k in 1usize..3) {
        let cfg = DetectorConfig { window: Window::Fixed(5), k, budget: Budget::None, ..DetectorConfig::default() };
        let y = detect(&ts, &cfg).unwrap().scores;
        prop_assert_eq!(y.len(), ts.len());
        prop_assert!(y.as_slice().iter().all(|v| v.is_finite() && *v >= 0.0));
    }
}
