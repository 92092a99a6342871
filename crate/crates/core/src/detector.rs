//! End-to-end scoring: normalization, window inference, budget-aware
//! downsampling, profile construction, reduction, and smoothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{zscore_normalize, ScoreVector, TimeSeries};
use crate::knn::{build_profile_dims, exclusion_length, validate_profile_args, Aggregation};
use crate::postprocess::{reduce_profile, resolve_cutoff, smooth};

/// Window returned when no usable autocorrelation peak exists.
pub const FALLBACK_WINDOW: usize = 125;
/// Largest autocorrelation lag examined.
pub const MAX_ACF_LAG: usize = 400;
/// Accepted range for the period estimate.
pub const PERIOD_RANGE: (usize, usize) = (4, 300);
/// A peak must exceed this multiple of `1/sqrt(n)`, the white-noise
/// standard error of the autocorrelation.
pub const PEAK_SIGNIFICANCE: f64 = 4.0;
/// Default proxy-cost budget, in units of `n_sub^2 * d`.
pub const DEFAULT_BUDGET: f64 = 2e10;

/// Result of [`estimate_period`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodEstimate {
    pub window: usize,
    /// True when [`FALLBACK_WINDOW`] was returned.
    pub fallback: bool,
}

/// Estimates the dominant period from the highest local maximum of the
/// autocorrelation function.
///
/// Lags up to `min(n / 2, 400)` are examined; a local maximum strictly
/// exceeds both neighbors, sits at lag 4 or more, and must be
/// significant. The estimate falls back to 125 when the best peak lies
/// outside `[4, 300]`, when there is no peak, or when `n < 8`.
pub fn estimate_period(channel: &[f64]) -> PeriodEstimate {
    let fallback = PeriodEstimate {
        window: FALLBACK_WINDOW,
        fallback: true,
    };
    let n = channel.len();
    if n < 8 {
        return fallback;
    }
    let mean = channel.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = channel.iter().map(|v| v - mean).collect();
    let denom: f64 = centered.iter().map(|v| v * v).sum();
    if denom <= 0.0 {
        return fallback;
    }
    let max_lag = (n / 2).min(MAX_ACF_LAG);
    let acf: Vec<f64> = (0..=max_lag)
        .map(|lag| {
            centered[..n - lag]
                .iter()
                .zip(&centered[lag..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / denom
        })
        .collect();

    let threshold = PEAK_SIGNIFICANCE / (n as f64).sqrt();
    let mut best: Option<usize> = None;
    for lag in PERIOD_RANGE.0.max(1)..max_lag {
        let r = acf[lag];
        if r > acf[lag - 1] && r > acf[lag + 1] && best.is_none_or(|b| r > acf[b]) {
            best = Some(lag);
        }
    }
    match best {
        Some(lag) if acf[lag] > threshold && (PERIOD_RANGE.0..=PERIOD_RANGE.1).contains(&lag) => {
            PeriodEstimate {
                window: lag,
                fallback: false,
            }
        }
        _ => fallback,
    }
}

/// Subsequence length: fixed, or inferred from the first channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Window::Auto);
        }
        s.parse()
            .map(Window::Fixed)
            .map_err(|_| Error::param(format!("window must be `auto` or an integer, got {s:?}")))
    }
}

impl std::fmt::Display for Window {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Window::Auto => f.write_str("auto"),
            Window::Fixed(m) => write!(f, "{m}"),
        }
    }
}

/// Proxy-cost budget for downsampling long series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Budget {
    None,
    Cost(f64),
}

impl Default for Budget {
    fn default() -> Self {
        Budget::Cost(DEFAULT_BUDGET)
    }
}

impl std::str::FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "none" {
            return Ok(Budget::None);
        }
        match s.parse::<f64>() {
            Ok(c) if c.is_finite() && c > 0.0 => Ok(Budget::Cost(c)),
            _ => Err(Error::param(format!(
                "budget must be `none` or a positive number, got {s:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Budget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Budget::None => f.write_str("none"),
            Budget::Cost(c) => write!(f, "{c}"),
        }
    }
}

/// Worker threads for profile construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Threads {
    #[default]
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for Threads {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(t) if t >= 1 => Ok(Threads::Fixed(t)),
            _ => Err(Error::param(format!(
                "threads must be `auto` or a positive integer, got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub window: Window,
    /// Neighbor count; the score uses the `k`-th neighbor.
    pub k: usize,
    /// Dimension cutoff: an integer, or a fraction of the channel count.
    pub d_star: f64,
    pub aggregation: Aggregation,
    pub budget: Budget,
    pub normalize: bool,
    pub threads: Threads,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            window: Window::Auto,
            k: 1,
            d_star: 1.0,
            aggregation: Aggregation::Pre,
            budget: Budget::default(),
            normalize: true,
            threads: Threads::Auto,
        }
    }
}

impl DetectorConfig {
    /// Univariate submission setting.
    pub fn univariate() -> Self {
        Self {
            k: 5,
            ..Self::default()
        }
    }

    /// Multivariate submission setting.
    pub fn multivariate() -> Self {
        Self {
            k: 15,
            d_star: 0.7,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::param("k must be at least 1"));
        }
        if !(self.d_star.is_finite() && self.d_star > 0.0) {
            return Err(Error::param(format!(
                "dimension cutoff must be positive, got {}",
                self.d_star
            )));
        }
        if let Window::Fixed(m) = self.window {
            if m < 3 {
                return Err(Error::param(format!("window must be at least 3, got {m}")));
            }
        }
        if let Budget::Cost(c) = self.budget {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::param(format!("budget must be positive, got {c}")));
            }
        }
        if self.threads == Threads::Fixed(0) {
            return Err(Error::param("threads must be at least 1"));
        }
        Ok(())
    }
}

/// Working series after budget fitting.
#[derive(Debug, Clone)]
pub struct BudgetFit {
    pub series: TimeSeries,
    pub window: usize,
    /// Total downsampling factor, a power of two.
    pub factor: usize,
    /// True when the loop stopped while still above budget.
    pub over_budget: bool,
}

/// Proxy runtime cost `n_sub^2 * d`.
pub fn proxy_cost(n: usize, m: usize, d: usize) -> f64 {
    let n_sub = (n + 1).saturating_sub(m) as f64;
    n_sub * n_sub * d as f64
}

/// Halves the series by keeping even timestamps until the proxy cost fits
/// the budget or the series gets shorter than four windows.
///
/// After every halving the window is re-inferred from the first channel
/// when `reinfer` is set, and halved (rounding up, at least 3) otherwise.
pub fn fit_budget(ts: &TimeSeries, m: usize, budget_cost: f64, reinfer: bool) -> BudgetFit {
    let mut series = ts.clone();
    let mut window = m;
    let mut factor = 1;
    while proxy_cost(series.len(), window, series.dims()) > budget_cost
        && series.len() >= 4 * window
    {
        series = series.decimate(2);
        factor *= 2;
        window = if reinfer {
            estimate_period(series.channel(0)).window
        } else {
            window.div_ceil(2).max(3)
        };
    }
    let over_budget = proxy_cost(series.len(), window, series.dims()) > budget_cost;
    BudgetFit {
        series,
        window,
        factor,
        over_budget,
    }
}

/// Maps scores of a series decimated by `factor` back onto `n` timestamps.
///
/// Working score `j` sits at timestamp `j * factor`; values in between are
/// linear interpolations and timestamps past the last anchor repeat it.
pub fn interpolate_scores(y_working: &[f64], factor: usize, n: usize) -> Result<ScoreVector> {
    if factor < 1 {
        return Err(Error::param("downsampling factor must be at least 1"));
    }
    let expected = n.div_ceil(factor);
    if y_working.len() != expected || n == 0 {
        return Err(Error::LengthMismatch {
            what: "working scores",
            expected,
            got: y_working.len(),
        });
    }
    let last = y_working.len() - 1;
    let y = (0..n)
        .map(|t| {
            let (j, r) = (t / factor, t % factor);
            if r == 0 || j >= last {
                y_working[j]
            } else {
                let w = r as f64 / factor as f64;
                y_working[j] + (y_working[j + 1] - y_working[j]) * w
            }
        })
        .collect();
    Ok(ScoreVector::new(y))
}

/// Replaces non-finite scores by the smallest finite one (0 if none).
pub(crate) fn fill_non_finite(y: &mut [f64]) {
    let min = y
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min);
    let fill = if min.is_finite() { min } else { 0.0 };
    for v in y.iter_mut().filter(|v| !v.is_finite()) {
        *v = fill;
    }
}

/// Scores plus the parameters resolved while producing them.
#[derive(Debug, Clone)]
pub struct Detection {
    pub scores: ScoreVector,
    /// Window used on the working series.
    pub window: usize,
    pub exclusion: usize,
    pub d_star: usize,
    pub factor: usize,
    pub over_budget: bool,
}

/// Normalizes (if enabled) and resolves the window on the full series.
pub(crate) fn prepare(ts: &TimeSeries, cfg: &DetectorConfig) -> Result<(TimeSeries, usize)> {
    let series = if cfg.normalize {
        zscore_normalize(ts)?
    } else {
        ts.clone()
    };
    let m = match cfg.window {
        Window::Fixed(m) => m,
        Window::Auto => estimate_period(series.channel(0)).window,
    };
    Ok((series, m))
}

pub fn detect(ts: &TimeSeries, cfg: &DetectorConfig) -> Result<Detection> {
    let (series, m) = prepare(ts, cfg)?;
    let fit = match cfg.budget {
        Budget::Cost(c) => fit_budget(&series, m, c, cfg.window == Window::Auto),
        Budget::None => BudgetFit {
            series,
            window: m,
            factor: 1,
            over_budget: false,
        },
    };
    let (work, m) = (&fit.series, fit.window);
    if work.len() < 2 * m {
        return Err(Error::SeriesTooShort { n: work.len(), m });
    }
    cfg.validate()?;
    validate_profile_args(work, m, cfg.k)?;
    let d_star = resolve_cutoff(cfg.d_star, work.dims())?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Threads::Fixed(t) = cfg.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))?;
    let profile = pool.install(|| build_profile_dims(work, m, cfg.k, cfg.aggregation, d_star))?;

    let s = reduce_profile(&profile, d_star, cfg.k)?;
    let mut y = smooth(&s, m)?.into_inner();
    fill_non_finite(&mut y);
    let scores = interpolate_scores(&y, fit.factor, ts.len())?;
    Ok(Detection {
        scores,
        window: m,
        exclusion: exclusion_length(m),
        d_star,
        factor: fit.factor,
        over_budget: fit.over_budget,
    })
}

/// Length-`n` anomaly scores for `ts`.
pub fn score(ts: &TimeSeries, cfg: &DetectorConfig) -> Result<ScoreVector> {
    detect(ts, cfg).map(|d| d.scores)
}
