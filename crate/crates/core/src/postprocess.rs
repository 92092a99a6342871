//! Reduction of the profile tensor to timestamp-level scores.

use crate::error::{Error, Result};
use crate::io::ScoreVector;
use crate::knn::ProfileTensor;

/// Slack subtracted before taking the ceiling of a fractional cutoff, so
/// that products such as `0.3 * 10` resolve to 3 rather than 4.
const CEIL_SLACK: f64 = 1e-9;

/// Turns an integer or fractional dimension cutoff into a profile
/// dimension count in `[1, d]`.
///
/// Values `>= 1` must be integers no larger than `d`. Fractions in `(0, 1)`
/// become `ceil(fraction * d)`, at least 1.
pub fn resolve_cutoff(d_star_raw: f64, d: usize) -> Result<usize> {
    if !(d_star_raw.is_finite() && d_star_raw > 0.0) {
        return Err(Error::param(format!(
            "dimension cutoff must be positive, got {d_star_raw}"
        )));
    }
    if d_star_raw >= 1.0 {
        if d_star_raw.fract() != 0.0 {
            return Err(Error::param(format!(
                "dimension cutoff {d_star_raw} is neither an integer nor a fraction below 1"
            )));
        }
        let d_star = d_star_raw as usize;
        if d_star > d {
            return Err(Error::param(format!(
                "dimension cutoff {d_star} exceeds the {d} available dimensions"
            )));
        }
        return Ok(d_star);
    }
    Ok(((d_star_raw * d as f64 - CEIL_SLACK).ceil() as usize).clamp(1, d))
}

/// Subsequence scores from dimension `d_star` and neighbor `k_star`
/// (both 1-based), backing off to the preceding dimension and then to the
/// preceding neighbor wherever an entry is non-finite.
///
/// Larger scores are more anomalous; the tensor already holds distances.
pub fn reduce_profile(p: &ProfileTensor, d_star: usize, k_star: usize) -> Result<Vec<f64>> {
    if d_star < 1 || d_star > p.dims() {
        return Err(Error::param(format!(
            "dimension cutoff {d_star} outside [1, {}]",
            p.dims()
        )));
    }
    if k_star < 1 || k_star > p.k() {
        return Err(Error::param(format!(
            "neighbor cutoff {k_star} outside [1, {}]",
            p.k()
        )));
    }
    let mut current = vec![0.0; k_star];
    let out = (0..p.n_sub())
        .map(|i| {
            current.copy_from_slice(&p.neighbors(i, 0)[..k_star]);
            for dim in 1..d_star {
                for (slot, &v) in current.iter_mut().zip(&p.neighbors(i, dim)[..k_star]) {
                    if v.is_finite() {
                        *slot = v;
                    }
                }
            }
            for l in 1..k_star {
                if !current[l].is_finite() {
                    current[l] = current[l - 1];
                }
            }
            current[k_star - 1]
        })
        .collect();
    Ok(out)
}

/// Moving average mapping `n_sub` subsequence scores onto `n = n_sub + m - 1`
/// timestamps.
///
/// Timestamp `t` gets the mean of the finite scores of the subsequences
/// covering it; NaN if none of them is finite.
pub fn smooth(s: &[f64], m: usize) -> Result<ScoreVector> {
    if m < 1 {
        return Err(Error::InvalidWindow(m));
    }
    if s.is_empty() {
        return Err(Error::LengthMismatch {
            what: "subsequence scores",
            expected: 1,
            got: 0,
        });
    }
    let n = s.len() + m - 1;
    let y = (0..n)
        .map(|t| {
            let lo = (t + 1).saturating_sub(m);
            let hi = t.min(s.len() - 1);
            let mut sum = 0.0;
            let mut count = 0usize;
            for &v in &s[lo..=hi] {
                if v.is_finite() {
                    sum += v;
                    count += 1;
                }
            }
            if count == 0 {
                f64::NAN
            } else {
                sum / count as f64
            }
        })
        .collect();
    Ok(ScoreVector::new(y))
}

/// Smooths subsequence scores for a series of known length `n`.
pub fn smooth_to_length(s: &[f64], m: usize, n: usize) -> Result<ScoreVector> {
    if m < 1 || m > n || s.len() != n - m + 1 {
        return Err(Error::LengthMismatch {
            what: "subsequence scores",
            expected: (n + 1).saturating_sub(m),
            got: s.len(),
        });
    }
    smooth(s, m)
}
