//! Brute-force reference implementations of every pipeline stage.
//!
//! These favor transparency over speed: full distance rows from explicitly
//! z-normalized window pairs, sort-and-average aggregation, repeated
//! minimum search with masking, and a step-by-step transcription of the
//! reduction and smoothing procedure. They share tie-breaking and
//! constant-window rules with the fast path but none of its code beyond
//! input preparation.

#![allow(clippy::needless_range_loop)]

use crate::detector::{fill_non_finite, prepare, DetectorConfig};
use crate::distance::znorm_distance_pair_oracle;
use crate::error::{Error, Result};
use crate::io::{ScoreVector, TimeSeries};
use crate::knn::{exclusion_length, validate_profile_args, Aggregation, Neighbors, ProfileTensor};
use crate::postprocess::resolve_cutoff;

/// Largest series the brute-force profile accepts.
pub const SIZE_GUARD: usize = 5000;

/// Repeatedly takes the smallest finite unmasked entry (smaller index on
/// ties) and masks everything within `ell_ex` of it.
pub fn knn_repeated_min(row: &[f64], k: usize, ell_ex: usize) -> Neighbors {
    let mut masked = vec![false; row.len()];
    let mut indices = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for (j, v) in row.iter().enumerate() {
            if masked[j] || !v.is_finite() {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => v.total_cmp(&row[b]).is_lt(),
            };
            if better {
                best = Some(j);
            }
        }
        let Some(b) = best else { break };
        indices.push(Some(b));
        values.push(row[b]);
        let lo = b.saturating_sub(ell_ex);
        let hi = (b + ell_ex).min(row.len() - 1);
        for flag in &mut masked[lo..=hi] {
            *flag = true;
        }
    }
    while indices.len() < k {
        indices.push(None);
        values.push(f64::INFINITY);
    }
    Neighbors { indices, values }
}

/// Mean of the `p` largest values, for `p = 1..=len`.
fn sorted_prefix_means(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (1..=sorted.len())
        .map(|p| sorted[..p].iter().sum::<f64>() / p as f64)
        .collect()
}

/// Reference profile tensor over all profile dimensions.
pub fn brute_force_profile(
    ts: &TimeSeries,
    m: usize,
    k: usize,
    mode: Aggregation,
) -> Result<ProfileTensor> {
    if ts.len() > SIZE_GUARD {
        return Err(Error::SizeGuard {
            n: ts.len(),
            limit: SIZE_GUARD,
        });
    }
    let (n_sub, _) = validate_profile_args(ts, m, k)?;
    let ell = exclusion_length(m);
    let d = ts.dims();

    // dist[c][i][j], masked inside the exclusion zone
    let mut dist = vec![vec![vec![0.0; n_sub]; n_sub]; d];
    for (c, plane) in dist.iter_mut().enumerate() {
        let x = ts.channel(c);
        for i in 0..n_sub {
            for j in 0..n_sub {
                plane[i][j] = if i.abs_diff(j) <= ell {
                    f64::INFINITY
                } else {
                    znorm_distance_pair_oracle(&x[i..i + m], &x[j..j + m])?
                };
            }
        }
    }

    let mut values = vec![0.0; n_sub * d * k];
    let mut indices = vec![u32::MAX; n_sub * d * k];
    let mut put = |i: usize, p: usize, l: usize, v: f64, j: Option<usize>| {
        let o = (i * d + p) * k + l;
        values[o] = v;
        indices[o] = j.map_or(u32::MAX, |j| j as u32);
    };

    for i in 0..n_sub {
        match mode {
            Aggregation::Pre => {
                let mut by_dim = vec![vec![0.0; n_sub]; d];
                for j in 0..n_sub {
                    let pair: Vec<f64> = (0..d).map(|c| dist[c][i][j]).collect();
                    let agg = if pair.iter().any(|v| v.is_infinite()) {
                        vec![f64::INFINITY; d]
                    } else {
                        sorted_prefix_means(&pair)
                    };
                    for p in 0..d {
                        by_dim[p][j] = agg[p];
                    }
                }
                for (p, row) in by_dim.iter().enumerate() {
                    let nb = knn_repeated_min(row, k, ell);
                    for l in 0..k {
                        put(i, p, l, nb.values[l], nb.indices[l]);
                    }
                }
            }
            Aggregation::Post => {
                let per_channel: Vec<Neighbors> = (0..d)
                    .map(|c| knn_repeated_min(&dist[c][i], k, ell))
                    .collect();
                for l in 0..k {
                    let mut column: Vec<(f64, Option<usize>)> = per_channel
                        .iter()
                        .map(|nb| (nb.values[l], nb.indices[l]))
                        .collect();
                    column.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
                    for p in 0..d {
                        let v = if column[..=p].iter().any(|e| e.0.is_infinite()) {
                            f64::INFINITY
                        } else {
                            column[..=p].iter().map(|e| e.0).sum::<f64>() / (p + 1) as f64
                        };
                        put(i, p, l, v, column[p].1);
                    }
                }
            }
        }
    }
    Ok(ProfileTensor::from_parts(n_sub, d, k, values, indices))
}

/// Literal execution of the reduction and smoothing procedure.
///
/// The procedure is written for a tensor that stores negated distances and
/// marks missing entries with NaN, ending in a sign flip; this function
/// converts `profile` into that convention first, so its output is in the
/// larger-is-more-anomalous orientation.
pub fn postprocess_literal(
    profile: &ProfileTensor,
    d_star: usize,
    k_star: usize,
    m: usize,
) -> Vec<f64> {
    let n_sub = profile.n_sub();
    // P <- P[:, 1:d*, 1:k*]
    let mut p: Vec<Vec<Vec<f64>>> = (0..n_sub)
        .map(|i| {
            (0..d_star)
                .map(|dim| {
                    (0..k_star)
                        .map(|l| {
                            let v = profile.value(i, dim, l);
                            if v.is_finite() {
                                -v
                            } else {
                                f64::NAN
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    // for i = 2..d*: replace non-finite entries of P[:, i, :] with P[:, i-1, :]
    for dim in 1..d_star {
        for row in p.iter_mut() {
            for l in 0..k_star {
                if !row[dim][l].is_finite() {
                    row[dim][l] = row[dim - 1][l];
                }
            }
        }
    }
    // S <- P[:, d*, :]
    let mut s_mat: Vec<Vec<f64>> = p.iter().map(|row| row[d_star - 1].clone()).collect();
    // for j = 2..k*: replace non-finite entries of S[:, j] with S[:, j-1]
    for l in 1..k_star {
        for row in s_mat.iter_mut() {
            if !row[l].is_finite() {
                row[l] = row[l - 1];
            }
        }
    }
    // s <- -S[:, k*]
    let s: Vec<f64> = s_mat.iter().map(|row| -row[k_star - 1]).collect();
    // s~ <- PadNaN(s, m - 1, m - 1)
    let mut padded = vec![f64::NAN; m - 1];
    padded.extend_from_slice(&s);
    padded.extend(std::iter::repeat_n(f64::NAN, m - 1));
    // y_t <- NaNMean(s~[t : t + m - 1])
    let n = n_sub + m - 1;
    (0..n).map(|t| nan_mean(&padded[t..t + m])).collect()
}

fn nan_mean(xs: &[f64]) -> f64 {
    let kept: Vec<f64> = xs.iter().copied().filter(|v| !v.is_nan()).collect();
    if kept.is_empty() {
        return f64::NAN;
    }
    let mut sum = 0.0;
    for v in &kept {
        sum += v;
    }
    sum / kept.len() as f64
}

/// End-to-end reference scores; the budget setting is ignored.
pub fn brute_force_pipeline(ts: &TimeSeries, cfg: &DetectorConfig) -> Result<ScoreVector> {
    let (series, m) = prepare(ts, cfg)?;
    if series.len() < 2 * m {
        return Err(Error::SeriesTooShort { n: series.len(), m });
    }
    cfg.validate()?;
    let d_star = resolve_cutoff(cfg.d_star, series.dims())?;
    let profile = brute_force_profile(&series, m, cfg.k, cfg.aggregation)?;
    let mut y = postprocess_literal(&profile, d_star, cfg.k, m);
    fill_non_finite(&mut y);
    Ok(ScoreVector::new(y))
}
