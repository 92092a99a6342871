//! Exclusion-zone-aware k-nearest-neighbor selection and the profile tensor.
//!
//! For every query subsequence and every ordered profile dimension, the
//! selection kernel accepts neighbors in ascending distance order, skipping
//! any candidate within `ell_ex` (inclusive) of an already accepted one.
//! Instead of sorting the whole row, it first keeps only the
//! `min(2 * k * ell_ex, n_ref - 1)` smallest entries with a linear-time
//! selection and sorts those. Accepting `k` neighbors can consume at most
//! `k * (2 * ell_ex + 1)` positions, so the reduced set is almost always
//! enough; when it is not, the candidate count doubles until it covers the
//! row.
//!
//! Ties are broken toward the smaller reference index everywhere.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::{presort_into, AggregatedRow};
use crate::distance::{centered_channels, compute_sliding_stats, DistanceRow, RowStream};
use crate::error::{Error, Result};
use crate::io::TimeSeries;

/// Queries handled by one row stream. Fixed so that results do not depend
/// on the number of worker threads.
const QUERY_BLOCK: usize = 256;

const NO_NEIGHBOR: u32 = u32::MAX;

/// Where dimensional sorting happens relative to neighbor selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Sort channel distances of every pair, then select neighbors.
    #[default]
    Pre,
    /// Select neighbors per channel, then sort the neighbor distances.
    Post,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pre" => Ok(Aggregation::Pre),
            "post" => Ok(Aggregation::Post),
            other => Err(Error::param(format!(
                "aggregation must be `pre` or `post`, got {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Aggregation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Aggregation::Pre => "pre",
            Aggregation::Post => "post",
        })
    }
}

/// Exclusion-zone half width used for a window of length `m`.
pub fn exclusion_length(m: usize) -> usize {
    m / 2
}

#[inline]
fn by_value_then_index(a: &(f64, u32), b: &(f64, u32)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Indices of the `count` smallest values, ties toward the smaller index.
///
/// The returned set is unordered. Runs in linear expected time with an
/// `O(n log n)` worst case.
pub fn arg_select(values: &[f64], count: usize) -> Result<Vec<usize>> {
    if count < 1 || count > values.len() {
        return Err(Error::param(format!(
            "selection count {count} outside [1, {}]",
            values.len()
        )));
    }
    let mut pairs = Vec::new();
    select_smallest(values, count, &mut pairs);
    Ok(pairs.iter().map(|&(_, j)| j as usize).collect())
}

fn select_smallest(values: &[f64], count: usize, pairs: &mut Vec<(f64, u32)>) {
    pairs.clear();
    pairs.extend(values.iter().enumerate().map(|(j, &v)| (v, j as u32)));
    if count < pairs.len() {
        pairs.select_nth_unstable_by(count - 1, by_value_then_index);
        pairs.truncate(count);
    }
}

/// Neighbors of one query, in acceptance order.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbors {
    /// `None` where fewer than `k` valid neighbors exist.
    pub indices: Vec<Option<usize>>,
    /// `+inf` where the index is `None`.
    pub values: Vec<f64>,
}

/// Reusable buffers for [`find_knn_row`].
pub(crate) struct KnnScratch {
    pairs: Vec<(f64, u32)>,
    blocked: Vec<bool>,
    accepted: Vec<u32>,
}

impl KnnScratch {
    pub(crate) fn new(n_ref: usize) -> Self {
        Self {
            pairs: Vec::new(),
            blocked: vec![false; n_ref],
            accepted: Vec::new(),
        }
    }

    fn set_zones(&mut self, ell_ex: usize, value: bool) {
        let n = self.blocked.len();
        for &j in &self.accepted {
            let j = j as usize;
            let lo = j.saturating_sub(ell_ex);
            let hi = (j + ell_ex + 1).min(n);
            self.blocked[lo..hi].fill(value);
        }
    }
}

/// Initial size of the reduced candidate set.
pub fn initial_candidate_count(k: usize, ell_ex: usize, n_ref: usize) -> usize {
    (2 * k * ell_ex).min(n_ref.saturating_sub(1)).max(1)
}

/// Selects up to `k` neighbors from an aggregated distance row whose query
/// zone is already masked with `+inf`.
pub fn find_knn_row(row: &[f64], k: usize, ell_ex: usize) -> Result<Neighbors> {
    check_knn_params(k, ell_ex)?;
    if row.is_empty() {
        return Err(Error::param("empty distance row"));
    }
    let mut scratch = KnnScratch::new(row.len());
    let mut indices = vec![NO_NEIGHBOR; k];
    let mut values = vec![f64::INFINITY; k];
    knn_into(row, k, ell_ex, &mut scratch, &mut indices, &mut values);
    Ok(Neighbors {
        indices: indices
            .into_iter()
            .map(|j| (j != NO_NEIGHBOR).then_some(j as usize))
            .collect(),
        values,
    })
}

fn check_knn_params(k: usize, ell_ex: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::param("neighbor count k must be at least 1"));
    }
    if ell_ex < 1 {
        return Err(Error::param("exclusion length must be at least 1"));
    }
    Ok(())
}

/// Core of [`find_knn_row`]; writes `k` entries into the output slices.
pub(crate) fn knn_into(
    row: &[f64],
    k: usize,
    ell_ex: usize,
    scratch: &mut KnnScratch,
    out_indices: &mut [u32],
    out_values: &mut [f64],
) {
    let n_ref = row.len();
    debug_assert_eq!(scratch.blocked.len(), n_ref);
    let mut count = initial_candidate_count(k, ell_ex, n_ref);
    loop {
        select_smallest(row, count, &mut scratch.pairs);
        scratch.pairs.sort_unstable_by(by_value_then_index);

        let mut exhausted = false;
        for idx in 0..scratch.pairs.len() {
            let (v, j) = scratch.pairs[idx];
            if !v.is_finite() {
                exhausted = true;
                break;
            }
            let ju = j as usize;
            if scratch.blocked[ju] {
                continue;
            }
            scratch.accepted.push(j);
            let lo = ju.saturating_sub(ell_ex);
            let hi = (ju + ell_ex + 1).min(n_ref);
            scratch.blocked[lo..hi].fill(true);
            if scratch.accepted.len() == k {
                break;
            }
        }

        if scratch.accepted.len() == k || exhausted || count == n_ref {
            break;
        }
        scratch.set_zones(ell_ex, false);
        scratch.accepted.clear();
        count = (2 * count).min(n_ref);
    }

    for l in 0..k {
        match scratch.accepted.get(l) {
            Some(&j) => {
                out_indices[l] = j;
                out_values[l] = row[j as usize];
            }
            None => {
                out_indices[l] = NO_NEIGHBOR;
                out_values[l] = f64::INFINITY;
            }
        }
    }
    scratch.set_zones(ell_ex, false);
    scratch.accepted.clear();
}

/// The `n_sub x d_profile x k` tensor of neighbor distances and indices.
///
/// Missing neighbors carry `+inf` and no index.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTensor {
    n_sub: usize,
    dims: usize,
    k: usize,
    values: Vec<f64>,
    indices: Vec<u32>,
}

impl ProfileTensor {
    /// Builds a tensor from a flat `[i][p][l]` value array; indices are
    /// left unset.
    pub fn from_values(n_sub: usize, dims: usize, k: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_sub * dims * k {
            return Err(Error::LengthMismatch {
                what: "profile tensor values",
                expected: n_sub * dims * k,
                got: values.len(),
            });
        }
        if dims == 0 || k == 0 {
            return Err(Error::param("profile tensor needs d >= 1 and k >= 1"));
        }
        let indices = vec![NO_NEIGHBOR; values.len()];
        Ok(Self {
            n_sub,
            dims,
            k,
            values,
            indices,
        })
    }

    pub fn n_sub(&self) -> usize {
        self.n_sub
    }

    /// Number of ordered profile dimensions.
    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Number of neighbors per entry.
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    fn offset(&self, i: usize, p: usize, l: usize) -> usize {
        (i * self.dims + p) * self.k + l
    }

    /// Distance to the `l`-th neighbor of query `i` at profile dimension
    /// `p` (all 0-based).
    pub fn value(&self, i: usize, p: usize, l: usize) -> f64 {
        self.values[self.offset(i, p, l)]
    }

    pub fn neighbor(&self, i: usize, p: usize, l: usize) -> Option<usize> {
        let j = self.indices[self.offset(i, p, l)];
        (j != NO_NEIGHBOR).then_some(j as usize)
    }

    /// The `k` neighbor distances of query `i` at dimension `p`.
    pub fn neighbors(&self, i: usize, p: usize) -> &[f64] {
        let o = self.offset(i, p, 0);
        &self.values[o..o + self.k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn from_parts(
        n_sub: usize,
        dims: usize,
        k: usize,
        values: Vec<f64>,
        indices: Vec<u32>,
    ) -> Self {
        debug_assert_eq!(values.len(), n_sub * dims * k);
        debug_assert_eq!(indices.len(), values.len());
        Self {
            n_sub,
            dims,
            k,
            values,
            indices,
        }
    }
}

/// Checks the shared preconditions of profile construction and returns
/// `(n_sub, ell_ex)`.
pub(crate) fn validate_profile_args(ts: &TimeSeries, m: usize, k: usize) -> Result<(usize, usize)> {
    let n = ts.len();
    if m < 2 {
        return Err(Error::InvalidWindow(m));
    }
    if n < 2 * m {
        return Err(Error::SeriesTooShort { n, m });
    }
    let n_sub = n - m + 1;
    if k < 1 {
        return Err(Error::param("neighbor count k must be at least 1"));
    }
    if k >= n_sub {
        return Err(Error::param(format!(
            "neighbor count k = {k} must be below the subsequence count {n_sub}"
        )));
    }
    if n_sub >= NO_NEIGHBOR as usize {
        return Err(Error::param("series too long for 32-bit neighbor indices"));
    }
    Ok((n_sub, exclusion_length(m)))
}

/// Self-join profile tensor with exclusion length `floor(m / 2)`.
///
/// Runs on the current rayon pool; the result is identical for any number
/// of workers.
pub fn build_profile(
    ts: &TimeSeries,
    m: usize,
    k: usize,
    mode: Aggregation,
) -> Result<ProfileTensor> {
    build_profile_dims(ts, m, k, mode, ts.dims())
}

/// Like [`build_profile`] but keeps only the first `max_dims` profile
/// dimensions.
pub fn build_profile_dims(
    ts: &TimeSeries,
    m: usize,
    k: usize,
    mode: Aggregation,
    max_dims: usize,
) -> Result<ProfileTensor> {
    let (n_sub, ell_ex) = validate_profile_args(ts, m, k)?;
    let d = ts.dims();
    if max_dims < 1 || max_dims > d {
        return Err(Error::param(format!(
            "profile dimension count {max_dims} outside [1, {d}]"
        )));
    }
    let dp = max_dims;
    let stats = compute_sliding_stats(ts, m)?;
    let centered = centered_channels(ts, &stats);

    let per_query = dp * k;
    let mut values = vec![0.0; n_sub * per_query];
    let mut indices = vec![NO_NEIGHBOR; n_sub * per_query];
    values
        .par_chunks_mut(QUERY_BLOCK * per_query)
        .zip(indices.par_chunks_mut(QUERY_BLOCK * per_query))
        .enumerate()
        .for_each(|(b, (vals, idxs))| {
            let start = b * QUERY_BLOCK;
            let end = (start + QUERY_BLOCK).min(n_sub);
            let mut stream = RowStream::new(&stats, &centered, start, ell_ex);
            let mut row = DistanceRow::empty(n_sub, d);
            let mut scratch = KnnScratch::new(n_sub);
            let mut worker = match mode {
                Aggregation::Pre => QueryWorker::Pre {
                    agg: AggregatedRow::empty(n_sub, d),
                    sort_buf: Vec::with_capacity(d),
                },
                Aggregation::Post => QueryWorker::Post {
                    per_channel: vec![(0.0, NO_NEIGHBOR); d * k],
                    idx_buf: vec![0; k],
                    val_buf: vec![0.0; k],
                    column: Vec::with_capacity(d),
                },
            };
            for i in start..end {
                stream.next_into(&mut row);
                let o = (i - start) * per_query;
                worker.profile_query(
                    &row,
                    k,
                    ell_ex,
                    dp,
                    &mut scratch,
                    &mut idxs[o..o + per_query],
                    &mut vals[o..o + per_query],
                );
            }
        });
    Ok(ProfileTensor::from_parts(n_sub, dp, k, values, indices))
}

enum QueryWorker {
    Pre {
        agg: AggregatedRow,
        sort_buf: Vec<f64>,
    },
    Post {
        /// `(value, index)` of neighbor `l` on channel `c` at `c * k + l`.
        per_channel: Vec<(f64, u32)>,
        idx_buf: Vec<u32>,
        val_buf: Vec<f64>,
        column: Vec<(f64, u32)>,
    },
}

impl QueryWorker {
    #[allow(clippy::too_many_arguments)]
    fn profile_query(
        &mut self,
        row: &DistanceRow,
        k: usize,
        ell_ex: usize,
        dp: usize,
        scratch: &mut KnnScratch,
        out_idx: &mut [u32],
        out_val: &mut [f64],
    ) {
        match self {
            QueryWorker::Pre { agg, sort_buf } => {
                presort_into(row, agg, sort_buf, dp);
                for p in 0..dp {
                    let r = p * k..(p + 1) * k;
                    knn_into(
                        agg.dimension(p),
                        k,
                        ell_ex,
                        scratch,
                        &mut out_idx[r.clone()],
                        &mut out_val[r],
                    );
                }
            }
            QueryWorker::Post {
                per_channel,
                idx_buf,
                val_buf,
                column,
            } => {
                let d = row.dims();
                for c in 0..d {
                    knn_into(row.channel(c), k, ell_ex, scratch, idx_buf, val_buf);
                    for l in 0..k {
                        per_channel[c * k + l] = (val_buf[l], idx_buf[l]);
                    }
                }
                for l in 0..k {
                    column.clear();
                    column.extend((0..d).map(|c| per_channel[c * k + l]));
                    // stable: equal distances keep channel order
                    column.sort_by(|a, b| b.0.total_cmp(&a.0));
                    let mut sum = 0.0;
                    let mut prev = f64::INFINITY;
                    for (p, &(v, j)) in column.iter().take(dp).enumerate() {
                        sum += v;
                        let mean = (sum / (p + 1) as f64).min(prev);
                        prev = mean;
                        out_val[p * k + l] = mean;
                        out_idx[p * k + l] = j;
                    }
                }
            }
        }
    }
}
