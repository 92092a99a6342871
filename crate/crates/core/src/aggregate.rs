//! Dimensional aggregation of per-channel distances.
//!
//! Both strategies sort channel distances in descending order and replace
//! them with cumulative means, so profile dimension `p` (1-based) holds the
//! mean of the `p` largest channel distances. Pre-sorting does this for
//! every subsequence pair before neighbor selection; post-sorting does it on
//! per-channel neighbor distances after selection.

use crate::distance::DistanceRow;

/// Pre-sorted distances from one query to every reference.
///
/// Stored dimension-major: `agg[p * n_ref + j]` with `p` 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedRow {
    query_index: usize,
    n_ref: usize,
    dims: usize,
    agg: Vec<f64>,
}

impl AggregatedRow {
    pub(crate) fn empty(n_ref: usize, dims: usize) -> Self {
        Self {
            query_index: 0,
            n_ref,
            dims,
            agg: vec![0.0; n_ref * dims],
        }
    }

    pub fn query_index(&self) -> usize {
        self.query_index
    }

    pub fn n_ref(&self) -> usize {
        self.n_ref
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Aggregated distance to reference `j` at 0-based profile dimension `p`.
    pub fn get(&self, j: usize, p: usize) -> f64 {
        self.agg[p * self.n_ref + j]
    }

    /// All references at 0-based profile dimension `p`.
    pub fn dimension(&self, p: usize) -> &[f64] {
        &self.agg[p * self.n_ref..(p + 1) * self.n_ref]
    }
}

/// Sorts descending in place, then overwrites with cumulative means.
///
/// Each mean is capped by its predecessor so rounding cannot break the
/// nonincreasing order.
pub(crate) fn descending_cumulative_means(values: &mut [f64]) {
    values.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for (p, v) in values.iter_mut().enumerate() {
        sum += *v;
        let mean = sum / (p + 1) as f64;
        *v = if mean > prev { prev } else { mean };
        prev = *v;
    }
}

pub fn presort_aggregate(row: &DistanceRow) -> AggregatedRow {
    let mut out = AggregatedRow::empty(row.n_ref(), row.dims());
    presort_into(row, &mut out, &mut Vec::new(), row.dims());
    out
}

/// Fills the first `dp` profile dimensions of `out`; the rest are left
/// untouched.
pub(crate) fn presort_into(
    row: &DistanceRow,
    out: &mut AggregatedRow,
    scratch: &mut Vec<f64>,
    dp: usize,
) {
    let (n_ref, dims) = (row.n_ref(), row.dims());
    debug_assert_eq!((out.n_ref, out.dims), (n_ref, dims));
    debug_assert!(dp >= 1 && dp <= dims);
    out.query_index = row.query_index();
    if dims == 1 {
        out.agg.copy_from_slice(row.channel(0));
        return;
    }
    if dp == 1 {
        // the first cumulative mean is the maximum
        let first = &mut out.agg[..n_ref];
        first.copy_from_slice(row.channel(0));
        for c in 1..dims {
            for (slot, &v) in first.iter_mut().zip(row.channel(c)) {
                if v.total_cmp(slot).is_gt() {
                    *slot = v;
                }
            }
        }
        return;
    }
    for j in 0..n_ref {
        scratch.clear();
        scratch.extend(row.pair(j));
        descending_cumulative_means(scratch);
        for (p, v) in scratch[..dp].iter().enumerate() {
            out.agg[p * n_ref + j] = *v;
        }
    }
}

/// Sorts each row of per-channel profile values descending and takes
/// cumulative means.
pub fn postsort_aggregate(per_dim_profiles: &[Vec<f64>]) -> Vec<Vec<f64>> {
    per_dim_profiles
        .iter()
        .map(|row| {
            let mut row = row.clone();
            descending_cumulative_means(&mut row);
            row
        })
        .collect()
}
