//! Sliding-window z-normalized Euclidean distances.
//!
//! Distances are derived from the Pearson correlation `rho` of two windows
//! of length `m` as `sqrt(max(0, 2m(1 - rho)))`. A window whose values are
//! all identical is constant: two constant windows are at distance 0, and a
//! constant window is at `sqrt(2m)` from any non-constant one.

use crate::error::{Error, Result};
use crate::io::TimeSeries;

/// Per-channel rolling mean and population standard deviation.
#[derive(Debug, Clone)]
pub struct SlidingStats {
    m: usize,
    n_sub: usize,
    /// Channel means used to center data before taking dot products.
    offsets: Vec<f64>,
    /// Window means of the centered channel.
    means: Vec<Vec<f64>>,
    stds: Vec<Vec<f64>>,
}

impl SlidingStats {
    pub fn window(&self) -> usize {
        self.m
    }

    pub fn n_sub(&self) -> usize {
        self.n_sub
    }

    /// Window means of channel `c` in the original units.
    pub fn means(&self, c: usize) -> Vec<f64> {
        self.means[c]
            .iter()
            .map(|mu| mu + self.offsets[c])
            .collect()
    }

    pub fn stds(&self, c: usize) -> &[f64] {
        &self.stds[c]
    }

    fn centered(&self, ts: &TimeSeries, c: usize) -> Vec<f64> {
        ts.channel(c).iter().map(|v| v - self.offsets[c]).collect()
    }
}

/// Rolling statistics for every channel, via cumulative sums.
///
/// Windows whose values are all identical get a standard deviation of
/// exactly zero.
pub fn compute_sliding_stats(ts: &TimeSeries, m: usize) -> Result<SlidingStats> {
    let n = ts.len();
    if m < 1 {
        return Err(Error::InvalidWindow(m));
    }
    if m > n {
        return Err(Error::WindowTooLong { m, n });
    }
    let n_sub = n - m + 1;
    let mut offsets = Vec::with_capacity(ts.dims());
    let mut means = Vec::with_capacity(ts.dims());
    let mut stds = Vec::with_capacity(ts.dims());
    for ch in ts.channels() {
        let offset = ch.iter().sum::<f64>() / n as f64;
        let (mu, sd) = channel_stats(ch, offset, m);
        offsets.push(offset);
        means.push(mu);
        stds.push(sd);
    }
    Ok(SlidingStats {
        m,
        n_sub,
        offsets,
        means,
        stds,
    })
}

fn channel_stats(ch: &[f64], offset: f64, m: usize) -> (Vec<f64>, Vec<f64>) {
    let n = ch.len();
    let n_sub = n - m + 1;
    let mut s1 = vec![0.0; n + 1];
    let mut s2 = vec![0.0; n + 1];
    for (t, v) in ch.iter().enumerate() {
        let x = v - offset;
        s1[t + 1] = s1[t] + x;
        s2[t + 1] = s2[t] + x * x;
    }
    // run[t]: first index after t holding a different value
    let mut run = vec![n; n];
    for t in (0..n.saturating_sub(1)).rev() {
        run[t] = if ch[t + 1] == ch[t] {
            run[t + 1]
        } else {
            t + 1
        };
    }
    let mf = m as f64;
    let mut means = Vec::with_capacity(n_sub);
    let mut stds = Vec::with_capacity(n_sub);
    for i in 0..n_sub {
        let mu = (s1[i + m] - s1[i]) / mf;
        means.push(mu);
        if run[i] >= i + m {
            stds.push(0.0);
        } else {
            let var = (s2[i + m] - s2[i]) / mf - mu * mu;
            stds.push(var.max(0.0).sqrt());
        }
    }
    (means, stds)
}

/// Distances from one query subsequence to every reference subsequence.
///
/// Stored channel-major: `dists[c * n_ref + j]`. Masked entries are `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceRow {
    query_index: usize,
    n_ref: usize,
    dims: usize,
    dists: Vec<f64>,
}

impl DistanceRow {
    pub(crate) fn empty(n_ref: usize, dims: usize) -> Self {
        Self {
            query_index: 0,
            n_ref,
            dims,
            dists: vec![0.0; n_ref * dims],
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

    pub fn get(&self, j: usize, c: usize) -> f64 {
        self.dists[c * self.n_ref + j]
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.dists[c * self.n_ref..(c + 1) * self.n_ref]
    }

    /// Distances of reference `j` across channels.
    pub fn pair(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.dims).map(move |c| self.get(j, c))
    }

    /// Sets the self-join exclusion zone `|j - i| <= ell_ex` to `+inf`.
    pub(crate) fn mask_exclusion(&mut self, ell_ex: usize) {
        let lo = self.query_index.saturating_sub(ell_ex);
        let hi = (self.query_index + ell_ex + 1).min(self.n_ref);
        for c in 0..self.dims {
            let row = &mut self.dists[c * self.n_ref..(c + 1) * self.n_ref];
            row[lo..hi].fill(f64::INFINITY);
        }
    }
}

#[inline]
fn distance_from_dot(dot: f64, m: f64, mu_q: f64, sd_q: f64, mu_r: f64, sd_r: f64) -> f64 {
    match (sd_q == 0.0, sd_r == 0.0) {
        (true, true) => 0.0,
        (true, false) | (false, true) => (2.0 * m).sqrt(),
        (false, false) => {
            let rho = (dot - m * mu_q * mu_r) / (m * sd_q * sd_r);
            (2.0 * m * (1.0 - rho)).max(0.0).sqrt()
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Computes one row of the distance tensor with direct inner products.
///
/// In self-join mode the query's exclusion zone `|j - i| <= ell_ex` is
/// masked with `+inf`.
pub fn znorm_distance_row(
    ts: &TimeSeries,
    stats: &SlidingStats,
    i: usize,
    self_join: bool,
    ell_ex: usize,
) -> Result<DistanceRow> {
    let n_sub = stats.n_sub;
    if i >= n_sub {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: n_sub,
        });
    }
    let m = stats.m;
    let mf = m as f64;
    let mut row = DistanceRow::empty(n_sub, ts.dims());
    row.query_index = i;
    for c in 0..ts.dims() {
        let x = stats.centered(ts, c);
        let (mu, sd) = (&stats.means[c], &stats.stds[c]);
        let q = &x[i..i + m];
        let out = &mut row.dists[c * n_sub..(c + 1) * n_sub];
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = if j == i {
                0.0
            } else {
                distance_from_dot(dot(q, &x[j..j + m]), mf, mu[i], sd[i], mu[j], sd[j])
            };
        }
    }
    if self_join {
        row.mask_exclusion(ell_ex);
    }
    Ok(row)
}

/// Masked self-join rows for queries `start..start + count`, computed the
/// way the profile builder computes them (one stream from `start`).
pub fn streamed_rows(
    ts: &TimeSeries,
    stats: &SlidingStats,
    start: usize,
    count: usize,
    ell_ex: usize,
) -> Result<Vec<DistanceRow>> {
    let n_sub = stats.n_sub;
    if start + count > n_sub {
        return Err(Error::IndexOutOfRange {
            index: start + count,
            len: n_sub,
        });
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let centered = centered_channels(ts, stats);
    let mut stream = RowStream::new(stats, &centered, start, ell_ex);
    Ok((0..count)
        .map(|_| {
            let mut row = DistanceRow::empty(n_sub, ts.dims());
            stream.next_into(&mut row);
            row
        })
        .collect())
}

/// Streams consecutive self-join rows, updating sliding dot products in
/// O(n_ref) per channel.
///
/// A stream always starts with a direct O(n_ref * m) computation, so rows
/// produced from the same starting query are bit-identical no matter how
/// the query range is split across workers.
pub(crate) struct RowStream<'a> {
    stats: &'a SlidingStats,
    centered: &'a [Vec<f64>],
    ell_ex: usize,
    /// Per-channel dot products of the current query with every reference.
    dots: Vec<Vec<f64>>,
    next: usize,
}

/// Centered copies of every channel, shared by all streams.
pub(crate) fn centered_channels(ts: &TimeSeries, stats: &SlidingStats) -> Vec<Vec<f64>> {
    (0..ts.dims()).map(|c| stats.centered(ts, c)).collect()
}

impl<'a> RowStream<'a> {
    pub(crate) fn new(
        stats: &'a SlidingStats,
        centered: &'a [Vec<f64>],
        start: usize,
        ell_ex: usize,
    ) -> Self {
        let m = stats.m;
        let dots = centered
            .iter()
            .map(|x| {
                let q = &x[start..start + m];
                (0..stats.n_sub).map(|j| dot(q, &x[j..j + m])).collect()
            })
            .collect();
        Self {
            stats,
            centered,
            ell_ex,
            dots,
            next: start,
        }
    }

    /// Writes the next query's masked row into `row`.
    pub(crate) fn next_into(&mut self, row: &mut DistanceRow) {
        let i = self.next;
        let m = self.stats.m;
        let n_sub = self.stats.n_sub;
        let mf = m as f64;
        row.query_index = i;
        for c in 0..self.centered.len() {
            let (mu, sd) = (&self.stats.means[c], &self.stats.stds[c]);
            let dots = &self.dots[c];
            let out = &mut row.dists[c * n_sub..(c + 1) * n_sub];
            for (j, slot) in out.iter_mut().enumerate() {
                *slot = distance_from_dot(dots[j], mf, mu[i], sd[i], mu[j], sd[j]);
            }
            out[i] = 0.0;
        }
        row.mask_exclusion(self.ell_ex);

        // advance dot products to query i + 1
        if i + 1 < n_sub {
            for (c, x) in self.centered.iter().enumerate() {
                let dots = &mut self.dots[c];
                let out_head = x[i];
                let in_tail = x[i + m];
                for j in (1..n_sub).rev() {
                    dots[j] = dots[j - 1] - out_head * x[j - 1] + in_tail * x[j + m - 1];
                }
                dots[0] = dot(&x[i + 1..i + 1 + m], &x[0..m]);
            }
        }
        self.next = i + 1;
    }
}

/// Reference distance between two equal-length windows, z-normalizing each
/// explicitly with the population standard deviation.
pub fn znorm_distance_pair_oracle(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            what: "window pair",
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: a.len(),
        });
    }
    let is_const = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    let m = a.len() as f64;
    match (is_const(a), is_const(b)) {
        (true, true) => return Ok(0.0),
        (true, false) | (false, true) => return Ok((2.0 * m).sqrt()),
        _ => {}
    }
    let znorm = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / m;
        let sd = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / m).sqrt();
        v.iter().map(|x| (x - mean) / sd).collect::<Vec<_>>()
    };
    let (za, zb) = (znorm(a), znorm(b));
    Ok(za
        .iter()
        .zip(&zb)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}
