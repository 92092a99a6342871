//! Time series, score vectors, and their CSV representations.
//!
//! Series files carry a header row naming each channel. A column named
//! exactly `Label` holds 0/1 ground truth and is split off from the data
//! channels. Score files have a single `score` header followed by one value
//! per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Column name that marks ground-truth labels in series files.
pub const LABEL_COLUMN: &str = "Label";

/// Header line of score files.
pub const SCORE_HEADER: &str = "score";

/// Channels with a population standard deviation below this are only
/// centered by [`zscore_normalize`].
pub const MIN_SCALE: f64 = 1e-12;

/// An `n x d` real-valued series, stored channel by channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    channels: Vec<Vec<f64>>,
    names: Vec<String>,
    labels: Option<Vec<u8>>,
}

impl TimeSeries {
    /// Builds a series from per-channel columns, checking every invariant.
    pub fn new(
        channels: Vec<Vec<f64>>,
        names: Vec<String>,
        labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::Format("series has no data channels".into()));
        }
        if names.len() != channels.len() {
            return Err(Error::LengthMismatch {
                what: "channel names",
                expected: channels.len(),
                got: names.len(),
            });
        }
        let n = channels[0].len();
        if n == 0 {
            return Err(Error::Format("series has no rows".into()));
        }
        for (c, ch) in channels.iter().enumerate() {
            if ch.len() != n {
                return Err(Error::LengthMismatch {
                    what: "channel length",
                    expected: n,
                    got: ch.len(),
                });
            }
            if let Some(row) = ch.iter().position(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    row,
                    column: c,
                    value: ch[row].to_string(),
                });
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::LengthMismatch {
                    what: "labels",
                    expected: n,
                    got: labels.len(),
                });
            }
            if let Some(row) = labels.iter().position(|&l| l > 1) {
                return Err(Error::Label {
                    row,
                    value: labels[row].to_string(),
                });
            }
        }
        Ok(Self {
            channels,
            names,
            labels,
        })
    }

    /// Unlabeled series with channels named `c0, c1, ...`.
    pub fn from_channels(channels: Vec<Vec<f64>>) -> Result<Self> {
        let names = (0..channels.len()).map(|c| format!("c{c}")).collect();
        Self::new(channels, names, None)
    }

    /// Univariate unlabeled series.
    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        Self::from_channels(vec![values])
    }

    pub fn with_labels(self, labels: Vec<u8>) -> Result<Self> {
        Self::new(self.channels, self.names, Some(labels))
    }

    /// Number of timestamps.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    /// Always false; a series holds at least one timestamp.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of channels.
    pub fn dims(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.channels[c]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    /// Applies `f` to every channel, keeping names and labels.
    pub(crate) fn map_channels(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        Self {
            channels: self.channels.iter().map(|ch| f(ch)).collect(),
            names: self.names.clone(),
            labels: self.labels.clone(),
        }
    }

    /// Keeps every `step`-th timestamp starting at 0, labels included.
    pub fn decimate(&self, step: usize) -> Self {
        let pick = |v: &[f64]| v.iter().step_by(step).copied().collect::<Vec<_>>();
        Self {
            channels: self.channels.iter().map(|ch| pick(ch)).collect(),
            names: self.names.clone(),
            labels: self
                .labels
                .as_ref()
                .map(|l| l.iter().step_by(step).copied().collect()),
        }
    }
}

/// Length-`n` anomaly scores; larger means more anomalous.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(scores: Vec<f64>) -> Self {
        Self(scores)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for ScoreVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl AsRef<[f64]> for ScoreVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a labeled or unlabeled series from a CSV file with a header row.
pub fn read_csv(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let file = File::open(path)?;
    read_csv_from(file)
}

/// Same as [`read_csv`] over any reader.
pub fn read_csv_from<R: std::io::Read>(reader: R) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::Format("missing header row".into()));
    }
    if header.iter().all(|h| h.parse::<f64>().is_ok()) {
        return Err(Error::Format(
            "missing header row (first line is numeric)".into(),
        ));
    }

    let label_col = header.iter().position(|h| h == LABEL_COLUMN);
    let data_cols: Vec<usize> = (0..header.len())
        .filter(|&c| Some(c) != label_col)
        .collect();
    if data_cols.is_empty() {
        return Err(Error::Format("zero data columns".into()));
    }
    let names = data_cols.iter().map(|&c| header[c].to_string()).collect();

    let mut channels = vec![Vec::new(); data_cols.len()];
    let mut labels = label_col.map(|_| Vec::new());
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        for (slot, &c) in data_cols.iter().enumerate() {
            let cell = &record[c];
            let v = parse_finite(cell).ok_or_else(|| Error::Parse {
                row,
                column: c,
                value: cell.to_string(),
            })?;
            channels[slot].push(v);
        }
        if let (Some(c), Some(labels)) = (label_col, labels.as_mut()) {
            let cell = &record[c];
            let label = match cell.parse::<f64>() {
                Ok(0.0) => 0,
                Ok(1.0) => 1,
                _ => {
                    return Err(Error::Label {
                        row,
                        value: cell.to_string(),
                    })
                }
            };
            labels.push(label);
        }
    }
    if channels[0].is_empty() {
        return Err(Error::Format("no data rows".into()));
    }
    TimeSeries::new(channels, names, labels)
}

/// Writes a series in the format [`read_csv`] reads, `Label` last.
///
/// Values use the shortest representation that round-trips exactly.
pub fn write_csv(ts: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    write_csv_to(ts, BufWriter::new(file))
}

pub fn write_csv_to<W: Write>(ts: &TimeSeries, writer: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let mut header: Vec<&str> = ts.names().iter().map(String::as_str).collect();
    if ts.labels().is_some() {
        header.push(LABEL_COLUMN);
    }
    wtr.write_record(&header)?;
    let mut fields = Vec::with_capacity(header.len());
    for t in 0..ts.len() {
        fields.clear();
        fields.extend(ts.channels().iter().map(|ch| ch[t].to_string()));
        if let Some(labels) = ts.labels() {
            fields.push(labels[t].to_string());
        }
        wtr.write_record(&fields)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Per-channel z-score normalization with population standard deviation.
///
/// Channels whose standard deviation is below [`MIN_SCALE`] are centered
/// but not scaled.
pub fn zscore_normalize(ts: &TimeSeries) -> Result<TimeSeries> {
    let n = ts.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    Ok(ts.map_channels(|ch| {
        let mean = ch.iter().sum::<f64>() / n as f64;
        let var = ch.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        if std < MIN_SCALE {
            ch.iter().map(|v| v - mean).collect()
        } else {
            ch.iter().map(|v| (v - mean) / std).collect()
        }
    }))
}

/// Writes scores one per line under a `score` header, 17 significant digits.
pub fn write_scores(scores: &ScoreVector, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    write_scores_to(scores, BufWriter::new(file))
}

pub fn write_scores_to<W: Write>(scores: &ScoreVector, mut w: W) -> Result<()> {
    writeln!(w, "{SCORE_HEADER}")?;
    for v in scores.as_slice() {
        writeln!(w, "{v:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<ScoreVector> {
    let file = File::open(path)?;
    read_scores_from(BufReader::new(file))
}

pub fn read_scores_from<R: BufRead>(reader: R) -> Result<ScoreVector> {
    let mut lines = reader.lines();
    match lines.next() {
        None => return Err(Error::Format("empty score file".into())),
        Some(header) => {
            let header = header?;
            if header.trim() != SCORE_HEADER {
                return Err(Error::Format(format!(
                    "expected header {SCORE_HEADER:?}, found {header:?}"
                )));
            }
        }
    }
    let mut scores = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line?;
        let cell = line.trim();
        let v = parse_finite(cell).ok_or_else(|| Error::Parse {
            row,
            column: 0,
            value: cell.to_string(),
        })?;
        scores.push(v);
    }
    Ok(ScoreVector(scores))
}
