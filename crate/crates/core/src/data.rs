//! Datasets: sparse LIBSVM text, dense IDX images, and synthetic generators.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Binary-labelled sparse rows stored in compressed row form.
///
/// Column indices are 0-based and strictly increasing within each row;
/// labels are 0 or 1.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseDataset {
    cols: usize,
    row_ptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
    labels: Vec<f64>,
}

impl SparseDataset {
    pub fn new(cols: usize) -> Self {
        Self { cols, row_ptr: vec![0], ..Default::default() }
    }

    pub fn push_row(&mut self, entries: &[(usize, f64)], label: f64) -> Result<()> {
        if label != 0.0 && label != 1.0 {
            return Err(Error::invalid(format!("label must be 0 or 1, got {label}")));
        }
        let mut prev: Option<usize> = None;
        for &(j, v) in entries {
            if j >= self.cols {
                return Err(Error::invalid(format!("column {j} out of range for {} columns", self.cols)));
            }
            if prev.is_some_and(|p| j <= p) {
                return Err(Error::invalid("column indices must be strictly increasing"));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!("non-finite feature value at column {j}")));
            }
            prev = Some(j);
        }
        self.indices.extend(entries.iter().map(|&(j, _)| j as u32));
        self.values.extend(entries.iter().map(|&(_, v)| v));
        self.row_ptr.push(self.indices.len());
        self.labels.push(label);
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Widens the column count, e.g. to align a test file with its training file.
    pub fn with_cols(mut self, cols: usize) -> Result<Self> {
        if cols < self.cols {
            return Err(Error::invalid(format!("cannot shrink {} columns to {cols}", self.cols)));
        }
        self.cols = cols;
        Ok(self)
    }
}

fn parse_label(tok: &str, line: usize) -> Result<f64> {
    let v = f64::from_str(tok).map_err(|_| Error::Parse { line, message: format!("bad label `{tok}`") })?;
    if v == 1.0 {
        Ok(1.0)
    } else if v == -1.0 || v == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::Parse { line, message: format!("label `{tok}` is not binary (+1/-1/0/1)") })
    }
}

/// Parses LIBSVM text (`<label> <idx>:<val> ...`, 1-based indices, +1/-1 labels).
///
/// Column count is `expected_dim` when given, else the largest index seen.
pub fn parse_libsvm<R: BufRead>(reader: R, expected_dim: Option<usize>) -> Result<SparseDataset> {
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    let mut max_index = 0usize;
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label = parse_label(tokens.next().unwrap_or_default(), line_no)?;
        let mut entries = Vec::new();
        let mut prev = 0usize;
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected `index:value`, got `{tok}`"),
            })?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::Parse { line: line_no, message: format!("bad feature index `{idx}`") })?;
            let val: f64 = val
                .parse()
                .map_err(|_| Error::Parse { line: line_no, message: format!("bad feature value `{val}`") })?;
            if idx == 0 {
                return Err(Error::Parse { line: line_no, message: "feature indices are 1-based".into() });
            }
            if idx <= prev {
                return Err(Error::Parse { line: line_no, message: format!("feature index {idx} not increasing") });
            }
            if !val.is_finite() {
                return Err(Error::Parse { line: line_no, message: format!("non-finite value `{val}`") });
            }
            if let Some(dim) = expected_dim {
                if idx > dim {
                    return Err(Error::Dimension { line: line_no, index: idx, dim });
                }
            }
            prev = idx;
            max_index = max_index.max(idx);
            entries.push((idx - 1, val));
        }
        rows.push((entries, label));
    }
    let mut data = SparseDataset::new(expected_dim.unwrap_or(max_index));
    for (entries, label) in rows {
        data.push_row(&entries, label)?;
    }
    Ok(data)
}

pub fn load_libsvm(path: impl AsRef<Path>, expected_dim: Option<usize>) -> Result<SparseDataset> {
    parse_libsvm(BufReader::new(File::open(path)?), expected_dim)
}

/// Dense row-major features with integer class labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseDataset {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub dim: usize,
    pub classes: usize,
}

impl DenseDataset {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, dim: usize, classes: usize) -> Result<Self> {
        if dim == 0 || features.len() != labels.len() * dim {
            return Err(Error::invalid(format!(
                "{} feature values do not form {} rows of width {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::invalid(format!("label {bad} out of range for {classes} classes")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite feature value"));
        }
        Ok(Self { features, labels, dim, classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Binary dense data as sparse rows (zeros dropped), for logistic regression.
    pub fn to_sparse(&self) -> Result<SparseDataset> {
        if self.classes != 2 {
            return Err(Error::invalid("sparse conversion needs a binary dataset"));
        }
        let mut out = SparseDataset::new(self.dim);
        for i in 0..self.len() {
            let entries: Vec<(usize, f64)> =
                self.row(i).iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect();
            out.push_row(&entries, self.labels[i] as f64)?;
        }
        Ok(out)
    }
}

const IDX_IMAGES: u32 = 0x0000_0803;
const IDX_LABELS: u32 = 0x0000_0801;

fn read_u32_be<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_be_bytes(buf))
}

/// Reads an IDX image file and its label file; pixels are scaled to `[0, 1]`.
pub fn parse_idx<R1: Read, R2: Read>(mut images: R1, mut labels: R2) -> Result<DenseDataset> {
    let magic = read_u32_be(&mut images)?;
    if magic != IDX_IMAGES {
        return Err(Error::Parse { line: 0, message: format!("bad IDX image magic {magic:#010x}") });
    }
    let n = read_u32_be(&mut images)? as usize;
    let rows = read_u32_be(&mut images)? as usize;
    let cols = read_u32_be(&mut images)? as usize;
    let magic = read_u32_be(&mut labels)?;
    if magic != IDX_LABELS {
        return Err(Error::Parse { line: 0, message: format!("bad IDX label magic {magic:#010x}") });
    }
    let n_labels = read_u32_be(&mut labels)? as usize;
    if n_labels != n {
        return Err(Error::invalid(format!("{n} images but {n_labels} labels")));
    }
    let mut pixels = vec![0u8; n * rows * cols];
    images.read_exact(&mut pixels)?;
    let mut raw_labels = vec![0u8; n];
    labels.read_exact(&mut raw_labels)?;
    let classes = raw_labels.iter().copied().max().map_or(0, |m| m as usize + 1);
    DenseDataset::new(
        pixels.into_iter().map(|p| p as f64 / 255.0).collect(),
        raw_labels.into_iter().map(usize::from).collect(),
        rows * cols,
        classes.max(2),
    )
}

pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<DenseDataset> {
    parse_idx(BufReader::new(File::open(images)?), BufReader::new(File::open(labels)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    /// Unit-variance blobs centred at `(2, 2)` and `(-2, -2)`.
    TwoGaussians,
    /// Four blobs at `(+-1.5, +-1.5)` with sd 0.5; class 0 where the signs agree.
    XorQuadrants,
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-gaussians" => Ok(SynthKind::TwoGaussians),
            "xor-quadrants" => Ok(SynthKind::XorQuadrants),
            other => Err(Error::invalid(format!("unknown synthetic dataset `{other}`"))),
        }
    }
}

/// Reproducible 2-D binary dataset; labels alternate so classes are balanced.
pub fn synth_classification(n: usize, kind: SynthKind, seed: u64) -> DenseDataset {
    let mut rng = RngStream::new(seed, 0x5e_ed);
    let mut features = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let (cx, cy, sd) = match kind {
            SynthKind::TwoGaussians => {
                let s = if label == 0 { 2.0 } else { -2.0 };
                (s, s, 1.0)
            }
            SynthKind::XorQuadrants => {
                let sx = if rng.uniform() < 0.5 { 1.5 } else { -1.5 };
                // class 0: same signs, class 1: opposite signs
                let sy = if label == 0 { sx } else { -sx };
                (sx, sy, 0.5)
            }
        };
        features.push(cx + sd * rng.normal());
        features.push(cy + sd * rng.normal());
        labels.push(label);
    }
    DenseDataset { features, labels, dim: 2, classes: 2 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, dim: Option<usize>) -> Result<SparseDataset> {
        parse_libsvm(text.as_bytes(), dim)
    }

    #[test]
    fn libsvm_line() {
        let d = parse("+1 3:1 11:0.5\n", None).unwrap();
        assert_eq!(d.rows(), 1);
        assert_eq!(d.cols(), 11);
        assert_eq!(d.label(0), 1.0);
        let (ix, vals) = d.row(0);
        assert_eq!(ix, &[2, 10]);
        assert_eq!(vals, &[1.0, 0.5]);
    }

    #[test]
    fn libsvm_empty_row() {
        let d = parse("-1\n+1 1:2\n", Some(4)).unwrap();
        assert_eq!(d.label(0), 0.0);
        assert!(d.row(0).0.is_empty());
        assert_eq!(d.cols(), 4);
    }

    #[test]
    fn libsvm_errors_carry_line() {
        match parse("+1 1:1\n+1 2:x\n", None) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse("+1 1:1\n-1 5:1\n", Some(4)) {
            Err(Error::Dimension { line: 2, index: 5, dim: 4 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("2 1:1\n", None), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("+1 3:1 2:1\n", None), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("+1 0:1\n", None), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn idx_round_trip() {
        let mut img = Vec::new();
        for v in [IDX_IMAGES, 2, 1, 2] {
            img.extend_from_slice(&v.to_be_bytes());
        }
        img.extend_from_slice(&[0, 255, 51, 0]);
        let mut lab = Vec::new();
        for v in [IDX_LABELS, 2] {
            lab.extend_from_slice(&v.to_be_bytes());
        }
        lab.extend_from_slice(&[3, 1]);
        let d = parse_idx(img.as_slice(), lab.as_slice()).unwrap();
        assert_eq!(d.dim, 2);
        assert_eq!(d.classes, 4);
        assert_eq!(d.labels, vec![3, 1]);
        assert_eq!(d.row(0), &[0.0, 1.0]);
        assert!((d.row(1)[0] - 0.2).abs() < 1e-12);

        let mut bad = img.clone();
        bad[3] = 0x01;
        assert!(parse_idx(bad.as_slice(), lab.as_slice()).is_err());
    }

    #[test]
    fn synth_is_deterministic_and_balanced() {
        for kind in [SynthKind::TwoGaussians, SynthKind::XorQuadrants] {
            let a = synth_classification(101, kind, 7);
            assert_eq!(a, synth_classification(101, kind, 7));
            assert_ne!(a, synth_classification(101, kind, 8));
            let ones = a.labels.iter().filter(|&&y| y == 1).count();
            assert!((ones as i64 - (101 - ones) as i64).abs() <= 1);
        }
    }

    #[test]
    fn two_gaussians_nearly_separable() {
        // Bayes rule for symmetric blobs: sign of x + y. Analytic error is
        // Phi(-2 sqrt 2) ~ 0.23%.
        let d = synth_classification(20_000, SynthKind::TwoGaussians, 3);
        let wrong = (0..d.len())
            .filter(|&i| {
                let r = d.row(i);
                let guess = if r[0] + r[1] > 0.0 { 0 } else { 1 };
                guess != d.labels[i]
            })
            .count();
        assert!((wrong as f64) / (d.len() as f64) < 0.01);
    }
}
