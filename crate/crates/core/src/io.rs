//! Checkpoint JSON, trace CSV and feature-dump import.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numlin::Mat;
use crate::scalar::Real;
use crate::ufm::{Hyper, TraceRow, UfmState, TRACE_HEADER};

/// On-disk state: row-major nested arrays. `H` may be empty when only the
/// classifier is stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    #[serde(rename = "K")]
    pub k: usize,
    pub d: usize,
    pub n: usize,
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    #[serde(rename = "H", default)]
    pub h: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

fn to_rows<T: Real>(m: &Mat<T>) -> Vec<Vec<f64>> {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|&x| x.to_f64_lossy()).collect())
        .collect()
}

fn from_rows<T: Real>(rows: &[Vec<f64>], shape: (usize, usize), what: &str) -> Result<Mat<T>> {
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        return Err(Error::Dimension(format!(
            "{what} must be {}x{}",
            shape.0, shape.1
        )));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("checkpoint entry"));
    }
    Ok(Mat::from_fn(shape.0, shape.1, |i, j| T::lit(rows[i][j])))
}

impl Checkpoint {
    pub fn from_state<T: Real>(state: &UfmState<T>, n: usize) -> Self {
        Self {
            k: state.w.rows(),
            d: state.w.cols(),
            n,
            w: to_rows(&state.w),
            h: to_rows(&state.h),
            b: state.b.iter().map(|x| x.to_f64_lossy()).collect(),
        }
    }

    pub fn has_features(&self) -> bool {
        !self.h.is_empty()
    }

    /// Classifier `(W, b)` only.
    pub fn classifier<T: Real>(&self) -> Result<(Mat<T>, Vec<T>)> {
        let w = from_rows(&self.w, (self.k, self.d), "W")?;
        if self.b.len() != self.k {
            return Err(Error::Dimension(format!("b must have {} entries", self.k)));
        }
        if self.b.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("checkpoint entry"));
        }
        Ok((w, self.b.iter().map(|&x| T::lit(x)).collect()))
    }

    pub fn to_state<T: Real>(&self) -> Result<UfmState<T>> {
        let (w, b) = self.classifier()?;
        if !self.has_features() {
            return Err(Error::InvalidArgument("checkpoint has no features H".into()));
        }
        let h = from_rows(&self.h, (self.d, self.n * self.k), "H")?;
        Ok(UfmState { w, h, b })
    }

    /// Errors unless the checkpoint dimensions equal those of `hyper`.
    pub fn check_hyper<T: Real>(&self, hyper: &Hyper<T>) -> Result<()> {
        if (self.k, self.d, self.n) != (hyper.k, hyper.d, hyper.n) {
            return Err(Error::Dimension(format!(
                "checkpoint has K={}, d={}, n={} but the problem has K={}, d={}, n={}",
                self.k, self.d, self.n, hyper.k, hyper.d, hyper.n
            )));
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut text = String::new();
        File::open(path)?.read_to_string(&mut text)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut out, self)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }
}

/// Writes trace rows as CSV with the fixed header.
pub fn write_trace<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, rows: &[TraceRow]) -> Result<()> {
    write_trace(BufWriter::new(File::create(path)?), rows)
}

/// Balanced feature dump in class-major layout (column `j` has label `j % K`).
#[derive(Debug, Clone)]
pub struct FeatureDump<T> {
    pub h: Mat<T>,
    pub k: usize,
    pub n: usize,
}

/// Reads `label,f0,f1,…` rows. Every label in `0..K` must occur equally
/// often; samples keep their file order within a class.
pub fn read_features<T: Real, R: Read>(input: R, k: usize) -> Result<FeatureDump<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("label") || header.len() < 2 {
        return Err(Error::InvalidArgument(
            "feature CSV must start with a `label` column followed by features".into(),
        ));
    }
    let d = header.len() - 1;
    let mut per_class: Vec<Vec<Vec<T>>> = vec![Vec::new(); k];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let label: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("row {}: bad label {:?}", line + 1, &rec[0])))?;
        if label >= k {
            return Err(Error::InvalidArgument(format!(
                "row {}: label {label} outside 0..{k}",
                line + 1
            )));
        }
        let feats = rec
            .iter()
            .skip(1)
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .map(T::lit)
                    .ok_or_else(|| Error::InvalidArgument(format!("row {}: bad feature {s:?}", line + 1)))
            })
            .collect::<Result<Vec<T>>>()?;
        per_class[label].push(feats);
    }
    let n = per_class[0].len();
    if n == 0 || per_class.iter().any(|c| c.len() != n) {
        let counts: Vec<usize> = per_class.iter().map(Vec::len).collect();
        return Err(Error::InvalidArgument(format!(
            "feature dump must be balanced and non-empty, class counts {counts:?}"
        )));
    }
    let h = Mat::from_fn(d, n * k, |a, j| per_class[j % k][j / k][a]);
    Ok(FeatureDump { h, k, n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn features_reordered_class_major() {
        let csv = "label,f0,f1\n1,10,11\n0,0,1\n0,2,3\n1,12,13\n";
        let dump = read_features::<f64, _>(csv.as_bytes(), 2).unwrap();
        assert_eq!(dump.n, 2);
        assert_eq!(dump.h.to_rows(), vec![vec![0.0, 10.0, 2.0, 12.0], vec![1.0, 11.0, 3.0, 13.0]]);
    }

    #[test]
    fn features_reject_unbalanced() {
        let csv = "label,f0\n0,1\n0,2\n1,3\n";
        assert!(read_features::<f64, _>(csv.as_bytes(), 2).is_err());
        let csv = "label,f0\n0,1\n2,3\n";
        assert!(read_features::<f64, _>(csv.as_bytes(), 2).is_err());
    }

    #[test]
    fn checkpoint_without_features() {
        let json = r#"{"K":2,"d":1,"n":3,"W":[[1.0],[-1.0]],"b":[0.0,0.0]}"#;
        let ck: Checkpoint = serde_json::from_str(json).unwrap();
        assert!(!ck.has_features());
        assert!(ck.classifier::<f64>().is_ok());
        assert!(ck.to_state::<f64>().is_err());
    }
}
