//! LIBSVM / SVMlight text format: `label idx:val idx:val ...` with 1-based,
//! strictly increasing indices and optional `#` comments.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::problem::{CompositeProblem, FiniteSumObjective, LinearModel, Loss, Regularizer};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseDataset {
    /// Sorted `(index, value)` pairs per row, indices 0-based.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub labels: Vec<f64>,
    /// Largest 1-based index seen in the file.
    pub d_inferred: usize,
}

impl SparseDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Dense `n × d` copy; `d` defaults to `d_inferred`.
    pub fn to_dense(&self, d: Option<usize>) -> Result<Matrix> {
        let d = d.unwrap_or(self.d_inferred);
        if d < self.d_inferred {
            return Err(Error::DimensionMismatch { expected: self.d_inferred, got: d });
        }
        let mut m = Matrix::zeros(self.rows.len(), d);
        for (i, row) in self.rows.iter().enumerate() {
            let out = m.row_mut(i);
            for &(j, v) in row {
                out[j] = v;
            }
        }
        Ok(m)
    }

    /// Builds a linear-model problem. Logistic labels are mapped onto
    /// {-1, +1}; see [`normalize_binary_labels`].
    pub fn to_problem(&self, loss: Loss, regularizer: Regularizer) -> Result<CompositeProblem> {
        if self.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let targets = match loss {
            Loss::Logistic => normalize_binary_labels(&self.labels)?,
            Loss::LeastSquares => self.labels.clone(),
        };
        let model = LinearModel::new(loss, self.to_dense(None)?, targets)?;
        CompositeProblem::new(FiniteSumObjective::from_components(model)?, regularizer)
    }
}

/// Labels already in {-1, +1} are kept; any other pair of distinct values is
/// mapped smaller → -1, larger → +1. More than two classes is an error.
pub fn normalize_binary_labels(labels: &[f64]) -> Result<Vec<f64>> {
    if labels.iter().all(|&y| y == 1.0 || y == -1.0) {
        return Ok(labels.to_vec());
    }
    let mut classes: Vec<f64> = Vec::new();
    for &y in labels {
        if !classes.contains(&y) {
            classes.push(y);
            if classes.len() > 2 {
                return Err(Error::InvalidParameter(format!(
                    "logistic loss needs binary labels, found at least {:?}",
                    classes
                )));
            }
        }
    }
    if classes.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "cannot map the single label {} onto {{-1, +1}}",
            classes[0]
        )));
    }
    let lo = classes[0].min(classes[1]);
    Ok(labels.iter().map(|&y| if y == lo { -1.0 } else { 1.0 }).collect())
}

pub fn parse_libsvm_str(text: &str) -> Result<SparseDataset> {
    parse_libsvm(text.as_bytes())
}

pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<SparseDataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut d_inferred = 0usize;
    let mut last_line = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let line_no = lineno + 1;
        last_line = line_no;
        let line = line?;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let label: f64 = parse_float(label_tok, line_no, "label")?;

        let mut row: Vec<(usize, f64)> = Vec::new();
        for tok in tokens {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("malformed token '{tok}', expected index:value"),
            })?;
            let idx: usize = idx_s.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("malformed index '{idx_s}'"),
            })?;
            if idx == 0 {
                return Err(Error::Parse { line: line_no, message: "indices are 1-based; found 0".into() });
            }
            if let Some(&(prev, _)) = row.last() {
                if idx - 1 <= prev {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("index {idx} does not increase after {}", prev + 1),
                    });
                }
            }
            let val = parse_float(val_s, line_no, "value")?;
            d_inferred = d_inferred.max(idx);
            row.push((idx - 1, val));
        }
        rows.push(row);
        labels.push(label);
    }

    if rows.is_empty() {
        return Err(Error::Parse { line: last_line.max(1), message: "no data rows".into() });
    }
    Ok(SparseDataset { rows, labels, d_inferred })
}

fn parse_float(s: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Parse { line, message: format!("malformed {what} '{s}'") })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, message: format!("non-finite {what} '{s}'") });
    }
    Ok(v)
}

/// Writes with shortest round-trip float formatting, so parsing the output
/// recovers identical values.
pub fn write_libsvm<W: Write>(data: &SparseDataset, mut out: W) -> Result<()> {
    for (row, label) in data.rows.iter().zip(&data.labels) {
        write!(out, "{label}")?;
        for &(j, v) in row {
            write!(out, " {}:{v}", j + 1)?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn to_libsvm_string(data: &SparseDataset) -> String {
    let mut buf = Vec::new();
    write_libsvm(data, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}
