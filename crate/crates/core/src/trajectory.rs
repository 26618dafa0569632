//! Time-indexed per-agent values and their CSV form.
//!
//! The CSV layout is `t,agent_1,...,agent_R` with one row per recorded time.
//! Monte Carlo means carry a second file, `<stem>_stderr.csv`, of the same
//! shape. Floats are written in shortest round-trip form so a bundle read
//! back from disk is bit-identical to the one written.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    SingleRun,
    McMean,
    ExactExpectation,
}

impl TrajectoryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TrajectoryKind::SingleRun => "single_run",
            TrajectoryKind::McMean => "mc_mean",
            TrajectoryKind::ExactExpectation => "exact_expectation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryMeta {
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    /// Standard error per entry, same shape as `values` (Monte Carlo only).
    pub stderr: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBundle {
    pub kind: TrajectoryKind,
    pub times: Vec<u64>,
    pub values: Vec<Vec<f64>>,
    pub meta: TrajectoryMeta,
}

impl TrajectoryBundle {
    pub fn new(kind: TrajectoryKind) -> Self {
        TrajectoryBundle {
            kind,
            times: Vec::new(),
            values: Vec::new(),
            meta: TrajectoryMeta::default(),
        }
    }

    pub(crate) fn push(&mut self, t: u64, x: &[f64]) {
        debug_assert!(self.times.last().is_none_or(|&last| last < t));
        self.times.push(t);
        self.values.push(x.to_vec());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of agents per record.
    pub fn width(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn last_time(&self) -> Option<u64> {
        self.times.last().copied()
    }

    /// Values recorded at exactly time `t`, if any.
    pub fn at(&self, t: u64) -> Option<&[f64]> {
        self.times
            .binary_search(&t)
            .ok()
            .map(|k| self.values[k].as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &[f64])> {
        self.times
            .iter()
            .copied()
            .zip(self.values.iter().map(Vec::as_slice))
    }

    /// Checks the structural invariants: strictly increasing times and a
    /// constant record width.
    pub fn validate(&self) -> Result<()> {
        let w = self.width();
        for (k, pair) in self.times.windows(2).enumerate() {
            if pair[0] >= pair[1] {
                return Err(Error::Malformed {
                    path: PathBuf::new(),
                    msg: format!("times not strictly increasing at record {}", k + 1),
                });
            }
        }
        if let Some(row) = self.values.iter().find(|r| r.len() != w) {
            return Err(Error::DimensionMismatch {
                what: "trajectory record",
                expected: w,
                actual: row.len(),
            });
        }
        Ok(())
    }

    pub fn stderr_path(path: &Path) -> PathBuf {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        path.with_file_name(format!("{stem}_stderr.csv"))
    }

    /// Writes the bundle (and its stderr companion when present). Returns the
    /// paths written.
    pub fn write_csv(&self, path: &Path) -> Result<Vec<PathBuf>> {
        write_table(path, &self.times, &self.values)?;
        let mut written = vec![path.to_path_buf()];
        if let Some(se) = &self.meta.stderr {
            let se_path = Self::stderr_path(path);
            write_table(&se_path, &self.times, se)?;
            written.push(se_path);
        }
        Ok(written)
    }

    /// Reads a bundle written by [`write_csv`](Self::write_csv). For
    /// `McMean` the stderr companion is loaded if it exists.
    pub fn read_csv(path: &Path, kind: TrajectoryKind) -> Result<Self> {
        let (times, values) = read_table(path)?;
        let mut bundle = TrajectoryBundle {
            kind,
            times,
            values,
            meta: TrajectoryMeta::default(),
        };
        if kind == TrajectoryKind::McMean {
            let se_path = Self::stderr_path(path);
            if se_path.exists() {
                let (se_times, se) = read_table(&se_path)?;
                if se_times != bundle.times {
                    return Err(Error::Malformed {
                        path: se_path,
                        msg: "stderr times differ from mean times".into(),
                    });
                }
                bundle.meta.stderr = Some(se);
            }
        }
        bundle.validate().map_err(|e| match e {
            Error::Malformed { msg, .. } => Error::Malformed {
                path: path.to_path_buf(),
                msg,
            },
            other => other,
        })?;
        Ok(bundle)
    }
}

fn write_table(path: &Path, times: &[u64], values: &[Vec<f64>]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let width = values.first().map_or(0, Vec::len);
    let mut header = String::from("t");
    for k in 1..=width {
        header.push_str(&format!(",agent_{k}"));
    }
    writeln!(out, "{header}").map_err(|e| Error::io(path, e))?;
    let mut line = String::new();
    for (t, row) in times.iter().zip(values) {
        line.clear();
        line.push_str(&t.to_string());
        for v in row {
            line.push(',');
            line.push_str(&format!("{v:?}"));
        }
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn read_table(path: &Path) -> Result<(Vec<u64>, Vec<Vec<f64>>)> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let malformed = |msg: String| Error::Malformed {
        path: path.to_path_buf(),
        msg,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.get(0) != Some("t") {
        return Err(malformed("first column must be `t`".into()));
    }
    for (k, name) in header.iter().skip(1).enumerate() {
        if name != format!("agent_{}", k + 1) {
            return Err(malformed(format!("unexpected column `{name}`")));
        }
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let t = rec[0]
            .parse::<u64>()
            .map_err(|e| malformed(format!("row {}: bad time: {e}", line + 1)))?;
        let row = rec
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| malformed(format!("row {}: bad value: {e}", line + 1)))?;
        times.push(t);
        values.push(row);
    }
    Ok((times, values))
}
