//! File emission. Every file is written to a temporary sibling and renamed
//! into place, so readers never see a partial file.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use rmt_jacobi::sampler::SampleBatch;
use rmt_jacobi::{DensityCurve, Domain};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, std::io::Error::other(e))
}

/// `coordinate,density,method` rows for each curve in turn.
pub fn write_curves(path: &Path, curves: &[DensityCurve]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["coordinate", "density", "method"])
        .map_err(|e| csv_error(path, e))?;
    for c in curves {
        for (x, v) in c.points().iter().zip(c.values()) {
            w.write_record([x.to_string(), v.to_string(), c.method().as_str().to_string()])
                .map_err(|e| csv_error(path, e))?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::io(path, std::io::Error::other(e.to_string())))?;
    write_atomic(path, &bytes)
}

/// One row per sample: its index, then its `p` sorted eigenvalues.
pub fn write_samples(path: &Path, batch: &SampleBatch) -> Result<()> {
    let prefix = match batch.ensemble() {
        Domain::Jacobi => "x",
        Domain::CauchyLorentz => "b",
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["sample".to_string()];
    header.extend((1..=batch.p()).map(|k| format!("{prefix}{k}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (k, row) in batch.rows().enumerate() {
        let mut rec = vec![k.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::io(path, std::io::Error::other(e.to_string())))?;
    write_atomic(path, &bytes)
}

#[derive(Debug, Serialize)]
pub struct CurveSummary {
    pub method: &'static str,
    pub points: usize,
    pub normalization_residual: f64,
    pub notes: BTreeMap<String, f64>,
}

impl From<&DensityCurve> for CurveSummary {
    fn from(c: &DensityCurve) -> Self {
        Self {
            method: c.method().as_str(),
            points: c.points().len(),
            normalization_residual: c.normalization_residual(),
            notes: c.notes().iter().map(|n| (n.key.clone(), n.value)).collect(),
        }
    }
}

/// Metadata written next to every numeric output. Feeding it back through
/// `--config` repeats the run.
#[derive(Debug, Serialize)]
pub struct Sidecar<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub lambdas: &'a [f64],
    pub elapsed_seconds: f64,
    pub files: BTreeMap<&'a str, String>,
    pub curves: Vec<CurveSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<Value>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub summary: Value,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::io(path, e.into()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}
