//! Model documents (JSON), simplified-model documents, and sample files
//! (CSV plus a JSON stats sidecar).

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crhmc_core::{ChainStats, PolytopeModel, SampleBatch, SamplerConfig, SparseMatrix, TransformRecord};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] crhmc_core::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn json_err(path: &Path) -> impl FnOnce(serde_json::Error) -> IoError + '_ {
    move |source| IoError::Json {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// On-disk model. `null` bounds are infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<(usize, usize, f64)>,
    pub b: Vec<f64>,
    pub l: Vec<Option<f64>>,
    pub u: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
}

impl ModelFile {
    pub fn from_model(model: &PolytopeModel) -> Self {
        Self {
            n: model.n(),
            m: model.m(),
            a: model.a.triplets(),
            b: model.b.clone(),
            l: model.lower.iter().map(|&v| finite(v)).collect(),
            u: model.upper.iter().map(|&v| finite(v)).collect(),
            alpha: if model.alpha.iter().all(|&v| v == 0.0) {
                None
            } else {
                Some(model.alpha.clone())
            },
        }
    }

    /// Validates the document and builds the model, clamping infinite bounds.
    pub fn to_model(&self) -> crhmc_core::Result<PolytopeModel> {
        let a = SparseMatrix::from_triplets(self.m, self.n, &self.a)?;
        let lower = self.l.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect();
        let upper = self.u.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
        PolytopeModel::new(a, self.b.clone(), lower, upper, self.alpha.clone())
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let file = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(BufReader::new(file)).map_err(json_err(path))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), IoError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(json_err(path))?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn load_model(path: &Path) -> Result<PolytopeModel, IoError> {
    let doc: ModelFile = read_json(path)?;
    Ok(doc.to_model()?)
}

pub fn save_model(model: &PolytopeModel, path: &Path) -> Result<(), IoError> {
    write_json(&ModelFile::from_model(model), path)
}

/// Output of the `preprocess` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplifiedFile {
    pub model: ModelFile,
    pub record: TransformRecord,
    pub center: Vec<f64>,
}

pub fn save_simplified(s: &crhmc_core::Simplified, path: &Path) -> Result<(), IoError> {
    write_json(
        &SimplifiedFile {
            model: ModelFile::from_model(&s.model),
            record: s.record.clone(),
            center: s.center.clone(),
        },
        path,
    )
}

pub fn load_simplified(path: &Path) -> Result<crhmc_core::Simplified, IoError> {
    let doc: SimplifiedFile = read_json(path)?;
    Ok(crhmc_core::Simplified {
        model: doc.model.to_model()?,
        record: doc.record,
        center: doc.center,
    })
}

/// Stats written next to a sample file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSidecar {
    pub config: SamplerConfig,
    pub chains: Vec<ChainEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainEntry {
    pub chain_index: u64,
    pub samples: usize,
    pub stats: ChainStats,
}

impl StatsSidecar {
    pub fn from_batches(batches: &[SampleBatch]) -> Self {
        Self {
            config: batches.first().map(|b| b.config.clone()).unwrap_or_default(),
            chains: batches
                .iter()
                .map(|b| ChainEntry {
                    chain_index: b.chain_index,
                    samples: b.samples.len(),
                    stats: b.stats.clone(),
                })
                .collect(),
        }
    }

    /// Post-warm-up steps over all chains.
    pub fn sampling_steps(&self) -> usize {
        self.chains.iter().map(|c| c.stats.sampling_steps()).sum()
    }

    /// Post-warm-up wall time over all chains, in seconds.
    pub fn sampling_seconds(&self) -> f64 {
        self.chains
            .iter()
            .map(|c| c.stats.wall_time_per_step * c.stats.sampling_steps() as f64)
            .sum()
    }
}

/// `<samples>.stats.json`.
pub fn sidecar_path(samples: &Path) -> PathBuf {
    let mut name = samples.as_os_str().to_owned();
    name.push(".stats.json");
    PathBuf::from(name)
}

/// Writes one sample per row with a header of variable indices.
pub fn save_samples(samples: &[Vec<f64>], n: usize, path: &Path) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record((0..n).map(|j| j.to_string())).map_err(csv_err(path))?;
    for row in samples {
        if row.len() != n {
            return Err(IoError::Format {
                path: path.to_path_buf(),
                message: format!("sample has {} columns, expected {n}", row.len()),
            });
        }
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn save_batches(batches: &[SampleBatch], n: usize, path: &Path) -> Result<(), IoError> {
    let rows: Vec<Vec<f64>> = batches.iter().flat_map(|b| b.samples.iter().cloned()).collect();
    save_samples(&rows, n, path)?;
    write_json(&StatsSidecar::from_batches(batches), &sidecar_path(path))
}

/// Reads a sample file; returns the rows and the column count.
pub fn load_samples(path: &Path) -> Result<(Vec<Vec<f64>>, usize), IoError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let n = r.headers().map_err(csv_err(path))?.len();
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        let row = record
            .iter()
            .map(|field| field.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| IoError::Format {
                path: path.to_path_buf(),
                message: format!("row {}: {e}", line + 1),
            })?;
        rows.push(row);
    }
    Ok((rows, n))
}

pub fn load_sidecar(path: &Path) -> Result<StatsSidecar, IoError> {
    read_json(path)
}
