//! Experiment runner, evaluation report, and projection exports.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adaptation::{self, MethodName, PredictionSet};
use crate::config::ExperimentConfig;
use crate::data_io::{generate_synthetic, load_dataset, Dataset};
use crate::error::{Error, Result};
use crate::metrics::{accuracy, f1_score};
use crate::preprocess::normalize_dataset;
use crate::subspace::{self, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatchRole {
    /// Training-set performance on batch 1.
    Calibration,
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub method: MethodName,
    pub batch_id: u32,
    pub role: BatchRole,
    pub n: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the dataset before normalization.
    pub dataset_checksum: String,
    pub code_version: String,
    pub data_source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Sorted by (method name, batch id).
    pub cells: Vec<ReportCell>,
    pub config_echo: ExperimentConfig,
    pub provenance: Provenance,
}

impl EvalReport {
    pub fn cell(&self, method: MethodName, batch_id: u32) -> Option<&ReportCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.batch_id == batch_id)
    }

    pub fn accuracy(&self, method: MethodName, batch_id: u32) -> Option<f64> {
        self.cell(method, batch_id).map(|c| c.accuracy)
    }

    /// Unweighted mean of per-batch accuracies; `None` if any cell is missing.
    pub fn mean_accuracy(&self, method: MethodName, batches: &[u32]) -> Option<f64> {
        let accs: Option<Vec<f64>> = batches.iter().map(|&b| self.accuracy(method, b)).collect();
        let accs = accs?;
        (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64)
    }

    pub fn target_batches(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self
            .cells
            .iter()
            .filter(|c| c.role == BatchRole::Target)
            .map(|c| c.batch_id)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// `method,batch_id,n,accuracy,macro_f1`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,batch_id,n,accuracy,macro_f1\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{:.10},{:.10}",
                c.method, c.batch_id, c.n, c.accuracy, c.macro_f1
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Human-readable accuracy grid, one row per method.
    pub fn accuracy_table(&self) -> String {
        let mut batches: Vec<u32> = self.cells.iter().map(|c| c.batch_id).collect();
        batches.sort_unstable();
        batches.dedup();
        let mut methods: Vec<MethodName> = self.cells.iter().map(|c| c.method).collect();
        methods.sort_by_key(|m| m.as_str());
        methods.dedup();
        let mut out = format!("{:<10}", "method");
        for b in &batches {
            let _ = write!(out, " {:>7}", format!("b{b}"));
        }
        out.push('\n');
        for m in methods {
            let _ = write!(out, "{:<10}", m.as_str());
            for &b in &batches {
                match self.accuracy(m, b) {
                    Some(a) => {
                        let _ = write!(out, " {:>7.4}", a);
                    }
                    None => {
                        let _ = write!(out, " {:>7}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Load from `config.data_dir`, or generate the configured synthetic set.
pub fn load_experiment_dataset(config: &ExperimentConfig) -> Result<(Dataset, String)> {
    match &config.data_dir {
        Some(dir) => Ok((load_dataset(dir)?, format!("dir:{}", dir.display()))),
        None => Ok((
            generate_synthetic(&config.synthetic)?,
            format!("synthetic:seed={}", config.synthetic.seed),
        )),
    }
}

fn score(
    set: &PredictionSet,
    actual: &[u8],
    role: BatchRole,
    config: &ExperimentConfig,
) -> Result<ReportCell> {
    Ok(ReportCell {
        method: set.method,
        batch_id: set.batch_id,
        role,
        n: actual.len(),
        accuracy: accuracy(&set.predicted, actual)?,
        macro_f1: f1_score(&set.predicted, actual, config.metrics.f1_average)?,
    })
}

/// Run every requested method on `dataset` (raw, unnormalized) and score it.
pub fn run_experiment(
    config: &ExperimentConfig,
    dataset: &Dataset,
    data_source: &str,
) -> Result<EvalReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_experiment_inner(config, dataset, data_source))
}

fn run_experiment_inner(
    config: &ExperimentConfig,
    dataset: &Dataset,
    data_source: &str,
) -> Result<EvalReport> {
    let checksum = dataset.checksum();
    let prepared;
    let data = if config.normalize {
        prepared = normalize_dataset(dataset)?.0;
        &prepared
    } else {
        dataset
    };
    let split = adaptation::blind_split(data);
    let clf = &config.classifier;

    let mut cells = Vec::new();
    for spec in config.method_specs() {
        log::info!("running {}", spec.name());
        let reference = adaptation::calibration_reference(&spec, &split.calibration, clf)?;
        cells.push(score(
            &reference,
            &split.calibration.labels,
            BatchRole::Calibration,
            config,
        )?);
        for set in adaptation::run_method(&spec, &split.calibration, &split.targets, clf)? {
            let actual = split
                .held_out
                .reveal(set.batch_id)
                .ok_or(Error::Empty("held-out labels"))?;
            cells.push(score(&set, actual, BatchRole::Target, config)?);
        }
    }
    cells.sort_by(|a, b| {
        a.method
            .as_str()
            .cmp(b.method.as_str())
            .then(a.batch_id.cmp(&b.batch_id))
    });
    Ok(EvalReport {
        cells,
        config_echo: config.clone(),
        provenance: Provenance {
            dataset_checksum: checksum,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            data_source: data_source.to_string(),
        },
    })
}

/// Write `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Writes `report.csv` and/or `report.json` under `dir`.
pub fn export_report(report: &EvalReport, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for f in formats {
        let (name, body) = match f {
            ReportFormat::Csv => ("report.csv", report.to_csv()),
            ReportFormat::Json => ("report.json", report.to_json()?),
        };
        let path = dir.join(name);
        write_atomic(&path, body.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// Points at or beyond this magnitude on either axis are flagged `clipped`.
pub const CLIP_LIMIT: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionView {
    /// PCA fit on batch 1, all batches projected.
    PcaBatch1,
    /// LDA fit on batch-1 labels, all batches projected.
    LdaBatch1,
    /// LDA fit separately on each batch with its own labels.
    LdaPerBatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPoint {
    pub batch_id: u32,
    pub label: u8,
    pub x: f64,
    pub y: f64,
    pub clipped: bool,
}

fn to_points(batch_id: u32, labels: &[u8], z: &nalgebra::DMatrix<f64>) -> Vec<ProjectionPoint> {
    labels
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let x = z[(i, 0)];
            let y = if z.ncols() > 1 { z[(i, 1)] } else { 0.0 };
            ProjectionPoint {
                batch_id,
                label,
                x,
                y,
                clipped: x.abs() >= CLIP_LIMIT || y.abs() >= CLIP_LIMIT,
            }
        })
        .collect()
}

/// Two-component projections of every batch for plotting. Expects
/// normalized data. Every point is emitted; large ones are only flagged.
pub fn export_projections(dataset: &Dataset, which: ProjectionView) -> Result<Vec<ProjectionPoint>> {
    let cal = dataset.calibration();
    let cal_x = cal.feature_matrix();
    let shared = match which {
        ProjectionView::PcaBatch1 => Some(subspace::pca_fit(&cal_x, 2)?),
        ProjectionView::LdaBatch1 => Some(subspace::lda_fit(&cal_x, &cal.labels(), 2)?),
        ProjectionView::LdaPerBatch => None,
    };
    let mut points = Vec::with_capacity(dataset.total_samples());
    for b in dataset.batches() {
        let x = b.feature_matrix();
        let labels = b.labels();
        let z = match &shared {
            Some(p) => subspace::project(p, &x, Domain::Source)?,
            None => {
                let mut classes = labels.clone();
                classes.sort_unstable();
                classes.dedup();
                let k = 2.min(classes.len().saturating_sub(1)).max(1);
                if k < 2 {
                    log::warn!("batch {} has fewer than 3 classes; y set to 0", b.batch_id);
                }
                let p = subspace::lda_fit(&x, &labels, k)?;
                subspace::project(&p, &x, Domain::Source)?
            }
        };
        points.extend(to_points(b.batch_id, &labels, &z));
    }
    Ok(points)
}

pub fn projections_csv(points: &[ProjectionPoint]) -> String {
    let mut out = String::from("batch_id,label,x,y,clipped\n");
    for p in points {
        let _ = writeln!(out, "{},{},{:?},{:?},{}", p.batch_id, p.label, p.x, p.y, p.clipped);
    }
    out
}
