//! Gas-sensor batch files and synthetic drift datasets.
//!
//! Each line of a batch file holds one measurement:
//!
//! ```text
//! <label>[;<concentration>] 1:<v1> 2:<v2> ... 128:<v128>
//! ```
//!
//! Indices are 1-based and strictly increasing. Files are named
//! `batch1.dat` .. `batch10.dat`; the batch id comes from the file name.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Features per measurement: 16 sensors x 8 extracted features.
pub const FEATURE_DIM: usize = 128;
/// Gas classes: ammonia, acetaldehyde, acetone, ethylene, ethanol, toluene.
pub const N_GASES: u8 = 6;
pub const MAX_BATCHES: u32 = 10;

/// Per-batch sample counts of the public dataset, batch 1 first.
pub const CANONICAL_COUNTS: [usize; 10] = [445, 1244, 1586, 161, 197, 2300, 3613, 294, 470, 3600];

/// Acquisition months covered by each batch.
pub fn canonical_months(batch_id: u32) -> Vec<u32> {
    match batch_id {
        1 => vec![1, 2],
        2 => vec![3, 4, 8, 9, 10],
        3 => vec![11, 12, 13],
        4 => vec![14, 15],
        5 => vec![16],
        6 => vec![17, 18, 19, 20],
        7 => vec![21],
        8 => vec![22, 23],
        9 => vec![24, 30],
        10 => vec![36],
        _ => Vec::new(),
    }
}

pub const GAS_NAMES: [&str; 6] = [
    "Ammonia",
    "Acetaldehyde",
    "Acetone",
    "Ethylene",
    "Ethanol",
    "Toluene",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: u8,
    /// ppmv; metadata only, never used as a feature.
    pub concentration: Option<f64>,
    pub batch_id: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub batch_id: u32,
    pub samples: Vec<Sample>,
    pub month_ids: Vec<u32>,
}

impl Batch {
    pub fn new(batch_id: u32, samples: Vec<Sample>) -> Self {
        Batch {
            batch_id,
            samples,
            month_ids: canonical_months(batch_id),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.features.len())
    }

    /// Samples as rows of an n x D matrix.
    pub fn feature_matrix(&self) -> DMatrix<f64> {
        samples_to_matrix(&self.samples)
    }

    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label).collect()
    }
}

pub fn samples_to_matrix(samples: &[Sample]) -> DMatrix<f64> {
    let dim = samples.first().map_or(0, |s| s.features.len());
    DMatrix::from_fn(samples.len(), dim, |i, j| samples[i].features[j])
}

/// Batches keyed by id; ids always form a contiguous prefix of 1..=10.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    batches: BTreeMap<u32, Batch>,
}

impl Dataset {
    pub fn from_batches(batches: Vec<Batch>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for b in batches {
            if b.is_empty() {
                return Err(Error::Empty("batch"));
            }
            if let Some(s) = b.samples.iter().find(|s| s.batch_id != b.batch_id) {
                return Err(Error::Config(format!(
                    "sample with batch id {} inside batch {}",
                    s.batch_id, b.batch_id
                )));
            }
            map.insert(b.batch_id, b);
        }
        if !map.contains_key(&1) {
            return Err(Error::Empty("calibration batch"));
        }
        for (expected, &id) in (1u32..).zip(map.keys()) {
            if id != expected {
                return Err(Error::BatchGap {
                    missing: expected,
                    present: id,
                });
            }
        }
        let dim = map[&1].dim();
        for b in map.values() {
            for s in &b.samples {
                if s.features.len() != dim {
                    return Err(Error::Dimension {
                        what: "sample features",
                        expected: dim,
                        got: s.features.len(),
                    });
                }
            }
        }
        Ok(Dataset { batches: map })
    }

    pub fn calibration(&self) -> &Batch {
        &self.batches[&1]
    }

    pub fn batch(&self, id: u32) -> Option<&Batch> {
        self.batches.get(&id)
    }

    pub fn batches(&self) -> impl Iterator<Item = &Batch> {
        self.batches.values()
    }

    pub fn batch_ids(&self) -> Vec<u32> {
        self.batches.keys().copied().collect()
    }

    pub fn num_batches(&self) -> usize {
        self.batches.len()
    }

    pub fn dim(&self) -> usize {
        self.calibration().dim()
    }

    pub fn total_samples(&self) -> usize {
        self.batches.values().map(Batch::len).sum()
    }

    pub fn counts(&self) -> Vec<(u32, usize)> {
        self.batches.iter().map(|(&id, b)| (id, b.len())).collect()
    }

    /// Replace every batch's samples through `f`, keeping ids and metadata.
    pub fn map_batches<F>(&self, mut f: F) -> Result<Dataset>
    where
        F: FnMut(&Batch) -> Result<Vec<Sample>>,
    {
        let mut out = BTreeMap::new();
        for (&id, b) in &self.batches {
            out.insert(
                id,
                Batch {
                    batch_id: id,
                    samples: f(b)?,
                    month_ids: b.month_ids.clone(),
                },
            );
        }
        Ok(Dataset { batches: out })
    }

    /// SHA-256 over batch ids, labels, and feature bit patterns.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for b in self.batches.values() {
            h.update(b.batch_id.to_le_bytes());
            h.update((b.len() as u64).to_le_bytes());
            for s in &b.samples {
                h.update([s.label]);
                for v in &s.features {
                    h.update(v.to_bits().to_le_bytes());
                }
            }
        }
        h.finalize().iter().fold(String::with_capacity(64), |mut acc, byte| {
            let _ = write!(acc, "{byte:02x}");
            acc
        })
    }
}

/// Line parser carrying a running count of zero-filled (absent) feature slots.
#[derive(Debug, Clone)]
pub struct SampleParser {
    batch_id: u32,
    zero_filled: usize,
}

impl SampleParser {
    pub fn new(batch_id: u32) -> Self {
        SampleParser {
            batch_id,
            zero_filled: 0,
        }
    }

    pub fn zero_filled(&self) -> usize {
        self.zero_filled
    }

    pub fn parse_line(&mut self, line: &str, line_no: usize) -> Result<Sample> {
        let err = |token: &str, reason: &str| Error::Parse {
            line: line_no,
            token: token.to_string(),
            reason: reason.to_string(),
        };

        let mut tokens = line.split_ascii_whitespace();
        let head = tokens.next().ok_or_else(|| err("", "empty line"))?;
        let (label_txt, conc_txt) = match head.split_once(';') {
            Some((l, c)) => (l, Some(c)),
            None => (head, None),
        };
        let label: u8 = label_txt
            .parse()
            .map_err(|_| err(head, "label is not an integer"))?;
        if !(1..=N_GASES).contains(&label) {
            return Err(err(head, "label outside 1..=6"));
        }
        let concentration = match conc_txt {
            None => None,
            Some(c) => {
                let v: f64 = c
                    .parse()
                    .map_err(|_| err(head, "unparseable concentration"))?;
                if !(v.is_finite() && v > 0.0) {
                    return Err(err(head, "concentration must be positive"));
                }
                Some(v)
            }
        };

        let mut features = vec![0.0; FEATURE_DIM];
        let mut last = 0usize;
        let mut seen = 0usize;
        for tok in tokens {
            let (idx_txt, val_txt) = tok
                .split_once(':')
                .ok_or_else(|| err(tok, "expected index:value"))?;
            let idx: usize = idx_txt
                .parse()
                .map_err(|_| err(tok, "index is not an integer"))?;
            if idx == 0 || idx > FEATURE_DIM {
                return Err(err(tok, "index outside 1..=128"));
            }
            if idx <= last {
                return Err(err(tok, "indices must be strictly increasing"));
            }
            let val: f64 = val_txt
                .parse()
                .map_err(|_| err(tok, "unparseable value"))?;
            if !val.is_finite() {
                return Err(err(tok, "non-finite value"));
            }
            features[idx - 1] = val;
            last = idx;
            seen += 1;
        }
        if seen < FEATURE_DIM {
            self.zero_filled += FEATURE_DIM - seen;
        }

        Ok(Sample {
            features,
            label,
            concentration,
            batch_id: self.batch_id,
        })
    }
}

/// Parse a single line, treating it as line 1. Missing indices are zero-filled.
pub fn parse_sample_line(line: &str, batch_id: u32) -> Result<Sample> {
    SampleParser::new(batch_id).parse_line(line, 1)
}

/// Inverse of [`parse_sample_line`]. Values use the shortest round-tripping
/// decimal representation.
pub fn format_sample_line(sample: &Sample) -> String {
    let mut out = String::with_capacity(sample.features.len() * 12);
    let _ = write!(out, "{}", sample.label);
    if let Some(c) = sample.concentration {
        let _ = write!(out, ";{c:?}");
    }
    for (i, v) in sample.features.iter().enumerate() {
        let _ = write!(out, " {}:{v:?}", i + 1);
    }
    out
}

pub fn batch_file_name(batch_id: u32) -> String {
    format!("batch{batch_id}.dat")
}

pub fn load_batch_file(path: &Path, batch_id: u32) -> Result<Batch> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut parser = SampleParser::new(batch_id);
    let mut samples = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parser.parse_line(line, i + 1) {
            Ok(s) => samples.push(s),
            Err(e) => errors.push(e),
        }
    }
    let count = errors.len();
    if let Some(first) = errors.into_iter().next() {
        return Err(Error::File {
            file: path.to_path_buf(),
            count,
            first: Box::new(first),
        });
    }
    if parser.zero_filled() > 0 {
        log::warn!(
            "{}: {} missing feature slot(s) zero-filled",
            path.display(),
            parser.zero_filled()
        );
    }
    if samples.is_empty() {
        return Err(Error::Empty("batch file"));
    }
    Ok(Batch::new(batch_id, samples))
}

/// Load `batch1.dat` .. `batchN.dat` from `dir`. Trailing batches may be
/// absent; a gap before a present batch is an error.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let paths: Vec<(u32, PathBuf)> = (1..=MAX_BATCHES)
        .map(|id| (id, dir.join(batch_file_name(id))))
        .collect();
    let present: Vec<bool> = paths.iter().map(|(_, p)| p.is_file()).collect();
    if !present[0] {
        return Err(Error::MissingCalibration(paths[0].1.clone()));
    }
    let n_present = present.iter().take_while(|&&p| p).count();
    if let Some(later) = present[n_present..].iter().position(|&p| p) {
        return Err(Error::BatchGap {
            missing: n_present as u32 + 1,
            present: (n_present + later) as u32 + 1,
        });
    }
    let batches = paths[..n_present]
        .par_iter()
        .map(|(id, p)| load_batch_file(p, *id))
        .collect::<Result<Vec<_>>>()?;
    Dataset::from_batches(batches)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub n_classes: usize,
    pub dim: usize,
    pub per_class: usize,
    pub n_batches: usize,
    /// Shift of every class mean per batch step, along one fixed unit direction.
    pub drift_step: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_classes: 6,
            dim: FEATURE_DIM,
            per_class: 40,
            n_batches: 10,
            drift_step: 0.5,
            seed: 7,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 || self.n_classes > u8::MAX as usize {
            return Err(Error::Config(format!(
                "synthetic n_classes must be in 2..=255, got {}",
                self.n_classes
            )));
        }
        if self.dim < 2 {
            return Err(Error::Config("synthetic dim must be >= 2".into()));
        }
        if self.per_class < 2 {
            return Err(Error::Config("synthetic per_class must be >= 2".into()));
        }
        if !(1..=MAX_BATCHES as usize).contains(&self.n_batches) {
            return Err(Error::Config("synthetic n_batches must be in 1..=10".into()));
        }
        if !self.drift_step.is_finite() {
            return Err(Error::Config("synthetic drift_step must be finite".into()));
        }
        Ok(())
    }
}

/// Typical class-mean distance is about `CLASS_SPREAD * sqrt(2)` at any dimension.
const CLASS_SPREAD: f64 = 3.0;

/// Unit-variance Gaussian clusters, one per class, whose means translate by
/// `(b - 1) * drift_step` along a fixed random unit direction in batch `b`.
///
/// Class means and the drift direction come from ChaCha stream 0; batch `b`
/// draws its noise from stream `b`, so changing `drift_step` changes only the
/// translation and never the noise.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Dataset> {
    config.validate()?;
    let dim = config.dim;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(0);
    let spread = CLASS_SPREAD / (dim as f64).sqrt();
    let class_means: Vec<Vec<f64>> = (0..config.n_classes)
        .map(|_| {
            (0..dim)
                .map(|_| spread * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let mut direction: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    direction.iter_mut().for_each(|v| *v /= norm);

    let batches = (1..=config.n_batches as u32)
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(b as u64);
            let shift = (b - 1) as f64 * config.drift_step;
            let mut samples = Vec::with_capacity(config.n_classes * config.per_class);
            for (c, mean) in class_means.iter().enumerate() {
                for _ in 0..config.per_class {
                    let features = mean
                        .iter()
                        .zip(&direction)
                        .map(|(m, u)| {
                            let noise: f64 = rng.sample(StandardNormal);
                            m + noise + shift * u
                        })
                        .collect();
                    samples.push(Sample {
                        features,
                        label: (c + 1) as u8,
                        concentration: None,
                        batch_id: b,
                    });
                }
            }
            Batch {
                batch_id: b,
                samples,
                month_ids: Vec::new(),
            }
        })
        .collect();
    Dataset::from_batches(batches)
}
