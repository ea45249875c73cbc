//! The five drift-handling strategies, run over a labeled calibration batch
//! and a sequence of unlabeled target batches.
//!
//! Target batches reach the strategies as [`UnlabeledBatch`], which has no
//! label field at all; the held-out labels live in [`HeldOutLabels`], which
//! only the evaluation code opens.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{ClassifierConfig, LogRegModel};
use crate::data_io::Dataset;
use crate::error::{Error, Result};
use crate::subspace::{self, column_mean, Domain, DrcaConfig, LdspConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    None,
    Means,
    Drca,
    Ldsp,
    #[serde(rename = "selftrain")]
    SelfTrain,
}

impl MethodName {
    pub const ALL: [MethodName; 5] = [
        MethodName::None,
        MethodName::Means,
        MethodName::Drca,
        MethodName::Ldsp,
        MethodName::SelfTrain,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::None => "none",
            MethodName::Means => "means",
            MethodName::Drca => "drca",
            MethodName::Ldsp => "ldsp",
            MethodName::SelfTrain => "selftrain",
        }
    }
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodName::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelfTrainConfig {
    /// Minimum predicted probability for a pseudo-label to join the pool.
    pub confidence_threshold: f64,
    pub max_rounds: usize,
    /// Carry the pseudo-labeled pool from one target batch to the next.
    pub cumulative: bool,
}

impl Default for SelfTrainConfig {
    fn default() -> Self {
        SelfTrainConfig {
            confidence_threshold: 0.99,
            max_rounds: 5,
            cumulative: true,
        }
    }
}

impl SelfTrainConfig {
    pub fn validate(&self) -> Result<()> {
        let t = self.confidence_threshold;
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::Config(format!(
                "selftrain.confidence_threshold must be in (0, 1], got {t}"
            )));
        }
        if self.max_rounds == 0 {
            return Err(Error::Config("selftrain.max_rounds must be >= 1".into()));
        }
        Ok(())
    }
}

/// A strategy together with exactly the configuration it needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodSpec {
    None,
    Means,
    Drca(DrcaConfig),
    Ldsp(LdspConfig),
    SelfTrain(SelfTrainConfig),
}

impl MethodSpec {
    pub fn name(&self) -> MethodName {
        match self {
            MethodSpec::None => MethodName::None,
            MethodSpec::Means => MethodName::Means,
            MethodSpec::Drca(_) => MethodName::Drca,
            MethodSpec::Ldsp(_) => MethodName::Ldsp,
            MethodSpec::SelfTrain(_) => MethodName::SelfTrain,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBatch {
    pub batch_id: u32,
    pub features: DMatrix<f64>,
    pub labels: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledBatch {
    pub batch_id: u32,
    pub features: DMatrix<f64>,
}

impl LabeledBatch {
    /// Same features without labels, e.g. to score the calibration set.
    pub fn blind(&self) -> UnlabeledBatch {
        UnlabeledBatch {
            batch_id: self.batch_id,
            features: self.features.clone(),
        }
    }
}

/// Ground truth of the target batches, readable only through [`HeldOutLabels::reveal`].
#[derive(Debug, Clone, Default)]
pub struct HeldOutLabels {
    labels: BTreeMap<u32, Vec<u8>>,
}

impl HeldOutLabels {
    /// For metric computation only.
    pub fn reveal(&self, batch_id: u32) -> Option<&[u8]> {
        self.labels.get(&batch_id).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone)]
pub struct BlindSplit {
    pub calibration: LabeledBatch,
    pub targets: Vec<UnlabeledBatch>,
    pub held_out: HeldOutLabels,
}

/// Batch 1 keeps its labels; every later batch is split into features and
/// sealed labels.
pub fn blind_split(dataset: &Dataset) -> BlindSplit {
    let cal = dataset.calibration();
    let mut targets = Vec::new();
    let mut held_out = HeldOutLabels::default();
    for b in dataset.batches().filter(|b| b.batch_id != cal.batch_id) {
        targets.push(UnlabeledBatch {
            batch_id: b.batch_id,
            features: b.feature_matrix(),
        });
        held_out.labels.insert(b.batch_id, b.labels());
    }
    BlindSplit {
        calibration: LabeledBatch {
            batch_id: cal.batch_id,
            features: cal.feature_matrix(),
            labels: cal.labels(),
        },
        targets,
        held_out,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub method: MethodName,
    pub batch_id: u32,
    pub predicted: Vec<u8>,
    pub confidence: Vec<f64>,
}

fn prediction_set(
    method: MethodName,
    batch_id: u32,
    model: &LogRegModel,
    x: &DMatrix<f64>,
) -> Result<PredictionSet> {
    let (predicted, confidence) = model.predict(x)?;
    Ok(PredictionSet {
        method,
        batch_id,
        predicted,
        confidence,
    })
}

fn center_rows(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mean = column_mean(x).transpose();
    let mut out = x.clone();
    for mut row in out.row_iter_mut() {
        row -= &mean;
    }
    out
}

pub fn run_no_adaptation(
    calibration: &LabeledBatch,
    targets: &[UnlabeledBatch],
    clf: &ClassifierConfig,
) -> Result<Vec<PredictionSet>> {
    let model = clf.fit(&calibration.features, &calibration.labels)?;
    targets
        .par_iter()
        .map(|t| prediction_set(MethodName::None, t.batch_id, &model, &t.features))
        .collect()
}

pub fn run_means_correction(
    calibration: &LabeledBatch,
    targets: &[UnlabeledBatch],
    clf: &ClassifierConfig,
) -> Result<Vec<PredictionSet>> {
    let model = clf.fit(&center_rows(&calibration.features), &calibration.labels)?;
    targets
        .par_iter()
        .map(|t| prediction_set(MethodName::Means, t.batch_id, &model, &center_rows(&t.features)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubspaceMethod {
    Drca(DrcaConfig),
    Ldsp(LdspConfig),
}

/// Fit one transform and one classifier per target batch.
pub fn run_subspace_method(
    calibration: &LabeledBatch,
    targets: &[UnlabeledBatch],
    method: SubspaceMethod,
    clf: &ClassifierConfig,
) -> Result<Vec<PredictionSet>> {
    targets
        .par_iter()
        .map(|t| subspace_predict(calibration, t, method, clf))
        .collect()
}

fn subspace_predict(
    calibration: &LabeledBatch,
    target: &UnlabeledBatch,
    method: SubspaceMethod,
    clf: &ClassifierConfig,
) -> Result<PredictionSet> {
    let (projection, name) = match method {
        SubspaceMethod::Drca(cfg) => (
            subspace::drca_fit(&calibration.features, &target.features, &cfg)?,
            MethodName::Drca,
        ),
        SubspaceMethod::Ldsp(cfg) => (
            subspace::ldsp_fit(
                &calibration.features,
                &calibration.labels,
                &target.features,
                &cfg,
            )?,
            MethodName::Ldsp,
        ),
    };
    let source = subspace::project(&projection, &calibration.features, Domain::Source)?;
    let projected = subspace::project(&projection, &target.features, Domain::Target)?;
    let model = clf.fit(&source, &calibration.labels)?;
    prediction_set(name, target.batch_id, &model, &projected)
}

/// Training pool of labeled and pseudo-labeled rows.
#[derive(Debug, Clone)]
struct Pool {
    rows: Vec<f64>,
    labels: Vec<u8>,
    dim: usize,
}

impl Pool {
    fn from_batch(b: &LabeledBatch) -> Self {
        Pool {
            rows: b.features.transpose().as_slice().to_vec(),
            labels: b.labels.clone(),
            dim: b.features.ncols(),
        }
    }

    fn push(&mut self, x: &DMatrix<f64>, i: usize, label: u8) {
        self.rows.extend(x.row(i).iter());
        self.labels.push(label);
    }

    fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.labels.len(), self.dim, &self.rows)
    }

    fn fit(&self, clf: &ClassifierConfig) -> Result<LogRegModel> {
        clf.fit(&self.matrix(), &self.labels)
    }
}

/// Confidence-gated pseudo-labeling, batch by batch in ascending id order.
///
/// Each round trains on the pool, scores the batch, and adds every point not
/// yet in the pool whose confidence reaches the threshold, under its
/// predicted label. Rounds stop when nothing is added or after `max_rounds`;
/// the recorded predictions come from a model trained on the final pool.
pub fn run_self_training(
    calibration: &LabeledBatch,
    targets: &[UnlabeledBatch],
    st: &SelfTrainConfig,
    clf: &ClassifierConfig,
) -> Result<Vec<PredictionSet>> {
    st.validate()?;
    let mut ordered: Vec<&UnlabeledBatch> = targets.iter().collect();
    ordered.sort_by_key(|t| t.batch_id);

    let mut pool = Pool::from_batch(calibration);
    let mut out = Vec::with_capacity(ordered.len());
    for target in ordered {
        if !st.cumulative {
            pool = Pool::from_batch(calibration);
        }
        let x = &target.features;
        let mut added = vec![false; x.nrows()];
        let mut model = pool.fit(clf)?;
        for _ in 0..st.max_rounds {
            let (labels, conf) = model.predict(x)?;
            let mut grew = false;
            for i in 0..x.nrows() {
                if !added[i] && conf[i] >= st.confidence_threshold {
                    pool.push(x, i, labels[i]);
                    added[i] = true;
                    grew = true;
                }
            }
            if !grew {
                break;
            }
            model = pool.fit(clf)?;
        }
        let n_added = added.iter().filter(|&&a| a).count();
        log::debug!(
            "self-training batch {}: {n_added} pseudo-labeled points, pool {}",
            target.batch_id,
            pool.labels.len()
        );
        out.push(prediction_set(MethodName::SelfTrain, target.batch_id, &model, x)?);
    }
    Ok(out)
}

pub fn run_method(
    spec: &MethodSpec,
    calibration: &LabeledBatch,
    targets: &[UnlabeledBatch],
    clf: &ClassifierConfig,
) -> Result<Vec<PredictionSet>> {
    match spec {
        MethodSpec::None => run_no_adaptation(calibration, targets, clf),
        MethodSpec::Means => run_means_correction(calibration, targets, clf),
        MethodSpec::Drca(cfg) => {
            run_subspace_method(calibration, targets, SubspaceMethod::Drca(*cfg), clf)
        }
        MethodSpec::Ldsp(cfg) => {
            run_subspace_method(calibration, targets, SubspaceMethod::Ldsp(*cfg), clf)
        }
        MethodSpec::SelfTrain(st) => run_self_training(calibration, targets, st, clf),
    }
}

/// Predictions on the calibration batch itself, used as the training
/// reference row. Self-training has seen no target data at that point, so
/// its reference equals no adaptation.
pub fn calibration_reference(
    spec: &MethodSpec,
    calibration: &LabeledBatch,
    clf: &ClassifierConfig,
) -> Result<PredictionSet> {
    let own = [calibration.blind()];
    let mut set = match spec {
        MethodSpec::SelfTrain(_) => run_no_adaptation(calibration, &own, clf)?,
        other => run_method(other, calibration, &own, clf)?,
    };
    let mut set = set.pop().ok_or(Error::Empty("reference predictions"))?;
    set.method = spec.name();
    Ok(set)
}
