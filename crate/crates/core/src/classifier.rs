//! Multinomial logistic regression with an L2 penalty on the non-bias weights,
//! trained by full-batch gradient descent with Armijo backtracking.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierConfig {
    /// Penalty coefficient per training sample: `train` receives
    /// `reg_strength / n` for an `n`-sample training set.
    pub reg_strength: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            reg_strength: 1.0,
            tol: 1e-6,
            max_iter: 1000,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.reg_strength.is_finite() && self.reg_strength > 0.0) {
            return Err(Error::Config("classifier.reg_strength must be > 0".into()));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Config("classifier.tol must be > 0".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("classifier.max_iter must be >= 1".into()));
        }
        Ok(())
    }

    /// Train with the penalty scaled to the training-set size.
    pub fn fit(&self, x: &DMatrix<f64>, y: &[u8]) -> Result<LogRegModel> {
        self.validate()?;
        let n = x.nrows().max(1) as f64;
        train(x, y, self.reg_strength / n, self.tol, self.max_iter)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    /// C x (k + 1); the last column is the bias.
    pub weights: DMatrix<f64>,
    pub class_ids: Vec<u8>,
    pub reg_strength: f64,
    pub trained_on_dim: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Mean cross-entropy plus `reg · ‖W‖²_F` (bias excluded).
#[derive(Debug, Clone)]
pub struct LogisticObjective {
    /// n x (k + 1), trailing column of ones.
    x_aug: DMatrix<f64>,
    /// n x C one-hot targets.
    targets: DMatrix<f64>,
    reg: f64,
}

impl LogisticObjective {
    pub fn new(x: &DMatrix<f64>, class_index: &[usize], n_classes: usize, reg: f64) -> Self {
        let (n, k) = x.shape();
        let x_aug = DMatrix::from_fn(n, k + 1, |i, j| if j < k { x[(i, j)] } else { 1.0 });
        let mut targets = DMatrix::zeros(n, n_classes);
        for (i, &c) in class_index.iter().enumerate() {
            targets[(i, c)] = 1.0;
        }
        LogisticObjective {
            x_aug,
            targets,
            reg,
        }
    }

    fn penalty(&self, w: &DMatrix<f64>) -> f64 {
        let k = w.ncols() - 1;
        self.reg * w.columns(0, k).norm_squared()
    }

    pub fn value(&self, w: &DMatrix<f64>) -> f64 {
        let logits = &self.x_aug * w.transpose();
        let n = logits.nrows() as f64;
        let mut ce = 0.0;
        for (row, target) in logits.row_iter().zip(self.targets.row_iter()) {
            let m = row.max();
            let lse = m + row.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
            ce += lse - row.dot(&target);
        }
        ce / n + self.penalty(w)
    }

    pub fn value_and_gradient(&self, w: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
        let logits = &self.x_aug * w.transpose();
        let n = logits.nrows() as f64;
        let mut ce = 0.0;
        let mut residual = DMatrix::zeros(logits.nrows(), logits.ncols());
        for (i, row) in logits.row_iter().enumerate() {
            let m = row.max();
            let sum: f64 = row.iter().map(|z| (z - m).exp()).sum();
            ce += m + sum.ln() - row.dot(&self.targets.row(i));
            for c in 0..row.len() {
                residual[(i, c)] = (row[c] - m).exp() / sum - self.targets[(i, c)];
            }
        }
        let mut grad = residual.tr_mul(&self.x_aug) / n;
        let k = w.ncols() - 1;
        let mut reg_part = grad.columns_mut(0, k);
        reg_part += w.columns(0, k) * (2.0 * self.reg);
        (ce / n + self.penalty(w), grad)
    }
}

fn class_index(y: &[u8]) -> (Vec<u8>, Vec<usize>) {
    let mut ids: Vec<u8> = y.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let index = y
        .iter()
        .map(|l| ids.binary_search(l).expect("label present"))
        .collect();
    (ids, index)
}

/// Fit by gradient descent with backtracking. Stops once the gradient
/// max-norm is at most `tol` or after `max_iter` accepted steps; running out
/// of iterations is logged, not an error.
pub fn train(
    x: &DMatrix<f64>,
    y: &[u8],
    reg_strength: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LogRegModel> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension {
            what: "training labels",
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if x.nrows() == 0 {
        return Err(Error::Empty("training set"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training features"));
    }
    let (class_ids, index) = class_index(y);
    if class_ids.len() < 2 {
        return Err(Error::SingleClass(class_ids.len()));
    }
    let objective = LogisticObjective::new(x, &index, class_ids.len(), reg_strength);

    let mut w = DMatrix::zeros(class_ids.len(), x.ncols() + 1);
    let (mut loss, mut grad) = objective.value_and_gradient(&w);
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = grad.amax() <= tol;
    while !converged && iterations < max_iter {
        let g2 = grad.norm_squared();
        let mut accepted = None;
        for _ in 0..60 {
            let candidate = &w - &grad * step;
            let l = objective.value(&candidate);
            if l <= loss - 1e-4 * step * g2 {
                accepted = Some((candidate, l));
                break;
            }
            step *= 0.5;
        }
        let Some((next, _)) = accepted else {
            // no descent possible at machine precision
            break;
        };
        w = next;
        (loss, grad) = objective.value_and_gradient(&w);
        iterations += 1;
        converged = grad.amax() <= tol;
        step = (step * 2.0).min(1e6);
    }
    if !converged {
        log::warn!(
            "logistic regression stopped after {iterations} iterations with gradient max-norm {:.3e}",
            grad.amax()
        );
    }
    Ok(LogRegModel {
        weights: w,
        class_ids,
        reg_strength,
        trained_on_dim: x.ncols(),
        iterations,
        converged,
    })
}

impl LogRegModel {
    pub fn n_classes(&self) -> usize {
        self.class_ids.len()
    }

    fn logits(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.trained_on_dim {
            return Err(Error::Dimension {
                what: "prediction input",
                expected: self.trained_on_dim,
                got: x.ncols(),
            });
        }
        let k = self.trained_on_dim;
        let mut z = x * self.weights.columns(0, k).transpose();
        for mut row in z.row_iter_mut() {
            row += self.weights.column(k).transpose();
        }
        Ok(z)
    }

    /// Row-wise softmax probabilities, columns ordered as `class_ids`.
    pub fn predict_proba(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut z = self.logits(x)?;
        for mut row in z.row_iter_mut() {
            let m = row.max();
            row.apply(|v| *v = (*v - m).exp());
            let s = row.sum();
            row /= s;
        }
        Ok(z)
    }

    /// Most probable class (lowest id on ties) and its probability.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<(Vec<u8>, Vec<f64>)> {
        let p = self.predict_proba(x)?;
        let mut labels = Vec::with_capacity(p.nrows());
        let mut conf = Vec::with_capacity(p.nrows());
        for row in p.row_iter() {
            let mut best = 0;
            for c in 1..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            labels.push(self.class_ids[best]);
            conf.push(row[best]);
        }
        Ok((labels, conf))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        doc.try_into()
    }
}

/// On-disk form of a trained model; weights are row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub class_ids: Vec<u8>,
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub reg_strength: f64,
    pub trained_on_dim: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&LogRegModel> for ModelDocument {
    fn from(m: &LogRegModel) -> Self {
        let (rows, cols) = m.weights.shape();
        ModelDocument {
            class_ids: m.class_ids.clone(),
            rows,
            cols,
            weights: m.weights.transpose().as_slice().to_vec(),
            reg_strength: m.reg_strength,
            trained_on_dim: m.trained_on_dim,
            iterations: m.iterations,
            converged: m.converged,
        }
    }
}

impl TryFrom<ModelDocument> for LogRegModel {
    type Error = Error;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        if doc.rows != doc.class_ids.len() || doc.rows < 2 {
            return Err(Error::Config("model rows must match class_ids (>= 2)".into()));
        }
        if doc.cols != doc.trained_on_dim + 1 || doc.weights.len() != doc.rows * doc.cols {
            return Err(Error::Config("model weight shape is inconsistent".into()));
        }
        if !doc.class_ids.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("model class_ids must be strictly ascending".into()));
        }
        if doc.weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model weights"));
        }
        Ok(LogRegModel {
            weights: DMatrix::from_row_slice(doc.rows, doc.cols, &doc.weights),
            class_ids: doc.class_ids,
            reg_strength: doc.reg_strength,
            trained_on_dim: doc.trained_on_dim,
            iterations: doc.iterations,
            converged: doc.converged,
        })
    }
}
