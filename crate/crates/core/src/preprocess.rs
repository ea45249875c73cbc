//! Calibration-anchored min-max scaling and per-batch mean centering.

use serde::{Deserialize, Serialize};

use crate::data_io::{Batch, Dataset, Sample};
use crate::error::{Error, Result};

/// Per-feature extrema learned from the calibration batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub source_batch_id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenteringOffset {
    pub mean: Vec<f64>,
    pub batch_id: u32,
}

pub fn fit_minmax(calibration: &Batch) -> Result<NormalizationParams> {
    let first = calibration
        .samples
        .first()
        .ok_or(Error::Empty("calibration batch"))?;
    let mut min = first.features.clone();
    let mut max = first.features.clone();
    for s in &calibration.samples[1..] {
        check_dim(s, min.len())?;
        for (j, &v) in s.features.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    Ok(NormalizationParams {
        min,
        max,
        source_batch_id: calibration.batch_id,
    })
}

impl NormalizationParams {
    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// `(x - min) / (max - min)`, or 0.0 where the calibration range is empty.
    /// Results outside [0, 1] are kept as-is.
    pub fn scale(&self, j: usize, x: f64) -> f64 {
        let range = self.max[j] - self.min[j];
        if range > 0.0 {
            (x - self.min[j]) / range
        } else {
            0.0
        }
    }
}

pub fn apply_minmax(params: &NormalizationParams, samples: &[Sample]) -> Result<Vec<Sample>> {
    samples
        .iter()
        .map(|s| {
            check_dim(s, params.dim())?;
            Ok(Sample {
                features: s
                    .features
                    .iter()
                    .enumerate()
                    .map(|(j, &x)| params.scale(j, x))
                    .collect(),
                ..s.clone()
            })
        })
        .collect()
}

/// Fit on batch 1 and rescale every batch of the dataset.
pub fn normalize_dataset(dataset: &Dataset) -> Result<(Dataset, NormalizationParams)> {
    let params = fit_minmax(dataset.calibration())?;
    let out = dataset.map_batches(|b| apply_minmax(&params, &b.samples))?;
    Ok((out, params))
}

/// Subtract the arithmetic mean of `samples` from each of them.
pub fn center(samples: &[Sample]) -> Result<(Vec<Sample>, CenteringOffset)> {
    let first = samples.first().ok_or(Error::Empty("samples to center"))?;
    let dim = first.features.len();
    let mut mean = vec![0.0; dim];
    for s in samples {
        check_dim(s, dim)?;
        for (m, v) in mean.iter_mut().zip(&s.features) {
            *m += v;
        }
    }
    let n = samples.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);

    let centered = samples
        .iter()
        .map(|s| Sample {
            features: s.features.iter().zip(&mean).map(|(v, m)| v - m).collect(),
            ..s.clone()
        })
        .collect();
    Ok((
        centered,
        CenteringOffset {
            mean,
            batch_id: first.batch_id,
        },
    ))
}

/// Per-feature (min, max) over a slice of samples.
pub fn feature_extrema(samples: &[Sample]) -> Option<(f64, f64)> {
    samples
        .iter()
        .flat_map(|s| s.features.iter().copied())
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
}

fn check_dim(s: &Sample, dim: usize) -> Result<()> {
    if s.features.len() != dim {
        return Err(Error::Dimension {
            what: "sample features",
            expected: dim,
            got: s.features.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(features: Vec<f64>) -> Sample {
        Sample {
            features,
            label: 1,
            concentration: None,
            batch_id: 1,
        }
    }

    fn batch(rows: Vec<Vec<f64>>) -> Batch {
        Batch::new(1, rows.into_iter().map(sample).collect())
    }

    #[test]
    fn minmax_extrema() {
        let p = fit_minmax(&batch(vec![vec![2.0, 5.0], vec![6.0, 5.0]])).unwrap();
        assert_eq!(p.min, vec![2.0, 5.0]);
        assert_eq!(p.max, vec![6.0, 5.0]);
        assert_eq!(p.source_batch_id, 1);
    }

    #[test]
    fn minmax_endpoints_and_degenerate() {
        let b = batch(vec![vec![2.0, 5.0], vec![6.0, 5.0], vec![3.0, 5.0]]);
        let p = fit_minmax(&b).unwrap();
        let out = apply_minmax(&p, &b.samples).unwrap();
        assert_eq!(out[0].features, vec![0.0, 0.0]);
        assert_eq!(out[1].features, vec![1.0, 0.0]);
        assert_eq!(out[2].features, vec![0.25, 0.0]);
    }

    #[test]
    fn minmax_does_not_clip() {
        let p = fit_minmax(&batch(vec![vec![0.0], vec![1.0]])).unwrap();
        let out = apply_minmax(&p, &[sample(vec![-57.8]), sample(vec![2624.0])]).unwrap();
        assert_eq!(out[0].features[0], -57.8);
        assert_eq!(out[1].features[0], 2624.0);
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        assert!(fit_minmax(&Batch::new(1, vec![])).is_err());
        assert!(center(&[]).is_err());
        let p = fit_minmax(&batch(vec![vec![0.0, 1.0]])).unwrap();
        assert!(matches!(
            apply_minmax(&p, &[sample(vec![1.0])]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn centering_single_sample_gives_zero() {
        let (out, off) = center(&[sample(vec![3.0, -4.0])]).unwrap();
        assert_eq!(out[0].features, vec![0.0, 0.0]);
        assert_eq!(off.mean, vec![3.0, -4.0]);
    }

    fn rows_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..6).prop_flat_map(|d| {
            proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, d), 1..20)
        })
    }

    proptest! {
        #[test]
        fn centered_mean_is_zero_and_recentering_is_idempotent(rows in rows_strategy()) {
            let samples: Vec<_> = rows.into_iter().map(sample).collect();
            let (out, off) = center(&samples).unwrap();
            let in_norm = off.mean.iter().map(|m| m * m).sum::<f64>().sqrt();
            let (_, off2) = center(&out).unwrap();
            let out_norm = off2.mean.iter().map(|m| m * m).sum::<f64>().sqrt();
            prop_assert!(out_norm < 1e-10 * (1.0 + in_norm));
            for m in &off2.mean {
                prop_assert!(m.abs() < 1e-10 * (1.0 + in_norm));
            }
        }

        #[test]
        fn self_normalization_lands_in_unit_interval(rows in rows_strategy()) {
            let b = batch(rows);
            let p = fit_minmax(&b).unwrap();
            for s in apply_minmax(&p, &b.samples).unwrap() {
                for (j, v) in s.features.iter().enumerate() {
                    if p.max[j] > p.min[j] {
                        prop_assert!((0.0..=1.0).contains(v));
                    } else {
                        prop_assert_eq!(*v, 0.0);
                    }
                }
            }
        }

        #[test]
        fn minmax_is_order_preserving(a in -1e3f64..1e3, b in -1e3f64..1e3, lo in -10f64..0.0, hi in 0.1f64..10.0) {
            let p = NormalizationParams { min: vec![lo], max: vec![hi], source_batch_id: 1 };
            let (sa, sb) = (p.scale(0, a), p.scale(0, b));
            if a < b { prop_assert!(sa <= sb); }
        }
    }
}
