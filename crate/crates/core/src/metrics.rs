use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum F1Average {
    #[default]
    Macro,
    Weighted,
}

fn check_pair(predicted: &[u8], actual: &[u8]) -> Result<()> {
    if predicted.len() != actual.len() {
        return Err(Error::Dimension {
            what: "predicted labels",
            expected: actual.len(),
            got: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::Empty("label vectors"));
    }
    Ok(())
}

pub fn accuracy(predicted: &[u8], actual: &[u8]) -> Result<f64> {
    check_pair(predicted, actual)?;
    let correct = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
    Ok(correct as f64 / actual.len() as f64)
}

#[derive(Debug, Default, Clone, Copy)]
struct Counts {
    tp: usize,
    fp: usize,
    fn_: usize,
    support: usize,
}

impl Counts {
    fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }
}

fn per_class(predicted: &[u8], actual: &[u8]) -> BTreeMap<u8, Counts> {
    let mut m: BTreeMap<u8, Counts> = BTreeMap::new();
    for (&p, &a) in predicted.iter().zip(actual) {
        m.entry(a).or_default().support += 1;
        if p == a {
            m.entry(a).or_default().tp += 1;
        } else {
            m.entry(a).or_default().fn_ += 1;
            m.entry(p).or_default().fp += 1;
        }
    }
    m
}

/// Unweighted mean of per-class F1 over classes present in either vector.
pub fn macro_f1(predicted: &[u8], actual: &[u8]) -> Result<f64> {
    check_pair(predicted, actual)?;
    let classes = per_class(predicted, actual);
    Ok(classes.values().map(Counts::f1).sum::<f64>() / classes.len() as f64)
}

/// Per-class F1 weighted by true support.
pub fn weighted_f1(predicted: &[u8], actual: &[u8]) -> Result<f64> {
    check_pair(predicted, actual)?;
    let n = actual.len() as f64;
    Ok(per_class(predicted, actual)
        .values()
        .map(|c| c.f1() * c.support as f64 / n)
        .sum())
}

pub fn f1_score(predicted: &[u8], actual: &[u8], average: F1Average) -> Result<f64> {
    match average {
        F1Average::Macro => macro_f1(predicted, actual),
        F1Average::Weighted => weighted_f1(predicted, actual),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 1], &[2, 2]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 1, 2, 3], &[1, 2, 2, 2]).unwrap(), 0.5);
        assert!(accuracy(&[], &[]).is_err());
        assert!(accuracy(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn macro_f1_examples() {
        assert_eq!(macro_f1(&[4, 5, 6], &[4, 5, 6]).unwrap(), 1.0);
        let v = macro_f1(&[1, 1, 1, 1], &[1, 1, 2, 2]).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        assert!(macro_f1(&[1], &[]).is_err());
    }

    #[test]
    fn weighted_f1_example() {
        // class 1: F1 2/3, support 2; class 2: F1 0, support 2
        let v = weighted_f1(&[1, 1, 1, 1], &[1, 1, 2, 2]).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        let v = weighted_f1(&[1, 1, 1, 2], &[1, 1, 1, 1]).unwrap();
        // class 1: P=1, R=3/4 -> 6/7, weight 1; class 2 weight 0
        assert!((v - 6.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn macro_f1_is_permutation_invariant() {
        let p = [1, 2, 2, 3, 6, 6, 1];
        let a = [1, 2, 3, 3, 6, 1, 2];
        let perm = |l: u8| [0, 4, 6, 1, 0, 0, 2][l as usize];
        let pp: Vec<u8> = p.iter().map(|&l| perm(l)).collect();
        let aa: Vec<u8> = a.iter().map(|&l| perm(l)).collect();
        assert!((macro_f1(&p, &a).unwrap() - macro_f1(&pp, &aa).unwrap()).abs() < 1e-12);
    }
}
