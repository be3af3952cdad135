use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positive: u64,
    pub false_positive: u64,
    pub false_negative: u64,
    pub true_negative: u64,
}

impl Confusion {
    pub fn count(predictions: &[u8], labels: &[u8]) -> Result<Self> {
        if predictions.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: predictions.len(),
                right: labels.len(),
            });
        }
        let mut c = Confusion {
            true_positive: 0,
            false_positive: 0,
            false_negative: 0,
            true_negative: 0,
        };
        for (&p, &y) in predictions.iter().zip(labels) {
            match (p, y) {
                (1, 1) => c.true_positive += 1,
                (1, 0) => c.false_positive += 1,
                (0, 1) => c.false_negative += 1,
                (0, 0) => c.true_negative += 1,
                _ => return Err(Error::InvalidArgument(format!("non-binary value ({p}, {y})"))),
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.true_positive + self.false_positive + self.false_negative + self.true_negative
    }
}

/// Precision, recall and F1 for one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

impl ClassMetrics {
    fn from_counts(hit: u64, false_alarm: u64, miss: u64, class: u8) -> Result<Self> {
        let support = hit + miss;
        if support == 0 {
            return Err(Error::UndefinedClass { class });
        }
        let predicted = hit + false_alarm;
        let precision = if predicted == 0 { 0.0 } else { hit as f64 / predicted as f64 };
        let recall = hit as f64 / support as f64;
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Ok(Self {
            precision,
            recall,
            f1,
            support,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub diabetic: ClassMetrics,
    pub non_diabetic: ClassMetrics,
    /// Support-weighted averages over both classes.
    pub weighted: ClassMetrics,
    pub confusion: Confusion,
}

pub fn classification_metrics(predictions: &[u8], labels: &[u8]) -> Result<ClassificationMetrics> {
    let c = Confusion::count(predictions, labels)?;
    let diabetic = ClassMetrics::from_counts(c.true_positive, c.false_positive, c.false_negative, 1)?;
    let non_diabetic = ClassMetrics::from_counts(c.true_negative, c.false_negative, c.false_positive, 0)?;
    let total = c.total() as f64;
    let (w1, w0) = (diabetic.support as f64 / total, non_diabetic.support as f64 / total);
    let weighted = ClassMetrics {
        precision: w1 * diabetic.precision + w0 * non_diabetic.precision,
        recall: w1 * diabetic.recall + w0 * non_diabetic.recall,
        f1: w1 * diabetic.f1 + w0 * non_diabetic.f1,
        support: c.total(),
    };
    Ok(ClassificationMetrics {
        diabetic,
        non_diabetic,
        weighted,
        confusion: c,
    })
}
