//! Unweighted probability averaging over the five tuned models.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::data::cohort::Cohort;
use crate::data::preprocess::Preprocessor;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::models::{from_artifact_json, to_artifact_json, ModelKind, TrainedModel};

pub const ENSEMBLE_FORMAT: &str = "onset-ensemble";

/// Probability cutoff for boundary `t`.
pub fn cutoff(t: f64) -> f64 {
    1.0 - t
}

/// Diabetic iff `p_bar >= 1 - t`, so a larger T flags more samples.
pub fn classify(p_bar: f64, t: f64) -> bool {
    p_bar >= cutoff(t)
}

fn decompose(x: f64) -> (u64, i32) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    }
}

fn pow2(e: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// Integer quotient and remainder of num * 2^s / den.
fn scaled_div(num: &BigUint, den: &BigUint, s: i32) -> (BigUint, BigUint, BigUint) {
    let (n, d) = if s >= 0 {
        (num << s as usize, den.clone())
    } else {
        (num.clone(), den << (-s) as usize)
    };
    let q = &n / &d;
    let r = n - &q * &d;
    (q, r, d)
}

/// Nearest f64 (ties to even) to num / den * 2^scale, for a value in [0, 1].
fn round_ratio(num: &BigUint, den: &BigUint, scale: i32) -> f64 {
    if num.bits() == 0 {
        return 0.0;
    }
    // Pick s so that num * 2^s / den lands in [2^52, 2^53).
    let mut s = 53 - (num.bits() as i64 - den.bits() as i64) as i32;
    let lo = BigUint::from(1u64 << 52);
    let hi = BigUint::from(1u64 << 53);
    loop {
        let (q, _, _) = scaled_div(num, den, s);
        if q < lo {
            s += 1;
        } else if q >= hi {
            s -= 1;
        } else {
            break;
        }
    }
    // Subnormal results carry fewer bits.
    s = s.min(scale + 1074);
    let (q, r, d) = scaled_div(num, den, s);
    let mut m = u64::try_from(&q).expect("quotient below 2^53");
    match (r * 2u32).cmp(&d) {
        Ordering::Greater => m += 1,
        Ordering::Equal if m & 1 == 1 => m += 1,
        _ => {}
    }
    // value = m * 2^(scale - s); m <= 2^53 so the split product is exact.
    (m as f64) * pow2(scale - s + 600) * pow2(-600)
}

/// Arithmetic mean of probabilities, correctly rounded. Exact rounding
/// makes the result independent of member order and equal to p when every
/// member outputs p, which a naive float sum then divide does not.
pub fn average_probabilities(ps: &[f64]) -> Result<f64> {
    if ps.is_empty() {
        return Err(Error::InvalidArgument("cannot average zero probabilities".into()));
    }
    if let Some(bad) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!("probability {bad} outside [0, 1]")));
    }
    let parts: Vec<(u64, i32)> = ps.iter().map(|&p| decompose(p)).collect();
    let base = parts.iter().map(|&(_, e)| e).min().expect("nonempty");
    let sum = parts
        .iter()
        .fold(BigUint::from(0u32), |acc, &(m, e)| acc + (BigUint::from(m) << (e - base) as usize));
    Ok(round_ratio(&sum, &BigUint::from(ps.len()), base))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    /// One member per model kind, in `ModelKind::ALL` order.
    pub members: Vec<TrainedModel>,
    pub decision_boundary: f64,
    /// Train-fitted imputation and encoding shared by all members.
    pub preprocessor: Preprocessor,
}

/// Per-sample member probabilities, their mean and the resulting class.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePrediction {
    pub members: Vec<f64>,
    pub mean: f64,
    pub diabetic: bool,
}

impl EnsembleModel {
    pub fn new(members: Vec<TrainedModel>, decision_boundary: f64, preprocessor: Preprocessor) -> Result<Self> {
        let model = Self {
            members,
            decision_boundary,
            preprocessor,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.members.len() != ModelKind::ALL.len() {
            return Err(Error::InvalidArgument(format!(
                "ensemble needs {} members, got {}",
                ModelKind::ALL.len(),
                self.members.len()
            )));
        }
        for (i, a) in self.members.iter().enumerate() {
            if self.members[..i].iter().any(|b| b.kind() == a.kind()) {
                return Err(Error::InvalidArgument(format!("duplicate ensemble member {}", a.kind())));
            }
            if &a.catalog != self.preprocessor.catalog() {
                return Err(Error::InvalidArgument(format!(
                    "member {} was trained on different columns",
                    a.kind()
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.decision_boundary) {
            return Err(Error::InvalidArgument(format!(
                "decision boundary {} outside [0, 1]",
                self.decision_boundary
            )));
        }
        Ok(())
    }

    pub fn member(&self, kind: ModelKind) -> Option<&TrainedModel> {
        self.members.iter().find(|m| m.kind() == kind)
    }

    /// Mean member probability for one encoded row.
    pub fn ensemble_proba(&self, x: &[f64]) -> Result<f64> {
        let ps = self
            .members
            .iter()
            .map(|m| m.predict_proba(x))
            .collect::<Result<Vec<_>>>()?;
        average_probabilities(&ps)
    }

    pub fn predict_encoded(&self, design: &Matrix) -> Result<Vec<EnsemblePrediction>> {
        let per_member = self
            .members
            .iter()
            .map(|m| m.predict_proba_batch(design))
            .collect::<Result<Vec<_>>>()?;
        (0..design.n_rows())
            .map(|i| {
                let members: Vec<f64> = per_member.iter().map(|p| p[i]).collect();
                let mean = average_probabilities(&members)?;
                Ok(EnsemblePrediction {
                    diabetic: classify(mean, self.decision_boundary),
                    members,
                    mean,
                })
            })
            .collect()
    }

    pub fn predict(&self, cohort: &Cohort) -> Result<Vec<EnsemblePrediction>> {
        self.predict_encoded(&self.preprocessor.transform(cohort)?)
    }

    pub fn to_json(&self) -> Result<String> {
        to_artifact_json(ENSEMBLE_FORMAT, self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = from_artifact_json(ENSEMBLE_FORMAT, text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Delimited rows of id, one column per member, mean and class.
    pub fn predictions_csv(&self, ids: &[String], predictions: &[EnsemblePrediction]) -> String {
        let mut out = String::from("id");
        for m in &self.members {
            out.push_str(&format!(",p_{}", m.kind()));
        }
        out.push_str(",p_mean,class\n");
        for (id, p) in ids.iter().zip(predictions) {
            out.push_str(&csv_field(id));
            for v in &p.members {
                out.push_str(&format!(",{v}"));
            }
            out.push_str(&format!(",{},{}\n", p.mean, u8::from(p.diabetic)));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
