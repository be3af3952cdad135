use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreeningSummary {
    /// Patients confidently ruled out, needing no follow-up.
    pub eliminated: u64,
    pub to_notify: u64,
}

/// eliminated = floor(n * prop_negative * negative_recall). A 1e-9 guard
/// keeps products that are integral on paper from flooring one short.
pub fn screening_summary(n_total: u64, prop_negative: f64, negative_recall: f64) -> Result<ScreeningSummary> {
    for (name, v) in [("prop_negative", prop_negative), ("negative_recall", negative_recall)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {v}")));
        }
    }
    let eliminated = ((n_total as f64 * prop_negative * negative_recall + 1e-9).floor() as u64).min(n_total);
    Ok(ScreeningSummary {
        eliminated,
        to_notify: n_total - eliminated,
    })
}
