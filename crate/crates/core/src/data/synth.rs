//! Synthetic survey extracts for desk-scale runs.
//!
//! Generative rules, per participant:
//!
//! - label ~ Bernoulli(prevalence); glucose is drawn conditionally on it
//!   (≤ 125 mg/dL for negatives, > 126 mg/dL for positives), so the glucose
//!   labeling rule reproduces the drawn label. No self-report is emitted.
//! - diabetics are shifted upward in AGE (+20 y), WAIST (+20 cm) and BMI
//!   (+7.5); WEIGHT follows from BMI and HEIGHT; REL = yes with probability
//!   0.75 vs 0.25 and HBP = yes with 0.55 vs 0.22.
//! - the remaining features are drawn independently of the label.
//! - every feature cell except AGE is blanked completely at random so that
//!   the overall missing-cell fraction is 25%. AGE stays present because
//!   records without age are excluded.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::ingest::RawRecord;
use super::schema::FeatureSchema;
use crate::seed::{rng_from_seed, StageRng};

pub const TARGET_MISSING_FRACTION: f64 = 0.25;

fn normal(rng: &mut StageRng, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).expect("valid normal").sample(rng)
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn pick(rng: &mut StageRng, weights: &[f64]) -> i64 {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, &w) in weights.iter().enumerate() {
        if u < w {
            return k as i64 + 1;
        }
        u -= w;
    }
    weights.len() as i64
}

/// Generates `n` raw records over the default schema.
pub fn synthetic_records(n: usize, seed: u64, prevalence: f64) -> Vec<RawRecord> {
    let schema = FeatureSchema::table1();
    let idx = |name: &str| schema.index_of_name(name).expect("schema feature");
    let age_idx = idx("AGE");
    let missing_rate = TARGET_MISSING_FRACTION * schema.len() as f64 / (schema.len() - 1) as f64;
    let mut rng = rng_from_seed(seed);

    (0..n)
        .map(|i| {
            let diabetic = rng.random::<f64>() < prevalence;
            let d = if diabetic { 1.0 } else { 0.0 };
            let male = rng.random::<f64>() < 0.5;
            let age = normal(&mut rng, 42.0 + 20.0 * d, 11.0).clamp(20.0, 85.0).round();
            let height = if male {
                normal(&mut rng, 176.0, 7.0)
            } else {
                normal(&mut rng, 162.0, 6.5)
            };
            let bmi = normal(&mut rng, 26.5 + 7.5 * d, 4.5).max(15.0);
            let weight = bmi * (height / 100.0).powi(2) + normal(&mut rng, 0.0, 2.0);
            let waist = normal(&mut rng, 92.0 + 20.0 * d, 11.0).max(55.0);
            let leg = normal(&mut rng, 0.23 * height, 2.5);
            let chol = normal(&mut rng, 200.0, 38.0).max(80.0);
            let rel = if rng.random::<f64>() < 0.25 + 0.5 * d { 1 } else { 2 };
            let hbp = if rng.random::<f64>() < 0.22 + 0.33 * d { 1 } else { 2 };
            let race = pick(&mut rng, &[0.14, 0.05, 0.45, 0.25, 0.11]);
            let income = rng.random_range(1..=11);
            let alc = (-(1.0 - rng.random::<f64>()).ln() * 30.0).floor().min(365.0);
            let smoke = normal(&mut rng, 18.0, 4.0).clamp(7.0, 60.0).round();
            let edu = pick(&mut rng, &[0.1, 0.15, 0.25, 0.3, 0.2]);
            let exer = pick(&mut rng, &[0.25, 0.45, 0.2, 0.1]);
            let gend = if male { 1 } else { 2 };
            let glucose = if diabetic {
                127.0 + normal(&mut rng, 0.0, 40.0).abs()
            } else {
                normal(&mut rng, 95.0, 9.0).clamp(60.0, 125.0)
            };

            let mut values = vec![None; schema.len()];
            values[age_idx] = Some(age);
            values[idx("WAIST")] = Some(round1(waist));
            values[idx("REL")] = Some(rel as f64);
            values[idx("HEIGHT")] = Some(round1(height));
            values[idx("CHOL")] = Some(chol.round());
            values[idx("LEG")] = Some(round1(leg));
            values[idx("WEIGHT")] = Some(round1(weight));
            values[idx("BMI")] = Some(round1(bmi));
            values[idx("RACE")] = Some(race as f64);
            values[idx("HBP")] = Some(hbp as f64);
            values[idx("INCOME")] = Some(income as f64);
            values[idx("ALC")] = Some(alc);
            values[idx("SMOKE")] = Some(smoke);
            values[idx("EDU")] = Some(edu as f64);
            values[idx("EXER")] = Some(exer as f64);
            values[idx("GEND")] = Some(gend as f64);
            for (j, v) in values.iter_mut().enumerate() {
                if j != age_idx && rng.random::<f64>() < missing_rate {
                    *v = None;
                }
            }
            RawRecord {
                id: (i + 1).to_string(),
                values,
                age_years: Some(age),
                pregnant: Some(false),
                self_report: None,
                glucose_mg_dl: Some(round1(glucose).max(if diabetic { 126.1 } else { 0.0 })),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::cohort::build_cohort;
    use crate::data::ingest::{ingest_reader, write_raw_records, IngestOptions};

    #[test]
    fn prevalence_missingness_and_labels() {
        let records = synthetic_records(1000, 11, 0.19);
        let (cohort, report) = build_cohort(&records);
        assert_eq!(cohort.n_samples(), 1000);
        assert_eq!(report.labeled_glucose, 1000);
        // binomial sd ~ 12.4; allow 4 sd
        let pos = cohort.positives() as f64;
        assert!((pos - 190.0).abs() < 50.0, "{pos}");
        let frac = cohort.missing_fraction();
        assert!((frac - 0.25).abs() <= 0.02, "{frac}");
    }

    #[test]
    fn same_seed_same_file() {
        let schema = FeatureSchema::table1();
        let write = |seed| {
            let mut buf = Vec::new();
            write_raw_records(&mut buf, &synthetic_records(200, seed, 0.19), &schema).unwrap();
            buf
        };
        assert_eq!(write(3), write(3));
        assert_ne!(write(3), write(4));
    }

    #[test]
    fn written_file_reads_back() {
        let schema = FeatureSchema::table1();
        let records = synthetic_records(50, 2, 0.3);
        let mut buf = Vec::new();
        write_raw_records(&mut buf, &records, &schema).unwrap();
        let back = ingest_reader(buf.as_slice(), &schema, IngestOptions::default()).unwrap();
        assert_eq!(back, records);
    }
}
