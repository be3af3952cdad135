//! Exclusion, labeling, the labeled cohort and its stratified split.

use std::fmt;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::ingest::{parse_cell, RawRecord, SelfReport};
use super::schema::FeatureSchema;
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

pub const MIN_AGE_YEARS: f64 = 20.0;
/// Glucose strictly above this value is labeled diabetic.
pub const GLUCOSE_THRESHOLD_MG_DL: f64 = 126.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    MissingAge,
    UnderAge,
    Pregnant,
    Unlabeled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    SelfReport,
    Glucose,
}

impl LabelSource {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelSource::SelfReport => "self_report",
            LabelSource::Glucose => "glucose",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "self_report" => Some(LabelSource::SelfReport),
            "glucose" => Some(LabelSource::Glucose),
            _ => None,
        }
    }
}

/// `None` keeps the record.
pub fn exclusion_reason(record: &RawRecord) -> Option<ExclusionReason> {
    match record.age_years {
        None => Some(ExclusionReason::MissingAge),
        Some(age) if age < MIN_AGE_YEARS => Some(ExclusionReason::UnderAge),
        Some(_) if record.pregnant == Some(true) => Some(ExclusionReason::Pregnant),
        Some(_) => None,
    }
}

pub fn apply_exclusions(record: &RawRecord) -> bool {
    exclusion_reason(record).is_none()
}

/// Self-report wins over glucose when both are available.
pub fn assign_label(record: &RawRecord) -> Option<(u8, LabelSource)> {
    match record.self_report {
        Some(SelfReport::Yes) => return Some((1, LabelSource::SelfReport)),
        Some(SelfReport::No) => return Some((0, LabelSource::SelfReport)),
        Some(SelfReport::Other) | None => {}
    }
    record
        .glucose_mg_dl
        .map(|g| (u8::from(g > GLUCOSE_THRESHOLD_MG_DL), LabelSource::Glucose))
}

/// Labeled sample grid. Rows of `features` follow the schema's entry order;
/// a `None` cell is missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub ids: Vec<String>,
    pub features: Vec<Vec<Option<f64>>>,
    pub labels: Vec<u8>,
    pub label_sources: Vec<LabelSource>,
}

impl Cohort {
    pub fn empty() -> Self {
        Self {
            ids: Vec::new(),
            features: Vec::new(),
            labels: Vec::new(),
            label_sources: Vec::new(),
        }
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `true` where a value is present.
    pub fn mask(&self) -> Vec<Vec<bool>> {
        self.features
            .iter()
            .map(|row| row.iter().map(Option::is_some).collect())
            .collect()
    }

    pub fn missing_fraction(&self) -> f64 {
        let cells: usize = self.features.iter().map(Vec::len).sum();
        if cells == 0 {
            return 0.0;
        }
        let missing = self.features.iter().flatten().filter(|v| v.is_none()).count();
        missing as f64 / cells as f64
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn prevalence(&self) -> f64 {
        self.positives() as f64 / self.n_samples() as f64
    }

    pub fn subset(&self, indices: &[usize]) -> Cohort {
        Cohort {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            label_sources: indices.iter().map(|&i| self.label_sources[i]).collect(),
        }
    }

    /// Writes the cohort artifact: `SEQN,label,label_source,<codes...>`.
    pub fn write_delimited<W: Write>(&self, writer: W, schema: &FeatureSchema) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["SEQN", "label", "label_source"];
        header.extend(schema.codes());
        w.write_record(&header)?;
        for i in 0..self.n_samples() {
            let mut row = vec![
                self.ids[i].clone(),
                self.labels[i].to_string(),
                self.label_sources[i].as_str().to_string(),
            ];
            row.extend(
                self.features[i]
                    .iter()
                    .map(|v| v.map(|x| x.to_string()).unwrap_or_default()),
            );
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<cohort writer>", e))?;
        Ok(())
    }

    pub fn read_delimited<R: Read>(reader: R, schema: &FeatureSchema) -> Result<Cohort> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let find = |name: &str| headers.iter().position(|h| h == name);
        let mut missing = Vec::new();
        let mut cols = Vec::new();
        for code in schema.codes() {
            match find(code) {
                Some(c) => cols.push(c),
                None => missing.push(code.to_string()),
            }
        }
        let (Some(id_c), Some(label_c), Some(src_c)) = (find("SEQN"), find("label"), find("label_source"))
        else {
            missing.extend(["SEQN", "label", "label_source"].iter().filter(|c| find(c).is_none()).map(|c| c.to_string()));
            return Err(Error::SchemaMismatch { missing });
        };
        if !missing.is_empty() {
            return Err(Error::SchemaMismatch { missing });
        }
        let mut cohort = Cohort::empty();
        for rec in r.records() {
            let rec = rec?;
            let label = match rec.get(label_c).map(str::trim) {
                Some("0") => 0,
                Some("1") => 1,
                other => return Err(Error::Artifact(format!("bad label {other:?} in cohort file"))),
            };
            let source = rec
                .get(src_c)
                .and_then(LabelSource::parse)
                .ok_or_else(|| Error::Artifact("bad label_source in cohort file".into()))?;
            cohort.ids.push(rec.get(id_c).unwrap_or_default().to_string());
            cohort.labels.push(label);
            cohort.label_sources.push(source);
            cohort
                .features
                .push(cols.iter().map(|&c| rec.get(c).and_then(parse_cell)).collect());
        }
        Ok(cohort)
    }
}

/// Counts produced while turning raw records into a cohort.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionReport {
    pub total_read: usize,
    pub excluded_missing_age: usize,
    pub excluded_under_age: usize,
    pub excluded_pregnant: usize,
    pub excluded_unlabeled: usize,
    pub labeled_self_report: usize,
    pub labeled_glucose: usize,
    pub cohort_size: usize,
    pub positives: usize,
}

impl fmt::Display for ExclusionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "total_read\t{}", self.total_read)?;
        writeln!(f, "excluded_missing_age\t{}", self.excluded_missing_age)?;
        writeln!(f, "excluded_under_age\t{}", self.excluded_under_age)?;
        writeln!(f, "excluded_pregnant\t{}", self.excluded_pregnant)?;
        writeln!(f, "excluded_unlabeled\t{}", self.excluded_unlabeled)?;
        writeln!(f, "labeled_self_report\t{}", self.labeled_self_report)?;
        writeln!(f, "labeled_glucose\t{}", self.labeled_glucose)?;
        writeln!(f, "cohort_size\t{}", self.cohort_size)?;
        writeln!(f, "positives\t{}", self.positives)
    }
}

pub fn build_cohort(records: &[RawRecord]) -> (Cohort, ExclusionReport) {
    let mut cohort = Cohort::empty();
    let mut report = ExclusionReport {
        total_read: records.len(),
        ..Default::default()
    };
    for record in records {
        let reason = exclusion_reason(record);
        let label = if reason.is_none() { assign_label(record) } else { None };
        match (reason, label) {
            (Some(ExclusionReason::MissingAge), _) => report.excluded_missing_age += 1,
            (Some(ExclusionReason::UnderAge), _) => report.excluded_under_age += 1,
            (Some(ExclusionReason::Pregnant), _) => report.excluded_pregnant += 1,
            (Some(ExclusionReason::Unlabeled), _) | (None, None) => report.excluded_unlabeled += 1,
            (None, Some((y, source))) => {
                match source {
                    LabelSource::SelfReport => report.labeled_self_report += 1,
                    LabelSource::Glucose => report.labeled_glucose += 1,
                }
                cohort.ids.push(record.id.clone());
                cohort.features.push(record.values.clone());
                cohort.labels.push(y);
                cohort.label_sources.push(source);
            }
        }
    }
    report.cohort_size = cohort.n_samples();
    report.positives = cohort.positives();
    (cohort, report)
}

/// Row indices of a train/test partition, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits per-class counts of `total` in proportion to class sizes, using
/// largest remainders so the parts sum exactly to `total`.
pub(crate) fn proportional_allocation(class_sizes: &[usize], total: usize) -> Vec<usize> {
    let n: usize = class_sizes.iter().sum();
    let mut alloc: Vec<usize> = class_sizes.iter().map(|&c| c * total / n).collect();
    let mut remainders: Vec<(usize, usize)> = class_sizes
        .iter()
        .enumerate()
        .map(|(k, &c)| ((c * total) % n, k))
        .collect();
    // largest remainder first, lower class index on ties
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let short = total - alloc.iter().sum::<usize>();
    for &(_, k) in remainders.iter().take(short) {
        alloc[k] += 1;
    }
    alloc
}

pub fn split_indices(labels: &[u8], test_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if labels.is_empty() {
        return Err(Error::InvalidArgument("cannot split an empty cohort".into()));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &y) in labels.iter().enumerate() {
        by_class[usize::from(y)].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if members.len() < 2 {
            return Err(Error::Stratification(format!(
                "class {class} has {} member(s); at least 2 are needed",
                members.len()
            )));
        }
    }
    let n = labels.len();
    let n_test = (n as f64 * test_fraction).round() as usize;
    let sizes = [by_class[0].len(), by_class[1].len()];
    let test_per_class = proportional_allocation(&sizes, n_test);

    let mut rng = rng_from_seed(seed);
    let mut train = Vec::with_capacity(n - n_test);
    let mut test = Vec::with_capacity(n_test);
    for (members, &k) in by_class.iter_mut().zip(&test_per_class) {
        members.shuffle(&mut rng);
        test.extend_from_slice(&members[..k]);
        train.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

pub fn split_train_test(cohort: &Cohort, test_fraction: f64, seed: u64) -> Result<(Cohort, Cohort)> {
    let split = split_indices(&cohort.labels, test_fraction, seed)?;
    Ok((cohort.subset(&split.train), cohort.subset(&split.test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(age: Option<f64>, pregnant: Option<bool>, sr: Option<SelfReport>, glu: Option<f64>) -> RawRecord {
        RawRecord {
            id: "x".into(),
            values: vec![age; 16],
            age_years: age,
            pregnant,
            self_report: sr,
            glucose_mg_dl: glu,
        }
    }

    #[test]
    fn exclusion_rules() {
        assert!(apply_exclusions(&record(Some(45.0), Some(false), None, None)));
        assert!(apply_exclusions(&record(Some(45.0), None, None, None)));
        assert!(!apply_exclusions(&record(Some(19.0), None, None, None)));
        assert!(apply_exclusions(&record(Some(20.0), None, None, None)));
        assert!(!apply_exclusions(&record(Some(30.0), Some(true), None, None)));
        assert_eq!(
            exclusion_reason(&record(None, None, None, None)),
            Some(ExclusionReason::MissingAge)
        );
    }

    #[test]
    fn labeling_rules() {
        let yes = record(Some(50.0), None, Some(SelfReport::Yes), Some(90.0));
        assert_eq!(assign_label(&yes), Some((1, LabelSource::SelfReport)));
        let no = record(Some(50.0), None, Some(SelfReport::No), Some(200.0));
        assert_eq!(assign_label(&no), Some((0, LabelSource::SelfReport)));
        let g = |v| assign_label(&record(Some(50.0), None, None, Some(v)));
        assert_eq!(g(130.0), Some((1, LabelSource::Glucose)));
        assert_eq!(g(100.0), Some((0, LabelSource::Glucose)));
        assert_eq!(g(126.0), Some((0, LabelSource::Glucose)));
        let other = record(Some(50.0), None, Some(SelfReport::Other), Some(140.0));
        assert_eq!(assign_label(&other), Some((1, LabelSource::Glucose)));
        assert_eq!(assign_label(&record(Some(50.0), None, Some(SelfReport::Other), None)), None);
    }

    #[test]
    fn build_counts_every_reason() {
        let records = vec![
            record(Some(45.0), None, Some(SelfReport::Yes), None),
            record(Some(45.0), None, None, Some(110.0)),
            record(Some(12.0), None, None, Some(110.0)),
            record(Some(31.0), Some(true), None, Some(110.0)),
            record(None, None, None, Some(110.0)),
            record(Some(60.0), None, None, None),
        ];
        let (cohort, report) = build_cohort(&records);
        assert_eq!(cohort.n_samples(), 2);
        assert_eq!(report.total_read, 6);
        assert_eq!(report.excluded_under_age, 1);
        assert_eq!(report.excluded_pregnant, 1);
        assert_eq!(report.excluded_missing_age, 1);
        assert_eq!(report.excluded_unlabeled, 1);
        assert_eq!(report.labeled_self_report, 1);
        assert_eq!(report.labeled_glucose, 1);
        assert_eq!(report.positives, 1);
        let mask = cohort.mask();
        for (row, m) in cohort.features.iter().zip(&mask) {
            for (v, present) in row.iter().zip(m) {
                assert_eq!(v.is_some(), *present);
            }
        }
    }

    fn labels(n: usize, positives: usize) -> Vec<u8> {
        (0..n).map(|i| u8::from(i < positives)).collect()
    }

    #[test]
    fn split_sizes_match_published_counts() {
        let y = labels(5515, 1048);
        let split = split_indices(&y, 0.2, 1).unwrap();
        assert_eq!(split.train.len(), 4412);
        assert_eq!(split.test.len(), 1103);
    }

    #[test]
    fn split_is_deterministic_disjoint_and_exhaustive() {
        let y = labels(500, 95);
        let a = split_indices(&y, 0.2, 99).unwrap();
        let b = split_indices(&y, 0.2, 99).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<usize> = a.train.iter().chain(&a.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..500).collect::<Vec<_>>());
        let c = split_indices(&y, 0.2, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn split_keeps_prevalence() {
        let y = labels(1000, 190);
        let total_pos = y.iter().filter(|&&v| v == 1).count();
        let split = split_indices(&y, 0.2, 5).unwrap();
        let pos = |idx: &[usize]| idx.iter().filter(|&&i| y[i] == 1).count();
        let expected_test = total_pos as f64 * split.test.len() as f64 / 1000.0;
        assert!((pos(&split.test) as f64 - expected_test).abs() <= 1.0);
        let expected_train = total_pos as f64 * split.train.len() as f64 / 1000.0;
        assert!((pos(&split.train) as f64 - expected_train).abs() <= 1.0);
    }

    #[test]
    fn split_rejects_tiny_class_and_bad_fraction() {
        let mut y = vec![0u8; 20];
        y[3] = 1;
        assert!(matches!(split_indices(&y, 0.2, 1), Err(Error::Stratification(_))));
        assert!(split_indices(&labels(100, 20), 0.0, 1).is_err());
        assert!(split_indices(&labels(100, 20), 1.0, 1).is_err());
    }

    #[test]
    fn cohort_file_round_trip() {
        let schema = FeatureSchema::table1();
        let mut row: Vec<Option<f64>> = (0..16).map(|j| Some(j as f64 + 0.25)).collect();
        row[7] = None;
        let cohort = Cohort {
            ids: vec!["41475".into()],
            features: vec![row],
            labels: vec![1],
            label_sources: vec![LabelSource::Glucose],
        };
        let mut buf = Vec::new();
        cohort.write_delimited(&mut buf, &schema).unwrap();
        let back = Cohort::read_delimited(buf.as_slice(), &schema).unwrap();
        assert_eq!(back, cohort);
    }
}
