//! Delimited-text ingestion.
//!
//! Column contract: a header row carrying every schema survey code plus the
//! auxiliary columns below. Auxiliary columns may be absent, in which case
//! every record reads them as missing. Empty cells and the literal `NA` are
//! missing; so is anything that does not parse as a number.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schema::FeatureSchema;
use crate::error::{Error, Result};

pub const ID_COLUMN: &str = "SEQN";
/// 1 = pregnant, 2 = not pregnant, anything else unknown.
pub const PREGNANCY_COLUMN: &str = "RIDEXPRG";
/// "Has a doctor ever told you that you have diabetes": 1 yes, 2 no.
pub const SELF_REPORT_COLUMN: &str = "DIQ010";
/// Plasma glucose, mg/dL.
pub const GLUCOSE_COLUMN: &str = "LBXGLU";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfReport {
    Yes,
    No,
    Other,
}

impl SelfReport {
    pub fn from_code(code: f64) -> Self {
        if code == 1.0 {
            SelfReport::Yes
        } else if code == 2.0 {
            SelfReport::No
        } else {
            SelfReport::Other
        }
    }
}

/// One survey participant as read from disk. `values` is aligned with the
/// schema's entry order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    pub values: Vec<Option<f64>>,
    pub age_years: Option<f64>,
    pub pregnant: Option<bool>,
    pub self_report: Option<SelfReport>,
    pub glucose_mg_dl: Option<f64>,
}

impl RawRecord {
    pub fn value(&self, schema: &FeatureSchema, code: &str) -> Option<f64> {
        schema.index_of_code(code).and_then(|j| self.values[j])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IngestOptions {
    pub delimiter: u8,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { delimiter: b',' }
    }
}

pub fn parse_cell(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    if cell.is_empty() || cell == "NA" {
        return None;
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn ingest_delimited(
    path: &Path,
    schema: &FeatureSchema,
    options: IngestOptions,
) -> Result<Vec<RawRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, schema, options)
}

pub fn ingest_reader<R: Read>(
    reader: R,
    schema: &FeatureSchema,
    options: IngestOptions,
) -> Result<Vec<RawRecord>> {
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    let find = |code: &str| headers.iter().position(|h| h.trim() == code);

    let mut feature_columns = Vec::with_capacity(schema.len());
    let mut missing = Vec::new();
    for code in schema.codes() {
        match find(code) {
            Some(c) => feature_columns.push(c),
            None => missing.push(code.to_string()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::SchemaMismatch { missing });
    }
    let id_col = find(ID_COLUMN);
    let preg_col = find(PREGNANCY_COLUMN);
    let self_col = find(SELF_REPORT_COLUMN);
    let glu_col = find(GLUCOSE_COLUMN);
    let age_idx = schema.index_of_code("RIDAGEYR");

    let mut records = Vec::new();
    for (row, result) in csv.records().enumerate() {
        let rec = result?;
        let cell = |c: Option<usize>| c.and_then(|c| rec.get(c)).and_then(parse_cell);
        let values: Vec<Option<f64>> = schema
            .entries
            .iter()
            .zip(&feature_columns)
            .map(|(def, &c)| cell(Some(c)).and_then(|v| def.admit(v)))
            .collect();
        let id = id_col
            .and_then(|c| rec.get(c))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map_or_else(|| format!("row{}", row + 1), str::to_string);
        let pregnant = cell(preg_col).and_then(|v| (v == 1.0 || v == 2.0).then_some(v == 1.0));
        records.push(RawRecord {
            id,
            age_years: age_idx.and_then(|j| values[j]),
            values,
            pregnant,
            self_report: cell(self_col).map(SelfReport::from_code),
            glucose_mg_dl: cell(glu_col),
        });
    }
    Ok(records)
}

/// Writes records in the ingestion column contract, so that
/// `ingest_reader` reads them back unchanged.
pub fn write_raw_records<W: Write>(
    writer: W,
    records: &[RawRecord],
    schema: &FeatureSchema,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![ID_COLUMN];
    header.extend(schema.codes());
    header.extend([PREGNANCY_COLUMN, SELF_REPORT_COLUMN, GLUCOSE_COLUMN]);
    w.write_record(&header)?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        let mut row = vec![r.id.clone()];
        row.extend(r.values.iter().map(|&v| fmt(v)));
        row.push(fmt(r.pregnant.map(|p| if p { 1.0 } else { 2.0 })));
        row.push(fmt(r.self_report.map(|s| match s {
            SelfReport::Yes => 1.0,
            SelfReport::No => 2.0,
            SelfReport::Other => 9.0,
        })));
        row.push(fmt(r.glucose_mg_dl));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<raw writer>", e))?;
    Ok(())
}
