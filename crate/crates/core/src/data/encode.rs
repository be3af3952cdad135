//! Design-matrix encoding: one-hot nominals, ordinal ranks, z-scored numerics.

use serde::{Deserialize, Serialize};

use super::cohort::Cohort;
use super::schema::{FeatureKind, FeatureSchema};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignColumn {
    pub name: String,
    /// Index of the originating schema feature.
    pub feature: usize,
}

/// Maps design columns back to schema features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnCatalog {
    pub columns: Vec<DesignColumn>,
    pub feature_names: Vec<String>,
}

impl ColumnCatalog {
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Sums per-column weights into per-feature weights.
    pub fn aggregate(&self, per_column: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features()];
        for (col, &w) in self.columns.iter().zip(per_column) {
            out[col.feature] += w;
        }
        out
    }

    /// A catalog of plain numeric columns, one per feature.
    pub fn identity(names: &[&str]) -> Self {
        Self {
            columns: names
                .iter()
                .enumerate()
                .map(|(j, n)| DesignColumn {
                    name: n.to_string(),
                    feature: j,
                })
                .collect(),
            feature_names: names.iter().map(|n| n.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum ColumnRule {
    Standardize { mean: f64, std: f64 },
    /// Constant in training data; encoded as 0.
    ZeroVariance,
    Rank,
    Indicator { category: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    catalog: ColumnCatalog,
    rules: Vec<ColumnRule>,
}

fn require_complete(row: &[Option<f64>]) -> Result<Vec<f64>> {
    row.iter()
        .map(|v| v.ok_or_else(|| Error::InvalidArgument("encoding requires an imputed cohort".into())))
        .collect()
}

impl Encoder {
    /// Fits standardization parameters on an imputed training cohort.
    pub fn fit(train: &Cohort, schema: &FeatureSchema) -> Result<Self> {
        let rows: Vec<Vec<f64>> = train
            .features
            .iter()
            .map(|r| require_complete(r))
            .collect::<Result<_>>()?;
        let n = rows.len() as f64;
        let mut columns = Vec::new();
        let mut rules = Vec::new();
        for (j, def) in schema.entries.iter().enumerate() {
            match def.kind {
                FeatureKind::Numeric => {
                    let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
                    let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
                    let std = var.sqrt();
                    columns.push(DesignColumn {
                        name: def.name.clone(),
                        feature: j,
                    });
                    if std > 1e-12 * mean.abs().max(1.0) {
                        rules.push(ColumnRule::Standardize { mean, std });
                    } else {
                        rules.push(ColumnRule::ZeroVariance);
                    }
                }
                FeatureKind::Ordinal => {
                    columns.push(DesignColumn {
                        name: def.name.clone(),
                        feature: j,
                    });
                    rules.push(ColumnRule::Rank);
                }
                FeatureKind::Nominal => {
                    for &category in &def.categories {
                        columns.push(DesignColumn {
                            name: format!("{}={}", def.name, category),
                            feature: j,
                        });
                        rules.push(ColumnRule::Indicator { category });
                    }
                }
            }
        }
        Ok(Self {
            catalog: ColumnCatalog {
                columns,
                feature_names: schema.names().map(String::from).collect(),
            },
            rules,
        })
    }

    pub fn catalog(&self) -> &ColumnCatalog {
        &self.catalog
    }

    /// Names of numeric features that were constant in training data.
    pub fn zero_variance_features(&self) -> Vec<&str> {
        self.catalog
            .columns
            .iter()
            .zip(&self.rules)
            .filter(|(_, r)| matches!(r, ColumnRule::ZeroVariance))
            .map(|(c, _)| c.name.as_str())
            .collect()
    }

    pub fn encode_row(&self, row: &[f64]) -> Vec<f64> {
        self.catalog
            .columns
            .iter()
            .zip(&self.rules)
            .map(|(col, rule)| {
                let v = row[col.feature];
                match *rule {
                    ColumnRule::Standardize { mean, std } => (v - mean) / std,
                    ColumnRule::ZeroVariance => 0.0,
                    ColumnRule::Rank => v,
                    ColumnRule::Indicator { category } => f64::from(u8::from(v == category as f64)),
                }
            })
            .collect()
    }

    pub fn transform(&self, cohort: &Cohort) -> Result<Matrix> {
        let width = self.catalog.width();
        let mut data = Vec::with_capacity(cohort.n_samples() * width);
        for row in &cohort.features {
            data.extend(self.encode_row(&require_complete(row)?));
        }
        Matrix::new(cohort.n_samples(), width, data)
    }
}

/// Fits an encoder on `cohort` and returns its design grid with it.
pub fn encode_features(cohort: &Cohort, schema: &FeatureSchema) -> Result<(Matrix, Encoder)> {
    let encoder = Encoder::fit(cohort, schema)?;
    let design = encoder.transform(cohort)?;
    Ok((design, encoder))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::cohort::LabelSource;

    fn cohort(n: usize) -> Cohort {
        let schema = FeatureSchema::table1();
        let features = (0..n)
            .map(|i| {
                schema
                    .entries
                    .iter()
                    .map(|d| {
                        Some(match d.kind {
                            FeatureKind::Numeric => 10.0 + (i * 7 % 13) as f64 * 1.5,
                            _ => d.categories[i % d.categories.len()] as f64,
                        })
                    })
                    .collect()
            })
            .collect();
        Cohort {
            ids: (0..n).map(|i| i.to_string()).collect(),
            features,
            labels: vec![0; n],
            label_sources: vec![LabelSource::Glucose; n],
        }
    }

    #[test]
    fn one_hot_ranks_and_zscores() {
        let schema = FeatureSchema::table1();
        let c = cohort(40);
        let (design, enc) = encode_features(&c, &schema).unwrap();
        let cat = enc.catalog();
        // 9 numeric + 3 ordinal + RACE(5) + GEND(2) + HBP(2) + REL(2)
        assert_eq!(cat.width(), 9 + 3 + 5 + 2 + 2 + 2);
        let race = schema.index_of_name("RACE").unwrap();
        let race_cols: Vec<usize> = (0..cat.width()).filter(|&k| cat.columns[k].feature == race).collect();
        assert_eq!(race_cols.len(), 5);
        for i in 0..design.n_rows() {
            let s: f64 = race_cols.iter().map(|&k| design.get(i, k)).sum();
            assert_eq!(s, 1.0);
        }
        let edu = schema.index_of_name("EDU").unwrap();
        let edu_col = cat.columns.iter().position(|c| c.feature == edu).unwrap();
        for i in 0..design.n_rows() {
            assert_eq!(Some(design.get(i, edu_col)), c.features[i][edu]);
        }
        for (k, col) in cat.columns.iter().enumerate() {
            if schema.entries[col.feature].kind == FeatureKind::Numeric {
                let v = design.column(k);
                let n = v.len() as f64;
                let mean = v.iter().sum::<f64>() / n;
                let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
                assert!(mean.abs() < 1e-9, "{} mean {mean}", col.name);
                assert!((std - 1.0).abs() < 1e-9, "{} std {std}", col.name);
            }
        }
    }

    #[test]
    fn catalog_covers_every_feature() {
        let schema = FeatureSchema::table1();
        let (_, enc) = encode_features(&cohort(10), &schema).unwrap();
        let cat = enc.catalog();
        for j in 0..schema.len() {
            assert!(cat.columns.iter().any(|c| c.feature == j));
        }
        let agg = cat.aggregate(&vec![1.0; cat.width()]);
        assert_eq!(agg.iter().sum::<f64>(), cat.width() as f64);
    }

    #[test]
    fn constant_numeric_is_flagged_and_zeroed() {
        let schema = FeatureSchema::table1();
        let mut c = cohort(10);
        let chol = schema.index_of_name("CHOL").unwrap();
        for row in &mut c.features {
            row[chol] = Some(200.0);
        }
        let (design, enc) = encode_features(&c, &schema).unwrap();
        assert_eq!(enc.zero_variance_features(), vec!["CHOL"]);
        let k = enc.catalog().columns.iter().position(|col| col.feature == chol).unwrap();
        assert!(design.column(k).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn missing_cells_rejected() {
        let schema = FeatureSchema::table1();
        let mut c = cohort(5);
        c.features[2][0] = None;
        assert!(encode_features(&c, &schema).is_err());
    }
}
