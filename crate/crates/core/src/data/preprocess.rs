use serde::{Deserialize, Serialize};

use super::cohort::Cohort;
use super::encode::{ColumnCatalog, Encoder};
use super::impute::{apply_imputer, fit_imputer, ImputationPlan};
use super::schema::FeatureSchema;
use crate::error::Result;
use crate::matrix::Matrix;

/// Imputation plan plus encoder, both fitted on one training partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub imputation: ImputationPlan,
    pub encoder: Encoder,
}

impl Preprocessor {
    pub fn fit(train: &Cohort, schema: &FeatureSchema) -> Result<Self> {
        let imputation = fit_imputer(train, schema)?;
        let encoder = Encoder::fit(&apply_imputer(&imputation, train), schema)?;
        Ok(Self { imputation, encoder })
    }

    pub fn transform(&self, cohort: &Cohort) -> Result<Matrix> {
        self.encoder.transform(&apply_imputer(&self.imputation, cohort))
    }

    pub fn catalog(&self) -> &ColumnCatalog {
        self.encoder.catalog()
    }
}
