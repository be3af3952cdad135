//! The 16-feature survey codebook.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    /// Unordered category codes, one-hot expanded on encoding.
    Nominal,
    /// Ordered category codes, used directly as integer ranks.
    Ordinal,
}

impl FeatureKind {
    pub fn is_categorical(self) -> bool {
        !matches!(self, FeatureKind::Numeric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub name: String,
    pub survey_code: String,
    pub description: String,
    pub kind: FeatureKind,
    pub unit: Option<String>,
    /// Valid category codes (categorical kinds only), ascending.
    pub categories: Vec<i64>,
    /// Survey reserve codes (refused, don't know, ...) read as missing.
    pub missing_codes: Vec<f64>,
}

impl FeatureDef {
    fn numeric(name: &str, code: &str, description: &str, unit: Option<&str>) -> Self {
        Self {
            name: name.into(),
            survey_code: code.into(),
            description: description.into(),
            kind: FeatureKind::Numeric,
            unit: unit.map(Into::into),
            categories: Vec::new(),
            missing_codes: Vec::new(),
        }
    }

    fn categorical(
        name: &str,
        code: &str,
        description: &str,
        kind: FeatureKind,
        categories: impl IntoIterator<Item = i64>,
    ) -> Self {
        Self {
            name: name.into(),
            survey_code: code.into(),
            description: description.into(),
            kind,
            unit: None,
            categories: categories.into_iter().collect(),
            missing_codes: Vec::new(),
        }
    }

    fn with_missing_codes(mut self, codes: &[f64]) -> Self {
        self.missing_codes = codes.to_vec();
        self
    }

    /// Maps a parsed cell to the stored value, or `None` when the cell is a
    /// reserve code or (for categorical features) not a codebook category.
    pub fn admit(&self, raw: f64) -> Option<f64> {
        if !raw.is_finite() || self.missing_codes.contains(&raw) {
            return None;
        }
        if self.kind.is_categorical() {
            let code = raw.round();
            if code != raw || !self.categories.contains(&(code as i64)) {
                return None;
            }
        }
        Some(raw)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub entries: Vec<FeatureDef>,
}

impl FeatureSchema {
    /// The default codebook: 16 questionnaire and examination items.
    pub fn table1() -> Self {
        use FeatureKind::{Nominal, Ordinal};
        let entries = vec![
            FeatureDef::numeric("AGE", "RIDAGEYR", "Age at time of screening", Some("years")),
            FeatureDef::numeric("WAIST", "BMXWAIST", "Waist circumference", Some("cm")),
            FeatureDef::categorical("REL", "MCQ250A", "Blood relatives have diabetes", Nominal, [1, 2])
                .with_missing_codes(&[7.0, 9.0]),
            FeatureDef::numeric("HEIGHT", "BMXHT", "Standing height", Some("cm")),
            FeatureDef::numeric("CHOL", "LBXTC", "Total cholesterol", Some("mg/dL")),
            FeatureDef::numeric("LEG", "BMXLEG", "Upper leg length", Some("cm")),
            FeatureDef::numeric("WEIGHT", "BMXWT", "Weight", Some("kg")),
            FeatureDef::numeric("BMI", "BMXBMI", "Body mass index", Some("kg/m^2")),
            FeatureDef::categorical("RACE", "RIDRETH1", "Race/ethnicity", Nominal, 1..=5),
            FeatureDef::categorical("HBP", "BPQ020", "Ever told high blood pressure", Nominal, [1, 2])
                .with_missing_codes(&[7.0, 9.0]),
            // 12 and 13 are coarse over/under $20k answers with no rank.
            FeatureDef::categorical("INCOME", "INDHHINC", "Annual household income bracket", Ordinal, 1..=11)
                .with_missing_codes(&[12.0, 13.0, 77.0, 99.0]),
            FeatureDef::numeric("ALC", "ALQ120Q", "Alcohol drinking frequency, past year", None)
                .with_missing_codes(&[777.0, 999.0]),
            FeatureDef::numeric("SMOKE", "SMD030", "Age started smoking cigarettes regularly", Some("years"))
                .with_missing_codes(&[777.0, 999.0]),
            FeatureDef::categorical("EDU", "DMDEDUC2", "Education level", Ordinal, 1..=5)
                .with_missing_codes(&[7.0, 9.0]),
            FeatureDef::categorical("EXER", "PAQ180", "Daily physical activity level", Ordinal, 1..=4)
                .with_missing_codes(&[7.0, 9.0]),
            FeatureDef::categorical("GEND", "RIAGENDR", "Gender", Nominal, [1, 2]),
        ];
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of_code(&self, code: &str) -> Option<usize> {
        self.entries.iter().position(|f| f.survey_code == code)
    }

    pub fn index_of_name(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|f| f.name == name)
    }

    pub fn codes(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|f| f.survey_code.as_str())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|f| f.name.as_str())
    }

    /// Checks code uniqueness and category lists.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = HashSet::new();
        for f in &self.entries {
            if !seen.insert(f.survey_code.as_str()) {
                return Err(format!("duplicate survey code {}", f.survey_code));
            }
            if f.kind.is_categorical() && f.categories.is_empty() {
                return Err(format!("categorical feature {} has no categories", f.name));
            }
        }
        Ok(())
    }
}

impl Default for FeatureSchema {
    fn default() -> Self {
        Self::table1()
    }
}
