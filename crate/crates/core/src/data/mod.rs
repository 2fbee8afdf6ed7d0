//! Decision-system data model, CSV ingestion and synthetic generation.
//!
//! A [`DecisionSystem`] is an immutable table of samples described by
//! condition attributes (numeric or categorical) and one decision label per
//! sample. Numeric values are min-max normalized into `[0, 1]`; categorical
//! values are interned symbol ids compared by equality only.

mod csv_io;
mod sample_set;
mod synth;

use serde::{Deserialize, Serialize};

pub use csv_io::{load_csv, write_csv, write_schema, ColumnRole, MissingPolicy, Schema};
pub use sample_set::SampleSet;
pub use synth::{synth, SynthSpec};

use crate::error::{Error, Result};

/// Index of a condition attribute within a [`DecisionSystem`].
pub type AttrId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
enum ColumnValues {
    Numeric(Vec<f64>),
    Categorical { codes: Vec<u32>, alphabet: Vec<String> },
}

/// One condition attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeColumn {
    name: String,
    values: ColumnValues,
    /// Dense equality codes: two samples share a level iff their values are
    /// equal. Used by equivalence-class computations.
    levels: Vec<u32>,
}

impl AttributeColumn {
    /// A numeric column whose values already lie in `[0, 1]`.
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if let Some(v) = values
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::InvalidSystem(format!(
                "numeric column `{name}` holds {v}, outside [0, 1]"
            )));
        }
        let levels = dense_levels(&values);
        Ok(AttributeColumn {
            name,
            values: ColumnValues::Numeric(values),
            levels,
        })
    }

    /// A numeric column built from raw values, min-max normalized into
    /// `[0, 1]`. A constant column normalizes to all zeros.
    pub fn numeric_normalized(name: impl Into<String>, raw: &[f64]) -> Result<Self> {
        let name = name.into();
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSystem(format!(
                "numeric column `{name}` holds a non-finite value"
            )));
        }
        Self::numeric(name, min_max_normalize(raw))
    }

    /// A categorical column from string symbols, interned in order of first
    /// appearance.
    pub fn categorical<S: AsRef<str>>(name: impl Into<String>, symbols: &[S]) -> Self {
        let mut alphabet: Vec<String> = Vec::new();
        let mut index = std::collections::HashMap::new();
        let codes = symbols
            .iter()
            .map(|s| {
                let s = s.as_ref();
                *index.entry(s.to_string()).or_insert_with(|| {
                    alphabet.push(s.to_string());
                    (alphabet.len() - 1) as u32
                })
            })
            .collect();
        Self::from_codes(name, codes, alphabet)
    }

    pub(crate) fn from_codes(name: impl Into<String>, codes: Vec<u32>, alphabet: Vec<String>) -> Self {
        debug_assert!(codes.iter().all(|&c| (c as usize) < alphabet.len()));
        AttributeColumn {
            name: name.into(),
            levels: codes.clone(),
            values: ColumnValues::Categorical { codes, alphabet },
        }
    }

    /// A copy of this column under another name.
    pub fn clone_named(&self, name: impl Into<String>) -> Self {
        self.clone().renamed(name)
    }

    pub(crate) fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> AttributeKind {
        match self.values {
            ColumnValues::Numeric(_) => AttributeKind::Numeric,
            ColumnValues::Categorical { .. } => AttributeKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Normalized numeric values, or `None` for categorical columns.
    pub fn numeric_values(&self) -> Option<&[f64]> {
        match &self.values {
            ColumnValues::Numeric(v) => Some(v),
            ColumnValues::Categorical { .. } => None,
        }
    }

    /// Symbol ids and alphabet, or `None` for numeric columns.
    pub fn categorical_values(&self) -> Option<(&[u32], &[String])> {
        match &self.values {
            ColumnValues::Categorical { codes, alphabet } => Some((codes, alphabet)),
            ColumnValues::Numeric(_) => None,
        }
    }

    /// Equality codes, one per sample.
    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    /// Per-attribute distance: absolute difference for numeric columns,
    /// 0/1 mismatch indicator for categorical ones.
    #[inline]
    pub fn distance(&self, x: usize, y: usize) -> f64 {
        match &self.values {
            ColumnValues::Numeric(v) => (v[x] - v[y]).abs(),
            ColumnValues::Categorical { codes, .. } => {
                if codes[x] == codes[y] {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Textual form of a value, as written to CSV.
    pub fn display_value(&self, x: usize) -> String {
        match &self.values {
            ColumnValues::Numeric(v) => format!("{}", v[x]),
            ColumnValues::Categorical { codes, alphabet } => alphabet[codes[x] as usize].clone(),
        }
    }
}

/// The `<U, C, D>` table.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSystem {
    columns: Vec<AttributeColumn>,
    decision: Vec<u32>,
    decision_name: String,
    class_names: Vec<String>,
}

impl DecisionSystem {
    /// Builds a system from condition columns and integer decision labels.
    ///
    /// Labels must form the contiguous range `0..k`.
    pub fn new(columns: Vec<AttributeColumn>, decision: Vec<u32>) -> Result<Self> {
        let k = decision.iter().max().map_or(0, |&m| m as usize + 1);
        let class_names = (0..k).map(|c| c.to_string()).collect();
        Self::with_names(columns, decision, "class", class_names)
    }

    /// Builds a system from condition columns and string decision labels,
    /// interned in order of first appearance.
    pub fn from_labels<S: AsRef<str>>(
        columns: Vec<AttributeColumn>,
        labels: &[S],
        decision_name: impl Into<String>,
    ) -> Result<Self> {
        let interned = AttributeColumn::categorical("", labels);
        let (codes, alphabet) = interned.categorical_values().expect("categorical");
        Self::with_names(columns, codes.to_vec(), decision_name, alphabet.to_vec())
    }

    fn with_names(
        columns: Vec<AttributeColumn>,
        decision: Vec<u32>,
        decision_name: impl Into<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let n = decision.len();
        if n == 0 {
            return Err(Error::InvalidSystem("a decision system needs at least one sample".into()));
        }
        if columns.is_empty() {
            return Err(Error::InvalidSystem(
                "a decision system needs at least one condition attribute".into(),
            ));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::InvalidSystem(format!(
                "column `{}` has {} entries, expected {n}",
                c.name(),
                c.len()
            )));
        }
        let k = class_names.len();
        let mut seen = vec![false; k];
        for &d in &decision {
            match seen.get_mut(d as usize) {
                Some(s) => *s = true,
                None => {
                    return Err(Error::InvalidSystem(format!(
                        "decision label {d} outside 0..{k}"
                    )))
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidSystem(
                "decision labels do not form a contiguous range 0..k".into(),
            ));
        }
        Ok(DecisionSystem {
            columns,
            decision,
            decision_name: decision_name.into(),
            class_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.decision.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.columns.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn columns(&self) -> &[AttributeColumn] {
        &self.columns
    }

    pub fn column(&self, a: AttrId) -> &AttributeColumn {
        &self.columns[a]
    }

    pub fn decision(&self) -> &[u32] {
        &self.decision
    }

    pub fn decision_name(&self) -> &str {
        &self.decision_name
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn attribute_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name().to_string()).collect()
    }

    pub fn count_kind(&self, kind: AttributeKind) -> usize {
        self.columns.iter().filter(|c| c.kind() == kind).count()
    }

    pub fn all_samples(&self) -> SampleSet {
        SampleSet::full(self.n_samples())
    }

    pub fn all_attributes(&self) -> Vec<AttrId> {
        (0..self.n_attributes()).collect()
    }

    /// Checks that every attribute index is in range.
    pub fn check_attrs(&self, attrs: &[AttrId]) -> Result<()> {
        match attrs.iter().find(|&&a| a >= self.n_attributes()) {
            Some(a) => Err(Error::Domain(format!(
                "attribute index {a} out of range (system has {})",
                self.n_attributes()
            ))),
            None => Ok(()),
        }
    }

    /// Checks that a sample set only refers to samples of this system.
    pub fn check_universe(&self, universe: &SampleSet) -> Result<()> {
        match universe.last() {
            Some(x) if x >= self.n_samples() => Err(Error::Domain(format!(
                "sample index {x} out of range (system has {})",
                self.n_samples()
            ))),
            _ => Ok(()),
        }
    }

    /// Max-norm distance over `attrs`, or 0 for the empty set.
    pub fn distance(&self, attrs: &[AttrId], x: usize, y: usize) -> f64 {
        attrs
            .iter()
            .map(|&a| self.columns[a].distance(x, y))
            .fold(0.0, f64::max)
    }
}

/// Min-max normalization; constant input maps to all zeros.
pub fn min_max_normalize(raw: &[f64]) -> Vec<f64> {
    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if range.is_nan() || range <= 0.0 {
        return vec![0.0; raw.len()];
    }
    raw.iter()
        .map(|&v| ((v - lo) / range).clamp(0.0, 1.0))
        .collect()
}

fn dense_levels(values: &[f64]) -> Vec<u32> {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    values
        .iter()
        .map(|v| distinct.binary_search_by(|p| p.total_cmp(v)).expect("present") as u32)
        .collect()
}
