//! Seeded synthetic decision systems with planted duplicate attributes.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AttributeColumn, AttributeKind, DecisionSystem};
use crate::error::{Error, Result};

/// Parameters of a synthetic system.
///
/// Attributes `0..numeric_attrs` are numeric, the following
/// `categorical_attrs` are categorical. Every entry `b -> a` of
/// `duplicate_of` replaces attribute `b` by a value-for-value copy of the
/// lower-indexed attribute `a`. Decisions are score quantiles of a random
/// positive weighting of the non-duplicate attributes, so classes are
/// balanced and depend on the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub n: usize,
    pub numeric_attrs: usize,
    #[serde(default)]
    pub categorical_attrs: usize,
    #[serde(default)]
    pub duplicate_of: BTreeMap<usize, usize>,
    pub classes: usize,
}

impl SynthSpec {
    pub fn new(seed: u64, n: usize, numeric_attrs: usize, categorical_attrs: usize, classes: usize) -> Self {
        SynthSpec {
            seed,
            n,
            numeric_attrs,
            categorical_attrs,
            duplicate_of: BTreeMap::new(),
            classes,
        }
    }

    pub fn with_duplicate(mut self, copy: usize, source: usize) -> Self {
        self.duplicate_of.insert(copy, source);
        self
    }

    /// Makes the last `k` attributes copies of attributes `0..k`.
    pub fn with_trailing_duplicates(mut self, k: usize) -> Self {
        let m = self.n_attributes();
        for i in 0..k.min(m / 2) {
            self.duplicate_of.insert(m - k + i, i);
        }
        self
    }

    pub fn n_attributes(&self) -> usize {
        self.numeric_attrs + self.categorical_attrs
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.classes == 0 || self.n_attributes() == 0 {
            return Err(Error::Construction(
                "sample, attribute and class counts must be positive".into(),
            ));
        }
        if self.classes > self.n {
            return Err(Error::Construction(format!(
                "{} classes cannot be populated by {} samples",
                self.classes, self.n
            )));
        }
        let m = self.n_attributes();
        for (&copy, &source) in &self.duplicate_of {
            if copy >= m || source >= m {
                return Err(Error::Construction(format!(
                    "duplicate {copy} -> {source} refers to a missing attribute"
                )));
            }
            if source >= copy {
                return Err(Error::Construction(format!(
                    "duplicate {copy} -> {source} is a forward reference or cycle"
                )));
            }
        }
        Ok(())
    }
}

/// Generates the system described by `spec`. Deterministic in the spec.
pub fn synth(spec: &SynthSpec) -> Result<DecisionSystem> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let m = spec.n_attributes();

    let mut columns = Vec::with_capacity(m);
    for a in 0..m {
        let kind = if a < spec.numeric_attrs {
            AttributeKind::Numeric
        } else {
            AttributeKind::Categorical
        };
        // values are always drawn so later attributes do not depend on the
        // duplicate map
        let col = match kind {
            AttributeKind::Numeric => {
                let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
                AttributeColumn::numeric_normalized(format!("a{a}"), &raw)?
            }
            AttributeKind::Categorical => {
                let arity: u32 = rng.gen_range(2..=4);
                let codes: Vec<u32> = (0..n).map(|_| rng.gen_range(0..arity)).collect();
                let alphabet = (0..arity).map(|s| format!("s{s}")).collect();
                AttributeColumn::from_codes(format!("a{a}"), codes, alphabet)
            }
        };
        columns.push(col);
    }
    for (&copy, &source) in &spec.duplicate_of {
        columns[copy] = columns[source].clone().renamed(format!("a{copy}"));
    }

    let weights: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
    let score = |x: usize| -> f64 {
        (0..m)
            .filter(|a| !spec.duplicate_of.contains_key(a))
            .map(|a| {
                let col = &columns[a];
                let v = match col.numeric_values() {
                    Some(v) => v[x],
                    None => {
                        let (codes, alphabet) = col.categorical_values().expect("categorical");
                        codes[x] as f64 / (alphabet.len() - 1).max(1) as f64
                    }
                };
                weights[a] * v
            })
            .sum()
    };
    let scores: Vec<f64> = (0..n).map(score).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| scores[x].total_cmp(&scores[y]).then(x.cmp(&y)));
    let mut decision = vec![0u32; n];
    for (rank, &x) in order.iter().enumerate() {
        decision[x] = (rank * spec.classes / n) as u32;
    }
    DecisionSystem::new(columns, decision)
}
