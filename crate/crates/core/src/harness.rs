//! Benchmark harness: runs several reduction variants over a set of
//! datasets and radii, and emits JSON reports plus a plot-ready CSV table.
//!
//! A bench spec is a TOML file:
//!
//! ```toml
//! mode = "neighborhood"        # or "classic"
//! deltas = [0.16]              # required in neighborhood mode
//! variants = ["plain", "fspa", "farnemf", "lra"]
//! repetitions = 3
//! seed = 7
//!
//! [[dataset]]
//! name = "synth-5000"
//! synth = { n = 5000, numeric = 30, duplicates = 4, classes = 2 }
//!
//! [[dataset]]
//! name = "wdbc"
//! csv = "data/wdbc.csv"        # relative to the spec file
//! schema = "data/schemas/wdbc.schema"
//! ```
//!
//! Synthetic datasets use the spec's `seed` unless they set their own;
//! `duplicates = k` makes the last `k` attributes copies of the first `k`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{load_csv, synth, DecisionSystem, Schema, SynthSpec};
use crate::error::{Error, Result};
use crate::granulation::{Mode, NeighborhoodConfig, Relation};
use crate::reduction::{reduce_with, Instrumentation, Variant};

/// Environment variable capping the worker threads used by reductions.
pub const THREADS_ENV: &str = "ROUGH_REDUCT_THREADS";

/// Sizes the global thread pool from [`THREADS_ENV`], if set. Returns the
/// configured thread count.
pub fn init_threads_from_env() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size the thread pool: {e}")))?;
    Ok(Some(threads))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthParams {
    pub n: usize,
    #[serde(default)]
    pub numeric: usize,
    #[serde(default)]
    pub categorical: usize,
    #[serde(default)]
    pub duplicates: usize,
    #[serde(default = "default_classes")]
    pub classes: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_classes() -> usize {
    2
}

impl SynthParams {
    pub fn to_spec(&self, default_seed: u64) -> SynthSpec {
        SynthSpec::new(
            self.seed.unwrap_or(default_seed),
            self.n,
            self.numeric,
            self.categorical,
            self.classes,
        )
        .with_trailing_duplicates(self.duplicates)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    Csv { csv: PathBuf, schema: PathBuf },
    Synth { synth: SynthParams },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRef {
    pub name: String,
    #[serde(flatten)]
    pub source: DatasetSource,
}

impl DatasetRef {
    pub fn load(&self, default_seed: u64) -> Result<DecisionSystem> {
        match &self.source {
            DatasetSource::Csv { csv, schema } => load_csv(csv, &Schema::load(schema)?),
            DatasetSource::Synth { synth: params } => synth(&params.to_spec(default_seed)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    pub mode: Mode,
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default = "all_variants")]
    pub variants: Vec<Variant>,
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "dataset", default)]
    pub datasets: Vec<DatasetRef>,
}

fn all_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}

fn one() -> usize {
    1
}

impl BenchSpec {
    /// Parses a spec; relative dataset paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut spec: BenchSpec =
            toml::from_str(text).map_err(|e| Error::Config(format!("bench spec: {e}")))?;
        for d in &mut spec.datasets {
            if let DatasetSource::Csv { csv, schema } = &mut d.source {
                *csv = base_dir.join(&*csv);
                *schema = base_dir.join(&*schema);
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        BenchSpec::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::Config("no variants listed".into()));
        }
        match self.mode {
            Mode::Neighborhood if self.deltas.is_empty() => {
                Err(Error::Config("neighborhood mode needs at least one delta".into()))
            }
            Mode::Neighborhood => self.deltas.iter().try_for_each(|&d| NeighborhoodConfig::new(d).map(drop)),
            Mode::Classic => Ok(()),
        }
    }

    fn relations(&self) -> Vec<Relation> {
        match self.mode {
            Mode::Classic => vec![Relation::Equivalence],
            Mode::Neighborhood => self
                .deltas
                .iter()
                .map(|&d| Relation::Neighborhood(NeighborhoodConfig::new(d).expect("validated")))
                .collect(),
        }
    }
}

/// One (dataset, variant, radius) measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dataset: String,
    pub n_samples: usize,
    pub n_attributes: usize,
    pub n_classes: usize,
    pub variant: Variant,
    pub delta: Option<f64>,
    pub median_wall_secs: f64,
    pub wall_secs: Vec<f64>,
    pub counters: Instrumentation,
    pub reduct: Vec<usize>,
    pub final_pos_size: usize,
    pub gamma_trace: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetError {
    pub dataset: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub mode: Option<Mode>,
    pub seed: u64,
    pub repetitions: usize,
    pub rows: Vec<BenchRow>,
    pub errors: Vec<DatasetError>,
    /// Broken cross-variant or cross-repetition invariants. Non-empty means
    /// the run failed.
    pub violations: Vec<String>,
}

impl BenchReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn row(&self, dataset: &str, variant: Variant, delta: Option<f64>) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.dataset == dataset && r.variant == variant && r.delta == delta)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bench report serializes")
    }

    /// Wide table: one line per (dataset, delta), one column group per
    /// variant.
    pub fn to_csv(&self) -> Result<String> {
        let mut variants: Vec<Variant> = self.rows.iter().map(|r| r.variant).collect();
        variants.sort_unstable();
        variants.dedup();

        let mut groups: BTreeMap<(usize, String), Vec<&BenchRow>> = BTreeMap::new();
        let mut order: Vec<(String, String)> = Vec::new();
        for r in &self.rows {
            let key = (r.dataset.clone(), r.delta.map(|d| d.to_string()).unwrap_or_default());
            let idx = match order.iter().position(|k| *k == key) {
                Some(i) => i,
                None => {
                    order.push(key.clone());
                    order.len() - 1
                }
            };
            groups.entry((idx, key.1)).or_default().push(r);
        }

        let mut wtr = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = ["dataset", "n_samples", "n_attributes", "delta"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for v in &variants {
            for field in ["wall_secs", "samples_touched", "granule_evals", "pair_checks", "candidate_evals", "reduct_len", "final_pos_size"] {
                header.push(format!("{v}_{field}"));
            }
        }
        wtr.write_record(&header)?;
        for ((_, delta), rows) in groups {
            let first = rows[0];
            let mut line = vec![
                first.dataset.clone(),
                first.n_samples.to_string(),
                first.n_attributes.to_string(),
                delta,
            ];
            for v in &variants {
                match rows.iter().find(|r| r.variant == *v) {
                    Some(r) => line.extend([
                        format!("{:.6}", r.median_wall_secs),
                        r.counters.samples_touched.to_string(),
                        r.counters.granule_evals.to_string(),
                        r.counters.pair_checks.to_string(),
                        r.counters.candidate_evals.to_string(),
                        r.reduct.len().to_string(),
                        r.final_pos_size.to_string(),
                    ]),
                    None => line.extend(std::iter::repeat_n(String::new(), 7)),
                }
            }
            wtr.write_record(&line)?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Config(format!("csv buffer: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

/// Measures one (system, relation, variant) cell over `repetitions` runs.
/// Returns the row and any determinism violation.
pub fn measure(
    name: &str,
    sys: &DecisionSystem,
    relation: Relation,
    variant: Variant,
    repetitions: usize,
) -> (BenchRow, Vec<String>) {
    let mut violations = Vec::new();
    let mut wall = Vec::with_capacity(repetitions);
    let first = reduce_with(sys, relation, variant);
    wall.push(first.counters.wall_time.as_secs_f64());
    for _ in 1..repetitions {
        let again = reduce_with(sys, relation, variant);
        wall.push(again.counters.wall_time.as_secs_f64());
        if again.reduct != first.reduct || again.counters.deterministic() != first.counters.deterministic() {
            violations.push(format!("{name}/{variant}: repetitions disagree"));
        }
    }
    let row = BenchRow {
        dataset: name.to_string(),
        n_samples: sys.n_samples(),
        n_attributes: sys.n_attributes(),
        n_classes: sys.n_classes(),
        variant,
        delta: relation.radius(),
        median_wall_secs: median(&wall),
        wall_secs: wall,
        counters: first.counters,
        reduct: first.reduct,
        final_pos_size: first.final_pos_size,
        gamma_trace: first.gamma_trace,
    };
    (row, violations)
}

fn check_cell(rows: &[BenchRow]) -> Vec<String> {
    let mut out = Vec::new();
    let Some(first) = rows.first() else { return out };
    let cell = format!("{} (delta {:?})", first.dataset, first.delta);
    if rows.iter().any(|r| r.final_pos_size != first.final_pos_size) {
        out.push(format!("{cell}: variants disagree on final_pos_size"));
    }
    if rows.iter().any(|r| r.reduct != first.reduct) {
        out.push(format!("{cell}: variants disagree on the reduct"));
    }
    let find = |v| rows.iter().find(|r| r.variant == v);
    if let (Some(plain), Some(lra)) = (find(Variant::Plain), find(Variant::Lra)) {
        let (p, l) = (plain.counters, lra.counters);
        if l.samples_touched > p.samples_touched || l.granule_evals > p.granule_evals {
            out.push(format!("{cell}: lra counters exceed plain"));
        }
    }
    out
}

/// Runs every (dataset, radius, variant) cell. Variants run one after the
/// other; wall time excludes dataset loading. A dataset that fails to load
/// becomes an error entry and the run continues.
pub fn run_bench(spec: &BenchSpec) -> BenchReport {
    let mut report = BenchReport {
        mode: Some(spec.mode),
        seed: spec.seed,
        repetitions: spec.repetitions,
        ..BenchReport::default()
    };
    for dataset in &spec.datasets {
        let sys = match dataset.load(spec.seed) {
            Ok(sys) => sys,
            Err(e) => {
                report.errors.push(DatasetError {
                    dataset: dataset.name.clone(),
                    message: e.to_string(),
                });
                continue;
            }
        };
        for relation in spec.relations() {
            let mut cell = Vec::new();
            for &variant in &spec.variants {
                let (row, violations) = measure(&dataset.name, &sys, relation, variant, spec.repetitions);
                report.violations.extend(violations);
                cell.push(row);
            }
            report.violations.extend(check_cell(&cell));
            report.rows.extend(cell);
        }
    }
    report
}
