//! Brute-force ground truth for small systems.
//!
//! Positive regions here are computed straight from the definition, by
//! comparing every pair of samples, without partitions, granule views or
//! any pruning. The verification suites turn the two stability results
//! into falsifiable checks over random systems:
//!
//! * SR: if `b` does not refine `U'/R` (where `U' = U - POS_R(D)`), then
//!   `POS_{R+a+b}(D) = POS_{R+a}(D)` for every other `a`;
//! * SLR: refining only the active region of `a` yields exactly the full
//!   refinement by `a`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{AttrId, AttributeColumn, AttributeKind, DecisionSystem, SampleSet};
use crate::error::{Error, Result};
use crate::granulation::{partition, GranuleView, Mode, Relation};
use crate::lra::{active_region, restricted_refine, Structure};
use crate::reduction::{reduce_with, ReductionReport, Variant};

/// Size limits for exhaustive computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleBudget {
    pub max_samples: usize,
    pub max_attributes: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_samples: 64,
            max_attributes: 10,
        }
    }
}

impl OracleBudget {
    pub fn admits(&self, sys: &DecisionSystem) -> bool {
        sys.n_samples() <= self.max_samples && sys.n_attributes() <= self.max_attributes
    }

    fn check(&self, sys: &DecisionSystem) -> Result<()> {
        if self.admits(sys) {
            Ok(())
        } else {
            Err(Error::BudgetExceeded(format!(
                "{} samples x {} attributes exceeds {} x {}",
                sys.n_samples(),
                sys.n_attributes(),
                self.max_samples,
                self.max_attributes
            )))
        }
    }
}

fn attr_related(sys: &DecisionSystem, relation: &Relation, a: AttrId, x: usize, y: usize) -> bool {
    let col = sys.column(a);
    match relation {
        Relation::Equivalence => match (col.numeric_values(), col.categorical_values()) {
            (Some(v), _) => v[x] == v[y],
            (None, Some((codes, _))) => codes[x] == codes[y],
            (None, None) => unreachable!("a column is numeric or categorical"),
        },
        Relation::Neighborhood(cfg) => col.distance(x, y) <= cfg.radius(),
    }
}

fn related(sys: &DecisionSystem, relation: &Relation, attrs: &[AttrId], x: usize, y: usize) -> bool {
    attrs.iter().all(|&a| attr_related(sys, relation, a, x, y))
}

/// `POS_attrs(D)` restricted to `universe`, straight from the definition.
/// The empty attribute set relates every pair.
pub fn direct_positive_region(
    sys: &DecisionSystem,
    universe: &SampleSet,
    attrs: &[AttrId],
    relation: &Relation,
) -> SampleSet {
    let d = sys.decision();
    SampleSet::from_sorted(
        universe
            .iter()
            .filter(|&x| {
                universe
                    .iter()
                    .all(|y| d[x] == d[y] || !related(sys, relation, attrs, x, y))
            })
            .collect(),
    )
}

/// Per-sample related sets `{y ∈ universe : x ~_attrs y}`.
fn direct_granules(
    sys: &DecisionSystem,
    universe: &SampleSet,
    attrs: &[AttrId],
    relation: &Relation,
) -> Vec<SampleSet> {
    universe
        .iter()
        .map(|x| {
            SampleSet::from_sorted(
                universe
                    .iter()
                    .filter(|&y| related(sys, relation, attrs, x, y))
                    .collect(),
            )
        })
        .collect()
}

/// Positive region of every nonempty attribute subset.
pub type PosTable = BTreeMap<Vec<AttrId>, SampleSet>;

/// `POS_B(D)` over the full universe for all `2^|C| - 1` nonempty `B`.
pub fn exhaustive_pos_table(sys: &DecisionSystem, relation: &Relation, budget: &OracleBudget) -> Result<PosTable> {
    budget.check(sys)?;
    let m = sys.n_attributes();
    let u = sys.all_samples();
    Ok((1u32..1 << m)
        .into_par_iter()
        .map(|mask| {
            let attrs: Vec<AttrId> = (0..m).filter(|a| mask >> a & 1 == 1).collect();
            let pos = direct_positive_region(sys, &u, &attrs, relation);
            (attrs, pos)
        })
        .collect())
}

/// Random small mixed system: numeric values on the grid {0, 0.1, ..., 1}
/// and two- or three-symbol categorical attributes.
pub fn random_system(rng: &mut impl Rng, budget: &OracleBudget) -> DecisionSystem {
    let n = rng.gen_range(4..=32usize.min(budget.max_samples).max(4));
    let m = rng.gen_range(2..=6usize.min(budget.max_attributes).max(2));
    let columns = (0..m).map(|a| random_column(rng, n, a)).collect();
    let classes = rng.gen_range(2..=3u32);
    let labels: Vec<String> = (0..n).map(|_| rng.gen_range(0..classes).to_string()).collect();
    DecisionSystem::from_labels(columns, &labels, "d").expect("random system is valid")
}

fn random_column(rng: &mut impl Rng, n: usize, a: usize) -> AttributeColumn {
    if rng.gen_bool(0.5) {
        let values = (0..n).map(|_| rng.gen_range(0..=10u32) as f64 / 10.0).collect();
        AttributeColumn::numeric(format!("n{a}"), values).expect("grid values lie in [0, 1]")
    } else {
        let arity = rng.gen_range(2..=3u32);
        let symbols: Vec<String> = (0..n).map(|_| format!("s{}", rng.gen_range(0..arity))).collect();
        AttributeColumn::categorical(format!("c{a}"), &symbols)
    }
}

/// A column derived from `source` such that samples related under `source`
/// stay related under the result. For classic mode any function of the
/// value works; for neighborhood mode the map must not expand distances.
fn coarsening(rng: &mut impl Rng, source: &AttributeColumn, relation: &Relation, name: String) -> AttributeColumn {
    let n = source.len();
    match rng.gen_range(0..3) {
        0 => source.clone_named(name),
        1 => AttributeColumn::categorical(name, &vec!["k"; n]),
        _ => match (source.kind(), relation) {
            (AttributeKind::Numeric, Relation::Equivalence) => {
                let v = source.numeric_values().expect("numeric");
                let groups: Vec<String> = v.iter().map(|&x| ((x * 10.0).round() as u32 / 3).to_string()).collect();
                AttributeColumn::categorical(name, &groups)
            }
            (AttributeKind::Numeric, Relation::Neighborhood(_)) => {
                let v = source.numeric_values().expect("numeric");
                AttributeColumn::numeric(name, v.iter().map(|&x| x * 0.5).collect()).expect("scaled into [0, 1]")
            }
            (AttributeKind::Categorical, _) => {
                let (codes, _) = source.categorical_values().expect("categorical");
                let merged: Vec<String> = codes.iter().map(|&c| (c / 2).to_string()).collect();
                AttributeColumn::categorical(name, &merged)
            }
        },
    }
}

fn replace_column(sys: &DecisionSystem, at: AttrId, col: AttributeColumn) -> DecisionSystem {
    let mut cols = sys.columns().to_vec();
    cols[at] = col;
    DecisionSystem::new(cols, sys.decision().to_vec()).expect("same shape")
}

/// A violated implication found by one of the verification suites.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub trial: usize,
    pub mode: Mode,
    pub n_samples: usize,
    pub attrs: Vec<AttrId>,
    pub a: AttrId,
    pub b: Option<AttrId>,
    pub detail: String,
}

/// Outcome of a verification suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub mode: Mode,
    pub radius: Option<f64>,
    pub seed: u64,
    pub trials: usize,
    /// Trials whose premise held, so the conclusion was actually tested.
    pub premise_held: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Checks `POS_{R+a+b}(D) = POS_{R+a}(D)` on random tuples where `b` does
/// not refine `U'/R`.
pub fn verify_sr(seed: u64, trials: usize, budget: &OracleBudget, relation: &Relation) -> VerifyReport {
    let results: Vec<(bool, Option<Counterexample>)> = (0..trials)
        .into_par_iter()
        .map(|trial| sr_trial(trial, &mut trial_rng(seed, trial), budget, relation))
        .collect();
    VerifyReport {
        suite: "sr".into(),
        mode: relation.mode(),
        radius: relation.radius(),
        seed,
        trials,
        premise_held: results.iter().filter(|r| r.0).count(),
        counterexamples: results.into_iter().filter_map(|r| r.1).collect(),
    }
}

fn sr_trial(
    trial: usize,
    rng: &mut ChaCha8Rng,
    budget: &OracleBudget,
    relation: &Relation,
) -> (bool, Option<Counterexample>) {
    let mut sys = random_system(rng, budget);
    let m = sys.n_attributes();
    let mut order: Vec<AttrId> = (0..m).collect();
    order.shuffle(rng);
    let (b, a) = (order[0], order[1]);
    let mut attrs: Vec<AttrId> = order[2..].iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
    if rng.gen_bool(0.1) {
        attrs.push(b);
    }
    // force the premise on part of the trials
    if m > 2 && rng.gen_bool(0.4) {
        if attrs.iter().all(|&r| r == b) {
            attrs.push(order[2]);
        }
        let sources: Vec<AttrId> = attrs.iter().copied().filter(|&r| r != b).collect();
        let source = sources[rng.gen_range(0..sources.len())];
        let col = coarsening(rng, sys.column(source), relation, sys.column(b).name().to_string());
        sys = replace_column(&sys, b, col);
    }
    attrs.sort_unstable();
    attrs.dedup();

    let u = sys.all_samples();
    let undecided = u.difference(&direct_positive_region(&sys, &u, &attrs, relation));
    let premise = undecided.iter().all(|x| {
        undecided
            .iter()
            .all(|y| !related(&sys, relation, &attrs, x, y) || attr_related(&sys, relation, b, x, y))
    });
    if !premise {
        return (false, None);
    }
    let mut with_a = attrs.clone();
    with_a.push(a);
    let mut with_ab = with_a.clone();
    with_ab.push(b);
    let pos_a = direct_positive_region(&sys, &u, &with_a, relation);
    let pos_ab = direct_positive_region(&sys, &u, &with_ab, relation);
    let cex = (pos_a != pos_ab).then(|| Counterexample {
        trial,
        mode: relation.mode(),
        n_samples: sys.n_samples(),
        attrs,
        a,
        b: Some(b),
        detail: format!("POS(R+a) = {pos_a:?}, POS(R+a+b) = {pos_ab:?}"),
    });
    (true, cex)
}

/// Checks that refining only the active region of `a` reproduces the full
/// refinement, and that the reported gain is exact.
pub fn verify_slr(seed: u64, trials: usize, budget: &OracleBudget, relation: &Relation) -> VerifyReport {
    let results: Vec<Option<Counterexample>> = (0..trials)
        .into_par_iter()
        .map(|trial| slr_trial(trial, &mut trial_rng(seed.wrapping_add(1), trial), budget, relation))
        .collect();
    VerifyReport {
        suite: "slr".into(),
        mode: relation.mode(),
        radius: relation.radius(),
        seed,
        trials,
        premise_held: trials,
        counterexamples: results.into_iter().flatten().collect(),
    }
}

fn slr_trial(trial: usize, rng: &mut ChaCha8Rng, budget: &OracleBudget, relation: &Relation) -> Option<Counterexample> {
    let mut sys = random_system(rng, budget);
    let m = sys.n_attributes();
    let a = rng.gen_range(0..m);
    if rng.gen_bool(0.1) {
        sys = replace_column(&sys, a, AttributeColumn::categorical("k", &vec!["k"; sys.n_samples()]));
    }
    let attrs: Vec<AttrId> = (0..m).filter(|&r| r != a && rng.gen_bool(0.5)).collect();
    let u = sys.all_samples();
    let universe = if rng.gen_bool(0.5) {
        u.difference(&direct_positive_region(&sys, &u, &attrs, relation))
    } else {
        u.iter().filter(|_| rng.gen_bool(0.7)).collect()
    };

    let fail = |detail: String| {
        Some(Counterexample {
            trial,
            mode: relation.mode(),
            n_samples: sys.n_samples(),
            attrs: attrs.clone(),
            a,
            b: None,
            detail,
        })
    };

    let structure = match relation {
        Relation::Equivalence => Structure::Blocks(partition(&sys, &universe, &attrs).expect("valid")),
        Relation::Neighborhood(cfg) => {
            Structure::Granules(GranuleView::build(&sys, &universe, &attrs, cfg).expect("valid"))
        }
    };
    let active = match active_region(&sys, &structure, a, relation) {
        Ok(s) => s,
        Err(e) => return fail(format!("active_region failed: {e}")),
    };
    let (refined, gain) = match restricted_refine(&sys, &structure, a, &active, relation) {
        Ok(r) => r,
        Err(e) => return fail(format!("restricted_refine failed: {e}")),
    };

    let mut with_a = attrs.clone();
    with_a.push(a);
    let expected = direct_granules(&sys, &universe, &with_a, relation);
    let got: Vec<SampleSet> = match &refined {
        Structure::Blocks(p) => universe
            .iter()
            .map(|x| p.blocks().iter().find(|b| b.contains(x)).cloned().unwrap_or_default())
            .collect(),
        Structure::Granules(v) => v.granules().to_vec(),
    };
    if got != expected {
        return fail(format!("restricted refinement {got:?} differs from full refinement {expected:?}"));
    }
    let before = direct_positive_region(&sys, &universe, &attrs, relation);
    let after = direct_positive_region(&sys, &universe, &with_a, relation);
    let expected_gain = after.difference(&before).len();
    if gain != expected_gain {
        return fail(format!("gain {gain}, expected {expected_gain}"));
    }
    None
}

/// Cross-variant comparison for one system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRecord {
    pub mode: Mode,
    pub radius: Option<f64>,
    pub reports: Vec<ReductionReport>,
    /// `|POS_C(D)|` from the exhaustive table, when within budget.
    pub exhaustive_full_pos: Option<usize>,
    pub violations: Vec<String>,
}

impl AuditRecord {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Largest system for which the audit re-derives positive regions directly.
const DIRECT_CHECK_LIMIT: usize = 1500;

/// Runs all four variants and reports every disagreement: reducts, final
/// positive-region sizes, the exhaustive `|POS_C(D)|` (within budget),
/// recomputed positive regions, permanence of every elimination, and
/// counter ordering.
pub fn audit_reducts(sys: &DecisionSystem, relation: &Relation, budget: &OracleBudget) -> AuditRecord {
    let reports: Vec<ReductionReport> = Variant::ALL.iter().map(|&v| reduce_with(sys, *relation, v)).collect();
    let mut violations = Vec::new();
    let base = &reports[0];
    for r in &reports[1..] {
        if r.reduct != base.reduct {
            violations.push(format!("{} reduct {:?} != plain reduct {:?}", r.algorithm, r.reduct, base.reduct));
        }
        if r.final_pos_size != base.final_pos_size {
            violations.push(format!(
                "{} final_pos_size {} != plain {}",
                r.algorithm, r.final_pos_size, base.final_pos_size
            ));
        }
    }

    let exhaustive_full_pos = if budget.admits(sys) {
        let table = exhaustive_pos_table(sys, relation, budget).expect("within budget");
        let full = table[&sys.all_attributes()].len();
        for r in &reports {
            if r.final_pos_size != full {
                violations.push(format!("{} final_pos_size {} != |POS_C| {full}", r.algorithm, r.final_pos_size));
            }
            let mut key = r.reduct.clone();
            key.sort_unstable();
            let from_table = if key.is_empty() {
                direct_positive_region(sys, &sys.all_samples(), &[], relation).len()
            } else {
                table[&key].len()
            };
            if from_table != r.final_pos_size {
                violations.push(format!(
                    "{} reports |POS| {} but the table holds {from_table}",
                    r.algorithm, r.final_pos_size
                ));
            }
        }
        Some(full)
    } else {
        None
    };

    if sys.n_samples() <= DIRECT_CHECK_LIMIT {
        let u = sys.all_samples();
        let pos_reduct = direct_positive_region(sys, &u, &base.reduct, relation);
        if pos_reduct.len() != base.final_pos_size {
            violations.push(format!(
                "direct |POS_reduct| {} != reported {}",
                pos_reduct.len(),
                base.final_pos_size
            ));
        }
        for r in &reports {
            for e in &r.eliminations {
                let mut with = r.reduct.clone();
                with.push(e.attribute);
                if direct_positive_region(sys, &u, &with, relation) != pos_reduct {
                    violations.push(format!(
                        "{}: eliminated attribute {} changes POS of the final reduct",
                        r.algorithm, e.attribute
                    ));
                }
            }
        }
    }

    let touched: Vec<u64> = reports.iter().map(|r| r.counters.samples_touched).collect();
    if !(touched[3] <= touched[2] && touched[2] <= touched[1] && touched[1] <= touched[0]) {
        violations.push(format!("samples_touched not ordered lra <= farnemf <= fspa <= plain: {touched:?}"));
    }

    AuditRecord {
        mode: relation.mode(),
        radius: relation.radius(),
        reports,
        exhaustive_full_pos,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::s1;
    use crate::data::{synth, SynthSpec};
    use crate::granulation::NeighborhoodConfig;

    fn set(v: &[usize]) -> SampleSet {
        SampleSet::from_indices(v.to_vec())
    }

    fn nbr(r: f64) -> Relation {
        Relation::Neighborhood(NeighborhoodConfig::new(r).unwrap())
    }

    #[test]
    fn s1_table() {
        let table = exhaustive_pos_table(&s1(), &Relation::Equivalence, &OracleBudget::default()).unwrap();
        assert_eq!(table.len(), 3);
        assert_eq!(table[&vec![0]], set(&[2, 3]));
        assert_eq!(table[&vec![1]], set(&[1, 3]));
        assert_eq!(table[&vec![0, 1]], set(&[0, 1, 2, 3]));
    }

    #[test]
    fn degenerate_tables() {
        let one = DecisionSystem::new(vec![AttributeColumn::categorical("a", &["x", "y", "x"])], vec![0, 1, 1]).unwrap();
        assert_eq!(exhaustive_pos_table(&one, &Relation::Equivalence, &OracleBudget::default()).unwrap().len(), 1);

        let single_class = synth(&SynthSpec::new(2, 20, 2, 1, 1)).unwrap();
        for rel in [Relation::Equivalence, nbr(0.16)] {
            let table = exhaustive_pos_table(&single_class, &rel, &OracleBudget::default()).unwrap();
            assert!(table.values().all(|p| p.len() == 20));
        }
    }

    #[test]
    fn budget_is_enforced() {
        let big = synth(&SynthSpec::new(2, 65, 2, 0, 2)).unwrap();
        assert!(matches!(
            exhaustive_pos_table(&big, &Relation::Equivalence, &OracleBudget::default()),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn sr_and_slr_hold_in_both_modes() {
        let budget = OracleBudget::default();
        for rel in [Relation::Equivalence, nbr(0.16)] {
            let sr = verify_sr(42, 300, &budget, &rel);
            assert!(sr.passed(), "{:?}", sr.counterexamples);
            assert!(sr.premise_held > 50, "premise coverage too low: {}", sr.premise_held);
            let slr = verify_slr(42, 300, &budget, &rel);
            assert!(slr.passed(), "{:?}", slr.counterexamples);
        }
    }

    #[test]
    fn sr_conclusion_fails_without_premise() {
        // guards against a vacuous checker: in S1, a2 refines U'/{a1} and
        // adding it does change the positive region
        let sys = s1();
        let u = sys.all_samples();
        let pos_a = direct_positive_region(&sys, &u, &[0], &Relation::Equivalence);
        let pos_ab = direct_positive_region(&sys, &u, &[0, 1], &Relation::Equivalence);
        assert_ne!(pos_a, pos_ab);
    }

    #[test]
    fn audit_examples() {
        let rec = audit_reducts(&s1(), &Relation::Equivalence, &OracleBudget::default());
        assert!(rec.passed(), "{:?}", rec.violations);
        assert_eq!(rec.exhaustive_full_pos, Some(4));
        for r in &rec.reports {
            assert_eq!(r.reduct, vec![0, 1]);
        }

        let dup = synth(&SynthSpec::new(7, 50, 4, 0, 2).with_duplicate(3, 0)).unwrap();
        for rel in [Relation::Equivalence, nbr(0.16)] {
            let rec = audit_reducts(&dup, &rel, &OracleBudget::default());
            assert!(rec.passed(), "{:?}", rec.violations);
            assert!(rec.reports.iter().all(|r| !r.reduct.contains(&3)));
        }

        let constant = DecisionSystem::new(
            vec![AttributeColumn::categorical("k", &["z", "z", "z"])],
            vec![0, 1, 0],
        )
        .unwrap();
        let rec = audit_reducts(&constant, &Relation::Equivalence, &OracleBudget::default());
        assert!(rec.passed());
        assert!(rec.reports.iter().all(|r| r.reduct.is_empty()));
    }

    #[test]
    fn random_audits_pass() {
        let budget = OracleBudget::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..60 {
            let sys = random_system(&mut rng, &budget);
            for rel in [Relation::Equivalence, nbr(0.16), nbr(0.45)] {
                let rec = audit_reducts(&sys, &rel, &budget);
                assert!(rec.passed(), "{:?}", rec.violations);
            }
        }
    }
}
