//! Forward greedy attribute reduction.
//!
//! All variants share one loop: evaluate the live candidates by the
//! positive-region gain of `R + a`, commit the best one (lowest index on
//! ties), and stop once `POS_R(D) = POS_C(D)`. They differ in the work done
//! per iteration:
//!
//! * `plain` evaluates every candidate on the whole universe;
//! * `fspa` evaluates on the undecided region `U' = U - POS_R(D)` only;
//! * `farnemf` additionally drops, for good, every candidate that does not
//!   refine `U'/R`;
//! * `lra` additionally evaluates each candidate only on its active region
//!   (see [`crate::lra`]).
//!
//! When no candidate has positive gain but `POS_R(D)` is still short of
//! `POS_C(D)`, the lowest-index candidate that refines the undecided region
//! is taken. Such a candidate always exists, and every variant agrees on it.

pub(crate) mod engine;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{AttrId, DecisionSystem, SampleSet};
use crate::error::{Error, Result};
use crate::granulation::{self, GranuleView, Mode, NeighborhoodConfig, PositiveRegion, Relation};
use engine::{Engine, Eval, EvalOptions, Work};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Plain,
    Fspa,
    Farnemf,
    Lra,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Plain, Variant::Fspa, Variant::Farnemf, Variant::Lra];

    fn shrinks(self) -> bool {
        self != Variant::Plain
    }

    fn eliminates(self) -> bool {
        matches!(self, Variant::Farnemf | Variant::Lra)
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Variant::Plain),
            "fspa" => Ok(Variant::Fspa),
            "farnemf" => Ok(Variant::Farnemf),
            "lra" => Ok(Variant::Lra),
            other => Err(Error::Config(format!("unknown variant `{other}`"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Plain => "plain",
            Variant::Fspa => "fspa",
            Variant::Farnemf => "farnemf",
            Variant::Lra => "lra",
        })
    }
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

/// Deterministic work counters plus wall time.
#[derive(Debug, Default, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Instrumentation {
    /// Per-sample granule or per-block computations.
    pub granule_evals: u64,
    /// Candidate attribute evaluations.
    pub candidate_evals: u64,
    /// Samples whose block or granule was examined, summed over all
    /// evaluations and structure updates.
    pub samples_touched: u64,
    /// Sample pairs compared.
    pub pair_checks: u64,
    #[serde(rename = "wall_time_secs", with = "duration_secs")]
    pub wall_time: Duration,
}

impl Instrumentation {
    pub(crate) fn add_work(&mut self, w: Work) {
        self.granule_evals += w.granules;
        self.samples_touched += w.samples;
        self.pair_checks += w.pairs;
    }

    /// Counters without the wall time, for determinism checks.
    pub fn deterministic(&self) -> (u64, u64, u64, u64) {
        (self.granule_evals, self.candidate_evals, self.samples_touched, self.pair_checks)
    }
}

/// A candidate dropped because it no longer refines the undecided region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Elimination {
    pub attribute: AttrId,
    /// Iteration (1-based) at which it was dropped.
    pub iteration: usize,
    /// Length of the selected prefix `R` at that point.
    pub selected_len: usize,
}

/// Evolving search state.
#[derive(Debug, Clone)]
pub struct ReductState {
    pub selected: Vec<AttrId>,
    /// `U - POS_R(D)`.
    pub universe_remaining: SampleSet,
    pub candidates: Vec<AttrId>,
    pub redundant: Vec<AttrId>,
    pub pos_accum: PositiveRegion,
    pub gamma_trace: Vec<usize>,
    pub counters: Instrumentation,
    pub eliminations: Vec<Elimination>,
    pub terminated: bool,
    pub(crate) iteration: usize,
    pub(crate) target_pos: usize,
    pub(crate) variant: Variant,
    pub(crate) relation: Relation,
    pub(crate) engine: Engine,
    pub(crate) active: crate::lra::ActiveRegionMap,
}

impl ReductState {
    /// Initial state `R = ∅`. Computes `|POS_C(D)|` as the stopping target.
    pub fn new(sys: &DecisionSystem, relation: Relation, variant: Variant) -> Self {
        let n = sys.n_samples();
        let mut counters = Instrumentation::default();
        let (target_pos, work) = engine::full_positive_size(sys, &relation);
        counters.add_work(work);

        let pos_members = if sys.n_classes() == 1 {
            SampleSet::full(n)
        } else {
            SampleSet::empty()
        };
        let mut state = ReductState {
            selected: Vec::new(),
            universe_remaining: sys.all_samples().difference(&pos_members),
            candidates: sys.all_attributes(),
            redundant: Vec::new(),
            pos_accum: PositiveRegion {
                members: pos_members,
                universe_size: n,
            },
            gamma_trace: Vec::new(),
            counters,
            eliminations: Vec::new(),
            terminated: false,
            iteration: 0,
            target_pos,
            variant,
            relation,
            engine: Engine::new(sys, relation, variant.shrinks()),
            active: crate::lra::ActiveRegionMap::default(),
        };
        state.check_done();
        state
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn relation(&self) -> Relation {
        self.relation
    }

    /// `|POS_C(D)|`, the size the search stops at.
    pub fn target_pos_size(&self) -> usize {
        self.target_pos
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Active regions of the live candidates (lra variant only).
    pub fn active_regions(&self) -> &crate::lra::ActiveRegionMap {
        &self.active
    }

    fn check_done(&mut self) {
        if self.candidates.is_empty() || self.pos_accum.len() >= self.target_pos {
            self.terminated = true;
        }
    }

    /// Evaluates `candidates` in parallel; results are in candidate order.
    pub(crate) fn evaluate_all(
        &self,
        sys: &DecisionSystem,
        candidates: &[AttrId],
        scope: impl Fn(AttrId) -> Option<SampleSet> + Sync,
        opts: EvalOptions,
    ) -> Vec<Eval> {
        candidates
            .par_iter()
            .map(|&a| {
                let s = scope(a);
                self.engine.evaluate(sys, a, s.as_ref(), opts)
            })
            .collect()
    }

    pub(crate) fn record_evals(&mut self, evals: &[Eval]) {
        self.counters.candidate_evals += evals.len() as u64;
        for e in evals {
            self.counters.add_work(e.work);
        }
    }

    /// Moves `attrs` from the candidates to the redundant set.
    pub(crate) fn eliminate(&mut self, attrs: &[AttrId]) {
        for &a in attrs {
            self.candidates.retain(|&c| c != a);
            self.redundant.push(a);
            self.active.remove(a);
            self.eliminations.push(Elimination {
                attribute: a,
                iteration: self.iteration,
                selected_len: self.selected.len(),
            });
        }
        self.redundant.sort_unstable();
    }

    /// Lowest-index candidate refining the undecided region, evaluated one
    /// at a time in index order.
    fn first_refining(&mut self, sys: &DecisionSystem) -> Option<(AttrId, Eval)> {
        let opts = EvalOptions {
            track: true,
            collect: false,
            undecided_only: true,
        };
        for a in self.candidates.clone() {
            let e = self.engine.evaluate(sys, a, None, opts);
            self.record_evals(std::slice::from_ref(&e));
            if e.refines {
                return Some((a, e));
            }
        }
        None
    }

    /// Commits `a`: refines the structure, folds the newly consistent
    /// samples into the positive region and shrinks `U'`. `consistent` is
    /// taken from an evaluation of `a` in the current state, if available.
    pub(crate) fn commit(&mut self, sys: &DecisionSystem, a: AttrId, consistent: Option<&[usize]>) {
        let (newly, work) = self.engine.commit(sys, a, consistent);
        self.counters.add_work(work);
        let newly = SampleSet::from_sorted(newly);
        self.pos_accum.members = self.pos_accum.members.union(&newly);
        self.universe_remaining = self.universe_remaining.difference(&newly);
        self.selected.push(a);
        self.candidates.retain(|&c| c != a);
        self.active.remove(a);
        self.active.shrink_to(&newly);
        self.gamma_trace.push(self.pos_accum.len());
        self.check_done();
    }

    pub(crate) fn select(&mut self, sys: &DecisionSystem, evaluated: &[AttrId], evals: &[Eval]) {
        let best = evaluated
            .iter()
            .zip(evals)
            .filter(|(a, _)| self.candidates.contains(a))
            .max_by(|(a1, e1), (a2, e2)| e1.gain.cmp(&e2.gain).then(a2.cmp(a1)));
        let evaluated_consistent = |a: AttrId| {
            evaluated
                .iter()
                .position(|&c| c == a)
                .map(|i| evals[i].consistent.clone())
        };
        let choice = match best {
            Some((&a, e)) if e.gain > 0 => Some((a, Some(e.consistent.clone()))),
            _ if self.variant.eliminates() => self.candidates.first().map(|&a| (a, evaluated_consistent(a))),
            _ => self.first_refining(sys).map(|(a, e)| (a, Some(e.consistent))),
        };
        match choice {
            Some((a, consistent)) => self.commit(sys, a, consistent.as_deref()),
            None => self.terminated = true,
        }
    }
}

/// One iteration of the non-lra variants.
fn baseline_step(mut state: ReductState, sys: &DecisionSystem) -> ReductState {
    let variant = state.variant;
    let opts = EvalOptions {
        track: variant.eliminates(),
        collect: false,
        undecided_only: false,
    };
    let candidates = state.candidates.clone();
    let evals = state.evaluate_all(sys, &candidates, |_| None, opts);
    state.record_evals(&evals);
    if variant.eliminates() {
        let dropped: Vec<AttrId> = candidates
            .iter()
            .zip(&evals)
            .filter(|(_, e)| !e.refines)
            .map(|(&a, _)| a)
            .collect();
        state.eliminate(&dropped);
    }
    state.select(sys, &candidates, &evals);
    state
}

/// Advances the search by one iteration; a terminated state is returned
/// unchanged.
pub fn step(mut state: ReductState, sys: &DecisionSystem) -> ReductState {
    if state.terminated {
        return state;
    }
    state.iteration += 1;
    match state.variant {
        Variant::Lra => crate::lra::lra_iteration(state, sys),
        _ => baseline_step(state, sys),
    }
}

/// Echo of the configuration a report was produced under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub mode: Mode,
    pub radius: Option<f64>,
    pub seed: Option<u64>,
    pub dataset: Option<String>,
}

/// Result of one reduction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub algorithm: Variant,
    pub reduct: Vec<AttrId>,
    pub reduct_names: Vec<String>,
    pub n_samples: usize,
    pub n_attributes: usize,
    /// `|POS_reduct(D)|` over the whole universe.
    pub final_pos_size: usize,
    pub gamma_trace: Vec<usize>,
    pub redundant: Vec<AttrId>,
    pub eliminations: Vec<Elimination>,
    pub counters: Instrumentation,
    pub config: ConfigEcho,
}

impl ReductionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn dependency(&self) -> f64 {
        self.final_pos_size as f64 / self.n_samples as f64
    }
}

/// Runs the forward search to completion.
pub fn reduce(
    sys: &DecisionSystem,
    mode: Mode,
    variant: Variant,
    cfg: Option<NeighborhoodConfig>,
) -> Result<ReductionReport> {
    let relation = Relation::from_mode(mode, cfg)?;
    Ok(reduce_with(sys, relation, variant))
}

/// [`reduce`] with an already resolved relation.
pub fn reduce_with(sys: &DecisionSystem, relation: Relation, variant: Variant) -> ReductionReport {
    let start = Instant::now();
    let mut state = ReductState::new(sys, relation, variant);
    while !state.terminated {
        state = step(state, sys);
    }
    state.counters.wall_time = start.elapsed();
    let names = sys.attribute_names();
    ReductionReport {
        algorithm: variant,
        reduct_names: state.selected.iter().map(|&a| names[a].clone()).collect(),
        reduct: state.selected,
        n_samples: sys.n_samples(),
        n_attributes: sys.n_attributes(),
        final_pos_size: state.pos_accum.len(),
        gamma_trace: state.gamma_trace,
        redundant: state.redundant,
        eliminations: state.eliminations,
        counters: state.counters,
        config: ConfigEcho {
            mode: relation.mode(),
            radius: relation.radius(),
            seed: None,
            dataset: None,
        },
    }
}

/// Whether `b` leaves the structure of `universe` under `attrs` unchanged:
/// `universe/R = universe/(R + b)` in classic mode, and
/// `N_R(x) ∩ universe ⊆ N_b(x)` for every member in neighborhood mode.
pub fn sr_test(
    sys: &DecisionSystem,
    universe: &SampleSet,
    attrs: &[AttrId],
    b: AttrId,
    relation: &Relation,
) -> Result<bool> {
    sys.check_attrs(&[b])?;
    match relation {
        Relation::Equivalence => {
            let p = granulation::partition(sys, universe, attrs)?;
            Ok(granulation::refine(&p, sys, b)? == p)
        }
        Relation::Neighborhood(cfg) => {
            let view = GranuleView::build(sys, universe, attrs, cfg)?;
            let holds = view
                .universe()
                .iter()
                .zip(view.granules())
                .all(|(x, g)| g.iter().all(|y| cfg.within(sys, b, x, y)));
            Ok(holds)
        }
    }
}
