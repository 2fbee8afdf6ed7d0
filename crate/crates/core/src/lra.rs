//! Local-redundancy acceleration.
//!
//! For a candidate `a` and the current structure of the undecided region
//! `U'` under `R`, a block (classic) is *non-active* when it lies inside a
//! single class of `U/a`; a sample (neighborhood) is non-active when
//! `N_R(x) ∩ U' ⊆ N_a(x)`. Everything else is the candidate's *active
//! region*. Two facts drive the search:
//!
//! * refining by `a` changes nothing outside the active region, so a
//!   candidate only needs to be evaluated there;
//! * a candidate whose active region is empty stays redundant for every
//!   superset of `R`, so it is dropped for good.
//!
//! Non-active samples stay non-active as `R` grows and `U'` shrinks, so each
//! iteration only re-tests the previous active region.
//!
//! In neighborhood mode the translation from blocks to granules relies on
//! the max-norm intersection law `N_{R+a}(x) = N_R(x) ∩ N_a(x)`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::data::{AttrId, DecisionSystem, SampleSet};
use crate::error::{Error, Result};
use crate::granulation::{GranuleView, Partition, Relation};
use crate::reduction::engine::{Eval, EvalOptions};
use crate::reduction::{ReductState, Variant};

/// Active region of every live candidate.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ActiveRegionMap {
    regions: BTreeMap<AttrId, SampleSet>,
}

impl ActiveRegionMap {
    pub fn get(&self, a: AttrId) -> Option<&SampleSet> {
        self.regions.get(&a)
    }

    pub fn iter(&self) -> impl Iterator<Item = (AttrId, &SampleSet)> {
        self.regions.iter().map(|(&a, s)| (a, s))
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub(crate) fn insert(&mut self, a: AttrId, region: SampleSet) {
        self.regions.insert(a, region);
    }

    pub(crate) fn remove(&mut self, a: AttrId) {
        self.regions.remove(&a);
    }

    /// Drops samples that just left the undecided region.
    pub(crate) fn shrink_to(&mut self, decided: &SampleSet) {
        if decided.is_empty() {
            return;
        }
        for region in self.regions.values_mut() {
            *region = region.difference(decided);
        }
    }
}

/// The structure of a universe under some attribute set `R`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Structure {
    Blocks(Partition),
    Granules(GranuleView),
}

impl Structure {
    pub fn universe(&self) -> &SampleSet {
        match self {
            Structure::Blocks(p) => p.universe(),
            Structure::Granules(v) => v.universe(),
        }
    }

    /// Samples whose block or granule is decision-pure.
    pub fn positive_region(&self, sys: &DecisionSystem) -> SampleSet {
        match self {
            Structure::Blocks(p) => crate::granulation::positive_region_classic(p, sys).members,
            Structure::Granules(v) => v.positive_region(sys).members,
        }
    }
}

fn mismatch() -> Error {
    Error::Config("structure kind does not match the relation".into())
}

fn block_is_constant(sys: &DecisionSystem, a: AttrId, block: &SampleSet) -> bool {
    let levels = sys.column(a).levels();
    let mut it = block.iter();
    match it.next() {
        None => true,
        Some(first) => it.all(|y| levels[y] == levels[first]),
    }
}

/// Union of blocks not contained in one class of `U/a` (classic), or the
/// samples whose granule is not contained in `N_a(x)` (neighborhood).
pub fn active_region(
    sys: &DecisionSystem,
    structure: &Structure,
    a: AttrId,
    relation: &Relation,
) -> Result<SampleSet> {
    sys.check_attrs(&[a])?;
    match (structure, relation) {
        (Structure::Blocks(p), Relation::Equivalence) => Ok(SampleSet::from_indices(
            p.blocks()
                .iter()
                .filter(|b| !block_is_constant(sys, a, b))
                .flat_map(|b| b.iter())
                .collect(),
        )),
        (Structure::Granules(v), Relation::Neighborhood(cfg)) => Ok(SampleSet::from_sorted(
            v.universe()
                .iter()
                .zip(v.granules())
                .filter(|(x, g)| !g.iter().all(|y| cfg.within(sys, a, *x, y)))
                .map(|(x, _)| x)
                .collect(),
        )),
        _ => Err(mismatch()),
    }
}

fn stale(msg: &str) -> Error {
    Error::Invariant(format!("stale active region: {msg}"))
}

/// Refines `structure` by `a`, recomputing only the blocks or granules in
/// `active` and copying the rest verbatim. Returns the refined structure
/// and the number of samples that became decision-consistent.
///
/// `active` must be the active region of `a` for this structure. A set that
/// is not a subset of the universe, or that cuts through a block, is
/// rejected; debug builds also reject a set that misses part of the true
/// active region.
pub fn restricted_refine(
    sys: &DecisionSystem,
    structure: &Structure,
    a: AttrId,
    active: &SampleSet,
    relation: &Relation,
) -> Result<(Structure, usize)> {
    sys.check_attrs(&[a])?;
    if !active.is_subset(structure.universe()) {
        return Err(stale("not a subset of the universe"));
    }
    let d = sys.decision();
    match (structure, relation) {
        (Structure::Blocks(p), Relation::Equivalence) => {
            let levels = sys.column(a).levels();
            let mut blocks = Vec::with_capacity(p.len());
            let mut gain = 0;
            let mut covered = 0;
            for block in p.blocks() {
                let inside = block.iter().filter(|&x| active.contains(x)).count();
                if inside == 0 {
                    if cfg!(debug_assertions) && !block_is_constant(sys, a, block) {
                        return Err(stale("a non-active block is split by the attribute"));
                    }
                    blocks.push(block.clone());
                    continue;
                }
                if inside != block.len() {
                    return Err(stale("cuts through a block"));
                }
                covered += inside;
                let was_pure = block.iter().all(|y| d[y] == d[block.as_slice()[0]]);
                for part in crate::granulation::split_by_key(block.as_slice(), |x| levels[x]) {
                    if !was_pure && part.iter().all(|y| d[y] == d[part.as_slice()[0]]) {
                        gain += part.len();
                    }
                    blocks.push(part);
                }
            }
            debug_assert_eq!(covered, active.len());
            Ok((
                Structure::Blocks(Partition::from_blocks(p.universe().clone(), blocks)?),
                gain,
            ))
        }
        (Structure::Granules(v), Relation::Neighborhood(cfg)) => {
            let mut gain = 0;
            let mut granules = Vec::with_capacity(v.granules().len());
            for (x, g) in v.universe().iter().zip(v.granules()) {
                if !active.contains(x) {
                    if cfg!(debug_assertions) && !g.iter().all(|y| cfg.within(sys, a, x, y)) {
                        return Err(stale("a non-active granule is shrunk by the attribute"));
                    }
                    granules.push(g.clone());
                    continue;
                }
                let refined = SampleSet::from_sorted(g.iter().filter(|&y| cfg.within(sys, a, x, y)).collect());
                let was_pure = g.iter().all(|y| d[y] == d[x]);
                if !was_pure && refined.iter().all(|y| d[y] == d[x]) {
                    gain += 1;
                }
                granules.push(refined);
            }
            Ok((
                Structure::Granules(GranuleView::from_parts(v.universe().clone(), granules)),
                gain,
            ))
        }
        _ => Err(mismatch()),
    }
}

/// Largest undecided region for which every restricted evaluation is
/// cross-checked against the unrestricted one in debug builds.
const EXACTNESS_CHECK_LIMIT: usize = 2048;

/// One lra iteration: refresh the active regions (re-testing only the
/// previous ones), drop candidates whose region became empty, evaluate the
/// survivors on their regions and commit the best.
pub(crate) fn lra_iteration(mut state: ReductState, sys: &DecisionSystem) -> ReductState {
    let opts = EvalOptions {
        track: true,
        collect: true,
        undecided_only: false,
    };
    let candidates = state.candidates.clone();
    let evals: Vec<Eval> = {
        let active = &state.active;
        state.evaluate_all(sys, &candidates, |a| active.get(a).cloned(), opts)
    };
    state.record_evals(&evals);

    if cfg!(debug_assertions) && state.engine.universe_len() <= EXACTNESS_CHECK_LIMIT {
        for (&a, e) in candidates.iter().zip(&evals) {
            let full = state.engine.evaluate(sys, a, None, opts);
            assert_eq!(
                (full.gain, &full.active),
                (e.gain, &e.active),
                "restricted evaluation of attribute {a} differs from full refinement"
            );
        }
    }

    let mut dropped = Vec::new();
    for (&a, e) in candidates.iter().zip(&evals) {
        if e.active.is_empty() {
            dropped.push(a);
        } else {
            state.active.insert(a, SampleSet::from_sorted(e.active.clone()));
        }
    }
    state.eliminate(&dropped);
    state.select(sys, &candidates, &evals);
    state
}

/// Advances an lra search by one iteration. A state whose candidates are
/// exhausted (or whose positive region is complete) comes back unchanged
/// with `terminated` set.
pub fn lra_step(state: ReductState, sys: &DecisionSystem) -> Result<ReductState> {
    if state.variant() != Variant::Lra {
        return Err(Error::Config(format!(
            "lra_step on a `{}` search state",
            state.variant()
        )));
    }
    Ok(crate::reduction::step(state, sys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::s1;
    use crate::data::{synth, AttributeColumn, SynthSpec};
    use crate::granulation::{partition, refine, NeighborhoodConfig};

    fn set(v: &[usize]) -> SampleSet {
        SampleSet::from_indices(v.to_vec())
    }

    /// U/R = {{0,1},{2,3}}, U/a = {{0,1,2},{3}}.
    fn definition_example() -> DecisionSystem {
        DecisionSystem::new(
            vec![
                AttributeColumn::categorical("r", &["p", "p", "q", "q"]),
                AttributeColumn::categorical("a", &["u", "u", "u", "v"]),
                AttributeColumn::categorical("r2", &["m", "m", "n", "n"]),
            ],
            vec![0, 1, 0, 1],
        )
        .unwrap()
    }

    #[test]
    fn active_region_example() {
        let sys = definition_example();
        let p = partition(&sys, &sys.all_samples(), &[0]).unwrap();
        let s = Structure::Blocks(p.clone());
        assert_eq!(active_region(&sys, &s, 1, &Relation::Equivalence).unwrap(), set(&[2, 3]));
        // duplicate of an attribute in R
        assert!(active_region(&sys, &s, 2, &Relation::Equivalence).unwrap().is_empty());
        // R = ∅ and a non-constant
        let trivial = Structure::Blocks(Partition::trivial(sys.all_samples()));
        assert_eq!(
            active_region(&sys, &trivial, 1, &Relation::Equivalence).unwrap(),
            sys.all_samples()
        );

        let (refined, _) = restricted_refine(&sys, &s, 1, &set(&[2, 3]), &Relation::Equivalence).unwrap();
        assert_eq!(refined, Structure::Blocks(refine(&p, &sys, 1).unwrap()));
    }

    #[test]
    fn empty_active_region_is_identity() {
        let sys = definition_example();
        let s = Structure::Blocks(partition(&sys, &sys.all_samples(), &[0]).unwrap());
        let (out, gain) = restricted_refine(&sys, &s, 2, &SampleSet::empty(), &Relation::Equivalence).unwrap();
        assert_eq!(out, s);
        assert_eq!(gain, 0);
    }

    #[test]
    fn full_active_region_matches_refine() {
        let sys = s1();
        let p = Partition::trivial(sys.all_samples());
        let s = Structure::Blocks(p.clone());
        let (out, gain) = restricted_refine(&sys, &s, 0, &sys.all_samples(), &Relation::Equivalence).unwrap();
        assert_eq!(out, Structure::Blocks(refine(&p, &sys, 0).unwrap()));
        assert_eq!(gain, 2);
    }

    #[test]
    fn stale_active_sets_are_errors() {
        let sys = definition_example();
        let s = Structure::Blocks(partition(&sys, &sys.all_samples(), &[0]).unwrap());
        let r = restricted_refine(&sys, &s, 1, &set(&[2]), &Relation::Equivalence);
        assert!(matches!(r, Err(Error::Invariant(_))));
        let r = restricted_refine(&sys, &s, 1, &set(&[9]), &Relation::Equivalence);
        assert!(matches!(r, Err(Error::Invariant(_))));
        if cfg!(debug_assertions) {
            let r = restricted_refine(&sys, &s, 1, &SampleSet::empty(), &Relation::Equivalence);
            assert!(matches!(r, Err(Error::Invariant(_))));
        }
        let mismatched = restricted_refine(
            &sys,
            &s,
            1,
            &set(&[2, 3]),
            &Relation::Neighborhood(NeighborhoodConfig::new(0.1).unwrap()),
        );
        assert!(matches!(mismatched, Err(Error::Config(_))));
    }

    #[test]
    fn neighborhood_restricted_refine_matches_full() {
        let sys = synth(&SynthSpec::new(5, 40, 3, 1, 2)).unwrap();
        let cfg = NeighborhoodConfig::new(0.16).unwrap();
        let rel = Relation::Neighborhood(cfg);
        let view = GranuleView::build(&sys, &sys.all_samples(), &[0], &cfg).unwrap();
        let s = Structure::Granules(view.clone());
        for a in 1..4 {
            let active = active_region(&sys, &s, a, &rel).unwrap();
            let (out, gain) = restricted_refine(&sys, &s, a, &active, &rel).unwrap();
            let full = view.refine(&sys, a, &cfg).unwrap();
            assert_eq!(out, Structure::Granules(full.clone()));
            let before = view.positive_region(&sys).members;
            let after = full.positive_region(&sys).members;
            assert_eq!(gain, after.difference(&before).len());
        }
    }

    #[test]
    fn lra_step_on_s1() {
        let sys = s1();
        let state = ReductState::new(&sys, Relation::Equivalence, Variant::Lra);
        assert_eq!(state.universe_remaining, set(&[0, 1, 2, 3]));
        let state = lra_step(state, &sys).unwrap();
        assert_eq!(state.selected, vec![0]);
        assert_eq!(state.universe_remaining, set(&[0, 1]));
        assert_eq!(state.pos_accum.members, set(&[2, 3]));
    }

    #[test]
    fn duplicate_is_eliminated_after_its_source() {
        let classic = synth(&SynthSpec::new(7, 60, 0, 5, 2).with_duplicate(3, 0)).unwrap();
        let numeric = synth(&SynthSpec::new(7, 50, 4, 0, 2).with_duplicate(3, 0)).unwrap();
        for (sys, rel) in [
            (classic, Relation::Equivalence),
            (numeric, Relation::Neighborhood(NeighborhoodConfig::new(0.16).unwrap())),
        ] {
            let mut state = ReductState::new(&sys, rel, Variant::Lra);
            let mut seen_redundant = false;
            while !state.terminated {
                let had_zero = state.selected.contains(&0);
                state = lra_step(state, &sys).unwrap();
                if state.redundant.contains(&3) {
                    seen_redundant = true;
                    assert!(had_zero || state.selected.contains(&0) || state.selected.is_empty());
                }
                if seen_redundant {
                    assert!(!state.candidates.contains(&3));
                }
            }
            assert!(!state.selected.contains(&3));
            if state.selected.first() == Some(&0) && state.selected.len() > 1 {
                assert!(state.redundant.contains(&3), "{rel:?}");
            }
        }
    }

    #[test]
    fn terminated_state_is_a_fixed_point() {
        let sys = s1();
        let mut state = ReductState::new(&sys, Relation::Equivalence, Variant::Lra);
        while !state.terminated {
            state = lra_step(state, &sys).unwrap();
        }
        let again = lra_step(state.clone(), &sys).unwrap();
        assert_eq!(again.selected, state.selected);
        assert_eq!(again.counters, state.counters);
        assert!(again.terminated);

        let plain = ReductState::new(&sys, Relation::Equivalence, Variant::Plain);
        assert!(lra_step(plain, &sys).is_err());
    }

    #[test]
    fn active_regions_shrink_across_iterations() {
        let sys = synth(&SynthSpec::new(9, 300, 6, 2, 3).with_trailing_duplicates(2)).unwrap();
        for rel in [Relation::Equivalence, Relation::Neighborhood(NeighborhoodConfig::new(0.2).unwrap())] {
            let mut state = ReductState::new(&sys, rel, Variant::Lra);
            let mut previous: Option<ActiveRegionMap> = None;
            while !state.terminated {
                state = lra_step(state, &sys).unwrap();
                for (a, region) in state.active_regions().iter() {
                    assert!(region.is_subset(&state.universe_remaining));
                    assert!(state.candidates.contains(&a));
                    if let Some(prev) = previous.as_ref().and_then(|p| p.get(a)) {
                        assert!(region.is_subset(prev), "attribute {a} grew its active region");
                    }
                }
                previous = Some(state.active_regions().clone());
            }
        }
    }

    mod props {
        use super::*;
        use crate::oracle::{random_system, OracleBudget};
        use proptest::prelude::*;
        use rand::SeedableRng;
        use rand_chacha::ChaCha8Rng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn restricted_refine_equals_full_refine(seed in any::<u64>(), r_mask in 0u32..64, nbr in any::<bool>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let sys = random_system(&mut rng, &OracleBudget::default());
                let m = sys.n_attributes();
                let r: Vec<AttrId> = (0..m - 1).filter(|i| r_mask & (1 << i) != 0).collect();
                let a = m - 1;
                let cfg = NeighborhoodConfig::new(0.3).unwrap();
                let (rel, s) = if nbr {
                    let view = GranuleView::build(&sys, &sys.all_samples(), &r, &cfg).unwrap();
                    let undecided = sys.all_samples().difference(&view.positive_region(&sys).members);
                    let view = GranuleView::build(&sys, &undecided, &r, &cfg).unwrap();
                    (Relation::Neighborhood(cfg), Structure::Granules(view))
                } else {
                    (Relation::Equivalence, Structure::Blocks(partition(&sys, &sys.all_samples(), &r).unwrap()))
                };
                let active = active_region(&sys, &s, a, &rel).unwrap();
                prop_assert!(active.is_subset(s.universe()));
                let (out, gain) = restricted_refine(&sys, &s, a, &active, &rel).unwrap();
                let full = match (&s, rel) {
                    (Structure::Blocks(p), _) => Structure::Blocks(refine(p, &sys, a).unwrap()),
                    (Structure::Granules(v), Relation::Neighborhood(cfg)) => Structure::Granules(v.refine(&sys, a, &cfg).unwrap()),
                    _ => unreachable!(),
                };
                let before = s.positive_region(&sys);
                let after = full.positive_region(&sys);
                prop_assert_eq!(gain, after.difference(&before).len());
                prop_assert_eq!(out, full);
            }
        }
    }
}
