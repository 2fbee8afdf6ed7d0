//! Set-algebra primitives shared by the classic and neighborhood models:
//! equivalence-class partitions, partition refinement, max-norm
//! neighborhood granules, positive regions and the dependency degree.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{AttrId, DecisionSystem, SampleSet};
use crate::error::{Error, Result};

/// Which rough-set model granulates the universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Classic,
    Neighborhood,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classic" => Ok(Mode::Classic),
            "neighborhood" | "nbr" => Ok(Mode::Neighborhood),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Classic => "classic",
            Mode::Neighborhood => "neighborhood",
        })
    }
}

/// Neighborhood radius. Granules use the max over per-attribute distances,
/// so `N_{B+a}(x) = N_B(x) ∩ N_a(x)` holds exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodConfig {
    radius: f64,
}

impl NeighborhoodConfig {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Config(format!("neighborhood radius must be positive, got {radius}")));
        }
        Ok(NeighborhoodConfig { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Non-strict membership: distance exactly `radius` is inside.
    #[inline]
    pub fn within(&self, sys: &DecisionSystem, a: AttrId, x: usize, y: usize) -> bool {
        sys.column(a).distance(x, y) <= self.radius
    }
}

/// A mode resolved together with its configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Relation {
    Equivalence,
    Neighborhood(NeighborhoodConfig),
}

impl Relation {
    /// Pairs a mode with its configuration; a radius is required exactly
    /// when the mode is neighborhood.
    pub fn from_mode(mode: Mode, cfg: Option<NeighborhoodConfig>) -> Result<Self> {
        match (mode, cfg) {
            (Mode::Classic, None) => Ok(Relation::Equivalence),
            (Mode::Neighborhood, Some(cfg)) => Ok(Relation::Neighborhood(cfg)),
            (Mode::Classic, Some(_)) => Err(Error::Config(
                "classic mode takes no neighborhood configuration".into(),
            )),
            (Mode::Neighborhood, None) => Err(Error::Config(
                "neighborhood mode requires a radius".into(),
            )),
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            Relation::Equivalence => Mode::Classic,
            Relation::Neighborhood(_) => Mode::Neighborhood,
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match self {
            Relation::Equivalence => None,
            Relation::Neighborhood(cfg) => Some(cfg.radius()),
        }
    }

    /// Whether `y` is related to `x` under the single attribute `a`.
    #[inline]
    pub fn related(&self, sys: &DecisionSystem, a: AttrId, x: usize, y: usize) -> bool {
        match self {
            Relation::Equivalence => {
                let levels = sys.column(a).levels();
                levels[x] == levels[y]
            }
            Relation::Neighborhood(cfg) => cfg.within(sys, a, x, y),
        }
    }
}

/// Pairwise-disjoint blocks covering a universe; blocks are ordered by
/// their smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    universe: SampleSet,
    blocks: Vec<SampleSet>,
}

impl Partition {
    /// The single-block partition (or no blocks for an empty universe).
    pub fn trivial(universe: SampleSet) -> Self {
        let blocks = if universe.is_empty() {
            Vec::new()
        } else {
            vec![universe.clone()]
        };
        Partition { universe, blocks }
    }

    /// Builds a partition from blocks, canonicalizing their order.
    /// Fails when the blocks are empty, overlap, or do not cover `universe`.
    pub fn from_blocks(universe: SampleSet, blocks: Vec<SampleSet>) -> Result<Self> {
        let p = Self::canonical(universe, blocks);
        p.validate()?;
        Ok(p)
    }

    fn canonical(universe: SampleSet, mut blocks: Vec<SampleSet>) -> Self {
        blocks.sort_unstable_by_key(|b| b.first());
        Partition { universe, blocks }
    }

    pub fn universe(&self) -> &SampleSet {
        &self.universe
    }

    pub fn blocks(&self) -> &[SampleSet] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Checks disjointness, coverage and non-emptiness.
    pub fn validate(&self) -> Result<()> {
        if self.blocks.iter().any(SampleSet::is_empty) {
            return Err(Error::Invariant("partition contains an empty block".into()));
        }
        let mut all: Vec<usize> = self.blocks.iter().flat_map(|b| b.iter()).collect();
        let total = all.len();
        all.sort_unstable();
        all.dedup();
        if all.len() != total {
            return Err(Error::Invariant("partition blocks overlap".into()));
        }
        if all.as_slice() != self.universe.as_slice() {
            return Err(Error::Invariant("partition blocks do not cover the universe".into()));
        }
        Ok(())
    }
}

/// Splits a sorted block into groups of equal key; groups stay sorted.
pub(crate) fn split_by_key(block: &[usize], key: impl Fn(usize) -> u32) -> Vec<SampleSet> {
    if block.len() <= 1 {
        return vec![SampleSet::from_sorted(block.to_vec())];
    }
    let first = key(block[0]);
    if block.iter().all(|&x| key(x) == first) {
        return vec![SampleSet::from_sorted(block.to_vec())];
    }
    let mut keyed: Vec<(u32, usize)> = block.iter().map(|&x| (key(x), x)).collect();
    keyed.sort_unstable();
    keyed
        .chunk_by(|l, r| l.0 == r.0)
        .map(|g| SampleSet::from_sorted(g.iter().map(|&(_, x)| x).collect()))
        .collect()
}

/// `universe / attrs`: samples share a block iff they agree on every
/// attribute in `attrs` (numeric attributes by exact value).
pub fn partition(sys: &DecisionSystem, universe: &SampleSet, attrs: &[AttrId]) -> Result<Partition> {
    sys.check_attrs(attrs)?;
    sys.check_universe(universe)?;
    let mut p = Partition::trivial(universe.clone());
    for &a in attrs {
        p = refine_unchecked(&p, sys, a);
    }
    Ok(p)
}

/// Intersects every block with the classes of `a`, dropping empty
/// intersections.
pub fn refine(p: &Partition, sys: &DecisionSystem, a: AttrId) -> Result<Partition> {
    sys.check_attrs(&[a])?;
    sys.check_universe(p.universe())?;
    Ok(refine_unchecked(p, sys, a))
}

pub(crate) fn refine_unchecked(p: &Partition, sys: &DecisionSystem, a: AttrId) -> Partition {
    let levels = sys.column(a).levels();
    let blocks = p
        .blocks
        .iter()
        .flat_map(|b| split_by_key(b.as_slice(), |x| levels[x]))
        .collect();
    Partition::canonical(p.universe.clone(), blocks)
}

/// `{y ∈ universe : max_{a ∈ attrs} d_a(x, y) <= radius}`.
pub fn neighborhood(
    sys: &DecisionSystem,
    x: usize,
    attrs: &[AttrId],
    cfg: &NeighborhoodConfig,
    universe: &SampleSet,
) -> Result<SampleSet> {
    if attrs.is_empty() {
        return Err(Error::Domain("neighborhood over an empty attribute set".into()));
    }
    sys.check_attrs(attrs)?;
    sys.check_universe(universe)?;
    if !universe.contains(x) {
        return Err(Error::Domain(format!("sample {x} is not in the universe")));
    }
    Ok(SampleSet::from_sorted(
        universe
            .iter()
            .filter(|&y| attrs.iter().all(|&a| cfg.within(sys, a, x, y)))
            .collect(),
    ))
}

/// The decision-consistent part of some universe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositiveRegion {
    pub members: SampleSet,
    pub universe_size: usize,
}

impl PositiveRegion {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn is_pure<'a>(sys: &DecisionSystem, mut members: impl Iterator<Item = &'a usize>) -> bool {
    let d = sys.decision();
    match members.next() {
        None => true,
        Some(&first) => members.all(|&y| d[y] == d[first]),
    }
}

/// Union of the blocks whose members share one decision label.
pub fn positive_region_classic(p: &Partition, sys: &DecisionSystem) -> PositiveRegion {
    let members = SampleSet::from_indices(
        p.blocks()
            .iter()
            .filter(|b| is_pure(sys, b.into_iter()))
            .flat_map(|b| b.iter())
            .collect(),
    );
    PositiveRegion {
        members,
        universe_size: p.universe().len(),
    }
}

/// Samples of `universe` whose granule under `attrs` is decision-pure.
pub fn positive_region_nbr(
    sys: &DecisionSystem,
    universe: &SampleSet,
    attrs: &[AttrId],
    cfg: &NeighborhoodConfig,
) -> Result<PositiveRegion> {
    if attrs.is_empty() {
        return Err(Error::Domain("neighborhood over an empty attribute set".into()));
    }
    sys.check_attrs(attrs)?;
    sys.check_universe(universe)?;
    let d = sys.decision();
    let members = SampleSet::from_sorted(
        universe
            .iter()
            .filter(|&x| {
                universe
                    .iter()
                    .all(|y| d[y] == d[x] || !attrs.iter().all(|&a| cfg.within(sys, a, x, y)))
            })
            .collect(),
    );
    Ok(PositiveRegion {
        members,
        universe_size: universe.len(),
    })
}

/// `|POS| / n_total`. Comparisons between candidates should use the integer
/// cardinality instead.
pub fn dependency(pos: &PositiveRegion, n_total: usize) -> f64 {
    assert!(n_total >= 1, "dependency over an empty universe");
    pos.len() as f64 / n_total as f64
}

/// Per-sample granules `N_B(x) ∩ universe` for every `x` in a universe.
///
/// The neighborhood counterpart of [`Partition`]; with `B = ∅` every granule
/// is the whole universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GranuleView {
    universe: SampleSet,
    granules: Vec<SampleSet>,
}

impl GranuleView {
    pub fn build(
        sys: &DecisionSystem,
        universe: &SampleSet,
        attrs: &[AttrId],
        cfg: &NeighborhoodConfig,
    ) -> Result<Self> {
        sys.check_attrs(attrs)?;
        sys.check_universe(universe)?;
        let granules = universe
            .iter()
            .map(|x| {
                SampleSet::from_sorted(
                    universe
                        .iter()
                        .filter(|&y| attrs.iter().all(|&a| cfg.within(sys, a, x, y)))
                        .collect(),
                )
            })
            .collect();
        Ok(GranuleView {
            universe: universe.clone(),
            granules,
        })
    }

    pub(crate) fn from_parts(universe: SampleSet, granules: Vec<SampleSet>) -> Self {
        debug_assert_eq!(universe.len(), granules.len());
        GranuleView { universe, granules }
    }

    pub fn universe(&self) -> &SampleSet {
        &self.universe
    }

    pub fn granules(&self) -> &[SampleSet] {
        &self.granules
    }

    /// The granule of universe member `x`.
    pub fn granule_of(&self, x: usize) -> Option<&SampleSet> {
        self.universe
            .as_slice()
            .binary_search(&x)
            .ok()
            .map(|i| &self.granules[i])
    }

    /// `N_{B+a}(x) = N_B(x) ∩ N_a(x)` for every member.
    pub fn refine(&self, sys: &DecisionSystem, a: AttrId, cfg: &NeighborhoodConfig) -> Result<Self> {
        sys.check_attrs(&[a])?;
        let granules = self
            .universe
            .iter()
            .zip(&self.granules)
            .map(|(x, g)| SampleSet::from_sorted(g.iter().filter(|&y| cfg.within(sys, a, x, y)).collect()))
            .collect();
        Ok(GranuleView {
            universe: self.universe.clone(),
            granules,
        })
    }

    /// Members whose granule is decision-pure.
    pub fn positive_region(&self, sys: &DecisionSystem) -> PositiveRegion {
        let d = sys.decision();
        let members = SampleSet::from_sorted(
            self.universe
                .iter()
                .zip(&self.granules)
                .filter(|(x, g)| g.iter().all(|y| d[y] == d[*x]))
                .map(|(x, _)| x)
                .collect(),
        );
        PositiveRegion {
            members,
            universe_size: self.universe.len(),
        }
    }
}
