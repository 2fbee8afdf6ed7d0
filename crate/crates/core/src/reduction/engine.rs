//! Incremental search state behind the forward search.
//!
//! Classic mode keeps the equivalence blocks of the evaluation universe
//! under the selected attributes `R`. Neighborhood mode keeps no granules:
//! every evaluation enumerates `N_{R+a}(x)` through the tightest
//! sorted-by-attribute run around `x`, so memory stays linear in the table
//! size. Sample-shrinking variants drop samples from the evaluation universe
//! once they become decision-consistent; the plain variant keeps the whole
//! universe and only marks them.
//!
//! Dropping consistent samples never changes whether an undecided sample
//! becomes consistent: if `y ∈ N_R(x)` is consistent then `x ∈ N_R(y)` by
//! symmetry, so `d(y) = d(x)`.

use rayon::prelude::*;

use crate::data::{AttrId, DecisionSystem, SampleSet};
use crate::granulation::Relation;

const NOT_PRESENT: u32 = u32::MAX;

/// `y ∈ N_a(x)` for one attribute, with the column kind resolved once.
#[derive(Clone, Copy)]
enum Probe<'a> {
    Num { v: &'a [f64], r: f64 },
    Code(&'a [u32]),
    All,
}

impl<'a> Probe<'a> {
    fn new(sys: &'a DecisionSystem, relation: &Relation, a: AttrId) -> Self {
        let col = sys.column(a);
        match relation {
            Relation::Equivalence => Probe::Code(col.levels()),
            Relation::Neighborhood(cfg) => match col.numeric_values() {
                Some(v) => Probe::Num { v, r: cfg.radius() },
                // categorical distance is 0 or 1
                None if cfg.radius() >= 1.0 => Probe::All,
                None => Probe::Code(col.levels()),
            },
        }
    }

    #[inline]
    fn hit(&self, x: usize, y: usize) -> bool {
        match *self {
            Probe::Num { v, r } => (v[x] - v[y]).abs() <= r,
            Probe::Code(c) => c[x] == c[y],
            Probe::All => true,
        }
    }

    fn sort(&self, members: &[u32]) -> Vec<u32> {
        let mut sorted = members.to_vec();
        match *self {
            Probe::Num { v, .. } => sorted.sort_by(|&x, &y| v[x as usize].total_cmp(&v[y as usize])),
            Probe::Code(c) => sorted.sort_by_key(|&x| c[x as usize]),
            Probe::All => {}
        }
        sorted
    }

    /// Bounds of the run of `sorted` (as produced by [`Probe::sort`]) that
    /// holds every member of `N_a(x)`. The run may hold a few extra samples;
    /// callers confirm with [`Probe::hit`].
    fn run(&self, sorted: &[u32], x: usize) -> (usize, usize) {
        match *self {
            Probe::Num { v, r } => {
                let lo = v[x] - r - WINDOW_SLACK;
                let hi = v[x] + r + WINDOW_SLACK;
                (
                    sorted.partition_point(|&y| v[y as usize] < lo),
                    sorted.partition_point(|&y| v[y as usize] <= hi),
                )
            }
            Probe::Code(c) => (
                sorted.partition_point(|&y| c[y as usize] < c[x]),
                sorted.partition_point(|&y| c[y as usize] <= c[x]),
            ),
            Probe::All => (0, sorted.len()),
        }
    }
}

/// Slack on numeric run bounds so that rounding in `v ± r` never drops a
/// true neighbor.
const WINDOW_SLACK: f64 = 1e-9;

/// Work counters for one engine call.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Work {
    pub samples: u64,
    pub granules: u64,
    pub pairs: u64,
}

impl std::ops::AddAssign for Work {
    fn add_assign(&mut self, rhs: Work) {
        self.samples += rhs.samples;
        self.granules += rhs.granules;
        self.pairs += rhs.pairs;
    }
}

/// Outcome of evaluating one candidate attribute.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub(crate) struct Eval {
    /// Undecided samples that become consistent under `R + a`.
    pub gain: usize,
    /// Those samples, sorted.
    pub consistent: Vec<usize>,
    /// Whether `a` splits some undecided block or shrinks some undecided
    /// granule within the undecided region. Only computed when tracked.
    pub refines: bool,
    /// Undecided samples whose block/granule `a` changes (the active
    /// region), when collected.
    pub active: Vec<usize>,
    pub work: Work,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct EvalOptions {
    /// Compute `refines` (and allow collecting the active region).
    pub track: bool,
    /// Collect the active region into `Eval::active`.
    pub collect: bool,
    /// Skip samples that are already consistent.
    pub undecided_only: bool,
}

#[derive(Debug, Clone)]
struct Blocks {
    blocks: Vec<Vec<u32>>,
    pure: Vec<bool>,
    block_of: Vec<u32>,
}

/// Where to enumerate candidates for `N_R(x)`: a run of one attribute's
/// sorted members, or the whole universe while `R = ∅`.
#[derive(Debug, Clone, Copy)]
struct Run {
    attr: u32,
    start: u32,
    end: u32,
}

const WHOLE: u32 = u32::MAX;

impl Run {
    fn len(&self) -> usize {
        (self.end - self.start) as usize
    }
}

#[derive(Debug, Clone)]
struct Granules {
    /// Evaluation universe, ascending.
    members: Vec<u32>,
    in_universe: Vec<bool>,
    pure: Vec<bool>,
    n_pure: usize,
    selected: Vec<AttrId>,
    /// Members sorted by each attribute.
    sorted: Vec<Vec<u32>>,
    /// Per sample, the shortest run among the selected attributes.
    pivot: Vec<Run>,
}

#[derive(Debug, Clone)]
enum Kind {
    Blocks(Blocks),
    Granules(Granules),
}

#[derive(Debug, Clone)]
pub(crate) struct Engine {
    kind: Kind,
    relation: Relation,
    shrink: bool,
}

fn label_pure(d: &[u32], members: impl IntoIterator<Item = u32>) -> bool {
    let mut it = members.into_iter();
    match it.next() {
        None => true,
        Some(first) => {
            let l = d[first as usize];
            it.all(|y| d[y as usize] == l)
        }
    }
}

impl Engine {
    /// Structure of the full universe under `R = ∅`. When `shrink` is set,
    /// consistent samples are removed from the universe as they appear.
    pub fn new(sys: &DecisionSystem, relation: Relation, shrink: bool) -> Self {
        let n = sys.n_samples();
        let all_pure = sys.n_classes() == 1;
        let members: Vec<u32> = if shrink && all_pure {
            Vec::new()
        } else {
            (0..n as u32).collect()
        };
        let kind = match relation {
            Relation::Equivalence => {
                let mut block_of = vec![NOT_PRESENT; n];
                for &x in &members {
                    block_of[x as usize] = 0;
                }
                let (blocks, pure) = if members.is_empty() {
                    (Vec::new(), Vec::new())
                } else {
                    (vec![members], vec![all_pure])
                };
                Kind::Blocks(Blocks {
                    blocks,
                    pure,
                    block_of,
                })
            }
            Relation::Neighborhood(_) => Kind::Granules(Granules::new(sys, &relation, members, all_pure)),
        };
        Engine {
            kind,
            relation,
            shrink,
        }
    }

    /// Number of samples in the evaluation universe.
    pub fn universe_len(&self) -> usize {
        match &self.kind {
            Kind::Blocks(b) => b.blocks.iter().map(Vec::len).sum(),
            Kind::Granules(g) => g.members.len(),
        }
    }

    /// Evaluates candidate `a` over the whole universe, or over the
    /// universe members of `scope` when given.
    pub fn evaluate(&self, sys: &DecisionSystem, a: AttrId, scope: Option<&SampleSet>, opts: EvalOptions) -> Eval {
        match &self.kind {
            Kind::Blocks(b) => b.evaluate(sys, a, scope, opts),
            Kind::Granules(g) => g.evaluate(sys, &self.relation, a, scope, opts),
        }
    }

    /// Adds `a` to `R`. `consistent` is the `Eval::consistent` of an
    /// evaluation of `a` against the current state, when one is at hand.
    /// Returns the samples that became consistent.
    pub fn commit(&mut self, sys: &DecisionSystem, a: AttrId, consistent: Option<&[usize]>) -> (Vec<usize>, Work) {
        match &mut self.kind {
            Kind::Blocks(b) => b.commit(sys, a, self.shrink),
            Kind::Granules(g) => g.commit(sys, &self.relation, a, consistent, self.shrink),
        }
    }
}

impl Blocks {
    fn scoped_blocks(&self, scope: Option<&SampleSet>) -> Vec<usize> {
        match scope {
            None => (0..self.blocks.len()).collect(),
            Some(s) => {
                let mut ids: Vec<usize> = s
                    .iter()
                    .map(|x| self.block_of[x])
                    .filter(|&b| b != NOT_PRESENT)
                    .map(|b| b as usize)
                    .collect();
                ids.sort_unstable();
                ids.dedup();
                ids
            }
        }
    }

    fn evaluate(&self, sys: &DecisionSystem, a: AttrId, scope: Option<&SampleSet>, opts: EvalOptions) -> Eval {
        let levels = sys.column(a).levels();
        let d = sys.decision();
        let mut out = Eval::default();
        let mut scratch: Vec<(u32, u32, u32)> = Vec::new();
        for id in self.scoped_blocks(scope) {
            let block = &self.blocks[id];
            let was_pure = self.pure[id];
            if opts.undecided_only && was_pure {
                continue;
            }
            out.work.samples += block.len() as u64;
            out.work.granules += 1;
            out.work.pairs += block.len() as u64;
            if block.len() == 1 {
                if !was_pure {
                    out.gain += 1;
                    out.consistent.push(block[0] as usize);
                }
                continue;
            }
            scratch.clear();
            scratch.extend(block.iter().map(|&x| (levels[x as usize], d[x as usize], x)));
            scratch.sort_unstable();
            let mut groups = 0usize;
            for group in scratch.chunk_by(|l, r| l.0 == r.0) {
                groups += 1;
                if !was_pure && group.iter().all(|g| g.1 == group[0].1) {
                    out.gain += group.len();
                    out.consistent.extend(group.iter().map(|g| g.2 as usize));
                }
            }
            if groups > 1 && !was_pure {
                out.refines = true;
                if opts.collect {
                    out.active.extend(block.iter().map(|&x| x as usize));
                }
            }
        }
        out.active.sort_unstable();
        out.consistent.sort_unstable();
        out
    }

    fn commit(&mut self, sys: &DecisionSystem, a: AttrId, shrink: bool) -> (Vec<usize>, Work) {
        let levels = sys.column(a).levels();
        let d = sys.decision();
        let mut work = Work::default();
        let mut newly = Vec::new();
        let mut blocks = Vec::with_capacity(self.blocks.len());
        let mut pure = Vec::with_capacity(self.blocks.len());
        for (block, &was_pure) in self.blocks.iter().zip(&self.pure) {
            work.samples += block.len() as u64;
            work.granules += 1;
            work.pairs += block.len() as u64;
            let keyed: Vec<usize> = block.iter().map(|&x| x as usize).collect();
            for group in crate::granulation::split_by_key(&keyed, |x| levels[x]) {
                let members: Vec<u32> = group.iter().map(|x| x as u32).collect();
                let is_pure = was_pure || label_pure(d, members.iter().copied());
                if is_pure && !was_pure {
                    newly.extend(group.iter());
                }
                if shrink && is_pure {
                    for &x in &members {
                        self.block_of[x as usize] = NOT_PRESENT;
                    }
                    continue;
                }
                for &x in &members {
                    self.block_of[x as usize] = blocks.len() as u32;
                }
                blocks.push(members);
                pure.push(is_pure);
            }
        }
        self.blocks = blocks;
        self.pure = pure;
        newly.sort_unstable();
        (newly, work)
    }
}

impl Granules {
    fn new(sys: &DecisionSystem, relation: &Relation, members: Vec<u32>, all_pure: bool) -> Self {
        let n = sys.n_samples();
        let mut in_universe = vec![false; n];
        for &x in &members {
            in_universe[x as usize] = true;
        }
        let sorted = (0..sys.n_attributes())
            .into_par_iter()
            .map(|a| Probe::new(sys, relation, a).sort(&members))
            .collect();
        let whole = Run {
            attr: WHOLE,
            start: 0,
            end: members.len() as u32,
        };
        Granules {
            n_pure: if all_pure { members.len() } else { 0 },
            members,
            in_universe,
            pure: vec![all_pure; n],
            selected: Vec::new(),
            sorted,
            pivot: vec![whole; n],
        }
    }

    fn run_slice(&self, run: Run) -> &[u32] {
        let source = if run.attr == WHOLE {
            &self.members
        } else {
            &self.sorted[run.attr as usize]
        };
        &source[run.start as usize..run.end as usize]
    }

    /// Recomputes the shortest run of every member over the selected
    /// attributes.
    fn refresh_pivots(&mut self, sys: &DecisionSystem, relation: &Relation) {
        let probes: Vec<(AttrId, Probe)> = self.selected.iter().map(|&p| (p, Probe::new(sys, relation, p))).collect();
        let sorted = &self.sorted;
        let whole = Run {
            attr: WHOLE,
            start: 0,
            end: self.members.len() as u32,
        };
        let runs: Vec<Run> = self
            .members
            .par_iter()
            .map(|&x| {
                probes
                    .iter()
                    .map(|&(p, probe)| {
                        let (s, e) = probe.run(&sorted[p], x as usize);
                        Run {
                            attr: p as u32,
                            start: s as u32,
                            end: e as u32,
                        }
                    })
                    .min_by_key(Run::len)
                    .unwrap_or(whole)
            })
            .collect();
        for (&x, run) in self.members.iter().zip(runs) {
            self.pivot[x as usize] = run;
        }
    }

    fn evaluate(
        &self,
        sys: &DecisionSystem,
        relation: &Relation,
        a: AttrId,
        scope: Option<&SampleSet>,
        opts: EvalOptions,
    ) -> Eval {
        let d = sys.decision();
        let probe_a = Probe::new(sys, relation, a);
        let probes_r: Vec<Probe> = self.selected.iter().map(|&p| Probe::new(sys, relation, p)).collect();
        let xs: Vec<usize> = match scope {
            None => self.members.iter().map(|&x| x as usize).collect(),
            Some(s) => s.iter().filter(|&x| self.in_universe[x]).collect(),
        };
        let check_pure = self.n_pure > 0;
        let mut out = Eval::default();
        for x in xs {
            let was_pure = self.pure[x];
            if opts.undecided_only && was_pure {
                continue;
            }
            let mut run = self.pivot[x];
            if !opts.track {
                // without tracking only N_{R+a}(x) matters, so a's run may
                // be the tighter one
                let (s, e) = probe_a.run(&self.sorted[a], x);
                if e - s < run.len() {
                    run = Run {
                        attr: a as u32,
                        start: s as u32,
                        end: e as u32,
                    };
                }
            }
            let label = d[x];
            let mut impure = false;
            let mut outside = false;
            let mut scanned = 0u64;
            for &y in self.run_slice(run) {
                let y = y as usize;
                scanned += 1;
                if !probes_r.iter().all(|p| p.hit(x, y)) {
                    continue;
                }
                if probe_a.hit(x, y) {
                    impure |= d[y] != label;
                } else if !check_pure || !self.pure[y] {
                    outside = true;
                }
                if impure && (outside || !opts.track) {
                    break;
                }
            }
            out.work.samples += 1;
            out.work.granules += 1;
            out.work.pairs += scanned;
            if !impure && !was_pure {
                out.gain += 1;
                out.consistent.push(x);
            }
            if outside && !was_pure {
                out.refines = true;
                if opts.collect {
                    out.active.push(x);
                }
            }
        }
        out.active.sort_unstable();
        out.consistent.sort_unstable();
        out
    }

    fn commit(
        &mut self,
        sys: &DecisionSystem,
        relation: &Relation,
        a: AttrId,
        consistent: Option<&[usize]>,
        shrink: bool,
    ) -> (Vec<usize>, Work) {
        let (newly, work) = match consistent {
            Some(c) => (c.to_vec(), Work::default()),
            None => {
                let opts = EvalOptions {
                    undecided_only: true,
                    ..EvalOptions::default()
                };
                let e = self.evaluate(sys, relation, a, None, opts);
                (e.consistent, e.work)
            }
        };
        self.selected.push(a);
        for &x in &newly {
            debug_assert!(self.in_universe[x] && !self.pure[x]);
            self.pure[x] = true;
        }
        self.n_pure += newly.len();
        if shrink && !newly.is_empty() {
            for &x in &newly {
                self.in_universe[x] = false;
            }
            let keep = &self.in_universe;
            self.members.retain(|&x| keep[x as usize]);
            self.sorted
                .par_iter_mut()
                .for_each(|s| s.retain(|&x| keep[x as usize]));
            self.n_pure = 0;
        }
        self.refresh_pivots(sys, relation);
        (newly, work)
    }
}

/// `|POS_C(D)|` over the whole universe, with the work spent.
pub(crate) fn full_positive_size(sys: &DecisionSystem, relation: &Relation) -> (usize, Work) {
    let n = sys.n_samples();
    let attrs = sys.all_attributes();
    match relation {
        Relation::Equivalence => {
            let p = crate::granulation::partition(sys, &sys.all_samples(), &attrs).expect("valid attributes");
            let pos = crate::granulation::positive_region_classic(&p, sys);
            let work = Work {
                samples: n as u64,
                granules: p.len() as u64,
                pairs: (n * attrs.len()) as u64,
            };
            (pos.len(), work)
        }
        Relation::Neighborhood(_) => {
            let d = sys.decision();
            let members: Vec<u32> = (0..n as u32).collect();
            let probes: Vec<Probe> = attrs.iter().map(|&a| Probe::new(sys, relation, a)).collect();
            // pivot on the attribute with the shortest runs, then confirm
            // candidates on every attribute
            let (pivot_probe, pivot) = probes
                .iter()
                .map(|&p| (p, p.sort(&members)))
                .min_by_key(|(p, sorted)| members.iter().map(|&x| {
                    let (s, e) = p.run(sorted, x as usize);
                    e - s
                }).sum::<usize>())
                .unwrap_or_else(|| (Probe::All, members.clone()));
            let results: Vec<(bool, u64)> = (0..n)
                .into_par_iter()
                .map(|x| {
                    let mut scanned = 0u64;
                    let (s, e) = pivot_probe.run(&pivot, x);
                    for &y in &pivot[s..e] {
                        let y = y as usize;
                        scanned += 1;
                        if d[y] != d[x] && probes.iter().all(|p| p.hit(x, y)) {
                            return (false, scanned);
                        }
                    }
                    (true, scanned)
                })
                .collect();
            let work = Work {
                samples: n as u64,
                granules: n as u64,
                pairs: results.iter().map(|r| r.1).sum(),
            };
            (results.iter().filter(|r| r.0).count(), work)
        }
    }
}
