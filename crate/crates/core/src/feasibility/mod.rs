//! Bounded-cost feasibility: can the tree be partitioned into at most `k`
//! connected blocks, each served by one sink, with every block cost at most
//! a threshold?
//!
//! The solver grows two kinds of certainty from the leaves in: the *peaking
//! criterion* (PC) absorbs a sink-free branch upward when it can still be
//! served from above, and places a sink at its root when it cannot; the
//! *reaching criterion* (RC) marks a vertex once it can evacuate to an
//! already-placed sink below, and cuts off a region that is collectively
//! self-sufficient when the vertex above it cannot reach any of its sinks.
//! Both decisions are irrevocable, which is what keeps the oracle-call
//! budget linear.

mod recursive;

use crate::error::{Error, Result};
use crate::oracle::{Cost, OracleHandle};
use crate::tree::{Instance, VertexId, VertexSet};
use std::collections::VecDeque;

/// Resolves threshold comparisons `a <= T`. A plain fixed threshold for
/// feasibility tests; the optimizer substitutes an interfering policy that
/// pins `T` down while the solver runs.
pub trait ThresholdPolicy {
    fn le(&mut self, a: Cost) -> Result<bool>;

    /// Offered a batch of upcoming comparison values at once, so an
    /// interfering policy can narrow its margin with a binary search
    /// instead of probing one value at a time.
    fn narrow_layer(&mut self, _candidates: &[Cost]) -> Result<()> {
        Ok(())
    }

    /// The concrete threshold when there is one (used by debug checks).
    fn fixed(&self) -> Option<Cost> {
        None
    }
}

/// The ordinary policy: compare against a known threshold.
pub struct FixedThreshold(pub Cost);

impl ThresholdPolicy for FixedThreshold {
    fn le(&mut self, a: Cost) -> Result<bool> {
        Ok(a <= self.0)
    }

    fn fixed(&self) -> Option<Cost> {
        Some(self.0)
    }
}

/// Oracle calls by solver phase. Only calls made by the solver itself are
/// tallied here; debug re-verification is not.
#[derive(Debug, Default, Clone, Copy)]
pub struct CallStats {
    pub pc: u64,
    pub rc: u64,
    pub degenerate: u64,
}

impl CallStats {
    pub fn total(&self) -> u64 {
        self.pc + self.rc + self.degenerate
    }
}

/// A full solution: sink locations plus the partition into blocks, each
/// block a connected vertex set served by the sink recorded with it.
#[derive(Debug, Clone)]
pub struct Configuration {
    pub sinks: VertexSet,
    pub blocks: Vec<(VertexSet, VertexId)>,
}

/// Verdict of a feasibility run.
#[derive(Debug, Clone)]
pub enum Outcome {
    Feasible(Configuration),
    Infeasible,
}

impl Outcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Outcome::Feasible(_))
    }

    pub fn configuration(&self) -> Option<&Configuration> {
        match self {
            Outcome::Feasible(c) => Some(c),
            Outcome::Infeasible => None,
        }
    }
}

/// Working-tree snapshot taken every time the PC queue drains, for
/// RC-viability auditing.
#[derive(Debug, Clone)]
pub struct PhaseSnapshot {
    pub alive: VertexSet,
    pub sinks: VertexSet,
    pub marked_pc: VertexSet,
}

enum Phase {
    Pc,
    Rc,
    Degenerate,
}

/// All mutable state of one bounded-cost run. Deletions from the working
/// tree are logical: `alive` flags shrink, the instance itself never
/// changes.
pub struct WorkingState<'a> {
    pub(crate) inst: &'a Instance,
    pub(crate) handle: &'a OracleHandle<'a>,
    pub(crate) thr: &'a mut dyn ThresholdPolicy,
    pub(crate) alive: VertexSet,
    pub(crate) sinks_out: VertexSet,
    pub(crate) marked_pc: VertexSet,
    pub(crate) marked_rc: VertexSet,
    witness: Vec<Option<VertexId>>,
    rejected: VertexSet,
    q_pc: VecDeque<(VertexId, VertexId)>,
    q_rc: VecDeque<VertexId>,
    in_q_pc: VertexSet,
    in_q_rc: VertexSet,
    blocks: Vec<(VertexSet, VertexId)>,
    budget: usize,
    fixed_sinks: bool,
    rc_mark_order: Vec<VertexId>,
    dirty: bool,
    pub stats: CallStats,
    pub record_phases: bool,
    pub phase_log: Vec<PhaseSnapshot>,
    pub debug_checks: bool,
}

impl<'a> WorkingState<'a> {
    /// State for a bounded-cost run with a sink budget of `k`.
    pub fn new(
        inst: &'a Instance,
        handle: &'a OracleHandle<'a>,
        thr: &'a mut dyn ThresholdPolicy,
        k: usize,
    ) -> Self {
        let n = inst.n();
        let mut st = WorkingState {
            inst,
            handle,
            thr,
            alive: VertexSet::full(n),
            sinks_out: VertexSet::empty(n),
            marked_pc: VertexSet::empty(n),
            marked_rc: VertexSet::empty(n),
            witness: vec![None; n],
            rejected: VertexSet::empty(n),
            q_pc: VecDeque::new(),
            q_rc: VecDeque::new(),
            in_q_pc: VertexSet::empty(n),
            in_q_rc: VertexSet::empty(n),
            blocks: Vec::new(),
            budget: k,
            fixed_sinks: false,
            rc_mark_order: Vec::new(),
            dirty: true,
            stats: CallStats::default(),
            record_phases: false,
            phase_log: Vec::new(),
            debug_checks: false,
        };
        st.seed();
        st
    }

    /// State for a run whose sinks are given up front and may not move;
    /// only the reaching criterion operates. Every sink must be a leaf.
    pub fn with_sinks(
        inst: &'a Instance,
        handle: &'a OracleHandle<'a>,
        thr: &'a mut dyn ThresholdPolicy,
        sinks: &VertexSet,
    ) -> Result<Self> {
        if sinks.is_empty() {
            return Err(Error::NoSinks);
        }
        for s in sinks.iter() {
            if s >= inst.n() {
                return Err(Error::BadVertex(s, inst.n()));
            }
            if inst.degree(s) > 1 {
                return Err(Error::SinkNotLeaf(s));
            }
        }
        let mut st = Self::new(inst, handle, thr, sinks.len());
        st.fixed_sinks = true;
        st.sinks_out = sinks.clone();
        st.q_pc.clear();
        st.in_q_pc = VertexSet::empty(inst.n());
        st.q_rc.clear();
        st.in_q_rc = VertexSet::empty(inst.n());
        st.seed();
        Ok(st)
    }

    pub fn alive(&self) -> &VertexSet {
        &self.alive
    }

    pub fn sinks(&self) -> &VertexSet {
        &self.sinks_out
    }

    pub fn alive_sinks(&self) -> VertexSet {
        let mut s = self.sinks_out.clone();
        s.intersect_with(&self.alive);
        s
    }

    pub fn marked_pc(&self) -> &VertexSet {
        &self.marked_pc
    }

    pub fn marked_rc(&self) -> &VertexSet {
        &self.marked_rc
    }

    pub fn witness_of(&self, v: VertexId) -> Option<VertexId> {
        if self.sinks_out.contains(v) {
            Some(v)
        } else {
            self.witness[v]
        }
    }

    pub fn blocks(&self) -> &[(VertexSet, VertexId)] {
        &self.blocks
    }

    fn oracle(&mut self, set: &VertexSet, v: VertexId, phase: Phase) -> Cost {
        match phase {
            Phase::Pc => self.stats.pc += 1,
            Phase::Rc => self.stats.rc += 1,
            Phase::Degenerate => self.stats.degenerate += 1,
        }
        self.handle.cost(self.inst, set, v)
    }

    fn le(&mut self, a: Cost) -> Result<bool> {
        if a == Cost::Infinite {
            return Ok(false);
        }
        self.thr.le(a)
    }

    /// A neighbor blocks `w` while the solver still owes a decision about
    /// the subtree behind it.
    fn is_blocking(&self, y: VertexId, w: VertexId) -> bool {
        if !self.alive.contains(y) {
            return false;
        }
        let side = self
            .inst
            .detached_subtree(&self.alive, y, w)
            .expect("blocking check on adjacent alive vertices");
        self.side_undecided(&side)
    }

    fn blocking_neighbors(&self, w: VertexId) -> Vec<VertexId> {
        self.inst
            .neighbors(w)
            .filter(|&y| self.alive.contains(y) && self.is_blocking(y, w))
            .collect()
    }

    /// A side is decided once every vertex in it is a sink or carries a
    /// mark; only then is its fate (and the bulk paths through it) settled.
    fn side_undecided(&self, side: &VertexSet) -> bool {
        side.iter()
            .any(|x| !self.marked_pc.contains(x) && !self.sinks_out.contains(x))
    }

    /// Scan gate for `v`: at most one of its sides may still be undecided,
    /// and at least one decided side must hold a live sink. Returns the
    /// decided sink-holding sides (as adjacent vertex plus side set).
    pub(crate) fn rc_ready(&self, v: VertexId) -> Option<Vec<(VertexId, VertexSet)>> {
        if !self.alive.contains(v) || self.sinks_out.contains(v) || self.marked_rc.contains(v) {
            return None;
        }
        let alive_sinks = self.alive_sinks();
        let mut undecided = 0usize;
        let mut sink_sides = Vec::new();
        for y in self.inst.neighbors(v) {
            if !self.alive.contains(y) {
                continue;
            }
            let side = self
                .inst
                .detached_subtree(&self.alive, y, v)
                .expect("adjacent alive");
            if self.side_undecided(&side) {
                undecided += 1;
                if undecided > 1 {
                    return None;
                }
            } else if side.intersection_count(&alive_sinks) > 0 {
                sink_sides.push((y, side));
            }
        }
        if sink_sides.is_empty() {
            return None;
        }
        Some(sink_sides)
    }

    /// (Re-)classifies `w` after a neighboring decision: enqueue an RC pair
    /// for every decided sink-holding side, and a PC pair when exactly one
    /// undecided direction remains with no sink visible sideways.
    fn consider_frontier(&mut self, w: VertexId) {
        if !self.alive.contains(w)
            || self.sinks_out.contains(w)
            || self.marked_pc.contains(w)
        {
            return;
        }
        let alive_sinks = self.alive_sinks();
        let nbrs: Vec<VertexId> = self
            .inst
            .neighbors(w)
            .filter(|&y| self.alive.contains(y))
            .collect();
        if !self.in_q_rc.contains(w) && self.rc_ready(w).is_some() {
            self.in_q_rc.insert(w);
            self.q_rc.push_back(w);
        }
        let blockers = self.blocking_neighbors(w);
        if let [b] = blockers[..] {
            let bside = self
                .inst
                .detached_subtree(&self.alive, b, w)
                .expect("blocker is adjacent and alive");
            let mut outside = alive_sinks;
            outside.difference_with(&bside);
            if outside.is_empty() && !self.in_q_pc.contains(w) {
                self.in_q_pc.insert(w);
                self.q_pc.push_back((w, b));
            }
        } else if blockers.is_empty() {
            // Every neighbor is decided, yet `w` itself is not: `w` heads a
            // branch that lost its sinks to earlier removals. Absorb it
            // toward the single direction that still sees sinks, so the
            // working tree stays viable for further reaching-criterion work.
            let mut sink_dirs = nbrs.iter().copied().filter(|&y| {
                let side = self
                    .inst
                    .detached_subtree(&self.alive, y, w)
                    .expect("adjacent alive");
                side.intersection_count(&alive_sinks) > 0
            });
            if let (Some(b), None) = (sink_dirs.next(), sink_dirs.next()) {
                if self.marked_rc.contains(b) && !self.in_q_pc.contains(w) {
                    self.in_q_pc.insert(w);
                    self.q_pc.push_back((w, b));
                }
            }
        }
    }

    fn seed(&mut self) {
        for v in 0..self.inst.n() {
            self.consider_frontier(v);
        }
    }

    /// Moves the block `set` (which must contain the single sink `s`) into
    /// the finished partition, merging with an earlier block of the same
    /// sink.
    pub fn commit(&mut self, set: VertexSet, s: VertexId) -> Result<()> {
        if !set.contains(s) || !self.sinks_out.contains(s) {
            return Err(Error::NoSinkInBlock);
        }
        if set.intersection_count(&self.sinks_out) > 1 {
            return Err(Error::TwoSinksInBlock);
        }
        if let Some((b, _)) = self.blocks.iter_mut().find(|(_, bs)| *bs == s) {
            b.union_with(&set);
        } else {
            self.blocks.push((set, s));
        }
        Ok(())
    }

    /// Peaking criterion at the pair `(u, v)`: `u`'s far side is a decided,
    /// sink-free branch. Either the branch plus `v` is still servable from
    /// `v` (absorb: mark `u`), or a sink is forced at `u`. Returns `false`
    /// when the sink budget is exhausted.
    pub fn pc_check(&mut self, u: VertexId, v: VertexId) -> Result<bool> {
        if !self.alive.contains(u)
            || !self.alive.contains(v)
            || self.marked_pc.contains(u)
            // A reaching-marked target is still a valid absorption point
            // (it restores viability after a removal); a merely absorbed
            // one is not, it already drains elsewhere.
            || (self.marked_pc.contains(v) && !self.marked_rc.contains(v))
            || self.sinks_out.contains(u)
        {
            return Ok(true);
        }
        if self.sinks_out.contains(v) {
            // The target became a sink since this pair was queued: `u` can
            // possibly evacuate into it, which is the reaching criterion's
            // call to make.
            self.consider_frontier(u);
            return Ok(true);
        }
        let side = self.inst.detached_subtree(&self.alive, u, v)?;
        if side.intersection_count(&self.sinks_out) > 0 {
            // A sink appeared below since this pair was queued; it is now
            // RC territory.
            self.consider_frontier(u);
            return Ok(true);
        }
        if self.debug_checks {
            self.audit_absorbable(&side, u)?;
        }
        let mut with_v = side.clone();
        with_v.insert(v);
        let a = self.oracle(&with_v, v, Phase::Pc);
        if self.le(a)? {
            self.marked_pc.insert(u);
            self.dirty = true;
            self.consider_frontier(v);
            Ok(true)
        } else if self.fixed_sinks {
            // The branch cannot drain into `v` in time, and by path
            // monotonicity no farther sink can do better; with the sinks
            // fixed there is no rescue.
            Ok(false)
        } else {
            self.place_sink(u, side, v)
        }
    }

    /// Forced sink at `u` serving exactly the branch `side`.
    fn place_sink(&mut self, u: VertexId, side: VertexSet, beyond: VertexId) -> Result<bool> {
        self.sinks_out.insert(u);
        self.dirty = true;
        if self.sinks_out.len() > self.budget {
            return Ok(false);
        }
        self.commit(side.clone(), u)?;
        for x in side.iter() {
            if x != u {
                self.alive.remove(x);
            }
        }
        self.consider_frontier(beyond);
        Ok(true)
    }

    /// Reaching criterion at `v`: every sink in a decided side is a
    /// candidate witness; the first one whose bulk path from `v` stays in
    /// time marks `v`. If none does, each decided sink side is
    /// self-sufficient on its own: commit its blocks and drop it.
    pub fn rc_check(&mut self, v: VertexId) -> Result<bool> {
        let Some(sides) = self.rc_ready(v) else {
            return Ok(true);
        };
        for s in self.rc_candidates(&sides) {
            let bp = self
                .inst
                .bulk_path(&self.alive, &self.alive_sinks(), v, s)?;
            let a = self.oracle(&bp, s, Phase::Rc);
            if self.le(a)? {
                self.mark_rc(v, s);
                return Ok(true);
            }
            self.rejected.insert(s);
        }
        for (_, side) in sides {
            self.rc_fire(v, &side)?;
        }
        self.invalidate_pocket(v);
        self.consider_frontier(v);
        Ok(true)
    }

    /// Ascending unrejected live sinks across the given sides.
    pub(crate) fn rc_candidates(&self, sides: &[(VertexId, VertexSet)]) -> Vec<VertexId> {
        let alive_sinks = self.alive_sinks();
        let mut c: Vec<VertexId> = sides
            .iter()
            .flat_map(|(_, side)| side.iter())
            .filter(|&s| alive_sinks.contains(s) && !self.rejected.contains(s))
            .collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    fn mark_rc(&mut self, v: VertexId, witness: VertexId) {
        self.witness[v] = Some(witness);
        self.dirty = true;
        self.marked_rc.insert(v);
        self.marked_pc.insert(v);
        self.rc_mark_order.push(v);
        let nbrs: Vec<_> = self.inst.neighbors(v).collect();
        for y in nbrs {
            self.consider_frontier(y);
        }
    }

    /// RC fires: the side is a self-sufficient region; partition it by
    /// witnesses and drop it from the working tree.
    pub(crate) fn rc_fire(&mut self, v: VertexId, side: &VertexSet) -> Result<()> {
        if side
            .iter()
            .any(|x| !self.marked_pc.contains(x) && !self.sinks_out.contains(x))
        {
            // Part of the side is still undecided (typically a branch that
            // lost its sinks to an earlier removal and has not been
            // re-absorbed yet). Removing it now would commit blocks nobody
            // has certified; drop the pair, the rescan recreates it once
            // the side settles.
            return Ok(());
        }
        let root = side
            .iter()
            .find(|&r| self.inst.neighbors(v).any(|y| y == r))
            .ok_or_else(|| Error::Internal("fired side not adjacent".into()))?;
        self.partition_from_witnesses(root, side)?;
        for x in side.iter() {
            self.alive.remove(x);
        }
        self.dirty = true;
        Ok(())
    }

    /// After a removal, the region around `v` may have lost its last sink
    /// and become a sink-free branch hanging off the rest of the tree.
    /// Bulk paths recorded before that moment did not include the branch,
    /// so any witness whose peel would now sweep it is stale: unmark those
    /// vertices and let them be re-tested against the grown bulk paths.
    fn invalidate_pocket(&mut self, v: VertexId) {
        if !self.alive.contains(v) || self.sinks_out.contains(v) {
            return;
        }
        let alive_sinks = self.alive_sinks();
        if alive_sinks.is_empty() {
            return;
        }
        // Climb from `v` toward the sinks for as long as they all lie in a
        // single direction; the first vertex seeing sinks both ways (or a
        // sink itself) is where the sink-free branch attaches.
        let mut cur = v;
        let attach = loop {
            let mut dirs = self
                .inst
                .neighbors(cur)
                .filter(|&y| self.alive.contains(y))
                .filter(|&y| {
                    let side = self
                        .inst
                        .detached_subtree(&self.alive, y, cur)
                        .expect("adjacent alive");
                    side.intersection_count(&alive_sinks) > 0
                });
            let (Some(z), None) = (dirs.next(), dirs.next()) else {
                // Sinks in several directions: `cur` sits on the hub
                // structure, nothing became sink-free.
                return;
            };
            if self.sinks_out.contains(z) || !self.single_sink_direction(z, cur) {
                break z;
            }
            cur = z;
        };
        let stale: Vec<VertexId> = self
            .marked_rc
            .iter()
            .filter(|&x| self.alive.contains(x))
            .filter(|&x| {
                let s = self.witness[x].expect("marked vertices carry a witness");
                if !self.alive.contains(s) {
                    return true;
                }
                self.inst
                    .path_between(&self.alive, x, s)
                    .map(|p| p.contains(&attach))
                    .unwrap_or(true)
            })
            .collect();
        for x in stale {
            self.dirty = true;
            self.marked_rc.remove(x);
            self.marked_pc.remove(x);
            self.witness[x] = None;
        }
    }

    /// True when all alive sinks seen from `z` (ignoring the side toward
    /// `back`) lie in one direction, i.e. `z` still hangs off the hub.
    fn single_sink_direction(&self, z: VertexId, back: VertexId) -> bool {
        let mut dirs = self
            .inst
            .neighbors(z)
            .filter(|&y| y != back && self.alive.contains(y))
            .filter(|&y| {
                let side = self
                    .inst
                    .detached_subtree(&self.alive, y, z)
                    .expect("adjacent alive");
                side.intersection_count(&self.alive_sinks()) > 0
            });
        dirs.next().is_some() && dirs.next().is_none()
    }

    /// Decomposes `region` into blocks using the recorded witnesses: peel
    /// the bulk path from a witnessed root to its sink (sweeping up
    /// sink-free offshoots), then recurse into what remains. Every
    /// remaining component root must itself be witnessed.
    pub fn partition_from_witnesses(&mut self, root: VertexId, region: &VertexSet) -> Result<()> {
        let mut remaining = region.clone();
        let mut roots = vec![root];
        while let Some(r) = roots.pop() {
            if !remaining.contains(r) {
                continue;
            }
            let s = self.witness_of(r).ok_or(Error::MissingWitness(r))?;
            let path = self.inst.path_between(&remaining, r, s)?;
            let mut block = VertexSet::empty(self.inst.n());
            for &p in &path {
                block.insert(p);
            }
            let mut off = remaining.clone();
            off.difference_with(&block);
            let mut next_roots = Vec::new();
            for &p in &path {
                for c in self.inst.neighbors(p) {
                    if off.contains(c) && !block.contains(c) {
                        let comp = self.inst.component_of(&off, c);
                        if comp.intersection_count(&self.sinks_out) == 0 {
                            block.union_with(&comp);
                            off.difference_with(&comp);
                        } else {
                            next_roots.push(c);
                        }
                    }
                }
            }
            remaining.difference_with(&block);
            self.commit(block, s)?;
            next_roots.sort_unstable();
            roots.extend(next_roots);
        }
        Ok(())
    }

    /// Runs the solver to completion. `fast` switches the PC phase to the
    /// compartment recursion and RC to path binary search.
    pub fn run(&mut self, fast: bool) -> Result<Outcome> {
        let mut evaluated = std::collections::HashSet::new();
        let mut first = true;
        loop {
            if fast && !self.fixed_sinks && (first || !self.q_pc.is_empty()) {
                if !self.recursive_pc_pass(&mut evaluated)? {
                    return Ok(Outcome::Infeasible);
                }
            }
            first = false;
            // Drain PC pairs one at a time (in fast mode this is the
            // mop-up after the compartment recursion).
            while let Some((u, v)) = self.q_pc.pop_front() {
                self.in_q_pc.remove(u);
                if !self.pc_check(u, v)? {
                    return Ok(Outcome::Infeasible);
                }
            }
            if self.record_phases {
                self.phase_log.push(PhaseSnapshot {
                    alive: self.alive.clone(),
                    sinks: self.alive_sinks(),
                    marked_pc: self.marked_pc.clone(),
                });
            }
            if self.q_rc.is_empty() {
                // A decision can make a vertex several hops away ready (its
                // whole path to a sink just became decided); neighbor
                // notifications alone can miss it, so rescan everything
                // (no oracle calls) before giving up on the queues. Only
                // rescan after real state changes, otherwise a dropped
                // pair would be recreated forever.
                if self.dirty {
                    self.dirty = false;
                    self.seed();
                }
                if !self.q_pc.is_empty() {
                    continue;
                }
            }
            let Some(v) = self.q_rc.pop_front() else {
                break;
            };
            self.in_q_rc.remove(v);
            let ok = if fast {
                self.rc_binary_search(v)?
            } else {
                self.rc_check(v)?
            };
            if !ok {
                return Ok(Outcome::Infeasible);
            }
        }
        self.finalize()
    }

    /// Queues are empty: close out whatever is still alive.
    fn finalize(&mut self) -> Result<Outcome> {
        if self.alive.is_empty() {
            return self.into_outcome();
        }
        let alive_sinks = self.alive_sinks();
        if alive_sinks.is_empty() {
            if self.fixed_sinks {
                // The remaining region lost all its sinks: nobody can serve it.
                return Ok(Outcome::Infeasible);
            }
            // Degenerate finish: the whole remainder is sink-free and
            // absorbed; one sink somewhere in it must do.
            let members: Vec<_> = self.alive.iter().collect();
            for s in members {
                let whole = self.alive.clone();
                let a = self.oracle(&whole, s, Phase::Degenerate);
                if self.le(a)? {
                    self.sinks_out.insert(s);
                    if self.sinks_out.len() > self.budget {
                        return Ok(Outcome::Infeasible);
                    }
                    self.commit(whole, s)?;
                    self.alive = VertexSet::empty(self.inst.n());
                    return self.into_outcome();
                }
            }
            // No single sink serves the remainder. The greedy has already
            // spent the sinks the remainder cannot share, so the threshold
            // is infeasible. Under an interfered threshold this is the
            // normal ending: the virtual threshold sits just below the
            // optimum.
            return Ok(Outcome::Infeasible);
        }
        let root = self
            .rc_mark_order
            .iter()
            .rev()
            .copied()
            .find(|&v| self.alive.contains(v) && self.marked_rc.contains(v))
            .unwrap_or_else(|| alive_sinks.iter().next().unwrap());
        let region = self.alive.clone();
        match self.partition_from_witnesses(root, &region) {
            Ok(()) => {}
            Err(Error::MissingWitness(_)) if self.fixed_sinks => {
                // A stall with unresolved hub vertices means the given
                // sinks cannot make the threshold.
                return Ok(Outcome::Infeasible);
            }
            Err(e) => return Err(e),
        }
        self.alive = VertexSet::empty(self.inst.n());
        self.into_outcome()
    }

    fn into_outcome(&mut self) -> Result<Outcome> {
        Ok(Outcome::Feasible(Configuration {
            sinks: self.sinks_out.clone(),
            blocks: self.blocks.clone(),
        }))
    }

    /// Debug-only: the branch handed to a PC pair must already be fully
    /// absorbable on its own (queue invariant IVQ1).
    fn audit_absorbable(&mut self, side: &VertexSet, u: VertexId) -> Result<()> {
        let Some(t) = self.thr.fixed() else {
            return Ok(());
        };
        let a = self.handle.cost(self.inst, side, u);
        if a > t {
            return Err(Error::Internal(format!(
                "PC pair with non-absorbable branch at {u}"
            )));
        }
        Ok(())
    }
}

/// Feasibility of threshold `t` with at most `k` sinks, by the
/// leaf-to-root iterative solver. Calls the oracle O(n) times.
pub fn bounded_cost_iterative(
    inst: &Instance,
    handle: &OracleHandle,
    t: Cost,
    k: usize,
) -> Result<Outcome> {
    let mut thr = FixedThreshold(t);
    WorkingState::new(inst, handle, &mut thr, k).run(false)
}

/// Same verdict as [`bounded_cost_iterative`] (configurations may differ),
/// via the compartment recursion for PC and path binary search for RC;
/// calls the oracle O(k polylog n) times on typical instances.
pub fn bounded_cost_fast(
    inst: &Instance,
    handle: &OracleHandle,
    t: Cost,
    k: usize,
) -> Result<Outcome> {
    let mut thr = FixedThreshold(t);
    WorkingState::new(inst, handle, &mut thr, k).run(true)
}

/// Feasibility of threshold `t` when the sinks are fixed (all must be
/// leaves); only the reaching criterion runs.
pub fn fixed_sink_feasible(
    inst: &Instance,
    handle: &OracleHandle,
    sinks: &VertexSet,
    t: Cost,
) -> Result<Outcome> {
    let mut thr = FixedThreshold(t);
    WorkingState::with_sinks(inst, handle, &mut thr, sinks)?.run(false)
}

/// Checks the invariant that makes the reaching criterion sound after a
/// peaking phase: every fully marked branch hanging off the hub structure
/// must be absorbable into its attachment vertex within `t`. Branches with
/// unmarked vertices are skipped — they may still get sinks of their own.
/// Returns the offending attachment vertex when a branch cannot drain.
pub fn rc_viable(
    inst: &Instance,
    handle: &OracleHandle,
    snap: &PhaseSnapshot,
    t: Cost,
) -> Result<Option<VertexId>> {
    if snap.sinks.is_empty() || snap.alive.is_empty() {
        return Ok(None);
    }
    let hs = inst.hub_structure(&snap.alive, &snap.sinks)?;
    let mut rest = snap.alive.clone();
    rest.difference_with(&hs.hub_tree);
    let mut seen = VertexSet::empty(inst.n());
    for v in rest.iter() {
        if seen.contains(v) {
            continue;
        }
        let comp = inst.component_of(&rest, v);
        seen.union_with(&comp);
        if !comp.is_subset(&snap.marked_pc) {
            continue;
        }
        let attach = comp
            .iter()
            .flat_map(|x| inst.neighbors(x))
            .find(|y| hs.hub_tree.contains(*y))
            .ok_or_else(|| Error::Internal("dangling branch".into()))?;
        let mut branch = comp.clone();
        branch.insert(attach);
        if handle.cost(inst, &branch, attach) > t {
            return Ok(Some(attach));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brute::BruteForcer;
    use crate::gen;
    use crate::oracle::EvacOracle;

    fn vs(n: usize, items: &[usize]) -> VertexSet {
        VertexSet::from_iter_n(n, items.iter().copied())
    }

    fn blocks_as_set(cfg: &Configuration) -> Vec<(Vec<usize>, usize)> {
        let mut v: Vec<_> = cfg
            .blocks
            .iter()
            .map(|(b, s)| (b.iter().collect::<Vec<_>>(), *s))
            .collect();
        v.sort();
        v
    }

    #[test]
    fn pc_check_absorbs_or_places() {
        let inst = gen::star3();
        let handle = OracleHandle::new(&EvacOracle);
        let mut thr = FixedThreshold(Cost::Finite(2));
        let mut st = WorkingState::new(&inst, &handle, &mut thr, 1);
        // Two people at leaf 1 drain to the center by step 2: absorb.
        assert!(st.pc_check(1, 0).unwrap());
        assert!(st.marked_pc().contains(1));
        assert!(st.sinks().is_empty());

        let inst = gen::path(3, 1);
        let mut thr = FixedThreshold(Cost::Finite(0));
        let mut st = WorkingState::new(&inst, &handle, &mut thr, 3);
        // Nothing can move in zero time: a sink is forced at the leaf.
        assert!(st.pc_check(0, 1).unwrap());
        assert!(st.sinks().contains(0));
        assert_eq!(blocks_as_set_raw(st.blocks()), vec![(vec![0], 0)]);
    }

    fn blocks_as_set_raw(blocks: &[(VertexSet, VertexId)]) -> Vec<(Vec<usize>, usize)> {
        let mut v: Vec<_> = blocks
            .iter()
            .map(|(b, s)| (b.iter().collect::<Vec<_>>(), *s))
            .collect();
        v.sort();
        v
    }

    #[test]
    fn bounded_cost_marks_both_ends_of_a_cheap_path() {
        let inst = gen::path(3, 1);
        let handle = OracleHandle::new(&EvacOracle);
        let mut thr = FixedThreshold(Cost::Finite(2));
        let mut st = WorkingState::new(&inst, &handle, &mut thr, 1);
        let out = st.run(false).unwrap();
        // Both leaves were absorbed; the degenerate finish placed one sink.
        assert!(st.marked_pc().contains(0) && st.marked_pc().contains(2));
        let cfg = out.configuration().expect("feasible");
        assert_eq!(cfg.sinks, vs(3, &[0]));
        cfg.verify(&inst, &handle, 2).unwrap();
    }

    #[test]
    fn zero_threshold_needs_a_sink_everywhere() {
        let inst = gen::path(7, 7);
        let handle = OracleHandle::new(&EvacOracle);
        for fast in [false, true] {
            let mut thr = FixedThreshold(Cost::Finite(0));
            let mut st = WorkingState::new(&inst, &handle, &mut thr, 7);
            let out = st.run(fast).unwrap();
            let cfg = out.configuration().expect("feasible with 7 sinks");
            assert_eq!(cfg.sinks, VertexSet::full(7));
            cfg.verify(&inst, &handle, 0).unwrap();

            let mut thr = FixedThreshold(Cost::Finite(0));
            let mut st = WorkingState::new(&inst, &handle, &mut thr, 6);
            assert!(!st.run(fast).unwrap().is_feasible());
        }
    }

    #[test]
    fn reaching_criterion_marks_or_cuts() {
        let inst = gen::path(4, 1);
        let handle = OracleHandle::new(&EvacOracle);
        let sinks = vs(4, &[0]);
        // Serving all of path(4) from its end takes 3 steps.
        let out = fixed_sink_feasible(&inst, &handle, &sinks, Cost::Finite(3)).unwrap();
        let cfg = out.configuration().expect("feasible at 3");
        assert_eq!(blocks_as_set(&cfg), vec![(vec![0, 1, 2, 3], 0)]);
        // At 2 the far vertices cannot reach; the sink's region is cut off
        // and the rest strands.
        let out = fixed_sink_feasible(&inst, &handle, &sinks, Cost::Finite(2)).unwrap();
        assert!(!out.is_feasible());
    }

    #[test]
    fn rc_witness_is_recorded() {
        let inst = gen::path(4, 1);
        let handle = OracleHandle::new(&EvacOracle);
        let mut thr = FixedThreshold(Cost::Finite(3));
        let mut st = WorkingState::with_sinks(&inst, &handle, &mut thr, &vs(4, &[0])).unwrap();
        st.run(false).unwrap();
        // The far vertices are absorbed toward the sink; the vertex beside
        // the sink carries the reaching witness for the whole path.
        assert!(st.marked_pc().contains(3));
        assert!(st.marked_rc().contains(1));
        assert_eq!(st.witness_of(1), Some(0));
    }

    #[test]
    fn witness_partition_peels_bulk_paths() {
        let inst = gen::star3();
        let handle = OracleHandle::new(&EvacOracle);
        let sinks = vs(4, &[1, 2, 3]);
        let out = fixed_sink_feasible(&inst, &handle, &sinks, Cost::Finite(2)).unwrap();
        let cfg = out.configuration().expect("feasible");
        assert_eq!(
            blocks_as_set(&cfg),
            vec![(vec![0, 1], 1), (vec![2], 2), (vec![3], 3)]
        );
    }

    #[test]
    fn verdicts_match_brute_force_at_every_threshold() {
        let handle = OracleHandle::new(&EvacOracle);
        for seed in 0..30u64 {
            let n = 2 + (seed as usize * 7) % 8;
            let inst = gen::random_instance(
                n,
                1,
                gen::Shape::Random,
                seed,
                gen::AttrRanges::default(),
            );
            for k in 1..=3usize {
                let mut bf = BruteForcer::new(&handle);
                let (tstar, _, _) = bf.optimal(&inst, k).unwrap();
                let tstar = tstar.finite().unwrap();
                for t in 0..=tstar + 2 {
                    let want = t >= tstar;
                    for fast in [false, true] {
                        let mut thr = FixedThreshold(Cost::Finite(t));
                        let mut st = WorkingState::new(&inst, &handle, &mut thr, k);
                        st.debug_checks = !fast;
                        let out = st.run(fast).unwrap();
                        assert_eq!(
                            out.is_feasible(),
                            want,
                            "seed {seed} n {n} k {k} t {t} fast {fast} (t* = {tstar})"
                        );
                        assert!(
                            st.stats.total() <= 4 * n as u64,
                            "budget blown: seed {seed} n {n} k {k} t {t} fast {fast}: {:?}",
                            st.stats
                        );
                        if let Outcome::Feasible(cfg) = out {
                            cfg.verify(&inst, &handle, t).unwrap();
                            assert!(cfg.sinks.len() <= k);
                        }
                    }
                }
            }
        }
    }

    // The two PC drivers may place tie-equivalent sinks in different spots
    // (they scan branches in different orders), so instead of comparing
    // sink sets we check the invariant that actually matters downstream:
    // after every drained PC phase, each sink-free branch hanging off the
    // hub structure must be absorbable into its attachment vertex, so the
    // reaching criterion alone can finish the job.
    #[test]
    fn pc_phases_leave_rc_viable_state() {
        let handle = OracleHandle::new(&EvacOracle);
        for seed in 100..130u64 {
            let n = 3 + (seed as usize) % 10;
            let inst = gen::random_instance(
                n,
                1,
                gen::Shape::Random,
                seed,
                gen::AttrRanges::default(),
            );
            for t in [0u64, 1, 2, 4] {
                for fast in [false, true] {
                    let mut thr = FixedThreshold(Cost::Finite(t));
                    let mut st = WorkingState::new(&inst, &handle, &mut thr, n);
                    st.record_phases = true;
                    let out = st.run(fast).unwrap();
                    for snap in &st.phase_log {
                        let bad = rc_viable(&inst, &handle, snap, Cost::Finite(t)).unwrap();
                        assert_eq!(
                            bad, None,
                            "stuck branch at {bad:?}: seed {seed} n {n} t {t} fast {fast}"
                        );
                    }
                    if let Outcome::Feasible(cfg) = out {
                        cfg.verify(&inst, &handle, t).unwrap();
                    }
                }
            }
        }
    }
}
