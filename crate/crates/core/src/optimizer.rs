//! Minimizing the threshold. Instead of an outer search over candidate
//! thresholds, one solver run doubles as the search: every comparison
//! "value `a` vs threshold" that cannot be decided from the current margin
//! triggers a clean feasibility probe at exactly `a`, and the margin
//! `(low, high]` shrinks until the run ends with `high` equal to the
//! optimal threshold. All costs are integers, so the result is exact and
//! is double-checked by two clean runs.

use crate::error::{Error, Result};
use crate::feasibility::{
    bounded_cost_fast, bounded_cost_iterative, fixed_sink_feasible, Configuration, Outcome,
    ThresholdPolicy, WorkingState,
};
use crate::oracle::{Cost, OracleHandle};
use crate::tree::{Instance, VertexId, VertexSet};

/// Half-open interval `(low, high]` known to contain the optimal
/// threshold; `None` stands for the respective infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdMargin {
    pub low: Option<u64>,
    pub high: Option<u64>,
}

impl ThresholdMargin {
    pub fn unbounded() -> Self {
        ThresholdMargin {
            low: None,
            high: None,
        }
    }

    pub fn contains(&self, t: u64) -> bool {
        self.low.map_or(true, |l| t > l) && self.high.map_or(true, |h| t <= h)
    }

    fn raise_low(&mut self, t: u64) {
        self.low = Some(self.low.map_or(t, |l| l.max(t)));
    }

    fn lower_high(&mut self, t: u64) {
        self.high = Some(self.high.map_or(t, |h| h.min(t)));
    }
}

/// Threshold policy that answers comparisons by probing feasibility at the
/// compared value with a clean solver run.
pub struct InterferedThreshold<'p> {
    pub margin: ThresholdMargin,
    probe: Box<dyn FnMut(u64) -> Result<bool> + 'p>,
}

impl<'p> InterferedThreshold<'p> {
    pub fn new(probe: impl FnMut(u64) -> Result<bool> + 'p) -> Self {
        InterferedThreshold {
            margin: ThresholdMargin::unbounded(),
            probe: Box::new(probe),
        }
    }
}

impl<'p> ThresholdPolicy for InterferedThreshold<'p> {
    fn le(&mut self, a: Cost) -> Result<bool> {
        let Cost::Finite(a) = a else {
            return Ok(false);
        };
        if self.margin.low.is_some_and(|l| a <= l) {
            return Ok(true);
        }
        if self.margin.high.is_some_and(|h| a > h) {
            return Ok(false);
        }
        if (self.probe)(a)? {
            // Feasible at `a`: the optimum is at most `a`; the virtual
            // threshold stays strictly below it.
            self.margin.lower_high(a);
            Ok(false)
        } else {
            self.margin.raise_low(a);
            Ok(true)
        }
    }

    fn narrow_layer(&mut self, candidates: &[Cost]) -> Result<()> {
        let mut vals: Vec<u64> = candidates
            .iter()
            .filter_map(|c| c.finite())
            .filter(|&v| self.margin.contains(v))
            .collect();
        vals.sort_unstable();
        vals.dedup();
        if vals.is_empty() {
            return Ok(());
        }
        // Binary search the first feasible candidate.
        let (mut lo, mut hi) = (0isize, vals.len() as isize - 1);
        let mut first_feasible: Option<usize> = None;
        while lo <= hi {
            let mid = (lo + hi) / 2;
            if (self.probe)(vals[mid as usize])? {
                first_feasible = Some(mid as usize);
                hi = mid - 1;
            } else {
                lo = mid + 1;
            }
        }
        match first_feasible {
            Some(i) => {
                self.margin.lower_high(vals[i]);
                if i > 0 {
                    self.margin.raise_low(vals[i - 1]);
                }
            }
            None => self.margin.raise_low(*vals.last().unwrap()),
        }
        Ok(())
    }
}

/// Result of an optimization run, with the oracle-call ledger split into
/// the interfered run itself, the feasibility probes it spawned, and the
/// final verification runs.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub tstar: u64,
    pub config: Configuration,
    pub calls_driver: u64,
    pub calls_probes: u64,
    pub calls_verify: u64,
}

impl SolveReport {
    pub fn total_calls(&self) -> u64 {
        self.calls_driver + self.calls_probes + self.calls_verify
    }
}

/// Minimum threshold feasible with at most `k` sinks, via the iterative
/// solver under interference.
pub fn solve_parametric_iterative(
    inst: &Instance,
    handle: &OracleHandle,
    k: usize,
) -> Result<SolveReport> {
    solve_parametric(inst, handle, k, false)
}

/// Same optimum as [`solve_parametric_iterative`], but both the driver run
/// and the probes use the fast solver, and batched PC layers narrow the
/// margin by binary search instead of one probe per comparison.
pub fn solve_parametric_fast(
    inst: &Instance,
    handle: &OracleHandle,
    k: usize,
) -> Result<SolveReport> {
    solve_parametric(inst, handle, k, true)
}

fn feasible_at(
    inst: &Instance,
    handle: &OracleHandle,
    t: u64,
    k: usize,
    fast: bool,
) -> Result<Outcome> {
    if fast {
        bounded_cost_fast(inst, handle, Cost::Finite(t), k)
    } else {
        bounded_cost_iterative(inst, handle, Cost::Finite(t), k)
    }
}

fn solve_parametric(
    inst: &Instance,
    handle: &OracleHandle,
    k: usize,
    fast: bool,
) -> Result<SolveReport> {
    if k == 0 {
        return Err(Error::NoSinks);
    }
    let before = handle.calls();
    let probe_calls = std::cell::Cell::new(0u64);
    let margin = {
        let probe = |t: u64| -> Result<bool> {
            let at = handle.calls();
            let out = feasible_at(inst, handle, t, k, fast)?;
            probe_calls.set(probe_calls.get() + (handle.calls() - at));
            Ok(out.is_feasible())
        };
        let mut thr = InterferedThreshold::new(probe);
        WorkingState::new(inst, handle, &mut thr, k).run(fast)?;
        thr.margin
    };
    let calls_probes = probe_calls.get();
    let calls_driver = handle.calls() - before - calls_probes;
    let verify_from = handle.calls();
    let tstar = match margin.high {
        Some(h) => h,
        None => {
            // Every comparison resolved without ever certifying an upper
            // bound; fall back to an explicit binary search above `low`.
            let mut hi = handle
                .cost(inst, &VertexSet::full(inst.n()), 0)
                .finite()
                .ok_or_else(|| Error::Internal("whole tree not servable".into()))?;
            let mut lo = margin.low.map_or(0, |l| l + 1);
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if feasible_at(inst, handle, mid, k, fast)?.is_feasible() {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            hi
        }
    };
    // Exactness check: feasible at t*, infeasible just below.
    let Outcome::Feasible(config) = feasible_at(inst, handle, tstar, k, fast)? else {
        return Err(Error::Internal(format!("parametric result {tstar} not feasible")));
    };
    if tstar > 0 && feasible_at(inst, handle, tstar - 1, k, fast)?.is_feasible() {
        return Err(Error::Internal(format!(
            "parametric result {tstar} not minimal"
        )));
    }
    Ok(SolveReport {
        tstar,
        config,
        calls_driver,
        calls_probes,
        calls_verify: handle.calls() - verify_from,
    })
}

/// Minimum threshold when the sinks are fixed at `sinks` (any vertices;
/// internal sinks are handled by grafting a zero-length pendant leaf onto
/// each and letting the leaf stand in for it). Returns the optimum and a
/// partition on the original instance.
pub fn partition_fixed_sinks(
    inst: &Instance,
    handle: &OracleHandle,
    sinks: &VertexSet,
) -> Result<SolveReport> {
    if sinks.is_empty() {
        return Err(Error::NoSinks);
    }
    for s in sinks.iter() {
        if s >= inst.n() {
            return Err(Error::BadVertex(s, inst.n()));
        }
    }
    let n = inst.n();
    let internal: Vec<VertexId> = sinks.iter().filter(|&s| inst.degree(s) > 1).collect();
    let big = inst.total_weight().max(1);
    let mut edges: Vec<(VertexId, VertexId, u64, u64)> = inst
        .edges()
        .iter()
        .map(|e| (e.u, e.v, e.tau, e.cap))
        .collect();
    let mut weights = inst.weights().to_vec();
    let n2 = n + internal.len();
    let mut pendant_of = std::collections::HashMap::new();
    for (i, &s) in internal.iter().enumerate() {
        let leaf = n + i;
        edges.push((s, leaf, 0, big));
        weights.push(0);
        pendant_of.insert(leaf, s);
    }
    let inst2 = Instance::new(n2, sinks.len(), edges, weights)?;
    let sinks2 = VertexSet::from_iter_n(
        n2,
        sinks
            .iter()
            .filter(|&s| inst.degree(s) <= 1)
            .chain(n..n2),
    );
    let before = handle.calls();
    // Upper bound: serving the whole tree from its worst fixed sink is
    // always enough for every block of any valid partition.
    let all2 = VertexSet::full(n2);
    let mut hi = 0u64;
    for s in sinks2.iter() {
        let c = handle
            .cost(&inst2, &all2, s)
            .finite()
            .ok_or_else(|| Error::Internal("whole tree not servable".into()))?;
        hi = hi.max(c);
    }
    let mut lo = 0u64;
    let mut best: Option<(u64, Configuration)> = None;
    while lo <= hi {
        let mid = lo + (hi - lo) / 2;
        match fixed_sink_feasible(&inst2, handle, &sinks2, Cost::Finite(mid))? {
            Outcome::Feasible(cfg) => {
                best = Some((mid, cfg));
                if mid == 0 {
                    break;
                }
                hi = mid - 1;
            }
            Outcome::Infeasible => lo = mid + 1,
        }
    }
    let (tstar, cfg2) = best.ok_or_else(|| Error::Internal("no feasible threshold".into()))?;
    // Map the partition back to the original instance.
    let mut stranded: Vec<VertexId> = Vec::new();
    let mut blocks: Vec<(VertexSet, VertexId)> = Vec::new();
    for (set, s) in cfg2.blocks {
        let orig = VertexSet::from_iter_n(n, set.iter().filter(|&x| x < n));
        if orig.is_empty() {
            // A pendant leaf alone in its block: its host vertex (an
            // internal sink) was assigned to another sink's block.
            stranded.push(pendant_of[&s]);
            continue;
        }
        blocks.push((orig, *pendant_of.get(&s).unwrap_or(&s)));
    }
    // Carve each stranded sink back out of the block that swallowed it.
    // Everyone it cuts off from that block's sink evacuated through it
    // anyway, so re-routing them to the closer stranded sink only shortens
    // their journey (and sheds congestion): the threshold still holds.
    while let Some(h) = stranded.pop() {
        let idx = blocks
            .iter()
            .position(|(b, _)| b.contains(h))
            .ok_or_else(|| Error::Internal("stranded sink not covered".into()))?;
        let (ref mut host_block, s) = blocks[idx];
        let mut rest = host_block.clone();
        rest.remove(h);
        let keep = inst.component_of(&rest, s);
        let mut mine = host_block.clone();
        mine.difference_with(&keep);
        blocks[idx] = (keep, s);
        blocks.push((mine, h));
    }
    let blocks = blocks;
    Ok(SolveReport {
        tstar,
        config: Configuration {
            sinks: sinks.clone(),
            blocks,
        },
        calls_driver: handle.calls() - before,
        calls_probes: 0,
        calls_verify: 0,
    })
}

impl Configuration {
    /// Re-verifies a solution from scratch: the blocks must partition all
    /// vertices, each must be connected, contain exactly its one sink, and
    /// cost at most `t`.
    pub fn verify(&self, inst: &Instance, handle: &OracleHandle, t: u64) -> Result<()> {
        let mut covered = VertexSet::empty(inst.n());
        for (set, s) in &self.blocks {
            if !set.contains(*s) || !self.sinks.contains(*s) {
                return Err(Error::NoSinkInBlock);
            }
            if set.intersection_count(&self.sinks) > 1 {
                return Err(Error::TwoSinksInBlock);
            }
            if set.intersection_count(&covered) > 0 {
                return Err(Error::Internal("overlapping blocks".into()));
            }
            covered.union_with(set);
            match handle.cost(inst, set, *s) {
                Cost::Finite(c) if c <= t => {}
                c => {
                    return Err(Error::Internal(format!(
                        "block at sink {s} costs {c}, over {t}"
                    )))
                }
            }
        }
        if covered != VertexSet::full(inst.n()) {
            return Err(Error::Internal("blocks do not cover the tree".into()));
        }
        Ok(())
    }
}
