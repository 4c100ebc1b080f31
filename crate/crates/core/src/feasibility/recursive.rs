//! The fast variants of the two criteria: a compartment recursion that
//! batches PC evaluations around tree medians, and an RC step that binary
//! searches a whole degree-two path instead of climbing it vertex by
//! vertex.

use super::{Phase, WorkingState};
use crate::error::Result;
use crate::oracle::Cost;
use crate::tree::{VertexId, VertexSet};
use std::collections::HashSet;

impl<'a> WorkingState<'a> {
    /// One full PC phase by compartment recursion. Medians split the
    /// working tree into compartments; a compartment with exactly one
    /// undecided boundary vertex `w` and a sink-free far side is evaluated
    /// in two stages (absorb the side into `w`, else force a sink at its
    /// root), and the split set is refined with the medians of the
    /// compartment interiors until nothing is left to try. A queue-driven
    /// mop-up afterwards (run by the caller) finishes the stragglers the
    /// batching skipped. Returns `false` when the sink budget runs out.
    pub(crate) fn recursive_pc_pass(
        &mut self,
        evaluated: &mut HashSet<(VertexId, VertexId)>,
    ) -> Result<bool> {
        if self.alive.is_empty() {
            return Ok(true);
        }
        let mut w_set = VertexSet::empty(self.inst.n());
        w_set.insert(self.inst.tree_median(&self.alive)?);
        loop {
            if self.alive.is_empty() {
                return Ok(true);
            }
            let mut split = w_set.clone();
            split.intersect_with(&self.alive);
            if split.is_empty() {
                let m = self.inst.tree_median(&self.alive)?;
                split.insert(m);
                w_set.insert(m);
            }
            let comps = self.inst.compartments(&self.alive, &split)?;
            let mut jobs: Vec<(VertexId, VertexId, VertexSet, Cost)> = Vec::new();
            for comp in &comps {
                let undecided: Vec<_> = comp
                    .boundary
                    .iter()
                    .filter(|&b| !self.marked_pc.contains(b) && !self.sinks_out.contains(b))
                    .collect();
                let [w] = undecided[..] else { continue };
                let Some(u) = self
                    .inst
                    .neighbors(w)
                    .find(|&y| comp.vertices.contains(y))
                else {
                    continue;
                };
                if self.sinks_out.contains(u) || evaluated.contains(&(w, u)) {
                    continue;
                }
                let side = self.inst.detached_subtree(&self.alive, u, w)?;
                if side.intersection_count(&self.alive_sinks()) > 0
                    || side.is_subset(&self.marked_pc)
                {
                    continue;
                }
                let mut with_w = side.clone();
                with_w.insert(w);
                let a = self.oracle(&with_w, w, Phase::Pc);
                jobs.push((w, u, side, a));
            }
            if !jobs.is_empty() {
                let values: Vec<Cost> = jobs.iter().map(|j| j.3).collect();
                self.thr.narrow_layer(&values)?;
                for (w, u, side, a) in jobs {
                    // Earlier jobs in the batch may have invalidated this
                    // one; the deeper epochs or the mop-up recover it.
                    if !self.alive.contains(w)
                        || !self.alive.contains(u)
                        || self.marked_pc.contains(w)
                        || self.sinks_out.contains(u)
                        || !side.is_subset(&self.alive)
                        || side.intersection_count(&self.alive_sinks()) > 0
                    {
                        continue;
                    }
                    if self.le(a)? {
                        for x in side.iter() {
                            self.marked_pc.insert(x);
                        }
                        self.consider_frontier(w);
                    } else {
                        let b = self.oracle(&side, u, Phase::Pc);
                        if self.le(b)? {
                            if !self.place_sink(u, side, w)? {
                                return Ok(false);
                            }
                        } else {
                            // Needs a sink strictly inside: left to deeper
                            // epochs. Remember the verdict so later passes
                            // do not pay for it again.
                            evaluated.insert((w, u));
                        }
                    }
                }
            }
            let mut grew = false;
            for comp in &comps {
                let mut interior = comp.vertices.clone();
                interior.difference_with(&comp.boundary);
                interior.intersect_with(&self.alive);
                if interior.is_empty() {
                    continue;
                }
                let m = self.inst.tree_median(&interior)?;
                if !w_set.contains(m) {
                    w_set.insert(m);
                    grew = true;
                } else if let Some(x) = interior.iter().find(|&x| !w_set.contains(x)) {
                    w_set.insert(x);
                    grew = true;
                }
            }
            if !grew {
                return Ok(true);
            }
        }
    }

    /// Fast reaching criterion at `v`: extend the undecided degree-two
    /// run above `v` for as long as it stays free of other sink influence,
    /// then binary search it for the highest vertex that can still reach a
    /// sink below. Everything at or below that vertex is marked with one
    /// witness; the region under the first vertex that cannot reach is
    /// self-sufficient and is cut off.
    pub fn rc_binary_search(&mut self, v: VertexId) -> Result<bool> {
        let Some(sides) = self.rc_ready(v) else {
            return Ok(true);
        };
        let candidates = self.rc_candidates(&sides);
        if candidates.is_empty() {
            for (_, side) in sides {
                self.rc_fire(v, &side)?;
            }
            self.invalidate_pocket(v);
            self.consider_frontier(v);
            return Ok(true);
        }
        // The search domain: v plus the maximal run of vertices above it
        // whose only undecided direction continues the path and whose
        // decided sides are sink-free (a decided sink side would change
        // the candidate set, so the run stops there).
        let mut chain = vec![v];
        let mut prev = v;
        let mut cur_opt = {
            let mut ups = self
                .inst
                .neighbors(v)
                .filter(|&y| self.alive.contains(y))
                .filter(|&y| !sides.iter().any(|(a, _)| *a == y))
                .filter(|&y| {
                    let side = self
                        .inst
                        .detached_subtree(&self.alive, y, v)
                        .expect("adjacent alive");
                    self.side_undecided(&side)
                });
            let first = ups.next();
            if ups.next().is_some() {
                None
            } else {
                first
            }
        };
        let alive_sinks = self.alive_sinks();
        'extend: while let Some(cur) = cur_opt {
            if self.sinks_out.contains(cur) || self.marked_rc.contains(cur) {
                break;
            }
            let mut next = None;
            for y in self.inst.neighbors(cur) {
                if y == prev || !self.alive.contains(y) {
                    continue;
                }
                let side = self
                    .inst
                    .detached_subtree(&self.alive, y, cur)
                    .expect("adjacent alive");
                if self.side_undecided(&side) {
                    if next.is_some() {
                        break 'extend;
                    }
                    next = Some(y);
                } else if side.intersection_count(&alive_sinks) > 0 {
                    break 'extend;
                }
            }
            chain.push(cur);
            prev = cur;
            cur_opt = next;
        }
        // Try the top first; its failed candidates are rejected for good
        // (no vertex outside this subtree can reach them either).
        let top = *chain.last().unwrap();
        let mut reached = None;
        for (i, &s) in candidates.iter().enumerate() {
            let bp = self
                .inst
                .bulk_path(&self.alive, &self.alive_sinks(), top, s)?;
            let a = self.oracle(&bp, s, Phase::Rc);
            if self.le(a)? {
                reached = Some((i, s));
                break;
            }
        }
        if let Some((fails, s)) = reached {
            for &r in candidates.iter().take(fails) {
                self.rejected.insert(r);
            }
            for &x in chain.clone().iter() {
                self.mark_rc(x, s);
            }
            return Ok(true);
        }
        for &r in &candidates {
            self.rejected.insert(r);
        }
        // Nobody above reaches from the top; find the highest chain vertex
        // that still does.
        let mut best: Option<(usize, VertexId)> = None;
        let (mut lo, mut hi) = (0isize, chain.len() as isize - 2);
        while lo <= hi {
            let mid = (lo + hi) / 2;
            if let Some(s) = self.try_reach(chain[mid as usize], &candidates)? {
                best = Some((mid as usize, s));
                lo = mid + 1;
            } else {
                hi = mid - 1;
            }
        }
        match best {
            Some((i, s)) => {
                for &x in chain[..=i].to_vec().iter() {
                    self.mark_rc(x, s);
                }
                let cut = chain[i + 1];
                let side = self.inst.detached_subtree(&self.alive, chain[i], cut)?;
                self.rc_fire(cut, &side)?;
                self.invalidate_pocket(cut);
                self.consider_frontier(cut);
            }
            None => {
                for (_, side) in sides {
                    self.rc_fire(v, &side)?;
                }
                self.invalidate_pocket(v);
                self.consider_frontier(v);
            }
        }
        Ok(true)
    }

    fn try_reach(&mut self, x: VertexId, candidates: &[VertexId]) -> Result<Option<VertexId>> {
        for &s in candidates {
            let bp = self
                .inst
                .bulk_path(&self.alive, &self.alive_sinks(), x, s)?;
            let a = self.oracle(&bp, s, Phase::Rc);
            if self.le(a)? {
                return Ok(Some(s));
            }
        }
        Ok(None)
    }
}
