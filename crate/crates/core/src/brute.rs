//! Exhaustive reference implementations. Exponential in the instance size;
//! only meant for cross-checking the real solvers on small trees.

use crate::error::{Error, Result};
use crate::oracle::{Cost, OracleHandle};
use crate::tree::{Instance, VertexId, VertexSet};
use std::collections::HashMap;

/// Hard cap on `n` for the exhaustive searches.
pub const BRUTE_LIMIT: usize = 16;

/// Memoizes `f(U, v)` by bitmask so repeated partitions stay cheap.
pub struct BruteForcer<'a, 'b> {
    handle: &'a OracleHandle<'b>,
    memo: HashMap<(u32, VertexId), Cost>,
}

impl<'a, 'b> BruteForcer<'a, 'b> {
    pub fn new(handle: &'a OracleHandle<'b>) -> Self {
        BruteForcer {
            handle,
            memo: HashMap::new(),
        }
    }

    fn cost(&mut self, inst: &Instance, mask: u32, v: VertexId) -> Cost {
        if let Some(&c) = self.memo.get(&(mask, v)) {
            return c;
        }
        let set = VertexSet::from_iter_n(inst.n(), (0..inst.n()).filter(|&i| mask >> i & 1 == 1));
        let c = self.handle.cost(inst, &set, v);
        self.memo.insert((mask, v), c);
        c
    }

    /// Best achievable cost for the fixed sink set `sinks`, over every way
    /// of partitioning the tree into one connected block per sink. Returns
    /// the cost and the first optimal partition found.
    pub fn partition_cost(
        &mut self,
        inst: &Instance,
        sinks: &VertexSet,
    ) -> Result<(Cost, Vec<(VertexSet, VertexId)>)> {
        let n = inst.n();
        if n > BRUTE_LIMIT {
            return Err(Error::TooLarge(n, BRUTE_LIMIT));
        }
        if sinks.is_empty() {
            return Err(Error::NoSinks);
        }
        let m = n - 1;
        let cuts = sinks.len() - 1;
        let mut best: Option<(Cost, Vec<(VertexSet, VertexId)>)> = None;
        for cut in combinations(m, cuts) {
            let comps = split_by_cut(inst, &cut);
            let mut blocks = Vec::with_capacity(comps.len());
            let mut ok = true;
            let mut worst = Cost::Finite(0);
            for comp in &comps {
                let mut sink = None;
                for s in sinks.iter() {
                    if comp.contains(s) {
                        if sink.is_some() {
                            ok = false;
                        }
                        sink = Some(s);
                    }
                }
                let Some(s) = sink else {
                    ok = false;
                    break;
                };
                if !ok {
                    break;
                }
                let mask = comp.iter().fold(0u32, |m, v| m | 1 << v);
                worst = worst.max(self.cost(inst, mask, s));
                blocks.push((comp.clone(), s));
            }
            if ok && best.as_ref().map_or(true, |(c, _)| worst < *c) {
                best = Some((worst, blocks));
            }
        }
        let (cost, blocks) = best.ok_or(Error::Internal("no valid partition".into()))?;
        Ok((cost, blocks))
    }

    /// Minimum cost over every sink set of size at most `k`, with the best
    /// partition for it. Among equally good sink sets the lexicographically
    /// smallest (as a sorted vertex list) wins.
    pub fn optimal(
        &mut self,
        inst: &Instance,
        k: usize,
    ) -> Result<(Cost, VertexSet, Vec<(VertexSet, VertexId)>)> {
        let n = inst.n();
        if n > BRUTE_LIMIT {
            return Err(Error::TooLarge(n, BRUTE_LIMIT));
        }
        if k == 0 {
            return Err(Error::NoSinks);
        }
        let mut subsets: Vec<Vec<VertexId>> = (1u32..1 << n)
            .filter(|m| (m.count_ones() as usize) <= k)
            .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
            .collect();
        subsets.sort();
        let mut best: Option<(Cost, VertexSet, Vec<(VertexSet, VertexId)>)> = None;
        for vs in subsets {
            let sinks = VertexSet::from_iter_n(n, vs.iter().copied());
            let (cost, blocks) = self.partition_cost(inst, &sinks)?;
            if best.as_ref().map_or(true, |(c, _, _)| cost < *c) {
                best = Some((cost, sinks, blocks));
            }
        }
        Ok(best.unwrap())
    }
}

/// Components of the tree after removing the edges whose indices are in
/// `cut`.
fn split_by_cut(inst: &Instance, cut: &[usize]) -> Vec<VertexSet> {
    let n = inst.n();
    let mut removed = vec![false; n - 1];
    for &e in cut {
        removed[e] = true;
    }
    let mut seen = VertexSet::empty(n);
    let mut comps = Vec::new();
    for start in 0..n {
        if seen.contains(start) {
            continue;
        }
        let mut comp = VertexSet::empty(n);
        let mut stack = vec![start];
        comp.insert(start);
        seen.insert(start);
        while let Some(x) = stack.pop() {
            for (i, e) in inst.edges().iter().enumerate() {
                if removed[i] {
                    continue;
                }
                let y = if e.u == x {
                    e.v
                } else if e.v == x {
                    e.u
                } else {
                    continue;
                };
                if !comp.contains(y) {
                    comp.insert(y);
                    seen.insert(y);
                    stack.push(y);
                }
            }
        }
        comps.push(comp);
    }
    comps
}

/// All `size`-element subsets of `0..m`, in lexicographic order.
fn combinations(m: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(size);
    fn rec(m: usize, size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(m, size, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(m, size, 0, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::oracle::{EvacOracle, OracleHandle};

    #[test]
    fn path3_optima() {
        let inst = gen::path(3, 1);
        let handle = OracleHandle::new(&EvacOracle);
        let mut bf = BruteForcer::new(&handle);
        // One sink: the middle serves both ends in one step.
        let (cost, sinks, _) = bf.optimal(&inst, 1).unwrap();
        assert_eq!(cost, Cost::Finite(1));
        assert_eq!(sinks, VertexSet::from_iter_n(3, [1]));
        // Zero cost needs a sink everywhere.
        let (cost, sinks, _) = bf.optimal(&inst, 3).unwrap();
        assert_eq!(cost, Cost::Finite(0));
        assert_eq!(sinks, VertexSet::from_iter_n(3, [0, 1, 2]));
    }

    #[test]
    fn path4_two_sinks() {
        let inst = gen::path(4, 2);
        let handle = OracleHandle::new(&EvacOracle);
        let mut bf = BruteForcer::new(&handle);
        let (cost, sinks, blocks) = bf.optimal(&inst, 2).unwrap();
        assert_eq!(cost, Cost::Finite(1));
        // {0, 2} achieves 1 (cut the first edge; 1 and 3 reach 2 in one
        // step in parallel) and beats every other achiever of 1
        // lexicographically.
        assert_eq!(sinks, VertexSet::from_iter_n(4, [0, 2]));
        assert_eq!(blocks.len(), 2);
    }

    #[test]
    fn fixed_sink_partition_cost() {
        let inst = gen::path(4, 2);
        let handle = OracleHandle::new(&EvacOracle);
        let mut bf = BruteForcer::new(&handle);
        let sinks = VertexSet::from_iter_n(4, [0, 3]);
        let (cost, blocks) = bf.partition_cost(&inst, &sinks).unwrap();
        assert_eq!(cost, Cost::Finite(1));
        assert_eq!(blocks.len(), 2);
        let sinks = VertexSet::from_iter_n(4, [0]);
        let (cost, _) = bf.partition_cost(&inst, &sinks).unwrap();
        assert_eq!(cost, Cost::Finite(3));
    }

    #[test]
    fn refuses_large_instances() {
        let inst = gen::path(20, 1);
        let handle = OracleHandle::new(&EvacOracle);
        let mut bf = BruteForcer::new(&handle);
        assert!(matches!(bf.optimal(&inst, 1), Err(Error::TooLarge(20, _))));
    }

    #[test]
    fn memoization_caps_oracle_calls() {
        let inst = gen::path(5, 2);
        let handle = OracleHandle::new(&EvacOracle);
        let mut bf = BruteForcer::new(&handle);
        bf.optimal(&inst, 2).unwrap();
        let after = handle.calls();
        // Every (connected set, sink) pair at most once: loose upper bound.
        assert!(after <= 2u64.pow(5) * 5, "calls {after}");
    }
}
