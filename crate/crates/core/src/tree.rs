//! Tree topology: instances, vertex sets, and the structural queries the
//! solvers are built on (detached subtrees, medians, hub trees, bulk paths,
//! compartments).

use crate::error::{Error, Result};
use fixedbitset::FixedBitSet;

pub type VertexId = usize;

/// An undirected tree edge with travel time `tau` and per-step capacity `cap`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub tau: u64,
    pub cap: u64,
}

/// A problem instance: a tree with edge travel times and capacities, vertex
/// weights (number of people starting at each vertex), and a sink budget `k`.
#[derive(Debug, Clone)]
pub struct Instance {
    k: usize,
    weights: Vec<u64>,
    edges: Vec<Edge>,
    adj: Vec<Vec<(VertexId, usize)>>,
}

impl Instance {
    /// Builds an instance, checking that the edges form a tree on `n`
    /// vertices and that every capacity is positive.
    pub fn new(
        n: usize,
        k: usize,
        edges: Vec<(VertexId, VertexId, u64, u64)>,
        weights: Vec<u64>,
    ) -> Result<Self> {
        if n == 0 || weights.len() != n || edges.len() + 1 != n {
            return Err(Error::NotATree);
        }
        let mut adj = vec![Vec::new(); n];
        let mut es = Vec::with_capacity(edges.len());
        for (i, (u, v, tau, cap)) in edges.into_iter().enumerate() {
            if u >= n {
                return Err(Error::BadVertex(u, n));
            }
            if v >= n {
                return Err(Error::BadVertex(v, n));
            }
            if u == v {
                return Err(Error::NotATree);
            }
            if cap == 0 {
                return Err(Error::ZeroCapacity(u, v));
            }
            adj[u].push((v, i));
            adj[v].push((u, i));
            es.push(Edge { u, v, tau, cap });
        }
        let inst = Instance {
            k,
            weights,
            edges: es,
            adj,
        };
        // edges.len() == n - 1, so connectivity implies acyclicity.
        let all = VertexSet::full(n);
        if inst.component_of(&all, 0).len() != n {
            return Err(Error::NotATree);
        }
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn weight(&self, v: VertexId) -> u64 {
        self.weights[v]
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.adj[v].iter().map(|&(w, _)| w)
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    pub fn edge_between(&self, u: VertexId, v: VertexId) -> Option<&Edge> {
        self.adj[u]
            .iter()
            .find(|&&(w, _)| w == v)
            .map(|&(_, i)| &self.edges[i])
    }

    /// Component of `within \ {}` containing `start` (BFS).
    pub fn component_of(&self, within: &VertexSet, start: VertexId) -> VertexSet {
        let mut seen = VertexSet::empty(self.n());
        if !within.contains(start) {
            return seen;
        }
        let mut queue = vec![start];
        seen.insert(start);
        while let Some(x) = queue.pop() {
            for y in self.neighbors(x) {
                if within.contains(y) && !seen.contains(y) {
                    seen.insert(y);
                    queue.push(y);
                }
            }
        }
        seen
    }

    /// The vertices of `T_{-v}(u)`: the component of the working tree minus
    /// `v` that contains `u`. Requires `u` and `v` to be adjacent and alive.
    pub fn detached_subtree(
        &self,
        alive: &VertexSet,
        u: VertexId,
        v: VertexId,
    ) -> Result<VertexSet> {
        if self.edge_between(u, v).is_none() || !alive.contains(u) || !alive.contains(v) {
            return Err(Error::NotAdjacent(u, v));
        }
        let mut within = alive.clone();
        within.remove(v);
        Ok(self.component_of(&within, u))
    }

    /// Centroid of the subtree induced by `sub`: the vertex minimizing the
    /// largest component left after its removal, smallest id on ties.
    pub fn tree_median(&self, sub: &VertexSet) -> Result<VertexId> {
        let total = sub.len();
        if total == 0 {
            return Err(Error::EmptySet);
        }
        let root = sub.iter().next().unwrap();
        let order = self.bfs_order(sub, root);
        if order.len() != total {
            return Err(Error::Disconnected);
        }
        let mut size = vec![0usize; self.n()];
        let mut parent = vec![usize::MAX; self.n()];
        for &(v, p) in &order {
            parent[v] = p;
            size[v] = 1;
        }
        for &(v, p) in order.iter().rev() {
            if p != usize::MAX {
                size[p] += size[v];
            }
        }
        let mut best = (usize::MAX, usize::MAX);
        for &(v, p) in &order {
            let mut worst = if p == usize::MAX { 0 } else { total - size[v] };
            for y in self.neighbors(v) {
                if sub.contains(y) && y != p {
                    worst = worst.max(size[y]);
                }
            }
            if (worst, v) < best {
                best = (worst, v);
            }
        }
        Ok(best.1)
    }

    /// BFS over `sub` from `root`, returning `(vertex, parent)` in visit
    /// order (`usize::MAX` for the root's parent).
    pub fn bfs_order(&self, sub: &VertexSet, root: VertexId) -> Vec<(VertexId, VertexId)> {
        let mut order = Vec::with_capacity(sub.len());
        if !sub.contains(root) {
            return order;
        }
        let mut seen = VertexSet::empty(self.n());
        seen.insert(root);
        order.push((root, usize::MAX));
        let mut head = 0;
        while head < order.len() {
            let (x, _) = order[head];
            head += 1;
            for y in self.neighbors(x) {
                if sub.contains(y) && !seen.contains(y) {
                    seen.insert(y);
                    order.push((y, x));
                }
            }
        }
        order
    }

    /// Vertex sequence of the unique path from `u` to `v` inside `sub`.
    pub fn path_between(&self, sub: &VertexSet, u: VertexId, v: VertexId) -> Result<Vec<VertexId>> {
        if !sub.contains(u) || !sub.contains(v) {
            return Err(Error::Disconnected);
        }
        let order = self.bfs_order(sub, u);
        let mut parent = vec![usize::MAX; self.n()];
        let mut found = false;
        for &(x, p) in &order {
            parent[x] = p;
            if x == v {
                found = true;
            }
        }
        if !found {
            return Err(Error::Disconnected);
        }
        let mut path = vec![v];
        let mut cur = v;
        while cur != u {
            cur = parent[cur];
            path.push(cur);
        }
        path.reverse();
        Ok(path)
    }

    /// Hub structure of a working tree whose sinks are all leaves: the hub
    /// tree is the minimal subtree spanning the sinks, and hubs are its
    /// vertices of degree three or more within it.
    pub fn hub_structure(&self, alive: &VertexSet, sinks: &VertexSet) -> Result<HubStructure> {
        if sinks.len() == 0 {
            return Err(Error::NoSinks);
        }
        for s in sinks.iter() {
            if !alive.contains(s) {
                return Err(Error::BadVertex(s, self.n()));
            }
            let deg = self.neighbors(s).filter(|&y| alive.contains(y)).count();
            if deg > 1 {
                return Err(Error::SinkNotLeaf(s));
            }
        }
        let total = sinks.len();
        let root = sinks.iter().next().unwrap();
        let order = self.bfs_order(alive, root);
        let mut below = vec![0usize; self.n()];
        for s in sinks.iter() {
            below[s] = 1;
        }
        for &(v, p) in order.iter().rev() {
            if p != usize::MAX {
                below[p] += below[v];
            }
        }
        let mut hub_tree = VertexSet::empty(self.n());
        for &(v, _) in &order {
            if v == root || (below[v] >= 1 && below[v] < total) {
                hub_tree.insert(v);
            }
        }
        let mut hubs = VertexSet::empty(self.n());
        for v in hub_tree.iter() {
            let deg = self
                .neighbors(v)
                .filter(|&y| hub_tree.contains(y))
                .count();
            if deg >= 3 {
                hubs.insert(v);
            }
        }
        Ok(HubStructure {
            hub_tree,
            hubs,
            sink_leaves: sinks.clone(),
        })
    }

    /// Bulk path `BP(u, v)`: the path from `u` to `v` in the working tree
    /// together with every sink-free branch hanging off a path vertex.
    pub fn bulk_path(
        &self,
        alive: &VertexSet,
        sinks: &VertexSet,
        u: VertexId,
        v: VertexId,
    ) -> Result<VertexSet> {
        let path = self.path_between(alive, u, v)?;
        let mut on_path = VertexSet::empty(self.n());
        for &p in &path {
            on_path.insert(p);
        }
        let mut out = on_path.clone();
        let mut off_path = alive.clone();
        off_path.difference_with(&on_path);
        for &p in &path {
            for c in self.neighbors(p) {
                if off_path.contains(c) && !out.contains(c) {
                    let comp = self.component_of(&off_path, c);
                    if comp.intersection_count(sinks) == 0 {
                        out.union_with(&comp);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Splits `sub` at the vertices of `split`: every edge of `sub` lands in
    /// exactly one compartment, two incident edges sharing an endpoint
    /// outside `split` land in the same one. A compartment's boundary is its
    /// vertices adjacent (within `sub`) to vertices outside it. A single
    /// isolated vertex yields one boundary-less compartment.
    pub fn compartments(&self, sub: &VertexSet, split: &VertexSet) -> Result<Vec<Compartment>> {
        if sub.len() == 0 {
            return Err(Error::EmptySet);
        }
        let n = self.n();
        let mut edge_class = vec![usize::MAX; self.edges.len()];
        let mut classes: Vec<VertexSet> = Vec::new();
        for (ei, e) in self.edges.iter().enumerate() {
            if edge_class[ei] != usize::MAX || !sub.contains(e.u) || !sub.contains(e.v) {
                continue;
            }
            let id = classes.len();
            let mut verts = VertexSet::empty(n);
            let mut stack = vec![ei];
            edge_class[ei] = id;
            while let Some(cur) = stack.pop() {
                let e = &self.edges[cur];
                for x in [e.u, e.v] {
                    verts.insert(x);
                    if split.contains(x) {
                        continue;
                    }
                    for &(y, ej) in &self.adj[x] {
                        if sub.contains(y) && edge_class[ej] == usize::MAX {
                            edge_class[ej] = id;
                            stack.push(ej);
                        }
                    }
                }
            }
            classes.push(verts);
        }
        if classes.is_empty() {
            // `sub` has no internal edges: it is a single vertex.
            if sub.len() != 1 {
                return Err(Error::Disconnected);
            }
            return Ok(vec![Compartment {
                vertices: sub.clone(),
                boundary: VertexSet::empty(n),
            }]);
        }
        let mut out: Vec<Compartment> = classes
            .into_iter()
            .map(|verts| {
                let mut boundary = VertexSet::empty(n);
                for x in verts.iter() {
                    if self
                        .neighbors(x)
                        .any(|y| sub.contains(y) && !verts.contains(y))
                    {
                        boundary.insert(x);
                    }
                }
                Compartment {
                    vertices: verts,
                    boundary,
                }
            })
            .collect();
        out.sort_by_key(|c| c.vertices.iter().next().unwrap());
        Ok(out)
    }
}

/// Hub tree of a working tree: the minimal subtree spanning the sinks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HubStructure {
    pub hub_tree: VertexSet,
    /// Branch vertices: degree >= 3 within the hub tree.
    pub hubs: VertexSet,
    pub sink_leaves: VertexSet,
}

/// One compartment produced by splitting a subtree at a vertex set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Compartment {
    pub vertices: VertexSet,
    pub boundary: VertexSet,
}

/// A set of vertex ids, backed by a bitset.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VertexSet {
    bits: FixedBitSet,
}

impl VertexSet {
    pub fn empty(n: usize) -> Self {
        VertexSet {
            bits: FixedBitSet::with_capacity(n),
        }
    }

    pub fn full(n: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(n);
        bits.insert_range(..);
        VertexSet { bits }
    }

    pub fn from_iter_n(n: usize, it: impl IntoIterator<Item = VertexId>) -> Self {
        let mut s = VertexSet::empty(n);
        for v in it {
            s.insert(v);
        }
        s
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.bits.contains(v)
    }

    pub fn insert(&mut self, v: VertexId) {
        self.bits.insert(v);
    }

    pub fn remove(&mut self, v: VertexId) {
        self.bits.set(v, false);
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn capacity(&self) -> usize {
        self.bits.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.bits.ones()
    }

    pub fn union_with(&mut self, other: &VertexSet) {
        self.bits.union_with(&other.bits);
    }

    pub fn difference_with(&mut self, other: &VertexSet) {
        self.bits.difference_with(&other.bits);
    }

    pub fn intersect_with(&mut self, other: &VertexSet) {
        self.bits.intersect_with(&other.bits);
    }

    pub fn intersection_count(&self, other: &VertexSet) -> usize {
        self.bits.intersection(&other.bits).count()
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        self.bits.is_disjoint(&other.bits)
    }
}

impl std::fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<VertexId> for VertexSet {
    /// Builds a set sized to hold the largest element; prefer
    /// [`VertexSet::from_iter_n`] when the universe size is known.
    fn from_iter<T: IntoIterator<Item = VertexId>>(it: T) -> Self {
        let vs: Vec<_> = it.into_iter().collect();
        let n = vs.iter().max().map_or(0, |&m| m + 1);
        VertexSet::from_iter_n(n, vs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use proptest::prelude::*;

    fn vs(n: usize, items: &[usize]) -> VertexSet {
        VertexSet::from_iter_n(n, items.iter().copied())
    }

    #[test]
    fn rejects_non_trees() {
        assert_eq!(
            Instance::new(3, 1, vec![(0, 1, 1, 1)], vec![1; 3]).unwrap_err(),
            Error::NotATree
        );
        assert_eq!(
            Instance::new(3, 1, vec![(0, 1, 1, 1), (0, 1, 2, 1)], vec![1; 3]).unwrap_err(),
            Error::NotATree
        );
        assert_eq!(
            Instance::new(2, 1, vec![(0, 1, 1, 0)], vec![1; 2]).unwrap_err(),
            Error::ZeroCapacity(0, 1)
        );
        assert_eq!(
            Instance::new(2, 1, vec![(0, 5, 1, 1)], vec![1; 2]).unwrap_err(),
            Error::BadVertex(5, 2)
        );
    }

    #[test]
    fn detached_subtree_splits_at_the_edge() {
        let inst = gen::path(5, 1);
        let all = VertexSet::full(5);
        assert_eq!(inst.detached_subtree(&all, 1, 2).unwrap(), vs(5, &[0, 1]));
        assert_eq!(
            inst.detached_subtree(&all, 2, 1).unwrap(),
            vs(5, &[2, 3, 4])
        );
        assert_eq!(
            inst.detached_subtree(&all, 0, 2).unwrap_err(),
            Error::NotAdjacent(0, 2)
        );
        let mut alive = all.clone();
        alive.remove(4);
        assert_eq!(inst.detached_subtree(&alive, 2, 1).unwrap(), vs(5, &[2, 3]));
    }

    #[test]
    fn median_picks_the_centroid_smallest_id_on_ties() {
        assert_eq!(gen::path(5, 1).tree_median(&VertexSet::full(5)).unwrap(), 2);
        assert_eq!(gen::path(2, 1).tree_median(&VertexSet::full(2)).unwrap(), 0);
        assert_eq!(gen::star3().tree_median(&VertexSet::full(4)).unwrap(), 0);
        let inst = gen::path(5, 1);
        assert_eq!(inst.tree_median(&vs(5, &[3, 4])).unwrap(), 3);
        assert_eq!(
            inst.tree_median(&VertexSet::empty(5)).unwrap_err(),
            Error::EmptySet
        );
        assert_eq!(
            inst.tree_median(&vs(5, &[0, 4])).unwrap_err(),
            Error::Disconnected
        );
    }

    #[test]
    fn hub_structure_spans_the_sinks() {
        let inst = gen::path(4, 2);
        let hs = inst
            .hub_structure(&VertexSet::full(4), &vs(4, &[0, 3]))
            .unwrap();
        assert_eq!(hs.hub_tree, VertexSet::full(4));
        assert!(hs.hubs.is_empty());

        let star = gen::star3();
        let hs = star
            .hub_structure(&VertexSet::full(4), &vs(4, &[1, 2, 3]))
            .unwrap();
        assert_eq!(hs.hub_tree, VertexSet::full(4));
        assert_eq!(hs.hubs, vs(4, &[0]));

        // A single sink spans only itself.
        let hs = inst
            .hub_structure(&VertexSet::full(4), &vs(4, &[0]))
            .unwrap();
        assert_eq!(hs.hub_tree, vs(4, &[0]));

        // Internal sinks are rejected.
        assert_eq!(
            inst.hub_structure(&VertexSet::full(4), &vs(4, &[1]))
                .unwrap_err(),
            Error::SinkNotLeaf(1)
        );
    }

    #[test]
    fn bulk_path_sweeps_sink_free_branches() {
        // Star with an extra leaf 4 under leaf 1.
        let inst = Instance::new(
            5,
            2,
            vec![(0, 1, 1, 1), (0, 2, 1, 1), (0, 3, 1, 1), (1, 4, 1, 1)],
            vec![0, 1, 1, 1, 1],
        )
        .unwrap();
        let all = VertexSet::full(5);
        let sinks = vs(5, &[2, 3]);
        // Path 2-0-3 plus the sink-free branch {1, 4} hanging off 0.
        assert_eq!(
            inst.bulk_path(&all, &sinks, 2, 3).unwrap(),
            vs(5, &[0, 1, 2, 3, 4])
        );
        // With a sink inside the branch, the branch stays out.
        let sinks = vs(5, &[2, 3, 4]);
        assert_eq!(inst.bulk_path(&all, &sinks, 2, 3).unwrap(), vs(5, &[0, 2, 3]));
    }

    #[test]
    fn compartments_split_at_the_given_vertices() {
        let inst = gen::path(5, 1);
        let all = VertexSet::full(5);
        let comps = inst.compartments(&all, &vs(5, &[2])).unwrap();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].vertices, vs(5, &[0, 1, 2]));
        assert_eq!(comps[0].boundary, vs(5, &[2]));
        assert_eq!(comps[1].vertices, vs(5, &[2, 3, 4]));
        assert_eq!(comps[1].boundary, vs(5, &[2]));

        let comps = inst.compartments(&all, &vs(5, &[1, 3])).unwrap();
        let got: Vec<_> = comps.iter().map(|c| c.vertices.clone()).collect();
        assert_eq!(
            got,
            vec![vs(5, &[0, 1]), vs(5, &[1, 2, 3]), vs(5, &[3, 4])]
        );
        assert_eq!(comps[1].boundary, vs(5, &[1, 3]));

        // No split vertices: one compartment, no boundary.
        let comps = inst.compartments(&all, &VertexSet::empty(5)).unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].vertices, all);
        assert!(comps[0].boundary.is_empty());

        // Adjacent split vertices still cover their shared edge.
        let comps = inst.compartments(&all, &vs(5, &[1, 2])).unwrap();
        let got: Vec<_> = comps.iter().map(|c| c.vertices.clone()).collect();
        assert_eq!(got, vec![vs(5, &[0, 1]), vs(5, &[1, 2]), vs(5, &[2, 3, 4])]);
    }

    proptest! {
        #[test]
        fn compartments_cover_and_bound_correctly(seed in 0u64..500, n in 2usize..24, splits in 0usize..6) {
            let inst = gen::random_instance(n, 1, gen::Shape::Random, seed, gen::AttrRanges::default());
            let all = VertexSet::full(n);
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed ^ 0x9e37);
            let w = VertexSet::from_iter_n(n, (0..splits).map(|_| rand::Rng::gen_range(&mut rng, 0..n)));
            let comps = inst.compartments(&all, &w).unwrap();
            // Every vertex is covered; every edge lands in exactly one compartment.
            let mut cover = VertexSet::empty(n);
            for c in &comps {
                cover.union_with(&c.vertices);
                // Boundaries split vertices only, and lie in the compartment.
                prop_assert!(c.boundary.is_subset(&c.vertices));
                for b in c.boundary.iter() {
                    prop_assert!(w.contains(b));
                }
            }
            prop_assert_eq!(cover, all);
            for e in inst.edges() {
                let holders = comps
                    .iter()
                    .filter(|c| c.vertices.contains(e.u) && c.vertices.contains(e.v))
                    .count();
                prop_assert_eq!(holders, 1);
            }
        }

        #[test]
        fn median_minimizes_worst_component(seed in 0u64..200, n in 1usize..16) {
            let inst = gen::random_instance(n, 1, gen::Shape::Random, seed, gen::AttrRanges::default());
            let all = VertexSet::full(n);
            let m = inst.tree_median(&all).unwrap();
            let worst = |v: VertexId| {
                let mut within = all.clone();
                within.remove(v);
                let mut biggest = 0;
                for y in inst.neighbors(v) {
                    biggest = biggest.max(inst.component_of(&within, y).len());
                }
                biggest
            };
            let wm = worst(m);
            for v in 0..n {
                prop_assert!(wm < worst(v) || (wm == worst(v) && m <= v));
            }
        }
    }
}
