//! Chain-graph data model and structural operations: validation, parent and
//! ancestor queries, connectivity components, moralization, induced
//! subgraphs and complex enumeration.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 1-based vertex identifier. Vertex `v` maps to matrix row/column `v - 1`.
pub type Vertex = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("vertex {0} is not in the graph (valid ids are 1..={1})")]
    UnknownVertex(Vertex, usize),
}

/// Structural defect reported by [`ChainGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    SelfLoop(Vertex),
    /// More than one edge between the same vertex pair.
    DuplicateEdge(Vertex, Vertex),
    /// Closed descending route with at least one directed edge; the vertex
    /// sequence starts and ends at the same node.
    DirectedPseudocycle(Vec<Vertex>),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfLoop(v) => write!(f, "self-loop at {v}"),
            Violation::DuplicateEdge(a, b) => write!(f, "duplicate edge between {a} and {b}"),
            Violation::DirectedPseudocycle(cycle) => {
                let s: Vec<String> = cycle.iter().map(|v| v.to_string()).collect();
                write!(f, "directed pseudocycle {}", s.join(","))
            }
        }
    }
}

/// Mixed graph over vertices `1..=n` with undirected and directed edges.
///
/// Construction only rejects out-of-range vertex ids; everything else
/// (self-loops, duplicate pairs, directed pseudocycles) is reported by
/// [`ChainGraph::validate`] so that defective inputs can be diagnosed.
/// All other operations assume a valid chain graph.
///
/// Immutable after construction; cheap to clone and safe to share across
/// threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainGraph {
    n: usize,
    undirected: BTreeSet<(Vertex, Vertex)>,
    directed: BTreeSet<(Vertex, Vertex)>,
    und_adj: Vec<Vec<Vertex>>,
    parent_adj: Vec<Vec<Vertex>>,
    child_adj: Vec<Vec<Vertex>>,
}

/// Connectivity components in a well-ordering: every directed edge points
/// from an earlier component to a strictly later one. Ties in the
/// topological order are broken by the smallest contained vertex id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentDecomposition {
    components: Vec<Vec<Vertex>>,
    index: Vec<usize>,
}

impl ComponentDecomposition {
    pub fn components(&self) -> &[Vec<Vertex>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Position of the component containing `v` in the well-ordering.
    pub fn component_of(&self, v: Vertex) -> usize {
        self.index[v - 1]
    }
}

/// Induced path `left -> region[0] - ... - region[last] <- right` with no
/// other edges among its vertices. A complex and its mirror image are the
/// same object; the stored form has `left <= right`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Complex {
    pub left: Vertex,
    pub right: Vertex,
    pub region: Vec<Vertex>,
}

impl Complex {
    pub fn new(left: Vertex, region: Vec<Vertex>, right: Vertex) -> Self {
        if left <= right {
            Complex { left, right, region }
        } else {
            let mut region = region;
            region.reverse();
            Complex { left: right, right: left, region }
        }
    }
}

impl fmt::Display for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let region: Vec<String> = self.region.iter().map(|v| v.to_string()).collect();
        write!(f, "{} -> [{}] <- {}", self.left, region.join(","), self.right)
    }
}

/// Compact serializable description of a graph, used in reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: Vec<String>,
}

impl ChainGraph {
    /// Build a graph over vertices `1..=n`. Edges with endpoints outside
    /// that range are rejected; duplicates within one edge class collapse.
    pub fn new(
        n: usize,
        undirected: impl IntoIterator<Item = (Vertex, Vertex)>,
        directed: impl IntoIterator<Item = (Vertex, Vertex)>,
    ) -> Result<Self, GraphError> {
        let check = |v: Vertex| -> Result<(), GraphError> {
            if v == 0 || v > n {
                Err(GraphError::UnknownVertex(v, n))
            } else {
                Ok(())
            }
        };
        let mut und = BTreeSet::new();
        for (a, b) in undirected {
            check(a)?;
            check(b)?;
            und.insert((a.min(b), a.max(b)));
        }
        let mut dir = BTreeSet::new();
        for (t, h) in directed {
            check(t)?;
            check(h)?;
            dir.insert((t, h));
        }
        let mut und_adj = vec![Vec::new(); n];
        for &(a, b) in &und {
            if a != b {
                und_adj[a - 1].push(b);
                und_adj[b - 1].push(a);
            }
        }
        let mut parent_adj = vec![Vec::new(); n];
        let mut child_adj = vec![Vec::new(); n];
        for &(t, h) in &dir {
            if t != h {
                child_adj[t - 1].push(h);
                parent_adj[h - 1].push(t);
            }
        }
        for adj in und_adj
            .iter_mut()
            .chain(parent_adj.iter_mut())
            .chain(child_adj.iter_mut())
        {
            adj.sort_unstable();
        }
        Ok(ChainGraph { n, undirected: und, directed: dir, und_adj, parent_adj, child_adj })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> {
        1..=self.n
    }

    pub fn undirected_edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.undirected.iter().copied()
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.directed.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.undirected.len() + self.directed.len()
    }

    pub fn has_undirected(&self, a: Vertex, b: Vertex) -> bool {
        self.undirected.contains(&(a.min(b), a.max(b)))
    }

    pub fn has_directed(&self, tail: Vertex, head: Vertex) -> bool {
        self.directed.contains(&(tail, head))
    }

    /// Any edge between the pair, regardless of kind or orientation.
    pub fn adjacent(&self, a: Vertex, b: Vertex) -> bool {
        self.has_undirected(a, b) || self.has_directed(a, b) || self.has_directed(b, a)
    }

    /// Undirected neighbours of `v`, ascending.
    pub fn neighbours(&self, v: Vertex) -> &[Vertex] {
        &self.und_adj[v - 1]
    }

    /// Tails of directed edges into `v`, ascending.
    pub fn parents(&self, v: Vertex) -> &[Vertex] {
        &self.parent_adj[v - 1]
    }

    /// Heads of directed edges out of `v`, ascending.
    pub fn children(&self, v: Vertex) -> &[Vertex] {
        &self.child_adj[v - 1]
    }

    fn check_set(&self, set: &[Vertex]) -> Result<(), GraphError> {
        for &v in set {
            if v == 0 || v > self.n {
                return Err(GraphError::UnknownVertex(v, self.n));
            }
        }
        Ok(())
    }

    /// All tails of directed edges whose head lies in `set`.
    pub fn parents_of_set(&self, set: &[Vertex]) -> Result<BTreeSet<Vertex>, GraphError> {
        self.check_set(set)?;
        let mut out = BTreeSet::new();
        for &v in set {
            out.extend(self.parents(v).iter().copied());
        }
        Ok(out)
    }

    /// Vertices with a descending route into `set`; includes `set` itself
    /// (singletons are routes of length zero).
    pub fn ancestors(&self, set: &[Vertex]) -> Result<BTreeSet<Vertex>, GraphError> {
        self.check_set(set)?;
        Ok(self.closure(set, |g, v| {
            g.neighbours(v).iter().chain(g.parents(v).iter()).copied()
        }))
    }

    /// Vertices reachable from `set` by a descending route; includes `set`.
    pub fn descendants(&self, set: &[Vertex]) -> Result<BTreeSet<Vertex>, GraphError> {
        self.check_set(set)?;
        Ok(self.closure(set, |g, v| {
            g.neighbours(v).iter().chain(g.children(v).iter()).copied()
        }))
    }

    fn closure<'a, I, F>(&'a self, set: &[Vertex], step: F) -> BTreeSet<Vertex>
    where
        I: Iterator<Item = Vertex>,
        F: Fn(&'a Self, Vertex) -> I,
    {
        let mut seen: BTreeSet<Vertex> = set.iter().copied().collect();
        let mut queue: VecDeque<Vertex> = seen.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            for w in step(self, v) {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// Undirected-connectivity components with deterministic ids assigned
    /// in order of smallest unvisited vertex. Returns `(component id per
    /// vertex, component count)`.
    fn raw_components(&self) -> (Vec<usize>, usize) {
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        for start in 1..=self.n {
            if comp[start - 1] != usize::MAX {
                continue;
            }
            comp[start - 1] = next;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in self.neighbours(v) {
                    if comp[w - 1] == usize::MAX {
                        comp[w - 1] = next;
                        queue.push_back(w);
                    }
                }
            }
            next += 1;
        }
        (comp, next)
    }

    /// Shortest undirected path between two vertices of one component.
    fn undirected_path(&self, from: Vertex, to: Vertex) -> Option<Vec<Vertex>> {
        if from == to {
            return Some(vec![from]);
        }
        let mut prev = vec![0usize; self.n];
        let mut queue = VecDeque::from([from]);
        prev[from - 1] = from;
        while let Some(v) = queue.pop_front() {
            for &w in self.neighbours(v) {
                if prev[w - 1] == 0 {
                    prev[w - 1] = v;
                    if w == to {
                        let mut path = vec![to];
                        let mut cur = to;
                        while cur != from {
                            cur = prev[cur - 1];
                            path.push(cur);
                        }
                        path.reverse();
                        return Some(path);
                    }
                    queue.push_back(w);
                }
            }
        }
        None
    }

    /// Check both chain-graph invariants: single edges between vertex
    /// pairs and absence of directed pseudocycles. Violations are
    /// returned, not thrown; an empty list means the graph is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let loops = self
            .undirected
            .iter()
            .chain(self.directed.iter())
            .filter(|(a, b)| a == b)
            .map(|&(a, _)| a);
        out.extend(loops.map(Violation::SelfLoop));
        let mut per_pair: BTreeMap<(Vertex, Vertex), usize> = BTreeMap::new();
        for &(a, b) in &self.undirected {
            if a != b {
                *per_pair.entry((a, b)).or_default() += 1;
            }
        }
        for &(t, h) in &self.directed {
            if t != h {
                *per_pair.entry((t.min(h), t.max(h))).or_default() += 1;
            }
        }
        for (&(a, b), &count) in &per_pair {
            if count > 1 {
                out.push(Violation::DuplicateEdge(a, b));
            }
        }
        out.extend(self.pseudocycles());
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Pseudocycle witnesses. A directed edge inside one undirected
    /// component closes through an undirected path; otherwise a cycle in
    /// the component digraph is expanded to a vertex route.
    fn pseudocycles(&self) -> Vec<Violation> {
        let (comp, ncomp) = self.raw_components();
        let mut out = Vec::new();
        let mut comp_arcs: BTreeMap<(usize, usize), (Vertex, Vertex)> = BTreeMap::new();
        for &(t, h) in &self.directed {
            if t == h {
                continue;
            }
            let (ct, ch) = (comp[t - 1], comp[h - 1]);
            if ct == ch {
                let back = self
                    .undirected_path(h, t)
                    .expect("same component implies an undirected path");
                let mut cycle = vec![t];
                cycle.extend(back);
                out.push(Violation::DirectedPseudocycle(canonical_cycle(cycle)));
            } else {
                comp_arcs.entry((ct, ch)).or_insert((t, h));
            }
        }
        if let Some(comp_cycle) = digraph_cycle(ncomp, comp_arcs.keys().copied()) {
            let m = comp_cycle.len();
            let mut route: Vec<Vertex> = Vec::new();
            for i in 0..m {
                let arc = (comp_cycle[i], comp_cycle[(i + 1) % m]);
                let &(t, h) = comp_arcs.get(&arc).expect("arc from cycle detection");
                if i == 0 {
                    route.push(t);
                } else {
                    let prev = *route.last().unwrap();
                    let mut join = self.undirected_path(prev, t).expect("within component");
                    route.append(&mut join.split_off(1));
                }
                route.push(h);
            }
            let last = *route.last().unwrap();
            let first = route[0];
            let mut close = self.undirected_path(last, first).expect("within component");
            route.append(&mut close.split_off(1));
            out.push(Violation::DirectedPseudocycle(canonical_cycle(route)));
        }
        out
    }

    /// Maximal undirected-connected vertex sets in a well-ordering.
    pub fn components(&self) -> ComponentDecomposition {
        let (comp, ncomp) = self.raw_components();
        let mut members: Vec<Vec<Vertex>> = vec![Vec::new(); ncomp];
        for v in 1..=self.n {
            members[comp[v - 1]].push(v);
        }
        // Kahn's algorithm over the component digraph; the ready set is a
        // min-heap keyed by smallest contained vertex for determinism.
        let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ncomp];
        let mut indeg = vec![0usize; ncomp];
        for &(t, h) in &self.directed {
            if t == h {
                continue;
            }
            let (ct, ch) = (comp[t - 1], comp[h - 1]);
            if ct != ch && succ[ct].insert(ch) {
                indeg[ch] += 1;
            }
        }
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;
        let mut heap: BinaryHeap<Reverse<(Vertex, usize)>> = (0..ncomp)
            .filter(|&c| indeg[c] == 0)
            .map(|c| Reverse((members[c][0], c)))
            .collect();
        let mut order = Vec::with_capacity(ncomp);
        while let Some(Reverse((_, c))) = heap.pop() {
            order.push(c);
            for &s in &succ[c] {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    heap.push(Reverse((members[s][0], s)));
                }
            }
        }
        // Cyclic (invalid) inputs leave components behind; append them so
        // the decomposition stays total.
        if order.len() < ncomp {
            let mut left: Vec<usize> = (0..ncomp).filter(|c| !order.contains(c)).collect();
            left.sort_by_key(|&c| members[c][0]);
            order.extend(left);
        }
        let mut components = Vec::with_capacity(ncomp);
        let mut index = vec![0usize; self.n];
        for (pos, &c) in order.iter().enumerate() {
            for &v in &members[c] {
                index[v - 1] = pos;
            }
            components.push(members[c].clone());
        }
        ComponentDecomposition { components, index }
    }

    /// Undirected graph with the original adjacencies plus an edge between
    /// every two vertices that are jointly parents of one connectivity
    /// component.
    pub fn moral_graph(&self) -> ChainGraph {
        let mut edges: BTreeSet<(Vertex, Vertex)> = self
            .undirected
            .iter()
            .copied()
            .chain(self.directed.iter().map(|&(t, h)| (t.min(h), t.max(h))))
            .collect();
        let decomp = self.components();
        for members in decomp.components() {
            let parents: Vec<Vertex> = self
                .parents_of_set(members)
                .expect("component members are in range")
                .into_iter()
                .collect();
            for (k, &a) in parents.iter().enumerate() {
                for &b in &parents[k + 1..] {
                    edges.insert((a, b));
                }
            }
        }
        ChainGraph::new(self.n, edges, []).expect("edges drawn from this graph")
    }

    /// Graph over the same vertex universe keeping only edges with both
    /// endpoints in `keep`.
    pub fn induced_subgraph(&self, keep: &[Vertex]) -> Result<ChainGraph, GraphError> {
        self.check_set(keep)?;
        let set: BTreeSet<Vertex> = keep.iter().copied().collect();
        let und = self
            .undirected
            .iter()
            .copied()
            .filter(|(a, b)| set.contains(a) && set.contains(b));
        let dir = self
            .directed
            .iter()
            .copied()
            .filter(|(t, h)| set.contains(t) && set.contains(h));
        ChainGraph::new(self.n, und, dir)
    }

    /// Every directed edge replaced by an undirected one.
    pub fn underlying_ug(&self) -> ChainGraph {
        let edges: BTreeSet<(Vertex, Vertex)> = self
            .undirected
            .iter()
            .copied()
            .chain(self.directed.iter().map(|&(t, h)| (t.min(h), t.max(h))))
            .collect();
        ChainGraph::new(self.n, edges, []).expect("edges drawn from this graph")
    }

    /// Skeleton as a set of unordered adjacent pairs.
    pub fn skeleton(&self) -> BTreeSet<(Vertex, Vertex)> {
        self.undirected
            .iter()
            .copied()
            .chain(self.directed.iter().map(|&(t, h)| (t.min(h), t.max(h))))
            .collect()
    }

    /// True iff the subgraph induced by `{left} ∪ region ∪ {right}` is
    /// exactly `left -> region[0] - ... - region[last] <- right`.
    pub fn is_complex_pattern(&self, left: Vertex, region: &[Vertex], right: Vertex) -> bool {
        if region.is_empty() || left == right {
            return false;
        }
        let mut nodes = vec![left, right];
        nodes.extend_from_slice(region);
        let distinct: BTreeSet<Vertex> = nodes.iter().copied().collect();
        if distinct.len() != nodes.len() {
            return false;
        }
        let mut expect_dir: BTreeSet<(Vertex, Vertex)> = BTreeSet::new();
        expect_dir.insert((left, region[0]));
        expect_dir.insert((right, *region.last().unwrap()));
        let mut expect_und: BTreeSet<(Vertex, Vertex)> = BTreeSet::new();
        for pair in region.windows(2) {
            expect_und.insert((pair[0].min(pair[1]), pair[0].max(pair[1])));
        }
        let nodes: Vec<Vertex> = distinct.into_iter().collect();
        for (k, &a) in nodes.iter().enumerate() {
            for &b in &nodes[k + 1..] {
                let want_und = expect_und.contains(&(a, b));
                let want_ab = expect_dir.contains(&(a, b));
                let want_ba = expect_dir.contains(&(b, a));
                if self.has_undirected(a, b) != want_und
                    || self.has_directed(a, b) != want_ab
                    || self.has_directed(b, a) != want_ba
                {
                    return false;
                }
            }
        }
        true
    }

    /// All complexes, canonically ordered by endpoints then region; each
    /// complex appears once per unordered endpoint pair.
    pub fn complexes(&self) -> Vec<Complex> {
        let decomp = self.components();
        let mut out: BTreeSet<Complex> = BTreeSet::new();
        for u in 1..=self.n {
            for w in u + 1..=self.n {
                if self.adjacent(u, w) {
                    continue;
                }
                for &x in self.children(u) {
                    for &y in self.children(w) {
                        if decomp.component_of(x) != decomp.component_of(y) {
                            continue;
                        }
                        for region in self.simple_undirected_paths(x, y) {
                            if self.is_complex_pattern(u, &region, w) {
                                out.insert(Complex::new(u, region, w));
                            }
                        }
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    /// All simple paths from `x` to `y` along undirected edges, in
    /// deterministic (ascending neighbour) order. `x == y` yields `[x]`.
    fn simple_undirected_paths(&self, x: Vertex, y: Vertex) -> Vec<Vec<Vertex>> {
        let mut out = Vec::new();
        let mut path = vec![x];
        let mut on_path = vec![false; self.n];
        on_path[x - 1] = true;
        self.path_dfs(y, &mut path, &mut on_path, &mut out);
        out
    }

    fn path_dfs(
        &self,
        target: Vertex,
        path: &mut Vec<Vertex>,
        on_path: &mut Vec<bool>,
        out: &mut Vec<Vec<Vertex>>,
    ) {
        let cur = *path.last().unwrap();
        if cur == target {
            out.push(path.clone());
            return;
        }
        for &w in self.neighbours(cur) {
            if !on_path[w - 1] {
                on_path[w - 1] = true;
                path.push(w);
                self.path_dfs(target, path, on_path, out);
                path.pop();
                on_path[w - 1] = false;
            }
        }
    }

    /// Edge list rendering, undirected edges first.
    pub fn summary(&self) -> GraphSummary {
        let mut edges: Vec<String> = self
            .undirected
            .iter()
            .map(|(a, b)| format!("{a} -- {b}"))
            .collect();
        edges.extend(self.directed.iter().map(|(t, h)| format!("{t} -> {h}")));
        GraphSummary { nodes: self.n, edges }
    }

    /// Stable hex digest of the canonical edge list.
    pub fn digest(&self) -> String {
        let summary = self.summary();
        let text = format!("n={};{}", summary.nodes, summary.edges.join(";"));
        crate::digest::fnv1a_hex(text.as_bytes())
    }
}

/// Rotate a closed vertex sequence (first == last) so the smallest vertex
/// comes first.
fn canonical_cycle(mut cycle: Vec<Vertex>) -> Vec<Vertex> {
    debug_assert!(cycle.len() >= 2 && cycle[0] == *cycle.last().unwrap());
    cycle.pop();
    let pivot = cycle
        .iter()
        .enumerate()
        .min_by_key(|&(_, &v)| v)
        .map(|(k, _)| k)
        .unwrap_or(0);
    cycle.rotate_left(pivot);
    cycle.push(cycle[0]);
    cycle
}

/// First cycle found in a digraph over `0..n`, as a vertex list without the
/// closing repeat, or `None` if acyclic. Deterministic: arcs are explored
/// in ascending order.
fn digraph_cycle(n: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> Option<Vec<usize>> {
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, b) in arcs {
        succ[a].push(b);
    }
    for s in &mut succ {
        s.sort_unstable();
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut mark = vec![Mark::White; n];
    let mut stack: Vec<usize> = Vec::new();
    for root in 0..n {
        if mark[root] != Mark::White {
            continue;
        }
        // Iterative DFS keeping the grey path on an explicit stack.
        let mut work: Vec<(usize, usize)> = vec![(root, 0)];
        mark[root] = Mark::Grey;
        stack.push(root);
        while let Some(&mut (v, ref mut next)) = work.last_mut() {
            if *next < succ[v].len() {
                let w = succ[v][*next];
                *next += 1;
                match mark[w] {
                    Mark::Grey => {
                        let start = stack.iter().position(|&u| u == w).unwrap();
                        return Some(stack[start..].to_vec());
                    }
                    Mark::White => {
                        mark[w] = Mark::Grey;
                        stack.push(w);
                        work.push((w, 0));
                    }
                    Mark::Black => {}
                }
            } else {
                mark[v] = Mark::Black;
                stack.pop();
                work.pop();
            }
        }
    }
    None
}
