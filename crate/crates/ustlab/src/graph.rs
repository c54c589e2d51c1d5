//! Undirected weighted graphs, spanning trees, and tree-collapse.
//!
//! Graphs are simple (at most one edge per unordered vertex pair) with
//! optional self-loops and strictly positive edge weights, stored in
//! compressed adjacency form with per-vertex cumulative weight arrays so a
//! random-walk step is a single binary search. Vertex ids are dense and
//! 0-based everywhere.

use crate::{Result, UstError};
use std::collections::HashMap;
use std::fmt::Write as _;

/// Built-in graph families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Cycle C_n, params `[n]`, n >= 2.
    Cycle,
    /// Complete graph K_n, params `[n]`, n >= 2.
    Complete,
    /// Hypercube Q_d on 2^d vertices, params `[d]`, d >= 1.
    Hypercube,
    /// w x h grid with 4-neighbour adjacency, params `[w, h]`, w, h >= 2.
    Grid,
    /// Balanced complete bipartite graph K_{n/2,n/2}, params `[n]`, n even and >= 2.
    CompleteBipartite,
}

impl Family {
    /// Parse a family name as used by the command line.
    pub fn parse(name: &str) -> Result<Family> {
        match name {
            "cycle" => Ok(Family::Cycle),
            "complete" => Ok(Family::Complete),
            "hypercube" => Ok(Family::Hypercube),
            "grid" => Ok(Family::Grid),
            "complete_bipartite" => Ok(Family::CompleteBipartite),
            other => Err(UstError::InvalidParam(format!(
                "unknown graph family '{other}' (expected cycle, complete, hypercube, grid, complete_bipartite)"
            ))),
        }
    }
}

/// An undirected edge with its weight. For self-loops `u == v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Connected undirected graph with positive edge weights.
///
/// The adjacency of each vertex is a contiguous slice of neighbour ids plus a
/// running cumulative-weight array; a self-loop appears once in its vertex's
/// adjacency and contributes its weight once to the vertex's total weight
/// (so on K_n with self-loops every transition, including the loop, has
/// probability 1/n).
#[derive(Debug, Clone)]
pub struct Graph {
    label: String,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    /// Cumulative weights aligned with `neighbors`, restarting at each vertex.
    cum_weights: Vec<f64>,
    edges: Vec<Edge>,
    unit_weights: bool,
    has_self_loops: bool,
}

impl Graph {
    /// Build a graph from an explicit edge list.
    ///
    /// Validates that edges are in range, unordered pairs are not repeated,
    /// weights are positive and finite, and the result is connected.
    pub fn new(n: usize, edges: Vec<Edge>, label: impl Into<String>) -> Result<Graph> {
        if n == 0 {
            return Err(UstError::InvalidGraph("graph must have at least one vertex".into()));
        }
        let mut seen: HashMap<(usize, usize), ()> = HashMap::with_capacity(edges.len());
        let mut has_self_loops = false;
        let mut unit_weights = true;
        for e in &edges {
            if e.u >= n || e.v >= n {
                return Err(UstError::InvalidGraph(format!(
                    "edge ({}, {}) out of range for {n} vertices",
                    e.u, e.v
                )));
            }
            if !(e.w > 0.0) || !e.w.is_finite() {
                return Err(UstError::InvalidGraph(format!(
                    "edge ({}, {}) has nonpositive or non-finite weight {}",
                    e.u, e.v, e.w
                )));
            }
            let key = (e.u.min(e.v), e.u.max(e.v));
            if seen.insert(key, ()).is_some() {
                return Err(UstError::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    key.0, key.1
                )));
            }
            if e.u == e.v {
                has_self_loops = true;
            }
            if e.w != 1.0 {
                unit_weights = false;
            }
        }

        // Adjacency counts (self-loop listed once under its vertex).
        let mut deg = vec![0usize; n];
        for e in &edges {
            deg[e.u] += 1;
            if e.u != e.v {
                deg[e.v] += 1;
            }
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + deg[v];
        }
        let total = offsets[n];
        let mut neighbors = vec![0usize; total];
        let mut weights = vec![0.0f64; total];
        let mut cursor = offsets.clone();
        for e in &edges {
            neighbors[cursor[e.u]] = e.v;
            weights[cursor[e.u]] = e.w;
            cursor[e.u] += 1;
            if e.u != e.v {
                neighbors[cursor[e.v]] = e.u;
                weights[cursor[e.v]] = e.w;
                cursor[e.v] += 1;
            }
        }
        // Sort each adjacency slice by neighbour id for deterministic layout.
        let mut cum_weights = vec![0.0f64; total];
        for v in 0..n {
            let lo = offsets[v];
            let hi = offsets[v + 1];
            let mut pairs: Vec<(usize, f64)> = neighbors[lo..hi]
                .iter()
                .copied()
                .zip(weights[lo..hi].iter().copied())
                .collect();
            pairs.sort_by_key(|&(u, _)| u);
            let mut acc = 0.0;
            for (i, (u, w)) in pairs.into_iter().enumerate() {
                neighbors[lo + i] = u;
                acc += w;
                cum_weights[lo + i] = acc;
            }
        }

        let g = Graph {
            label: label.into(),
            offsets,
            neighbors,
            cum_weights,
            edges,
            unit_weights,
            has_self_loops,
        };
        if !g.is_connected() {
            return Err(UstError::InvalidGraph("graph is not connected".into()));
        }
        Ok(g)
    }

    /// Number of vertices.
    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges (self-loops count once).
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Human-readable label used in CSV output.
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Replace the label (used when loading edge lists from named files).
    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    /// The undirected edge list, in insertion order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbour ids of `v` (sorted ascending; a self-loop appears once).
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Cumulative weights aligned with [`Graph::neighbors`].
    pub fn cumulative_weights(&self, v: usize) -> &[f64] {
        &self.cum_weights[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Total weight incident to `v` (self-loop weight counted once).
    pub fn weight_degree(&self, v: usize) -> f64 {
        let lo = self.offsets[v];
        let hi = self.offsets[v + 1];
        if hi > lo {
            self.cum_weights[hi - 1]
        } else {
            0.0
        }
    }

    /// Number of adjacency entries at `v` (self-loop counted once).
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Weight of the edge `{u, v}` if present.
    pub fn edge_weight(&self, u: usize, v: usize) -> Option<f64> {
        let slice = self.neighbors(u);
        let idx = slice.binary_search(&v).ok()?;
        let lo = self.offsets[u];
        let cum = &self.cum_weights[lo..self.offsets[u + 1]];
        let prev = if idx == 0 { 0.0 } else { cum[idx - 1] };
        Some(cum[idx] - prev)
    }

    /// True when every edge has weight exactly 1.
    pub fn unit_weights(&self) -> bool {
        self.unit_weights
    }

    /// True when at least one self-loop is present.
    pub fn has_self_loops(&self) -> bool {
        self.has_self_loops
    }

    /// True when every pair of distinct vertices is adjacent (self-loops are
    /// ignored by the test).
    pub fn is_complete(&self) -> bool {
        let n = self.n();
        let expected_non_loop = n * (n - 1) / 2;
        let non_loop = self.edges.iter().filter(|e| e.u != e.v).count();
        non_loop == expected_non_loop
    }

    /// Stationary distribution of the weighted random walk: proportional to
    /// vertex weight degree (self-loop weight counted once).
    pub fn stationary(&self) -> Vec<f64> {
        let total: f64 = (0..self.n()).map(|v| self.weight_degree(v)).sum();
        (0..self.n()).map(|v| self.weight_degree(v) / total).collect()
    }

    fn is_connected(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &u in self.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == n
    }

    /// Return a copy with one unit-weight self-loop added at every vertex.
    pub fn with_self_loops(&self) -> Graph {
        let mut edges = self.edges.clone();
        for v in 0..self.n() {
            if self.edge_weight(v, v).is_none() {
                edges.push(Edge { u: v, v, w: 1.0 });
            }
        }
        let label = format!("{}_loops", self.label);
        Graph::new(self.n(), edges, label).expect("adding self-loops preserves validity")
    }

    /// Parse the `u v [w]` edge-list format.
    ///
    /// One edge per line; blank lines and lines starting with `#` are
    /// ignored; both LF and CRLF line endings are accepted. Vertex ids must
    /// be dense 0-based integers (the vertex count is one past the largest id
    /// mentioned). Repeating an unordered pair, a nonpositive weight, or a
    /// disconnected result is an error. A single `0 0` line is accepted as
    /// the one-vertex graph with a self-loop.
    ///
    /// ```
    /// use ustlab::graph::Graph;
    /// let g = Graph::from_edge_list("0 1\n1 2\n1 3\n2 3\n").unwrap();
    /// assert_eq!((g.n(), g.m()), (4, 4));
    /// ```
    pub fn from_edge_list(text: &str) -> Result<Graph> {
        let mut edges: Vec<Edge> = Vec::new();
        let mut max_id = 0usize;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r').trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 2 && tokens.len() != 3 {
                return Err(UstError::InvalidGraph(format!(
                    "line {}: expected 'u v' or 'u v w', got '{line}'",
                    lineno + 1
                )));
            }
            let u: usize = tokens[0].parse().map_err(|_| {
                UstError::InvalidGraph(format!("line {}: bad vertex id '{}'", lineno + 1, tokens[0]))
            })?;
            let v: usize = tokens[1].parse().map_err(|_| {
                UstError::InvalidGraph(format!("line {}: bad vertex id '{}'", lineno + 1, tokens[1]))
            })?;
            let w: f64 = if tokens.len() == 3 {
                tokens[2].parse().map_err(|_| {
                    UstError::InvalidGraph(format!("line {}: bad weight '{}'", lineno + 1, tokens[2]))
                })?
            } else {
                1.0
            };
            max_id = max_id.max(u).max(v);
            edges.push(Edge { u, v, w });
        }
        if edges.is_empty() {
            return Err(UstError::InvalidGraph("edge list is empty".into()));
        }
        Graph::new(max_id + 1, edges, "edge_list")
    }

    /// Serialize as `u v` / `u v w` lines compatible with [`Graph::from_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            if e.w == 1.0 {
                let _ = writeln!(out, "{} {}", e.u, e.v);
            } else {
                let _ = writeln!(out, "{} {} {}", e.u, e.v, e.w);
            }
        }
        out
    }
}

/// Build a graph from a named family.
///
/// Parameter shapes: `Cycle [n]`, `Complete [n]`, `Hypercube [d]`,
/// `Grid [w, h]`, `CompleteBipartite [n]` (n even, giving K_{n/2,n/2}).
/// When `self_loops` is set, one unit self-loop is added at every vertex.
pub fn make_family(family: Family, params: &[usize], self_loops: bool) -> Result<Graph> {
    let one_param = |name: &str| -> Result<usize> {
        if params.len() != 1 {
            return Err(UstError::InvalidParam(format!(
                "{name} takes exactly one parameter, got {:?}",
                params
            )));
        }
        Ok(params[0])
    };
    let g = match family {
        Family::Cycle => {
            let n = one_param("cycle")?;
            if n < 2 {
                return Err(UstError::InvalidParam(format!("cycle needs n >= 2, got {n}")));
            }
            let mut edges: Vec<Edge> = (0..n - 1).map(|i| Edge { u: i, v: i + 1, w: 1.0 }).collect();
            if n > 2 {
                edges.push(Edge { u: n - 1, v: 0, w: 1.0 });
            }
            Graph::new(n, edges, format!("cycle_{n}"))?
        }
        Family::Complete => {
            let n = one_param("complete")?;
            if n < 2 {
                return Err(UstError::InvalidParam(format!("complete needs n >= 2, got {n}")));
            }
            let mut edges = Vec::with_capacity(n * (n - 1) / 2);
            for u in 0..n {
                for v in u + 1..n {
                    edges.push(Edge { u, v, w: 1.0 });
                }
            }
            Graph::new(n, edges, format!("complete_{n}"))?
        }
        Family::Hypercube => {
            let d = one_param("hypercube")?;
            if d < 1 {
                return Err(UstError::InvalidParam("hypercube needs d >= 1".into()));
            }
            if d > 25 {
                return Err(UstError::InvalidParam(format!("hypercube dimension {d} too large")));
            }
            let n = 1usize << d;
            let mut edges = Vec::with_capacity(n * d / 2);
            for u in 0..n {
                for bit in 0..d {
                    let v = u ^ (1 << bit);
                    if u < v {
                        edges.push(Edge { u, v, w: 1.0 });
                    }
                }
            }
            Graph::new(n, edges, format!("hypercube_{d}"))?
        }
        Family::Grid => {
            if params.len() != 2 {
                return Err(UstError::InvalidParam(format!(
                    "grid takes [w, h], got {:?}",
                    params
                )));
            }
            let (w, h) = (params[0], params[1]);
            if w < 2 || h < 2 {
                return Err(UstError::InvalidParam(format!(
                    "grid needs w >= 2 and h >= 2, got {w} x {h}"
                )));
            }
            let idx = |row: usize, col: usize| row * w + col;
            let mut edges = Vec::new();
            for row in 0..h {
                for col in 0..w {
                    if col + 1 < w {
                        edges.push(Edge { u: idx(row, col), v: idx(row, col + 1), w: 1.0 });
                    }
                    if row + 1 < h {
                        edges.push(Edge { u: idx(row, col), v: idx(row + 1, col), w: 1.0 });
                    }
                }
            }
            Graph::new(w * h, edges, format!("grid_{w}x{h}"))?
        }
        Family::CompleteBipartite => {
            let n = one_param("complete_bipartite")?;
            if n < 2 || n % 2 != 0 {
                return Err(UstError::InvalidParam(format!(
                    "complete_bipartite needs an even n >= 2, got {n}"
                )));
            }
            let half = n / 2;
            let mut edges = Vec::with_capacity(half * half);
            for u in 0..half {
                for v in half..n {
                    edges.push(Edge { u, v, w: 1.0 });
                }
            }
            Graph::new(n, edges, format!("complete_bipartite_{half}_{half}"))?
        }
    };
    Ok(if self_loops { g.with_self_loops() } else { g })
}

/// Rooted spanning tree of a graph, stored as a parent array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    root: usize,
    parent: Vec<usize>,
}

impl Tree {
    /// Build from a parent array; `parent[root] == root`, every other vertex
    /// must reach the root by following parents. Validation is O(n): each
    /// vertex's chain is walked once and memoized.
    pub fn from_parents(root: usize, parent: Vec<usize>) -> Result<Tree> {
        let n = parent.len();
        if root >= n || parent[root] != root {
            return Err(UstError::InvalidParam("root must be its own parent".into()));
        }
        // 0 = unknown, 1 = on the current chain, 2 = known to reach the root.
        let mut state = vec![0u8; n];
        state[root] = 2;
        let mut chain = Vec::new();
        for v in 0..n {
            if state[v] != 0 {
                continue;
            }
            chain.clear();
            let mut cur = v;
            let ok = loop {
                match state[cur] {
                    2 => break true,
                    1 => break false, // cycle
                    _ => {}
                }
                state[cur] = 1;
                chain.push(cur);
                if parent[cur] >= n {
                    break false;
                }
                cur = parent[cur];
            };
            if !ok {
                return Err(UstError::InvalidParam(format!(
                    "vertex {v} does not reach the root through parents"
                )));
            }
            for &u in &chain {
                state[u] = 2;
            }
        }
        Ok(Tree { root, parent })
    }

    /// Number of vertices.
    pub fn n(&self) -> usize {
        self.parent.len()
    }

    /// The root vertex.
    pub fn root(&self) -> usize {
        self.root
    }

    /// Parent of `v` (the root is its own parent).
    pub fn parent(&self, v: usize) -> usize {
        self.parent[v]
    }

    /// Tree edges `{v, parent(v)}` for all non-root `v`, each normalized to
    /// `(min, max)` and sorted lexicographically.
    pub fn edges_sorted(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = (0..self.n())
            .filter(|&v| v != self.root)
            .map(|v| {
                let p = self.parent[v];
                (v.min(p), v.max(p))
            })
            .collect();
        edges.sort_unstable();
        edges
    }

    /// True when this is a spanning tree of `g`: same vertex set and every
    /// tree edge is a non-loop edge of `g`.
    pub fn is_spanning_tree_of(&self, g: &Graph) -> bool {
        if self.n() != g.n() {
            return false;
        }
        self.edges_sorted()
            .iter()
            .all(|&(u, v)| u != v && g.edge_weight(u, v).is_some())
    }

    /// Serialize as a sorted edge list followed by a `# root <r>` comment.
    /// The output parses back through [`Graph::from_edge_list`] and
    /// [`Tree::from_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (u, v) in self.edges_sorted() {
            let _ = writeln!(out, "{u} {v}");
        }
        let _ = writeln!(out, "# root {}", self.root);
        out
    }

    /// Parse the serialization produced by [`Tree::to_edge_list`]. Requires
    /// the edge set to form a spanning tree of its own vertex range and reads
    /// the root from the `# root <r>` comment (defaulting to 0 when absent).
    pub fn from_edge_list(text: &str) -> Result<Tree> {
        let mut root: Option<usize> = None;
        for raw in text.lines() {
            let line = raw.trim_end_matches('\r').trim();
            if let Some(rest) = line.strip_prefix("# root") {
                let r: usize = rest.trim().parse().map_err(|_| {
                    UstError::InvalidGraph(format!("bad root comment '{line}'"))
                })?;
                root = Some(r);
            }
        }
        let g = Graph::from_edge_list(text)?;
        let n = g.n();
        if g.m() != n - 1 {
            return Err(UstError::InvalidGraph(format!(
                "edge list has {} edges on {} vertices; a tree needs {}",
                g.m(),
                n,
                n - 1
            )));
        }
        let root = root.unwrap_or(0);
        if root >= n {
            return Err(UstError::InvalidGraph(format!("root {root} out of range")));
        }
        // Orient every edge toward the root with a BFS.
        let mut parent = vec![usize::MAX; n];
        parent[root] = root;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &u in g.neighbors(v) {
                if parent[u] == usize::MAX {
                    parent[u] = v;
                    queue.push_back(u);
                }
            }
        }
        Tree::from_parents(root, parent)
    }
}

/// Result of collapsing a connected vertex set of a graph to a single root.
///
/// New vertex 0 is the collapsed root; the remaining original vertices keep
/// their relative order. Parallel edges created by the collapse are merged
/// with summed weights, and edges internal to the collapsed set are dropped
/// (as are self-loops that would sit on the new root).
#[derive(Debug, Clone)]
pub struct CollapsedGraph {
    /// The quotient graph; vertex 0 is the collapsed root.
    pub graph: Graph,
    /// Map from quotient vertex id to original id. Entry 0 holds one
    /// representative of the collapsed set (its first member).
    pub orig_ids: Vec<usize>,
    /// For each quotient vertex `v`, the original endpoints inside the
    /// collapsed set of `v`'s edge to the root, with the original weights.
    /// Empty when `v` has no edge to the root. Sampling an endpoint from
    /// these weights recovers the original boundary edge a collapsed step
    /// corresponds to.
    pub boundary_options: Vec<Vec<(usize, f64)>>,
}

impl CollapsedGraph {
    /// Quotient id of an original vertex outside the collapsed set.
    pub fn quotient_id(&self, orig: usize) -> Option<usize> {
        self.orig_ids.iter().position(|&o| o == orig)
    }
}

/// Collapse the connected vertex set `inside` of `g` to a single root vertex.
///
/// `inside` must be nonempty, in range, duplicate-free, and induce a
/// connected subgraph. The collapse of a spanning set is the single-vertex
/// graph with no edges.
pub fn collapse(g: &Graph, inside: &[usize]) -> Result<CollapsedGraph> {
    let n = g.n();
    if inside.is_empty() {
        return Err(UstError::InvalidParam("collapse set must be nonempty".into()));
    }
    let mut in_set = vec![false; n];
    for &v in inside {
        if v >= n {
            return Err(UstError::InvalidParam(format!("vertex {v} out of range")));
        }
        if in_set[v] {
            return Err(UstError::InvalidParam(format!("vertex {v} repeated in collapse set")));
        }
        in_set[v] = true;
    }
    // Connectivity of the induced subgraph.
    {
        let mut seen = vec![false; n];
        let mut stack = vec![inside[0]];
        seen[inside[0]] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &u in g.neighbors(v) {
                if in_set[u] && !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        if count != inside.len() {
            return Err(UstError::InvalidParam(
                "collapse set does not induce a connected subgraph".into(),
            ));
        }
    }

    // Quotient ids: 0 = root, outside vertices in ascending original order.
    let mut orig_ids = vec![inside[0]];
    let mut quotient = vec![usize::MAX; n];
    for &v in inside {
        quotient[v] = 0;
    }
    for v in 0..n {
        if !in_set[v] {
            quotient[v] = orig_ids.len();
            orig_ids.push(v);
        }
    }
    let qn = orig_ids.len();

    let mut merged: HashMap<(usize, usize), f64> = HashMap::new();
    let mut boundary: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
    for e in g.edges() {
        let qu = quotient[e.u];
        let qv = quotient[e.v];
        if qu == 0 && qv == 0 {
            continue; // internal to the collapsed set (or a loop on it)
        }
        let key = (qu.min(qv), qu.max(qv));
        *merged.entry(key).or_insert(0.0) += e.w;
        if qu == 0 {
            boundary.entry(qv).or_default().push((e.u, e.w));
        } else if qv == 0 {
            boundary.entry(qu).or_default().push((e.v, e.w));
        }
    }
    let mut edges: Vec<Edge> = merged
        .into_iter()
        .map(|((u, v), w)| Edge { u, v, w })
        .collect();
    edges.sort_by_key(|e| (e.u, e.v));

    let label = format!("{}_collapsed", g.label());
    let graph = Graph::new(qn, edges, label)?;
    let mut boundary_options = vec![Vec::new(); qn];
    for (v, mut opts) in boundary {
        opts.sort_by_key(|&(u, _)| u);
        boundary_options[v] = opts;
    }
    Ok(CollapsedGraph { graph, orig_ids, boundary_options })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g0() -> Graph {
        Graph::from_edge_list("0 1\n1 2\n1 3\n2 3\n").unwrap()
    }

    #[test]
    fn families_have_expected_shapes() {
        let c6 = make_family(Family::Cycle, &[6], false).unwrap();
        assert_eq!((c6.n(), c6.m()), (6, 6));
        assert!((0..6).all(|v| c6.degree(v) == 2));

        let k5 = make_family(Family::Complete, &[5], false).unwrap();
        assert_eq!((k5.n(), k5.m()), (5, 10));

        let k5l = make_family(Family::Complete, &[5], true).unwrap();
        assert_eq!((k5l.n(), k5l.m()), (5, 15));
        assert!((0..5).all(|v| k5l.weight_degree(v) == 5.0));
        assert!(k5l.has_self_loops() && k5l.is_complete());

        let q3 = make_family(Family::Hypercube, &[3], false).unwrap();
        assert_eq!((q3.n(), q3.m()), (8, 12));

        let q12 = make_family(Family::Hypercube, &[12], false).unwrap();
        assert_eq!((q12.n(), q12.m()), (4096, 24576));
        assert!((0..q12.n()).all(|v| q12.degree(v) == 12));

        let grid = make_family(Family::Grid, &[5, 5], false).unwrap();
        assert_eq!((grid.n(), grid.m()), (25, 40));

        let k33 = make_family(Family::CompleteBipartite, &[6], false).unwrap();
        assert_eq!((k33.n(), k33.m()), (6, 9));
        assert!((0..6).all(|v| k33.degree(v) == 3));
        assert!(k33.edge_weight(0, 1).is_none() && k33.edge_weight(0, 3).is_some());
    }

    #[test]
    fn family_parameter_validation() {
        assert!(make_family(Family::Cycle, &[1], false).is_err());
        assert!(make_family(Family::Complete, &[1], false).is_err());
        assert!(make_family(Family::Hypercube, &[0], false).is_err());
        assert!(make_family(Family::Grid, &[1, 5], false).is_err());
        assert!(make_family(Family::Grid, &[5], false).is_err());
        assert!(make_family(Family::CompleteBipartite, &[5], false).is_err());
        assert!(make_family(Family::Cycle, &[3, 4], false).is_err());
    }

    #[test]
    fn cycle_2_is_a_single_edge() {
        let c2 = make_family(Family::Cycle, &[2], false).unwrap();
        assert_eq!((c2.n(), c2.m()), (2, 1));
    }

    #[test]
    fn edge_list_parses_g0() {
        let g = g0();
        assert_eq!((g.n(), g.m()), (4, 4));
        let degs: Vec<usize> = (0..4).map(|v| g.degree(v)).collect();
        assert_eq!(degs, vec![1, 3, 2, 2]);
        assert!(g.unit_weights() && !g.has_self_loops());
    }

    #[test]
    fn edge_list_accepts_comments_blanks_and_crlf() {
        let g = Graph::from_edge_list("# a square\r\n0 1\r\n\r\n1 2\n2 3\n# done\n0 3\n").unwrap();
        assert_eq!((g.n(), g.m()), (4, 4));
    }

    #[test]
    fn edge_list_accepts_weights() {
        let g = Graph::from_edge_list("0 1 2.5\n1 2 1\n0 2 1\n").unwrap();
        assert_eq!(g.edge_weight(0, 1), Some(2.5));
        assert!(!g.unit_weights());
    }

    #[test]
    fn edge_list_single_vertex_with_loop() {
        let g = Graph::from_edge_list("0 0\n").unwrap();
        assert_eq!((g.n(), g.m()), (1, 1));
        assert!(g.has_self_loops());
        assert_eq!(g.weight_degree(0), 1.0);
    }

    #[test]
    fn edge_list_rejects_bad_input() {
        assert!(Graph::from_edge_list("0 1\n0 1\n").is_err(), "duplicate edge");
        assert!(Graph::from_edge_list("0 1\n1 0\n").is_err(), "duplicate reversed edge");
        assert!(Graph::from_edge_list("0 1 0\n").is_err(), "zero weight");
        assert!(Graph::from_edge_list("0 1 -2\n").is_err(), "negative weight");
        assert!(Graph::from_edge_list("0 1\n2 3\n").is_err(), "disconnected");
        assert!(Graph::from_edge_list("0 1\n3 4\n1 3\n").is_err(), "gap in ids");
        assert!(Graph::from_edge_list("0\n").is_err(), "too few tokens");
        assert!(Graph::from_edge_list("0 1 2 3\n").is_err(), "too many tokens");
        assert!(Graph::from_edge_list("").is_err(), "empty input");
        assert!(Graph::from_edge_list("a b\n").is_err(), "non-numeric ids");
    }

    #[test]
    fn walk_transition_probabilities_count_loops_once() {
        let k3l = make_family(Family::Complete, &[3], true).unwrap();
        // Every vertex: three entries (self plus two others), weight 3.
        for v in 0..3 {
            assert_eq!(k3l.neighbors(v).len(), 3);
            assert_eq!(k3l.weight_degree(v), 3.0);
        }
        let pi = k3l.stationary();
        assert!(pi.iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn collapse_complete_four_to_edge() {
        let k4 = make_family(Family::Complete, &[4], false).unwrap();
        let c = collapse(&k4, &[0, 1]).unwrap();
        assert_eq!(c.graph.n(), 3);
        // Quotient ids: 0 = root, 1 = original 2, 2 = original 3.
        assert_eq!(c.orig_ids, vec![0, 2, 3]);
        assert_eq!(c.graph.edge_weight(0, 1), Some(2.0));
        assert_eq!(c.graph.edge_weight(0, 2), Some(2.0));
        assert_eq!(c.graph.edge_weight(1, 2), Some(1.0));
        assert_eq!(c.graph.edge_weight(0, 0), None, "no loop at the root");
        assert_eq!(c.boundary_options[1], vec![(0, 1.0), (1, 1.0)]);
        assert_eq!(c.boundary_options[2], vec![(0, 1.0), (1, 1.0)]);
    }

    #[test]
    fn collapse_cycle_path_to_triangle() {
        let c5 = make_family(Family::Cycle, &[5], false).unwrap();
        let c = collapse(&c5, &[0, 1, 2]).unwrap();
        assert_eq!(c.graph.n(), 3);
        assert_eq!(c.orig_ids, vec![0, 3, 4]);
        assert_eq!(c.graph.edge_weight(0, 1), Some(1.0));
        assert_eq!(c.graph.edge_weight(0, 2), Some(1.0));
        assert_eq!(c.graph.edge_weight(1, 2), Some(1.0));
        assert_eq!(c.boundary_options[1], vec![(2, 1.0)]);
        assert_eq!(c.boundary_options[2], vec![(0, 1.0)]);
    }

    #[test]
    fn collapse_spanning_set_gives_point() {
        let k4 = make_family(Family::Complete, &[4], false).unwrap();
        let c = collapse(&k4, &[0, 1, 2, 3]).unwrap();
        assert_eq!((c.graph.n(), c.graph.m()), (1, 0));
    }

    #[test]
    fn collapse_rejects_disconnected_or_bad_sets() {
        let c5 = make_family(Family::Cycle, &[5], false).unwrap();
        assert!(collapse(&c5, &[0, 2]).is_err());
        assert!(collapse(&c5, &[]).is_err());
        assert!(collapse(&c5, &[0, 0]).is_err());
        assert!(collapse(&c5, &[9]).is_err());
    }

    #[test]
    fn tree_round_trips_through_edge_list() {
        let t = Tree::from_parents(2, vec![1, 2, 2, 2]).unwrap();
        let text = t.to_edge_list();
        assert!(text.ends_with("# root 2\n"));
        assert_eq!(text.lines().count(), 4);
        let back = Tree::from_edge_list(&text).unwrap();
        assert_eq!(back.root(), 2);
        assert_eq!(back.edges_sorted(), t.edges_sorted());
        let g0 = g0();
        assert!(back.is_spanning_tree_of(&g0));
    }

    #[test]
    fn tree_validation_rejects_cycles_and_bad_roots() {
        assert!(Tree::from_parents(0, vec![1, 0]).is_err(), "root not own parent");
        assert!(Tree::from_parents(0, vec![0, 2, 1]).is_err(), "cycle off the root");
        assert!(Tree::from_edge_list("0 1\n2 3\n# root 0\n").is_err());
        assert!(Tree::from_edge_list("0 1\n1 2\n0 2\n# root 0\n").is_err(), "not a tree");
    }

    #[test]
    fn self_loop_copy_preserves_structure() {
        let g = g0().with_self_loops();
        assert_eq!((g.n(), g.m()), (4, 8));
        assert_eq!(g.weight_degree(1), 4.0);
        assert_eq!(g.edge_weight(2, 2), Some(1.0));
    }
}
