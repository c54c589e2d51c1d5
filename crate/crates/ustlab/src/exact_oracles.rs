//! Ground-truth machinery: exact spanning-tree counting and enumeration,
//! hitting-time linear algebra, the stage-one functional, and small
//! Monte-Carlo cross-checks that compare samplers against those references.
//!
//! Everything here is deterministic given its inputs (the Monte-Carlo
//! checkers take an explicit RNG), so the statistical tests elsewhere can
//! treat these values as frozen expectations.

use crate::graph::{collapse, make_family, Family, Graph, Tree};
use crate::ust_algorithms::{wilson, wilson_from_tree, InitialTree};
use crate::{Result, UstError};
use nalgebra::{DMatrix, DVector};
use num_bigint::{BigInt, BigUint};
use rand::Rng;
use std::collections::HashMap;

/// A spanning-tree count: exact when all edge weights are integers, a
/// guarded floating-point determinant otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeCount {
    Exact(BigUint),
    Weighted(f64),
}

impl TreeCount {
    /// The count as a double (lossy above 2^53 in the exact case).
    pub fn as_f64(&self) -> f64 {
        match self {
            TreeCount::Exact(b) => {
                let digits = b.to_string();
                digits.parse::<f64>().unwrap_or(f64::INFINITY)
            }
            TreeCount::Weighted(x) => *x,
        }
    }
}

/// Fraction-free Bareiss elimination; exact over big integers.
fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    let zero = BigInt::from(0);
    if n == 0 {
        return BigInt::from(1);
    }
    let mut sign = 1i32;
    let mut prev = BigInt::from(1);
    for k in 0..n - 1 {
        if a[k][k] == zero {
            match (k + 1..n).find(|&r| a[r][k] != zero) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return zero,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &a[k][k] * &a[i][j] - &a[i][k] * &a[k][j];
                a[i][j] = num / &prev;
            }
            a[i][k] = zero.clone();
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if sign < 0 {
        -det
    } else {
        det
    }
}

/// Reduced weighted Laplacian (last row/column dropped, self-loops
/// excluded), as doubles.
fn reduced_laplacian(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut l = DMatrix::zeros(n - 1, n - 1);
    for e in g.edges() {
        if e.u == e.v {
            continue;
        }
        if e.u < n - 1 {
            l[(e.u, e.u)] += e.w;
        }
        if e.v < n - 1 {
            l[(e.v, e.v)] += e.w;
        }
        if e.u < n - 1 && e.v < n - 1 {
            l[(e.u, e.v)] -= e.w;
            l[(e.v, e.u)] -= e.w;
        }
    }
    l
}

/// Number of spanning trees (weighted: total tree weight) via the
/// matrix-tree theorem. Integer edge weights go through exact big-integer
/// elimination; anything else uses a double determinant with a
/// condition-number guard.
pub fn spanning_tree_count(g: &Graph) -> Result<TreeCount> {
    let n = g.n();
    if n == 1 {
        return Ok(TreeCount::Exact(BigUint::from(1u32)));
    }
    let integral = g.edges().iter().all(|e| e.w.fract() == 0.0 && e.w.abs() < 2f64.powi(53));
    if integral {
        let mut l = vec![vec![BigInt::from(0); n - 1]; n - 1];
        for e in g.edges() {
            if e.u == e.v {
                continue;
            }
            let w = BigInt::from(e.w as i64);
            if e.u < n - 1 {
                l[e.u][e.u] += &w;
            }
            if e.v < n - 1 {
                l[e.v][e.v] += &w;
            }
            if e.u < n - 1 && e.v < n - 1 {
                l[e.u][e.v] -= &w;
                l[e.v][e.u] -= &w;
            }
        }
        let det = bareiss_det(l);
        det.to_biguint()
            .map(TreeCount::Exact)
            .ok_or_else(|| UstError::Numeric("negative tree count from determinant".into()))
    } else {
        let l = reduced_laplacian(g);
        let sv = l.clone().svd(false, false).singular_values;
        let (mut smax, mut smin) = (0f64, f64::INFINITY);
        let mut det = 1f64;
        for s in sv.iter() {
            smax = smax.max(*s);
            smin = smin.min(*s);
            det *= s;
        }
        if !det.is_finite() || smin <= smax * 1e-12 {
            return Err(UstError::Numeric(
                "Laplacian determinant is numerically ill-conditioned".into(),
            ));
        }
        Ok(TreeCount::Weighted(det))
    }
}

/// Canonical table of a graph's spanning trees: each tree is a sorted edge
/// list, trees are stored in lexicographic order, and ids are dense.
#[derive(Debug, Clone)]
pub struct TreeIndex {
    trees: Vec<Vec<(usize, usize)>>,
    ids: HashMap<Vec<(usize, usize)>, usize>,
}

impl TreeIndex {
    fn new(mut trees: Vec<Vec<(usize, usize)>>) -> TreeIndex {
        trees.sort();
        let ids = trees.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        TreeIndex { trees, ids }
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Dense id of a tree given by its edges (any order, any endpoint
    /// order).
    pub fn id_of(&self, edges: &[(usize, usize)]) -> Option<usize> {
        let mut key: Vec<(usize, usize)> =
            edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        key.sort_unstable();
        self.ids.get(&key).copied()
    }

    pub fn tree(&self, id: usize) -> &[(usize, usize)] {
        &self.trees[id]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<(usize, usize)>> {
        self.trees.iter()
    }

    /// One tree per line, edges sorted, in id order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for t in &self.trees {
            let line: Vec<String> = t.iter().map(|(u, v)| format!("({u},{v})")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Dsu {
        Dsu { parent: (0..n).collect() }
    }
    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }
    fn union(&mut self, u: usize, v: usize) -> bool {
        let (ru, rv) = (self.find(u), self.find(v));
        if ru == rv {
            false
        } else {
            self.parent[ru] = rv;
            true
        }
    }
}

/// All spanning trees, by recursive contraction/deletion over the edge list
/// in lexicographic order. Requires the count to be at most 10^6.
pub fn enumerate_spanning_trees(g: &Graph) -> Result<TreeIndex> {
    let count = spanning_tree_count(g)?.as_f64();
    if count > 1e6 {
        return Err(UstError::InvalidParam(format!(
            "{count:.0} spanning trees exceed the enumeration cap of 10^6"
        )));
    }
    let n = g.n();
    let mut edges: Vec<(usize, usize)> =
        g.edges().iter().filter(|e| e.u != e.v).map(|e| (e.u.min(e.v), e.u.max(e.v))).collect();
    edges.sort_unstable();

    // True when the components of `dsu` can still be connected using edges
    // from `idx` on.
    fn connectable(n: usize, edges: &[(usize, usize)], idx: usize, dsu: &Dsu) -> bool {
        let mut probe = Dsu { parent: dsu.parent.clone() };
        let mut components = (0..n).filter(|&v| probe.find(v) == v).count();
        for &(u, v) in &edges[idx..] {
            if probe.union(u, v) {
                components -= 1;
                if components == 1 {
                    return true;
                }
            }
        }
        components == 1
    }

    fn rec(
        n: usize,
        edges: &[(usize, usize)],
        idx: usize,
        chosen: &mut Vec<(usize, usize)>,
        dsu: &Dsu,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if chosen.len() == n - 1 {
            out.push(chosen.clone());
            return;
        }
        if idx == edges.len() {
            return;
        }
        let (u, v) = edges[idx];
        // Include branch first: emits trees in ascending lexicographic order.
        let mut with = Dsu { parent: dsu.parent.clone() };
        if with.union(u, v) {
            chosen.push((u, v));
            rec(n, edges, idx + 1, chosen, &with, out);
            chosen.pop();
        }
        if connectable(n, edges, idx + 1, dsu) {
            rec(n, edges, idx + 1, chosen, dsu, out);
        }
    }

    let mut out = Vec::with_capacity(count as usize);
    rec(n, &edges, 0, &mut Vec::new(), &Dsu::new(n), &mut out);
    if (out.len() as f64 - count).abs() > 0.5 {
        return Err(UstError::Numeric(format!(
            "enumerated {} trees but the determinant says {count:.0}",
            out.len()
        )));
    }
    Ok(TreeIndex::new(out))
}

/// Normalizes an edge set and checks it forms a sub-tree of `g` (edges of
/// the graph, acyclic, connected). Returns (sorted edges, sorted vertices).
fn validate_subtree(
    g: &Graph,
    sub: &[(usize, usize)],
) -> Result<(Vec<(usize, usize)>, Vec<usize>)> {
    if sub.is_empty() {
        return Err(UstError::InvalidParam("sub-tree needs at least one edge".into()));
    }
    let mut edges: Vec<(usize, usize)> = sub.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
    edges.sort_unstable();
    edges.dedup();
    if edges.len() != sub.len() {
        return Err(UstError::InvalidParam("sub-tree repeats an edge".into()));
    }
    let mut vertices: Vec<usize> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
    vertices.sort_unstable();
    vertices.dedup();
    let mut dsu = Dsu::new(g.n());
    for &(u, v) in &edges {
        if u == v || g.edge_weight(u, v).is_none() {
            return Err(UstError::InvalidParam(format!("({u}, {v}) is not an edge of the graph")));
        }
        if !dsu.union(u, v) {
            return Err(UstError::InvalidParam("sub-tree contains a cycle".into()));
        }
    }
    if vertices.len() != edges.len() + 1 {
        return Err(UstError::InvalidParam("sub-tree is not connected".into()));
    }
    Ok((edges, vertices))
}

/// Number of spanning trees containing the given sub-tree, computed by
/// collapsing the sub-tree to a point and counting in the quotient.
pub fn count_trees_containing(g: &Graph, sub: &[(usize, usize)]) -> Result<TreeCount> {
    let (_, vertices) = validate_subtree(g, sub)?;
    let quotient = collapse(g, &vertices)?;
    spanning_tree_count(&quotient.graph)
}

/// Exact hitting-time algebra for a (small) graph: all expected vertex and
/// edge hitting times, the edge-race probabilities, and the two summary
/// scalars assembled from them.
#[derive(Debug, Clone)]
pub struct HittingStats {
    /// Stationary distribution (weight degrees, self-loops counted once).
    pub pi: Vec<f64>,
    /// `vertex[(i, j)]` is the expected time for a walk from `i` to hit `j`.
    pub vertex: DMatrix<f64>,
    /// The non-loop edges, in graph order.
    pub edge_list: Vec<(usize, usize)>,
    /// `edge[e][i]` is the expected time from `i` to hit either endpoint of
    /// `edge_list[e]`.
    pub edge: Vec<Vec<f64>>,
    /// `before[e][i]` is the probability that a walk from `i` hits `v`
    /// strictly before `u`, where `edge_list[e] = (u, v)`.
    pub before: Vec<Vec<f64>>,
    /// Mean hitting time: both endpoints stationary.
    pub omega: f64,
    /// Mean edge hitting time: start stationary, edge uniform over
    /// `edge_list`.
    pub phi: f64,
}

/// Dense transition matrix of the weighted walk (self-loop weight counted
/// once).
fn transition_matrix(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut p = DMatrix::zeros(n, n);
    for e in g.edges() {
        if e.u == e.v {
            p[(e.u, e.u)] += e.w;
        } else {
            p[(e.u, e.v)] += e.w;
            p[(e.v, e.u)] += e.w;
        }
    }
    for i in 0..n {
        let d = g.weight_degree(i);
        for j in 0..n {
            p[(i, j)] /= d;
        }
    }
    p
}

/// Solves the absorbed system: unknowns on `free`, equation
/// `x_i = c_i + sum_{j in free} P[i][j] x_j`.
fn solve_absorbed(p: &DMatrix<f64>, free: &[usize], c: &DVector<f64>) -> Result<DVector<f64>> {
    let k = free.len();
    let mut a = DMatrix::zeros(k, k);
    for (ri, &i) in free.iter().enumerate() {
        for (rj, &j) in free.iter().enumerate() {
            a[(ri, rj)] = if ri == rj { 1.0 - p[(i, j)] } else { -p[(i, j)] };
        }
    }
    a.lu()
        .solve(c)
        .ok_or_else(|| UstError::Numeric("singular absorbed linear system".into()))
}

/// Computes [`HittingStats`] by dense linear solves; intended for small
/// graphs (every target and edge gets its own solve).
pub fn hitting_stats(g: &Graph) -> Result<HittingStats> {
    let n = g.n();
    if n > 4096 {
        return Err(UstError::InvalidParam(format!(
            "dense hitting-time solves are capped at 4096 vertices, got {n}"
        )));
    }
    if n < 2 {
        return Err(UstError::InvalidParam("hitting stats need at least two vertices".into()));
    }
    let p = transition_matrix(g);
    let total: f64 = (0..n).map(|v| g.weight_degree(v)).sum();
    let pi: Vec<f64> = (0..n).map(|v| g.weight_degree(v) / total).collect();

    let mut vertex = DMatrix::zeros(n, n);
    for j in 0..n {
        let free: Vec<usize> = (0..n).filter(|&i| i != j).collect();
        let ones = DVector::from_element(free.len(), 1.0);
        let x = solve_absorbed(&p, &free, &ones)?;
        for (ri, &i) in free.iter().enumerate() {
            vertex[(i, j)] = x[ri];
        }
    }

    let edge_list: Vec<(usize, usize)> =
        g.edges().iter().filter(|e| e.u != e.v).map(|e| (e.u, e.v)).collect();
    let mut edge = Vec::with_capacity(edge_list.len());
    let mut before = Vec::with_capacity(edge_list.len());
    for &(u, v) in &edge_list {
        let free: Vec<usize> = (0..n).filter(|&i| i != u && i != v).collect();
        let ones = DVector::from_element(free.len(), 1.0);
        let x = solve_absorbed(&p, &free, &ones)?;
        let mut hit = vec![0.0; n];
        for (ri, &i) in free.iter().enumerate() {
            hit[i] = x[ri];
        }
        edge.push(hit);

        let c = DVector::from_iterator(free.len(), free.iter().map(|&i| p[(i, v)]));
        let x = solve_absorbed(&p, &free, &c)?;
        let mut pr = vec![0.0; n];
        pr[v] = 1.0;
        for (ri, &i) in free.iter().enumerate() {
            pr[i] = x[ri];
        }
        before.push(pr);
    }

    let mut omega = 0.0;
    for j in 0..n {
        for i in 0..n {
            omega += pi[i] * pi[j] * vertex[(i, j)];
        }
    }
    let mut phi = 0.0;
    for hit in &edge {
        for i in 0..n {
            phi += pi[i] * hit[i];
        }
    }
    phi /= edge_list.len() as f64;

    Ok(HittingStats { pi, vertex, edge_list, edge, before, omega, phi })
}

/// Residuals of the two closed forms for the gap between the mean vertex
/// and mean edge hitting times.
#[derive(Debug, Clone, Copy)]
pub struct SpeedupResiduals {
    /// Per-edge decomposition: ω − φ = (1/m) Σ_edges ½[E_v(h_u)·P(hit v
    /// first) + E_u(h_v)·P(hit u first)], probabilities under a stationary
    /// start. Exact whenever π is proportional to non-loop degree.
    pub general: f64,
    /// Transitive shortcut ω − φ = E_v(h_u)/2 for an arbitrary edge; only
    /// meaningful on vertex- and edge-transitive graphs.
    pub transitive: Option<f64>,
}

/// Checks the hitting-time gap identities against [`hitting_stats`].
/// `transitive` asserts that the graph is vertex- and edge-transitive and
/// enables the shortcut residual.
pub fn speedup_residual(g: &Graph, transitive: bool) -> Result<SpeedupResiduals> {
    let hs = hitting_stats(g)?;
    let m = hs.edge_list.len() as f64;
    let mut rhs = 0.0;
    for (e, &(u, v)) in hs.edge_list.iter().enumerate() {
        let p_v_first: f64 = (0..g.n()).map(|i| hs.pi[i] * hs.before[e][i]).sum();
        let p_u_first = 1.0 - p_v_first;
        rhs += 0.5 * (hs.vertex[(v, u)] * p_v_first + hs.vertex[(u, v)] * p_u_first) / m;
    }
    let gap = hs.omega - hs.phi;
    let general = (gap - rhs).abs();
    let transitive = transitive.then(|| {
        let (u, v) = hs.edge_list[0];
        (gap - hs.vertex[(v, u)] / 2.0).abs()
    });
    Ok(SpeedupResiduals { general, transitive })
}

/// Conjugate gradients for the absorbed system `(I − P) x = 1` restricted to
/// non-absorbed vertices; valid because the walk matrix of a regular
/// loop-free graph is symmetric.
fn cg_hitting(g: &Graph, absorbed: &[bool]) -> Result<Vec<f64>> {
    let n = g.n();
    let d = g.weight_degree(0);
    let apply = |x: &[f64], out: &mut [f64]| {
        for i in 0..n {
            if absorbed[i] {
                out[i] = 0.0;
                continue;
            }
            let mut acc = 0.0;
            for &j in g.neighbors(i) {
                if !absorbed[j] {
                    acc += x[j];
                }
            }
            out[i] = x[i] - acc / d;
        }
    };
    let b: Vec<f64> = (0..n).map(|i| if absorbed[i] { 0.0 } else { 1.0 }).collect();
    let norm_b = (b.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let mut x = vec![0.0; n];
    let mut r = b;
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rs: f64 = r.iter().map(|v| v * v).sum();
    for _ in 0..100_000 {
        if rs.sqrt() <= 1e-13 * norm_b {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rs / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(UstError::Numeric("conjugate gradients did not converge".into()))
}

/// (ω, φ) for a regular, loop-free, unit-weight graph assumed to be vertex-
/// and edge-transitive, using one conjugate-gradient solve per scalar
/// instead of the full dense machinery. Under transitivity,
/// ω = Σ_i π(i) E_i(h_{v₀}) for any fixed v₀ and φ is the same average onto
/// any fixed edge.
pub fn omega_phi_transitive(g: &Graph) -> Result<(f64, f64)> {
    let n = g.n();
    if n < 2 {
        return Err(UstError::InvalidParam("need at least two vertices".into()));
    }
    if g.has_self_loops() || !g.unit_weights() {
        return Err(UstError::InvalidParam(
            "transitive hitting shortcut needs a loop-free unit-weight graph".into(),
        ));
    }
    let d = g.degree(0);
    if (0..n).any(|v| g.degree(v) != d) {
        return Err(UstError::InvalidParam(
            "transitive hitting shortcut needs a regular graph".into(),
        ));
    }
    let mut absorbed = vec![false; n];
    absorbed[0] = true;
    let x = cg_hitting(g, &absorbed)?;
    let omega = x.iter().sum::<f64>() / n as f64;

    let e0 = g
        .edges()
        .iter()
        .find(|e| e.u != e.v)
        .ok_or_else(|| UstError::InvalidGraph("no non-loop edge".into()))?;
    let mut absorbed = vec![false; n];
    absorbed[e0.u] = true;
    absorbed[e0.v] = true;
    let x = cg_hitting(g, &absorbed)?;
    let phi = x.iter().sum::<f64>() / n as f64;
    Ok((omega, phi))
}

/// A probability distribution over sub-trees, each given by its edge set.
pub type SubtreeDist = Vec<(Vec<(usize, usize)>, f64)>;

/// The law induced on spanning trees by the two-stage procedure: sample a
/// sub-tree from `dist`, then a uniform spanning tree containing it.
/// Returns the enumeration index and the per-tree probabilities
/// F(S) = Σ_{t ⊆ S} P(t)/|T(t)|.
pub fn two_stage_law(g: &Graph, dist: &SubtreeDist) -> Result<(TreeIndex, Vec<f64>)> {
    let total: f64 = dist.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(UstError::InvalidParam(format!(
            "sub-tree distribution sums to {total}, expected 1"
        )));
    }
    let index = enumerate_spanning_trees(g)?;
    let mut terms = Vec::with_capacity(dist.len());
    for (sub, p) in dist {
        if *p < -1e-15 {
            return Err(UstError::InvalidParam("negative sub-tree probability".into()));
        }
        let (edges, _) = validate_subtree(g, sub)?;
        let count = count_trees_containing(g, &edges)?.as_f64();
        terms.push((edges, p / count));
    }
    let mut f = vec![0.0; index.len()];
    for (id, tree) in index.iter().enumerate() {
        for (edges, weight) in &terms {
            if edges.iter().all(|e| tree.binary_search(e).is_ok()) {
                f[id] += weight;
            }
        }
    }
    Ok((index, f))
}

/// How far the first-stage law is from satisfying the uniformity condition:
/// the spread max F(S) − min F(S) of the induced two-stage law. Zero means
/// the two-stage procedure outputs a uniform spanning tree.
pub fn stage_one_residual(g: &Graph, dist: &SubtreeDist) -> Result<f64> {
    let (_, f) = two_stage_law(g, dist)?;
    let max = f.iter().cloned().fold(f64::MIN, f64::max);
    let min = f.iter().cloned().fold(f64::MAX, f64::min);
    Ok(max - min)
}

/// The uniform distribution on single (non-loop) edges, as a sub-tree law.
pub fn uniform_edge_dist(g: &Graph) -> SubtreeDist {
    let edges: Vec<(usize, usize)> =
        g.edges().iter().filter(|e| e.u != e.v).map(|e| (e.u.min(e.v), e.u.max(e.v))).collect();
    let p = 1.0 / edges.len() as f64;
    edges.into_iter().map(|e| (vec![e], p)).collect()
}

/// First-branch law of the first-entrance walk on the n-cycle from a
/// uniform start: an arc with e ≤ n−2 edges has probability (1/n)·2^{−e},
/// and each spanning path has probability (1/n)·2^{−(n−2)}.
pub fn cycle_first_branch_law(n: usize) -> Result<SubtreeDist> {
    if n < 3 {
        return Err(UstError::InvalidParam(format!("cycle law needs n >= 3, got {n}")));
    }
    let mut dist = Vec::new();
    let arc = |start: usize, e: usize| -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = (0..e)
            .map(|i| {
                let a = (start + i) % n;
                let b = (start + i + 1) % n;
                (a.min(b), a.max(b))
            })
            .collect();
        edges.sort_unstable();
        edges
    };
    for e in 1..=n - 2 {
        let p = (1.0 / n as f64) * 0.5f64.powi(e as i32);
        for start in 0..n {
            dist.push((arc(start, e), p));
        }
    }
    let p = (1.0 / n as f64) * 0.5f64.powi(n as i32 - 2);
    for start in 0..n {
        dist.push((arc(start, n - 1), p));
    }
    Ok(dist)
}

/// A residual plus the tolerance it should be compared against (three
/// standard errors for Monte-Carlo estimates, 1e-12 for exact computation).
#[derive(Debug, Clone, Copy)]
pub struct ResidualEstimate {
    pub residual: f64,
    pub tolerance: f64,
}

/// Stage-one residual with per-pair standard errors: for each pair of
/// spanning trees the difference of F-values is a mean of i.i.d. bounded
/// terms, so it carries a standard error.
fn stage_one_residual_with_se(
    g: &Graph,
    dist: &SubtreeDist,
    samples: usize,
) -> Result<ResidualEstimate> {
    let index = enumerate_spanning_trees(g)?;
    let mut terms = Vec::with_capacity(dist.len());
    for (sub, p) in dist {
        let (edges, _) = validate_subtree(g, sub)?;
        let count = count_trees_containing(g, &edges)?.as_f64();
        terms.push((edges, *p, count));
    }
    // g_S(t) = [t ⊆ S]/|T(t)| per tree S and support point t.
    let m = index.len();
    let mut gmat = vec![vec![0.0; terms.len()]; m];
    for (id, tree) in index.iter().enumerate() {
        for (ti, (edges, _, count)) in terms.iter().enumerate() {
            if edges.iter().all(|e| tree.binary_search(e).is_ok()) {
                gmat[id][ti] = 1.0 / count;
            }
        }
    }
    let mut residual = 0.0;
    let mut tolerance = 0.0;
    for a in 0..m {
        for b in a + 1..m {
            let mut mean = 0.0;
            let mut second = 0.0;
            for (ti, (_, p, _)) in terms.iter().enumerate() {
                let diff = gmat[a][ti] - gmat[b][ti];
                mean += p * diff;
                second += p * diff * diff;
            }
            let var = (second - mean * mean).max(0.0);
            let se = (var / samples as f64).sqrt();
            if mean.abs() > residual {
                residual = mean.abs();
                tolerance = 3.0 * se;
            }
        }
    }
    Ok(ResidualEstimate { residual, tolerance })
}

/// Checks that the sub-tree grown by the first k steps of a first-entrance
/// walk on the n-cycle (stopped early at the cover time) satisfies the
/// stage-one condition. With `samples = 0` the law is computed exactly by
/// enumerating all sign sequences (needs k small); otherwise it is
/// estimated by Monte Carlo and the residual comes with a 3-standard-error
/// tolerance.
pub fn cycle_rw_subtree_check<R: Rng>(
    n: usize,
    k: usize,
    samples: usize,
    rng: &mut R,
) -> Result<ResidualEstimate> {
    if n < 3 || n > 12 {
        return Err(UstError::InvalidParam(format!("cycle check needs 3 <= n <= 12, got {n}")));
    }
    if k < 1 {
        return Err(UstError::InvalidParam("horizon k must be at least 1".into()));
    }
    let g = make_family(Family::Cycle, &[n], false)?;

    // The first-entrance tree of a cycle walk is the arc of visited
    // vertices; track it as an interval [lo, hi] around the start.
    let interval_edges = |start: usize, lo: i64, hi: i64| -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = (lo..hi)
            .map(|x| {
                let a = (((start as i64 + x) % n as i64 + n as i64) % n as i64) as usize;
                let b = (((start as i64 + x + 1) % n as i64 + n as i64) % n as i64) as usize;
                (a.min(b), a.max(b))
            })
            .collect();
        edges.sort_unstable();
        edges
    };

    let mut law: HashMap<Vec<(usize, usize)>, f64> = HashMap::new();
    if samples == 0 {
        if k > 24 {
            return Err(UstError::InvalidParam(format!(
                "exact cycle check enumerates 2^k sign sequences; k = {k} is too large"
            )));
        }
        fn explore(
            n: usize,
            k: usize,
            start: usize,
            pos: i64,
            lo: i64,
            hi: i64,
            steps: usize,
            prob: f64,
            interval_edges: &dyn Fn(usize, i64, i64) -> Vec<(usize, usize)>,
            law: &mut HashMap<Vec<(usize, usize)>, f64>,
        ) {
            if steps == k || (hi - lo) as usize == n - 1 {
                *law.entry(interval_edges(start, lo, hi)).or_insert(0.0) += prob;
                return;
            }
            for dir in [-1i64, 1] {
                let npos = pos + dir;
                explore(
                    n,
                    k,
                    start,
                    npos,
                    lo.min(npos),
                    hi.max(npos),
                    steps + 1,
                    prob * 0.5,
                    interval_edges,
                    law,
                );
            }
        }
        for start in 0..n {
            explore(n, k, start, 0, 0, 0, 0, 1.0 / n as f64, &interval_edges, &mut law);
        }
        let dist: SubtreeDist = law.into_iter().collect();
        let residual = stage_one_residual(&g, &dist)?;
        return Ok(ResidualEstimate { residual, tolerance: 1e-12 });
    }

    let weight = 1.0 / samples as f64;
    for _ in 0..samples {
        let start = rng.gen_range(0..n);
        let (mut pos, mut lo, mut hi) = (0i64, 0i64, 0i64);
        let mut steps = 0usize;
        while steps < k && (hi - lo) as usize != n - 1 {
            pos += if rng.gen::<bool>() { 1 } else { -1 };
            lo = lo.min(pos);
            hi = hi.max(pos);
            steps += 1;
        }
        *law.entry(interval_edges(start, lo, hi)).or_insert(0.0) += weight;
    }
    let dist: SubtreeDist = law.into_iter().collect();
    stage_one_residual_with_se(&g, &dist, samples)
}

/// Samples spanning trees containing `sub` two ways — Wilson on the
/// weight-collapsed quotient mapped back through the edge bundles, and
/// plain Wilson with `sub` as the initial condition — and returns the
/// larger total-variation distance from uniform on the exact conditional
/// set.
pub fn collapsed_wilson_check<R: Rng>(
    g: &Graph,
    sub: &[(usize, usize)],
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let (sub_edges, sub_vertices) = validate_subtree(g, sub)?;
    let index = enumerate_spanning_trees(g)?;
    let members: Vec<usize> = (0..index.len())
        .filter(|&id| sub_edges.iter().all(|e| index.tree(id).binary_search(e).is_ok()))
        .collect();
    let member_pos: HashMap<usize, usize> =
        members.iter().enumerate().map(|(pos, &id)| (id, pos)).collect();

    let quotient = collapse(g, &sub_vertices)?;
    let init = InitialTree { edges: sub_edges.clone(), root: sub_vertices[0] };

    let mut hist_collapsed = vec![0u64; members.len()];
    let mut hist_plain = vec![0u64; members.len()];
    for _ in 0..samples {
        // Collapsed route: weighted Wilson on the quotient, then resolve
        // each root-incident bundle into an original edge.
        let result = wilson(&quotient.graph, 0, rng)?;
        let mut edges = sub_edges.clone();
        for (a, b) in result.tree.edges_sorted() {
            if a == 0 {
                let options = &quotient.boundary_options[b];
                let total: f64 = options.iter().map(|&(_, w)| w).sum();
                let mut x = rng.gen::<f64>() * total;
                let mut inside = options[options.len() - 1].0;
                for &(orig, w) in options {
                    if x < w {
                        inside = orig;
                        break;
                    }
                    x -= w;
                }
                let outside = quotient.orig_ids[b];
                edges.push((inside.min(outside), inside.max(outside)));
            } else {
                let (u, v) = (quotient.orig_ids[a], quotient.orig_ids[b]);
                edges.push((u.min(v), u.max(v)));
            }
        }
        let id = index
            .id_of(&edges)
            .and_then(|id| member_pos.get(&id))
            .ok_or_else(|| UstError::Numeric("collapsed sample is not a conditioned tree".into()))?;
        hist_collapsed[*id] += 1;

        let result = wilson_from_tree(g, &init, rng)?;
        let id = index
            .id_of(&result.tree.edges_sorted())
            .and_then(|id| member_pos.get(&id))
            .ok_or_else(|| UstError::Numeric("plain sample is not a conditioned tree".into()))?;
        hist_plain[*id] += 1;
    }

    let uniform = 1.0 / members.len() as f64;
    let tv = |hist: &[u64]| -> f64 {
        hist.iter().map(|&c| (c as f64 / samples as f64 - uniform).abs()).sum::<f64>() / 2.0
    };
    Ok(tv(&hist_collapsed).max(tv(&hist_plain)))
}

/// Canonical form of an unlabeled tree given by its edges: the minimum over
/// roots of the nested-parentheses encoding with sorted children.
fn tree_canon(vertices: &[usize], edges: &[(usize, usize)]) -> String {
    let local: HashMap<usize, usize> =
        vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut adj = vec![Vec::new(); vertices.len()];
    for &(u, v) in edges {
        let (lu, lv) = (local[&u], local[&v]);
        adj[lu].push(lv);
        adj[lv].push(lu);
    }
    fn encode(adj: &[Vec<usize>], v: usize, parent: usize) -> String {
        let mut parts: Vec<String> = adj[v]
            .iter()
            .filter(|&&u| u != parent)
            .map(|&u| encode(adj, u, v))
            .collect();
        parts.sort();
        format!("({})", parts.join(""))
    }
    (0..vertices.len())
        .map(|r| encode(&adj, r, usize::MAX))
        .min()
        .unwrap_or_else(|| "()".to_string())
}

/// Number of sub-trees of `host` isomorphic (as unlabeled trees) to `seed`.
/// Brute force over connected vertex subsets; hosts are capped at 20
/// vertices.
pub fn subtree_iso_count(host: &Tree, seed: &Tree) -> Result<usize> {
    let n = host.n();
    let k = seed.n();
    if n > 20 {
        return Err(UstError::InvalidParam(format!(
            "isomorphic sub-tree counting is capped at 20 host vertices, got {n}"
        )));
    }
    if k == 0 || k > n {
        return Ok(0);
    }
    let seed_vertices: Vec<usize> = (0..k).collect();
    let target = tree_canon(&seed_vertices, &seed.edges_sorted());
    let host_edges = host.edges_sorted();
    let mut count = 0usize;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let inside: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
        let edges: Vec<(usize, usize)> = host_edges
            .iter()
            .copied()
            .filter(|&(u, v)| mask & (1 << u) != 0 && mask & (1 << v) != 0)
            .collect();
        // A subset of a tree's vertices is connected exactly when it induces
        // |subset| − 1 edges.
        if edges.len() != k - 1 {
            continue;
        }
        if k == 1 || tree_canon(&inside, &edges) == target {
            count += 1;
        }
    }
    Ok(count)
}

/// The law of the seeded sampler on labeled trees over `n` vertices:
/// probability proportional to the number of sub-trees isomorphic to
/// `seed`. Returns the enumeration index of the complete graph's trees plus
/// per-tree probabilities.
pub fn seeded_law(n: usize, seed: &Tree) -> Result<(TreeIndex, Vec<f64>)> {
    let g = make_family(Family::Complete, &[n], false)?;
    let index = enumerate_spanning_trees(&g)?;
    let mut counts = Vec::with_capacity(index.len());
    for id in 0..index.len() {
        let edges = index.tree(id).to_vec();
        let tree = tree_from_edges(n, &edges)?;
        counts.push(subtree_iso_count(&tree, seed)? as f64);
    }
    let total: f64 = counts.iter().sum();
    if total == 0.0 {
        return Err(UstError::InvalidParam(
            "no spanning tree contains a sub-tree isomorphic to the seed".into(),
        ));
    }
    let probs = counts.into_iter().map(|c| c / total).collect();
    Ok((index, probs))
}

/// Builds a [`Tree`] from a spanning edge set by orienting away from vertex
/// 0.
pub fn tree_from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Tree> {
    if edges.len() + 1 != n {
        return Err(UstError::InvalidParam(format!(
            "{} edges cannot span {n} vertices",
            edges.len()
        )));
    }
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        if u >= n || v >= n {
            return Err(UstError::InvalidParam(format!("edge ({u}, {v}) out of range")));
        }
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut parent = vec![usize::MAX; n];
    parent[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if parent[u] == usize::MAX {
                parent[u] = v;
                queue.push_back(u);
            }
        }
    }
    Tree::from_parents(0, parent)
}
