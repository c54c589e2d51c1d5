//! Branch-length laws on complete graphs and branch extraction from traces.
//!
//! When a first-entrance walk (or a loop-erased segment walk) runs on the
//! complete graph with self-loops and the tree currently holds `k` of the
//! `n` vertices, the length `h` of the next branch follows
//!
//! ```text
//! P(h) = (k + h) (n - k - 1)! / (n^h (n - k - h)!),   h = 1..=n-k.
//! ```
//!
//! This module computes that law three independent ways — the closed form,
//! the stationary distribution of a lumped ergodic chain, and the absorption
//! profile of the segment-length chain — plus the machinery to read branches
//! back out of recorded walk traces.

use crate::rng_walk::{loop_erase, MarkKind, WalkTrace};
use crate::{Result, UstError};
use nalgebra::{DMatrix, DVector};
use std::fmt::Write as _;

/// Probability mass function on branch lengths `h = 1..=probs.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    /// Wrap raw probabilities for lengths `1..=probs.len()`.
    pub fn new(probs: Vec<f64>) -> Pmf {
        Pmf { probs }
    }

    /// Probability of length `h` (1-based; 0 outside the support).
    pub fn prob(&self, h: usize) -> f64 {
        if h >= 1 && h <= self.probs.len() {
            self.probs[h - 1]
        } else {
            0.0
        }
    }

    /// Largest length in the support.
    pub fn max_len(&self) -> usize {
        self.probs.len()
    }

    /// The underlying probabilities for lengths `1..`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Sum of all masses (should be 1 up to rounding).
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Total-variation distance to another mass function (supports may
    /// differ; missing entries count as 0).
    pub fn tv(&self, other: &Pmf) -> f64 {
        let len = self.probs.len().max(other.probs.len());
        let mut acc = 0.0;
        for h in 1..=len {
            acc += (self.prob(h) - other.prob(h)).abs();
        }
        acc / 2.0
    }

    /// Largest absolute pointwise difference to another mass function.
    pub fn max_abs_diff(&self, other: &Pmf) -> f64 {
        let len = self.probs.len().max(other.probs.len());
        (1..=len)
            .map(|h| (self.prob(h) - other.prob(h)).abs())
            .fold(0.0, f64::max)
    }
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if n < 2 {
        return Err(UstError::InvalidParam(format!("need n >= 2, got n = {n}")));
    }
    if k < 1 || k >= n {
        return Err(UstError::InvalidParam(format!(
            "need 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    Ok(())
}

/// Closed-form branch-length law for a complete graph with self-loops on `n`
/// vertices whose tree currently holds `k` vertices.
///
/// Evaluated by the ratio recurrence
/// `P(1) = (k+1)/n`, `P(h+1)/P(h) = (k+h+1)(n-k-h) / ((k+h) n)`,
/// which avoids factorial overflow for large `n`.
///
/// ```
/// use ustlab::branch_stats::branch_pmf;
/// let pmf = branch_pmf(3, 1).unwrap();
/// assert!((pmf.prob(1) - 2.0 / 3.0).abs() < 1e-15);
/// assert!((pmf.prob(2) - 1.0 / 3.0).abs() < 1e-15);
/// ```
pub fn branch_pmf(n: usize, k: usize) -> Result<Pmf> {
    check_nk(n, k)?;
    let nf = n as f64;
    let kf = k as f64;
    let mut probs = Vec::with_capacity(n - k);
    let mut p = (kf + 1.0) / nf;
    probs.push(p);
    for h in 1..n - k {
        let hf = h as f64;
        p *= (kf + hf + 1.0) * (nf - kf - hf) / ((kf + hf) * nf);
        probs.push(p);
    }
    Ok(Pmf { probs })
}

/// Segment-length chain with an absorbing `stop` state.
///
/// States `1..=n-k` track the current loop-erased segment length; the last
/// row/column is `stop`. From state `h`: absorb with probability `k/n` (the
/// walk hits the tree), advance to `h+1` with probability `(n-k-h)/n` (a
/// fresh vertex), and fall back to each `l in 1..=h` with probability `1/n`
/// (the walk hits its own path at position `l`, erasing the loop; `l = h` is
/// the self-loop).
pub fn absorbing_chain(n: usize, k: usize) -> Result<DMatrix<f64>> {
    check_nk(n, k)?;
    let s = n - k; // transient states 1..=s, then stop
    let nf = n as f64;
    let mut p = DMatrix::zeros(s + 1, s + 1);
    for h in 1..=s {
        let row = h - 1;
        p[(row, s)] = k as f64 / nf;
        if h < s {
            p[(row, h)] = (n - k - h) as f64 / nf; // state h+1 is column index h
        }
        for l in 1..=h {
            p[(row, l - 1)] += 1.0 / nf;
        }
    }
    p[(s, s)] = 1.0;
    Ok(p)
}

/// Ergodic chain obtained from [`absorbing_chain`] by deleting the
/// self-return move `h -> h` (the immediately erased self-hit), renormalizing
/// each row by `n/(n-1)`, and merging `stop` into state 1 so the process
/// regenerates: a new segment starts at length 1.
pub fn lumped_chain(n: usize, k: usize) -> Result<DMatrix<f64>> {
    check_nk(n, k)?;
    let s = n - k;
    let d = (n - 1) as f64;
    let mut p = DMatrix::zeros(s, s);
    for h in 1..=s {
        let row = h - 1;
        // stop (k/n) and, for h >= 2, the fall-back to 1 (1/n) both land on
        // state 1 after lumping; renormalization divides by (n-1)/n.
        let to_one = if h == 1 { k as f64 } else { (k + 1) as f64 };
        p[(row, 0)] += to_one / d;
        if h < s {
            p[(row, h)] = (n - k - h) as f64 / d;
        }
        for l in 2..h {
            p[(row, l - 1)] = 1.0 / d;
        }
    }
    Ok(p)
}

/// Stationary distribution of an ergodic row-stochastic matrix, via a dense
/// solve of the balance equations with the normalization constraint.
pub fn stationary(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let s = p.nrows();
    if s == 0 || p.ncols() != s {
        return Err(UstError::InvalidParam("stationary needs a square matrix".into()));
    }
    // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    let mut a = p.transpose() - DMatrix::identity(s, s);
    for c in 0..s {
        a[(s - 1, c)] = 1.0;
    }
    let mut b = DVector::zeros(s);
    b[s - 1] = 1.0;
    let lu = a.lu();
    let x = lu
        .solve(&b)
        .ok_or_else(|| UstError::Numeric("singular system in stationary solve".into()))?;
    Ok(x.iter().copied().collect())
}

/// Largest absolute component of `pi P - pi`: how far `pi` is from being
/// stationary for row-stochastic `p`.
pub fn stationary_residual(p: &DMatrix<f64>, pi: &[f64]) -> f64 {
    let s = p.nrows();
    assert_eq!(pi.len(), s, "distribution and chain dimension mismatch");
    let mut worst = 0.0f64;
    for j in 0..s {
        let mut acc = 0.0;
        for i in 0..s {
            acc += pi[i] * p[(i, j)];
        }
        worst = worst.max((acc - pi[j]).abs());
    }
    worst
}

/// Distribution of the state from which absorption happens in
/// [`absorbing_chain`] when starting at state 1: the probability the segment
/// is absorbed at length `h` is `[(I - Q)^{-1}]_{1,h} * k/n`.
pub fn absorption_profile(n: usize, k: usize) -> Result<Pmf> {
    let p = absorbing_chain(n, k)?;
    let s = n - k;
    let q = p.view((0, 0), (s, s)).into_owned();
    let a = DMatrix::identity(s, s) - q;
    // Expected visit counts from state 1: first row of (I - Q)^{-1}, i.e.
    // the solution of (I - Q)^T x = e_1.
    let mut e1 = DVector::zeros(s);
    e1[0] = 1.0;
    let visits = a
        .transpose()
        .lu()
        .solve(&e1)
        .ok_or_else(|| UstError::Numeric("singular fundamental matrix".into()))?;
    let absorb = k as f64 / n as f64;
    Ok(Pmf::new(visits.iter().map(|&v| v * absorb).collect()))
}

/// One branch of a generated tree.
///
/// `path` lists the branch's vertices in first-visit order (its length `h`
/// is the branch length); `anchor = (tree_end, branch_end)` is the edge that
/// connects the branch to the previously built tree, with `tree_end` on the
/// old tree. For first-entrance walks `branch_end` is the first path vertex;
/// for loop-erased segments it is the last. `t_start` and `t_stop` are
/// global walk times: the branch-opening and branch-closing stopping times
/// for first-entrance walks, and the segment boundaries (restart time, tree
/// hit time) for loop-erased segments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchRecord {
    /// 1-based branch number.
    pub index: usize,
    /// Branch vertices in discovery order.
    pub path: Vec<usize>,
    /// Edge `(tree_end, branch_end)` attaching the branch to the tree.
    pub anchor: (usize, usize),
    /// Walk time at which the branch opened.
    pub t_start: usize,
    /// Walk time at which the branch closed.
    pub t_stop: usize,
}

impl BranchRecord {
    /// Branch length `h = |path|`.
    pub fn length(&self) -> usize {
        self.path.len()
    }
}

/// Reconstruct branch records from a recorded trace, independently of
/// whatever the generator recorded.
///
/// The trace's own stopping-time marks are ignored; only the segment
/// boundaries ([`MarkKind::BranchStart`]) are used to tell the contiguous
/// first-entrance prefix (if any) from loop-erased segments. Works for
/// first-entrance walks, segment walks, and mixtures (a first-entrance
/// prefix followed by segments). Draw-sequence traces from the urn sampler
/// are not walks on a graph and are not supported here.
pub fn extract_branches(trace: &WalkTrace) -> Result<Vec<BranchRecord>> {
    if trace.vertices.is_empty() {
        return Err(UstError::InvalidParam("cannot extract branches from an empty trace".into()));
    }
    let n_hint = trace.vertices.iter().copied().max().unwrap() + 1;
    let restart_at_zero = trace
        .marks
        .iter()
        .any(|m| m.kind == MarkKind::BranchStart && m.pos == 0);
    let starts = trace.segment_starts();
    let (prefix_end, first_seg) = if restart_at_zero {
        (0, 0)
    } else {
        (starts.get(1).copied().unwrap_or(trace.vertices.len()), 1)
    };

    let mut branches = Vec::new();
    let mut branch_no = 0usize;
    let mut walk_time = 0usize; // transitions consumed so far

    if prefix_end > 0 {
        // First-entrance prefix: vertices[0] is the root; a branch opens at
        // each step onto a fresh vertex and closes at the next step onto a
        // visited one (or at the end of the prefix, which is the cover
        // position and itself fresh).
        if trace.vertices[0] != trace.root {
            return Err(UstError::InvalidParam(
                "first-entrance trace must begin at its root".into(),
            ));
        }
        let mut visited = vec![false; n_hint];
        visited[trace.vertices[0]] = true;
        let mut t = 1usize;
        while t < prefix_end {
            if visited[trace.vertices[t]] {
                t += 1;
                continue;
            }
            branch_no += 1;
            let t_start = t;
            let anchor = (trace.vertices[t - 1], trace.vertices[t]);
            let mut path = Vec::new();
            while t < prefix_end && !visited[trace.vertices[t]] {
                visited[trace.vertices[t]] = true;
                path.push(trace.vertices[t]);
                t += 1;
            }
            let t_stop = if t < prefix_end { t } else { prefix_end - 1 };
            branches.push(BranchRecord { index: branch_no, path, anchor, t_start, t_stop });
        }
        walk_time = prefix_end - 1;
    }

    // Loop-erased segments: each runs from a restart to the position where
    // it hit the tree (its last vertex).
    for (i, &s) in starts.iter().enumerate().skip(first_seg) {
        let e = starts.get(i + 1).copied().unwrap_or(trace.vertices.len());
        let seg = &trace.vertices[s..e];
        if seg.len() < 2 {
            return Err(UstError::InvalidParam(format!(
                "segment starting at position {s} has no tree hit"
            )));
        }
        let erased = loop_erase(seg);
        let hit = *erased.last().unwrap();
        let path: Vec<usize> = erased[..erased.len() - 1].to_vec();
        branch_no += 1;
        let t_start = walk_time;
        walk_time += seg.len() - 1;
        branches.push(BranchRecord {
            index: branch_no,
            path: path.clone(),
            anchor: (hit, *path.last().expect("segment path is nonempty")),
            t_start,
            t_stop: walk_time,
        });
    }

    if walk_time != trace.steps {
        return Err(UstError::InvalidParam(format!(
            "trace step count {} does not match its segment structure ({walk_time} transitions)",
            trace.steps
        )));
    }
    Ok(branches)
}

/// Render a mass function as `h,probability` CSV with 6 fractional digits.
pub fn pmf_to_csv(pmf: &Pmf) -> String {
    let mut out = String::from("h,probability\n");
    for (i, &p) in pmf.probs().iter().enumerate() {
        let _ = writeln!(out, "{},{:.6}", i + 1, p);
    }
    out
}

/// Render a chain as `from,to,prob` CSV (nonzero entries only, row-major).
/// `labels` names the states; pass one label per row/column.
pub fn chain_to_csv(p: &DMatrix<f64>, labels: &[String]) -> String {
    assert_eq!(labels.len(), p.nrows(), "one label per state required");
    let mut out = String::from("from,to,prob\n");
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            if p[(i, j)] != 0.0 {
                let _ = writeln!(out, "{},{},{:.6}", labels[i], labels[j], p[(i, j)]);
            }
        }
    }
    out
}

/// State labels for [`absorbing_chain`] matrices: `1..=n-k` then `stop`.
pub fn absorbing_labels(n: usize, k: usize) -> Vec<String> {
    let mut labels: Vec<String> = (1..=n - k).map(|h| h.to_string()).collect();
    labels.push("stop".to_string());
    labels
}

/// State labels for [`lumped_chain`] matrices: `1..=n-k`.
pub fn lumped_labels(n: usize, k: usize) -> Vec<String> {
    (1..=n - k).map(|h| h.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_walk::Mark;

    #[test]
    fn closed_form_examples() {
        let p31 = branch_pmf(3, 1).unwrap();
        assert!((p31.prob(1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((p31.prob(2) - 1.0 / 3.0).abs() < 1e-15);

        let p42 = branch_pmf(4, 2).unwrap();
        assert!((p42.prob(1) - 0.75).abs() < 1e-15);
        assert!((p42.prob(2) - 0.25).abs() < 1e-15);

        let p21 = branch_pmf(2, 1).unwrap();
        assert_eq!(p21.probs(), &[1.0]);
    }

    #[test]
    fn closed_form_sums_to_one() {
        for n in [2usize, 3, 5, 12, 50, 200, 1000] {
            for k in [1usize, 2, n / 2, n - 1] {
                if k >= 1 && k < n {
                    let pmf = branch_pmf(n, k).unwrap();
                    assert!(
                        (pmf.total() - 1.0).abs() < 1e-12,
                        "sum off at n={n}, k={k}: {}",
                        pmf.total()
                    );
                }
            }
        }
    }

    #[test]
    fn parameter_domain_is_enforced() {
        assert!(branch_pmf(1, 1).is_err());
        assert!(branch_pmf(5, 0).is_err());
        assert!(branch_pmf(5, 5).is_err());
        assert!(absorbing_chain(5, 7).is_err());
        assert!(lumped_chain(2, 2).is_err());
    }

    #[test]
    fn absorbing_chain_small_example() {
        // n=3, k=1: states 1, 2, stop.
        let p = absorbing_chain(3, 1).unwrap();
        let third = 1.0 / 3.0;
        // from 1: self 1/3 (own-path hit), up 1/3, stop 1/3
        assert!((p[(0, 0)] - third).abs() < 1e-15);
        assert!((p[(0, 1)] - third).abs() < 1e-15);
        assert!((p[(0, 2)] - third).abs() < 1e-15);
        // from 2: back-to-1 1/3, self 1/3, stop 1/3
        assert!((p[(1, 0)] - third).abs() < 1e-15);
        assert!((p[(1, 1)] - third).abs() < 1e-15);
        assert!((p[(1, 2)] - third).abs() < 1e-15);
        // stop absorbs
        assert_eq!(p[(2, 2)], 1.0);
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| p[(i, j)]).sum();
            assert!((row - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn lumped_chain_small_example() {
        let p = lumped_chain(3, 1).unwrap();
        assert_eq!(p.nrows(), 2);
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((p[(0, 1)] - 0.5).abs() < 1e-15);
        assert!((p[(1, 0)] - 1.0).abs() < 1e-15);
        assert!((p[(1, 1)]).abs() < 1e-15);
    }

    #[test]
    fn lumped_rows_are_stochastic() {
        for (n, k) in [(3, 1), (5, 2), (10, 1), (12, 7), (30, 29)] {
            let p = lumped_chain(n, k).unwrap();
            for i in 0..p.nrows() {
                let row: f64 = (0..p.ncols()).map(|j| p[(i, j)]).sum();
                assert!((row - 1.0).abs() < 1e-12, "row {i} sums to {row} at n={n}, k={k}");
            }
        }
    }

    #[test]
    fn closed_form_is_stationary_for_lumped_chain() {
        for (n, k) in [(3, 1), (8, 1), (10, 3), (25, 12)] {
            let p = lumped_chain(n, k).unwrap();
            let pmf = branch_pmf(n, k).unwrap();
            let res = stationary_residual(&p, pmf.probs());
            assert!(res < 1e-12, "residual {res} at n={n}, k={k}");
        }
    }

    #[test]
    fn absorption_profile_matches_closed_form() {
        for (n, k) in [(3, 1), (7, 2), (12, 1), (20, 10)] {
            let a = absorption_profile(n, k).unwrap();
            let c = branch_pmf(n, k).unwrap();
            assert!(a.max_abs_diff(&c) < 1e-12, "mismatch at n={n}, k={k}");
        }
    }

    #[test]
    fn stationary_solver_agrees_with_closed_form() {
        let p = lumped_chain(9, 2).unwrap();
        let pi = stationary(&p).unwrap();
        let pmf = branch_pmf(9, 2).unwrap();
        for (a, b) in pi.iter().zip(pmf.probs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn extract_branches_first_entrance_walk() {
        // A 5x5 grid walk, 0-based row-major ids: start at 15, build a
        // 4-vertex branch, wander, then build a second 4-vertex branch.
        let trace = WalkTrace {
            root: 15,
            vertices: vec![15, 16, 17, 18, 23, 18, 17, 12, 13, 8, 7, 12],
            steps: 11,
            marks: vec![],
        };
        let branches = extract_branches(&trace).unwrap();
        assert_eq!(branches.len(), 2);

        assert_eq!(branches[0].index, 1);
        assert_eq!(branches[0].path, vec![16, 17, 18, 23]);
        assert_eq!(branches[0].anchor, (15, 16));
        assert_eq!((branches[0].t_start, branches[0].t_stop), (1, 5));
        assert_eq!(branches[0].length(), 4);

        assert_eq!(branches[1].index, 2);
        assert_eq!(branches[1].path, vec![12, 13, 8, 7]);
        assert_eq!(branches[1].anchor, (17, 12));
        assert_eq!((branches[1].t_start, branches[1].t_stop), (7, 11));
    }

    #[test]
    fn extract_branches_final_branch_includes_cover_position() {
        // Walk on a triangle covering at the last step: branch 2 is the
        // final vertex even though no revisit follows it.
        let trace = WalkTrace { root: 0, vertices: vec![0, 1, 0, 2], steps: 3, marks: vec![] };
        let branches = extract_branches(&trace).unwrap();
        assert_eq!(branches.len(), 2);
        assert_eq!(branches[0].path, vec![1]);
        assert_eq!((branches[0].t_start, branches[0].t_stop), (1, 2));
        assert_eq!(branches[1].path, vec![2]);
        assert_eq!(branches[1].anchor, (0, 2));
        assert_eq!((branches[1].t_start, branches[1].t_stop), (3, 3));
    }

    #[test]
    fn extract_branches_segment_walk() {
        // One loop-erased segment on a triangle: restart at 2, hit 0.
        let trace = WalkTrace {
            root: 0,
            vertices: vec![2, 0],
            steps: 1,
            marks: vec![Mark { kind: MarkKind::BranchStart, pos: 0, branch: 1 }],
        };
        let branches = extract_branches(&trace).unwrap();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].path, vec![2]);
        assert_eq!(branches[0].anchor, (0, 2));
        assert_eq!((branches[0].t_start, branches[0].t_stop), (0, 1));
    }

    #[test]
    fn extract_branches_segment_walk_erases_loops() {
        // Segment 1-2-3-2-0 from restart 1 hits 0; the 2-3-2 loop erases.
        let trace = WalkTrace {
            root: 0,
            vertices: vec![1, 2, 3, 2, 0],
            steps: 4,
            marks: vec![Mark { kind: MarkKind::BranchStart, pos: 0, branch: 1 }],
        };
        let branches = extract_branches(&trace).unwrap();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].path, vec![1, 2]);
        assert_eq!(branches[0].anchor, (0, 2));
        assert_eq!((branches[0].t_start, branches[0].t_stop), (0, 4));
    }

    #[test]
    fn pmf_csv_has_six_digit_probabilities() {
        let csv = pmf_to_csv(&branch_pmf(3, 1).unwrap());
        assert_eq!(csv, "h,probability\n1,0.666667\n2,0.333333\n");
    }

    #[test]
    fn chain_csv_lists_nonzero_entries() {
        let p = lumped_chain(3, 1).unwrap();
        let csv = chain_to_csv(&p, &lumped_labels(3, 1));
        assert_eq!(csv, "from,to,prob\n1,1,0.500000\n1,2,0.500000\n2,1,1.000000\n");
    }

    #[test]
    fn tv_distance_is_symmetric_and_zero_on_self() {
        let a = branch_pmf(10, 1).unwrap();
        let b = branch_pmf(10, 2).unwrap();
        assert_eq!(a.tv(&a), 0.0);
        assert!((a.tv(&b) - b.tv(&a)).abs() < 1e-15);
        assert!(a.tv(&b) > 0.0);
    }
}
