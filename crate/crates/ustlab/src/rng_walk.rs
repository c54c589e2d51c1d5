//! Seeded random-walk primitives: per-replica RNG streams, weighted steps,
//! recorded walk traces, and loop erasure.
//!
//! Every random choice in the crate flows through a [`ChaCha8Rng`] created by
//! [`replica_rng`], so experiments are reproducible bit-for-bit: replica `k`
//! of an experiment seeded with `s` always sees the same stream regardless of
//! how replicas are scheduled across threads.

use crate::graph::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// RNG for replica `replica` of an experiment seeded with `seed`.
///
/// Distinct replicas use distinct ChaCha streams of the same seed, so they
/// are statistically independent yet individually reproducible.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// One random-walk step from `v`: picks a neighbour with probability
/// proportional to edge weight by inverting the cumulative weight array with
/// a binary search. A self-loop is a single candidate like any other
/// neighbour (its weight counts once).
pub fn step<R: Rng>(g: &Graph, v: usize, rng: &mut R) -> usize {
    let cum = g.cumulative_weights(v);
    let total = *cum.last().expect("cannot step from an isolated vertex");
    let x = rng.gen::<f64>() * total;
    // First index whose cumulative weight exceeds x; clamp guards the
    // rounding case x == total.
    let idx = cum.partition_point(|&c| c <= x).min(cum.len() - 1);
    g.neighbors(v)[idx]
}

/// Kinds of positions marked in a [`WalkTrace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkKind {
    /// First-entrance walks: position where branch `branch` opened (the walk
    /// stepped onto a fresh vertex from visited territory).
    SigmaOut,
    /// First-entrance walks: position where branch `branch` closed (the walk
    /// stepped back onto a visited vertex, or the final cover position).
    SigmaIn,
    /// Segmented walks: position where segment `branch` begins (a restart at
    /// a fresh vertex, not reached by a walk step).
    BranchStart,
    /// Segmented walks: position where segment `branch` hit the tree.
    SigmaHat,
}

/// A marked position in a trace. `pos` indexes [`WalkTrace::vertices`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mark {
    pub kind: MarkKind,
    pub pos: usize,
    /// 1-based branch/segment number the mark belongs to.
    pub branch: usize,
}

/// Complete record of the randomness consumed by one generator run.
///
/// `vertices` lists every position the process occupied, in order. For
/// first-entrance walks this is the walk itself (`vertices[0]` is the start).
/// For segmented walks each segment's vertices appear contiguously, with a
/// [`MarkKind::BranchStart`] mark at each segment's first position; a
/// position opens a new segment (rather than being reached by a walk step)
/// exactly when it carries that mark. `steps` counts walk transitions only,
/// so restarts are free: `steps = vertices.len() - #segments` where an
/// unsegmented walk has one segment.
#[derive(Debug, Clone, Default)]
pub struct WalkTrace {
    /// Root / initial vertex of the generated tree.
    pub root: usize,
    /// Every position occupied, segment by segment.
    pub vertices: Vec<usize>,
    /// Number of walk transitions (restarts excluded).
    pub steps: usize,
    /// Stopping-time and segment-boundary marks, in position order.
    pub marks: Vec<Mark>,
}

impl WalkTrace {
    /// Positions where segments begin: 0, plus every `BranchStart` mark.
    pub fn segment_starts(&self) -> Vec<usize> {
        let mut starts: Vec<usize> = self
            .marks
            .iter()
            .filter(|m| m.kind == MarkKind::BranchStart)
            .map(|m| m.pos)
            .collect();
        if starts.first() != Some(&0) {
            starts.insert(0, 0);
        }
        starts
    }
}

/// Loop-erased path under construction, with an incremental vertex-position
/// index so each extension costs O(1) plus the length of any erased loop.
#[derive(Debug, Clone)]
pub struct LoopErasedPath {
    path: Vec<usize>,
    /// `pos[v]` = index of `v` in `path`, or `usize::MAX` when absent.
    pos: Vec<usize>,
}

impl LoopErasedPath {
    /// Start a loop-erased path at `start`, on vertex ids `< n`.
    pub fn new(n: usize, start: usize) -> LoopErasedPath {
        let mut pos = vec![usize::MAX; n];
        pos[start] = 0;
        LoopErasedPath { path: vec![start], pos }
    }

    /// Extend by `v`. If `v` is already on the path the loop back to it is
    /// erased (chronologically); a repeat of the tip, such as a self-loop
    /// step, erases nothing.
    pub fn push(&mut self, v: usize) {
        if self.pos[v] != usize::MAX {
            let keep = self.pos[v] + 1;
            for &u in &self.path[keep..] {
                self.pos[u] = usize::MAX;
            }
            self.path.truncate(keep);
        } else {
            self.pos[v] = self.path.len();
            self.path.push(v);
        }
    }

    /// Current length |p̂(t)| in vertices.
    pub fn len(&self) -> usize {
        self.path.len()
    }

    /// The current loop-erased path.
    pub fn path(&self) -> &[usize] {
        &self.path
    }

    /// Consume into the underlying path vector.
    pub fn into_path(self) -> Vec<usize> {
        self.path
    }

    /// Current tip (always the walk's current position).
    pub fn tip(&self) -> usize {
        *self.path.last().expect("loop-erased path is never empty")
    }
}

/// Loop-erase a complete walk, erasing loops in chronological order.
///
/// ```
/// use ustlab::rng_walk::loop_erase;
/// assert_eq!(loop_erase(&[1, 2, 3, 2, 4]), vec![1, 2, 4]);
/// assert_eq!(loop_erase(&[7]), vec![7]);
/// assert_eq!(loop_erase(&[1, 2, 3, 1, 3, 4]), vec![1, 3, 4]);
/// ```
pub fn loop_erase(walk: &[usize]) -> Vec<usize> {
    assert!(!walk.is_empty(), "cannot loop-erase an empty walk");
    let n = walk.iter().copied().max().unwrap() + 1;
    let mut le = LoopErasedPath::new(n, walk[0]);
    for &v in &walk[1..] {
        le.push(v);
    }
    le.into_path()
}
