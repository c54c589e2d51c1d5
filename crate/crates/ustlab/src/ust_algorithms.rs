//! Random-walk spanning tree generators.
//!
//! Six samplers share one result type: Aldous-Broder (first-entrance walk to
//! cover time), Wilson's loop-erased segments with an optional initial tree,
//! an urn-based sampler for complete graphs, a hybrid that runs Aldous-Broder
//! for a fixed number of branches and lets Wilson finish, Wilson started from
//! a uniformly chosen edge, and a seeded sampler whose output law is biased
//! by sub-tree counts. Each run records a full [`WalkTrace`] plus per-branch
//! records, so the stopping-time structure of the walk can be inspected and
//! cross-checked after the fact.

use crate::branch_stats::BranchRecord;
use crate::graph::{make_family, Family, Graph, Tree};
use crate::rng_walk::{step, Mark, MarkKind, WalkTrace};
use crate::{Result, UstError};
use rand::seq::SliceRandom;
use rand::Rng;

/// Output of one generator run.
#[derive(Debug, Clone)]
pub struct GenerationResult {
    /// The sampled spanning tree.
    pub tree: Tree,
    /// Complete record of the randomness driving the run.
    pub trace: WalkTrace,
    /// Branch decomposition, in construction order.
    pub branches: Vec<BranchRecord>,
    /// Random-walk transitions consumed (for the urn sampler: draws).
    pub rw_steps: usize,
    /// `edge_times[j]` is the walk time at which the tree's `j+1`-th edge
    /// appeared; edges of an initial condition carry time 0. Nondecreasing.
    pub edge_times: Vec<usize>,
    /// Set when an algorithm specialized to complete graphs was run on a
    /// non-complete graph (its output law is then not guaranteed uniform).
    pub non_complete_warning: bool,
}

/// First-entrance walk: run a random walk from `root` until every vertex has
/// been visited; the edges by which vertices were first entered form the
/// tree.
pub fn aldous_broder<R: Rng>(g: &Graph, root: usize, rng: &mut R) -> Result<GenerationResult> {
    let n = g.n();
    if root >= n {
        return Err(UstError::InvalidParam(format!("root {root} out of range")));
    }
    let mut parent = vec![usize::MAX; n];
    parent[root] = root;
    let mut visited = vec![false; n];
    visited[root] = true;
    let mut covered = 1usize;

    let mut trace = WalkTrace { root, vertices: vec![root], steps: 0, marks: Vec::new() };
    let mut branches: Vec<BranchRecord> = Vec::new();
    let mut edge_times = Vec::with_capacity(n - 1);

    // Open-branch state.
    let mut open = false;
    let mut branch_no = 0usize;
    let mut path: Vec<usize> = Vec::new();
    let mut anchor = (0usize, 0usize);
    let mut t_start = 0usize;

    let mut cur = root;
    while covered < n {
        let next = step(g, cur, rng);
        trace.vertices.push(next);
        trace.steps += 1;
        let t = trace.steps;
        if visited[next] {
            if open {
                trace.marks.push(Mark { kind: MarkKind::SigmaIn, pos: t, branch: branch_no });
                branches.push(BranchRecord {
                    index: branch_no,
                    path: std::mem::take(&mut path),
                    anchor,
                    t_start,
                    t_stop: t,
                });
                open = false;
            }
        } else {
            visited[next] = true;
            parent[next] = cur;
            covered += 1;
            edge_times.push(t);
            if !open {
                open = true;
                branch_no += 1;
                anchor = (cur, next);
                t_start = t;
                trace.marks.push(Mark { kind: MarkKind::SigmaOut, pos: t, branch: branch_no });
            }
            path.push(next);
        }
        cur = next;
    }
    if open {
        // The cover position is fresh and closes the final branch.
        let t = trace.steps;
        trace.marks.push(Mark { kind: MarkKind::SigmaIn, pos: t, branch: branch_no });
        branches.push(BranchRecord { index: branch_no, path, anchor, t_start, t_stop: t });
    }

    Ok(GenerationResult {
        tree: Tree::from_parents(root, parent)?,
        rw_steps: trace.steps,
        trace,
        branches,
        edge_times,
        non_complete_warning: false,
    })
}

/// Initial condition for [`wilson_from_tree`]: a tree on a subset of the
/// graph's vertices, given by its edges, plus the root the final tree should
/// be oriented toward.
#[derive(Debug, Clone)]
pub struct InitialTree {
    pub edges: Vec<(usize, usize)>,
    pub root: usize,
}

impl InitialTree {
    /// The single-vertex initial condition.
    pub fn vertex(root: usize) -> InitialTree {
        InitialTree { edges: Vec::new(), root }
    }

    /// Vertices touched by the initial edges, plus the root.
    pub fn vertices(&self) -> Vec<usize> {
        let mut vs: Vec<usize> = self
            .edges
            .iter()
            .flat_map(|&(u, v)| [u, v])
            .chain(std::iter::once(self.root))
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }
}

/// Wilson's algorithm from a single root vertex.
pub fn wilson<R: Rng>(g: &Graph, root: usize, rng: &mut R) -> Result<GenerationResult> {
    wilson_from_tree(g, &InitialTree::vertex(root), rng)
}

/// Wilson's algorithm with an initial condition.
///
/// Starting from the given (non-spanning) tree, repeatedly: pick a uniform
/// vertex not yet in the tree, walk from it until the tree is hit, loop-erase
/// the walk, and attach the erased path. The output is uniform over the
/// spanning trees containing the initial tree.
pub fn wilson_from_tree<R: Rng>(
    g: &Graph,
    init: &InitialTree,
    rng: &mut R,
) -> Result<GenerationResult> {
    let n = g.n();
    let mut parent = vec![usize::MAX; n];
    let mut in_tree = vec![false; n];

    // Validate and orient the initial condition.
    let verts = init.vertices();
    for &v in &verts {
        if v >= n {
            return Err(UstError::InvalidParam(format!("initial-tree vertex {v} out of range")));
        }
        in_tree[v] = true;
    }
    for &(u, v) in &init.edges {
        if u == v || g.edge_weight(u, v).is_none() {
            return Err(UstError::InvalidParam(format!(
                "initial-tree edge ({u}, {v}) is not an edge of the graph"
            )));
        }
    }
    if init.edges.len() + 1 != verts.len() {
        return Err(UstError::InvalidParam(
            "initial-tree edges do not form a tree (wrong edge count)".into(),
        ));
    }
    // BFS from the root over initial edges only.
    {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in &init.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        parent[init.root] = init.root;
        let mut queue = std::collections::VecDeque::from([init.root]);
        let mut reached = 1usize;
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if parent[u] == usize::MAX {
                    parent[u] = v;
                    reached += 1;
                    queue.push_back(u);
                }
            }
        }
        if reached != verts.len() {
            return Err(UstError::InvalidParam(
                "initial-tree edges do not form a tree (not connected)".into(),
            ));
        }
    }

    let mut trace =
        WalkTrace { root: init.root, vertices: Vec::new(), steps: 0, marks: Vec::new() };
    let mut branches = Vec::new();
    let mut edge_times = vec![0usize; init.edges.len()];
    wilson_fill(g, &mut parent, &mut in_tree, &mut trace, &mut branches, &mut edge_times, 0, rng)?;

    Ok(GenerationResult {
        tree: Tree::from_parents(init.root, parent)?,
        rw_steps: trace.steps,
        trace,
        branches,
        edge_times,
        non_complete_warning: false,
    })
}

/// Shared Wilson phase: segments from uniform fresh starts until the tree
/// spans. `branch_no_base` continues an existing branch numbering and the
/// trace/edge-time accounting continues from whatever is already recorded.
#[allow(clippy::too_many_arguments)]
fn wilson_fill<R: Rng>(
    g: &Graph,
    parent: &mut [usize],
    in_tree: &mut [bool],
    trace: &mut WalkTrace,
    branches: &mut Vec<BranchRecord>,
    edge_times: &mut Vec<usize>,
    branch_no_base: usize,
    rng: &mut R,
) -> Result<()> {
    let n = g.n();
    let mut remaining: Vec<usize> = (0..n).filter(|&v| !in_tree[v]).collect();
    let mut pos = vec![usize::MAX; n];
    for (i, &v) in remaining.iter().enumerate() {
        pos[v] = i;
    }
    let remove = |remaining: &mut Vec<usize>, pos: &mut Vec<usize>, v: usize| {
        let i = pos[v];
        let last = *remaining.last().unwrap();
        remaining.swap_remove(i);
        pos[last] = i;
        pos[v] = usize::MAX;
    };

    let mut branch_no = branch_no_base;
    while !remaining.is_empty() {
        let start = remaining[rng.gen_range(0..remaining.len())];
        branch_no += 1;
        trace.marks.push(Mark {
            kind: MarkKind::BranchStart,
            pos: trace.vertices.len(),
            branch: branch_no,
        });
        trace.vertices.push(start);
        let t_start = trace.steps;

        let mut le = crate::rng_walk::LoopErasedPath::new(n, start);
        let hit = loop {
            let next = step(g, le.tip(), rng);
            trace.vertices.push(next);
            trace.steps += 1;
            if in_tree[next] {
                trace.marks.push(Mark {
                    kind: MarkKind::SigmaHat,
                    pos: trace.vertices.len() - 1,
                    branch: branch_no,
                });
                break next;
            }
            le.push(next);
        };

        let path = le.into_path();
        for w in path.windows(2) {
            parent[w[0]] = w[1];
        }
        let last = *path.last().unwrap();
        parent[last] = hit;
        for &v in &path {
            in_tree[v] = true;
            remove(&mut remaining, &mut pos, v);
        }
        edge_times.extend(std::iter::repeat(trace.steps).take(path.len()));
        branches.push(BranchRecord {
            index: branch_no,
            anchor: (hit, last),
            path,
            t_start,
            t_stop: trace.steps,
        });
    }
    Ok(())
}

/// Hybrid sampler for complete graphs: run the first-entrance walk until its
/// `branches`-th branch closes (or the walk covers first), then let Wilson
/// finish from the partial tree.
///
/// Requires `1 <= branches < n`. On a non-complete graph the run proceeds
/// but the result carries `non_complete_warning` (the output law is only
/// guaranteed uniform on complete graphs, with or without self-loops).
pub fn hybrid<R: Rng>(
    g: &Graph,
    branches: usize,
    root: usize,
    rng: &mut R,
) -> Result<GenerationResult> {
    let n = g.n();
    if root >= n {
        return Err(UstError::InvalidParam(format!("root {root} out of range")));
    }
    if branches < 1 || branches >= n {
        return Err(UstError::InvalidParam(format!(
            "hybrid needs 1 <= branches < n, got branches = {branches}, n = {n}"
        )));
    }
    let warning = !g.is_complete();

    // First-entrance phase, stopping at the close of branch `branches`.
    let mut parent = vec![usize::MAX; n];
    parent[root] = root;
    let mut in_tree = vec![false; n];
    in_tree[root] = true;
    let mut covered = 1usize;

    let mut trace = WalkTrace { root, vertices: vec![root], steps: 0, marks: Vec::new() };
    let mut recs: Vec<BranchRecord> = Vec::new();
    let mut edge_times = Vec::with_capacity(n - 1);

    let mut open = false;
    let mut branch_no = 0usize;
    let mut path: Vec<usize> = Vec::new();
    let mut anchor = (0usize, 0usize);
    let mut t_start = 0usize;
    let mut cur = root;
    while covered < n {
        let next = step(g, cur, rng);
        trace.vertices.push(next);
        trace.steps += 1;
        let t = trace.steps;
        if in_tree[next] {
            if open {
                trace.marks.push(Mark { kind: MarkKind::SigmaIn, pos: t, branch: branch_no });
                recs.push(BranchRecord {
                    index: branch_no,
                    path: std::mem::take(&mut path),
                    anchor,
                    t_start,
                    t_stop: t,
                });
                open = false;
                if branch_no == branches {
                    break;
                }
            }
        } else {
            in_tree[next] = true;
            parent[next] = cur;
            covered += 1;
            edge_times.push(t);
            if !open {
                open = true;
                branch_no += 1;
                anchor = (cur, next);
                t_start = t;
                trace.marks.push(Mark { kind: MarkKind::SigmaOut, pos: t, branch: branch_no });
            }
            path.push(next);
        }
        cur = next;
    }
    if open {
        let t = trace.steps;
        trace.marks.push(Mark { kind: MarkKind::SigmaIn, pos: t, branch: branch_no });
        recs.push(BranchRecord { index: branch_no, path, anchor, t_start, t_stop: t });
    }

    wilson_fill(g, &mut parent, &mut in_tree, &mut trace, &mut recs, &mut edge_times, branch_no, rng)?;

    Ok(GenerationResult {
        tree: Tree::from_parents(root, parent)?,
        rw_steps: trace.steps,
        trace,
        branches: recs,
        edge_times,
        non_complete_warning: warning,
    })
}

/// Wilson's algorithm started from a uniformly chosen (non-loop) edge
/// instead of a single vertex. On edge-transitive graphs the output is
/// uniform; the expected walk length drops because the first segment only
/// has to hit one of two vertices.
pub fn edge_wilson<R: Rng>(g: &Graph, rng: &mut R) -> Result<GenerationResult> {
    let candidates: Vec<(usize, usize)> =
        g.edges().iter().filter(|e| e.u != e.v).map(|e| (e.u, e.v)).collect();
    if candidates.is_empty() {
        return Err(UstError::InvalidParam("graph has no non-loop edge to start from".into()));
    }
    let &(u, v) = &candidates[rng.gen_range(0..candidates.len())];
    wilson_from_tree(g, &InitialTree { edges: vec![(u, v)], root: u }, rng)
}

/// Outcome of the color-assignment process on an urn of `n` balls.
#[derive(Debug, Clone)]
pub struct UrnOutcome {
    /// The root ball (colored before any draw).
    pub root: usize,
    /// `classes[i]` lists the balls painted with color `i+1`, in draw order.
    pub classes: Vec<Vec<usize>>,
    /// Every ball drawn, in order (uncolored-set draws and whole-urn draws).
    pub draws: Vec<usize>,
    /// For each class, the index into `draws` of its first ball.
    pub class_starts: Vec<usize>,
    /// For each class, the index into `draws` of the colored draw that closed
    /// it; the final class is closed by its last ball (the urn ran out of
    /// uncolored balls).
    pub class_stops: Vec<usize>,
}

/// Run the color-assignment process: paint the root, then draw one ball
/// uniformly from the uncolored set to open class 1; afterwards draw
/// uniformly from the whole urn, painting uncolored balls into the current
/// class and opening a new class (with a fresh uncolored draw) whenever a
/// colored ball comes up. Stops when every ball is colored.
pub fn urn_process<R: Rng>(n: usize, root: usize, rng: &mut R) -> Result<UrnOutcome> {
    if n < 2 {
        return Err(UstError::InvalidParam(format!("urn needs n >= 2, got {n}")));
    }
    if root >= n {
        return Err(UstError::InvalidParam(format!("root {root} out of range")));
    }
    let mut uncolored: Vec<usize> = (0..n).filter(|&b| b != root).collect();
    let mut colored = vec![false; n];
    colored[root] = true;
    let mut draws = Vec::with_capacity(n);
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut class_starts = Vec::new();
    let mut class_stops = Vec::new();

    let draw_uncolored = |uncolored: &mut Vec<usize>, rng: &mut R| -> usize {
        let i = rng.gen_range(0..uncolored.len());
        uncolored.swap_remove(i)
    };

    // Open class 1.
    let first = draw_uncolored(&mut uncolored, rng);
    colored[first] = true;
    class_starts.push(draws.len());
    draws.push(first);
    classes.push(vec![first]);

    // Exactly n-2 whole-urn draws, each coloring exactly one ball.
    for _ in 0..n - 2 {
        let b = rng.gen_range(0..n);
        draws.push(b);
        if !colored[b] {
            colored[b] = true;
            let i = uncolored.iter().position(|&x| x == b).expect("uncolored ball tracked");
            uncolored.swap_remove(i);
            classes.last_mut().unwrap().push(b);
        } else {
            class_stops.push(draws.len() - 1);
            let fresh = draw_uncolored(&mut uncolored, rng);
            colored[fresh] = true;
            class_starts.push(draws.len());
            draws.push(fresh);
            classes.push(vec![fresh]);
        }
    }
    class_stops.push(draws.len() - 1);
    Ok(UrnOutcome { root, classes, draws, class_starts, class_stops })
}

/// Build a random tree from an urn outcome: each class becomes a path,
/// attached to a uniformly chosen vertex of the tree built so far.
///
/// The result is a uniform spanning tree of the complete graph on `n`
/// vertices. The trace records the draw sequence (`rw_steps` counts draws);
/// it is not a walk on a graph, so branch records come from the outcome, not
/// from trace reconstruction.
pub fn urn_tree<R: Rng>(n: usize, root: usize, rng: &mut R) -> Result<GenerationResult> {
    let outcome = urn_process(n, root, rng)?;
    let mut parent = vec![usize::MAX; n];
    parent[root] = root;
    let mut placed = vec![root];
    let mut branches = Vec::with_capacity(outcome.classes.len());
    let mut edge_times = Vec::with_capacity(n - 1);
    let mut marks = Vec::new();

    // Positions in the trace are draw indices shifted by one (position 0 is
    // the root), matching first-entrance walk conventions.
    for (i, class) in outcome.classes.iter().enumerate() {
        let u = placed[rng.gen_range(0..placed.len())];
        parent[class[0]] = u;
        for w in class.windows(2) {
            parent[w[1]] = w[0];
        }
        placed.extend_from_slice(class);
        let t_start = outcome.class_starts[i] + 1;
        let t_stop = outcome.class_stops[i] + 1;
        marks.push(Mark { kind: MarkKind::BranchStart, pos: t_start, branch: i + 1 });
        marks.push(Mark { kind: MarkKind::SigmaIn, pos: t_stop, branch: i + 1 });
        branches.push(BranchRecord {
            index: i + 1,
            anchor: (u, class[0]),
            path: class.clone(),
            t_start,
            t_stop,
        });
    }
    // Each colored draw adds one edge.
    let mut colored = vec![false; n];
    colored[root] = true;
    for (t, &b) in outcome.draws.iter().enumerate() {
        if !colored[b] {
            colored[b] = true;
            edge_times.push(t + 1);
        }
    }

    let steps = outcome.draws.len();
    let mut vertices = Vec::with_capacity(steps + 1);
    vertices.push(root);
    vertices.extend_from_slice(&outcome.draws);
    Ok(GenerationResult {
        tree: Tree::from_parents(root, parent)?,
        trace: WalkTrace { root, vertices, steps, marks },
        branches,
        rw_steps: steps,
        edge_times,
        non_complete_warning: false,
    })
}

/// Sample a random labeled tree on `n` vertices with probability
/// proportional to its number of sub-trees isomorphic to `seed`.
///
/// Runs Wilson on the complete graph with the seed tree (under its own
/// labels) as the initial condition, then applies a uniform relabeling.
pub fn seeded_tree<R: Rng>(n: usize, seed: &Tree, rng: &mut R) -> Result<Tree> {
    if seed.n() > n {
        return Err(UstError::InvalidParam(format!(
            "seed tree has {} vertices but n = {n}",
            seed.n()
        )));
    }
    if n < 2 {
        return Err(UstError::InvalidParam(format!("seeded sampling needs n >= 2, got {n}")));
    }
    let g = make_family(Family::Complete, &[n], false)?;
    let init = InitialTree { edges: seed.edges_sorted(), root: seed.root() };
    let result = wilson_from_tree(&g, &init, rng)?;

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut parent = vec![usize::MAX; n];
    for v in 0..n {
        parent[perm[v]] = perm[result.tree.parent(v)];
    }
    Tree::from_parents(perm[result.tree.root()], parent)
}
