//! Property tests for the structural invariants: loop erasure, branch-law
//! normalization, chain stochasticity, branch partitions, and tree
//! serialization round-trips.

use proptest::prelude::*;
use std::collections::HashSet;
use ustlab::branch_stats::{
    absorbing_chain, branch_pmf, extract_branches, lumped_chain, stationary,
    stationary_residual,
};
use ustlab::graph::{Edge, Graph, Tree};
use ustlab::rng_walk::{loop_erase, replica_rng};
use ustlab::ust_algorithms::{aldous_broder, wilson, GenerationResult};

/// A connected graph built from a random tree plus random extra edges.
fn connected_graph() -> impl Strategy<Value = Graph> {
    (2usize..=8)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(any::<usize>(), n - 1),
                prop::collection::vec(any::<bool>(), n * (n - 1) / 2),
                any::<bool>(),
            )
        })
        .prop_map(|(n, parents, extra, loops)| {
            let mut chosen: HashSet<(usize, usize)> = HashSet::new();
            for (i, &p) in parents.iter().enumerate() {
                let child = i + 1;
                let parent = p % child;
                chosen.insert((parent.min(child), parent.max(child)));
            }
            let mut flag = extra.into_iter();
            for u in 0..n {
                for v in u + 1..n {
                    if flag.next().unwrap_or(false) {
                        chosen.insert((u, v));
                    }
                }
            }
            let mut edges: Vec<Edge> =
                chosen.into_iter().map(|(u, v)| Edge { u, v, w: 1.0 }).collect();
            edges.sort_unstable_by_key(|e| (e.u, e.v));
            if loops {
                for v in 0..n {
                    edges.push(Edge { u: v, v, w: 1.0 });
                }
            }
            Graph::new(n, edges, "random").unwrap()
        })
}

fn check_generation(g: &Graph, root: usize, run: &GenerationResult) {
    // The tree spans the graph.
    assert!(run.tree.is_spanning_tree_of(g));
    assert_eq!(run.tree.root(), root);
    // Branch paths partition the non-root vertices.
    let mut seen: HashSet<usize> = HashSet::new();
    for branch in &run.branches {
        for &v in &branch.path {
            assert!(v != root, "branch may not contain the root");
            assert!(seen.insert(v), "vertex {v} appears in two branches");
        }
    }
    assert_eq!(seen.len(), g.n() - 1, "branches must cover all non-root vertices");
    // Edge inclusion times exist for every edge and never decrease.
    assert_eq!(run.edge_times.len(), g.n() - 1);
    assert!(run.edge_times.windows(2).all(|w| w[0] <= w[1]));
    assert!(*run.edge_times.last().unwrap() <= run.rw_steps);
    // The trace-based reconstruction agrees with the recorded branches.
    let extracted = extract_branches(&run.trace).unwrap();
    assert_eq!(extracted, run.branches);
}

proptest! {
    #[test]
    fn loop_erasure_yields_a_simple_path(walk in prop::collection::vec(0usize..10, 1..60)) {
        let erased = loop_erase(&walk);
        prop_assert!(!erased.is_empty());
        prop_assert_eq!(erased[0], walk[0]);
        prop_assert_eq!(*erased.last().unwrap(), *walk.last().unwrap());
        let unique: HashSet<usize> = erased.iter().copied().collect();
        prop_assert_eq!(unique.len(), erased.len(), "erased path must be simple");
        // Idempotent: erasing a simple path changes nothing.
        prop_assert_eq!(loop_erase(&erased), erased);
    }

    #[test]
    fn branch_law_is_normalized(n in 2usize..=200, k_raw in 1usize..200) {
        let k = 1 + k_raw % (n - 1).max(1);
        prop_assume!(k < n);
        let pmf = branch_pmf(n, k).unwrap();
        prop_assert!((pmf.total() - 1.0).abs() < 1e-9);
        prop_assert!(pmf.probs().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn chains_are_row_stochastic(n in 2usize..=60, k_raw in 1usize..60) {
        let k = 1 + k_raw % (n - 1).max(1);
        prop_assume!(k < n);
        for chain in [absorbing_chain(n, k).unwrap(), lumped_chain(n, k).unwrap()] {
            for i in 0..chain.nrows() {
                let row: f64 = (0..chain.ncols()).map(|j| chain[(i, j)]).sum();
                prop_assert!((row - 1.0).abs() < 1e-12, "row {i} sums to {row}");
            }
        }
        let lumped = lumped_chain(n, k).unwrap();
        let pi = stationary(&lumped).unwrap();
        prop_assert!(stationary_residual(&lumped, &pi) < 1e-10);
    }

    #[test]
    fn walk_generators_partition_vertices_into_branches(
        g in connected_graph(),
        root_raw in any::<usize>(),
        seed in any::<u64>(),
    ) {
        let root = root_raw % g.n();
        let w = wilson(&g, root, &mut replica_rng(seed, 0)).unwrap();
        check_generation(&g, root, &w);
        let ab = aldous_broder(&g, root, &mut replica_rng(seed, 1)).unwrap();
        check_generation(&g, root, &ab);
    }

    #[test]
    fn tree_serialization_round_trips(g in connected_graph(), seed in any::<u64>()) {
        let tree = wilson(&g, 0, &mut replica_rng(seed, 2)).unwrap().tree;
        let text = tree.to_edge_list();
        let back = Tree::from_edge_list(&text).unwrap();
        prop_assert_eq!(back.edges_sorted(), tree.edges_sorted());
        prop_assert_eq!(back.root(), tree.root());
    }
}
