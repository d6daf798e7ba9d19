use super::{MixedGraph, SepsetMap};
use crate::error::{Error, Result};

/// Orients unshielded triples `i - k - j` into colliders `i -> k <- j`
/// whenever `k` is not in the separating set recorded for `{i, j}`.
///
/// Edges already pointing the other way are left alone, so conflicting
/// colliders resolve in favour of whichever pair is visited first.
pub fn orient_v_structures(skeleton: &MixedGraph, sepsets: &SepsetMap) -> Result<MixedGraph> {
    if skeleton.directed_set().iter().next().is_some() {
        return Err(Error::input("v-structure search expects a fully undirected skeleton"));
    }
    let p = skeleton.p();
    let mut out = skeleton.clone();
    for i in 0..p {
        for j in i + 1..p {
            if skeleton.adjacent(i, j) {
                continue;
            }
            let sep = sepsets
                .get(i, j)
                .ok_or_else(|| Error::input(format!("missing sepset for nonadjacent pair ({i}, {j})")))?;
            for k in 0..p {
                if k == i || k == j || sep.contains(&k) {
                    continue;
                }
                if skeleton.has_undirected(i, k) && skeleton.has_undirected(j, k) {
                    for a in [i, j] {
                        if out.has_undirected(a, k) {
                            out.orient(a, k)?;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// The pattern of a DAG's Markov equivalence class: its skeleton with the
/// unshielded colliders directed, closed under the orientation rules.
pub fn cpdag(dag: &MixedGraph) -> MixedGraph {
    let mut g = dag.skeleton();
    for (i, k, j) in dag.v_structures() {
        for a in [i, j] {
            if g.has_undirected(a, k) {
                g.orient(a, k).expect("edge is undirected");
            }
        }
    }
    close_under_rules(&g)
}

/// Closes a chain graph under the four orientation rules, to a fixpoint.
///
/// Only undirected edges are ever oriented. An orientation that would close a
/// directed cycle is skipped, so the output stays a chain graph even when the
/// input is not a valid pattern.
pub fn apply_meek_rules(g: &MixedGraph) -> Result<MixedGraph> {
    if g.has_directed_cycle() {
        return Err(Error::input("orientation rules need a chain graph (found a directed cycle)"));
    }
    Ok(close_under_rules(g))
}

/// The closure itself, without the chain-graph precondition. Cycles already
/// present are kept; no new one is created.
pub(crate) fn close_under_rules(g: &MixedGraph) -> MixedGraph {
    let mut g = g.clone();
    loop {
        let mut changed = false;
        let pending: Vec<(usize, usize)> = g.undirected_edges().collect();
        for (a, b) in pending {
            for (from, to) in [(a, b), (b, a)] {
                if !g.has_undirected(from, to) {
                    break;
                }
                if forced(&g, from, to) && !g.has_directed_path(to, from) {
                    g.orient(from, to).expect("edge is undirected");
                    changed = true;
                }
            }
        }
        if !changed {
            return g;
        }
    }
}

/// Whether some rule forces the undirected edge `i - j` into `i -> j`.
fn forced(g: &MixedGraph, i: usize, j: usize) -> bool {
    // R1: k -> i - j, k and j nonadjacent
    if g.parents(i).any(|k| k != j && !g.adjacent(k, j)) {
        return true;
    }
    // R2: i -> k -> j
    if g.children(i).any(|k| g.has_directed(k, j)) {
        return true;
    }
    let und: Vec<usize> = g.undirected_neighbors(i).filter(|&k| k != j).collect();
    // R3: i - k -> j and i - l -> j with k, l nonadjacent
    let into_j: Vec<usize> = und.iter().copied().filter(|&k| g.has_directed(k, j)).collect();
    for (x, &k) in into_j.iter().enumerate() {
        if into_j[x + 1..].iter().any(|&l| !g.adjacent(k, l)) {
            return true;
        }
    }
    // R4: i - k -> l -> j with k, j nonadjacent and i adjacent to l
    und.iter().any(|&k| {
        !g.adjacent(k, j)
            && g
                .children(k)
                .any(|l| l != i && g.has_directed(l, j) && g.adjacent(i, l))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn forced_collider() {
        let skel = MixedGraph::from_edges(3, &[], &[(0, 2), (1, 2)]).unwrap();
        let mut sep = SepsetMap::new();
        sep.insert(0, 1, BTreeSet::new()).unwrap();
        let g = orient_v_structures(&skel, &sep).unwrap();
        assert_eq!(g, MixedGraph::from_edges(3, &[(0, 2), (1, 2)], &[]).unwrap());
    }

    #[test]
    fn chain_is_left_alone() {
        let skel = MixedGraph::from_edges(3, &[], &[(0, 1), (1, 2)]).unwrap();
        let mut sep = SepsetMap::new();
        sep.insert(0, 2, BTreeSet::from([1])).unwrap();
        assert_eq!(orient_v_structures(&skel, &sep).unwrap(), skel);
    }

    #[test]
    fn complete_skeleton_has_no_colliders() {
        let skel = MixedGraph::complete_undirected(4);
        assert_eq!(orient_v_structures(&skel, &SepsetMap::new()).unwrap(), skel);
    }

    #[test]
    fn missing_sepset_is_an_error() {
        let skel = MixedGraph::from_edges(3, &[], &[(0, 2), (1, 2)]).unwrap();
        assert!(matches!(orient_v_structures(&skel, &SepsetMap::new()), Err(Error::Input(_))));
    }

    #[test]
    fn rule_one() {
        let g = MixedGraph::from_edges(3, &[(2, 0)], &[(0, 1)]).unwrap();
        let out = apply_meek_rules(&g).unwrap();
        assert!(out.has_directed(0, 1));
        assert_eq!(apply_meek_rules(&out).unwrap(), out);
    }

    #[test]
    fn highest_scoring_dag_with_gaussian_pair_undirected() {
        // 1->2, 1->3, 1->4, 2->3, 2->4 directed, 3-4 undirected: nothing changes
        let c = MixedGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)], &[(2, 3)]).unwrap();
        assert_eq!(apply_meek_rules(&c).unwrap(), c);
        // with 1-3 undirected as well, rule 2 restores 1->3 via 1->2->3
        let loose = MixedGraph::from_edges(4, &[(0, 1), (0, 3), (1, 2), (1, 3)], &[(0, 2), (2, 3)]).unwrap();
        assert_eq!(apply_meek_rules(&loose).unwrap(), c);
    }

    #[test]
    fn rule_three() {
        // i - k -> j, i - l -> j, k and l nonadjacent, i - j
        let g = MixedGraph::from_edges(4, &[(1, 3), (2, 3)], &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let out = apply_meek_rules(&g).unwrap();
        assert!(out.has_directed(0, 3));
        assert!(out.has_undirected(0, 1) && out.has_undirected(0, 2));
    }

    #[test]
    fn rule_four() {
        // i - k -> l -> j, k and j nonadjacent, i - l, i - j
        let (i, k, l, j) = (0, 1, 2, 3);
        let g = MixedGraph::from_edges(4, &[(k, l), (l, j)], &[(i, k), (i, l), (i, j)]).unwrap();
        let out = apply_meek_rules(&g).unwrap();
        assert!(out.has_directed(i, j));
    }

    #[test]
    fn cyclic_input_is_rejected() {
        let g = MixedGraph::from_edges(3, &[(0, 1), (1, 2), (2, 0)], &[]).unwrap();
        assert!(apply_meek_rules(&g).is_err());
    }

    #[test]
    fn never_closes_a_cycle() {
        // rule 1 would orient 1 -> 2 but 2 ~> 1 already exists
        let g = MixedGraph::from_edges(4, &[(0, 1), (2, 3), (3, 1)], &[(1, 2)]).unwrap();
        let out = apply_meek_rules(&g).unwrap();
        assert!(!out.has_directed_cycle());
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn closure_is_monotone_and_idempotent(
            mask in 0u64..(1 << 21),
            und in 0u64..(1 << 21),
            perm in Just((0..7usize).collect::<Vec<_>>()).prop_shuffle(),
        ) {
            let mut g = MixedGraph::new(7);
            let mut bit = 0;
            for a in 0..7 {
                for b in a + 1..7 {
                    if mask >> bit & 1 == 1 {
                        if und >> bit & 1 == 1 {
                            g.add_undirected(perm[a], perm[b]).unwrap();
                        } else {
                            g.add_directed(perm[a], perm[b]).unwrap();
                        }
                    }
                    bit += 1;
                }
            }
            let out = apply_meek_rules(&g).unwrap();
            prop_assert!(out.directed_set().is_superset(g.directed_set()));
            prop_assert!(out.undirected_set().is_subset(g.undirected_set()));
            prop_assert_eq!(out.skeleton(), g.skeleton());
            prop_assert!(out.is_chain_graph());
            prop_assert_eq!(apply_meek_rules(&out).unwrap(), out);
        }
    }
}
