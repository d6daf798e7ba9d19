//! The PC algorithm: level-wise skeleton search, v-structures, Meek closure.

use std::collections::BTreeSet;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::graph::{apply_meek_rules, orient_v_structures, MixedGraph, SepsetMap};
use crate::stats::CiProvider;

/// A d-separation-equivalence pattern together with the sepsets behind it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dsep {
    pub graph: MixedGraph,
    pub sepsets: SepsetMap,
}

impl Dsep {
    /// Checks that the graph is a chain graph and every nonadjacent pair has a sepset.
    pub fn validate(&self) -> Result<()> {
        if !self.graph.is_chain_graph() {
            return Err(Error::input("DSEP graph contains a directed cycle"));
        }
        let p = self.graph.p();
        for i in 0..p {
            for j in i + 1..p {
                if !self.graph.adjacent(i, j) && !self.sepsets.contains_pair(i, j) {
                    return Err(Error::input(format!(
                        "nonadjacent pair ({}, {}) has no sepset",
                        self.graph.name(i),
                        self.graph.name(j)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Pattern without sepsets. Usable where only the graph matters.
    pub fn from_graph(graph: MixedGraph) -> Self {
        Dsep { graph, sepsets: SepsetMap::new() }
    }
}

/// Largest conditioning set tried; `None` means unbounded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PcOptions {
    pub max_level: Option<usize>,
}

pub fn estimate_skeleton(ci: &CiProvider, p: usize) -> Result<(MixedGraph, SepsetMap)> {
    estimate_skeleton_with(ci, p, PcOptions::default())
}

/// Skeleton search starting from the complete graph. At level `l`, pairs are
/// visited in lexicographic order and conditioning sets of size `l` are drawn
/// first from `adj(i) \ {j}`, then from `adj(j) \ {i}`, each in lexicographic
/// order. Adjacencies shrink immediately as edges are removed.
pub fn estimate_skeleton_with(ci: &CiProvider, p: usize, opts: PcOptions) -> Result<(MixedGraph, SepsetMap)> {
    if p == 0 {
        return Err(Error::input("PC needs at least one variable"));
    }
    if ci.p() != p {
        return Err(Error::input(format!("CI provider covers {} variables, expected {p}", ci.p())));
    }
    let mut g = MixedGraph::complete_undirected(p);
    let mut sepsets = SepsetMap::new();
    let mut level = 0;
    loop {
        if opts.max_level.is_some_and(|m| level > m) {
            break;
        }
        let mut any_testable = false;
        for i in 0..p {
            for j in i + 1..p {
                if !g.adjacent(i, j) {
                    continue;
                }
                if let Some(s) = find_sepset(ci, &g, i, j, level, &mut any_testable)? {
                    g.remove_edge(i, j);
                    sepsets.insert(i, j, s)?;
                }
            }
        }
        if !any_testable {
            break;
        }
        level += 1;
    }
    Ok((g, sepsets))
}

fn find_sepset(
    ci: &CiProvider,
    g: &MixedGraph,
    i: usize,
    j: usize,
    level: usize,
    any_testable: &mut bool,
) -> Result<Option<BTreeSet<usize>>> {
    let mut tried: BTreeSet<Vec<usize>> = BTreeSet::new();
    for (a, b) in [(i, j), (j, i)] {
        let adj: Vec<usize> = g.neighbors(a).into_iter().filter(|&v| v != b).collect();
        if adj.len() < level {
            continue;
        }
        *any_testable = true;
        for s in adj.into_iter().combinations(level) {
            if !tried.insert(s.clone()) {
                continue;
            }
            let s: BTreeSet<usize> = s.into_iter().collect();
            if ci.independent(i, j, &s)? {
                return Ok(Some(s));
            }
        }
    }
    Ok(None)
}

pub fn run_pc(ci: &CiProvider, p: usize) -> Result<Dsep> {
    run_pc_with(ci, p, PcOptions::default())
}

/// Skeleton, then v-structures from the sepsets, then Meek closure.
pub fn run_pc_with(ci: &CiProvider, p: usize, opts: PcOptions) -> Result<Dsep> {
    let (skeleton, sepsets) = estimate_skeleton_with(ci, p, opts)?;
    let oriented = orient_v_structures(&skeleton, &sepsets)?;
    let graph = apply_meek_rules(&oriented)?;
    Ok(Dsep { graph, sepsets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::d_separated;
    use crate::testutil::all_dags;

    fn dag(p: usize, edges: &[(usize, usize)]) -> MixedGraph {
        MixedGraph::from_edges(p, edges, &[]).unwrap()
    }

    #[test]
    fn independent_roots_give_empty_skeleton() {
        let g = dag(3, &[]);
        let (sk, sep) = estimate_skeleton(&CiProvider::oracle(&g), 3).unwrap();
        assert_eq!(sk.n_edges(), 0);
        assert_eq!(sep.len(), 3);
        assert!(sep.iter().all(|(_, s)| s.is_empty()));
    }

    #[test]
    fn chain_records_middle_vertex() {
        let g = dag(3, &[(0, 1), (1, 2)]);
        let (sk, sep) = estimate_skeleton(&CiProvider::oracle(&g), 3).unwrap();
        assert_eq!(sk, MixedGraph::from_edges(3, &[], &[(0, 1), (1, 2)]).unwrap());
        assert_eq!(sep.get(0, 2), Some(&BTreeSet::from([1])));
        let dsep = run_pc(&CiProvider::oracle(&g), 3).unwrap();
        assert_eq!(dsep.graph, sk);
    }

    #[test]
    fn collider_is_oriented() {
        let g = dag(3, &[(0, 2), (1, 2)]);
        let dsep = run_pc(&CiProvider::oracle(&g), 3).unwrap();
        assert_eq!(dsep.graph, g);
        dsep.validate().unwrap();
    }

    #[test]
    fn complete_dag_gives_complete_undirected_pattern() {
        let g = dag(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let dsep = run_pc(&CiProvider::oracle(&g), 4).unwrap();
        assert_eq!(dsep.graph, MixedGraph::complete_undirected(4));
        assert!(dsep.sepsets.is_empty());
    }

    #[test]
    fn level_cap_keeps_edges_needing_larger_sets() {
        // 0 and 3 are only separated by {1, 2}
        let g = dag(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]);
        let ci = CiProvider::oracle(&g);
        let (full, _) = estimate_skeleton(&ci, 4).unwrap();
        assert!(!full.adjacent(0, 3));
        let (capped, _) = estimate_skeleton_with(&ci, 4, PcOptions { max_level: Some(1) }).unwrap();
        assert!(capped.adjacent(0, 3));
    }

    #[test]
    fn provider_size_must_match() {
        let g = dag(3, &[]);
        assert!(estimate_skeleton(&CiProvider::oracle(&g), 4).is_err());
    }

    #[test]
    fn adjacency_iff_never_separated_on_four_vertices() {
        for g in all_dags(4) {
            let (sk, sep) = estimate_skeleton(&CiProvider::oracle(&g), 4).unwrap();
            for i in 0..4 {
                for j in i + 1..4 {
                    let rest: Vec<usize> = (0..4).filter(|&v| v != i && v != j).collect();
                    let separable = rest
                        .iter()
                        .copied()
                        .powerset()
                        .any(|s| d_separated(&g, i, j, &s.into_iter().collect()).unwrap());
                    assert_eq!(sk.adjacent(i, j), !separable, "{g:?} pair ({i}, {j})");
                    assert_eq!(sk.adjacent(i, j), g.adjacent(i, j));
                    if let Some(s) = sep.get(i, j) {
                        assert!(d_separated(&g, i, j, s).unwrap());
                    }
                }
            }
        }
    }
}
