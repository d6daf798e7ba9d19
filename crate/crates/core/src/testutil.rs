//! Exhaustive graph generators shared by unit tests.

use crate::graph::MixedGraph;

/// Every DAG on `p` labelled vertices (each pair absent, forward or backward).
pub(crate) fn all_dags(p: usize) -> Vec<MixedGraph> {
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| (i + 1..p).map(move |j| (i, j))).collect();
    let total = 3usize.pow(pairs.len() as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let mut g = MixedGraph::new(p);
        for &(i, j) in &pairs {
            match c % 3 {
                1 => g.add_directed(i, j).unwrap(),
                2 => g.add_directed(j, i).unwrap(),
                _ => {}
            }
            c /= 3;
        }
        if g.is_dag() {
            out.push(g);
        }
    }
    out
}

#[test]
fn dag_counts_match_known_sequence() {
    let counts: Vec<usize> = (1..=4).map(|p| all_dags(p).len()).collect();
    assert_eq!(counts, vec![1, 3, 25, 543]);
}
