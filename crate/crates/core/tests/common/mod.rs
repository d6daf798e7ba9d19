#![allow(dead_code)]

use std::collections::BTreeSet;

use causal_dep::graph::d_separated;
use causal_dep::synth::{random_ngdag, substream, NgDag, Stream};
use causal_dep::MixedGraph;
use nalgebra::DMatrix;
use rand::Rng;

/// Every labelled DAG on `p` vertices, by brute force over edge states.
pub fn all_dags(p: usize) -> Vec<MixedGraph> {
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| (i + 1..p).map(move |j| (i, j))).collect();
    let total = 3usize.pow(pairs.len() as u32);
    let mut out = Vec::new();
    for mut code in 0..total {
        let mut g = MixedGraph::new(p);
        for &(i, j) in &pairs {
            match code % 3 {
                1 => g.add_directed(i, j).unwrap(),
                2 => g.add_directed(j, i).unwrap(),
                _ => {}
            }
            code /= 3;
        }
        if g.is_dag() {
            out.push(g);
        }
    }
    out
}

/// Every d-separation statement `i _||_ j | S` of `g`, in a fixed order.
pub fn dsep_statements(g: &MixedGraph) -> Vec<bool> {
    let p = g.p();
    let mut out = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            let rest: Vec<usize> = (0..p).filter(|&v| v != i && v != j).collect();
            for mask in 0..1usize << rest.len() {
                let s: BTreeSet<usize> = rest.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &v)| v).collect();
                out.push(d_separated(g, i, j, &s).unwrap());
            }
        }
    }
    out
}

/// Sum over directed paths of the product of edge coefficients.
pub fn path_sum_effects(model: &NgDag) -> DMatrix<f64> {
    let p = model.p();
    let b = model.coefficients();
    let g = model.dag();
    fn walk(g: &MixedGraph, b: &DMatrix<f64>, from: usize, at: usize, prod: f64, acc: &mut DMatrix<f64>) {
        acc[(at, from)] += prod;
        for c in g.children(at) {
            walk(g, b, from, c, prod * b[(c, at)], acc);
        }
    }
    let mut acc = DMatrix::zeros(p, p);
    for v in 0..p {
        walk(g, b, v, v, 1.0, &mut acc);
    }
    acc
}

/// Random model with `p` in `ps`, density in [0.2, 1] and at least one
/// non-Gaussian disturbance; odd indices get random coefficient signs.
pub fn random_model(seed: u64, index: u64, ps: std::ops::RangeInclusive<usize>) -> NgDag {
    let mut rng = substream(seed, Stream::Model, index);
    let p = rng.random_range(ps);
    let density = rng.random_range(0.2..=1.0);
    let ng = rng.random_range(1..=p);
    let mut m = random_ngdag(p, density, ng, &mut rng).unwrap();
    if index % 2 == 1 {
        m.randomize_signs(&mut rng);
    }
    m
}

/// No two parents of a common child are nonadjacent.
pub fn no_v_structures(g: &MixedGraph) -> bool {
    (0..g.p()).all(|k| {
        let pa: Vec<usize> = g.parents(k).collect();
        pa.iter().all(|&a| pa.iter().all(|&b| a == b || g.adjacent(a, b)))
    })
}

/// Vertex subsets of size at least one whose induced subgraph is weakly connected.
pub fn connected_subsets(g: &MixedGraph) -> Vec<Vec<usize>> {
    let p = g.p();
    (1..1usize << p)
        .map(|mask| (0..p).filter(|v| mask >> v & 1 == 1).collect::<Vec<_>>())
        .filter(|keep| g.induced_subgraph(keep).unwrap().is_weakly_connected())
        .collect()
}
