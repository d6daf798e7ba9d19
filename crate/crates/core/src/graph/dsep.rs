use std::collections::{BTreeSet, VecDeque};

use super::MixedGraph;
use crate::error::{Error, Result};

/// d-separation of `i` and `j` given `given` in a DAG, by the reachability
/// ("Bayes ball") traversal over (vertex, direction) states.
pub fn d_separated(dag: &MixedGraph, i: usize, j: usize, given: &BTreeSet<usize>) -> Result<bool> {
    let p = dag.p();
    if i >= p || j >= p || given.iter().any(|&v| v >= p) {
        return Err(Error::input("vertex id out of range in d-separation query"));
    }
    if i == j {
        return Err(Error::input("d-separation query needs two distinct vertices"));
    }
    if given.contains(&i) || given.contains(&j) {
        return Err(Error::input("conditioning set must not contain the queried vertices"));
    }
    if !dag.is_dag() {
        return Err(Error::input("d-separation is only defined here for DAGs"));
    }

    // vertices with a descendant (or themselves) in the conditioning set
    let mut opens_collider = vec![false; p];
    let mut stack: Vec<usize> = given.iter().copied().collect();
    for &z in given {
        opens_collider[z] = true;
    }
    while let Some(v) = stack.pop() {
        for u in dag.parents(v) {
            if !opens_collider[u] {
                opens_collider[u] = true;
                stack.push(u);
            }
        }
    }

    const UP: usize = 0; // arrived from a child
    const DOWN: usize = 1; // arrived from a parent
    let mut visited = vec![[false; 2]; p];
    let mut queue = VecDeque::from([(i, UP)]);
    while let Some((v, dir)) = queue.pop_front() {
        if visited[v][dir] {
            continue;
        }
        visited[v][dir] = true;
        let observed = given.contains(&v);
        if v == j && !observed {
            return Ok(false);
        }
        if dir == UP && !observed {
            queue.extend(dag.parents(v).map(|u| (u, UP)));
            queue.extend(dag.children(v).map(|c| (c, DOWN)));
        } else if dir == DOWN {
            if !observed {
                queue.extend(dag.children(v).map(|c| (c, DOWN)));
            }
            if opens_collider[v] {
                queue.extend(dag.parents(v).map(|u| (u, UP)));
            }
        }
    }
    Ok(true)
}
