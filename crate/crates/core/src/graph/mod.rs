//! Mixed graphs (directed plus undirected edges) and the purely
//! graph-theoretic procedures built on them.
//!
//! One [`MixedGraph`] type carries DAGs, skeletons, DSEPs and DEPs. Vertex ids
//! are `0..p`; every iteration runs in id order and every edge set is kept
//! sorted, so results never depend on insertion order.

mod dsep;
mod orient;

pub use dsep::d_separated;
pub use orient::{apply_meek_rules, cpdag, orient_v_structures};
pub(crate) use orient::close_under_rules;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// A graph whose edges are either directed (`i -> j`) or undirected (`i - j`).
///
/// At most one edge joins any pair of vertices and there are no self-loops.
/// Undirected edges are stored as `(min, max)`.
#[derive(Clone, Default)]
pub struct MixedGraph {
    names: Vec<String>,
    directed: BTreeSet<(usize, usize)>,
    undirected: BTreeSet<(usize, usize)>,
}

fn unordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Default vertex labels `x1, x2, ...`.
pub fn default_names(p: usize) -> Vec<String> {
    (1..=p).map(|k| format!("x{k}")).collect()
}

impl MixedGraph {
    /// Edgeless graph on `p` vertices named `x1..xp`.
    pub fn new(p: usize) -> Self {
        Self::with_names(default_names(p))
    }

    pub fn with_names(names: Vec<String>) -> Self {
        MixedGraph {
            names,
            directed: BTreeSet::new(),
            undirected: BTreeSet::new(),
        }
    }

    /// Complete undirected graph on `p` vertices.
    pub fn complete_undirected(p: usize) -> Self {
        let mut g = Self::new(p);
        for i in 0..p {
            for j in i + 1..p {
                g.undirected.insert((i, j));
            }
        }
        g
    }

    /// Builds a graph from edge lists, validating every edge.
    pub fn from_edges(
        p: usize,
        directed: &[(usize, usize)],
        undirected: &[(usize, usize)],
    ) -> Result<Self> {
        let mut g = Self::new(p);
        for &(i, j) in directed {
            g.add_directed(i, j)?;
        }
        for &(i, j) in undirected {
            g.add_undirected(i, j)?;
        }
        Ok(g)
    }

    pub fn p(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn set_names(&mut self, names: Vec<String>) -> Result<()> {
        if names.len() != self.p() {
            return Err(Error::input(format!(
                "expected {} names, got {}",
                self.p(),
                names.len()
            )));
        }
        self.names = names;
        Ok(())
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        let p = self.p();
        if i >= p || j >= p {
            return Err(Error::input(format!(
                "vertex id out of range in edge ({i}, {j}) for p = {p}"
            )));
        }
        if i == j {
            return Err(Error::input(format!("self-loop on vertex {i}")));
        }
        if self.adjacent(i, j) {
            return Err(Error::input(format!("vertices {i} and {j} are already adjacent")));
        }
        Ok(())
    }

    pub fn add_directed(&mut self, from: usize, to: usize) -> Result<()> {
        self.check_pair(from, to)?;
        self.directed.insert((from, to));
        Ok(())
    }

    pub fn add_undirected(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_pair(a, b)?;
        self.undirected.insert(unordered(a, b));
        Ok(())
    }

    /// Removes whatever edge joins `a` and `b`; returns whether one existed.
    pub fn remove_edge(&mut self, a: usize, b: usize) -> bool {
        self.directed.remove(&(a, b)) | self.directed.remove(&(b, a)) | self.undirected.remove(&unordered(a, b))
    }

    /// Turns the undirected edge `from - to` into `from -> to`.
    pub fn orient(&mut self, from: usize, to: usize) -> Result<()> {
        if !self.undirected.remove(&unordered(from, to)) {
            return Err(Error::input(format!("no undirected edge between {from} and {to}")));
        }
        self.directed.insert((from, to));
        Ok(())
    }

    /// Replaces `from -> to` with `to -> from`.
    pub fn reverse(&mut self, from: usize, to: usize) -> Result<()> {
        if !self.directed.remove(&(from, to)) {
            return Err(Error::input(format!("no directed edge {from} -> {to}")));
        }
        self.directed.insert((to, from));
        Ok(())
    }

    /// Replaces the directed edge between `a` and `b` (either way) with `a - b`.
    pub fn undirect(&mut self, a: usize, b: usize) -> Result<()> {
        if !(self.directed.remove(&(a, b)) || self.directed.remove(&(b, a))) {
            return Err(Error::input(format!("no directed edge between {a} and {b}")));
        }
        self.undirected.insert(unordered(a, b));
        Ok(())
    }

    pub fn has_directed(&self, from: usize, to: usize) -> bool {
        self.directed.contains(&(from, to))
    }

    pub fn has_undirected(&self, a: usize, b: usize) -> bool {
        self.undirected.contains(&unordered(a, b))
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_directed(a, b) || self.has_directed(b, a) || self.has_undirected(a, b)
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.directed.iter().copied()
    }

    pub fn undirected_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.undirected.iter().copied()
    }

    pub fn directed_set(&self) -> &BTreeSet<(usize, usize)> {
        &self.directed
    }

    pub fn undirected_set(&self) -> &BTreeSet<(usize, usize)> {
        &self.undirected
    }

    pub fn n_edges(&self) -> usize {
        self.directed.len() + self.undirected.len()
    }

    pub fn parents(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.directed.iter().filter(move |e| e.1 == v).map(|e| e.0)
    }

    pub fn children(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.directed.range((v, 0)..(v + 1, 0)).map(|e| e.1)
    }

    /// Vertices joined to `v` by an undirected edge.
    pub fn undirected_neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.undirected
            .iter()
            .filter(move |e| e.0 == v || e.1 == v)
            .map(move |e| if e.0 == v { e.1 } else { e.0 })
    }

    /// Every vertex adjacent to `v`, sorted.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .parents(v)
            .chain(self.children(v))
            .chain(self.undirected_neighbors(v))
            .collect();
        out.sort_unstable();
        out
    }

    /// Same vertices, every edge undirected.
    pub fn skeleton(&self) -> MixedGraph {
        let mut g = MixedGraph::with_names(self.names.clone());
        g.undirected = self
            .directed
            .iter()
            .map(|&(a, b)| unordered(a, b))
            .chain(self.undirected.iter().copied())
            .collect();
        g
    }

    /// Unordered adjacent pairs.
    pub fn skeleton_pairs(&self) -> BTreeSet<(usize, usize)> {
        self.skeleton().undirected
    }

    pub fn is_dag(&self) -> bool {
        self.undirected.is_empty() && !self.has_directed_cycle()
    }

    pub fn is_chain_graph(&self) -> bool {
        !self.has_directed_cycle()
    }

    /// True iff a cycle exists using directed edges traversed forward.
    pub fn has_directed_cycle(&self) -> bool {
        self.topological_order().is_none()
    }

    /// A topological order of the directed part (ties by id), or `None` on a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let p = self.p();
        let mut indeg = vec![0usize; p];
        for &(_, b) in &self.directed {
            indeg[b] += 1;
        }
        let mut ready: BTreeSet<usize> = (0..p).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(p);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for c in self.children(v) {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        (order.len() == p).then_some(order)
    }

    /// Whether `to` can be reached from `from` along directed edges.
    pub fn has_directed_path(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        let mut seen = vec![false; self.p()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(v) = stack.pop() {
            for c in self.children(v) {
                if c == to {
                    return true;
                }
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        false
    }

    /// Ancestors of `v` along directed edges (excluding `v`).
    pub fn ancestors(&self, v: usize) -> BTreeSet<usize> {
        self.ancestors_avoiding(v, None)
    }

    pub fn descendants(&self, v: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for c in self.children(u) {
                if out.insert(c) {
                    stack.push(c);
                }
            }
        }
        out
    }

    /// Ancestors of `v` reachable by directed paths that never visit `blocked`.
    fn ancestors_avoiding(&self, v: usize, blocked: Option<usize>) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for q in self.parents(u) {
                if Some(q) == blocked || q == v {
                    continue;
                }
                if out.insert(q) {
                    stack.push(q);
                }
            }
        }
        out
    }

    /// Partition of the vertices into weakly connected components, each sorted,
    /// ordered by smallest member.
    pub fn weakly_connected_components(&self) -> Vec<Vec<usize>> {
        let p = self.p();
        let mut adj = vec![Vec::new(); p];
        for (a, b) in self.directed.iter().chain(self.undirected.iter()) {
            adj[*a].push(*b);
            adj[*b].push(*a);
        }
        let mut comp = vec![usize::MAX; p];
        let mut out = Vec::new();
        for s in 0..p {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![s];
            comp[s] = id;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = id;
                        members.push(w);
                        queue.push_back(w);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_weakly_connected(&self) -> bool {
        self.weakly_connected_components().len() <= 1
    }

    /// The subgraph induced by `keep`, relabelled so that vertex `k` of the
    /// result is the `k`-th smallest member of `keep`. Names carry over.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Result<MixedGraph> {
        let sorted: BTreeSet<usize> = keep.iter().copied().collect();
        if let Some(&bad) = sorted.iter().find(|&&v| v >= self.p()) {
            return Err(Error::input(format!("unknown vertex id {bad}")));
        }
        let index: BTreeMap<usize, usize> = sorted.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let mut g = MixedGraph::with_names(sorted.iter().map(|&v| self.names[v].clone()).collect());
        for &(a, b) in &self.directed {
            if let (Some(&x), Some(&y)) = (index.get(&a), index.get(&b)) {
                g.directed.insert((x, y));
            }
        }
        for &(a, b) in &self.undirected {
            if let (Some(&x), Some(&y)) = (index.get(&a), index.get(&b)) {
                g.undirected.insert(unordered(x, y));
            }
        }
        Ok(g)
    }

    /// Same vertex ids, but only edges with both endpoints in `keep`.
    pub fn restricted_to(&self, keep: &BTreeSet<usize>) -> MixedGraph {
        let mut g = MixedGraph::with_names(self.names.clone());
        g.directed = self
            .directed
            .iter()
            .filter(|(a, b)| keep.contains(a) && keep.contains(b))
            .copied()
            .collect();
        g.undirected = self
            .undirected
            .iter()
            .filter(|(a, b)| keep.contains(a) && keep.contains(b))
            .copied()
            .collect();
        g
    }

    /// Backdoor common ancestors of `i` and `j`: vertices `k` with a directed
    /// path `k ~> i` avoiding `j` and a directed path `k ~> j` avoiding `i`.
    /// Undirected edges are ignored.
    pub fn backdoor_common_ancestors(&self, i: usize, j: usize) -> BTreeSet<usize> {
        if i == j {
            return BTreeSet::new();
        }
        let to_i = self.ancestors_avoiding(i, Some(j));
        let to_j = self.ancestors_avoiding(j, Some(i));
        to_i.intersection(&to_j).copied().collect()
    }

    /// Vertices without an incoming directed edge.
    pub fn source_nodes(&self) -> BTreeSet<usize> {
        let mut has_parent = vec![false; self.p()];
        for &(_, b) in &self.directed {
            has_parent[b] = true;
        }
        (0..self.p()).filter(|&v| !has_parent[v]).collect()
    }

    /// Whether a weakly connected DAG is a directed moral graph: every pair of
    /// parents of a common child is adjacent.
    pub fn is_dmg(&self) -> Result<bool> {
        if !self.is_dag() {
            return Err(Error::input("is_dmg expects a DAG"));
        }
        if !self.is_weakly_connected() {
            return Err(Error::input("is_dmg expects a weakly connected graph"));
        }
        for k in 0..self.p() {
            let pa: Vec<usize> = self.parents(k).collect();
            for (x, &a) in pa.iter().enumerate() {
                if pa[x + 1..].iter().any(|&b| !self.adjacent(a, b)) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Unshielded colliders `(i, k, j)` with `i < j`, `i -> k <- j`, `i` and `j` nonadjacent.
    pub fn v_structures(&self) -> BTreeSet<(usize, usize, usize)> {
        let mut out = BTreeSet::new();
        for k in 0..self.p() {
            let pa: Vec<usize> = self.parents(k).collect();
            for (x, &a) in pa.iter().enumerate() {
                for &b in &pa[x + 1..] {
                    if !self.adjacent(a, b) {
                        out.insert((a.min(b), k, a.max(b)));
                    }
                }
            }
        }
        out
    }

    /// Vertex sets of the strongly connected components that contain a directed cycle.
    pub fn directed_cycles(&self) -> Vec<Vec<usize>> {
        let p = self.p();
        let mut out = Vec::new();
        let mut assigned = vec![false; p];
        for v in 0..p {
            if assigned[v] {
                continue;
            }
            let down = self.descendants(v);
            if !down.contains(&v) {
                continue;
            }
            let mut scc: Vec<usize> = down
                .into_iter()
                .filter(|&u| self.has_directed_path(u, v))
                .collect();
            scc.sort_unstable();
            for &u in &scc {
                assigned[u] = true;
            }
            out.push(scc);
        }
        out
    }
}

impl PartialEq for MixedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.p() == other.p() && self.directed == other.directed && self.undirected == other.undirected
    }
}

impl Eq for MixedGraph {}

impl fmt::Debug for MixedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MixedGraph(p={}; ", self.p())?;
        let mut first = true;
        for &(a, b) in &self.directed {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{}->{}", self.names[a], self.names[b])?;
        }
        for &(a, b) in &self.undirected {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{}-{}", self.names[a], self.names[b])?;
        }
        write!(f, ")")
    }
}

/// Separating sets recorded during skeleton search, keyed by unordered pair.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SepsetMap {
    sets: BTreeMap<(usize, usize), BTreeSet<usize>>,
}

impl SepsetMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, i: usize, j: usize, set: BTreeSet<usize>) -> Result<()> {
        if i == j || set.contains(&i) || set.contains(&j) {
            return Err(Error::input(format!(
                "sepset for ({i}, {j}) must not contain either endpoint"
            )));
        }
        self.sets.insert(unordered(i, j), set);
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&BTreeSet<usize>> {
        self.sets.get(&unordered(i, j))
    }

    pub fn contains_pair(&self, i: usize, j: usize) -> bool {
        self.sets.contains_key(&unordered(i, j))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &BTreeSet<usize>)> {
        self.sets.iter()
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}
