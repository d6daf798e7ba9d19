//! Orienting a DSEP's undirected edges into a distribution-equivalence
//! pattern by pairwise ancestor finding, and repairing outputs that
//! contradict the DSEP.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{close_under_rules, MixedGraph};
use crate::pc::Dsep;
use crate::stats::{
    decide_pair, ColumnSource, GaussianityProvider, IndependenceProvider, PairVerdict, Providers, Side, WorkingColumn,
};
use crate::synth::{substream, Stream};

/// Which step fixed the state of an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Unchanged from the input pattern.
    FromPc,
    /// Gaussian endpoint towards non-Gaussian endpoint.
    GaussianRule,
    /// Residual independence showed one endpoint is an ancestor of the other.
    AncestorRule,
    /// Orientation taken from the best-scoring DAG of the enumeration baseline.
    Score,
    Meek,
    Repair,
}

/// A pattern with a tag for every edge, keyed by unordered pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dep {
    pub graph: MixedGraph,
    pub provenance: BTreeMap<(usize, usize), Provenance>,
}

fn key(i: usize, j: usize) -> (usize, usize) {
    (i.min(j), i.max(j))
}

impl Dep {
    /// Tags every edge of `graph` with `tag`.
    pub fn uniform(graph: MixedGraph, tag: Provenance) -> Self {
        let provenance = graph.skeleton_pairs().into_iter().map(|e| (e, tag)).collect();
        Dep { graph, provenance }
    }

    pub fn provenance(&self, i: usize, j: usize) -> Option<Provenance> {
        self.provenance.get(&key(i, j)).copied()
    }

    /// Re-tags every pair whose edge differs between `before` and the current graph.
    fn tag_changes(&mut self, before: &MixedGraph, tag: Provenance) {
        for (a, b) in self.graph.skeleton_pairs() {
            let same = (before.has_directed(a, b) && self.graph.has_directed(a, b))
                || (before.has_directed(b, a) && self.graph.has_directed(b, a))
                || (before.has_undirected(a, b) && self.graph.has_undirected(a, b));
            if !same {
                self.provenance.insert((a, b), tag);
            }
        }
    }
}

/// Counters collected during one search.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RunLog {
    pub gaussianity_tests: usize,
    pub independence_tests: usize,
    pub regressions: usize,
    pub gaussian_rule: usize,
    pub ancestor_rule: usize,
    pub meek: usize,
    pub both_gaussian: usize,
    /// Edges left undirected because neither side could be shown to be the ancestor.
    pub withheld: usize,
    pub components: usize,
}

/// One adjacent pair with its working columns after regressing out `bca_star`.
#[derive(Clone, Debug)]
pub struct WorkingPair {
    pub i: usize,
    pub j: usize,
    pub bca_star: BTreeSet<usize>,
    pub vi: WorkingColumn,
    pub vj: WorkingColumn,
}

impl WorkingPair {
    pub fn new(columns: &ColumnSource, i: usize, j: usize, bca_star: BTreeSet<usize>) -> Result<Self> {
        if i == j || bca_star.contains(&i) || bca_star.contains(&j) {
            return Err(Error::input("working pair needs distinct endpoints outside the regressed set"));
        }
        let vi = columns.regressed(i, &bca_star)?;
        let vj = columns.regressed(j, &bca_star)?;
        Ok(WorkingPair { i, j, bca_star, vi, vj })
    }
}

/// The pairwise decision without caching.
pub fn classify_pair(pair: &WorkingPair, gauss: &GaussianityProvider, indep: &IndependenceProvider) -> Result<PairVerdict> {
    decide_pair(
        &pair.vi,
        &pair.vj,
        |_, c| gauss.is_gaussian(c),
        |_, cols| {
            let (a, b) = cols()?;
            indep.independent(&a, &b)
        },
    )
    .map_err(|e| e.at_pair(pair.i, pair.j))
}

type Regressed = BTreeSet<usize>;

struct Search<'p, 'a> {
    providers: &'p Providers<'a>,
    dep: Dep,
    bca_star: BTreeMap<(usize, usize), BTreeSet<usize>>,
    regressed: BTreeMap<(usize, usize), Regressed>,
    finalized: BTreeSet<(usize, usize)>,
    columns: HashMap<(usize, Regressed), Rc<WorkingColumn>>,
    gauss_cache: HashMap<(usize, Regressed), bool>,
    indep_cache: HashMap<(usize, usize, Regressed, Side), bool>,
    log: RunLog,
}

impl Search<'_, '_> {
    fn column(&mut self, v: usize, on: &Regressed) -> Result<Rc<WorkingColumn>> {
        if let Some(c) = self.columns.get(&(v, on.clone())) {
            return Ok(Rc::clone(c));
        }
        let c = Rc::new(self.providers.columns.regressed(v, on)?);
        if !on.is_empty() {
            self.log.regressions += 1;
        }
        self.columns.insert((v, on.clone()), Rc::clone(&c));
        Ok(c)
    }

    fn is_gaussian(&mut self, v: usize, on: &Regressed) -> Result<bool> {
        if let Some(&g) = self.gauss_cache.get(&(v, on.clone())) {
            return Ok(g);
        }
        let col = self.column(v, on)?;
        let g = self.providers.gauss.is_gaussian(&col)?;
        self.log.gaussianity_tests += 1;
        self.gauss_cache.insert((v, on.clone()), g);
        Ok(g)
    }

    fn verdict(&mut self, i: usize, j: usize) -> Result<PairVerdict> {
        let on = self.regressed.get(&(i, j)).cloned().unwrap_or_default();
        let vi = self.column(i, &on)?;
        let vj = self.column(j, &on)?;
        let gi = self.is_gaussian(i, &on)?;
        let gj = self.is_gaussian(j, &on)?;
        let indep = &self.providers.indep;
        let cache = &mut self.indep_cache;
        let log = &mut self.log;
        decide_pair(
            &vi,
            &vj,
            |side, _| Ok(if side == Side::I { gi } else { gj }),
            |side, cols| {
                let k = (i, j, on.clone(), side);
                if let Some(&r) = cache.get(&k) {
                    return Ok(r);
                }
                let (a, b) = cols()?;
                let r = indep.independent(&a, &b)?;
                log.independence_tests += 1;
                cache.insert(k, r);
                Ok(r)
            },
        )
    }

    fn orient(&mut self, from: usize, to: usize, tag: Provenance) -> Result<()> {
        self.dep.graph.orient(from, to)?;
        self.dep.provenance.insert(key(from, to), tag);
        Ok(())
    }

    fn open_pairs(&self, within: &BTreeSet<usize>) -> Vec<(usize, usize)> {
        self.dep
            .graph
            .undirected_edges()
            .filter(|(a, b)| within.contains(a) && within.contains(b) && !self.finalized.contains(&(*a, *b)))
            .collect()
    }

    /// Adds to `BCA*` every backdoor common ancestor not yet regressed out.
    /// Returns whether any pair gained a vertex.
    fn refresh_bca(&mut self, pairs: &[(usize, usize)]) -> bool {
        let mut grew = false;
        for &(i, j) in pairs {
            if !self.dep.graph.has_undirected(i, j) {
                continue;
            }
            let done = self.regressed.get(&(i, j)).cloned().unwrap_or_default();
            let fresh: BTreeSet<usize> = self
                .dep
                .graph
                .backdoor_common_ancestors(i, j)
                .into_iter()
                .filter(|k| !done.contains(k))
                .collect();
            let star = self.bca_star.entry((i, j)).or_default();
            let before = star.len();
            star.extend(fresh);
            grew |= star.len() > before;
        }
        grew
    }

    /// Removes working vertices whose edges inside the working set all point
    /// outward. Such a vertex precedes everything it is connected to there, so
    /// it joins the regression set of every open pair in its connected piece.
    fn retire_sources(&mut self, work: &mut BTreeSet<usize>) -> bool {
        let mut grew = false;
        loop {
            let g = &self.dep.graph;
            let source = work.iter().copied().find(|&v| {
                let nbrs: Vec<usize> = g.neighbors(v).into_iter().filter(|u| work.contains(u)).collect();
                !nbrs.is_empty() && nbrs.iter().all(|&u| g.has_directed(v, u))
            });
            let Some(s) = source else { return grew };
            let piece: BTreeSet<usize> = g
                .skeleton()
                .restricted_to(work)
                .weakly_connected_components()
                .into_iter()
                .find(|c| c.contains(&s))
                .expect("source lies in a piece")
                .into_iter()
                .collect();
            work.remove(&s);
            for (i, j) in self.open_pairs(work) {
                if !piece.contains(&i) || !piece.contains(&j) {
                    continue;
                }
                if self.regressed.get(&(i, j)).is_some_and(|r| r.contains(&s)) {
                    continue;
                }
                grew |= self.bca_star.entry((i, j)).or_default().insert(s);
            }
        }
    }

    fn process(&mut self, component: &BTreeSet<usize>, queue: &mut Vec<BTreeSet<usize>>) -> Result<()> {
        let pairs = self.open_pairs(component);
        if pairs.is_empty() {
            return Ok(());
        }
        self.log.components += 1;
        let none = Regressed::new();
        let mut non_gaussian = BTreeSet::new();
        for &v in component {
            if !self.is_gaussian(v, &none)? {
                non_gaussian.insert(v);
            }
        }
        for &(i, j) in &pairs {
            match (non_gaussian.contains(&i), non_gaussian.contains(&j)) {
                (false, true) => {
                    self.orient(i, j, Provenance::GaussianRule)?;
                    self.log.gaussian_rule += 1;
                }
                (true, false) => {
                    self.orient(j, i, Provenance::GaussianRule)?;
                    self.log.gaussian_rule += 1;
                }
                (false, false) => {
                    self.finalized.insert((i, j));
                    self.log.both_gaussian += 1;
                }
                (true, true) => {}
            }
        }
        self.refresh_bca(&pairs);
        self.retire_sources(&mut component.clone());

        let ng_graph = self.dep.graph.restricted_to(&non_gaussian);
        let parts: Vec<BTreeSet<usize>> = undirected_components(&ng_graph, &non_gaussian);
        if parts.len() != 1 {
            queue.extend(parts);
            return Ok(());
        }
        let mut work = parts.into_iter().next().expect("one part");

        let mut flag = true;
        while flag {
            flag = false;
            for (i, j) in self.open_pairs(&work) {
                if let Some(star) = self.bca_star.get_mut(&(i, j)) {
                    if !star.is_empty() {
                        let star = std::mem::take(star);
                        self.regressed.entry((i, j)).or_default().extend(star);
                    }
                }
                match self.verdict(i, j).map_err(|e| e.at_pair(i, j))? {
                    PairVerdict::IToJ => {
                        self.orient(i, j, Provenance::AncestorRule)?;
                        self.log.ancestor_rule += 1;
                        flag = true;
                    }
                    PairVerdict::JToI => {
                        self.orient(j, i, Provenance::AncestorRule)?;
                        self.log.ancestor_rule += 1;
                        flag = true;
                    }
                    PairVerdict::BothGaussian => {
                        self.finalized.insert((i, j));
                        self.log.both_gaussian += 1;
                    }
                    PairVerdict::BcaNonempty | PairVerdict::Independent => {}
                }
            }
            let open = self.open_pairs(&work);
            flag |= self.refresh_bca(&open);
            flag |= self.retire_sources(&mut work);
        }

        let rest = self.open_pairs(&work);
        let touched: BTreeSet<usize> = rest.iter().flat_map(|&(a, b)| [a, b]).collect();
        if touched.len() < component.len() {
            let g = self.dep.graph.restricted_to(&touched);
            queue.extend(undirected_components(&g, &touched));
        } else {
            self.log.withheld += rest.len();
        }
        Ok(())
    }
}

/// Connected components of the undirected part of `g` among `vertices`,
/// keeping only those with at least one undirected edge.
fn undirected_components(g: &MixedGraph, vertices: &BTreeSet<usize>) -> Vec<BTreeSet<usize>> {
    let und = MixedGraph::from_edges(g.p(), &[], &g.undirected_edges().collect::<Vec<_>>()).expect("valid edges");
    und.weakly_connected_components()
        .into_iter()
        .filter(|c| c.len() > 1 && c.iter().all(|v| vertices.contains(v)))
        .map(|c| c.into_iter().collect())
        .collect()
}

/// Orients the undirected edges of `dsep` with the given providers.
///
/// Works component by component over the undirected part: Gaussian endpoints
/// point into non-Gaussian ones, then pairs of non-Gaussian variables are
/// decided from residual independence after regressing out their backdoor
/// common ancestors, repeating while anything changes. Ends with the
/// orientation rules. Undecidable edges stay undirected.
pub fn find_dep(dsep: &Dsep, providers: &Providers) -> Result<(Dep, RunLog)> {
    let g = &dsep.graph;
    if providers.columns.p() != g.p() {
        return Err(Error::input(format!(
            "providers cover {} variables, pattern has {}",
            providers.columns.p(),
            g.p()
        )));
    }
    if g.has_directed_cycle() {
        return Err(Error::input("input pattern contains a directed cycle"));
    }
    let mut s = Search {
        providers,
        dep: Dep::uniform(g.clone(), Provenance::FromPc),
        bca_star: BTreeMap::new(),
        regressed: BTreeMap::new(),
        finalized: BTreeSet::new(),
        columns: HashMap::new(),
        gauss_cache: HashMap::new(),
        indep_cache: HashMap::new(),
        log: RunLog::default(),
    };
    for (i, j) in g.undirected_edges() {
        s.bca_star.insert((i, j), g.backdoor_common_ancestors(i, j));
    }
    let all: BTreeSet<usize> = (0..g.p()).collect();
    let mut queue = undirected_components(g, &all);
    let mut next = 0;
    while next < queue.len() {
        let component = queue[next].clone();
        next += 1;
        s.process(&component, &mut queue)?;
    }
    let before = s.dep.graph.clone();
    s.dep.graph = close_under_rules(&before);
    s.dep.tag_changes(&before, Provenance::Meek);
    s.log.meek = s.dep.graph.directed_set().len() - before.directed_set().len();
    Ok((s.dep, s.log))
}

/// A way in which a pattern contradicts the DSEP it was derived from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    /// The pair is adjacent in exactly one of the two graphs.
    SkeletonMismatch { a: usize, b: usize },
    /// `from -> to` in the DSEP but `to -> from` in the pattern.
    ReversedEdge { from: usize, to: usize },
    /// Vertices of one strongly connected component with a directed cycle.
    DirectedCycle { vertices: Vec<usize> },
    /// Nonadjacent parents of `collider` that form colliders absent from the DSEP.
    NewVStructure { collider: usize, parents: Vec<usize> },
}

/// Every way `dep` contradicts `dsep`; empty iff consistent.
pub fn check_consistency(dep: &MixedGraph, dsep: &MixedGraph) -> Result<Vec<Violation>> {
    if dep.p() != dsep.p() {
        return Err(Error::input(format!("vertex sets differ: {} vs {} vertices", dep.p(), dsep.p())));
    }
    let mut out = Vec::new();
    let (sa, sb) = (dep.skeleton_pairs(), dsep.skeleton_pairs());
    for &(a, b) in sa.symmetric_difference(&sb) {
        out.push(Violation::SkeletonMismatch { a, b });
    }
    for &(from, to) in dsep.directed_set() {
        if dep.has_directed(to, from) {
            out.push(Violation::ReversedEdge { from, to });
        }
    }
    for vertices in dep.directed_cycles() {
        out.push(Violation::DirectedCycle { vertices });
    }
    let known = dsep.v_structures();
    let mut by_collider: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (i, k, j) in dep.v_structures() {
        if !known.contains(&(i, k, j)) {
            by_collider.entry(k).or_default().extend([i, j]);
        }
    }
    for (collider, parents) in by_collider {
        out.push(Violation::NewVStructure { collider, parents: parents.into_iter().collect() });
    }
    out.sort();
    Ok(out)
}

/// Whether a violation can be fixed by reorienting edges.
fn orientation_violation(v: &Violation) -> bool {
    !matches!(v, Violation::SkeletonMismatch { .. })
}

/// Reorients a pattern until it agrees with the DSEP, choosing start vertices
/// and tie-breaks with a seeded generator.
pub fn repair_exceptions(dep: &Dep, dsep: &Dsep, seed: u64) -> Result<Dep> {
    let mut rng = substream(seed, Stream::Repair, 0);
    repair_exceptions_with(dep, dsep, |cands: &[usize]| cands[rng.random_range(0..cands.len())])
}

/// As [`repair_exceptions`], with `choose` picking one vertex among the
/// candidates offered (sorted, never empty): first the start vertex of each
/// broken component, then each next vertex of the traversal.
///
/// Directed edges of the DSEP that were reversed are restored first. Then
/// every undirected component of the DSEP that holds a cycle or a new
/// collider, after closing under the orientation rules, is traversed from a source of its directed edges (any vertex if
/// there is none), always moving to an unvisited vertex with the most visited
/// neighbours. Each directed edge inside is pointed from the earlier to the
/// later visited endpoint; undirected ones are left alone. The orientation
/// rules run last.
pub fn repair_exceptions_with(dep: &Dep, dsep: &Dsep, mut choose: impl FnMut(&[usize]) -> usize) -> Result<Dep> {
    let base = &dsep.graph;
    let violations = check_consistency(&dep.graph, base)?;
    if violations.iter().any(|v| matches!(v, Violation::SkeletonMismatch { .. })) {
        return Err(Error::input("pattern and DSEP have different skeletons"));
    }
    if !violations.iter().any(orientation_violation) {
        return Ok(dep.clone());
    }
    let mut out = dep.clone();
    for &(from, to) in base.directed_set() {
        if out.graph.has_directed(to, from) {
            out.graph.reverse(to, from)?;
            out.provenance.insert(key(from, to), Provenance::Repair);
        }
    }

    // a partial orientation can look fine and still force a violation once closed
    let bad = broken_vertices(&close_under_rules(&out.graph), base)?;
    let all: BTreeSet<usize> = (0..base.p()).collect();
    for members in undirected_components(base, &all) {
        if !members.iter().any(|v| bad.contains(v)) {
            continue;
        }
        let comp: Vec<usize> = members.iter().copied().collect();
        let local = out.graph.restricted_to(&members);
        let local = MixedGraph::from_edges(base.p(), &local.directed_edges().collect::<Vec<_>>(), &[])?;
        let sources: Vec<usize> = comp.iter().copied().filter(|&v| local.parents(v).next().is_none()).collect();
        let start = if sources.is_empty() { choose(&comp) } else { choose(&sources) };
        if !members.contains(&start) {
            return Err(Error::input(format!("chooser returned {start}, not a candidate")));
        }
        let order = max_cardinality_order(base, &members, start, &mut choose)?;
        let rank: BTreeMap<usize, usize> = order.iter().enumerate().map(|(r, &v)| (v, r)).collect();
        for (a, b) in local.directed_edges().collect::<Vec<_>>() {
            if rank[&a] > rank[&b] {
                out.graph.reverse(a, b)?;
                out.provenance.insert(key(a, b), Provenance::Repair);
            }
        }
    }
    let before = out.graph.clone();
    out.graph = close_under_rules(&before);
    out.tag_changes(&before, Provenance::Meek);
    Ok(out)
}

/// Vertices on a directed cycle or at the collider of a new v-structure.
fn broken_vertices(g: &MixedGraph, dsep: &MixedGraph) -> Result<BTreeSet<usize>> {
    let mut out = BTreeSet::new();
    for v in check_consistency(g, dsep)? {
        match v {
            Violation::DirectedCycle { vertices } => out.extend(vertices),
            Violation::NewVStructure { collider, .. } => {
                out.insert(collider);
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Visit order over `members` in the skeleton of `g`: always an unvisited
/// vertex with the largest number of visited neighbours.
fn max_cardinality_order(
    g: &MixedGraph,
    members: &BTreeSet<usize>,
    start: usize,
    choose: &mut impl FnMut(&[usize]) -> usize,
) -> Result<Vec<usize>> {
    let mut order = vec![start];
    let mut weight: BTreeMap<usize, usize> = members.iter().map(|&v| (v, 0)).collect();
    weight.remove(&start);
    let mut last = start;
    while !weight.is_empty() {
        for (v, w) in weight.iter_mut() {
            if g.adjacent(*v, last) {
                *w += 1;
            }
        }
        let best = *weight.values().max().expect("nonempty");
        let cands: Vec<usize> = weight.iter().filter(|(_, &w)| w == best).map(|(&v, _)| v).collect();
        let next = choose(&cands);
        if weight.remove(&next).is_none() || !cands.contains(&next) {
            return Err(Error::input(format!("chooser returned {next}, not a candidate")));
        }
        order.push(next);
        last = next;
    }
    Ok(order)
}
