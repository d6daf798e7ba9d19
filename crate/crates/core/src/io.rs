//! JSON and DOT formats for graphs, patterns, DEPs and ground-truth models.
//!
//! Edges are written by vertex name. A graph document is
//! `{"nodes": [...], "directed": [[from, to], ...], "undirected": [[a, b], ...]}`;
//! DSEP documents add `"sepsets"` and DEP documents add `"provenance"`.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::depfind::{Dep, Provenance};
use crate::error::{Error, Result};
use crate::graph::{MixedGraph, SepsetMap};
use crate::pc::Dsep;
use crate::synth::{Disturbance, NgDag};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    nodes: Vec<String>,
    #[serde(default)]
    directed: Vec<(String, String)>,
    #[serde(default)]
    undirected: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sepsets: Option<Vec<SepsetDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Vec<TagDoc>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SepsetDoc {
    pair: (String, String),
    set: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TagDoc {
    edge: (String, String),
    tag: Provenance,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    nodes: Vec<String>,
    /// `coefficients[j][i]` is the weight of `x_i` in the equation for `x_j`.
    coefficients: Vec<Vec<f64>>,
    disturbances: Vec<Disturbance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    oracle_dep: Option<GraphDoc>,
}

fn parse_err(what: &str, e: serde_json::Error) -> Error {
    Error::Parse(format!("{what}: {e}"))
}

struct Index<'a> {
    ids: HashMap<&'a str, usize>,
}

impl<'a> Index<'a> {
    fn new(nodes: &'a [String]) -> Result<Self> {
        let mut ids = HashMap::with_capacity(nodes.len());
        for (k, name) in nodes.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Parse("empty node name".into()));
            }
            if ids.insert(name.as_str(), k).is_some() {
                return Err(Error::Parse(format!("duplicate node name {name:?}")));
            }
        }
        Ok(Index { ids })
    }

    fn id(&self, name: &str) -> Result<usize> {
        self.ids.get(name).copied().ok_or_else(|| Error::Parse(format!("unknown node {name:?}")))
    }

    fn pair(&self, (a, b): &(String, String)) -> Result<(usize, usize)> {
        Ok((self.id(a)?, self.id(b)?))
    }
}

fn doc_of(g: &MixedGraph) -> GraphDoc {
    let name = |v: usize| g.name(v).to_owned();
    GraphDoc {
        nodes: g.names().to_vec(),
        directed: g.directed_edges().map(|(a, b)| (name(a), name(b))).collect(),
        undirected: g.undirected_edges().map(|(a, b)| (name(a), name(b))).collect(),
        sepsets: None,
        provenance: None,
    }
}

fn graph_of(doc: &GraphDoc) -> Result<MixedGraph> {
    let index = Index::new(&doc.nodes)?;
    let mut g = MixedGraph::with_names(doc.nodes.clone());
    for e in &doc.directed {
        let (a, b) = index.pair(e)?;
        g.add_directed(a, b)?;
    }
    for e in &doc.undirected {
        let (a, b) = index.pair(e)?;
        g.add_undirected(a, b)?;
    }
    Ok(g)
}

fn to_string(doc: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents always serialize");
    s.push('\n');
    s
}

pub fn graph_to_json(g: &MixedGraph) -> String {
    to_string(&doc_of(g))
}

/// Parses a graph document. Extra `sepsets` or `provenance` fields are accepted
/// and ignored, so DSEP and DEP files can be read as plain graphs.
pub fn graph_from_json(s: &str) -> Result<MixedGraph> {
    let doc: GraphDoc = serde_json::from_str(s).map_err(|e| parse_err("graph JSON", e))?;
    graph_of(&doc)
}

pub fn dsep_to_json(dsep: &Dsep) -> String {
    let g = &dsep.graph;
    let mut doc = doc_of(g);
    doc.sepsets = Some(
        dsep.sepsets
            .iter()
            .map(|(&(a, b), set)| SepsetDoc {
                pair: (g.name(a).to_owned(), g.name(b).to_owned()),
                set: set.iter().map(|&v| g.name(v).to_owned()).collect(),
            })
            .collect(),
    );
    to_string(&doc)
}

/// Parses a DSEP. A plain graph document yields an empty sepset map.
pub fn dsep_from_json(s: &str) -> Result<Dsep> {
    let doc: GraphDoc = serde_json::from_str(s).map_err(|e| parse_err("DSEP JSON", e))?;
    let graph = graph_of(&doc)?;
    let index = Index::new(&doc.nodes)?;
    let mut sepsets = SepsetMap::new();
    for sd in doc.sepsets.iter().flatten() {
        let (a, b) = index.pair(&sd.pair)?;
        if graph.adjacent(a, b) {
            return Err(Error::input(format!("sepset given for adjacent pair ({}, {})", sd.pair.0, sd.pair.1)));
        }
        let set = sd.set.iter().map(|n| index.id(n)).collect::<Result<BTreeSet<usize>>>()?;
        sepsets.insert(a, b, set)?;
    }
    if !graph.is_chain_graph() {
        return Err(Error::input("DSEP graph contains a directed cycle"));
    }
    Ok(Dsep { graph, sepsets })
}

pub fn dep_to_json(dep: &Dep) -> String {
    let g = &dep.graph;
    let mut doc = doc_of(g);
    let edge = |a: usize, b: usize| (g.name(a).to_owned(), g.name(b).to_owned());
    let tags = g
        .directed_edges()
        .chain(g.undirected_edges())
        .filter_map(|(a, b)| dep.provenance(a, b).map(|tag| TagDoc { edge: edge(a, b), tag }))
        .collect();
    doc.provenance = Some(tags);
    to_string(&doc)
}

/// Parses a DEP. Edges without a provenance entry are tagged `from-pc`.
pub fn dep_from_json(s: &str) -> Result<Dep> {
    let doc: GraphDoc = serde_json::from_str(s).map_err(|e| parse_err("DEP JSON", e))?;
    let graph = graph_of(&doc)?;
    let index = Index::new(&doc.nodes)?;
    let mut dep = Dep::uniform(graph, Provenance::FromPc);
    for t in doc.provenance.iter().flatten() {
        let (a, b) = index.pair(&t.edge)?;
        if !dep.graph.adjacent(a, b) {
            return Err(Error::input(format!("provenance given for missing edge ({}, {})", t.edge.0, t.edge.1)));
        }
        dep.provenance.insert((a.min(b), a.max(b)), t.tag);
    }
    Ok(dep)
}

/// Writes the coefficients, the disturbance kinds and, if given, the oracle DEP.
pub fn model_to_json(model: &NgDag, oracle: Option<&Dep>) -> String {
    let b = model.coefficients();
    let p = model.p();
    let doc = ModelDoc {
        nodes: model.dag().names().to_vec(),
        coefficients: (0..p).map(|j| (0..p).map(|i| b[(j, i)]).collect()).collect(),
        disturbances: model.disturbances().to_vec(),
        oracle_dep: oracle.map(|d| doc_of(&d.graph)),
    };
    to_string(&doc)
}

/// Parses a model; the DAG is the support of the coefficient matrix.
pub fn model_from_json(s: &str) -> Result<NgDag> {
    let doc: ModelDoc = serde_json::from_str(s).map_err(|e| parse_err("model JSON", e))?;
    Index::new(&doc.nodes)?;
    let p = doc.nodes.len();
    if doc.coefficients.len() != p || doc.coefficients.iter().any(|row| row.len() != p) {
        return Err(Error::input(format!("coefficient matrix must be {p}x{p}")));
    }
    let b = DMatrix::from_fn(p, p, |j, i| doc.coefficients[j][i]);
    let mut dag = MixedGraph::with_names(doc.nodes.clone());
    for j in 0..p {
        for i in 0..p {
            if b[(j, i)] != 0.0 {
                if i == j {
                    return Err(Error::input(format!("self-loop coefficient on {}", doc.nodes[i])));
                }
                if b[(i, j)] != 0.0 {
                    return Err(Error::input(format!("two-cycle between {} and {}", doc.nodes[i], doc.nodes[j])));
                }
                dag.add_directed(i, j)?;
            }
        }
    }
    NgDag::new(dag, b, doc.disturbances)
}

fn dot_id(name: &str) -> String {
    format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering; undirected edges carry `dir=none`.
pub fn graph_to_dot(g: &MixedGraph) -> String {
    let mut s = String::from("digraph G {\n");
    for v in 0..g.p() {
        let _ = writeln!(s, "  {};", dot_id(g.name(v)));
    }
    for (a, b) in g.directed_edges() {
        let _ = writeln!(s, "  {} -> {};", dot_id(g.name(a)), dot_id(g.name(b)));
    }
    for (a, b) in g.undirected_edges() {
        let _ = writeln!(s, "  {} -> {} [dir=none];", dot_id(g.name(a)), dot_id(g.name(b)));
    }
    s.push_str("}\n");
    s
}

/// Vertex names of `g` must equal `names`, in order.
pub fn require_names(g: &MixedGraph, names: &[String], what: &str) -> Result<()> {
    if g.names() != names {
        return Err(Error::input(format!("{what} nodes {:?} do not match {names:?}", g.names())));
    }
    Ok(())
}
