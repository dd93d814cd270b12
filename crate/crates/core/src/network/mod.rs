//! Thresholded company graph.
//!
//! Nodes are kept in lexicographic order and edges are stored once per
//! unordered pair as `(lower index, higher index)`, so every traversal and
//! export has a single canonical order.

mod analysis;
mod export;

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use crate::correlation::CorrelationMatrix;
use crate::error::{nearest_symbols, Error, Location, Result};

pub use analysis::{
    connected_components, degree_and_clustering, hop_distance, maximal_cliques, neighborhood,
    GraphSummary, DEFAULT_CLIQUE_CAP,
};
pub use export::{export_graph, ExportFormat};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompanyGraph {
    nodes: Vec<String>,
    attributes: Vec<BTreeMap<String, String>>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<usize>>,
    threshold: f64,
}

fn check_threshold(threshold: f64) -> Result<()> {
    if (0.0..1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "threshold must be in [0, 1), got {threshold}"
        )))
    }
}

impl CompanyGraph {
    /// Assembles a graph from sorted nodes and edges with `a < b`. Isolated
    /// nodes are allowed here (induced subgraphs may have them).
    fn assemble(nodes: Vec<String>, mut edges: Vec<Edge>, threshold: f64) -> Self {
        edges.sort_by_key(|e| (e.a, e.b));
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for e in &edges {
            adjacency[e.a].push(e.b);
            adjacency[e.b].push(e.a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        CompanyGraph {
            attributes: vec![BTreeMap::new(); nodes.len()],
            nodes,
            edges,
            adjacency,
            threshold,
        }
    }

    /// Builds a graph from `(ticker, ticker, weight)` triples, as read back
    /// from an edge list. Every weight must exceed `threshold`.
    pub fn from_edges<I, S>(threshold: f64, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, f64)>,
        S: Into<String>,
    {
        check_threshold(threshold)?;
        let triples: Vec<(String, String, f64)> = edges
            .into_iter()
            .map(|(a, b, w)| (a.into(), b.into(), w))
            .collect();
        let mut nodes: Vec<String> = triples
            .iter()
            .flat_map(|(a, b, _)| [a.clone(), b.clone()])
            .collect();
        nodes.sort();
        nodes.dedup();
        let index: HashMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::with_capacity(triples.len());
        for (a, b, weight) in &triples {
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop on {a}")));
            }
            if !(weight > &threshold && *weight <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "edge {a}-{b} weight {weight} not in ({threshold}, 1]"
                )));
            }
            let (i, j) = (index[a.as_str()], index[b.as_str()]);
            let (i, j) = (i.min(j), i.max(j));
            if !seen.insert((i, j)) {
                return Err(Error::InvalidArgument(format!("duplicate edge {a}-{b}")));
            }
            out.push(Edge {
                a: i,
                b: j,
                weight: *weight,
            });
        }
        drop(index);
        Ok(CompanyGraph::assemble(nodes, out, threshold))
    }

    /// Reads an edge-list CSV with columns `ticker_a,ticker_b,rho`.
    pub fn read_edge_csv<R: Read>(input: R, threshold: f64) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut triples = Vec::new();
        for record in r.records() {
            let record = record.map_err(|e| Error::csv(e, None))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() < 3 {
                return Err(Error::MalformedCsv {
                    location: Location::new(None, line),
                    message: "edge rows need ticker_a,ticker_b,rho".into(),
                });
            }
            let weight: f64 = record[2].parse().map_err(|_| Error::MalformedCsv {
                location: Location::new(None, line),
                message: format!("bad weight '{}'", &record[2]),
            })?;
            triples.push((record[0].to_owned(), record[1].to_owned(), weight));
        }
        CompanyGraph::from_edges(threshold, triples)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn index_of(&self, ticker: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.as_str().cmp(ticker)).ok()
    }

    pub fn contains(&self, ticker: &str) -> bool {
        self.index_of(ticker).is_some()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Edges as ticker-name triples, canonical order.
    pub fn edge_triples(&self) -> Vec<(&str, &str, f64)> {
        self.edges
            .iter()
            .map(|e| (self.nodes[e.a].as_str(), self.nodes[e.b].as_str(), e.weight))
            .collect()
    }

    pub fn attributes(&self, node: usize) -> &BTreeMap<String, String> {
        &self.attributes[node]
    }

    pub fn set_attribute(&mut self, ticker: &str, key: &str, value: &str) -> Result<()> {
        let i = self.require(ticker)?;
        self.attributes[i].insert(key.to_owned(), value.to_owned());
        Ok(())
    }

    /// Merges a side CSV of `ticker,key,value` rows into node attributes.
    /// Rows for tickers not in the graph are skipped; returns how many were
    /// applied.
    pub fn join_attributes<R: Read>(&mut self, input: R, source: Option<&str>) -> Result<usize> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut applied = 0;
        for record in r.records() {
            let record = record.map_err(|e| Error::csv(e, source))?;
            if record.len() < 3 {
                let line = record.position().map(|p| p.line()).unwrap_or(0);
                return Err(Error::MalformedCsv {
                    location: Location::new(source, line),
                    message: "attribute rows need ticker,key,value".into(),
                });
            }
            if let Some(i) = self.index_of(&record[0]) {
                self.attributes[i].insert(record[1].to_owned(), record[2].to_owned());
                applied += 1;
            }
        }
        Ok(applied)
    }

    /// Sorted union of attribute keys over all nodes.
    pub fn attribute_keys(&self) -> Vec<String> {
        let mut keys: Vec<String> = self
            .attributes
            .iter()
            .flat_map(|m| m.keys().cloned())
            .collect();
        keys.sort();
        keys.dedup();
        keys
    }

    pub(crate) fn require(&self, ticker: &str) -> Result<usize> {
        self.index_of(ticker).ok_or_else(|| Error::UnknownTicker {
            ticker: ticker.to_owned(),
            suggestions: nearest_symbols(self.nodes.iter().map(String::as_str), ticker),
        })
    }

    /// Induced subgraph on `members` (indices into this graph).
    pub(crate) fn induced(&self, members: &[usize]) -> CompanyGraph {
        let mut members = members.to_vec();
        members.sort_unstable();
        let remap: HashMap<usize, usize> = members
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new))
            .collect();
        let nodes = members.iter().map(|&i| self.nodes[i].clone()).collect();
        let edges = self
            .edges
            .iter()
            .filter_map(|e| {
                Some(Edge {
                    a: *remap.get(&e.a)?,
                    b: *remap.get(&e.b)?,
                    weight: e.weight,
                })
            })
            .collect();
        let mut g = CompanyGraph::assemble(nodes, edges, self.threshold);
        for (new, &old) in members.iter().enumerate() {
            g.attributes[new] = self.attributes[old].clone();
        }
        g
    }
}

/// Keeps pairs with rho strictly above `threshold`; tickers without any such
/// pair are left out.
pub fn build_graph(matrix: &CorrelationMatrix, threshold: f64) -> Result<CompanyGraph> {
    check_threshold(threshold)?;
    let n = matrix.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| matrix.tickers()[i].cmp(&matrix.tickers()[j]));

    let mut qualifying = Vec::new();
    let mut used = vec![false; n];
    for i in 0..n {
        for j in i + 1..n {
            if let Some(rho) = matrix.rho(i, j) {
                if rho > threshold {
                    qualifying.push((i, j, rho));
                    used[i] = true;
                    used[j] = true;
                }
            }
        }
    }
    let kept: Vec<usize> = order.into_iter().filter(|&i| used[i]).collect();
    let mut position = vec![usize::MAX; n];
    for (p, &i) in kept.iter().enumerate() {
        position[i] = p;
    }
    let nodes = kept.iter().map(|&i| matrix.tickers()[i].clone()).collect();
    let edges = qualifying
        .into_iter()
        .map(|(i, j, rho)| {
            let (a, b) = (position[i], position[j]);
            Edge {
                a: a.min(b),
                b: a.max(b),
                weight: rho,
            }
        })
        .collect();
    Ok(CompanyGraph::assemble(nodes, edges, threshold))
}
