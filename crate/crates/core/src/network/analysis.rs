use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use super::CompanyGraph;
use crate::error::{Error, Result};

pub const DEFAULT_CLIQUE_CAP: usize = 100_000;

/// Connected components as ticker lists. Members are sorted; components are
/// ordered by size descending, then by their smallest member.
pub fn connected_components(graph: &CompanyGraph) -> Vec<Vec<String>> {
    component_indices(graph)
        .into_iter()
        .map(|c| c.into_iter().map(|i| graph.nodes[i].clone()).collect())
        .collect()
}

fn component_indices(graph: &CompanyGraph) -> Vec<Vec<usize>> {
    let n = graph.node_count();
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut members = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in graph.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    members.push(v);
                    queue.push_back(v);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    // Node indices are lexicographic, so members[0] is the smallest name.
    components.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    components
}

/// Fixed-width bitset over node indices.
#[derive(Clone)]
struct NodeSet {
    words: Vec<u64>,
}

impl NodeSet {
    fn empty(n: usize) -> Self {
        NodeSet {
            words: vec![0; n.div_ceil(64)],
        }
    }

    fn full(n: usize) -> Self {
        let mut s = NodeSet::empty(n);
        for i in 0..n {
            s.insert(i);
        }
        s
    }

    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn intersect(&self, other: &NodeSet) -> NodeSet {
        NodeSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    fn intersect_len(&self, other: &NodeSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    fn difference(&self, other: &NodeSet) -> NodeSet {
        NodeSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect(),
        }
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + b)
            })
        })
    }
}

struct CliqueSearch<'a> {
    neighbors: &'a [NodeSet],
    min_size: usize,
    cap: usize,
    found: Vec<Vec<usize>>,
}

impl CliqueSearch<'_> {
    fn expand(&mut self, clique: &mut Vec<usize>, mut candidates: NodeSet, mut excluded: NodeSet) -> Result<()> {
        if candidates.is_empty() {
            if excluded.is_empty() && clique.len() >= self.min_size {
                if self.found.len() == self.cap {
                    return Err(Error::CliqueCapExceeded { cap: self.cap });
                }
                self.found.push(clique.clone());
            }
            return Ok(());
        }
        if clique.len() + candidates.len() < self.min_size {
            return Ok(());
        }
        // Tomita pivot: the vertex covering the most candidates.
        let pivot = candidates
            .iter()
            .chain(excluded.iter())
            .max_by_key(|&u| (candidates.intersect_len(&self.neighbors[u]), std::cmp::Reverse(u)))
            .expect("candidates non-empty");
        let branch = candidates.difference(&self.neighbors[pivot]);
        for v in branch.iter() {
            clique.push(v);
            self.expand(
                clique,
                candidates.intersect(&self.neighbors[v]),
                excluded.intersect(&self.neighbors[v]),
            )?;
            clique.pop();
            candidates.remove(v);
            excluded.insert(v);
        }
        Ok(())
    }
}

/// All maximal cliques with at least `min_size` members (Bron–Kerbosch with
/// pivoting). Ordered by size descending, then lexicographically.
pub fn maximal_cliques(graph: &CompanyGraph, min_size: usize, cap: usize) -> Result<Vec<Vec<String>>> {
    if min_size < 3 {
        return Err(Error::InvalidArgument(format!(
            "minimum clique size must be at least 3, got {min_size}"
        )));
    }
    let n = graph.node_count();
    let neighbors: Vec<NodeSet> = (0..n)
        .map(|u| {
            let mut s = NodeSet::empty(n);
            for &v in graph.neighbors(u) {
                s.insert(v);
            }
            s
        })
        .collect();
    let mut search = CliqueSearch {
        neighbors: &neighbors,
        min_size,
        cap,
        found: Vec::new(),
    };
    search.expand(&mut Vec::new(), NodeSet::full(n), NodeSet::empty(n))?;
    let mut cliques = search.found;
    for c in &mut cliques {
        c.sort_unstable();
    }
    cliques.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    Ok(cliques
        .into_iter()
        .map(|c| c.into_iter().map(|i| graph.nodes[i].clone()).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSummary {
    pub node_count: usize,
    pub edge_count: usize,
    pub component_count: usize,
    /// Descending.
    pub component_sizes: Vec<usize>,
    /// degree -> number of nodes with that degree
    pub degree_histogram: BTreeMap<usize, usize>,
    pub triangles: u64,
    pub connected_triples: u64,
    /// 3 × triangles / connected triples; 0 without triples.
    pub clustering_coefficient: f64,
}

pub fn degree_and_clustering(graph: &CompanyGraph) -> GraphSummary {
    let n = graph.node_count();
    let mut degree_histogram = BTreeMap::new();
    let mut connected_triples = 0u64;
    for u in 0..n {
        let d = graph.degree(u) as u64;
        *degree_histogram.entry(d as usize).or_insert(0) += 1;
        connected_triples += d * d.saturating_sub(1) / 2;
    }
    // Each triangle u < v < w is counted once from its lowest edge.
    let mut triangles = 0u64;
    for e in graph.edges() {
        let (nu, nv) = (graph.neighbors(e.a), graph.neighbors(e.b));
        let (mut i, mut j) = (0, 0);
        while i < nu.len() && j < nv.len() {
            match nu[i].cmp(&nv[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    if nu[i] > e.b {
                        triangles += 1;
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    let component_sizes: Vec<usize> = component_indices(graph).iter().map(Vec::len).collect();
    let clustering_coefficient = if connected_triples == 0 {
        0.0
    } else {
        3.0 * triangles as f64 / connected_triples as f64
    };
    GraphSummary {
        node_count: n,
        edge_count: graph.edge_count(),
        component_count: component_sizes.len(),
        component_sizes,
        degree_histogram,
        triangles,
        connected_triples,
        clustering_coefficient,
    }
}

fn bfs_depths(graph: &CompanyGraph, start: usize, radius: Option<usize>) -> Vec<Option<usize>> {
    let mut depth = vec![None; graph.node_count()];
    depth[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let du = depth[u].expect("queued nodes have a depth");
        if radius.is_some_and(|r| du >= r) {
            continue;
        }
        for &v in graph.neighbors(u) {
            if depth[v].is_none() {
                depth[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    depth
}

/// Induced subgraph of every node within `radius` hops of `ticker`.
pub fn neighborhood(graph: &CompanyGraph, ticker: &str, radius: usize) -> Result<CompanyGraph> {
    let start = graph.require(ticker)?;
    let members: Vec<usize> = bfs_depths(graph, start, Some(radius))
        .iter()
        .enumerate()
        .filter_map(|(i, d)| d.map(|_| i))
        .collect();
    Ok(graph.induced(&members))
}

/// Shortest-path hop count; `None` when either ticker is absent from the
/// graph or the two are disconnected. A ticker is at distance 0 from itself.
pub fn hop_distance(graph: &CompanyGraph, from: &str, to: &str) -> Option<usize> {
    if from == to {
        return Some(0);
    }
    let (a, b) = (graph.index_of(from)?, graph.index_of(to)?);
    bfs_depths(graph, a, None)[b]
}
