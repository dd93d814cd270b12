//! Independent oracles and fixtures shared by the integration tests. Nothing
//! here calls the kernels it checks.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stocknet::{CompanyGraph, CorrelationMatrix, ReturnMode, ReturnsPanel};

// ---------------------------------------------------------------------------
// double-double arithmetic

/// Unevaluated sum `hi + lo` with about 106 bits of significand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let d = quick_two_sum(s, e + t);
        quick_two_sum(d.hi, d.lo + f)
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::new(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::new(q2)));
        let q3 = r.hi / o.hi;
        quick_two_sum(q1, q2).add(Dd::new(q3))
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let s = Dd::new(self.hi.sqrt());
        // one Newton step doubles the precision
        s.add(self.sub(s.mul(s)).div(s.mul(Dd::new(2.0))))
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Eq. 1 evaluated literally in double-double: population covariance over the
/// product of population standard deviations, on pairwise-complete rows.
/// Absent when the overlap is short or either side is constant on it.
pub fn eq1_oracle(x: &[Option<f64>], y: &[Option<f64>], min_overlap: usize) -> (Option<f64>, usize) {
    let pairs: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .collect();
    let n = pairs.len();
    if n < min_overlap || n == 0 {
        return (None, n);
    }
    let flat = |k: usize| {
        let first = if k == 0 { pairs[0].0 } else { pairs[0].1 };
        pairs.iter().all(|p| (if k == 0 { p.0 } else { p.1 }) == first)
    };
    if flat(0) || flat(1) {
        return (None, n);
    }
    let nn = Dd::new(n as f64);
    let mut sx = Dd::ZERO;
    let mut sy = Dd::ZERO;
    for &(a, b) in &pairs {
        sx = sx.add(Dd::new(a));
        sy = sy.add(Dd::new(b));
    }
    let (mx, my) = (sx.div(nn), sy.div(nn));
    let mut cxy = Dd::ZERO;
    let mut cxx = Dd::ZERO;
    let mut cyy = Dd::ZERO;
    for &(a, b) in &pairs {
        let dx = Dd::new(a).sub(mx);
        let dy = Dd::new(b).sub(my);
        cxy = cxy.add(dx.mul(dy));
        cxx = cxx.add(dx.mul(dx));
        cyy = cyy.add(dy.mul(dy));
    }
    let cov = cxy.div(nn);
    let sd_x = cxx.div(nn).sqrt();
    let sd_y = cyy.div(nn).sqrt();
    (Some(cov.div(sd_x.mul(sd_y)).to_f64()), n)
}

// ---------------------------------------------------------------------------
// fixtures

pub fn dates(n: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
    (0..n).map(|i| start + chrono::Days::new(i as u64)).collect()
}

pub fn ticker_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("T{i:02}")).collect()
}

/// Random returns panel with gaps and deliberately awkward columns:
/// constants, affine copies and negations of earlier columns, and columns
/// that are almost entirely missing.
pub fn random_gapped_panel(rng: &mut ChaCha8Rng, max_tickers: usize, max_rows: usize) -> ReturnsPanel {
    let k = rng.random_range(2..=max_tickers);
    let rows = rng.random_range(2..=max_rows);
    let mut columns: Vec<Vec<Option<f64>>> = Vec::with_capacity(k);
    for j in 0..k {
        let gap_rate = match rng.random_range(0..4) {
            0 => 0.0,
            1 => 0.1,
            2 => 0.4,
            _ => 0.9,
        };
        let kind = rng.random_range(0..8);
        let col: Vec<Option<f64>> = (0..rows)
            .map(|t| {
                let v = match kind {
                    0 => 0.25,
                    1 if j > 0 => columns[0][t].map_or(0.5, |v| -3.0 * v + 1.0),
                    2 if j > 0 => columns[j - 1][t].map_or(-0.1, |v| 1e-3 * v + 1e3),
                    3 => rng.random_range(-1.0..1.0) * 1e-6,
                    _ => rng.random_range(-0.1..0.1),
                };
                (!rng.random_bool(gap_rate)).then_some(v)
            })
            .collect();
        columns.push(col);
    }
    ReturnsPanel::new(dates(rows), ticker_names(k), columns, ReturnMode::Simple).unwrap()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric random matrix with some absent entries and values on a grid so
/// threshold ties occur.
pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CorrelationMatrix {
    let mut rho = vec![vec![None; n]; n];
    for i in 0..n {
        rho[i][i] = Some(1.0);
        for j in i + 1..n {
            let v = if rng.random_bool(0.1) {
                None
            } else if rng.random_bool(0.3) {
                Some(rng.random_range(-10..=10) as f64 / 10.0)
            } else {
                Some(rng.random_range(-1.0..=1.0))
            };
            rho[i][j] = v;
            rho[j][i] = v;
        }
    }
    CorrelationMatrix::from_parts(ticker_names(n), rho, None, 1).unwrap()
}

/// Erdős–Rényi graph on `n` named nodes; isolated nodes vanish on
/// construction.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> CompanyGraph {
    let names = ticker_names(n);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((names[i].clone(), names[j].clone(), 0.9));
            }
        }
    }
    CompanyGraph::from_edges(0.5, edges).unwrap()
}

// ---------------------------------------------------------------------------
// structure oracles

fn adjacency_matrix(g: &CompanyGraph) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut adj = vec![vec![false; n]; n];
    for e in g.edges() {
        let (a, b) = (e.a, e.b);
        adj[a][b] = true;
        adj[b][a] = true;
    }
    adj
}

/// Components from the Warshall transitive closure.
pub fn closure_components(g: &CompanyGraph) -> BTreeSet<BTreeSet<String>> {
    let n = g.node_count();
    let mut reach = adjacency_matrix(g);
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| reach[i][j])
                .map(|j| g.nodes()[j].clone())
                .collect()
        })
        .collect()
}

/// Maximal cliques of size ≥ `min_size` by enumerating every node subset.
pub fn enumerated_cliques(g: &CompanyGraph, min_size: usize) -> BTreeSet<Vec<String>> {
    let n = g.node_count();
    assert!(n <= 20, "subset enumeration is exponential");
    let adj = adjacency_matrix(g);
    let masks: Vec<u32> = (0..n)
        .map(|i| (0..n).filter(|&j| adj[i][j]).fold(0u32, |m, j| m | 1 << j))
        .collect();
    let mut out = BTreeSet::new();
    for s in 1u32..(1u32 << n) {
        if (s.count_ones() as usize) < min_size {
            continue;
        }
        let members = (0..n).filter(|&v| s & (1 << v) != 0);
        let is_clique = members.clone().all(|v| (masks[v] | 1 << v) & s == s);
        if !is_clique {
            continue;
        }
        let maximal = (0..n).all(|u| s & (1 << u) != 0 || masks[u] & s != s);
        if maximal {
            out.insert(members.map(|v| g.nodes()[v].clone()).collect());
        }
    }
    out
}

/// Triangles by testing every node triple.
pub fn cubic_triangles(g: &CompanyGraph) -> u64 {
    let adj = adjacency_matrix(g);
    let n = g.node_count();
    let mut count = 0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if adj[i][j] && adj[j][k] && adj[i][k] {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Nodes within `radius` hops and the edges among them.
pub fn bfs_ball(g: &CompanyGraph, start: &str, radius: usize) -> (BTreeSet<String>, BTreeSet<(String, String)>) {
    let adj = adjacency_matrix(g);
    let s = g.index_of(start).unwrap();
    let mut dist = vec![usize::MAX; g.node_count()];
    dist[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for v in 0..g.node_count() {
            if adj[u][v] && dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let inside: HashSet<usize> = (0..g.node_count()).filter(|&v| dist[v] <= radius).collect();
    let nodes = inside.iter().map(|&v| g.nodes()[v].clone()).collect();
    let edges = g
        .edges()
        .iter()
        .filter(|e| inside.contains(&e.a) && inside.contains(&e.b))
        .map(|e| (g.nodes()[e.a].clone(), g.nodes()[e.b].clone()))
        .collect();
    (nodes, edges)
}

// ---------------------------------------------------------------------------
// invariant checks

/// Matrix invariants against the returns they were computed from. Returns a
/// description of the first violation.
pub fn check_matrix_invariants(returns: &ReturnsPanel, m: &CorrelationMatrix) -> Result<(), String> {
    let n = m.len();
    if m.tickers() != returns.tickers() {
        return Err("ticker order differs from returns".into());
    }
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (m.rho(i, j), m.rho(j, i));
            if a.map(f64::to_bits) != b.map(f64::to_bits) {
                return Err(format!("asymmetric at ({i},{j}): {a:?} vs {b:?}"));
            }
            if m.overlap(i, j) != m.overlap(j, i) {
                return Err(format!("asymmetric overlap at ({i},{j})"));
            }
            if let Some(v) = a {
                if !(-1.0..=1.0).contains(&v) || v.is_nan() {
                    return Err(format!("out of range at ({i},{j}): {v}"));
                }
            }
            let floor = if i == j { 2 } else { m.min_overlap() };
            let (x, y) = (returns.column(i), returns.column(j));
            let shared: Vec<(f64, f64)> = x
                .iter()
                .zip(y)
                .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
                .collect();
            if shared.len() != m.overlap(i, j) {
                return Err(format!("overlap at ({i},{j}) is {} not {}", m.overlap(i, j), shared.len()));
            }
            let constant = |k: usize| {
                let vals: Vec<f64> = shared.iter().map(|p| if k == 0 { p.0 } else { p.1 }).collect();
                vals.windows(2).all(|w| w[0] == w[1])
            };
            let expect_absent = shared.len() < floor.max(1) || constant(0) || constant(1);
            if expect_absent != a.is_none() {
                return Err(format!(
                    "absence at ({i},{j}) is {} but overlap {} / floor {floor} / constant {}",
                    a.is_none(),
                    shared.len(),
                    constant(0) || constant(1)
                ));
            }
            if i == j && a.is_some_and(|v| v != 1.0) {
                return Err(format!("diagonal ({i},{i}) is {a:?}"));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// GEXF 1.2 structural validation

const GEXF_NS: &str = "http://www.gexf.net/1.2draft";

/// Checks the constraints of the GEXF 1.2draft schema that this exporter can
/// exercise: element nesting and order, required attributes, enumerated
/// attribute values, numeric types, id uniqueness, declared counts and
/// referential integrity of edges and attribute values.
pub fn validate_gexf(text: &str) -> Result<(), String> {
    let doc = roxmltree::Document::parse(text).map_err(|e| format!("not well-formed: {e}"))?;
    let root = doc.root_element();
    expect_name(root, "gexf")?;
    if root.attribute("version") != Some("1.2") {
        return Err("gexf@version must be 1.2".into());
    }
    let children: Vec<_> = root.children().filter(|n| n.is_element()).collect();
    let names: Vec<&str> = children.iter().map(|n| n.tag_name().name()).collect();
    if names != ["meta", "graph"] && names != ["graph"] {
        return Err(format!("gexf children must be (meta?, graph), got {names:?}"));
    }
    if let Some(meta) = children.iter().find(|n| n.has_tag_name((GEXF_NS, "meta"))) {
        for c in meta.children().filter(|n| n.is_element()) {
            let allowed = ["creator", "keywords", "description"];
            if !allowed.contains(&c.tag_name().name()) || c.tag_name().namespace() != Some(GEXF_NS) {
                return Err(format!("unexpected meta child {:?}", c.tag_name()));
            }
        }
    }
    let graph = *children.last().unwrap();
    expect_name(graph, "graph")?;
    check_enum(graph, "mode", &["static", "dynamic"])?;
    check_enum(graph, "defaultedgetype", &["directed", "undirected", "mutual"])?;

    let mut declared: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut seen_nodes = false;
    let mut seen_edges = false;
    let mut node_ids = HashSet::new();
    for section in graph.children().filter(|n| n.is_element()) {
        match section.tag_name().name() {
            "attributes" => {
                if seen_nodes || seen_edges {
                    return Err("attributes must precede nodes and edges".into());
                }
                expect_name(section, "attributes")?;
                let class = section.attribute("class").ok_or("attributes@class is required")?;
                if !["node", "edge"].contains(&class) {
                    return Err(format!("attributes@class '{class}'"));
                }
                check_enum(section, "mode", &["static", "dynamic"])?;
                let ids = declared.entry(class.to_owned()).or_default();
                for a in section.children().filter(|n| n.is_element()) {
                    expect_name(a, "attribute")?;
                    let id = a.attribute("id").ok_or("attribute@id is required")?;
                    a.attribute("title").ok_or("attribute@title is required")?;
                    check_enum(
                        a,
                        "type",
                        &["integer", "long", "double", "float", "boolean", "liststring", "string", "anyURI"],
                    )?;
                    if a.attribute("type").is_none() {
                        return Err("attribute@type is required".into());
                    }
                    if !ids.insert(id.to_owned()) {
                        return Err(format!("duplicate attribute id {id}"));
                    }
                }
            }
            "nodes" => {
                if seen_nodes || seen_edges {
                    return Err("nodes must appear once, before edges".into());
                }
                seen_nodes = true;
                expect_name(section, "nodes")?;
                let nodes: Vec<_> = section.children().filter(|n| n.is_element()).collect();
                check_count(section, nodes.len())?;
                for node in nodes {
                    expect_name(node, "node")?;
                    let id = node.attribute("id").ok_or("node@id is required")?;
                    if !node_ids.insert(id.to_owned()) {
                        return Err(format!("duplicate node id {id}"));
                    }
                    for c in node.children().filter(|n| n.is_element()) {
                        expect_name(c, "attvalues")?;
                        for v in c.children().filter(|n| n.is_element()) {
                            expect_name(v, "attvalue")?;
                            let key = v.attribute("for").ok_or("attvalue@for is required")?;
                            v.attribute("value").ok_or("attvalue@value is required")?;
                            if !declared.get("node").is_some_and(|d| d.contains(key)) {
                                return Err(format!("attvalue for undeclared attribute {key}"));
                            }
                        }
                    }
                }
            }
            "edges" => {
                if seen_edges {
                    return Err("edges must appear once".into());
                }
                seen_edges = true;
                expect_name(section, "edges")?;
                let edges: Vec<_> = section.children().filter(|n| n.is_element()).collect();
                check_count(section, edges.len())?;
                let mut edge_ids = HashSet::new();
                for e in edges {
                    expect_name(e, "edge")?;
                    let id = e.attribute("id").ok_or("edge@id is required")?;
                    if !edge_ids.insert(id) {
                        return Err(format!("duplicate edge id {id}"));
                    }
                    for end in ["source", "target"] {
                        let v = e.attribute(end).ok_or(format!("edge@{end} is required"))?;
                        if !node_ids.contains(v) {
                            return Err(format!("edge {id} {end} '{v}' is not a node"));
                        }
                    }
                    check_enum(e, "type", &["directed", "undirected", "mutual"])?;
                    if let Some(w) = e.attribute("weight") {
                        let w: f64 = w.parse().map_err(|_| format!("edge {id} weight '{w}' is not a float"))?;
                        if !w.is_finite() {
                            return Err(format!("edge {id} weight not finite"));
                        }
                    }
                }
            }
            other => return Err(format!("unexpected graph child {other}")),
        }
    }
    Ok(())
}

fn expect_name(node: roxmltree::Node, name: &str) -> Result<(), String> {
    if node.has_tag_name((GEXF_NS, name)) {
        Ok(())
    } else {
        Err(format!("expected {{{GEXF_NS}}}{name}, got {:?}", node.tag_name()))
    }
}

fn check_enum(node: roxmltree::Node, attr: &str, allowed: &[&str]) -> Result<(), String> {
    match node.attribute(attr) {
        Some(v) if !allowed.contains(&v) => Err(format!("{}@{attr} = '{v}'", node.tag_name().name())),
        _ => Ok(()),
    }
}

fn check_count(node: roxmltree::Node, actual: usize) -> Result<(), String> {
    match node.attribute("count") {
        Some(c) => match c.parse::<usize>() {
            Ok(c) if c == actual => Ok(()),
            _ => Err(format!("{}@count = {c}, found {actual}", node.tag_name().name())),
        },
        None => Ok(()),
    }
}

/// Small helper: all files in a directory as name -> bytes.
pub fn read_dir_bytes(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            out.insert(
                entry.file_name().to_string_lossy().into_owned(),
                std::fs::read(entry.path()).unwrap(),
            );
        }
    }
    out
}

/// Exposes one `Rng` trait import for test files.
pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}
