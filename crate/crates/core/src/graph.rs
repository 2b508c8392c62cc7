//! Weighted undirected simple graphs, their ingestion formats, synthetic
//! generators and Laplacians.
//!
//! Nodes are dense ids `0..n`. When an edge list uses non-numeric labels they
//! are mapped to ids in order of first appearance and the label table is kept
//! on the graph.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
    positions: Option<Vec<[f64; 2]>>,
    labels: Option<Vec<String>>,
}

impl Graph {
    /// Builds a graph from an edge list, enforcing the simple-graph invariants.
    ///
    /// Edges are stored with `u < v`. The `record` reported in errors is the
    /// index of the offending edge.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let records = edges.into_iter().enumerate().map(|(i, (u, v, w))| (i, u, v, w));
        Self::from_records(n, records)
    }

    fn from_records(n: usize, records: impl IntoIterator<Item = (usize, usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph("graph has no nodes".into()));
        }
        let mut seen = HashSet::new();
        let mut edges = Vec::new();
        let mut adjacency = vec![Vec::new(); n];
        for (record, u, v, w) in records {
            for node in [u, v] {
                if node >= n {
                    return Err(Error::InvalidNode { node, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop { node: u, record });
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::NonPositiveWeight {
                    u,
                    v,
                    weight: w,
                    record,
                });
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            if !seen.insert((a, b)) {
                return Err(Error::DuplicateEdge { u: a, v: b, record });
            }
            edges.push(Edge { u: a, v: b, w });
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(v, _)| v);
        }
        Ok(Graph {
            n,
            edges,
            adjacency,
            positions: None,
            labels: None,
        })
    }

    pub fn with_positions(mut self, positions: Vec<[f64; 2]>) -> Result<Self> {
        if positions.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: positions.len(),
            });
        }
        self.positions = Some(positions);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `v` with edge weights, sorted by neighbor id.
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    pub fn positions(&self) -> Option<&[[f64; 2]]> {
        self.positions.as_deref()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn weighted_degree(&self, v: usize) -> f64 {
        self.adjacency[v].iter().map(|&(_, w)| w).sum()
    }

    pub fn check_node(&self, node: usize) -> Result<()> {
        if node < self.n {
            Ok(())
        } else {
            Err(Error::InvalidNode { node, n: self.n })
        }
    }

    /// Component index per node; components are numbered by smallest member.
    pub fn connected_components(&self) -> (usize, Vec<usize>) {
        let mut comp = vec![usize::MAX; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = count;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adjacency[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (count, comp)
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components().0 == 1
    }

    pub fn to_json(&self) -> String {
        let nodes = (0..self.n)
            .map(|id| JsonNode {
                id,
                pos: self.positions.as_ref().map(|p| p[id]),
                label: self.labels.as_ref().map(|l| l[id].clone()),
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|e| JsonEdge {
                u: e.u,
                v: e.v,
                w: Some(e.w),
            })
            .collect();
        serde_json::to_string_pretty(&JsonGraph {
            nodes: Some(nodes),
            edges,
        })
        .expect("graph serialization is infallible")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    EdgeList,
    Json,
}

impl GraphFormat {
    /// `.json` files are JSON, everything else is an edge list.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => GraphFormat::Json,
            _ => GraphFormat::EdgeList,
        }
    }
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge-list" | "edgelist" | "edges" => Ok(GraphFormat::EdgeList),
            "json" => Ok(GraphFormat::Json),
            other => Err(Error::InvalidParameter(format!("unknown graph format {other:?}"))),
        }
    }
}

pub fn load_graph(path: &Path, format: GraphFormat) -> Result<Graph> {
    let text = std::fs::read_to_string(path)?;
    match format {
        GraphFormat::EdgeList => parse_edge_list(&text),
        GraphFormat::Json => parse_graph_json(&text),
    }
}

/// Parses `u v [w]` lines. `#` starts a comment.
///
/// If every endpoint token is a non-negative integer the tokens are used as
/// node ids directly (n = max id + 1). Otherwise all tokens are treated as
/// labels and numbered by first appearance.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() < 2 || tokens.len() > 3 {
            return Err(Error::Parse {
                line,
                msg: format!("expected `u v [w]`, found {} fields", tokens.len()),
            });
        }
        let w = match tokens.get(2) {
            Some(tok) => tok.parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("invalid weight {tok:?}"),
            })?,
            None => 1.0,
        };
        if w.is_nan() {
            return Err(Error::Parse {
                line,
                msg: "weight is NaN".into(),
            });
        }
        rows.push((line, tokens[0], tokens[1], w));
    }

    let numeric = rows
        .iter()
        .all(|(_, a, b, _)| a.parse::<usize>().is_ok() && b.parse::<usize>().is_ok());
    if numeric {
        let mut records = Vec::with_capacity(rows.len());
        let mut n = 0usize;
        for &(line, a, b, w) in &rows {
            let u: usize = a.parse().expect("checked numeric");
            let v: usize = b.parse().expect("checked numeric");
            if u.max(v) >= MAX_NODES {
                return Err(Error::Parse {
                    line,
                    msg: format!("node id {} exceeds the supported maximum", u.max(v)),
                });
            }
            n = n.max(u + 1).max(v + 1);
            records.push((line, u, v, w));
        }
        if n == 0 {
            return Err(Error::EmptyGraph("edge list has no edges".into()));
        }
        Graph::from_records(n, records)
    } else {
        let mut ids: HashMap<&'_ str, usize> = HashMap::new();
        let mut labels = Vec::new();
        let mut records = Vec::with_capacity(rows.len());
        for &(line, a, b, w) in &rows {
            let mut id_of = |tok| -> usize {
                *ids.entry(tok).or_insert_with(|| {
                    labels.push(tok.to_string());
                    labels.len() - 1
                })
            };
            let u = id_of(a);
            let v = id_of(b);
            records.push((line, u, v, w));
        }
        let g = Graph::from_records(labels.len(), records)?;
        g.with_labels(labels)
    }
}

/// Upper bound on node ids accepted from text input; dense matrices beyond
/// this are out of reach anyway.
const MAX_NODES: usize = 1 << 20;

#[derive(Debug, Serialize, Deserialize)]
struct JsonGraph {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nodes: Option<Vec<JsonNode>>,
    edges: Vec<JsonEdge>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonNode {
    id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pos: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonEdge {
    u: usize,
    v: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w: Option<f64>,
}

/// Parses `{"nodes":[{"id":..,"pos":[x,y]?}..],"edges":[{"u":..,"v":..,"w":..?}..]}`.
///
/// When `nodes` is present its ids must be exactly `0..len`. Positions must be
/// given for every node or for none.
pub fn parse_graph_json(text: &str) -> Result<Graph> {
    let raw: JsonGraph = serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
    let (n, positions, labels) = match &raw.nodes {
        Some(nodes) => {
            let n = nodes.len();
            let mut pos: Vec<Option<[f64; 2]>> = vec![None; n];
            let mut lab: Vec<Option<String>> = vec![None; n];
            let mut seen = vec![false; n];
            for node in nodes {
                if node.id >= n {
                    return Err(Error::Json(format!("node id {} is not in 0..{n}", node.id)));
                }
                if std::mem::replace(&mut seen[node.id], true) {
                    return Err(Error::Json(format!("node id {} listed twice", node.id)));
                }
                pos[node.id] = node.pos;
                lab[node.id] = node.label.clone();
            }
            let positions = collect_all_or_none(pos, "pos")?;
            if let Some(p) = &positions {
                if p.iter().flatten().any(|c| !c.is_finite()) {
                    return Err(Error::Json("node positions must be finite".into()));
                }
            }
            let labels = collect_all_or_none(lab, "label")?;
            (n, positions, labels)
        }
        None => {
            let n = raw
                .edges
                .iter()
                .map(|e| e.u.max(e.v).saturating_add(1))
                .max()
                .unwrap_or(0);
            (n, None, None)
        }
    };
    if n > MAX_NODES {
        return Err(Error::Json(format!("{n} nodes exceed the supported maximum")));
    }
    let records = raw
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| (i, e.u, e.v, e.w.unwrap_or(1.0)));
    let mut g = Graph::from_records(n, records)?;
    if let Some(p) = positions {
        g = g.with_positions(p)?;
    }
    if let Some(l) = labels {
        g = g.with_labels(l)?;
    }
    Ok(g)
}

fn collect_all_or_none<T>(items: Vec<Option<T>>, field: &str) -> Result<Option<Vec<T>>> {
    let present = items.iter().filter(|x| x.is_some()).count();
    if present == 0 {
        Ok(None)
    } else if present == items.len() {
        Ok(Some(items.into_iter().map(|x| x.expect("all present")).collect()))
    } else {
        Err(Error::Json(format!(
            "`{field}` must be given for all nodes or for none"
        )))
    }
}

/// Parses a 2-D point cloud: one `x y` or `x,y` pair per line, `#` comments.
pub fn parse_points(text: &str) -> Result<Vec<[f64; 2]>> {
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = content
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 2 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 2 coordinates, found {}", fields.len()),
            });
        }
        let mut xy = [0.0; 2];
        for (slot, tok) in xy.iter_mut().zip(&fields) {
            *slot = tok
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("invalid coordinate {tok:?}"),
                })?;
        }
        points.push(xy);
    }
    Ok(points)
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Thins `points` in input order (a point survives if it is at least
/// `thin_radius` away from every earlier survivor), then links every pair of
/// survivors within `link_radius` with a unit-weight edge.
pub fn generate_points_graph(points: &[[f64; 2]], thin_radius: f64, link_radius: f64) -> Result<Graph> {
    if !(link_radius > 0.0) || !link_radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "link radius must be positive, got {link_radius}"
        )));
    }
    if !(thin_radius >= 0.0) || !thin_radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "thin radius must be non-negative, got {thin_radius}"
        )));
    }
    let thin2 = thin_radius * thin_radius;
    let mut kept: Vec<[f64; 2]> = Vec::new();
    for &p in points {
        if kept.iter().all(|&q| dist2(p, q) >= thin2) {
            kept.push(p);
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyGraph("no points survived thinning".into()));
    }
    let link2 = link_radius * link_radius;
    let mut edges = Vec::new();
    for i in 0..kept.len() {
        for j in i + 1..kept.len() {
            if dist2(kept[i], kept[j]) <= link2 {
                edges.push((i, j, 1.0));
            }
        }
    }
    Graph::new(kept.len(), edges)?.with_positions(kept)
}

/// `count` points drawn uniformly from the unit square.
///
/// The stream is ChaCha8 seeded with `seed`, on stream `attempt`; each point
/// consumes two `f64` draws (x then y).
pub fn uniform_points(count: usize, seed: u64, attempt: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt);
    (0..count).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect()
}

/// Default link radius for the synthetic sensor graph. With 79 points it
/// yields a little over 210 edges on average.
pub const SENSOR_LINK_RADIUS: f64 = 0.16;
const SENSOR_MAX_ATTEMPTS: u64 = 1000;

/// Random geometric "sensor" graph on the unit square.
///
/// Point sets are drawn with [`uniform_points`] on streams 0, 1, 2, ... and
/// the first one whose radius graph is connected is returned.
pub fn sensor_graph(count: usize, seed: u64, link_radius: f64) -> Result<Graph> {
    if count == 0 {
        return Err(Error::EmptyGraph("sensor graph needs at least one node".into()));
    }
    for attempt in 0..SENSOR_MAX_ATTEMPTS {
        let points = uniform_points(count, seed, attempt);
        let g = generate_points_graph(&points, 0.0, link_radius)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::InvalidParameter(format!(
        "no connected sensor graph with {count} nodes and radius {link_radius} after {SENSOR_MAX_ATTEMPTS} draws"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LaplacianKind {
    #[default]
    Standard,
    Normalized,
}

impl fmt::Display for LaplacianKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LaplacianKind::Standard => "standard",
            LaplacianKind::Normalized => "normalized",
        })
    }
}

impl FromStr for LaplacianKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(LaplacianKind::Standard),
            "normalized" => Ok(LaplacianKind::Normalized),
            other => Err(Error::InvalidParameter(format!("unknown Laplacian {other:?}"))),
        }
    }
}

/// `D - A` for [`LaplacianKind::Standard`], `D^-1/2 (D - A) D^-1/2` for
/// [`LaplacianKind::Normalized`].
pub fn laplacian(g: &Graph, kind: LaplacianKind) -> Result<DMatrix<f64>> {
    let n = g.node_count();
    let degree: Vec<f64> = (0..n).map(|v| g.weighted_degree(v)).collect();
    let mut l = DMatrix::zeros(n, n);
    match kind {
        LaplacianKind::Standard => {
            for v in 0..n {
                l[(v, v)] = degree[v];
            }
            for e in g.edges() {
                l[(e.u, e.v)] = -e.w;
                l[(e.v, e.u)] = -e.w;
            }
        }
        LaplacianKind::Normalized => {
            if let Some(v) = degree.iter().position(|&d| d <= 0.0) {
                return Err(Error::IsolatedNode(v));
            }
            for v in 0..n {
                l[(v, v)] = 1.0;
            }
            for e in g.edges() {
                let x = -e.w / (degree[e.u] * degree[e.v]).sqrt();
                l[(e.u, e.v)] = x;
                l[(e.v, e.u)] = x;
            }
        }
    }
    Ok(l)
}

/// The `n_sel` nodes of largest weighted degree; ties go to the smaller id.
pub fn degree_top_n(g: &Graph, n_sel: usize) -> Result<Vec<usize>> {
    if n_sel > g.node_count() {
        return Err(Error::Budget {
            requested: n_sel,
            available: g.node_count(),
        });
    }
    let degree: Vec<f64> = (0..g.node_count()).map(|v| g.weighted_degree(v)).collect();
    let mut order: Vec<usize> = (0..g.node_count()).collect();
    order.sort_by(|&a, &b| degree[b].total_cmp(&degree[a]).then(a.cmp(&b)));
    order.truncate(n_sel);
    Ok(order)
}
