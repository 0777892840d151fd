//! Oriented weighted multigraphs: the combinatorial data underlying every
//! other module.
//!
//! Graphs are finite, allow parallel edges and loops, and may carry a set of
//! `boundary` vertices marking where an infinite family was truncated.
//! Fairness-style checks elsewhere skip boundary vertices; everything here is
//! plain graph plumbing.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single oriented edge. `src` and `dst` refer to vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub src: String,
    pub dst: String,
}

/// Finite oriented multigraph with opaque string ids and optional boundary
/// flags for truncated windows of infinite graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientedGraph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    boundary: BTreeSet<String>,
    vertex_index: HashMap<String, usize>,
    edge_index: HashMap<String, usize>,
}

impl OrientedGraph {
    pub fn new<V, E, B>(vertices: V, edges: E, boundary: B) -> Result<Self>
    where
        V: IntoIterator<Item = String>,
        E: IntoIterator<Item = Edge>,
        B: IntoIterator<Item = String>,
    {
        let vertices: Vec<String> = vertices.into_iter().collect();
        let edges: Vec<Edge> = edges.into_iter().collect();

        let mut vertex_index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if vertex_index.insert(v.clone(), i).is_some() {
                return Err(Error::Schema(format!("vertices: duplicate vertex id {v:?}")));
            }
        }
        let mut edge_index = HashMap::new();
        for (i, e) in edges.iter().enumerate() {
            if edge_index.insert(e.id.clone(), i).is_some() {
                return Err(Error::Schema(format!("edges[{i}].id: duplicate edge id {:?}", e.id)));
            }
            if !vertex_index.contains_key(&e.src) {
                return Err(Error::Schema(format!(
                    "edges[{i}].src: vertex {:?} is not declared",
                    e.src
                )));
            }
            if !vertex_index.contains_key(&e.dst) {
                return Err(Error::Schema(format!(
                    "edges[{i}].dst: vertex {:?} is not declared",
                    e.dst
                )));
            }
        }
        let mut bset = BTreeSet::new();
        for b in boundary {
            if !vertex_index.contains_key(&b) {
                return Err(Error::Schema(format!("boundary: vertex {b:?} is not declared")));
            }
            bset.insert(b);
        }
        Ok(OrientedGraph { vertices, edges, boundary: bset, vertex_index, edge_index })
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn boundary(&self) -> &BTreeSet<String> {
        &self.boundary
    }

    pub fn is_boundary(&self, v: &str) -> bool {
        self.boundary.contains(v)
    }

    /// Vertices not flagged as boundary, in declaration order.
    pub fn interior_vertices(&self) -> impl Iterator<Item = &String> {
        self.vertices.iter().filter(move |v| !self.boundary.contains(*v))
    }

    pub fn has_vertex(&self, v: &str) -> bool {
        self.vertex_index.contains_key(v)
    }

    pub fn vertex_position(&self, v: &str) -> Result<usize> {
        self.vertex_index.get(v).copied().ok_or_else(|| Error::UnknownVertex(v.to_owned()))
    }

    pub fn edge(&self, id: &str) -> Result<&Edge> {
        self.edge_index
            .get(id)
            .map(|&i| &self.edges[i])
            .ok_or_else(|| Error::UnknownEdge(id.to_owned()))
    }

    /// Edges leaving `v`, in declaration order.
    pub fn out_edges<'a>(&'a self, v: &'a str) -> impl Iterator<Item = &'a Edge> {
        self.edges.iter().filter(move |e| e.src == v)
    }

    /// Edges arriving at `v`, in declaration order.
    pub fn in_edges<'a>(&'a self, v: &'a str) -> impl Iterator<Item = &'a Edge> {
        self.edges.iter().filter(move |e| e.dst == v)
    }

    /// Number of edges from `v` to `w` (a loop v→v counts once).
    pub fn edge_count(&self, v: &str, w: &str) -> usize {
        self.edges.iter().filter(|e| e.src == v && e.dst == w).count()
    }

    pub fn out_degree(&self, v: &str) -> usize {
        self.out_edges(v).count()
    }

    pub fn loop_count(&self, v: &str) -> usize {
        self.edges.iter().filter(|e| e.src == v && e.dst == v).count()
    }

    /// Max out-degree together with the `deg(Γ) ≤ T²` bound check.
    pub fn degree_bound_check(&self, t: f64) -> (usize, bool) {
        let degree = self.vertices.iter().map(|v| self.out_degree(v)).max().unwrap_or(0);
        (degree, (degree as f64) <= t * t)
    }

    /// Connectivity of the underlying undirected graph.
    pub fn is_connected(&self) -> bool {
        if self.vertices.is_empty() {
            return true;
        }
        let n = self.vertices.len();
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            let s = self.vertex_index[&e.src];
            let t = self.vertex_index[&e.dst];
            adj[s].push(t);
            adj[t].push(s);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == n
    }

    /// Undirected graph distance from every vertex to the nearest boundary
    /// vertex; `usize::MAX` when unreachable or no boundary exists.
    pub fn distance_to_boundary(&self) -> HashMap<String, usize> {
        let n = self.vertices.len();
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            let s = self.vertex_index[&e.src];
            let t = self.vertex_index[&e.dst];
            adj[s].push(t);
            adj[t].push(s);
        }
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for b in &self.boundary {
            let i = self.vertex_index[b];
            dist[i] = 0;
            queue.push_back(i);
        }
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        self.vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), dist[i]))
            .collect()
    }

    /// DOT rendering. Edge labels carry weights to 6 significant digits when
    /// a cost is supplied.
    pub fn to_dot(&self, cost: Option<&Cost>) -> String {
        let mut out = String::from("digraph {\n");
        for v in &self.vertices {
            if self.boundary.contains(v) {
                out.push_str(&format!("  \"{v}\" [style=dashed];\n"));
            } else {
                out.push_str(&format!("  \"{v}\";\n"));
            }
        }
        for e in &self.edges {
            match cost.and_then(|c| c.get(&e.id)) {
                Some(w) => out.push_str(&format!(
                    "  \"{}\" -> \"{}\" [label=\"{}\"];\n",
                    e.src,
                    e.dst,
                    format_sig(w, 6)
                )),
                None => out.push_str(&format!("  \"{}\" -> \"{}\";\n", e.src, e.dst)),
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Positive edge weights keyed by edge id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cost {
    weights: BTreeMap<String, f64>,
}

impl Cost {
    pub fn new(weights: BTreeMap<String, f64>) -> Result<Self> {
        for (id, w) in &weights {
            if !w.is_finite() || *w <= 0.0 {
                return Err(Error::Schema(format!(
                    "weight: edge {id:?} has non-positive or non-finite weight {w}"
                )));
            }
        }
        Ok(Cost { weights })
    }

    pub fn get(&self, edge_id: &str) -> Option<f64> {
        self.weights.get(edge_id).copied()
    }

    pub fn weight(&self, edge_id: &str) -> Result<f64> {
        self.get(edge_id).ok_or_else(|| Error::UnknownEdge(edge_id.to_owned()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, f64)> {
        self.weights.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// True when a weight is present for every edge of `g` and nothing else.
    pub fn covers(&self, g: &OrientedGraph) -> bool {
        self.weights.len() == g.edges().len()
            && g.edges().iter().all(|e| self.weights.contains_key(&e.id))
    }
}

impl FromIterator<(String, f64)> for Cost {
    fn from_iter<I: IntoIterator<Item = (String, f64)>>(iter: I) -> Self {
        Cost { weights: iter.into_iter().collect() }
    }
}

/// The deformation parameter `q` with `0 < |q| ≤ 1`, together with the
/// derived quantities `T = q + q⁻¹` and the q-integers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct DeformationParameter {
    q: f64,
}

impl DeformationParameter {
    pub fn new(q: f64) -> Result<Self> {
        if !q.is_finite() || q == 0.0 || q.abs() > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "q must satisfy 0 < |q| <= 1, got {q}"
            )));
        }
        Ok(DeformationParameter { q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn abs_q(&self) -> f64 {
        self.q.abs()
    }

    pub fn sign(&self) -> f64 {
        if self.q > 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    /// T = q + q⁻¹.
    pub fn t(&self) -> f64 {
        self.q + 1.0 / self.q
    }

    /// |T| = |q| + |q|⁻¹, the constant source cost.
    pub fn abs_t(&self) -> f64 {
        self.q.abs() + 1.0 / self.q.abs()
    }

    /// The q-integer `[n]_q = (q⁻ⁿ − qⁿ)/(q⁻¹ − q)`, with the |q| = 1 limits.
    pub fn q_int(&self, n: u32) -> f64 {
        let q = self.q;
        let n_ = n as f64;
        if (q - 1.0).abs() < 1e-14 {
            return n_;
        }
        if (q + 1.0).abs() < 1e-14 {
            return if n % 2 == 0 { -n_ } else { n_ };
        }
        (q.powi(-(n as i32)) - q.powi(n as i32)) / (1.0 / q - q)
    }

    /// `⟦n⟧ = |[n]_q|`.
    pub fn abs_q_int(&self, n: u32) -> f64 {
        self.q_int(n).abs()
    }
}

impl TryFrom<f64> for DeformationParameter {
    type Error = Error;
    fn try_from(q: f64) -> Result<Self> {
        DeformationParameter::new(q)
    }
}

impl From<DeformationParameter> for f64 {
    fn from(dp: DeformationParameter) -> f64 {
        dp.q
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRecord {
    id: String,
    src: String,
    dst: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DocumentRecord {
    vertices: Vec<String>,
    edges: Vec<EdgeRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    boundary: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
}

/// A parsed graph file: graph, optional cost and optional parameters.
#[derive(Debug, Clone)]
pub struct GraphDocument {
    pub graph: OrientedGraph,
    pub cost: Option<Cost>,
    pub q: Option<f64>,
    pub t: Option<f64>,
}

impl GraphDocument {
    /// Parse the JSON schema
    /// `{"vertices":[..],"edges":[{"id","src","dst","weight"?}],"boundary":[..]?,"q"?,"T"?}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let rec: DocumentRecord =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let edges: Vec<Edge> = rec
            .edges
            .iter()
            .map(|e| Edge { id: e.id.clone(), src: e.src.clone(), dst: e.dst.clone() })
            .collect();
        let graph = OrientedGraph::new(rec.vertices, edges, rec.boundary.unwrap_or_default())?;
        let with_weight = rec.edges.iter().filter(|e| e.weight.is_some()).count();
        let cost = if with_weight == 0 {
            None
        } else if with_weight == rec.edges.len() {
            Some(Cost::new(
                rec.edges
                    .iter()
                    .map(|e| (e.id.clone(), e.weight.unwrap()))
                    .collect(),
            )?)
        } else {
            return Err(Error::Schema(
                "weight: either all edges carry a weight or none does".into(),
            ));
        };
        Ok(GraphDocument { graph, cost, q: rec.q, t: rec.t })
    }

    pub fn to_json(&self) -> String {
        let rec = DocumentRecord {
            vertices: self.graph.vertices().to_vec(),
            edges: self
                .graph
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    id: e.id.clone(),
                    src: e.src.clone(),
                    dst: e.dst.clone(),
                    weight: self.cost.as_ref().and_then(|c| c.get(&e.id)),
                })
                .collect(),
            boundary: if self.graph.boundary().is_empty() {
                None
            } else {
                Some(self.graph.boundary().iter().cloned().collect())
            },
            q: self.q,
            t: self.t,
        };
        serde_json::to_string_pretty(&rec).expect("graph document serialization cannot fail")
    }
}

/// Load a graph (and its cost, when weights are present) from JSON text.
pub fn load_graph(text: &str) -> Result<(OrientedGraph, Option<Cost>)> {
    let doc = GraphDocument::from_json(text)?;
    Ok((doc.graph, doc.cost))
}

/// The n-step graph Γ⁽ⁿ⁾: same vertices, one edge per directed path of
/// length `n`, path weight the product of the step weights.
///
/// The claimed cost parameter is `T' = (−1)ⁿ⁺¹ Tⁿ`. Vertices whose distance-
/// (n−1) out-neighbourhood touches the old boundary are flagged as the new
/// boundary, since their source cost is clipped by the truncation.
pub fn n_step(
    g: &OrientedGraph,
    w: &Cost,
    t: f64,
    n: u32,
) -> Result<(OrientedGraph, Cost, f64)> {
    if n == 0 {
        return Err(Error::InvalidParameter("n-step requires n >= 1".into()));
    }
    if !w.covers(g) {
        return Err(Error::Malformed("cost does not cover the edge set".into()));
    }

    // Directed paths of length n, enumerated depth-first in edge order so the
    // per-(src,dst) numbering is deterministic.
    let mut out_by_vertex: HashMap<&str, Vec<&Edge>> = HashMap::new();
    for e in g.edges() {
        out_by_vertex.entry(e.src.as_str()).or_default().push(e);
    }
    let mut new_edges = Vec::new();
    let mut new_weights = BTreeMap::new();
    let mut counter: HashMap<(String, String), usize> = HashMap::new();
    // DFS over out-edges in declaration order keeps the per-(src,dst)
    // numbering deterministic.
    fn walk(
        w: &Cost,
        out_by_vertex: &HashMap<&str, Vec<&Edge>>,
        src: &str,
        at: &str,
        product: f64,
        remaining: u32,
        counter: &mut HashMap<(String, String), usize>,
        new_edges: &mut Vec<Edge>,
        new_weights: &mut BTreeMap<String, f64>,
    ) {
        if remaining == 0 {
            let key = (src.to_owned(), at.to_owned());
            let k = counter.entry(key).or_insert(0);
            let id = format!("{src}\u{2192}{at}#{k}");
            *k += 1;
            new_edges.push(Edge { id: id.clone(), src: src.to_owned(), dst: at.to_owned() });
            new_weights.insert(id, product);
            return;
        }
        if let Some(outs) = out_by_vertex.get(at) {
            for e in outs {
                let we = w.get(&e.id).unwrap();
                walk(
                    w,
                    out_by_vertex,
                    src,
                    &e.dst,
                    product * we,
                    remaining - 1,
                    counter,
                    new_edges,
                    new_weights,
                );
            }
        }
    }
    for v in g.vertices() {
        walk(w, &out_by_vertex, v, v, 1.0, n, &mut counter, &mut new_edges, &mut new_weights);
    }

    // Grow the boundary: a vertex is reliable only if no old boundary vertex
    // is reachable within n−1 directed steps.
    let mut new_boundary: BTreeSet<String> = g.boundary().clone();
    if n > 1 && !g.boundary().is_empty() {
        for v in g.vertices() {
            if new_boundary.contains(v) {
                continue;
            }
            let mut frontier: HashSet<&str> = HashSet::from([v.as_str()]);
            'steps: for _ in 0..(n - 1) {
                let mut next = HashSet::new();
                for u in frontier {
                    if let Some(outs) = out_by_vertex.get(u) {
                        for e in outs {
                            if g.is_boundary(&e.dst) {
                                new_boundary.insert(v.clone());
                                break 'steps;
                            }
                            next.insert(e.dst.as_str());
                        }
                    }
                }
                frontier = next;
            }
        }
    }

    let graph = OrientedGraph::new(g.vertices().to_vec(), new_edges, new_boundary)?;
    let cost = Cost::new(new_weights)?;
    let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
    Ok((graph, cost, sign * t.powi(n as i32)))
}

/// Witness of a weighted-graph isomorphism: vertex and edge bijections.
#[derive(Debug, Clone, Serialize)]
pub struct IsoWitness {
    pub vertex_map: BTreeMap<String, String>,
    pub edge_map: BTreeMap<String, String>,
}

/// Backtracking search for an isomorphism of weighted oriented multigraphs.
///
/// Vertices are matched respecting boundary flags, degrees and sorted
/// in/out-weight profiles; weights are compared within `tol`.
pub fn find_isomorphism(
    g1: &OrientedGraph,
    w1: &Cost,
    g2: &OrientedGraph,
    w2: &Cost,
    tol: f64,
) -> Option<IsoWitness> {
    if g1.vertices().len() != g2.vertices().len() || g1.edges().len() != g2.edges().len() {
        return None;
    }
    if g1.boundary().len() != g2.boundary().len() {
        return None;
    }
    if !w1.covers(g1) || !w2.covers(g2) {
        return None;
    }

    let profile = |g: &OrientedGraph, w: &Cost, v: &str| -> (bool, usize, usize, Vec<i64>, Vec<i64>) {
        let quantize = |x: f64| (x / tol.max(1e-12)).round() as i64;
        let mut outs: Vec<i64> = g.out_edges(v).map(|e| quantize(w.get(&e.id).unwrap())).collect();
        let mut ins: Vec<i64> = g.in_edges(v).map(|e| quantize(w.get(&e.id).unwrap())).collect();
        outs.sort_unstable();
        ins.sort_unstable();
        (g.is_boundary(v), g.out_degree(v), g.in_edges(v).count(), outs, ins)
    };

    let n = g1.vertices().len();
    let p1: Vec<_> = g1.vertices().iter().map(|v| profile(g1, w1, v)).collect();
    let p2: Vec<_> = g2.vertices().iter().map(|v| profile(g2, w2, v)).collect();

    // Candidate lists, rarest first.
    let mut candidates: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        let c: Vec<usize> = (0..n).filter(|&j| p1[i] == p2[j]).collect();
        if c.is_empty() {
            return None;
        }
        candidates.push(c);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| candidates[i].len());

    // Multiset of weights between an ordered vertex pair.
    let pair_weights = |g: &OrientedGraph, w: &Cost, a: &str, b: &str| -> Vec<i64> {
        let quantize = |x: f64| (x / tol.max(1e-12)).round() as i64;
        let mut ws: Vec<i64> = g
            .edges()
            .iter()
            .filter(|e| e.src == a && e.dst == b)
            .map(|e| quantize(w.get(&e.id).unwrap()))
            .collect();
        ws.sort_unstable();
        ws
    };

    fn backtrack(
        pos: usize,
        order: &[usize],
        candidates: &[Vec<usize>],
        assignment: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        g1: &OrientedGraph,
        w1: &Cost,
        g2: &OrientedGraph,
        w2: &Cost,
        pair_weights: &dyn Fn(&OrientedGraph, &Cost, &str, &str) -> Vec<i64>,
    ) -> bool {
        if pos == order.len() {
            return true;
        }
        let i = order[pos];
        for &j in &candidates[i] {
            if used[j] {
                continue;
            }
            let vi = &g1.vertices()[i];
            let vj = &g2.vertices()[j];
            let mut ok = true;
            for &k in &order[..pos] {
                let uk = assignment[k].unwrap();
                let vk1 = &g1.vertices()[k];
                let vk2 = &g2.vertices()[uk];
                if pair_weights(g1, w1, vi, vk1) != pair_weights(g2, w2, vj, vk2)
                    || pair_weights(g1, w1, vk1, vi) != pair_weights(g2, w2, vk2, vj)
                {
                    ok = false;
                    break;
                }
            }
            if ok && pair_weights(g1, w1, vi, vi) != pair_weights(g2, w2, vj, vj) {
                ok = false;
            }
            if !ok {
                continue;
            }
            assignment[i] = Some(j);
            used[j] = true;
            if backtrack(pos + 1, order, candidates, assignment, used, g1, w1, g2, w2, pair_weights)
            {
                return true;
            }
            assignment[i] = None;
            used[j] = false;
        }
        false
    }

    let mut assignment: Vec<Option<usize>> = vec![None; n];
    let mut used = vec![false; n];
    if !backtrack(
        0,
        &order,
        &candidates,
        &mut assignment,
        &mut used,
        g1,
        w1,
        g2,
        w2,
        &pair_weights,
    ) {
        return None;
    }

    let vertex_map: BTreeMap<String, String> = (0..n)
        .map(|i| (g1.vertices()[i].clone(), g2.vertices()[assignment[i].unwrap()].clone()))
        .collect();

    // Greedy edge matching inside each (src,dst) class, pairing closest
    // weights first; the vertex map already guarantees multisets agree.
    let mut edge_map = BTreeMap::new();
    let mut taken: HashSet<&str> = HashSet::new();
    for e in g1.edges() {
        let a = &vertex_map[&e.src];
        let b = &vertex_map[&e.dst];
        let we = w1.get(&e.id).unwrap();
        let mut best: Option<(&str, f64)> = None;
        for f in g2.edges() {
            if &f.src == a && &f.dst == b && !taken.contains(f.id.as_str()) {
                let d = (w2.get(&f.id).unwrap() - we).abs();
                if best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((&f.id, d));
                }
            }
        }
        let (fid, _) = best?;
        taken.insert(fid);
        edge_map.insert(e.id.clone(), fid.to_owned());
    }
    Some(IsoWitness { vertex_map, edge_map })
}

/// Round `x` to `digits` significant digits.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits - 1 - magnitude);
    (x * factor).round() / factor
}

/// Shortest decimal rendering of `x` rounded to `digits` significant digits.
pub fn format_sig(x: f64, digits: i32) -> String {
    format!("{}", round_sig(x, digits))
}
