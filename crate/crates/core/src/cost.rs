//! Fair and balanced cost verification: source costs, balancing involutions,
//! adjacency spectra and Perron costs.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Cost, DeformationParameter, OrientedGraph};

/// Default verification tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Power iteration cap.
const POWER_ITER_CAP: usize = 100_000;

/// A balancing involution on the edge set: a self-inverse bijection that
/// swaps source and target, pairing each weight with its reciprocal. Fixed
/// points occur only on loops.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Involution {
    pairing: BTreeMap<String, String>,
}

impl Involution {
    pub fn new(g: &OrientedGraph, pairing: BTreeMap<String, String>) -> Result<Self> {
        if pairing.len() != g.edges().len() {
            return Err(Error::Malformed("involution must cover the whole edge set".into()));
        }
        for (a, b) in &pairing {
            let ea = g.edge(a)?;
            let eb = g.edge(b)?;
            if pairing.get(b) != Some(a) {
                return Err(Error::Malformed(format!("pairing not self-inverse at {a:?}")));
            }
            if ea.src != eb.dst || ea.dst != eb.src {
                return Err(Error::Malformed(format!(
                    "pairing {a:?} <-> {b:?} does not swap source and target"
                )));
            }
            if a == b && ea.src != ea.dst {
                return Err(Error::Malformed(format!("fixed point {a:?} is not a loop")));
            }
        }
        Ok(Involution { pairing })
    }

    pub fn partner(&self, edge_id: &str) -> Option<&str> {
        self.pairing.get(edge_id).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &String)> {
        self.pairing.iter()
    }

    pub fn is_fixed_point(&self, edge_id: &str) -> bool {
        self.pairing.get(edge_id).map(String::as_str) == Some(edge_id)
    }
}

/// Sum of the weights of the edges leaving `v`.
pub fn source_cost(g: &OrientedGraph, w: &Cost, v: &str) -> Result<f64> {
    if !g.has_vertex(v) {
        return Err(Error::UnknownVertex(v.to_owned()));
    }
    let mut total = 0.0;
    for e in g.out_edges(v) {
        total += w.weight(&e.id)?;
    }
    Ok(total)
}

/// Search for a balancing involution with `|W(e)W(ē) − 1| ≤ tol`.
///
/// Between each opposite pair of parallel-edge classes the compatibility
/// relation is solved by bipartite matching; loop sets are matched by
/// backtracking, with fixed points admitted only when `require_loop_free`
/// is false. Absence is a value, not an error.
pub fn find_involution(
    g: &OrientedGraph,
    w: &Cost,
    require_loop_free: bool,
    tol: f64,
) -> Option<Involution> {
    if !w.covers(g) {
        return None;
    }
    let mut pairing: BTreeMap<String, String> = BTreeMap::new();

    // Opposite classes E_{v,w} vs E_{w,v} for v != w.
    let mut classes: BTreeMap<(String, String), Vec<&str>> = BTreeMap::new();
    for e in g.edges() {
        classes
            .entry((e.src.clone(), e.dst.clone()))
            .or_default()
            .push(&e.id);
    }
    for ids in classes.values_mut() {
        ids.sort_unstable();
    }
    for ((v, u), forward) in &classes {
        if v >= u {
            continue;
        }
        let empty = Vec::new();
        let backward = classes.get(&(u.clone(), v.clone())).unwrap_or(&empty);
        if forward.len() != backward.len() {
            return None;
        }
        let matched = bipartite_match(forward, backward, |a, b| {
            (w.get(a).unwrap() * w.get(b).unwrap() - 1.0).abs() <= tol
        })?;
        for (a, b) in matched {
            pairing.insert(a.to_owned(), b.to_owned());
            pairing.insert(b.to_owned(), a.to_owned());
        }
    }
    // Classes with v == u handled as loop sets; also catch v > u handled above.
    for v in g.vertices() {
        let mut loops: Vec<&str> =
            g.edges().iter().filter(|e| &e.src == v && &e.dst == v).map(|e| e.id.as_str()).collect();
        loops.sort_unstable();
        let matched = loop_match(&loops, w, require_loop_free, tol)?;
        for (a, b) in matched {
            pairing.insert(a.to_owned(), b.to_owned());
            pairing.insert(b.to_owned(), a.to_owned());
        }
    }
    Involution::new(g, pairing).ok()
}

/// Kuhn's augmenting-path matching over an explicit compatibility predicate.
fn bipartite_match<'a>(
    left: &[&'a str],
    right: &[&'a str],
    compatible: impl Fn(&str, &str) -> bool,
) -> Option<Vec<(&'a str, &'a str)>> {
    let n = left.len();
    let adj: Vec<Vec<usize>> = left
        .iter()
        .map(|a| (0..n).filter(|&j| compatible(a, right[j])).collect())
        .collect();
    let mut match_right: Vec<Option<usize>> = vec![None; n];

    fn augment(
        i: usize,
        adj: &[Vec<usize>],
        match_right: &mut [Option<usize>],
        visited: &mut [bool],
    ) -> bool {
        for &j in &adj[i] {
            if visited[j] {
                continue;
            }
            visited[j] = true;
            if match_right[j].is_none()
                || augment(match_right[j].unwrap(), adj, match_right, visited)
            {
                match_right[j] = Some(i);
                return true;
            }
        }
        false
    }

    for i in 0..n {
        let mut visited = vec![false; n];
        if !augment(i, &adj, &mut match_right, &mut visited) {
            return None;
        }
    }
    let mut pairs = Vec::with_capacity(n);
    for (j, m) in match_right.iter().enumerate() {
        pairs.push((left[(*m)?], right[j]));
    }
    Some(pairs)
}

/// Involution on a loop set: pairs with reciprocal weights, optional fixed
/// points of weight 1. Deterministic first-found backtracking.
fn loop_match<'a>(
    loops: &[&'a str],
    w: &Cost,
    require_loop_free: bool,
    tol: f64,
) -> Option<Vec<(&'a str, &'a str)>> {
    fn go<'a>(
        remaining: &[&'a str],
        w: &Cost,
        require_loop_free: bool,
        tol: f64,
        acc: &mut Vec<(&'a str, &'a str)>,
    ) -> bool {
        let Some((&first, rest)) = remaining.split_first() else {
            return true;
        };
        for (k, &other) in rest.iter().enumerate() {
            if (w.get(first).unwrap() * w.get(other).unwrap() - 1.0).abs() <= tol {
                let mut next: Vec<&str> = rest.to_vec();
                next.remove(k);
                acc.push((first, other));
                if go(&next, w, require_loop_free, tol, acc) {
                    return true;
                }
                acc.pop();
            }
        }
        if !require_loop_free && (w.get(first).unwrap() * w.get(first).unwrap() - 1.0).abs() <= tol
        {
            acc.push((first, first));
            if go(rest, w, require_loop_free, tol, acc) {
                return true;
            }
            acc.pop();
        }
        false
    }
    let mut acc = Vec::new();
    if go(loops, w, require_loop_free, tol, &mut acc) {
        Some(acc)
    } else {
        None
    }
}

/// Outcome of [`verify_fair_balanced`].
#[derive(Debug, Clone, Serialize)]
pub struct FairnessReport {
    pub verdict: Verdict,
    pub reasons: Vec<String>,
    pub source_costs: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub involution: Option<Involution>,
    pub loop_parity_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl FairnessReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Options for [`verify_fair_balanced`].
#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Additionally require the underlying graph to be connected.
    pub require_connected: bool,
}

/// Check that `(g, w)` is a fair and balanced T-graph for `T = q + q⁻¹`:
/// every non-boundary source cost equals |T| within `tol`, a balancing
/// involution exists (loop-free when T > 0), and optionally the graph is
/// connected.
pub fn verify_fair_balanced(
    g: &OrientedGraph,
    w: &Cost,
    dp: DeformationParameter,
    tol: f64,
    options: VerifyOptions,
) -> FairnessReport {
    let mut reasons = Vec::new();
    let mut source_costs = BTreeMap::new();
    let positive_t = dp.t() > 0.0;

    if !w.covers(g) {
        reasons.push("cost does not cover the edge set".to_owned());
    }

    let abs_t = dp.abs_t();
    for v in g.vertices() {
        let sc = g.out_edges(v).map(|e| w.get(&e.id).unwrap_or(f64::NAN)).sum::<f64>();
        source_costs.insert(v.clone(), sc);
        if !g.is_boundary(v) && !(sc - abs_t).abs().le(&tol) {
            reasons.push(format!("source cost {sc} at vertex {v:?} differs from |T| = {abs_t}"));
        }
    }

    let mut loop_parity_ok = true;
    if positive_t {
        for v in g.vertices() {
            if g.loop_count(v) % 2 == 1 {
                loop_parity_ok = false;
                reasons.push(format!("odd loop count at vertex {v:?} with T > 0"));
            }
        }
    }

    let involution = if w.covers(g) {
        let witness = find_involution(g, w, positive_t, tol);
        if witness.is_none() {
            reasons.push("no balancing involution exists".to_owned());
        }
        witness
    } else {
        None
    };

    if options.require_connected && !g.is_connected() {
        reasons.push("graph is not connected".to_owned());
    }

    let verdict = if reasons.is_empty() { Verdict::Pass } else { Verdict::Fail };
    FairnessReport { verdict, reasons, source_costs, involution, loop_parity_ok }
}

/// Integer adjacency matrix in vertex declaration order; entry (v, w) counts
/// edges v→w.
pub fn adjacency(g: &OrientedGraph) -> DMatrix<i64> {
    let n = g.vertices().len();
    let mut a = DMatrix::zeros(n, n);
    let index: HashMap<&str, usize> =
        g.vertices().iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    for e in g.edges() {
        a[(index[e.src.as_str()], index[e.dst.as_str()])] += 1;
    }
    a
}

fn require_symmetric(a: &DMatrix<i64>) -> Result<()> {
    for i in 0..a.nrows() {
        for j in 0..i {
            if a[(i, j)] != a[(j, i)] {
                return Err(Error::NotSymmetric(format!(
                    "edge counts {} vs {} between vertex positions {j} and {i}",
                    a[(j, i)],
                    a[(i, j)]
                )));
            }
        }
    }
    Ok(())
}

/// Power iteration for the Perron pair of a nonnegative symmetric matrix.
///
/// Iterates on A + cI from the all-ones vector; the shift keeps bipartite
/// spectra from oscillating. Returns (λ_max, eigenvector).
fn perron_pair(a: &DMatrix<f64>, residual_tol: f64) -> Result<(f64, DVector<f64>)> {
    let n = a.nrows();
    if n == 0 {
        return Err(Error::Malformed("empty matrix".into()));
    }
    let max_row_sum = (0..n)
        .map(|i| a.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let shift = 1.0 + max_row_sum;
    let shifted = a + DMatrix::identity(n, n) * shift;

    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..POWER_ITER_CAP {
        let y = &shifted * &x;
        // The shift makes the iteration matrix positive definite, so y != 0.
        x = y.normalize();
        lambda = (x.transpose() * &shifted * &x)[(0, 0)];
        let residual = (&shifted * &x - &x * lambda).norm();
        if residual <= residual_tol {
            return Ok((lambda - shift, x));
        }
    }
    // Symmetric matrices converge unless the tolerance is below what the
    // arithmetic supports.
    let residual = (&shifted * &x - &x * lambda).norm();
    Err(Error::NoConvergence(format!(
        "power iteration stalled at residual {residual} (target {residual_tol})"
    )))
}

/// Largest-magnitude adjacency eigenvalue of a symmetric multigraph.
pub fn graph_norm(g: &OrientedGraph, tol: f64) -> Result<f64> {
    let a = adjacency(g);
    require_symmetric(&a)?;
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let af = a.map(|x| x as f64);
    let (lambda, _) = perron_pair(&af, (tol * 0.5).max(1e-14))?;
    Ok(lambda)
}

/// The Frobenius–Perron cost at the graph norm.
///
/// When `|T|` equals `‖g‖` within `tol`, returns `W(e) = c_t(e)/c_s(e)` for
/// the positive Perron eigenvector `c` normalized to min 1; otherwise `None`
/// (a finite connected graph has a positive eigenvector only at the Perron
/// root).
pub fn perron_cost(g: &OrientedGraph, t: f64, tol: f64) -> Result<Option<Cost>> {
    let a = adjacency(g);
    require_symmetric(&a)?;
    if !g.is_connected() {
        return Err(Error::NotConnected);
    }
    let af = a.map(|x| x as f64);
    let (norm, vec) = perron_pair(&af, (tol * 1e-4).max(1e-14))?;
    if (t.abs() - norm).abs() > tol {
        return Ok(None);
    }
    let min = vec.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        // All-ones start keeps the iterate in the positive cone; reaching a
        // non-positive entry means the graph was not connected after all.
        return Err(Error::NotConnected);
    }
    let c = vec / min;
    let mut weights = BTreeMap::new();
    for e in g.edges() {
        let s = g.vertex_position(&e.src)?;
        let d = g.vertex_position(&e.dst)?;
        weights.insert(e.id.clone(), c[d] / c[s]);
    }
    Ok(Some(Cost::new(weights)?))
}

/// The reversible random walk of a fair and balanced cost:
/// `P(e) = W(e)/|T|`.
pub fn random_walk(
    g: &OrientedGraph,
    w: &Cost,
    dp: DeformationParameter,
    tol: f64,
) -> Result<BTreeMap<String, f64>> {
    let report = verify_fair_balanced(g, w, dp, tol, VerifyOptions::default());
    if !report.passed() {
        return Err(Error::VerificationFailed(report.reasons.join("; ")));
    }
    let abs_t = dp.abs_t();
    Ok(w.iter().map(|(id, weight)| (id.clone(), weight / abs_t)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog, CatalogName, CatalogParams};
    use crate::graph::{load_graph, Edge};

    fn dp(q: f64) -> DeformationParameter {
        DeformationParameter::new(q).unwrap()
    }

    #[test]
    fn source_costs_match_examples() {
        let (g, c, _) =
            catalog(CatalogName::PointLoops, &CatalogParams::new(1.0).with_loops(2)).unwrap();
        assert!((source_cost(&g, &c, "0").unwrap() - 2.0).abs() < 1e-15);

        let (g, c, _) = catalog(CatalogName::E6Affine, &CatalogParams::new(1.0)).unwrap();
        assert!((source_cost(&g, &c, "0").unwrap() - 2.0).abs() < 1e-15);

        let (g, c, _) = catalog(CatalogName::ACycle, &CatalogParams::new(-0.5).with_n(1)).unwrap();
        assert!((source_cost(&g, &c, "0").unwrap() - 2.5).abs() < 1e-15);
        assert!(source_cost(&g, &c, "zzz").is_err());
    }

    #[test]
    fn involution_on_loops() {
        let (g, c, _) =
            catalog(CatalogName::PointLoops, &CatalogParams::new(1.0).with_loops(2)).unwrap();
        let inv = find_involution(&g, &c, true, 1e-9).unwrap();
        assert_eq!(inv.partner("0\u{2192}0#0"), Some("0\u{2192}0#1"));

        // Three weight-1 loops admit no loop-free involution.
        let (g3, _) = load_graph(
            r#"{"vertices":["v"],"edges":[
                {"id":"a","src":"v","dst":"v","weight":1.0},
                {"id":"b","src":"v","dst":"v","weight":1.0},
                {"id":"c","src":"v","dst":"v","weight":1.0}]}"#,
        )
        .unwrap();
        let w3 = Cost::new([("a".into(), 1.0), ("b".into(), 1.0), ("c".into(), 1.0)].into())
            .unwrap();
        assert!(find_involution(&g3, &w3, true, 1e-9).is_none());
        assert!(find_involution(&g3, &w3, false, 1e-9).is_some());
    }

    #[test]
    fn involution_pairs_reciprocal_weights() {
        let (g, c, _) = catalog(CatalogName::ACycle, &CatalogParams::new(-0.5).with_n(1)).unwrap();
        let inv = find_involution(&g, &c, false, 1e-9).unwrap();
        for (a, b) in inv.iter() {
            let prod = c.weight(a).unwrap() * c.weight(b).unwrap();
            assert!((prod - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fairness_catalog_passes_and_counterexample_fails() {
        let (g, c, d) = catalog(CatalogName::E6Affine, &CatalogParams::new(1.0)).unwrap();
        assert!(verify_fair_balanced(&g, &c, d, 1e-9, VerifyOptions::default()).passed());

        // Path with weights 2 and 1/2: source cost 0.5 at the second vertex.
        let g = OrientedGraph::new(
            vec!["a".into(), "b".into()],
            vec![
                Edge { id: "f".into(), src: "a".into(), dst: "b".into() },
                Edge { id: "r".into(), src: "b".into(), dst: "a".into() },
            ],
            vec![],
        )
        .unwrap();
        let w = Cost::new([("f".into(), 2.0), ("r".into(), 0.5)].into()).unwrap();
        let report = verify_fair_balanced(&g, &w, dp(1.0), 1e-9, VerifyOptions::default());
        assert!(!report.passed());
        assert!(report.reasons.iter().any(|r| r.contains("\"b\"")));
    }

    #[test]
    fn adjacency_counts() {
        let (g, _, _) = catalog(CatalogName::ACycle, &CatalogParams::new(-0.5).with_n(1)).unwrap();
        let a = adjacency(&g);
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[0, 2, 2, 0]));
        let (g, _, _) =
            catalog(CatalogName::PointLoops, &CatalogParams::new(1.0).with_loops(2)).unwrap();
        assert_eq!(adjacency(&g)[(0, 0)], 2);
    }

    #[test]
    fn norm_of_small_graphs() {
        let (g, _, _) =
            catalog(CatalogName::PointLoops, &CatalogParams::new(1.0).with_loops(2)).unwrap();
        assert!((graph_norm(&g, 1e-9).unwrap() - 2.0).abs() < 1e-9);

        let (g, _) = load_graph(
            r#"{"vertices":["a","b"],"edges":[
                {"id":"f","src":"a","dst":"b"},{"id":"r","src":"b","dst":"a"}]}"#,
        )
        .unwrap();
        assert!((graph_norm(&g, 1e-9).unwrap() - 1.0).abs() < 1e-9);

        let (g, _, _) = catalog(CatalogName::E6Affine, &CatalogParams::new(1.0)).unwrap();
        assert!((graph_norm(&g, 1e-9).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn perron_reproduces_e6() {
        let (g, c, _) = catalog(CatalogName::E6Affine, &CatalogParams::new(1.0)).unwrap();
        let w = perron_cost(&g, -2.0, 1e-8).unwrap().unwrap();
        for (id, expect) in c.iter() {
            assert!((w.weight(id).unwrap() - expect).abs() < 1e-8, "edge {id}");
        }
        // Wrong T gives no positive eigenvector.
        assert!(perron_cost(&g, -2.5, 1e-8).unwrap().is_none());
    }

    #[test]
    fn perron_on_two_path() {
        let (g, _) = load_graph(
            r#"{"vertices":["a","b"],"edges":[
                {"id":"f","src":"a","dst":"b"},{"id":"r","src":"b","dst":"a"}]}"#,
        )
        .unwrap();
        let w = perron_cost(&g, -1.0, 1e-8).unwrap().unwrap();
        assert!((w.weight("f").unwrap() - 1.0).abs() < 1e-9);
        assert!((w.weight("r").unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn random_walk_probabilities() {
        let (g, c, d) =
            catalog(CatalogName::ACycle, &CatalogParams::new(-0.5).with_n(1)).unwrap();
        let p = random_walk(&g, &c, d, 1e-9).unwrap();
        let mut values: Vec<f64> = p.values().copied().collect();
        values.sort_by(f64::total_cmp);
        assert!((values[0] - 0.2).abs() < 1e-12);
        assert!((values[3] - 0.8).abs() < 1e-12);
        // Per-vertex sums are 1.
        for v in g.vertices() {
            let s: f64 = g.out_edges(v).map(|e| p[&e.id]).sum();
            assert!((s - 1.0).abs() < 1e-10);
        }
    }
}
