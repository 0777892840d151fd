//! q-fundamental solutions: the graded anti-linear operators 𝒥_vw attached
//! to a fair and balanced graph, their defining identities, and equivalence.
//!
//! An anti-linear map 𝒥: H_vw → H_wv is stored as the complex matrix M with
//! 𝒥(x) = M·conj(x) in fixed orthonormal bases, so compositions reduce to
//! products of the form M₁·conj(M₂) and every check is ordinary linear
//! algebra.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::cost::{verify_fair_balanced, Involution, VerifyOptions};
use crate::error::{Error, Result};
use crate::graph::{Cost, DeformationParameter, Edge, OrientedGraph};

/// Caps for the equivalence search; larger inputs return
/// [`Equivalence::Undecided`].
pub const MAX_EQUIV_VERTICES: usize = 12;
pub const MAX_EQUIV_BLOCK_DIM: usize = 4;

pub type CMatrix = DMatrix<Complex64>;

/// Graded anti-linear operator data (𝒥_vw) over an index set of vertices.
///
/// For each ordered pair with `dim H_vw > 0` the matrix `M_vw` has shape
/// `dim H_wv × dim H_vw`. `boundary` marks vertices coming from a window
/// truncation; the per-vertex trace identity is not required there.
#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    vertices: Vec<String>,
    boundary: BTreeSet<String>,
    jmaps: BTreeMap<(String, String), CMatrix>,
    q_sign: f64,
}

impl FundamentalSolution {
    pub fn new(
        vertices: Vec<String>,
        boundary: BTreeSet<String>,
        jmaps: BTreeMap<(String, String), CMatrix>,
        q_sign: f64,
    ) -> Result<Self> {
        if q_sign != 1.0 && q_sign != -1.0 {
            return Err(Error::Malformed("q_sign must be ±1".into()));
        }
        let known: BTreeSet<&String> = vertices.iter().collect();
        for (v, w) in jmaps.keys() {
            if !known.contains(v) || !known.contains(w) {
                return Err(Error::Malformed(format!(
                    "jmap ({v}, {w}) references an undeclared vertex"
                )));
            }
        }
        for b in &boundary {
            if !known.contains(b) {
                return Err(Error::Malformed(format!("boundary vertex {b:?} undeclared")));
            }
        }
        Ok(FundamentalSolution { vertices, boundary, jmaps, q_sign })
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn boundary(&self) -> &BTreeSet<String> {
        &self.boundary
    }

    pub fn q_sign(&self) -> f64 {
        self.q_sign
    }

    pub fn dim(&self, v: &str, w: &str) -> usize {
        self.jmaps.get(&(v.to_owned(), w.to_owned())).map_or(0, |m| m.ncols())
    }

    pub fn jmap(&self, v: &str, w: &str) -> Option<&CMatrix> {
        self.jmaps.get(&(v.to_owned(), w.to_owned()))
    }

    pub fn jmaps(&self) -> impl Iterator<Item = (&(String, String), &CMatrix)> {
        self.jmaps.iter()
    }

    /// Eigenvalues of 𝒥*𝒥 on H_vw, descending: the edge costs of the block.
    pub fn block_costs(&self, v: &str, w: &str) -> Vec<f64> {
        match self.jmap(v, w) {
            None => Vec::new(),
            Some(m) if m.ncols() == 0 => Vec::new(),
            Some(m) => {
                let h = m.adjoint() * m;
                let mut eig: Vec<f64> =
                    h.symmetric_eigen().eigenvalues.iter().cloned().collect();
                eig.sort_by(|a, b| b.total_cmp(a));
                eig
            }
        }
    }
}

impl Serialize for FundamentalSolution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(4))?;
        map.serialize_entry("vertices", &self.vertices)?;
        map.serialize_entry("boundary", &self.boundary)?;
        map.serialize_entry("sign", &(self.q_sign as i8))?;
        let blocks: BTreeMap<String, Vec<Vec<[f64; 2]>>> = self
            .jmaps
            .iter()
            .filter(|(_, m)| m.ncols() > 0)
            .map(|((v, w), m)| (format!("{v},{w}"), matrix_to_rows(m)))
            .collect();
        map.serialize_entry("jmaps", &blocks)?;
        map.end()
    }
}

pub fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Malformed("ragged matrix rows".into()));
    }
    let mut m = CMatrix::zeros(nrows, ncols);
    for (i, row) in rows.iter().enumerate() {
        for (j, &[re, im]) in row.iter().enumerate() {
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(m)
}

#[derive(serde::Deserialize)]
struct SolutionRecord {
    vertices: Vec<String>,
    #[serde(default)]
    boundary: BTreeSet<String>,
    sign: i8,
    jmaps: BTreeMap<String, Vec<Vec<[f64; 2]>>>,
}

impl FundamentalSolution {
    /// Parse the JSON emitted by the `Serialize` impl. Block keys are
    /// "v,w"; vertex ids therefore must not contain commas here.
    pub fn from_json(text: &str) -> Result<Self> {
        let rec: SolutionRecord =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut jmaps = BTreeMap::new();
        for (key, rows) in &rec.jmaps {
            let (v, w) = key
                .split_once(',')
                .ok_or_else(|| Error::Schema(format!("jmaps key {key:?} is not \"v,w\"")))?;
            jmaps.insert((v.to_owned(), w.to_owned()), matrix_from_rows(rows)?);
        }
        FundamentalSolution::new(rec.vertices, rec.boundary, jmaps, rec.sign as f64)
    }
}

/// Construct the q-fundamental solution of a verified fair and balanced
/// graph.
///
/// H_vw is spanned by the edges v→w in id order. With the witness involution
/// and a sign function ρ satisfying ρ(e)ρ(ē) = −sgn(q), the map 𝒥_vw sends
/// the basis edge e to ρ(e)·W(e)^{1/2}·ē. For q < 0 we take ρ ≡ 1; for q > 0
/// the involution is loop-free and ρ alternates over each matched pair in
/// edge-id order.
pub fn build_solution(
    g: &OrientedGraph,
    w: &Cost,
    dp: DeformationParameter,
) -> Result<FundamentalSolution> {
    let report =
        verify_fair_balanced(g, w, dp, crate::cost::DEFAULT_TOL, VerifyOptions::default());
    if !report.passed() {
        return Err(Error::VerificationFailed(report.reasons.join("; ")));
    }
    let witness = report.involution.expect("pass implies witness");
    build_solution_with(g, w, dp, &witness)
}

/// As [`build_solution`] but with a caller-chosen involution.
pub fn build_solution_with(
    g: &OrientedGraph,
    w: &Cost,
    dp: DeformationParameter,
    witness: &Involution,
) -> Result<FundamentalSolution> {
    let mut rho: BTreeMap<&str, f64> = BTreeMap::new();
    if dp.sign() < 0.0 {
        for e in g.edges() {
            rho.insert(&e.id, 1.0);
        }
    } else {
        for e in g.edges() {
            let partner = witness
                .partner(&e.id)
                .ok_or_else(|| Error::Malformed("involution misses an edge".into()))?;
            if partner == e.id {
                return Err(Error::Malformed(
                    "fixed-point involution is incompatible with q > 0".into(),
                ));
            }
            rho.insert(&e.id, if e.id.as_str() < partner { 1.0 } else { -1.0 });
        }
    }

    let bases = edge_bases(g);
    let mut jmaps = BTreeMap::new();
    for ((v, w_), basis) in &bases {
        let reverse = &bases[&(w_.clone(), v.clone())];
        let mut m = CMatrix::zeros(reverse.len(), basis.len());
        for (col, e) in basis.iter().enumerate() {
            let partner = witness.partner(&e.id).unwrap();
            let row = reverse
                .iter()
                .position(|f| f.id == partner)
                .ok_or_else(|| Error::Malformed("involution does not swap src and dst".into()))?;
            let weight = w.weight(&e.id)?;
            m[(row, col)] = Complex64::new(rho[e.id.as_str()] * weight.sqrt(), 0.0);
        }
        jmaps.insert((v.clone(), w_.clone()), m);
    }
    jmaps.retain(|_, m| m.ncols() > 0 || m.nrows() > 0);
    FundamentalSolution::new(g.vertices().to_vec(), g.boundary().clone(), jmaps, dp.sign())
}

/// Edges grouped as bases of the H_vw, id-sorted, with empty blocks of an
/// opposite pair materialized so shapes stay consistent.
fn edge_bases(g: &OrientedGraph) -> BTreeMap<(String, String), Vec<Edge>> {
    let mut bases: BTreeMap<(String, String), Vec<Edge>> = BTreeMap::new();
    for e in g.edges() {
        bases.entry((e.src.clone(), e.dst.clone())).or_default().push(e.clone());
    }
    let keys: Vec<(String, String)> = bases.keys().cloned().collect();
    for (v, w) in keys {
        bases.entry((w, v)).or_default();
    }
    for basis in bases.values_mut() {
        basis.sort_by(|a, b| a.id.cmp(&b.id));
    }
    bases
}

/// Residual report of [`verify_solution`].
#[derive(Debug, Clone, Serialize)]
pub struct SolutionReport {
    pub ok: bool,
    pub reasons: Vec<String>,
    /// Worst `‖M_wv·conj(M_vw) + sgn(q)·I‖` over blocks.
    pub composition_residual: f64,
    /// Per-vertex `|Σ_w tr(M_vw†M_vw) − ⟦2⟧|` at interior vertices.
    pub trace_residuals: BTreeMap<String, f64>,
}

/// Check the two defining identities: 𝒥_wv𝒥_vw = −sgn(q)·id on every block
/// and Σ_w tr(𝒥_vw*𝒥_vw) = ⟦2⟧ at every interior vertex.
pub fn verify_solution(
    s: &FundamentalSolution,
    dp: DeformationParameter,
    tol: f64,
) -> SolutionReport {
    let mut reasons = Vec::new();
    let mut worst_comp = 0.0_f64;

    if dp.sign() != s.q_sign() {
        reasons.push(format!(
            "solution was built for sgn(q) = {} but checked against sgn(q) = {}",
            s.q_sign(),
            dp.sign()
        ));
    }

    for ((v, w), m_vw) in s.jmaps() {
        if m_vw.ncols() == 0 {
            continue;
        }
        let Some(m_wv) = s.jmap(w, v) else {
            reasons.push(format!("block ({w}, {v}) missing while ({v}, {w}) is present"));
            continue;
        };
        if m_vw.ncols() != m_wv.nrows() || m_vw.nrows() != m_wv.ncols() {
            reasons.push(format!(
                "blocks ({v}, {w}) and ({w}, {v}) have incompatible shapes"
            ));
            continue;
        }
        // Anti-linear composition: (𝒥_wv ∘ 𝒥_vw)(x) = M_wv·conj(M_vw)·x.
        let comp = m_wv * m_vw.map(|z| z.conj());
        let expected =
            CMatrix::identity(comp.nrows(), comp.ncols()) * Complex64::new(-s.q_sign(), 0.0);
        let residual = (&comp - &expected).norm();
        worst_comp = worst_comp.max(residual);
        if residual > tol {
            reasons.push(format!(
                "composition identity fails on block ({v}, {w}): residual {residual}"
            ));
        }
    }

    let want = dp.abs_q_int(2);
    let mut trace_residuals = BTreeMap::new();
    for v in s.vertices() {
        if s.boundary().contains(v) {
            continue;
        }
        let mut total = 0.0;
        for ((a, _b), m) in s.jmaps() {
            if a == v && m.ncols() > 0 {
                total += (m.adjoint() * m).trace().re;
            }
        }
        let residual = (total - want).abs();
        trace_residuals.insert(v.clone(), residual);
        if residual > tol {
            reasons.push(format!(
                "trace sum {total} at vertex {v:?} differs from ⟦2⟧ = {want}"
            ));
        }
    }

    SolutionReport {
        ok: reasons.is_empty(),
        reasons,
        composition_residual: worst_comp,
        trace_residuals,
    }
}

/// Recover the weighted graph of a solution: `dim H_vw` edges v→w with the
/// eigenvalues of 𝒥*𝒥 (descending) as costs.
pub fn solution_to_graph(s: &FundamentalSolution) -> Result<(OrientedGraph, Cost)> {
    let mut edges = Vec::new();
    let mut weights = BTreeMap::new();
    for ((v, w), _) in s.jmaps() {
        for (k, lambda) in s.block_costs(v, w).into_iter().enumerate() {
            if lambda <= 0.0 {
                return Err(Error::VerificationFailed(format!(
                    "block ({v}, {w}) has a non-positive edge cost {lambda}"
                )));
            }
            let id = format!("{v}\u{2192}{w}#{k}");
            edges.push(Edge { id: id.clone(), src: v.clone(), dst: w.clone() });
            weights.insert(id, lambda);
        }
    }
    let g = OrientedGraph::new(
        s.vertices().to_vec(),
        edges,
        s.boundary().iter().cloned().collect::<Vec<_>>(),
    )?;
    let c = Cost::new(weights)?;
    Ok((g, c))
}

/// Witness of an equivalence of solutions: a vertex bijection φ and block
/// unitaries with `M_vw = U_wv · M'_{φv,φw} · U_vwᵀ`.
#[derive(Debug, Clone)]
pub struct EquivalenceWitness {
    pub vertex_map: BTreeMap<String, String>,
    pub unitaries: BTreeMap<(String, String), CMatrix>,
}

#[derive(Debug, Clone)]
pub enum Equivalence {
    Equivalent(EquivalenceWitness),
    NotEquivalent,
    /// Input exceeds the search caps; no verdict.
    Undecided,
}

impl Equivalence {
    pub fn witness(&self) -> Option<&EquivalenceWitness> {
        match self {
            Equivalence::Equivalent(w) => Some(w),
            _ => None,
        }
    }
}

/// Decide equivalence of two verified solutions.
///
/// Vertex bijections are searched by backtracking with degree/spectrum
/// pruning. For a candidate bijection the block unitaries are produced
/// exactly from canonical bases: each block pair reduces, in a basis built
/// from eigenvectors of 𝒥*𝒥 and their 𝒥-images, to the same canonical
/// matrix determined by the spectrum and sgn(q) alone.
pub fn solutions_equivalent(
    s1: &FundamentalSolution,
    s2: &FundamentalSolution,
    tol: f64,
) -> Equivalence {
    if s1.vertices().len() != s2.vertices().len() || s1.q_sign() != s2.q_sign() {
        return Equivalence::NotEquivalent;
    }
    if s1.vertices().len() > MAX_EQUIV_VERTICES {
        return Equivalence::Undecided;
    }
    let max_dim = s1
        .jmaps()
        .map(|(_, m)| m.ncols())
        .chain(s2.jmaps().map(|(_, m)| m.ncols()))
        .max()
        .unwrap_or(0);
    if max_dim > MAX_EQUIV_BLOCK_DIM {
        return Equivalence::Undecided;
    }

    // Per-vertex signature: sorted multiset over neighbours of quantized
    // block spectra, outgoing and incoming separately.
    let quant = |x: f64| (x / tol.max(1e-12)).round() as i64;
    let signature = |s: &FundamentalSolution, v: &str| -> Vec<(Vec<i64>, Vec<i64>)> {
        let mut items: Vec<(Vec<i64>, Vec<i64>)> = s
            .vertices()
            .iter()
            .map(|w| {
                (
                    s.block_costs(v, w).iter().map(|&x| quant(x)).collect(),
                    s.block_costs(w, v).iter().map(|&x| quant(x)).collect(),
                )
            })
            .filter(|(a, b): &(Vec<i64>, Vec<i64>)| !a.is_empty() || !b.is_empty())
            .collect();
        items.sort();
        items
    };
    let sig1: Vec<_> = s1
        .vertices()
        .iter()
        .map(|v| (signature(s1, v), s1.boundary().contains(v)))
        .collect();
    let sig2: Vec<_> = s2
        .vertices()
        .iter()
        .map(|v| (signature(s2, v), s2.boundary().contains(v)))
        .collect();

    let n = s1.vertices().len();
    let candidates: Vec<Vec<usize>> =
        (0..n).map(|i| (0..n).filter(|&j| sig1[i] == sig2[j]).collect()).collect();
    if candidates.iter().any(Vec::is_empty) {
        return Equivalence::NotEquivalent;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| candidates[i].len());

    fn consistent(
        s1: &FundamentalSolution,
        s2: &FundamentalSolution,
        tol: f64,
        i: usize,
        j: usize,
        assigned: &[(usize, usize)],
    ) -> bool {
        let quant = |x: f64| (x / tol.max(1e-12)).round() as i64;
        let spec = |s: &FundamentalSolution, a: &str, b: &str| -> Vec<i64> {
            s.block_costs(a, b).iter().map(|&x| quant(x)).collect()
        };
        let v1 = &s1.vertices()[i];
        let v2 = &s2.vertices()[j];
        for &(k, l) in assigned {
            let u1 = &s1.vertices()[k];
            let u2 = &s2.vertices()[l];
            if spec(s1, v1, u1) != spec(s2, v2, u2) || spec(s1, u1, v1) != spec(s2, u2, v2) {
                return false;
            }
        }
        spec(s1, v1, v1) == spec(s2, v2, v2)
    }

    #[allow(clippy::too_many_arguments)]
    fn backtrack(
        pos: usize,
        order: &[usize],
        candidates: &[Vec<usize>],
        s1: &FundamentalSolution,
        s2: &FundamentalSolution,
        tol: f64,
        assigned: &mut Vec<(usize, usize)>,
        used: &mut Vec<bool>,
        out: &mut Option<Vec<(usize, usize)>>,
    ) {
        if out.is_some() {
            return;
        }
        if pos == order.len() {
            *out = Some(assigned.clone());
            return;
        }
        let i = order[pos];
        for &j in &candidates[i] {
            if used[j] || !consistent(s1, s2, tol, i, j, assigned) {
                continue;
            }
            assigned.push((i, j));
            used[j] = true;
            backtrack(pos + 1, order, candidates, s1, s2, tol, assigned, used, out);
            assigned.pop();
            used[j] = false;
            if out.is_some() {
                return;
            }
        }
    }

    let mut found = None;
    backtrack(
        0,
        &order,
        &candidates,
        s1,
        s2,
        tol,
        &mut Vec::new(),
        &mut vec![false; n],
        &mut found,
    );
    let Some(assignment) = found else {
        return Equivalence::NotEquivalent;
    };

    let phi: BTreeMap<String, String> = assignment
        .iter()
        .map(|&(i, j)| (s1.vertices()[i].clone(), s2.vertices()[j].clone()))
        .collect();

    match solve_unitaries(s1, s2, &phi, tol) {
        Some(unitaries) => {
            Equivalence::Equivalent(EquivalenceWitness { vertex_map: phi, unitaries })
        }
        None => Equivalence::NotEquivalent,
    }
}

/// Canonical basis of a block pair: columns are eigenvectors of M†M sorted
/// by descending eigenvalue; the partner basis on the opposite block is the
/// 𝒥-image. Returns (X, Y, λ) with `M = Y·diag(√λ)·Xᵀ`.
fn canonical_bases(m: &CMatrix) -> (CMatrix, CMatrix, Vec<f64>) {
    let h = m.adjoint() * m;
    let eig = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let n = m.ncols();
    let mut x = CMatrix::zeros(n, n);
    let mut lambdas = Vec::with_capacity(n);
    for (col, &k) in idx.iter().enumerate() {
        x.set_column(col, &eig.eigenvectors.column(k));
        lambdas.push(eig.eigenvalues[k]);
    }
    // y_i = 𝒥 x_i / √λ_i = M·conj(x_i) / √λ_i.
    let mut y = CMatrix::zeros(m.nrows(), n);
    for col in 0..n {
        let xi: DVector<Complex64> = x.column(col).map(|z| z.conj());
        let img = m * xi / Complex64::new(lambdas[col].sqrt(), 0.0);
        y.set_column(col, &img);
    }
    (x, y, lambdas)
}

/// Canonical basis for a loop block (anti-linear 𝒥 on one space with
/// 𝒥² = −sgn(q)): eigenvectors off the unit eigenvalue paired with their
/// 𝒥-images; on the unit eigenspace, 𝒥-fixed vectors (sgn q = −1) or
/// symplectic pairs (sgn q = +1).
fn canonical_loop_basis(m: &CMatrix, q_sign: f64, tol: f64) -> Option<CMatrix> {
    let n = m.ncols();
    let h = m.adjoint() * m;
    let eig = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let apply_j = |v: &DVector<Complex64>| -> DVector<Complex64> { m * v.map(|z| z.conj()) };
    let eig_tol = tol.max(1e-9) * 10.0;

    let mut columns: Vec<DVector<Complex64>> = Vec::with_capacity(n);
    let mut used = vec![false; n];

    // λ > 1 eigenvectors map under 𝒥 into the λ⁻¹ eigenspace.
    for &k in &idx {
        let lambda = eig.eigenvalues[k];
        if used[k] || lambda <= 1.0 + eig_tol {
            continue;
        }
        used[k] = true;
        let x: DVector<Complex64> = eig.eigenvectors.column(k).into();
        let y = apply_j(&x) / Complex64::new(lambda.sqrt(), 0.0);
        let partner = idx
            .iter()
            .copied()
            .find(|&p| !used[p] && (eig.eigenvalues[p] - 1.0 / lambda).abs() <= eig_tol)?;
        used[partner] = true;
        columns.push(x);
        columns.push(y);
    }

    let unit: Vec<usize> = idx
        .iter()
        .copied()
        .filter(|&k| !used[k] && (eig.eigenvalues[k] - 1.0).abs() <= eig_tol)
        .collect();
    if unit.len() + columns.len() != n {
        return None;
    }
    let basis: Vec<DVector<Complex64>> =
        unit.iter().map(|&k| eig.eigenvectors.column(k).into()).collect();

    let project_out = |v: &DVector<Complex64>, taken: &[DVector<Complex64>]| {
        let mut r = v.clone();
        for t in taken {
            let coeff = t.dotc(&r);
            r -= t * coeff;
        }
        r
    };

    let mut unit_columns: Vec<DVector<Complex64>> = Vec::new();
    if q_sign < 0.0 {
        // 𝒥 restricted is an anti-unitary involution: extract fixed vectors.
        while unit_columns.len() < unit.len() {
            let mut fixed = None;
            for cand in basis
                .iter()
                .flat_map(|z| [z.clone(), z * Complex64::new(0.0, 1.0)])
            {
                let raw = &cand + apply_j(&cand);
                let r = project_out(&raw, &unit_columns);
                if r.norm() > 1e-6 {
                    fixed = Some(r.normalize());
                    break;
                }
            }
            unit_columns.push(fixed?);
        }
    } else {
        // 𝒥² = −1 on the unit eigenspace: symplectic pairs (x, 𝒥x).
        while unit_columns.len() < unit.len() {
            let mut seed = None;
            for cand in &basis {
                let r = project_out(cand, &unit_columns);
                if r.norm() > 1e-6 {
                    seed = Some(r.normalize());
                    break;
                }
            }
            let x = seed?;
            let y = project_out(&apply_j(&x), &unit_columns);
            if (y.norm() - 1.0).abs() > 1e-6 {
                return None;
            }
            unit_columns.push(x);
            unit_columns.push(y.normalize());
        }
    }
    columns.extend(unit_columns);

    let mut c = CMatrix::zeros(n, n);
    for (col, v) in columns.iter().enumerate() {
        c.set_column(col, v);
    }
    Some(c)
}

fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    let n = u.ncols();
    ((u.adjoint() * u) - CMatrix::identity(n, n)).norm() <= tol
}

/// Exact block unitaries for a candidate vertex bijection, or None when the
/// residual check fails.
fn solve_unitaries(
    s1: &FundamentalSolution,
    s2: &FundamentalSolution,
    phi: &BTreeMap<String, String>,
    tol: f64,
) -> Option<BTreeMap<(String, String), CMatrix>> {
    let mut unitaries: BTreeMap<(String, String), CMatrix> = BTreeMap::new();
    let check_tol = tol.max(1e-9) * 100.0;

    let pairs: Vec<(String, String)> = s1.jmaps().map(|(k, _)| k.clone()).collect();
    for (v, w) in &pairs {
        if v > w {
            continue;
        }
        let m1 = s1.jmap(v, w)?;
        if m1.ncols() == 0 {
            continue;
        }
        let pv = &phi[v];
        let pw = &phi[w];
        let m2 = s2.jmap(pv, pw)?;
        if m1.shape() != m2.shape() {
            return None;
        }

        if v == w {
            let c1 = canonical_loop_basis(m1, s1.q_sign(), tol)?;
            let c2 = canonical_loop_basis(m2, s2.q_sign(), tol)?;
            let u = &c1 * c2.adjoint();
            if !is_unitary(&u, check_tol) {
                return None;
            }
            let lhs = &u * m2 * u.transpose();
            if (&lhs - m1).norm() > check_tol {
                return None;
            }
            unitaries.insert((v.clone(), w.clone()), u);
        } else {
            let (x1, y1, l1) = canonical_bases(m1);
            let (x2, y2, l2) = canonical_bases(m2);
            if l1
                .iter()
                .zip(&l2)
                .any(|(a, b)| (a - b).abs() > check_tol * (1.0 + a.abs()))
            {
                return None;
            }
            let u_vw = &x1 * x2.adjoint();
            let u_wv = &y1 * y2.adjoint();
            if !is_unitary(&u_vw, check_tol) || !is_unitary(&u_wv, check_tol) {
                return None;
            }
            // M1_vw = U_wv·M2·U_vwᵀ and M1_wv = U_vw·M2'·U_wvᵀ.
            let m1_wv = s1.jmap(w, v)?;
            let m2_wv = s2.jmap(pw, pv)?;
            if (&u_wv * m2 * u_vw.transpose() - m1).norm() > check_tol {
                return None;
            }
            if (&u_vw * m2_wv * u_wv.transpose() - m1_wv).norm() > check_tol {
                return None;
            }
            unitaries.insert((v.clone(), w.clone()), u_vw);
            unitaries.insert((w.clone(), v.clone()), u_wv);
        }
    }
    Some(unitaries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog, CatalogName, CatalogParams, PodlesX};
    use crate::graph::find_isomorphism;

    fn dp(q: f64) -> DeformationParameter {
        DeformationParameter::new(q).unwrap()
    }

    #[test]
    fn point_loops_block_matches_forced_form() {
        let (g, c, d) =
            catalog(CatalogName::PointLoops, &CatalogParams::new(1.0).with_loops(2)).unwrap();
        let s = build_solution(&g, &c, d).unwrap();
        let m = s.jmap("0", "0").unwrap();
        assert_eq!(m.nrows(), 2);
        assert!((m[(0, 1)].re + 1.0).abs() < 1e-12);
        assert!((m[(1, 0)].re - 1.0).abs() < 1e-12);
        // M·conj(M) = −I.
        let comp = m * m.map(|z| z.conj());
        assert!((comp + CMatrix::identity(2, 2)).norm() < 1e-12);
        assert!(verify_solution(&s, d, 1e-10).ok);
    }

    #[test]
    fn a_cycle_blocks_and_signs() {
        let (g, c, d) = catalog(CatalogName::ACycle, &CatalogParams::new(-0.5).with_n(1)).unwrap();
        let s = build_solution(&g, &c, d).unwrap();
        let m01 = s.jmap("0", "1").unwrap();
        let m10 = s.jmap("1", "0").unwrap();
        // q < 0: ρ ≡ 1, so entries are nonnegative square roots.
        assert!(m01.iter().all(|z| z.re >= 0.0 && z.im == 0.0));
        let comp = m10 * m01.map(|z| z.conj());
        assert!((comp - CMatrix::identity(2, 2)).norm() < 1e-12);
        assert!(verify_solution(&s, d, 1e-10).ok);
    }

    #[test]
    fn perturbed_weight_fails_verification() {
        let (g, c, d) =
            catalog(CatalogName::PointLoops, &CatalogParams::new(1.0).with_loops(2)).unwrap();
        let s = build_solution(&g, &c, d).unwrap();
        let mut jmaps: BTreeMap<(String, String), CMatrix> =
            s.jmaps().map(|(k, m)| (k.clone(), m.clone())).collect();
        jmaps.get_mut(&("0".to_owned(), "0".to_owned())).unwrap()[(1, 0)] *=
            Complex64::new(1.1f64.sqrt(), 0.0);
        let s2 =
            FundamentalSolution::new(s.vertices().to_vec(), BTreeSet::new(), jmaps, 1.0).unwrap();
        let report = verify_solution(&s2, d, 1e-10);
        assert!(!report.ok);
    }

    #[test]
    fn wrong_sign_composition_fails() {
        // A 1x1 loop block with M·conj(M) = +1 claimed for q > 0.
        let mut jmaps = BTreeMap::new();
        jmaps.insert(
            ("v".to_owned(), "v".to_owned()),
            CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)),
        );
        let s = FundamentalSolution::new(vec!["v".into()], BTreeSet::new(), jmaps, 1.0).unwrap();
        let report = verify_solution(&s, dp(1.0), 1e-10);
        assert!(!report.ok);
    }

    #[test]
    fn single_block_graph_recovery() {
        let mut jmaps = BTreeMap::new();
        jmaps.insert(
            ("v".to_owned(), "v".to_owned()),
            CMatrix::from_element(1, 1, Complex64::new(2.0_f64.sqrt(), 0.0)),
        );
        let s = FundamentalSolution::new(vec!["v".into()], BTreeSet::new(), jmaps, -1.0).unwrap();
        let (g, c) = solution_to_graph(&s).unwrap();
        assert_eq!(g.edges().len(), 1);
        assert!((c.weight("v\u{2192}v#0").unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn roundtrip_on_catalog_entries() {
        let entries: Vec<(OrientedGraph, Cost, DeformationParameter)> = vec![
            catalog(CatalogName::PointLoops, &CatalogParams::new(1.0).with_loops(2)).unwrap(),
            catalog(CatalogName::ACycle, &CatalogParams::new(-0.5).with_n(2)).unwrap(),
            catalog(CatalogName::E6Affine, &CatalogParams::new(1.0)).unwrap(),
            catalog(
                CatalogName::AInfInf,
                &CatalogParams::new(0.5).with_window(3).with_x(PodlesX::Finite(0.0)),
            )
            .unwrap(),
            catalog(CatalogName::DPrime, &CatalogParams::new(-1.0).with_n(4)).unwrap(),
        ];
        for (g, c, d) in entries {
            let s = build_solution(&g, &c, d).unwrap();
            let (g2, c2) = solution_to_graph(&s).unwrap();
            assert!(
                find_isomorphism(&g, &c, &g2, &c2, 1e-8).is_some(),
                "roundtrip failed on a catalog entry"
            );
        }
    }

    #[test]
    fn spectral_reciprocity() {
        let (g, c, d) = catalog(
            CatalogName::AInfInf,
            &CatalogParams::new(0.5).with_window(3).with_x(PodlesX::Finite(0.25)),
        )
        .unwrap();
        let s = build_solution(&g, &c, d).unwrap();
        for ((v, w), _) in s.jmaps() {
            let fwd = s.block_costs(v, w);
            let mut inv: Vec<f64> = s.block_costs(w, v).iter().map(|x| 1.0 / x).collect();
            inv.sort_by(|a, b| b.total_cmp(a));
            for (a, b) in fwd.iter().zip(&inv) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn equivalence_self_and_rho_variant() {
        let (g, c, d) =
            catalog(CatalogName::PointLoops, &CatalogParams::new(1.0).with_loops(2)).unwrap();
        let s = build_solution(&g, &c, d).unwrap();
        match solutions_equivalent(&s, &s, 1e-9) {
            Equivalence::Equivalent(w) => assert_eq!(w.vertex_map["0"], "0"),
            other => panic!("expected equivalence, got {other:?}"),
        }

        // Global ρ flip: M ↦ −M, an equivalent solution (witness U = iI).
        let jmaps: BTreeMap<(String, String), CMatrix> =
            s.jmaps().map(|(k, m)| (k.clone(), -m.clone())).collect();
        let s_flipped =
            FundamentalSolution::new(s.vertices().to_vec(), BTreeSet::new(), jmaps, 1.0).unwrap();
        assert!(verify_solution(&s_flipped, d, 1e-10).ok);
        assert!(matches!(
            solutions_equivalent(&s, &s_flipped, 1e-9),
            Equivalence::Equivalent(_)
        ));
    }

    #[test]
    fn inequivalent_podles_parameters() {
        let build = |x: f64| {
            let (g, c, d) = catalog(
                CatalogName::AInfInf,
                &CatalogParams::new(0.5).with_window(3).with_x(PodlesX::Finite(x)),
            )
            .unwrap();
            build_solution(&g, &c, d).unwrap()
        };
        let s0 = build(0.0);
        let s3 = build(0.3);
        assert!(matches!(solutions_equivalent(&s0, &s3, 1e-9), Equivalence::NotEquivalent));
    }

    #[test]
    fn loop_parity_shadow() {
        let (g, c, d) =
            catalog(CatalogName::PointLoops, &CatalogParams::new(0.9).with_loops(2)).unwrap();
        let s = build_solution(&g, &c, d).unwrap();
        let costs = s.block_costs("0", "0");
        let ones = costs.iter().filter(|&&x| (x - 1.0).abs() < 1e-9).count();
        assert_eq!(ones % 2, 0);
    }
}
