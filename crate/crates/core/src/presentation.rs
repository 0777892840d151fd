//! Generators-and-relations presentation of the linking algebra attached to
//! a q-fundamental solution.
//!
//! The presentation is emitted as structured data: one projection δ_v per
//! vertex, two generators z_{i1}, z_{i2} per edge i, and the relation
//! families Eq1/Eq2/Eq2'/Eq3 with explicit coefficients drawn from the F
//! matrix and the E-matrices of the solution. Bases are fixed edge-by-edge
//! in id order, so presentations are basis-dependent exactly up to the
//! equivalences of solutions.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::catalog::{catalog, CatalogName, CatalogParams, PodlesX};
use crate::error::{Error, Result};
use crate::fusion::{matrix_to_rows, verify_solution, CMatrix, FundamentalSolution};
use crate::graph::{Cost, DeformationParameter, OrientedGraph};

/// Coefficient identity tolerance for emitted presentations.
pub const COEFF_TOL: f64 = 1e-10;

/// The Podleś change-of-variable dictionary: how the sphere generators X, Y,
/// Z arise from the two z-generators of the vertex-0 corner. Recorded as
/// documentation constants; the artifact does not re-derive them.
pub const PODLES_X_FORMULA: &str = "X = (|q|^-x + |q|^x) z2* z1";
pub const PODLES_Z_FORMULA: &str =
    "Z = (|q|^(-x+1) + |q|^(x+1)) (z1* z1 - |q|^x / (|q|^-x + |q|^x))";
pub const PODLES_Y_FORMULA: &str = "Y = (|q|^-x + |q|^x) z1* z2";

/// One z-generator: edge id and column index (1 or 2).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ZGenerator {
    pub edge: String,
    pub col: u8,
}

/// A relation instance with its index data and coefficient values.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind")]
pub enum Relation {
    /// δ_v z_{ij} δ_w = [v = s(i)][w = t(i)] z_{ij}, for every (v, i, w).
    Eq1 { v: String, edge: String, w: String, coeff: f64 },
    /// Σ_{i: t(i)=w} z_{ij}* z_{ik} = δ_{jk} δ_w, for every (w, j, k).
    Eq2 { w: String, j: u8, k: u8, edges: Vec<String>, rhs: f64 },
    /// z_{i1} z_{k1}* + z_{i2} z_{k2}* = δ_{ik} δ_{s(i)}, for s(i) = s(k).
    Eq2p { i: String, k: String, rhs: f64 },
    /// z_{ij}* = Σ_k E^{(w,v)}_{ik} (F_{1j} z_{k1} + F_{2j} z_{k2}).
    Eq3 {
        edge: String,
        j: u8,
        terms: Vec<String>,
        /// Per term: coefficients of z_{k1} and z_{k2} as [re, im] pairs.
        coeffs: Vec<[[f64; 2]; 2]>,
    },
}

/// The full structured presentation.
#[derive(Debug, Clone)]
pub struct Presentation {
    pub projections: Vec<String>,
    pub generators: Vec<ZGenerator>,
    pub relations: Vec<Relation>,
    pub f: [[f64; 2]; 2],
    pub e: BTreeMap<(String, String), CMatrix>,
}

impl Presentation {
    /// JSON with complex entries as [re, im] pairs and E keyed by "v,w".
    pub fn to_json_value(&self) -> Value {
        let e: BTreeMap<String, Vec<Vec<[f64; 2]>>> = self
            .e
            .iter()
            .map(|((v, w), m)| (format!("{v},{w}"), matrix_to_rows(m)))
            .collect();
        json!({
            "projections": self.projections,
            "generators": self.generators,
            "relations": self.relations,
            "F": self.f,
            "E": e,
        })
    }
}

/// The 2×2 matrix F = [[0, |q|^{1/2}], [−sgn(q)|q|^{−1/2}, 0]] conjugating
/// the fundamental unitary to its entrywise adjoint.
pub fn f_matrix(dp: DeformationParameter) -> [[f64; 2]; 2] {
    let u = dp.abs_q();
    [[0.0, u.sqrt()], [-dp.sign() / u.sqrt(), 0.0]]
}

/// E-matrices of a verified solution: `E^{(vw)} = −sgn(q)·conj(M_vw)` in the
/// stored bases, indexed by ordered vertex pairs with nonzero blocks.
pub fn e_matrices(
    s: &FundamentalSolution,
    dp: DeformationParameter,
) -> Result<BTreeMap<(String, String), CMatrix>> {
    let report = verify_solution(s, dp, COEFF_TOL);
    if !report.ok {
        return Err(Error::VerificationFailed(report.reasons.join("; ")));
    }
    let sign = Complex64::new(-s.q_sign(), 0.0);
    Ok(s.jmaps()
        .filter(|(_, m)| m.ncols() > 0)
        .map(|((v, w), m)| ((v.clone(), w.clone()), m.map(|z| z.conj()) * sign))
        .collect())
}

/// Emit the presentation of the linking algebra of `s`.
///
/// Relation instances follow the counting schema: Eq1 over all (v, i, w)
/// triples, Eq2 over (w, j, k), Eq2' over source-sharing edge pairs, Eq3
/// over (i, j). The coefficient identities conj(E^{(vw)})·E^{(wv)} =
/// −sgn(q)·I and spec(F†F) = {|q|, |q|⁻¹} are checked within 1e−10.
pub fn emit_presentation(
    s: &FundamentalSolution,
    g: &OrientedGraph,
    dp: DeformationParameter,
) -> Result<Presentation> {
    let e = e_matrices(s, dp)?;
    let f = f_matrix(dp);
    check_coefficient_identities(&e, &f, s.q_sign(), dp)?;

    // Bases of the blocks are edges in id order, matching build_solution.
    let mut block_edges: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
    for edge in g.edges() {
        block_edges
            .entry((edge.src.clone(), edge.dst.clone()))
            .or_default()
            .push(edge.id.clone());
    }
    for ids in block_edges.values_mut() {
        ids.sort_unstable();
    }

    let projections: Vec<String> = g.vertices().to_vec();
    let mut generators = Vec::with_capacity(2 * g.edges().len());
    for edge in g.edges() {
        for col in [1u8, 2u8] {
            generators.push(ZGenerator { edge: edge.id.clone(), col });
        }
    }

    let mut relations = Vec::new();
    // Eq1: one instance per (v, i, w).
    for v in g.vertices() {
        for edge in g.edges() {
            for w in g.vertices() {
                let coeff = if &edge.src == v && &edge.dst == w { 1.0 } else { 0.0 };
                relations.push(Relation::Eq1 {
                    v: v.clone(),
                    edge: edge.id.clone(),
                    w: w.clone(),
                    coeff,
                });
            }
        }
    }
    // Eq2: per vertex and column pair.
    for w in g.vertices() {
        let edges: Vec<String> = g.in_edges(w).map(|e| e.id.clone()).collect();
        for j in [1u8, 2u8] {
            for k in [1u8, 2u8] {
                relations.push(Relation::Eq2 {
                    w: w.clone(),
                    j,
                    k,
                    edges: edges.clone(),
                    rhs: if j == k { 1.0 } else { 0.0 },
                });
            }
        }
    }
    // Eq2': per ordered pair of edges with a common source.
    for i in g.edges() {
        for k in g.edges() {
            if i.src == k.src {
                relations.push(Relation::Eq2p {
                    i: i.id.clone(),
                    k: k.id.clone(),
                    rhs: if i.id == k.id { 1.0 } else { 0.0 },
                });
            }
        }
    }
    // Eq3: per edge and column, with coefficients E^{(w,v)}_{ik} F_{lj}.
    for i in g.edges() {
        let reverse_key = (i.dst.clone(), i.src.clone());
        let terms = block_edges.get(&reverse_key).cloned().unwrap_or_default();
        let e_wv = e.get(&reverse_key).ok_or_else(|| {
            Error::Malformed(format!(
                "missing E-block ({}, {}) required by Eq3",
                i.dst, i.src
            ))
        })?;
        // Row index of edge i inside the (v, w) basis.
        let forward_key = (i.src.clone(), i.dst.clone());
        let row = block_edges[&forward_key]
            .iter()
            .position(|id| id == &i.id)
            .expect("edge belongs to its own block");
        for j in [1u8, 2u8] {
            let mut coeffs = Vec::with_capacity(terms.len());
            for (col, _k_edge) in terms.iter().enumerate() {
                // E^{(w,v)} maps the (w,v)-basis; entry (i, k) pairs the
                // forward edge i with the reverse edge k.
                let e_ik = e_wv[(row, col)];
                let f1j = f[0][(j - 1) as usize];
                let f2j = f[1][(j - 1) as usize];
                coeffs.push([
                    [(e_ik * f1j).re, (e_ik * f1j).im],
                    [(e_ik * f2j).re, (e_ik * f2j).im],
                ]);
            }
            relations.push(Relation::Eq3 { edge: i.id.clone(), j, terms: terms.clone(), coeffs });
        }
    }

    Ok(Presentation { projections, generators, relations, f, e })
}

fn check_coefficient_identities(
    e: &BTreeMap<(String, String), CMatrix>,
    f: &[[f64; 2]; 2],
    q_sign: f64,
    dp: DeformationParameter,
) -> Result<()> {
    for ((v, w), e_vw) in e {
        let Some(e_wv) = e.get(&(w.clone(), v.clone())) else {
            return Err(Error::Malformed(format!("missing opposite E-block ({w}, {v})")));
        };
        // Σ_k conj(E^{(vw)}_{ik}) E^{(wv)}_{kj} = −sgn(q) δ_{ij}.
        let prod = e_vw.map(|z| z.conj()) * e_wv;
        let expected =
            CMatrix::identity(prod.nrows(), prod.ncols()) * Complex64::new(-q_sign, 0.0);
        let residual = (&prod - &expected).norm();
        if residual > COEFF_TOL {
            return Err(Error::VerificationFailed(format!(
                "conj(E^(vw))E^(wv) identity fails at ({v}, {w}): residual {residual}"
            )));
        }
    }
    // F†F has eigenvalues {|q|, |q|⁻¹}: with this F it is already diagonal.
    let u = dp.abs_q();
    let ftf = [
        [f[0][0] * f[0][0] + f[1][0] * f[1][0], f[0][0] * f[0][1] + f[1][0] * f[1][1]],
        [f[0][1] * f[0][0] + f[1][1] * f[1][0], f[0][1] * f[0][1] + f[1][1] * f[1][1]],
    ];
    let ok = (ftf[0][0] - 1.0 / u).abs() <= COEFF_TOL
        && (ftf[1][1] - u).abs() <= COEFF_TOL
        && ftf[0][1].abs() <= COEFF_TOL
        && ftf[1][0].abs() <= COEFF_TOL;
    if !ok {
        return Err(Error::VerificationFailed(
            "F†F does not have spectrum {|q|, |q|^-1}".into(),
        ));
    }
    Ok(())
}

/// Podleś-sphere parameter dictionary for `0 < |q| < 1`.
#[derive(Debug, Clone, Serialize)]
pub struct PodlesParameters {
    /// Podleś parameter c(x) = (|q|^{x+1} − |q|^{−x−1})^{−2}; 0 at x = ∞.
    pub c: f64,
    /// a = W_{q,x}(0→1).
    pub a: f64,
    /// The weight family on a window of the line graph.
    #[serde(skip)]
    pub window: (OrientedGraph, Cost),
}

/// Evaluate c(x), a = W_{q,x}(0→1) and the window weights.
pub fn podles_parameters(
    dp: DeformationParameter,
    x: PodlesX,
    window: usize,
) -> Result<PodlesParameters> {
    let u = dp.abs_q();
    if (u - 1.0).abs() < 1e-14 {
        return Err(Error::InvalidParameter(
            "podles_parameters requires |q| < 1 (c(x) diverges at |q| = 1)".into(),
        ));
    }
    let (c, a) = match x {
        PodlesX::Infinity => (0.0, 1.0 / u),
        PodlesX::Finite(x) => {
            let c = (u.powf(x + 1.0) - u.powf(-x - 1.0)).powi(-2);
            let a = (u.powf(x + 1.0) + u.powf(-x - 1.0)) / (u.powf(x) + u.powf(-x));
            (c, a)
        }
    };
    let (g, w, _) = catalog(
        CatalogName::AInfInf,
        &CatalogParams::new(dp.q()).with_x(x).with_window(window),
    )?;
    Ok(PodlesParameters { c, a, window: (g, w) })
}
