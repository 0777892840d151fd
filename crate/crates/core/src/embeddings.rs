//! The worked equivariant-morphism examples, as constructors producing
//! [`MorphismData`] on finite windows.
//!
//! Sign conventions. Solutions here are built directly (not through
//! `build_solution`) so that the printed block matrices pass the diagram
//! check verbatim: on the line graphs the rightward maps carry +√W and the
//! leftward maps −sgn(q)·√W. The gauge phases λ, β are free in U(1); the
//! compensating phase conj(λ) on the second column keeps the family inside
//! the solution set for every λ.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use crate::catalog::{catalog, podles_weight_up, CatalogName, CatalogParams, PodlesX};
use crate::error::{Error, Result};
use crate::fusion::{CMatrix, FundamentalSolution};
use crate::graph::{DeformationParameter, OrientedGraph};
use crate::morphism::MorphismData;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn scalar(z: Complex64) -> CMatrix {
    CMatrix::from_element(1, 1, z)
}

/// The point solution of quantum SU(2) itself: one vertex, H = C² and the
/// 𝒥-matrix equal to F = [[0, |q|^{1/2}], [−sgn(q)|q|^{−1/2}, 0]].
pub fn suq2_point_solution(dp: DeformationParameter) -> FundamentalSolution {
    let u = dp.abs_q();
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 1)] = re(u.sqrt());
    m[(1, 0)] = re(-dp.sign() / u.sqrt());
    let mut jmaps = BTreeMap::new();
    jmaps.insert(("pt".to_owned(), "pt".to_owned()), m);
    FundamentalSolution::new(vec!["pt".to_owned()], BTreeSet::new(), jmaps, dp.sign())
        .expect("point solution is well formed")
}

/// The point graph of quantum SU(2): one vertex, two loops of weight
/// |q|^{±1}.
pub fn suq2_point_graph(_dp: DeformationParameter) -> OrientedGraph {
    use crate::graph::Edge;
    OrientedGraph::new(
        vec!["pt".to_owned()],
        vec![
            Edge { id: "pt\u{2192}pt#0".into(), src: "pt".into(), dst: "pt".into() },
            Edge { id: "pt\u{2192}pt#1".into(), src: "pt".into(), dst: "pt".into() },
        ],
        vec![],
    )
    .expect("point graph is well formed")
}

/// Line-graph solution over the integer window [−m, m] with rightward signs
/// +1 and leftward signs −sgn(q).
fn podles_line_solution(
    dp: DeformationParameter,
    x: PodlesX,
    window: usize,
) -> FundamentalSolution {
    let u = dp.abs_q();
    let m = window as i64;
    let vertices: Vec<String> = (-m..=m).map(|k| k.to_string()).collect();
    let boundary: BTreeSet<String> = [(-m).to_string(), m.to_string()].into();
    let mut jmaps = BTreeMap::new();
    for k in -m..m {
        let w_up = podles_weight_up(u, x, k);
        jmaps.insert(
            (k.to_string(), (k + 1).to_string()),
            scalar(re(w_up.sqrt())),
        );
        jmaps.insert(
            ((k + 1).to_string(), k.to_string()),
            scalar(re(-dp.sign() / w_up.sqrt())),
        );
    }
    FundamentalSolution::new(vertices, boundary, jmaps, dp.sign())
        .expect("line solution is well formed")
}

/// The names accepted by [`example_embedding`].
#[derive(Debug, Clone)]
pub enum EmbeddingName {
    /// Podleś sphere into quantum SU(2); parameters q, x, a phase λ and
    /// optional per-vertex phases α_m.
    PodlesIntoSuq2 { x: PodlesX, lambda: Complex64, alphas: Option<Vec<Complex64>> },
    /// Quantum real projective plane into the x = 0 Podleś sphere.
    Rp2IntoPodles0,
    /// The A∞′ coideal as a target of the x = 1/2 Podleś sphere (q < 0).
    AinfPrimeCoideal,
    /// First D₃′ family at q = −1, parametrized by β ∈ U(1).
    D3PrimeFamily1 { beta: Complex64 },
    /// Second D₃′ family at q = −1, parametrized by β ∈ U(1).
    D3PrimeFamily2 { beta: Complex64 },
}

fn require_unit(z: Complex64, what: &str) -> Result<()> {
    if (z.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "{what} must lie on the unit circle, got modulus {}",
            z.norm()
        )));
    }
    Ok(())
}

/// Construct the requested example on a window of the given radius.
/// `window` is ignored by the finite D₃′ examples.
pub fn example_embedding(
    name: &EmbeddingName,
    dp: DeformationParameter,
    window: usize,
) -> Result<MorphismData> {
    match name {
        EmbeddingName::PodlesIntoSuq2 { x, lambda, alphas } => {
            podles_into_suq2(dp, *x, *lambda, alphas.as_deref(), window)
        }
        EmbeddingName::Rp2IntoPodles0 => rp2_into_podles0(dp, window),
        EmbeddingName::AinfPrimeCoideal => ainf_prime_coideal(dp, window),
        EmbeddingName::D3PrimeFamily1 { beta } => d3prime(dp, *beta, 1),
        EmbeddingName::D3PrimeFamily2 { beta } => d3prime(dp, *beta, 2),
    }
}

/// ψ_m for the Podleś-into-SU_q(2) embedding. All F_m are one-dimensional,
/// so each block is a 2×2 unitary from (F_{m+1}⊗H_{m+1,m}) ⊕ (F_{m−1}⊗H_{m−1,m})
/// to H_{1/2} ⊗ F_m.
fn podles_into_suq2(
    dp: DeformationParameter,
    x: PodlesX,
    lambda: Complex64,
    alphas: Option<&[Complex64]>,
    window: usize,
) -> Result<MorphismData> {
    require_unit(lambda, "lambda")?;
    if window < 2 {
        return Err(Error::InvalidParameter("window must be at least 2".into()));
    }
    if dp.abs_q() >= 1.0 {
        return Err(Error::InvalidParameter(
            "the Podleś embedding requires 0 < |q| < 1".into(),
        ));
    }
    let u = dp.abs_q();
    let m_max = window as i64;
    let target = podles_line_solution(dp, x, window);
    let source = suq2_point_solution(dp);

    let alpha = |k: i64| -> Result<Complex64> {
        match alphas {
            None => Ok(re(1.0)),
            Some(list) => {
                let idx = (k + m_max) as usize;
                let a = *list.get(idx).ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "alphas must cover the window: missing index {idx}"
                    ))
                })?;
                require_unit(a, "alpha")?;
                Ok(a)
            }
        }
    };

    let mut dims = BTreeMap::new();
    for k in -m_max..=m_max {
        dims.insert(("pt".to_owned(), k.to_string()), 1usize);
    }

    let mut data = MorphismData {
        source,
        target,
        dims,
        psi: BTreeMap::new(),
        window: BTreeSet::new(),
    };

    // Weight fractions A_m = u^{-(x+m)}/(u^{x+m} + u^{-(x+m)}) and
    // B_m = 1 - A_m; x = ∞ degenerates to A = 1, B = 0.
    let fractions = |k: i64| -> (f64, f64) {
        match x {
            PodlesX::Infinity => (1.0, 0.0),
            PodlesX::Finite(x) => {
                let p = u.powf(x + k as f64);
                (1.0 / p / (p + 1.0 / p), p / (p + 1.0 / p))
            }
        }
    };
    let mu = lambda.conj();

    for k in (-m_max + 1)..m_max {
        let (a_m, b_m) = fractions(k);
        let parity = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let dom = data.domain_layout("pt", &k.to_string());
        let cod = data.codomain_layout("pt", &k.to_string());
        let mut block = CMatrix::zeros(cod.total(), dom.total());
        let c_plus = alpha(k)? * alpha(k + 1)?.conj();
        let c_minus = alpha(k)? * alpha(k - 1)?.conj();
        let col_plus = dom.index(&(k + 1).to_string(), 0, 0).expect("layout");
        let col_minus = dom.index(&(k - 1).to_string(), 0, 0).expect("layout");
        let row_e1 = cod.index("pt", 0, 0).expect("layout");
        let row_e2 = cod.index("pt", 1, 0).expect("layout");
        if dp.sign() > 0.0 {
            // From m+1: (−1)^m (λ √A_m e₂ + conj(λ) √B_m e₁).
            block[(row_e2, col_plus)] = re(parity) * c_plus * lambda * re(a_m.sqrt());
            block[(row_e1, col_plus)] = re(parity) * c_plus * mu * re(b_m.sqrt());
            // From m−1: (−1)^m (−λ √B_m e₂ + conj(λ) √A_m e₁).
            block[(row_e2, col_minus)] = re(-parity) * c_minus * lambda * re(b_m.sqrt());
            block[(row_e1, col_minus)] = re(parity) * c_minus * mu * re(a_m.sqrt());
        } else {
            // q < 0: from m+1: (−1)^m λ √A_m e₂ + conj(λ) √B_m e₁.
            block[(row_e2, col_plus)] = re(parity) * c_plus * lambda * re(a_m.sqrt());
            block[(row_e1, col_plus)] = c_plus * mu * re(b_m.sqrt());
            // From m−1: λ √B_m e₂ − (−1)^m conj(λ) √A_m e₁.
            block[(row_e2, col_minus)] = c_minus * lambda * re(b_m.sqrt());
            block[(row_e1, col_minus)] = re(-parity) * c_minus * mu * re(a_m.sqrt());
        }
        data.psi.insert(("pt".to_owned(), k.to_string()), block);
    }

    for k in (-m_max + 2)..(m_max - 1) {
        data.window.insert(("pt".to_owned(), k.to_string()));
    }
    Ok(data)
}

/// D∞* solution with +√W on the edges pointing away from the endpoints.
fn dinf_star_solution(dp: DeformationParameter, window: usize) -> Result<FundamentalSolution> {
    let (g, c, _) =
        catalog(CatalogName::DInfStar, &CatalogParams::new(dp.q()).with_window(window))?;
    let mut jmaps = BTreeMap::new();
    for e in g.edges() {
        let w = c.weight(&e.id)?;
        // Forward means towards the chain tail: * → 1, ~ → 1, n → n+1.
        let forward = (e.src == "*" || e.src == "~")
            || (e.src != "*"
                && e.src != "~"
                && e.dst != "*"
                && e.dst != "~"
                && e.src.parse::<i64>().unwrap_or(0) < e.dst.parse::<i64>().unwrap_or(0));
        let sign = if forward { 1.0 } else { -dp.sign() };
        jmaps.insert((e.src.clone(), e.dst.clone()), scalar(re(sign * w.sqrt())));
    }
    FundamentalSolution::new(
        g.vertices().to_vec(),
        g.boundary().clone(),
        jmaps,
        dp.sign(),
    )
}

/// The embedding of the quantum projective plane into the x = 0 Podleś
/// sphere: endpoints of D∞* map to vertex 0, the chain folds onto ±m, and
/// the endpoint block is (1/√2)[[1, 1], [−1, 1]].
fn rp2_into_podles0(dp: DeformationParameter, window: usize) -> Result<MorphismData> {
    if window < 3 {
        return Err(Error::InvalidParameter("window must be at least 3".into()));
    }
    let n = window as i64;
    let target = dinf_star_solution(dp, window)?;
    let source = podles_line_solution(dp, PodlesX::Finite(0.0), window);
    let positive_q = dp.sign() > 0.0;

    let mut dims = BTreeMap::new();
    dims.insert(("0".to_owned(), "*".to_owned()), 1usize);
    dims.insert(("0".to_owned(), "~".to_owned()), 1usize);
    for m in 1..=n {
        dims.insert((m.to_string(), m.to_string()), 1usize);
        dims.insert(((-m).to_string(), m.to_string()), 1usize);
    }

    let mut data = MorphismData { source, target, dims, psi: BTreeMap::new(), window: BTreeSet::new() };

    // Endpoint block ψ_{0,1}: columns (*, ~), rows (−1, 1) after sorting.
    {
        let dom = data.domain_layout("0", "1");
        let cod = data.codomain_layout("0", "1");
        let mut block = CMatrix::zeros(cod.total(), dom.total());
        let col_star = dom.index("*", 0, 0).expect("layout");
        let col_tilde = dom.index("~", 0, 0).expect("layout");
        let row_plus = cod.index("1", 0, 0).expect("layout");
        let row_minus = cod.index("-1", 0, 0).expect("layout");
        let s = 1.0 / 2.0_f64.sqrt();
        block[(row_plus, col_star)] = re(s);
        block[(row_minus, col_star)] = re(-s);
        block[(row_plus, col_tilde)] = re(s);
        block[(row_minus, col_tilde)] = re(s);
        data.psi.insert(("0".to_owned(), "1".to_owned()), block);
    }

    // 1×1 phases, derived from the diagram; everything is +1 except the
    // negative-branch chain blocks for q > 0 and two endpoint returns.
    let phase = |t: String, r: String, value: f64, data: &mut MorphismData| {
        data.psi.insert((t, r), scalar(re(value)));
    };

    // t = ±1 into the endpoints.
    let (a_star_p, a_star_m, a_tilde_p, a_tilde_m) = if positive_q {
        (1.0, 1.0, 1.0, -1.0)
    } else {
        (1.0, -1.0, 1.0, 1.0)
    };
    phase("1".into(), "*".into(), a_star_p, &mut data);
    phase("-1".into(), "*".into(), a_star_m, &mut data);
    phase("1".into(), "~".into(), a_tilde_p, &mut data);
    phase("-1".into(), "~".into(), a_tilde_m, &mut data);

    // Chain blocks.
    for m in 1..n {
        phase(m.to_string(), (m + 1).to_string(), 1.0, &mut data);
        let neg = if positive_q { if m % 2 == 0 { 1.0 } else { -1.0 } } else { 1.0 };
        phase((-m).to_string(), (m + 1).to_string(), neg, &mut data);
    }
    for m in 2..=n {
        phase(m.to_string(), (m - 1).to_string(), 1.0, &mut data);
        let neg = if positive_q { if m % 2 == 0 { 1.0 } else { -1.0 } } else { 1.0 };
        phase((-m).to_string(), (m - 1).to_string(), neg, &mut data);
    }

    // Window: (0,*), (0,~) and (±m, m) pairs whose neighbourhoods stay
    // clear of both boundaries.
    data.window.insert(("0".to_owned(), "*".to_owned()));
    data.window.insert(("0".to_owned(), "~".to_owned()));
    for m in 1..=(n - 2) {
        data.window.insert((m.to_string(), m.to_string()));
        data.window.insert(((-m).to_string(), m.to_string()));
    }
    Ok(data)
}

/// A∞′ solution with every sign +1 (valid for q < 0, where the weight-1
/// loop is a fixed point of the involution).
fn ainf_prime_solution(dp: DeformationParameter, window: usize) -> Result<FundamentalSolution> {
    let (g, c, _) =
        catalog(CatalogName::AInfPrime, &CatalogParams::new(dp.q()).with_window(window))?;
    let mut jmaps = BTreeMap::new();
    for e in g.edges() {
        let w = c.weight(&e.id)?;
        jmaps.insert((e.src.clone(), e.dst.clone()), scalar(re(w.sqrt())));
    }
    FundamentalSolution::new(g.vertices().to_vec(), g.boundary().clone(), jmaps, dp.sign())
}

/// The x = 1/2 Podleś sphere into the A∞′ coideal (q < 0): vertex m of the
/// line maps to m for m ≥ 0 and to −(m+1) for m < 0; every block phase is 1.
fn ainf_prime_coideal(dp: DeformationParameter, window: usize) -> Result<MorphismData> {
    if dp.sign() > 0.0 {
        return Err(Error::InvalidParameter("the A_inf_prime coideal requires q < 0".into()));
    }
    if window < 3 {
        return Err(Error::InvalidParameter("window must be at least 3".into()));
    }
    let n = window as i64;
    let target = podles_line_solution(dp, PodlesX::Finite(0.5), window);
    // q < 0 flips the leftward sign to +1, matching the all-positive A∞′.
    let source = ainf_prime_solution(dp, window)?;

    let mut dims = BTreeMap::new();
    for t in 0..=n {
        dims.insert((t.to_string(), t.to_string()), 1usize);
    }
    for t in 0..n {
        dims.insert((t.to_string(), (-(t + 1)).to_string()), 1usize);
    }

    let mut data = MorphismData { source, target, dims, psi: BTreeMap::new(), window: BTreeSet::new() };

    let phase = |t: String, r: String, data: &mut MorphismData| {
        data.psi.insert((t, r), scalar(re(1.0)));
    };
    for t in 0..n {
        phase(t.to_string(), (t + 1).to_string(), &mut data);
    }
    for t in 1..=n {
        phase(t.to_string(), (t - 1).to_string(), &mut data);
    }
    phase("0".into(), "-1".into(), &mut data);
    phase("0".into(), "0".into(), &mut data);
    for t in 1..n {
        phase(t.to_string(), (-t).to_string(), &mut data);
    }
    for t in 0..n {
        phase(t.to_string(), (-(t + 2)).to_string(), &mut data);
    }

    for t in 0..=(n - 2) {
        data.window.insert((t.to_string(), t.to_string()));
    }
    for t in 0..=(n - 3).max(0) {
        data.window.insert((t.to_string(), (-(t + 1)).to_string()));
    }
    Ok(data)
}

/// The D₃′ solution at q = −1, with the printed coefficients.
fn d3prime_solution() -> FundamentalSolution {
    let r2 = 2.0_f64.sqrt();
    let mut jmaps = BTreeMap::new();
    jmaps.insert(("*".to_owned(), "*".to_owned()), scalar(re(1.0)));
    jmaps.insert(("*".to_owned(), "+".to_owned()), scalar(re(1.0 / r2)));
    jmaps.insert(("+".to_owned(), "*".to_owned()), scalar(re(r2)));
    jmaps.insert(("*".to_owned(), "-".to_owned()), scalar(re(1.0 / r2)));
    jmaps.insert(("-".to_owned(), "*".to_owned()), scalar(re(r2)));
    FundamentalSolution::new(
        vec!["+".to_owned(), "-".to_owned(), "*".to_owned()],
        BTreeSet::new(),
        jmaps,
        -1.0,
    )
    .expect("D3' solution is well formed")
}

/// The two D₃′ coideal families at q = −1.
fn d3prime(dp: DeformationParameter, beta: Complex64, family: u8) -> Result<MorphismData> {
    require_unit(beta, "beta")?;
    if (dp.q() + 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter("the D3' families exist at q = -1".into()));
    }
    let target = d3prime_solution();
    let source = suq2_point_solution(dp);

    let mut dims = BTreeMap::new();
    dims.insert(("pt".to_owned(), "+".to_owned()), 1usize);
    dims.insert(("pt".to_owned(), "-".to_owned()), 1usize);
    dims.insert(("pt".to_owned(), "*".to_owned()), 2usize);

    let mut data = MorphismData { source, target, dims, psi: BTreeMap::new(), window: BTreeSet::new() };

    let s = 1.0 / 2.0_f64.sqrt();
    let b = beta;
    let bc = beta.conj();

    // ψ_{pt,+}: (ξ_a ⊗ ξ_{*+}) ↦ e_a ⊗ ξ_+ in both families.
    {
        let dom = data.domain_layout("pt", "+");
        let cod = data.codomain_layout("pt", "+");
        let mut block = CMatrix::zeros(cod.total(), dom.total());
        for a in 0..2 {
            block[(cod.index("pt", a, 0).unwrap(), dom.index("*", a, 0).unwrap())] = re(1.0);
        }
        data.psi.insert(("pt".to_owned(), "+".to_owned()), block);
    }
    // ψ_{pt,−}.
    {
        let dom = data.domain_layout("pt", "-");
        let cod = data.codomain_layout("pt", "-");
        let mut block = CMatrix::zeros(cod.total(), dom.total());
        match family {
            1 => {
                block[(cod.index("pt", 0, 0).unwrap(), dom.index("*", 0, 0).unwrap())] = re(1.0);
                block[(cod.index("pt", 1, 0).unwrap(), dom.index("*", 1, 0).unwrap())] = re(-1.0);
            }
            _ => {
                // ξ₁ ↦ −conj(β)⁴ e₂ ⊗ ξ₋, ξ₂ ↦ e₁ ⊗ ξ₋.
                block[(cod.index("pt", 1, 0).unwrap(), dom.index("*", 0, 0).unwrap())] =
                    -bc.powu(4);
                block[(cod.index("pt", 0, 0).unwrap(), dom.index("*", 1, 0).unwrap())] = re(1.0);
            }
        }
        data.psi.insert(("pt".to_owned(), "-".to_owned()), block);
    }
    // ψ_{pt,*}: domain summands (s = *, +, −) in sorted order.
    {
        let dom = data.domain_layout("pt", "*");
        let cod = data.codomain_layout("pt", "*");
        let mut block = CMatrix::zeros(cod.total(), dom.total());
        let col_star = |a: usize| dom.index("*", a, 0).unwrap();
        let col_plus = dom.index("+", 0, 0).unwrap();
        let col_minus = dom.index("-", 0, 0).unwrap();
        let out = |h: usize, f: usize| cod.index("pt", h, f).unwrap();
        match family {
            1 => {
                // ξ₁⊗ξ** ↦ β e₂⊗ξ₂; ξ₂⊗ξ** ↦ conj(β) e₁⊗ξ₁.
                block[(out(1, 1), col_star(0))] = b;
                block[(out(0, 0), col_star(1))] = bc;
                // ξ₊⊗ξ₊* ↦ (e₂⊗ξ₁ + e₁⊗ξ₂)/√2; ξ₋⊗ξ₋* ↦ (e₂⊗ξ₁ − e₁⊗ξ₂)/√2.
                block[(out(1, 0), col_plus)] = re(s);
                block[(out(0, 1), col_plus)] = re(s);
                block[(out(1, 0), col_minus)] = re(s);
                block[(out(0, 1), col_minus)] = re(-s);
            }
            _ => {
                // ξ₁⊗ξ** ↦ ((β e₁ + conj(β) e₂)⊗ξ₁ + (−conj(β) e₁ + conj(β)³ e₂)⊗ξ₂)/2.
                block[(out(0, 0), col_star(0))] = b * re(0.5);
                block[(out(1, 0), col_star(0))] = bc * re(0.5);
                block[(out(0, 1), col_star(0))] = -bc * re(0.5);
                block[(out(1, 1), col_star(0))] = bc.powu(3) * re(0.5);
                // ξ₂⊗ξ** ↦ ((β³ e₁ − β e₂)⊗ξ₁ + (β e₁ + conj(β) e₂)⊗ξ₂)/2.
                block[(out(0, 0), col_star(1))] = b.powu(3) * re(0.5);
                block[(out(1, 0), col_star(1))] = -b * re(0.5);
                block[(out(0, 1), col_star(1))] = b * re(0.5);
                block[(out(1, 1), col_star(1))] = bc * re(0.5);
                // ξ₊⊗ξ₊* ↦ (e₂⊗ξ₁ + e₁⊗ξ₂)/√2.
                block[(out(1, 0), col_plus)] = re(s);
                block[(out(0, 1), col_plus)] = re(s);
                // ξ₋⊗ξ₋* ↦ (−β⁴ e₁⊗ξ₁ + e₂⊗ξ₂)/√2.
                block[(out(0, 0), col_minus)] = -b.powu(4) * re(s);
                block[(out(1, 1), col_minus)] = re(s);
            }
        }
        data.psi.insert(("pt".to_owned(), "*".to_owned()), block);
    }

    data.window.insert(("pt".to_owned(), "+".to_owned()));
    data.window.insert(("pt".to_owned(), "-".to_owned()));
    data.window.insert(("pt".to_owned(), "*".to_owned()));
    Ok(data)
}
