//! The named graph families with their closed-form costs.
//!
//! Infinite families are returned as finite windows with flagged boundary
//! vertices. Weights are evaluated from the closed-form expressions, never
//! stored as decimals, so they are exact up to floating evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Cost, DeformationParameter, Edge, OrientedGraph};

/// Podleś parameter `x ∈ ℝ ∪ {∞}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PodlesX {
    Finite(f64),
    Infinity,
}

impl FromStr for PodlesX {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "Inf" | "INF" | "infinity" | "∞" => Ok(PodlesX::Infinity),
            other => other
                .parse::<f64>()
                .map(PodlesX::Finite)
                .map_err(|_| Error::InvalidParameter(format!("x: cannot parse {other:?}"))),
        }
    }
}

impl fmt::Display for PodlesX {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PodlesX::Finite(x) => write!(f, "{x}"),
            PodlesX::Infinity => write!(f, "inf"),
        }
    }
}

/// Names of the catalog entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CatalogName {
    AInfInf,
    DInfStar,
    ACycle,
    E6Affine,
    E7Affine,
    E8Affine,
    DAffine,
    APrime,
    DPrime,
    AInfPrime,
    PointLoops,
}

impl CatalogName {
    pub const ALL: [CatalogName; 11] = [
        CatalogName::AInfInf,
        CatalogName::DInfStar,
        CatalogName::ACycle,
        CatalogName::E6Affine,
        CatalogName::E7Affine,
        CatalogName::E8Affine,
        CatalogName::DAffine,
        CatalogName::APrime,
        CatalogName::DPrime,
        CatalogName::AInfPrime,
        CatalogName::PointLoops,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CatalogName::AInfInf => "A_inf_inf",
            CatalogName::DInfStar => "D_inf_star",
            CatalogName::ACycle => "A_cycle",
            CatalogName::E6Affine => "E6_affine",
            CatalogName::E7Affine => "E7_affine",
            CatalogName::E8Affine => "E8_affine",
            CatalogName::DAffine => "D_affine",
            CatalogName::APrime => "A_prime",
            CatalogName::DPrime => "D_prime",
            CatalogName::AInfPrime => "A_inf_prime",
            CatalogName::PointLoops => "point_loops",
        }
    }
}

impl FromStr for CatalogName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CatalogName::ALL
            .iter()
            .find(|n| n.as_str() == s)
            .copied()
            .ok_or_else(|| Error::UnknownCatalog(s.to_owned()))
    }
}

impl fmt::Display for CatalogName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters accepted by [`catalog`]. Families ignore fields they do not
/// use; missing required fields fall back to documented defaults.
#[derive(Debug, Clone, Copy)]
pub struct CatalogParams {
    pub q: f64,
    /// Size for `A_cycle` (n ≥ 1), `D_affine` (n ≥ 4), `A_prime` (m ≥ 2),
    /// `D_prime` (m ≥ 3).
    pub n: Option<usize>,
    /// Podleś parameter for `A_inf_inf`.
    pub x: Option<PodlesX>,
    /// Truncation window for the infinite families; defaults to 6.
    pub window: Option<usize>,
    /// Loop count for `point_loops`.
    pub loops: Option<usize>,
}

impl CatalogParams {
    pub fn new(q: f64) -> Self {
        CatalogParams { q, n: None, x: None, window: None, loops: None }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn with_x(mut self, x: PodlesX) -> Self {
        self.x = Some(x);
        self
    }

    pub fn with_window(mut self, m: usize) -> Self {
        self.window = Some(m);
        self
    }

    pub fn with_loops(mut self, k: usize) -> Self {
        self.loops = Some(k);
        self
    }
}

const DEFAULT_WINDOW: usize = 6;

struct Builder {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    weights: BTreeMap<String, f64>,
    boundary: Vec<String>,
    counters: BTreeMap<(String, String), usize>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            vertices: Vec::new(),
            edges: Vec::new(),
            weights: BTreeMap::new(),
            boundary: Vec::new(),
            counters: BTreeMap::new(),
        }
    }

    fn vertex(&mut self, id: &str) {
        self.vertices.push(id.to_owned());
    }

    fn edge(&mut self, src: &str, dst: &str, weight: f64) -> String {
        let key = (src.to_owned(), dst.to_owned());
        let k = self.counters.entry(key).or_insert(0);
        let id = format!("{src}\u{2192}{dst}#{k}");
        *k += 1;
        self.edges.push(Edge { id: id.clone(), src: src.to_owned(), dst: dst.to_owned() });
        self.weights.insert(id.clone(), weight);
        id
    }

    /// A reciprocal pair of edges between distinct vertices.
    fn pair(&mut self, a: &str, b: &str, w_forward: f64) {
        self.edge(a, b, w_forward);
        self.edge(b, a, 1.0 / w_forward);
    }

    fn boundary(&mut self, id: &str) {
        self.boundary.push(id.to_owned());
    }

    fn finish(self) -> Result<(OrientedGraph, Cost)> {
        let g = OrientedGraph::new(self.vertices, self.edges, self.boundary)?;
        let c = Cost::new(self.weights)?;
        Ok((g, c))
    }
}

fn window_param(params: &CatalogParams, min: usize) -> Result<usize> {
    let m = params.window.unwrap_or(DEFAULT_WINDOW);
    if m < min {
        return Err(Error::InvalidParameter(format!("window must be >= {min}, got {m}")));
    }
    Ok(m)
}

/// `t_k = |q|^k + |q|^{-k}`, the quantity whose successive ratios give the
/// `D_inf_star` and `A_inf_inf (x = 0)` weights.
fn t_k(u: f64, k: f64) -> f64 {
    u.powf(k) + u.powf(-k)
}

/// `W_{q,x}(m → m+1)` for the Podleś family, evaluated through |q|.
pub fn podles_weight_up(u: f64, x: PodlesX, m: i64) -> f64 {
    match x {
        PodlesX::Infinity => 1.0 / u,
        PodlesX::Finite(x) => t_k(u, x + m as f64 + 1.0) / t_k(u, x + m as f64),
    }
}

/// Build only the unweighted shape of a catalog entry. Shape parameters are
/// validated; `q` is ignored, so shapes exist even where no fair cost does.
pub fn catalog_graph(name: CatalogName, params: &CatalogParams) -> Result<OrientedGraph> {
    let (g, _, _) = build(name, params, false)?;
    Ok(g)
}

/// A catalog entry together with its printed cost.
///
/// The cost satisfies the fair and balanced axioms at every non-boundary
/// vertex for the supplied `q`; parameter combinations for which no such
/// cost exists are rejected.
pub fn catalog(
    name: CatalogName,
    params: &CatalogParams,
) -> Result<(OrientedGraph, Cost, DeformationParameter)> {
    let (g, c, dp) = build(name, params, true)?;
    Ok((g, c, dp))
}

fn build(
    name: CatalogName,
    params: &CatalogParams,
    strict_q: bool,
) -> Result<(OrientedGraph, Cost, DeformationParameter)> {
    // Shape-only construction uses a placeholder q where the family would
    // reject the supplied one.
    let dp = DeformationParameter::new(params.q)?;
    let u = dp.abs_q();
    let abs_t = dp.abs_t();
    let mut b = Builder::new();

    match name {
        CatalogName::AInfInf => {
            let m = window_param(params, 1)? as i64;
            let x = params.x.unwrap_or(PodlesX::Finite(0.0));
            for k in -m..=m {
                b.vertex(&k.to_string());
            }
            for k in -m..m {
                let w = podles_weight_up(u, x, k);
                b.pair(&k.to_string(), &(k + 1).to_string(), w);
            }
            b.boundary(&(-m).to_string());
            b.boundary(&m.to_string());
        }
        CatalogName::DInfStar => {
            let m = window_param(params, 2)?;
            b.vertex("*");
            b.vertex("~");
            for k in 1..=m {
                b.vertex(&k.to_string());
            }
            b.pair("*", "1", t_k(u, 1.0));
            b.pair("~", "1", t_k(u, 1.0));
            for k in 1..m {
                let w = t_k(u, k as f64 + 1.0) / t_k(u, k as f64);
                b.pair(&k.to_string(), &(k + 1).to_string(), w);
            }
            b.boundary(&m.to_string());
        }
        CatalogName::ACycle => {
            let n = params.n.unwrap_or(1);
            if n < 1 {
                return Err(Error::InvalidParameter("A_cycle requires n >= 1".into()));
            }
            let len = n + 1;
            for k in 0..len {
                b.vertex(&k.to_string());
            }
            // Counter-clockwise edges carry |q|, clockwise |q|⁻¹.
            for k in 0..len {
                let next = (k + 1) % len;
                b.edge(&k.to_string(), &next.to_string(), u);
            }
            for k in 0..len {
                let next = (k + 1) % len;
                b.edge(&next.to_string(), &k.to_string(), 1.0 / u);
            }
        }
        CatalogName::E6Affine | CatalogName::E7Affine | CatalogName::E8Affine => {
            if strict_q && (u - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "{name} admits a fair and balanced cost only at |q| = 1, got q = {}",
                    params.q
                )));
            }
            let (marks, arm_mark, arm_at): (&[f64], f64, usize) = match name {
                CatalogName::E6Affine => (&[1.0, 2.0, 3.0, 2.0, 1.0], 2.0, 2),
                CatalogName::E7Affine => (&[1.0, 2.0, 3.0, 4.0, 3.0, 2.0, 1.0], 2.0, 3),
                _ => (&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 4.0, 2.0], 3.0, 5),
            };
            let row = marks.len();
            for k in 0..row {
                b.vertex(&k.to_string());
            }
            for k in 0..row - 1 {
                b.pair(&k.to_string(), &(k + 1).to_string(), marks[k + 1] / marks[k]);
            }
            match name {
                CatalogName::E6Affine => {
                    // Two-vertex arm above the center.
                    b.vertex("5");
                    b.vertex("6");
                    b.pair(&arm_at.to_string(), "5", arm_mark / marks[arm_at]);
                    b.pair("5", "6", 1.0 / arm_mark);
                }
                CatalogName::E7Affine => {
                    b.vertex("7");
                    b.pair(&arm_at.to_string(), "7", arm_mark / marks[arm_at]);
                }
                _ => {
                    b.vertex("8");
                    b.pair(&arm_at.to_string(), "8", arm_mark / marks[arm_at]);
                }
            }
        }
        CatalogName::DAffine => {
            let n = params.n.unwrap_or(4);
            if n < 4 {
                return Err(Error::InvalidParameter("D_affine requires n >= 4".into()));
            }
            if strict_q && (u - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "D_affine admits a fair and balanced cost only at |q| = 1, got q = {}",
                    params.q
                )));
            }
            // Forks (mark 1) at both ends of a mark-2 chain of n−3 vertices.
            b.vertex("l0");
            b.vertex("l1");
            let chain = n - 3;
            for k in 1..=chain {
                b.vertex(&format!("m{k}"));
            }
            b.vertex("r0");
            b.vertex("r1");
            b.pair("l0", "m1", 2.0);
            b.pair("l1", "m1", 2.0);
            for k in 1..chain {
                b.pair(&format!("m{k}"), &format!("m{}", k + 1), 1.0);
            }
            b.pair(&format!("m{chain}"), "r0", 0.5);
            b.pair(&format!("m{chain}"), "r1", 0.5);
        }
        CatalogName::APrime => {
            let m = params.n.unwrap_or(2);
            if m < 2 {
                return Err(Error::InvalidParameter("A_prime requires m >= 2".into()));
            }
            if strict_q && (params.q + 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "A_prime admits a fair and balanced cost only at q = -1, got q = {}",
                    params.q
                )));
            }
            for k in 0..m {
                b.vertex(&k.to_string());
            }
            b.edge("0", "0", 1.0);
            for k in 0..m - 1 {
                b.pair(&k.to_string(), &(k + 1).to_string(), 1.0);
            }
            b.edge(&(m - 1).to_string(), &(m - 1).to_string(), 1.0);
        }
        CatalogName::DPrime => {
            let m = params.n.unwrap_or(3);
            if m < 3 {
                return Err(Error::InvalidParameter("D_prime requires m >= 3".into()));
            }
            if strict_q && (params.q + 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "D_prime admits a fair and balanced cost only at q = -1, got q = {}",
                    params.q
                )));
            }
            b.vertex("+");
            b.vertex("-");
            for k in 1..=m - 2 {
                b.vertex(&k.to_string());
            }
            b.pair("+", "1", 2.0);
            b.pair("-", "1", 2.0);
            for k in 1..m - 2 {
                b.pair(&k.to_string(), &(k + 1).to_string(), 1.0);
            }
            let last = (m - 2).to_string();
            b.edge(&last, &last, 1.0);
        }
        CatalogName::AInfPrime => {
            let m = window_param(params, 2)?;
            if strict_q && params.q >= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "A_inf_prime admits a fair and balanced cost only for q < 0, got q = {}",
                    params.q
                )));
            }
            // b_k = |q|^{k+1/2} + |q|^{-k-1/2}: the x = 1/2 Podleś weights
            // folded at 0, with the fold edge becoming a loop of weight 1.
            for k in 0..=m {
                b.vertex(&k.to_string());
            }
            b.edge("0", "0", 1.0);
            for k in 0..m {
                let w = t_k(u, k as f64 + 1.5) / t_k(u, k as f64 + 0.5);
                b.pair(&k.to_string(), &(k + 1).to_string(), w);
            }
            b.boundary(&m.to_string());
        }
        CatalogName::PointLoops => {
            let k = params.loops.unwrap_or(2);
            if k < 1 {
                return Err(Error::InvalidParameter("point_loops requires loops >= 1".into()));
            }
            if strict_q {
                if k % 2 == 1 && params.q > 0.0 {
                    return Err(Error::InvalidParameter(
                        "point_loops with an odd loop count requires q < 0".into(),
                    ));
                }
                if (k as f64) > abs_t + 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "point_loops with {k} loops requires |q| + |q|^-1 >= {k}, got {abs_t}"
                    )));
                }
            }
            b.vertex("0");
            if strict_q {
                // Loops come in reciprocal pairs (λ, 1/λ); an odd count keeps
                // one fixed loop of weight 1.
                let (fixed, pairs) = if k % 2 == 1 { (1, (k - 1) / 2) } else { (0, k / 2) };
                for _ in 0..fixed {
                    b.edge("0", "0", 1.0);
                }
                if pairs > 0 {
                    let pair_sum = (abs_t - fixed as f64) / pairs as f64;
                    let disc = (pair_sum * pair_sum - 4.0).max(0.0);
                    let lambda = (pair_sum + disc.sqrt()) / 2.0;
                    for _ in 0..pairs {
                        b.edge("0", "0", lambda);
                        b.edge("0", "0", 1.0 / lambda);
                    }
                }
            } else {
                for _ in 0..k {
                    b.edge("0", "0", 1.0);
                }
            }
        }
    }

    let (g, c) = b.finish()?;
    Ok((g, c, dp))
}
