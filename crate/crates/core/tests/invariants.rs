//! Cross-module invariants: serialization roundtrips, n-step composition,
//! random-walk laws and the equivalence/isomorphism correspondence.

use std::collections::{BTreeMap, HashMap};

use proptest::prelude::*;

use qhs_core::catalog::{catalog, CatalogName, CatalogParams, PodlesX};
use qhs_core::cost::{random_walk, verify_fair_balanced, VerifyOptions};
use qhs_core::fusion::{build_solution, solutions_equivalent, Equivalence, FundamentalSolution};
use qhs_core::graph::{
    find_isomorphism, load_graph, n_step, Cost, DeformationParameter, Edge, GraphDocument,
    OrientedGraph,
};
use qhs_core::solve::solve_cost;

fn dp(q: f64) -> DeformationParameter {
    DeformationParameter::new(q).unwrap()
}

fn entries() -> Vec<(String, OrientedGraph, Cost, DeformationParameter)> {
    let mut out = Vec::new();
    let mut push = |label: &str, name: CatalogName, params: CatalogParams| {
        let (g, c, d) = catalog(name, &params).unwrap();
        out.push((label.to_owned(), g, c, d));
    };
    push("A_inf_inf", CatalogName::AInfInf, CatalogParams::new(0.5).with_window(3).with_x(PodlesX::Finite(0.25)));
    push("D_inf_star", CatalogName::DInfStar, CatalogParams::new(0.7).with_window(4));
    push("A_cycle", CatalogName::ACycle, CatalogParams::new(-0.5).with_n(2));
    push("E6_affine", CatalogName::E6Affine, CatalogParams::new(1.0));
    push("D_affine", CatalogName::DAffine, CatalogParams::new(-1.0).with_n(4));
    push("A_prime", CatalogName::APrime, CatalogParams::new(-1.0).with_n(3));
    push("D_prime", CatalogName::DPrime, CatalogParams::new(-1.0).with_n(3));
    push("A_inf_prime", CatalogName::AInfPrime, CatalogParams::new(-0.6).with_window(3));
    push("point_loops", CatalogName::PointLoops, CatalogParams::new(1.0).with_loops(2));
    out
}

#[test]
fn catalog_documents_roundtrip() {
    for (label, g, c, d) in entries() {
        let doc = GraphDocument { graph: g.clone(), cost: Some(c.clone()), q: Some(d.q()), t: None };
        let (g2, c2) = load_graph(&doc.to_json()).unwrap();
        let iso = find_isomorphism(&g, &c, &g2, &c2.unwrap(), 1e-12);
        assert!(iso.is_some(), "{label}: save/load roundtrip failed");
    }
}

#[test]
fn degree_bound_holds_on_catalog() {
    for (label, g, _c, d) in entries() {
        let (degree, ok) = g.degree_bound_check(d.t());
        assert!(ok, "{label}: degree {degree} exceeds T^2 = {}", d.t() * d.t());
    }
}

#[test]
fn random_walk_laws() {
    for (label, g, c, d) in entries() {
        let p = random_walk(&g, &c, d, 1e-9).unwrap();
        for v in g.interior_vertices() {
            let sum: f64 = g.out_edges(v).map(|e| p[&e.id]).sum();
            assert!((sum - 1.0).abs() < 1e-10, "{label}: row sum at {v}");
        }
        let report = verify_fair_balanced(&g, &c, d, 1e-9, VerifyOptions::default());
        let witness = report.involution.unwrap();
        let t_inv_sq = 1.0 / (d.t() * d.t());
        for (a, b) in witness.iter() {
            assert!((p[a] * p[b] - t_inv_sq).abs() < 1e-10, "{label}: reciprocality");
        }
    }
}

/// n-step path composition: an (a+b)-path splits uniquely at position a, so
/// the per-(v,w) weight multiset of the (a+b)-step graph equals the multiset
/// of products of a-path and b-path weights over the intermediate vertex.
#[test]
fn n_step_composition() {
    for (label, g, c, d) in entries() {
        for (a, b) in [(1u32, 1u32), (1, 2), (2, 1)] {
            let (g_ab, c_ab, t_ab) = n_step(&g, &c, d.t(), a + b).unwrap();
            let (g_a, c_a, t_a) = n_step(&g, &c, d.t(), a).unwrap();
            let (g_b, c_b, _) = n_step(&g, &c, d.t(), b).unwrap();
            assert!(
                (t_ab.abs() - t_a.abs() * d.abs_t().powi(b as i32)).abs()
                    < 1e-9 * t_ab.abs().max(1.0),
                "{label}: |T'| composition"
            );
            assert_eq!(g_ab.vertices(), g_a.vertices(), "{label}");

            let quantum = 1e-9;
            let collect = |g: &OrientedGraph, c: &Cost| -> HashMap<(String, String), Vec<f64>> {
                let mut m: HashMap<(String, String), Vec<f64>> = HashMap::new();
                for e in g.edges() {
                    m.entry((e.src.clone(), e.dst.clone()))
                        .or_default()
                        .push(c.weight(&e.id).unwrap());
                }
                m
            };
            let left = collect(&g_ab, &c_ab);
            let split_a = collect(&g_a, &c_a);
            let split_b = collect(&g_b, &c_b);
            for v in g.vertices() {
                for w in g.vertices() {
                    let mut composed: Vec<i64> = Vec::new();
                    for u in g.vertices() {
                        if let (Some(first), Some(second)) = (
                            split_a.get(&(v.clone(), u.clone())),
                            split_b.get(&(u.clone(), w.clone())),
                        ) {
                            for x in first {
                                for y in second {
                                    composed.push((x * y / quantum).round() as i64);
                                }
                            }
                        }
                    }
                    composed.sort_unstable();
                    let mut direct: Vec<i64> = left
                        .get(&(v.clone(), w.clone()))
                        .map(|ws| ws.iter().map(|x| (x / quantum).round() as i64).collect())
                        .unwrap_or_default();
                    direct.sort_unstable();
                    assert_eq!(
                        direct, composed,
                        "{label}: path multiset mismatch at ({v}, {w}) for {a}+{b}"
                    );
                }
            }
        }
    }
}

/// Equivalence of built solutions decides exactly weighted-graph
/// isomorphism, across all pairs of small catalog entries.
#[test]
fn equivalence_iff_isomorphism() {
    let built: Vec<(String, OrientedGraph, Cost, FundamentalSolution)> = entries()
        .into_iter()
        .filter(|(_, g, _, _)| g.vertices().len() <= 8)
        .map(|(label, g, c, d)| {
            let s = build_solution(&g, &c, d).unwrap();
            (label, g, c, s)
        })
        .collect();
    for (la, ga, ca, sa) in &built {
        for (lb, gb, cb, sb) in &built {
            if sa.q_sign() != sb.q_sign() {
                continue; // equivalence is only defined at a common sgn(q)
            }
            let iso = find_isomorphism(ga, ca, gb, cb, 1e-8).is_some();
            let equivalent = match solutions_equivalent(sa, sb, 1e-9) {
                Equivalence::Equivalent(_) => true,
                Equivalence::NotEquivalent => false,
                Equivalence::Undecided => panic!("{la} vs {lb}: undecided below the caps"),
            };
            assert_eq!(iso, equivalent, "{la} vs {lb}");
        }
    }
}

#[test]
fn solver_solutions_are_sound() {
    // Every solution returned by solve_cost passes verification at 10·tol.
    let tol = 1e-7;
    let cases: Vec<(OrientedGraph, f64)> = vec![
        (
            qhs_core::catalog::catalog_graph(
                CatalogName::ACycle,
                &CatalogParams::new(-0.4).with_n(2),
            )
            .unwrap(),
            -0.4,
        ),
        (
            qhs_core::catalog::catalog_graph(
                CatalogName::PointLoops,
                &CatalogParams::new(-0.25).with_loops(3),
            )
            .unwrap(),
            -0.25,
        ),
        (
            qhs_core::catalog::catalog_graph(
                CatalogName::AInfInf,
                &CatalogParams::new(0.5).with_window(3),
            )
            .unwrap(),
            0.5,
        ),
    ];
    for (g, q) in cases {
        let outcome = solve_cost(&g, dp(q), 6, tol).unwrap();
        assert!(outcome.is_feasible());
        for (cost, witness) in outcome.solutions() {
            let report = verify_fair_balanced(&g, cost, dp(q), 10.0 * tol, VerifyOptions::default());
            assert!(report.passed(), "{:?}", report.reasons);
            for (a, b) in witness.iter() {
                let prod = cost.weight(a).unwrap() * cost.weight(b).unwrap();
                assert!((prod - 1.0).abs() <= 10.0 * tol);
            }
        }
    }
}

#[test]
fn podles_window_family_matches_closed_form() {
    // Any solver solution on the A∞,∞ window with a = W(0→1) in [q, 1/q]
    // matches the closed-form weight family for the x recovered from a.
    let q = 0.5;
    let g = qhs_core::catalog::catalog_graph(
        CatalogName::AInfInf,
        &CatalogParams::new(q).with_window(3),
    )
    .unwrap();
    let outcome = solve_cost(&g, dp(q), 8, 1e-9).unwrap();
    assert!(outcome.parametric(), "window solutions form a family");
    let mut matched = 0;
    for (cost, _) in outcome.solutions() {
        let a = cost.weight("0\u{2192}1#0").unwrap();
        if !(q..=1.0 / q).contains(&a) {
            continue;
        }
        // Invert a = (u^{x+1} + u^{-x-1})/(u^x + u^{-x}) by bisection.
        let u = q;
        let f = |x: f64| (u.powf(x + 1.0) + u.powf(-x - 1.0)) / (u.powf(x) + u.powf(-x));
        // f is increasing in x from |q| to |q|^{-1}.
        let (mut lo, mut hi) = (-60.0, 60.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < a {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = 0.5 * (lo + hi);
        for m in -3i64..3 {
            let want = qhs_core::catalog::podles_weight_up(u, PodlesX::Finite(x), m);
            let got = cost.weight(&format!("{m}\u{2192}{}#0", m + 1)).unwrap();
            assert!((got - want).abs() < 1e-6, "edge {m}: {got} vs {want}");
        }
        matched += 1;
    }
    assert!(matched >= 1, "no solution with a in [q, 1/q] found");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Random weighted multigraphs survive the JSON roundtrip up to
    /// isomorphism.
    #[test]
    fn document_roundtrip_random(
        n in 1usize..5,
        edge_spec in prop::collection::vec((0usize..5, 0usize..5, 0.05f64..20.0), 0..10),
        flags in prop::collection::vec(any::<bool>(), 5),
    ) {
        let vertices: Vec<String> = (0..n).map(|k| format!("v{k}")).collect();
        let mut edges = Vec::new();
        let mut weights = BTreeMap::new();
        for (i, (a, b, w)) in edge_spec.iter().enumerate() {
            let (a, b) = (a % n, b % n);
            let id = format!("e{i}");
            edges.push(Edge { id: id.clone(), src: format!("v{a}"), dst: format!("v{b}") });
            weights.insert(id, *w);
        }
        let boundary: Vec<String> = (0..n).filter(|k| flags[*k]).map(|k| format!("v{k}")).collect();
        let g = OrientedGraph::new(vertices, edges, boundary).unwrap();
        let c = Cost::new(weights).unwrap();
        let doc = GraphDocument { graph: g.clone(), cost: Some(c.clone()), q: None, t: None };
        let (g2, c2) = load_graph(&doc.to_json()).unwrap();
        // Zero-edge documents carry no weights at all.
        let c2 = c2.unwrap_or_default();
        prop_assert!(find_isomorphism(&g, &c, &g2, &c2, 1e-9).is_some());
    }

    /// The q-integer recursion [n+1] = T·[n] − [n−1].
    #[test]
    fn q_integer_recursion(q in prop::sample::select(vec![-1.0, -0.7, -0.3, 0.2, 0.6, 1.0]), n in 1u32..8) {
        let d = dp(q);
        let lhs = d.q_int(n + 1);
        let rhs = d.t() * d.q_int(n) - d.q_int(n - 1);
        prop_assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
    }
}
