//! Pinned example values for individual operations.

use num_complex::Complex64;

use qhs_core::catalog::{catalog, catalog_graph, CatalogName, CatalogParams, PodlesX};
use qhs_core::cost::{graph_norm, perron_cost, random_walk, verify_fair_balanced, VerifyOptions};
use qhs_core::embeddings::{example_embedding, EmbeddingName};
use qhs_core::fusion::build_solution;
use qhs_core::graph::{n_step, DeformationParameter};
use qhs_core::ktheory::gamma_matrix;

fn dp(q: f64) -> DeformationParameter {
    DeformationParameter::new(q).unwrap()
}

#[test]
fn two_step_line_graph() {
    // All-ones line at |q| = 1, T = 2: two steps give each interior vertex
    // two loops and unit edges to m±2; T' = −4, source cost 4.
    let (g, c, d) =
        catalog(CatalogName::AInfInf, &CatalogParams::new(1.0).with_window(4)).unwrap();
    assert!(c.iter().all(|(_, w)| (w - 1.0).abs() < 1e-15));
    let (g2, c2, t2) = n_step(&g, &c, d.t(), 2).unwrap();
    assert_eq!(t2, -4.0);
    assert_eq!(g2.loop_count("0"), 2);
    assert_eq!(g2.edge_count("0", "2"), 1);
    assert_eq!(g2.edge_count("0", "-2"), 1);
    let sc: f64 = g2.out_edges("0").map(|e| c2.weight(&e.id).unwrap()).sum();
    assert!((sc - 4.0).abs() < 1e-12);
    assert!(c2.iter().all(|(_, w)| (w - 1.0).abs() < 1e-12));
}

#[test]
fn three_step_double_loop() {
    let (g, c, d) =
        catalog(CatalogName::PointLoops, &CatalogParams::new(1.0).with_loops(2)).unwrap();
    let (g3, c3, t3) = n_step(&g, &c, d.t(), 3).unwrap();
    assert_eq!(g3.edges().len(), 8);
    assert!(g3.edges().iter().all(|e| e.src == "0" && e.dst == "0"));
    assert!(c3.iter().all(|(_, w)| (w - 1.0).abs() < 1e-12));
    assert_eq!(t3, 8.0);
}

#[test]
fn degree_bounds_pinned() {
    let g = catalog_graph(CatalogName::PointLoops, &CatalogParams::new(1.0).with_loops(2))
        .unwrap();
    assert_eq!(g.degree_bound_check(2.0), (2, true));
    let e6 = catalog_graph(CatalogName::E6Affine, &CatalogParams::new(1.0)).unwrap();
    assert_eq!(e6.degree_bound_check(2.0), (3, true));
}

#[test]
fn perron_cost_on_cycle_is_constant() {
    let g = catalog_graph(CatalogName::ACycle, &CatalogParams::new(-1.0).with_n(2)).unwrap();
    let w = perron_cost(&g, -2.0, 1e-8).unwrap().unwrap();
    assert!(w.iter().all(|(_, x)| (x - 1.0).abs() < 1e-8));
}

#[test]
fn perron_cost_verifies_at_minus_norm() {
    // The Perron cost is fair and balanced at T = −‖g‖ whenever a q exists,
    // and at +‖g‖ when every loop count is even.
    let graphs = vec![
        catalog_graph(CatalogName::E6Affine, &CatalogParams::new(1.0)).unwrap(),
        catalog_graph(CatalogName::ACycle, &CatalogParams::new(1.0).with_n(3)).unwrap(),
        catalog_graph(CatalogName::PointLoops, &CatalogParams::new(1.0).with_loops(3)).unwrap(),
        catalog_graph(CatalogName::DPrime, &CatalogParams::new(-1.0).with_n(4)).unwrap(),
    ];
    for g in graphs {
        let norm = graph_norm(&g, 1e-10).unwrap();
        assert!(norm >= 2.0 - 1e-9);
        let w = perron_cost(&g, -norm, 1e-8).unwrap().unwrap();
        let q_abs = (norm - (norm * norm - 4.0).max(0.0).sqrt()) / 2.0;
        let report =
            verify_fair_balanced(&g, &w, dp(-q_abs), 1e-7, VerifyOptions::default());
        assert!(report.passed(), "{:?}", report.reasons);
        let even_loops = g.vertices().iter().all(|v| g.loop_count(v) % 2 == 0);
        if even_loops {
            let report =
                verify_fair_balanced(&g, &w, dp(q_abs), 1e-7, VerifyOptions::default());
            assert!(report.passed(), "{:?}", report.reasons);
        }
    }
}

#[test]
fn random_walk_pinned_values() {
    let (g, c, d) =
        catalog(CatalogName::PointLoops, &CatalogParams::new(1.0).with_loops(2)).unwrap();
    let p = random_walk(&g, &c, d, 1e-9).unwrap();
    assert!(p.values().all(|&x| (x - 0.5).abs() < 1e-12));

    let (g, c, d) = catalog(CatalogName::E6Affine, &CatalogParams::new(1.0)).unwrap();
    let p = random_walk(&g, &c, d, 1e-9).unwrap();
    // The endpoint has a single out-edge of weight 2: probability 1.
    let endpoint_edge = g.out_edges("0").next().unwrap();
    assert!((p[&endpoint_edge.id] - 1.0).abs() < 1e-12);
}

#[test]
fn gamma_of_edgeless_vertex() {
    let (g, _) =
        qhs_core::graph::load_graph(r#"{"vertices":["a"],"edges":[]}"#).unwrap();
    let gamma = gamma_matrix(&g).unwrap();
    assert_eq!(gamma.rows(), 1);
    assert_eq!(gamma[(0, 0)], num_bigint::BigInt::from(0));
}

#[test]
fn d3prime_family1_printed_entries() {
    let beta = Complex64::new(0.0, 1.0);
    let data = example_embedding(&EmbeddingName::D3PrimeFamily1 { beta }, dp(-1.0), 0).unwrap();
    let dom = data.domain_layout("pt", "*");
    let cod = data.codomain_layout("pt", "*");
    let block = &data.psi[&("pt".to_owned(), "*".to_owned())];
    // ξ₁ ⊗ ξ_** ↦ β e₂ ⊗ ξ₂.
    let col = dom.index("*", 0, 0).unwrap();
    let row = cod.index("pt", 1, 1).unwrap();
    assert!((block[(row, col)] - beta).norm() < 1e-15);
    // ξ₊ ⊗ ξ₊* ↦ (e₂ ⊗ ξ₁ + e₁ ⊗ ξ₂)/√2.
    let col = dom.index("+", 0, 0).unwrap();
    let s = 1.0 / 2.0_f64.sqrt();
    assert!((block[(cod.index("pt", 1, 0).unwrap(), col)].re - s).abs() < 1e-15);
    assert!((block[(cod.index("pt", 0, 1).unwrap(), col)].re - s).abs() < 1e-15);
}

#[test]
fn podles_embedding_degenerate_at_infinity() {
    // At x = ∞ the two branches collapse to single unit vectors.
    let data = example_embedding(
        &EmbeddingName::PodlesIntoSuq2 {
            x: PodlesX::Infinity,
            lambda: Complex64::new(1.0, 0.0),
            alphas: None,
        },
        dp(0.5),
        3,
    )
    .unwrap();
    let dom = data.domain_layout("pt", "0");
    let cod = data.codomain_layout("pt", "0");
    let block = &data.psi[&("pt".to_owned(), "0".to_owned())];
    let col_plus = dom.index("1", 0, 0).unwrap();
    let col_minus = dom.index("-1", 0, 0).unwrap();
    // From m+1: e₂ only; from m−1: e₁ only.
    assert!((block[(cod.index("pt", 1, 0).unwrap(), col_plus)].norm() - 1.0).abs() < 1e-12);
    assert!(block[(cod.index("pt", 0, 0).unwrap(), col_plus)].norm() < 1e-12);
    assert!((block[(cod.index("pt", 0, 0).unwrap(), col_minus)].norm() - 1.0).abs() < 1e-12);
    assert!(block[(cod.index("pt", 1, 0).unwrap(), col_minus)].norm() < 1e-12);
}

#[test]
fn solution_block_modulus_matches_weight() {
    // |M_{m,m+1}|² equals the printed weight on the Podleś window.
    let (g, c, d) = catalog(
        CatalogName::AInfInf,
        &CatalogParams::new(0.5).with_window(2).with_x(PodlesX::Finite(0.0)),
    )
    .unwrap();
    let s = build_solution(&g, &c, d).unwrap();
    let m01 = s.jmap("0", "1").unwrap();
    let w = c.weight("0\u{2192}1#0").unwrap();
    assert!((m01[(0, 0)].norm_sqr() - w).abs() < 1e-12);
}

#[test]
fn catalog_roundtrip_example() {
    // serialized catalog("A_cycle", n=1, q=−0.5) loads back isomorphically.
    let (g, c, d) = catalog(CatalogName::ACycle, &CatalogParams::new(-0.5).with_n(1)).unwrap();
    let doc = qhs_core::graph::GraphDocument {
        graph: g.clone(),
        cost: Some(c.clone()),
        q: Some(d.q()),
        t: Some(d.t()),
    };
    let (g2, c2) = qhs_core::graph::load_graph(&doc.to_json()).unwrap();
    assert!(qhs_core::graph::find_isomorphism(&g, &c, &g2, &c2.unwrap(), 1e-12).is_some());
}

#[test]
fn a_inf_inf_solver_recovers_family_bounds() {
    // Weight map sanity for the window family example: W(0→1) for the
    // closed-form parameters stays within [q, 1/q].
    let u = 0.5f64;
    for x in [-2.0, -0.5, 0.0, 0.7, 3.0] {
        let a = qhs_core::catalog::podles_weight_up(u, PodlesX::Finite(x), 0);
        assert!((u..=1.0 / u).contains(&a));
    }
}
