//! Diagram checks for the worked embedding examples.

use num_complex::Complex64;

use qhs_core::catalog::PodlesX;
use qhs_core::embeddings::{example_embedding, EmbeddingName};
use qhs_core::fusion::verify_solution;
use qhs_core::graph::DeformationParameter;
use qhs_core::morphism::verify_psi;

fn dp(q: f64) -> DeformationParameter {
    DeformationParameter::new(q).unwrap()
}

fn unit(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn podles_embedding_passes_for_sampled_parameters() {
    for q in [0.5, -0.5] {
        for x in [PodlesX::Finite(0.0), PodlesX::Infinity] {
            let name = EmbeddingName::PodlesIntoSuq2 {
                x,
                lambda: unit(1.0, 0.0),
                alphas: None,
            };
            let data = example_embedding(&name, dp(q), 4).unwrap();
            assert!(verify_solution(&data.source, dp(q), 1e-9).ok);
            assert!(verify_solution(&data.target, dp(q), 1e-9).ok);
            let report = verify_psi(&data, 1e-9).unwrap();
            assert!(
                report.ok,
                "q = {q}, x = {x}: residual {} at {:?}: {:?}",
                report.worst_residual, report.worst_pair, report.reasons
            );
        }
    }
}

#[test]
fn podles_embedding_gauge_family() {
    // λ ranges over U(1); α-phases are a further gauge family.
    let lambdas = [unit(1.0, 0.0), unit(-1.0, 0.0), unit(0.0, 1.0), unit(0.6, 0.8)];
    for lambda in lambdas {
        let name = EmbeddingName::PodlesIntoSuq2 {
            x: PodlesX::Finite(0.25),
            lambda,
            alphas: None,
        };
        let data = example_embedding(&name, dp(0.5), 3).unwrap();
        let report = verify_psi(&data, 1e-9).unwrap();
        assert!(report.ok, "lambda = {lambda}: {:?}", report.reasons);
    }
    // Nontrivial α's.
    let alphas: Vec<Complex64> = (0..=6).map(|k| unit(0.0, 1.0).powu(k % 4)).collect();
    let name = EmbeddingName::PodlesIntoSuq2 {
        x: PodlesX::Finite(0.25),
        lambda: unit(0.0, 1.0),
        alphas: Some(alphas),
    };
    let data = example_embedding(&name, dp(0.5), 3).unwrap();
    assert!(verify_psi(&data, 1e-9).unwrap().ok);
}

#[test]
fn rp2_embedding_passes_and_contains_printed_block() {
    for q in [0.5, -0.5] {
        let data = example_embedding(&EmbeddingName::Rp2IntoPodles0, dp(q), 5).unwrap();
        let report = verify_psi(&data, 1e-9).unwrap();
        assert!(
            report.ok,
            "q = {q}: residual {} at {:?}: {:?}",
            report.worst_residual, report.worst_pair, report.reasons
        );
        // The printed endpoint block (1/√2)[[1,1],[-1,1]] with rows
        // (H_{0,1}⊗F_1, H_{0,-1}⊗F_{-1}) and columns (ξ_*, ξ_~).
        let dom = data.domain_layout("0", "1");
        let cod = data.codomain_layout("0", "1");
        let block = &data.psi[&("0".to_owned(), "1".to_owned())];
        let s = 1.0 / 2.0_f64.sqrt();
        let entry = |u: &str, sv: &str| block[(cod.index(u, 0, 0).unwrap(), dom.index(sv, 0, 0).unwrap())];
        assert!((entry("1", "*") - Complex64::new(s, 0.0)).norm() < 1e-12);
        assert!((entry("1", "~") - Complex64::new(s, 0.0)).norm() < 1e-12);
        assert!((entry("-1", "*") - Complex64::new(-s, 0.0)).norm() < 1e-12);
        assert!((entry("-1", "~") - Complex64::new(s, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn ainf_prime_coideal_passes() {
    for q in [-0.5, -0.8] {
        let data = example_embedding(&EmbeddingName::AinfPrimeCoideal, dp(q), 5).unwrap();
        let report = verify_psi(&data, 1e-9).unwrap();
        assert!(
            report.ok,
            "q = {q}: residual {} at {:?}: {:?}",
            report.worst_residual, report.worst_pair, report.reasons
        );
    }
    assert!(example_embedding(&EmbeddingName::AinfPrimeCoideal, dp(0.5), 5).is_err());
}

#[test]
fn d3prime_families_pass() {
    for beta in [unit(1.0, 0.0), unit(0.0, 1.0)] {
        for family in [
            EmbeddingName::D3PrimeFamily1 { beta },
            EmbeddingName::D3PrimeFamily2 { beta },
        ] {
            let data = example_embedding(&family, dp(-1.0), 0).unwrap();
            let report = verify_psi(&data, 1e-9).unwrap();
            assert!(
                report.ok,
                "beta = {beta}: residual {} at {:?}: {:?}",
                report.worst_residual, report.worst_pair, report.reasons
            );
        }
    }
    // Off-circle parameters are rejected.
    assert!(example_embedding(
        &EmbeddingName::D3PrimeFamily1 { beta: unit(2.0, 0.0) },
        dp(-1.0),
        0
    )
    .is_err());
}

#[test]
fn perturbed_block_fails() {
    let data = example_embedding(&EmbeddingName::Rp2IntoPodles0, dp(0.5), 4).unwrap();
    let mut broken = data.clone();
    let key = ("1".to_owned(), "2".to_owned());
    let block = broken.psi.get_mut(&key).unwrap();
    *block *= Complex64::new(1.01, 0.0);
    let report = verify_psi(&broken, 1e-9).unwrap();
    assert!(!report.ok);
}

#[test]
fn identity_morphism_has_zero_residual() {
    use qhs_core::catalog::{catalog, CatalogName, CatalogParams};
    use qhs_core::fusion::build_solution;
    use qhs_core::morphism::MorphismData;
    use std::collections::{BTreeMap, BTreeSet};

    let (g, c, d) = catalog(CatalogName::E6Affine, &CatalogParams::new(1.0)).unwrap();
    let s = build_solution(&g, &c, d).unwrap();
    let mut dims = BTreeMap::new();
    for v in s.vertices() {
        dims.insert((v.clone(), v.clone()), 1usize);
    }
    let mut data = MorphismData {
        source: s.clone(),
        target: s.clone(),
        dims,
        psi: BTreeMap::new(),
        window: BTreeSet::new(),
    };
    for t in s.vertices() {
        for r in s.vertices() {
            let dom = data.domain_layout(t, r);
            if dom.total() == 0 {
                continue;
            }
            let n = dom.total();
            data.psi.insert(
                (t.clone(), r.clone()),
                qhs_core::fusion::CMatrix::identity(n, n),
            );
        }
    }
    for v in s.vertices() {
        data.window.insert((v.clone(), v.clone()));
    }
    let report = verify_psi(&data, 1e-9).unwrap();
    assert!(report.ok, "{:?}", report.reasons);
    assert_eq!(report.worst_residual, 0.0);
}
