//! `qhs`: batch commands over fair and balanced graphs and their operator
//! data.
//!
//! Exit codes: 0 = pass/feasible, 1 = fail/infeasible, 2 = usage or I/O
//! error. Results go to stdout, diagnostics to stderr. Output is
//! deterministic: JSON keys are sorted and floating point numbers are
//! rounded to 12 significant digits.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use qhs_core::catalog::{catalog, catalog_graph, CatalogName, CatalogParams, PodlesX};
use qhs_core::classify::{classify_ade, is_coideal_type};
use qhs_core::cost::{graph_norm, verify_fair_balanced, VerifyOptions};
use qhs_core::embeddings::{example_embedding, EmbeddingName};
use qhs_core::fusion::{
    build_solution, solution_to_graph, solutions_equivalent, verify_solution, Equivalence,
};
use qhs_core::graph::{
    find_isomorphism, n_step, round_sig, Cost, DeformationParameter, GraphDocument,
    OrientedGraph,
};
use qhs_core::ktheory::k_groups;
use qhs_core::presentation::{emit_presentation, f_matrix, podles_parameters};
use qhs_core::solve::{solve_cost, SolveOutcome};

#[derive(Parser)]
#[command(name = "qhs", version, about = "Fair and balanced graph toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
    Text,
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Catalog entry name (see `qhs catalog list`).
    #[arg(long)]
    catalog: Option<String>,
    /// Path to a graph JSON file.
    #[arg(long)]
    file: Option<String>,
    /// Deformation parameter q with 0 < |q| <= 1.
    #[arg(long, allow_hyphen_values = true)]
    q: Option<f64>,
    /// Size parameter n (A_cycle, D_affine) or m (A_prime, D_prime).
    #[arg(long)]
    n: Option<usize>,
    /// Podleś parameter x (a real number or "inf").
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// Truncation window for the infinite families.
    #[arg(long)]
    window: Option<usize>,
    /// Loop count for point_loops.
    #[arg(long)]
    loops: Option<usize>,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Verification tolerance; falls back to QHS_TOLERANCE, then 1e-9.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// List catalog entries or emit one as JSON/DOT.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Verify that a weighted graph is fair and balanced at q.
    Verify {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Additionally require connectedness.
        #[arg(long)]
        connected: bool,
    },
    /// Solve for fair and balanced costs on a graph shape.
    SolveCost {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "4")]
        max_solutions: usize,
    },
    /// Spectral norm of the symmetric adjacency matrix.
    Norm {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Recognize the ADE shape and the coideal-type predicate.
    Classify {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// The n-step graph with its claimed T'.
    Nstep {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Path length.
        #[arg(long)]
        steps: u32,
        /// Asserted cost parameter T of the input (defaults to q + 1/q).
        #[arg(long, allow_hyphen_values = true, name = "T")]
        t: Option<f64>,
    },
    /// Build, verify or roundtrip the q-fundamental solution of a graph.
    Solution {
        #[command(subcommand)]
        action: SolutionAction,
    },
    /// Emit the generators-and-relations presentation of the linking algebra.
    Presentation {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Verify equivariant-morphism data or emit a worked example.
    Morphism {
        #[command(subcommand)]
        action: MorphismAction,
    },
    /// K-groups of the homogeneous space attached to a finite graph.
    Ktheory {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Podleś parameter dictionary c(x), a and the window weights.
    Podles {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// The 2x2 structure matrix F at q.
    Fmatrix {
        #[arg(long, allow_hyphen_values = true)]
        q: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    /// Print the known entry names.
    List,
    /// Emit a catalog entry with its printed cost.
    Emit {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Subcommand)]
enum SolutionAction {
    /// Build the solution of a fair and balanced graph.
    Build {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Build and verify the defining identities.
    Verify {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check graph -> solution -> graph isomorphism.
    Roundtrip {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Subcommand)]
enum MorphismAction {
    /// Verify morphism data from a JSON file.
    Verify {
        #[arg(long)]
        file: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Emit and verify a named example embedding.
    Example {
        /// One of podles_into_suq2, rp2_into_podles0, ainf_prime_coideal,
        /// d3prime_family1, d3prime_family2.
        #[arg(long)]
        name: String,
        #[arg(long, allow_hyphen_values = true)]
        q: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        /// Unit-modulus phase "a,b" meaning a + bi.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
        /// Unit-modulus phase "a,b" meaning a + bi.
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<String>,
        #[arg(long, default_value = "4")]
        window: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn tolerance(common: &CommonArgs) -> Result<f64, String> {
    if let Some(t) = common.tol {
        if t <= 0.0 {
            return Err("tolerance must be positive".into());
        }
        return Ok(t);
    }
    if let Ok(env) = std::env::var("QHS_TOLERANCE") {
        let t: f64 = env.parse().map_err(|_| format!("QHS_TOLERANCE: cannot parse {env:?}"))?;
        if t <= 0.0 {
            return Err("QHS_TOLERANCE must be positive".into());
        }
        return Ok(t);
    }
    Ok(1e-9)
}

fn parse_phase(text: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = text.split(',').collect();
    let z = match parts.as_slice() {
        [re] => Complex64::new(re.trim().parse().map_err(|_| format!("bad phase {text:?}"))?, 0.0),
        [re, im] => Complex64::new(
            re.trim().parse().map_err(|_| format!("bad phase {text:?}"))?,
            im.trim().parse().map_err(|_| format!("bad phase {text:?}"))?,
        ),
        _ => return Err(format!("bad phase {text:?}; expected \"re\" or \"re,im\"")),
    };
    Ok(z)
}

struct LoadedGraph {
    graph: OrientedGraph,
    cost: Option<Cost>,
    q: Option<f64>,
}

fn catalog_params(input: &InputArgs, q: f64) -> Result<CatalogParams, String> {
    let mut params = CatalogParams::new(q);
    if let Some(n) = input.n {
        params = params.with_n(n);
    }
    if let Some(x) = &input.x {
        params = params.with_x(PodlesX::from_str(x).map_err(|e| e.to_string())?);
    }
    if let Some(w) = input.window {
        params = params.with_window(w);
    }
    if let Some(l) = input.loops {
        params = params.with_loops(l);
    }
    Ok(params)
}

/// Load from --file or --catalog. With a catalog name and a usable q the
/// printed cost is attached; when the cost does not exist at that q only
/// the shape is returned.
fn load_input(input: &InputArgs) -> Result<LoadedGraph, String> {
    match (&input.catalog, &input.file) {
        (Some(_), Some(_)) => Err("pass exactly one of --catalog and --file".into()),
        (None, None) => Err("pass one of --catalog or --file".into()),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {path}: {e}"))?;
            let doc = GraphDocument::from_json(&text).map_err(|e| e.to_string())?;
            Ok(LoadedGraph { graph: doc.graph, cost: doc.cost, q: doc.q.or(input.q) })
        }
        (Some(name), None) => {
            let name = CatalogName::from_str(name).map_err(|e| e.to_string())?;
            let q = input.q.unwrap_or(1.0);
            let params = catalog_params(input, q)?;
            match catalog(name, &params) {
                Ok((graph, cost, _)) => {
                    Ok(LoadedGraph { graph, cost: Some(cost), q: Some(q) })
                }
                Err(_) => {
                    // The shape may exist even where the printed cost does
                    // not (wrong q, odd loops at q > 0, ...); commands that
                    // need weights will say so.
                    let graph = catalog_graph(name, &params).map_err(|e| e.to_string())?;
                    Ok(LoadedGraph { graph, cost: None, q: input.q })
                }
            }
        }
    }
}

fn require_q(loaded: &LoadedGraph, input: &InputArgs) -> Result<DeformationParameter, String> {
    let q = input.q.or(loaded.q).ok_or("pass --q (or a file with a q field)")?;
    DeformationParameter::new(q).map_err(|e| e.to_string())
}

fn require_cost(loaded: &LoadedGraph) -> Result<&Cost, String> {
    loaded.cost.as_ref().ok_or_else(|| "input carries no edge weights".to_string())
}

/// Round every number in a JSON tree to 12 significant digits.
fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    return serde_json::Number::from_f64(round_sig(f, 12))
                        .map(Value::Number)
                        .unwrap_or(Value::Null);
                }
            }
            Value::Number(n)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_value).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, round_value(v))).collect())
        }
        other => other,
    }
}

fn emit_json(v: Value) {
    println!("{}", serde_json::to_string_pretty(&round_value(v)).expect("serializable"));
}

fn pass_fail(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Catalog { action } => match action {
            CatalogAction::List => {
                for name in CatalogName::ALL {
                    println!("{name}");
                }
                Ok(ExitCode::SUCCESS)
            }
            CatalogAction::Emit { input, common } => {
                if input.catalog.is_none() {
                    return Err("catalog emit requires --catalog".into());
                }
                let loaded = load_input(&input)?;
                let cost = loaded.cost.clone();
                match common.format {
                    Format::Dot => print!("{}", loaded.graph.to_dot(cost.as_ref())),
                    _ => {
                        let doc = GraphDocument {
                            graph: loaded.graph,
                            cost,
                            q: loaded.q,
                            t: loaded
                                .q
                                .map(|q| DeformationParameter::new(q).map(|d| d.t()))
                                .transpose()
                                .map_err(|e| e.to_string())?,
                        };
                        let value: Value = serde_json::from_str(&doc.to_json())
                            .expect("document serializes");
                        emit_json(value);
                    }
                }
                Ok(ExitCode::SUCCESS)
            }
        },
        Command::Verify { input, common, connected } => {
            let tol = tolerance(&common)?;
            let loaded = load_input(&input)?;
            let dp = require_q(&loaded, &input)?;
            let cost = require_cost(&loaded)?;
            let report = verify_fair_balanced(
                &loaded.graph,
                cost,
                dp,
                tol,
                VerifyOptions { require_connected: connected },
            );
            match common.format {
                Format::Text => {
                    println!("{}", if report.passed() { "pass" } else { "fail" });
                    for reason in &report.reasons {
                        eprintln!("{reason}");
                    }
                }
                _ => emit_json(serde_json::to_value(&report).expect("serializable")),
            }
            Ok(pass_fail(report.passed()))
        }
        Command::SolveCost { input, common, max_solutions } => {
            let tol = tolerance(&common)?;
            // The solver default convergence tolerance is looser than the
            // verification default.
            let tol = if common.tol.is_none() && std::env::var("QHS_TOLERANCE").is_err() {
                qhs_core::solve::DEFAULT_SOLVER_TOL
            } else {
                tol
            };
            let loaded = load_input(&input)?;
            let dp = require_q(&loaded, &input)?;
            let outcome =
                solve_cost(&loaded.graph, dp, max_solutions, tol).map_err(|e| e.to_string())?;
            let feasible = outcome.is_feasible();
            match common.format {
                Format::Text => match &outcome {
                    SolveOutcome::Infeasible => println!("infeasible"),
                    SolveOutcome::Feasible { solutions, parametric } => {
                        println!(
                            "feasible: {} solution(s){}",
                            solutions.len(),
                            if *parametric { ", parametric family" } else { "" }
                        );
                    }
                },
                _ => {
                    let solutions: Vec<Value> = outcome
                        .solutions()
                        .iter()
                        .map(|(cost, involution)| {
                            json!({
                                "weights": serde_json::to_value(cost).expect("serializable"),
                                "involution": serde_json::to_value(involution)
                                    .expect("serializable"),
                            })
                        })
                        .collect();
                    emit_json(json!({
                        "feasible": feasible,
                        "parametric": outcome.parametric(),
                        "solutions": solutions,
                    }));
                }
            }
            Ok(pass_fail(feasible))
        }
        Command::Norm { input, common } => {
            let tol = tolerance(&common)?;
            let loaded = load_input(&input)?;
            let norm = graph_norm(&loaded.graph, tol).map_err(|e| e.to_string())?;
            match common.format {
                Format::Text => println!("{}", round_sig(norm, 12)),
                _ => emit_json(json!({ "norm": norm })),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Classify { input, common } => {
            let tol = tolerance(&common)?;
            let loaded = load_input(&input)?;
            let class = classify_ade(&loaded.graph).map_err(|e| e.to_string())?;
            let coideal = if loaded.graph.is_connected() {
                Some(is_coideal_type(&loaded.graph, tol).map_err(|e| e.to_string())?)
            } else {
                None
            };
            match common.format {
                Format::Text => println!("{class}"),
                _ => emit_json(json!({ "ade": class.as_str(), "coideal_type": coideal })),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Nstep { input, common, steps, t } => {
            let loaded = load_input(&input)?;
            let cost = require_cost(&loaded)?;
            let t = match t {
                Some(t) => t,
                None => require_q(&loaded, &input)?.t(),
            };
            let (g, w, t_prime) =
                n_step(&loaded.graph, cost, t, steps).map_err(|e| e.to_string())?;
            match common.format {
                Format::Dot => print!("{}", g.to_dot(Some(&w))),
                _ => {
                    let doc = GraphDocument { graph: g, cost: Some(w), q: None, t: Some(t_prime) };
                    let value: Value =
                        serde_json::from_str(&doc.to_json()).expect("document serializes");
                    emit_json(value);
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Solution { action } => {
            let (input, common, mode) = match action {
                SolutionAction::Build { input, common } => (input, common, "build"),
                SolutionAction::Verify { input, common } => (input, common, "verify"),
                SolutionAction::Roundtrip { input, common } => (input, common, "roundtrip"),
            };
            let tol = tolerance(&common)?;
            let loaded = load_input(&input)?;
            let dp = require_q(&loaded, &input)?;
            let cost = require_cost(&loaded)?;
            let solution =
                build_solution(&loaded.graph, cost, dp).map_err(|e| e.to_string())?;
            match mode {
                "build" => {
                    emit_json(serde_json::to_value(&solution).expect("serializable"));
                    Ok(ExitCode::SUCCESS)
                }
                "verify" => {
                    let report = verify_solution(&solution, dp, tol);
                    match common.format {
                        Format::Text => {
                            println!("{}", if report.ok { "pass" } else { "fail" })
                        }
                        _ => emit_json(serde_json::to_value(&report).expect("serializable")),
                    }
                    Ok(pass_fail(report.ok))
                }
                _ => {
                    let (g2, c2) = solution_to_graph(&solution).map_err(|e| e.to_string())?;
                    let iso = find_isomorphism(&loaded.graph, cost, &g2, &c2, tol.max(1e-8));
                    let ok = iso.is_some();
                    // Equivalence of the rebuilt solution with itself doubles
                    // as a smoke test of the witness search on small inputs.
                    let equivalence = if loaded.graph.vertices().len() <= 8 {
                        match solutions_equivalent(&solution, &solution, tol.max(1e-9)) {
                            Equivalence::Equivalent(_) => Some(true),
                            Equivalence::NotEquivalent => Some(false),
                            Equivalence::Undecided => None,
                        }
                    } else {
                        None
                    };
                    match common.format {
                        Format::Text => {
                            println!("{}", if ok { "isomorphic" } else { "mismatch" })
                        }
                        _ => emit_json(json!({
                            "isomorphic": ok,
                            "vertex_map": iso.map(|w| w.vertex_map),
                            "self_equivalent": equivalence,
                        })),
                    }
                    Ok(pass_fail(ok))
                }
            }
        }
        Command::Presentation { input, common: _ } => {
            let loaded = load_input(&input)?;
            let dp = require_q(&loaded, &input)?;
            let cost = require_cost(&loaded)?;
            let solution =
                build_solution(&loaded.graph, cost, dp).map_err(|e| e.to_string())?;
            let presentation =
                emit_presentation(&solution, &loaded.graph, dp).map_err(|e| e.to_string())?;
            emit_json(presentation.to_json_value());
            Ok(ExitCode::SUCCESS)
        }
        Command::Morphism { action } => match action {
            MorphismAction::Verify { file, common } => {
                let tol = tolerance(&common)?;
                let text = std::fs::read_to_string(&file)
                    .map_err(|e| format!("cannot read {file}: {e}"))?;
                let data = qhs_core::morphism::MorphismData::from_json(&text)
                    .map_err(|e| e.to_string())?;
                let report = qhs_core::morphism::verify_psi(&data, tol.max(1e-9))
                    .map_err(|e| e.to_string())?;
                match common.format {
                    Format::Text => println!("{}", if report.ok { "pass" } else { "fail" }),
                    _ => emit_json(report.to_json_value()),
                }
                Ok(pass_fail(report.ok))
            }
            MorphismAction::Example { name, q, x, lambda, beta, window, common } => {
                let tol = tolerance(&common)?;
                let dp = DeformationParameter::new(q).map_err(|e| e.to_string())?;
                let lambda = lambda.as_deref().map(parse_phase).transpose()?.unwrap_or(
                    Complex64::new(1.0, 0.0),
                );
                let beta = beta
                    .as_deref()
                    .map(parse_phase)
                    .transpose()?
                    .unwrap_or(Complex64::new(1.0, 0.0));
                let x = x
                    .as_deref()
                    .map(PodlesX::from_str)
                    .transpose()
                    .map_err(|e| e.to_string())?
                    .unwrap_or(PodlesX::Finite(0.0));
                let embedding = match name.as_str() {
                    "podles_into_suq2" => {
                        EmbeddingName::PodlesIntoSuq2 { x, lambda, alphas: None }
                    }
                    "rp2_into_podles0" => EmbeddingName::Rp2IntoPodles0,
                    "ainf_prime_coideal" => EmbeddingName::AinfPrimeCoideal,
                    "d3prime_family1" => EmbeddingName::D3PrimeFamily1 { beta },
                    "d3prime_family2" => EmbeddingName::D3PrimeFamily2 { beta },
                    other => return Err(format!("unknown embedding name {other:?}")),
                };
                let data = example_embedding(&embedding, dp, window).map_err(|e| e.to_string())?;
                let report = qhs_core::morphism::verify_psi(&data, tol.max(1e-9))
                    .map_err(|e| e.to_string())?;
                match common.format {
                    Format::Text => {
                        println!("{}", if report.ok { "pass" } else { "fail" });
                    }
                    _ => emit_json(json!({
                        "data": data.to_json_value(),
                        "report": report.to_json_value(),
                    })),
                }
                Ok(pass_fail(report.ok))
            }
        },
        Command::Ktheory { input, common } => {
            let loaded = load_input(&input)?;
            let (k0, k1) = k_groups(&loaded.graph).map_err(|e| e.to_string())?;
            match common.format {
                Format::Text => println!("K0 = {}, K1 = {}", fmt_group(&k0), fmt_group(&k1)),
                _ => emit_json(json!({
                    "K0": { "rank": k0.rank, "torsion": k0.torsion },
                    "K1": { "rank": k1.rank, "torsion": k1.torsion },
                })),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Podles { input, common } => {
            let q = input.q.ok_or("pass --q")?;
            let dp = DeformationParameter::new(q).map_err(|e| e.to_string())?;
            let x = input
                .x
                .as_deref()
                .map(PodlesX::from_str)
                .transpose()
                .map_err(|e| e.to_string())?
                .unwrap_or(PodlesX::Finite(0.0));
            let window = input.window.unwrap_or(6);
            let params = podles_parameters(dp, x, window).map_err(|e| e.to_string())?;
            let weights: BTreeMap<String, f64> = params.window.1.iter().map(|(k, v)| (k.clone(), v)).collect();
            match common.format {
                Format::Text => println!("c = {}, a = {}", round_sig(params.c, 12), round_sig(params.a, 12)),
                _ => emit_json(json!({ "c": params.c, "a": params.a, "weights": weights })),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Fmatrix { q, common } => {
            let dp = DeformationParameter::new(q).map_err(|e| e.to_string())?;
            let f = f_matrix(dp);
            match common.format {
                Format::Text => println!(
                    "[[{}, {}], [{}, {}]]",
                    round_sig(f[0][0], 12),
                    round_sig(f[0][1], 12),
                    round_sig(f[1][0], 12),
                    round_sig(f[1][1], 12)
                ),
                _ => emit_json(json!({ "F": f })),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn fmt_group(g: &qhs_core::ktheory::AbelianGroup) -> String {
    g.to_string()
}
