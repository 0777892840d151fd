//! Feasibility solver for fair and balanced T-costs.
//!
//! For a fixed admissible involution the unknowns are one weight per edge
//! pair (the partner weight is its reciprocal, fixed loops are pinned to 1)
//! and the constraints are the per-vertex source-cost equations at interior
//! vertices. Involutions are enumerated lexicographically and each branch is
//! attacked by damped Gauss-Newton from several deterministic starts.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::Involution;
use crate::error::{Error, Result};
use crate::graph::{Cost, DeformationParameter, OrientedGraph};

/// Default solver convergence tolerance.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-7;

const MAX_INVOLUTIONS: usize = 100_000;
const NEWTON_STEPS: usize = 200;
const EXTRA_STARTS: usize = 24;
const RNG_SEED: u64 = 0x5134_71FA;

/// Result of [`solve_cost`].
#[derive(Debug, Clone)]
pub enum SolveOutcome {
    Feasible {
        /// Distinct solutions, at most `max_solutions`, in discovery order.
        solutions: Vec<(Cost, Involution)>,
        /// Set when the constraint Jacobian is rank-deficient at some
        /// solution, signalling a continuous family.
        parametric: bool,
    },
    Infeasible,
}

impl SolveOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, SolveOutcome::Feasible { .. })
    }

    pub fn solutions(&self) -> &[(Cost, Involution)] {
        match self {
            SolveOutcome::Feasible { solutions, .. } => solutions,
            SolveOutcome::Infeasible => &[],
        }
    }

    pub fn parametric(&self) -> bool {
        matches!(self, SolveOutcome::Feasible { parametric: true, .. })
    }
}

/// One structural involution branch: pair variables and fixed loops.
#[derive(Debug, Clone)]
struct Branch {
    /// (representative edge, partner edge); representative carries the free
    /// variable, the partner the reciprocal. A loop pair lives at one vertex.
    pairs: Vec<(String, String)>,
    /// Loops pinned to weight 1.
    fixed: Vec<String>,
}

impl Branch {
    fn involution(&self, g: &OrientedGraph) -> Involution {
        let mut pairing = BTreeMap::new();
        for (a, b) in &self.pairs {
            pairing.insert(a.clone(), b.clone());
            pairing.insert(b.clone(), a.clone());
        }
        for e in &self.fixed {
            pairing.insert(e.clone(), e.clone());
        }
        Involution::new(g, pairing).expect("enumerated involution is structurally valid")
    }
}

/// Enumerate every admissible involution: bijections between opposite
/// parallel-edge classes, and matchings (loop-free if `t > 0`) on each loop
/// set. Lexicographic in edge ids.
fn enumerate_branches(g: &OrientedGraph, loop_free: bool) -> Result<Option<Vec<Branch>>> {
    let mut classes: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
    for e in g.edges() {
        classes.entry((e.src.clone(), e.dst.clone())).or_default().push(e.id.clone());
    }
    for ids in classes.values_mut() {
        ids.sort_unstable();
    }

    // Opposite classes must have equal sizes; odd loop sets need fixed points.
    let mut pair_groups: Vec<Vec<Vec<(String, String)>>> = Vec::new();
    let mut loop_groups: Vec<Vec<(Vec<(String, String)>, Vec<String>)>> = Vec::new();

    let keys: Vec<(String, String)> = classes.keys().cloned().collect();
    for (v, u) in &keys {
        if v > u {
            continue;
        }
        if v == u {
            let loops = classes[&(v.clone(), u.clone())].clone();
            let matchings = loop_matchings(&loops, loop_free);
            if matchings.is_empty() {
                return Ok(None);
            }
            loop_groups.push(matchings);
            continue;
        }
        let forward = &classes[&(v.clone(), u.clone())];
        let backward = match classes.get(&(u.clone(), v.clone())) {
            Some(b) => b,
            None => return Ok(None),
        };
        if forward.len() != backward.len() {
            return Ok(None);
        }
        let mut bijections = Vec::new();
        permutations(backward.len(), &mut |perm| {
            bijections.push(
                forward
                    .iter()
                    .zip(perm.iter())
                    .map(|(f, &j)| (f.clone(), backward[j].clone()))
                    .collect::<Vec<_>>(),
            );
        });
        pair_groups.push(bijections);
    }

    // Cartesian product over groups.
    let mut total: usize = 1;
    for g_ in &pair_groups {
        total = total.saturating_mul(g_.len());
    }
    for g_ in &loop_groups {
        total = total.saturating_mul(g_.len());
    }
    if total > MAX_INVOLUTIONS {
        return Err(Error::InvalidParameter(format!(
            "involution enumeration too large ({total} branches)"
        )));
    }

    let mut branches = vec![Branch { pairs: Vec::new(), fixed: Vec::new() }];
    for group in pair_groups {
        let mut next = Vec::with_capacity(branches.len() * group.len());
        for b in &branches {
            for choice in &group {
                let mut nb = b.clone();
                nb.pairs.extend(choice.iter().cloned());
                next.push(nb);
            }
        }
        branches = next;
    }
    for group in loop_groups {
        let mut next = Vec::with_capacity(branches.len() * group.len());
        for b in &branches {
            for (pairs, fixed) in &group {
                let mut nb = b.clone();
                nb.pairs.extend(pairs.iter().cloned());
                nb.fixed.extend(fixed.iter().cloned());
                next.push(nb);
            }
        }
        branches = next;
    }
    Ok(Some(branches))
}

/// Emit all permutations of 0..n in lexicographic order.
fn permutations(n: usize, emit: &mut dyn FnMut(&[usize])) {
    fn go(k: usize, items: &mut Vec<usize>, emit: &mut dyn FnMut(&[usize])) {
        if k == items.len() {
            emit(items);
            return;
        }
        for pick_pos in k..items.len() {
            items[k..=pick_pos].rotate_right(1);
            go(k + 1, items, emit);
            items[k..=pick_pos].rotate_left(1);
        }
    }
    let mut items: Vec<usize> = (0..n).collect();
    go(0, &mut items, emit);
}

/// All matchings-with-optional-fixed-points of a loop set, lexicographic.
fn loop_matchings(
    loops: &[String],
    loop_free: bool,
) -> Vec<(Vec<(String, String)>, Vec<String>)> {
    let mut out = Vec::new();
    fn go(
        remaining: &[String],
        loop_free: bool,
        pairs: &mut Vec<(String, String)>,
        fixed: &mut Vec<String>,
        out: &mut Vec<(Vec<(String, String)>, Vec<String>)>,
    ) {
        let Some((first, rest)) = remaining.split_first() else {
            out.push((pairs.clone(), fixed.clone()));
            return;
        };
        for (k, other) in rest.iter().enumerate() {
            let mut next: Vec<String> = rest.to_vec();
            next.remove(k);
            pairs.push((first.clone(), other.clone()));
            go(&next, loop_free, pairs, fixed, out);
            pairs.pop();
        }
        if !loop_free {
            fixed.push(first.clone());
            go(rest, loop_free, pairs, fixed, out);
            fixed.pop();
        }
    }
    go(loops, loop_free, &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

/// Per-vertex residuals and Jacobian in log-variables y (w = exp y).
struct System<'a> {
    g: &'a OrientedGraph,
    branch: &'a Branch,
    interior: Vec<String>,
    /// edge id -> (variable index, exponent ±1) or None for fixed weight 1.
    role: BTreeMap<String, Option<(usize, f64)>>,
    abs_t: f64,
}

impl<'a> System<'a> {
    fn new(g: &'a OrientedGraph, branch: &'a Branch, abs_t: f64) -> Self {
        let mut role = BTreeMap::new();
        for (k, (a, b)) in branch.pairs.iter().enumerate() {
            role.insert(a.clone(), Some((k, 1.0)));
            role.insert(b.clone(), Some((k, -1.0)));
        }
        for e in &branch.fixed {
            role.insert(e.clone(), None);
        }
        let interior = g.interior_vertices().cloned().collect();
        System { g, branch, interior, role, abs_t }
    }

    fn num_vars(&self) -> usize {
        self.branch.pairs.len()
    }

    fn weights(&self, y: &DVector<f64>) -> BTreeMap<String, f64> {
        self.role
            .iter()
            .map(|(id, r)| {
                let w = match r {
                    Some((k, s)) => (s * y[*k]).exp(),
                    None => 1.0,
                };
                (id.clone(), w)
            })
            .collect()
    }

    fn residual(&self, y: &DVector<f64>) -> DVector<f64> {
        let w = self.weights(y);
        DVector::from_iterator(
            self.interior.len(),
            self.interior.iter().map(|v| {
                self.g.out_edges(v).map(|e| w[&e.id]).sum::<f64>() - self.abs_t
            }),
        )
    }

    fn jacobian(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let w = self.weights(y);
        let mut jac = DMatrix::zeros(self.interior.len(), self.num_vars());
        for (row, v) in self.interior.iter().enumerate() {
            for e in self.g.out_edges(v) {
                if let Some((k, s)) = self.role[&e.id] {
                    // d/dy_k exp(s y_k) = s exp(s y_k)
                    jac[(row, k)] += s * w[&e.id];
                }
            }
        }
        jac
    }
}

fn min_norm_step(jac: &DMatrix<f64>, f: &DVector<f64>) -> DVector<f64> {
    let svd = jac.clone().svd(true, true);
    svd.solve(f, 1e-12).map(|d| -d).unwrap_or_else(|_| DVector::zeros(jac.ncols()))
}

fn newton(system: &System, start: DVector<f64>, tol: f64) -> Option<DVector<f64>> {
    let mut y = start;
    let mut f = system.residual(&y);
    for _ in 0..NEWTON_STEPS {
        if f.amax() <= tol {
            return Some(y);
        }
        let jac = system.jacobian(&y);
        let step = min_norm_step(&jac, &f);
        if step.amax() > 50.0 {
            // Runaway direction; damp hard.
            let scaled = &step * (50.0 / step.amax());
            let y_try = &y + &scaled;
            let f_try = system.residual(&y_try);
            if f_try.norm() >= f.norm() {
                return None;
            }
            y = y_try;
            f = f_try;
            continue;
        }
        // Backtracking line search on the residual norm.
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let y_try = &y + &step * alpha;
            let f_try = system.residual(&y_try);
            if f_try.norm() < f.norm() * (1.0 - 1e-4 * alpha) || f_try.amax() <= tol {
                y = y_try;
                f = f_try;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            return None;
        }
    }
    if f.amax() <= tol {
        Some(y)
    } else {
        None
    }
}

/// Deterministic starting points: all-ones first, then seeded log-uniform
/// perturbations.
fn starts(num_vars: usize) -> Vec<DVector<f64>> {
    let mut out = vec![DVector::zeros(num_vars)];
    let mut rng = ChaCha8Rng::seed_from_u64(RNG_SEED);
    for _ in 0..EXTRA_STARTS {
        out.push(DVector::from_iterator(
            num_vars,
            (0..num_vars).map(|_| rng.gen_range(-1.2f64..1.2)),
        ));
    }
    out
}

/// Enumerate admissible involutions and solve the fairness equations on each
/// branch. Boundary vertices carry no constraint. Solutions are distinct when
/// their weight vectors differ by more than `10·tol` in sup norm.
pub fn solve_cost(
    g: &OrientedGraph,
    dp: DeformationParameter,
    max_solutions: usize,
    tol: f64,
) -> Result<SolveOutcome> {
    let loop_free = dp.t() > 0.0;
    let Some(branches) = enumerate_branches(g, loop_free)? else {
        return Ok(SolveOutcome::Infeasible);
    };

    let mut solutions: Vec<(Cost, Involution)> = Vec::new();
    let mut weight_vectors: Vec<Vec<f64>> = Vec::new();
    let mut parametric = false;

    for branch in &branches {
        if solutions.len() >= max_solutions {
            break;
        }
        let system = System::new(g, branch, dp.abs_t());
        if system.num_vars() == 0 {
            // No free weight: all loops fixed at 1; feasible iff residual ok.
            let y = DVector::zeros(0);
            if system.residual(&y).amax() <= tol {
                let cost = Cost::new(system.weights(&y))?;
                push_distinct(
                    g,
                    branch,
                    cost,
                    &mut solutions,
                    &mut weight_vectors,
                    tol,
                    max_solutions,
                );
            }
            continue;
        }
        for start in starts(system.num_vars()) {
            if solutions.len() >= max_solutions {
                break;
            }
            let Some(y) = newton(&system, start, tol) else { continue };
            // Polish towards machine precision so downstream verification at
            // 10·tol has headroom.
            let y = newton(&system, y.clone(), (tol * 1e-4).max(1e-13)).unwrap_or(y);
            let cost = Cost::new(system.weights(&y))?;
            let added = push_distinct(
                g,
                branch,
                cost,
                &mut solutions,
                &mut weight_vectors,
                tol,
                max_solutions,
            );
            if added {
                let jac = system.jacobian(&y);
                if rank_deficient(&jac) {
                    parametric = true;
                }
            }
        }
    }

    if solutions.is_empty() {
        Ok(SolveOutcome::Infeasible)
    } else {
        Ok(SolveOutcome::Feasible { solutions, parametric })
    }
}

fn push_distinct(
    g: &OrientedGraph,
    branch: &Branch,
    cost: Cost,
    solutions: &mut Vec<(Cost, Involution)>,
    weight_vectors: &mut Vec<Vec<f64>>,
    tol: f64,
    max_solutions: usize,
) -> bool {
    if solutions.len() >= max_solutions {
        return false;
    }
    let vector: Vec<f64> = g.edges().iter().map(|e| cost.get(&e.id).unwrap()).collect();
    for known in weight_vectors.iter() {
        let dist = known
            .iter()
            .zip(&vector)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        if dist <= 10.0 * tol {
            return false;
        }
    }
    weight_vectors.push(vector);
    solutions.push((cost, branch.involution(g)));
    true
}

fn rank_deficient(jac: &DMatrix<f64>) -> bool {
    if jac.ncols() == 0 {
        return false;
    }
    if jac.nrows() < jac.ncols() {
        return true;
    }
    let svd = jac.clone().svd(false, false);
    let max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return true;
    }
    let min = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    min < 1e-7 * max
}
