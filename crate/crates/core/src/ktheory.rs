//! K₀/K₁ of the C*-algebra of a quantum homogeneous space, computed from
//! the graph through integer matrix normal forms.
//!
//! The equivariant K₀ group of an ergodic action is taken to be the free
//! abelian group on the vertex set, with the generating representation
//! acting by the adjacency matrix γ; the single-vertex case (γ = loop
//! count) pins this interpretation against the full-quantum-multiplicity
//! K-theory example. `gamma_matrix` is public so a different γ can be
//! substituted. K₀ is the cokernel and K₁ the kernel of
//! φ = [[−I, −I], [I, γ−I]], both read off the Smith normal form.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::cost::adjacency;
use crate::error::{Error, Result};
use crate::graph::OrientedGraph;

/// Dense matrix of arbitrary-precision integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, entries: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> i64) -> Self {
        let mut m = IntMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = BigInt::from(f(i, j));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * &other[(k, j)];
                    out[(i, j)] += prod;
                }
            }
        }
        out
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.entries.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[target] += factor * row[source]
    fn add_row(&mut self, target: usize, source: usize, factor: &BigInt) {
        for j in 0..self.cols {
            let add = factor * &self[(source, j)];
            self[(target, j)] += add;
        }
    }

    fn add_col(&mut self, target: usize, source: usize, factor: &BigInt) {
        for i in 0..self.rows {
            let add = factor * &self[(i, source)];
            self[(i, target)] += add;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let v = -self[(r, j)].clone();
            self[(r, j)] = v;
        }
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.entries[i * self.cols + j]
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self[(i, j)].to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Smith normal form `U·M·V = S`: S diagonal with nonnegative entries, each
/// dividing the next; U and V unimodular.
#[derive(Debug, Clone)]
pub struct Snf {
    pub s: IntMatrix,
    pub u: IntMatrix,
    pub v: IntMatrix,
}

/// Compute the Smith normal form by Euclidean elimination.
///
/// At step k the smallest-magnitude nonzero entry of the trailing block is
/// promoted to the pivot; row and column k are cleared by rounded division,
/// and the step only completes once the pivot divides the whole trailing
/// block, which makes the diagonal a divisibility chain outright. Every
/// restart strictly shrinks the pivot, so each step terminates.
pub fn smith_normal_form(m: &IntMatrix) -> Snf {
    let rows = m.rows();
    let cols = m.cols();
    let mut s = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);

    let k_max = rows.min(cols);
    for k in 0..k_max {
        'step: loop {
            // Smallest-magnitude nonzero entry in the trailing block.
            let mut pivot: Option<(usize, usize)> = None;
            for i in k..rows {
                for j in k..cols {
                    if !s[(i, j)].is_zero()
                        && pivot.map_or(true, |(pi, pj)| s[(i, j)].abs() < s[(pi, pj)].abs())
                    {
                        pivot = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = pivot else { break 'step };
            s.swap_rows(k, pi);
            u.swap_rows(k, pi);
            s.swap_cols(k, pj);
            v.swap_cols(k, pj);

            // One pass of clearing column and row k; a nonzero remainder is
            // strictly smaller than the pivot, so restart with it.
            for i in (k + 1)..rows {
                if s[(i, k)].is_zero() {
                    continue;
                }
                let factor = -div_round(&s[(i, k)], &s[(k, k)]);
                s.add_row(i, k, &factor);
                u.add_row(i, k, &factor);
                if !s[(i, k)].is_zero() {
                    continue 'step;
                }
            }
            for j in (k + 1)..cols {
                if s[(k, j)].is_zero() {
                    continue;
                }
                let factor = -div_round(&s[(k, j)], &s[(k, k)]);
                s.add_col(j, k, &factor);
                v.add_col(j, k, &factor);
                if !s[(k, j)].is_zero() {
                    continue 'step;
                }
            }
            // Row and column are clear; force the pivot to divide the rest
            // of the block so the diagonal comes out as a chain.
            for i in (k + 1)..rows {
                for j in (k + 1)..cols {
                    if !(&s[(i, j)] % &s[(k, k)]).is_zero() {
                        let one = BigInt::one();
                        s.add_row(k, i, &one);
                        u.add_row(k, i, &one);
                        continue 'step;
                    }
                }
            }
            break 'step;
        }
    }

    // Nonnegative diagonal.
    for i in 0..k_max {
        if s[(i, i)].is_negative() {
            s.negate_row(i);
            u.negate_row(i);
        }
    }

    Snf { s, u, v }
}

/// Division rounded to nearest (ties toward zero magnitude growth), keeping
/// remainders at most half the divisor.
fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    let (mut q, r) = (a / b, a % b);
    let two_r: BigInt = &r * 2;
    if two_r.abs() > b.abs() {
        if (r.is_negative()) == (b.is_negative()) {
            q += 1;
        } else {
            q -= 1;
        }
    }
    q
}

/// Finitely generated abelian group: free rank plus torsion coefficients in
/// a divisibility chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AbelianGroup {
    pub rank: usize,
    pub torsion: Vec<u64>,
}

impl AbelianGroup {
    pub fn free(rank: usize) -> Self {
        AbelianGroup { rank, torsion: Vec::new() }
    }

    pub fn is_trivial(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }
}

impl fmt::Display for AbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.rank {
            0 => {}
            1 => parts.push("Z".to_owned()),
            r => parts.push(format!("Z^{r}")),
        }
        for t in &self.torsion {
            parts.push(format!("Z/{t}"));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// The action γ of the generating representation on equivariant K₀,
/// realized as the vertex-indexed adjacency matrix.
///
/// Boundary-flagged graphs are rejected: K-theory needs the full graph, not
/// a truncation.
pub fn gamma_matrix(g: &OrientedGraph) -> Result<IntMatrix> {
    if !g.boundary().is_empty() {
        return Err(Error::BoundaryRejected(
            "K-theory is only computed for complete (non-truncated) graphs".into(),
        ));
    }
    let a = adjacency(g);
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
    Ok(IntMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]))
}

/// The 2k×2k block matrix φ = [[−I, −I], [I, γ−I]].
pub fn phi_matrix(gamma: &IntMatrix) -> IntMatrix {
    assert_eq!(gamma.rows(), gamma.cols(), "gamma must be square");
    let k = gamma.rows();
    let mut phi = IntMatrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        phi[(i, i)] = BigInt::from(-1);
        phi[(i, i + k)] = BigInt::from(-1);
        phi[(i + k, i)] = BigInt::one();
        for j in 0..k {
            phi[(i + k, j + k)] = gamma[(i, j)].clone();
        }
        phi[(i + k, i + k)] -= 1;
    }
    phi
}

/// Cokernel and kernel of an integer matrix, read off its Smith normal form.
pub fn cokernel_kernel(m: &IntMatrix) -> Result<(AbelianGroup, AbelianGroup)> {
    let snf = smith_normal_form(m);
    let k_max = m.rows().min(m.cols());
    let mut torsion = Vec::new();
    let mut rank = 0;
    for i in 0..k_max {
        let d = &snf.s[(i, i)];
        if d.is_zero() {
            continue;
        }
        rank += 1;
        if *d > BigInt::one() {
            let t = u64::try_from(d.clone()).map_err(|_| {
                Error::Malformed(format!("torsion coefficient {d} exceeds u64"))
            })?;
            torsion.push(t);
        }
    }
    let coker = AbelianGroup { rank: m.rows() - rank, torsion };
    let ker = AbelianGroup::free(m.cols() - rank);
    Ok((coker, ker))
}

/// K₀ and K₁ of the homogeneous space attached to a finite connected
/// symmetric graph.
pub fn k_groups(g: &OrientedGraph) -> Result<(AbelianGroup, AbelianGroup)> {
    if !g.is_connected() {
        return Err(Error::NotConnected);
    }
    let gamma = gamma_matrix(g)?;
    let phi = phi_matrix(&gamma);
    cokernel_kernel(&phi)
}
