//! Combinatorial classification toolkit for quantum homogeneous spaces over
//! quantum SU(2).
//!
//! The crate revolves around fair and balanced T-costs on oriented
//! multigraphs and the operator data they encode:
//!
//! - [`graph`] / [`catalog`]: weighted multigraphs, file I/O, the named
//!   families, the n-step construction and graph isomorphism.
//! - [`cost`] / [`solve`] / [`classify`]: verification and feasibility
//!   solving of fair and balanced costs, spectral norms, Perron costs and
//!   shape recognition.
//! - [`fusion`]: q-fundamental solutions (the anti-linear 𝒥 operators) built
//!   from weighted graphs, their defining identities and equivalence.
//! - [`presentation`]: generator/relation presentations of the linking
//!   algebra, with the F and E structure matrices.
//! - [`morphism`]: verification of equivariant-morphism data (gradings and
//!   block unitaries) against the quadratic compatibility diagram.
//! - [`ktheory`]: K₀/K₁ of the associated C*-algebra via Smith normal forms.
//!
//! All types are immutable after construction and every operation is a pure
//! function, so concurrent use needs no synchronization.

pub mod catalog;
pub mod classify;
pub mod cost;
pub mod embeddings;
pub mod error;
pub mod fusion;
pub mod graph;
pub mod ktheory;
pub mod morphism;
pub mod presentation;
pub mod solve;

pub use error::{Error, Result};
