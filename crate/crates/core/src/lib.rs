//! Decision and certification engine for closed-orbit links of non-singular
//! Morse–Smale flows on graph manifolds.
//!
//! A manifold is presented by its torus decomposition graph with Seifert
//! invariants on the vertices; a link is presented symbolically by indexed
//! fiber records plus an operation history. The engine decides whether the
//! presentation is realizable and, when it is, emits a certificate (an
//! oriented Lyapunov graph together with a fattened-round-handle assembly)
//! that an independent verifier re-checks from scratch.

pub mod decide;
pub mod diag;
#[cfg(test)]
pub(crate) mod fixtures;
pub mod frh;
mod graphs;
pub mod ids;
pub mod link;
pub mod lyagraph;
pub mod manifold;
pub mod ops;
pub mod seifert;
pub mod slope;

/// Integer type used for slopes and cable classes: arbitrary precision.
pub type Int = num_bigint::BigInt;

/// Slope of a (possibly singular) Seifert fiber, reduced, with positive
/// denominator.
pub type Slope = crate::slope::Slope<Int>;

pub use decide::{enumerate_links, is_realizable, realize, RealizabilityReport, RealizeError};
pub use diag::{DiagCode, Diagnostic, Diagnostics, Severity};
pub use frh::{
    assemble_certificate, assign_sigma, block_to_frh, verify_certificate, BlockShape,
    FrhBlock, FrhCertificate, SigmaAssignment,
};
pub use ids::{KnotId, PieceId, TorusId};
pub use link::{CableClass, IndexedLink, KnotKind, KnotRecord};
pub use lyagraph::{GeneralizedGraph, LyapunovGraph, PieceGraph, Projection};
pub use manifold::{EdgeSlot, GraphManifold, JsjEdge};
pub use ops::{LinkState, OperationStep, S3LinkExpr, TorusSet};
pub use seifert::SeifertPiece;
