//! Exact calculator for the wall-crossing of universal Brill-Noether classes.
//!
//! Given a genus `g`, a marking count `n`, a degree `d < g` and a stability
//! hyperplane, the crate produces the wall-crossing term of the degree-`(g-d)`
//! Brill-Noether class as a formal rational linear combination of decorated
//! boundary strata (stable graph, multidegree, forest of extremal vertex sets,
//! psi exponents, formal Chern factors).
//!
//! Everything is exact: stability conditions are rational vectors with an
//! optional symbolic infinitesimal component, so there are no tolerance knobs
//! anywhere in the pipeline.

pub mod num;
pub mod graphs;
pub mod stability;
pub mod extremal;
pub mod blowup;
pub mod wallcross;
pub mod verify;

pub use crate::num::{binom, PerturbedRational, Rat};
pub use graphs::{GraphMorphism, MarkedGraph, VineTriple};
pub use stability::{Pseudodivisor, StabilityCondition, Wall};
pub use extremal::{ExtPoset, FullForest, VineFunction};
pub use blowup::{StratCategory, VineStratum};
pub use wallcross::{ChernFactor, ChernKind, StrataClassExpr, StrataTerm};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("graph is not stable: {0}")]
    UnstableGraph(String),
    #[error("not a generic wall point: base point also lies on {0}")]
    NotGenericWallPoint(String),
    #[error("divisor is not stable for the plus-side polarization")]
    NotPlusStable,
    #[error("method not applicable: {0}")]
    NotApplicable(String),
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;
