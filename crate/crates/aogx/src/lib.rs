//! Model-agnostic extraction of the sparse interactive-concept spectrum of a
//! black-box scalar function over maskable inputs.
//!
//! Given any oracle `v` that can score an input sample under every of the
//! `2^n` masking patterns, this crate
//!
//! 1. computes the per-subset effect spectrum `{w_S}` whose subset sums
//!    reproduce every masked output exactly ([`harsanyi`]),
//! 2. prunes it to a small retained pattern set and optionally re-learns the
//!    masking baseline to sharpen sparsity ([`sparsify`]),
//! 3. compiles the retained patterns into a layered And-Or graph with shared
//!    coalitions extracted under a description-length objective ([`aog`]), and
//! 4. scores the result with the evaluation metric suite ([`metrics`]).
//!
//! Oracles for synthetic ground-truth functions, serialized MLP weights, and
//! external processes live in [`oracle`]; the subset-lattice machinery they
//! all share is in [`lattice`].

pub mod aog;
pub mod harsanyi;
pub mod lattice;
pub mod metrics;
pub mod oracle;
pub mod sparsify;

pub use lattice::{SubsetTable, VariableSet};
pub use oracle::ValueOracle;

/// Umbrella error for callers that drive the whole pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Lattice(#[from] lattice::LatticeError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error(transparent)]
    Harsanyi(#[from] harsanyi::HarsanyiError),
    #[error(transparent)]
    Sparsify(#[from] sparsify::SparsifyError),
    #[error(transparent)]
    Aog(#[from] aog::AogError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
}
