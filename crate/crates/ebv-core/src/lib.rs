//! Equal bi-vectorized (EbV) parallel LU decomposition.
//!
//! The two triangles of an LU factorization are split into their per-step
//! column (L) and row (U) vectors, the vector of step `k` is paired with the
//! vector of step `n-k` so every work unit has total length `n`, and the
//! resulting `n-1` equal units are assigned to a fixed worker pool. Execution
//! is step-synchronous and bitwise reproducible: for any worker count the
//! parallel factorization and triangular solves return exactly the bits the
//! sequential reference produces.
//!
//! Modules:
//! - [`matrix`]: dense/CSR value types, generators live in [`generate`],
//!   Matrix Market ingestion in [`market`].
//! - [`lu`]: sequential right-looking factorization and substitutions, the
//!   deterministic oracle.
//! - [`plan`]: bi-vectorization, equal pairing, and worker assignment.
//! - [`parallel`]: the step-synchronous worker pool with per-worker
//!   operation counters.

pub mod generate;
pub mod lu;
pub mod market;
pub mod matrix;
pub mod parallel;
pub mod plan;

pub use generate::{generate, GeneratedMatrix, MatrixKind};
pub use lu::{
    backward_substitute, factorize_seq, forward_substitute, solve_seq, LuError, LUFactors,
    PivotPolicy,
};
pub use market::load_matrix_market;
pub use matrix::{
    normalize_unit_diagonal, residual_inf, DenseMatrix, MatrixError, RowScaling, SparseMatrix,
    Vector,
};
pub use parallel::{
    effective_workers, factorize_par, solve_par, ExecConfig, ExecError, WorkCounters,
};
pub use plan::{
    assign, bivectorize, equalize, plan_stats, EbvPlan, PairedUnit, PlanError, Triangle,
    VectorDescriptor, WorkSummary,
};
