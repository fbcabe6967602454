//! fieldmax — a verification lab for weighted maximal inequalities and
//! strong laws of large numbers over d-dimensional random fields.
//!
//! The crate evaluates both sides of Hájek–Rényi-type maximal
//! inequalities for multi-index partial sums, either exactly (outcome
//! enumeration for finite-support margins) or statistically (seeded
//! Monte Carlo with Wilson intervals), reconstructs the block-decomposition
//! argument behind the probability transfer with its 4^d constant, builds
//! the slower-growing normalizers used to derive strong laws, and runs
//! finite-horizon strong-law diagnostics such as the logarithmically
//! weighted sum demo.
//!
//! Modules:
//! - [`lattice`]: multi-index arithmetic, dense tables, prefix sums and
//!   running maxima.
//! - [`dsequences`]: closed-form and product-type index sequences, series
//!   convergence verdicts, normalizer construction.
//! - [`fieldgen`]: counter-keyed random field generation and exact
//!   outcome enumeration.
//! - [`maximal`]: tail/moment estimators, constant fitting, transfer and
//!   bridge checks.
//! - [`blockdecomp`]: the deterministic proof-skeleton verifier and the
//!   optimal ladder constant.
//! - [`slln`]: trajectories, sup-ratio statistics, log-weighted demo.
//!
//! Replicates and enumeration chunks run in parallel via rayon when the
//! default `parallel` feature is on; disabling it swaps in a sequential
//! fallback with byte-identical results.

// `!(x > 0.0)` rejects NaN along with nonpositive values; `x <= 0.0`
// would wave NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blockdecomp;
pub mod dsequences;
pub mod error;
pub mod exec;
pub mod fieldgen;
pub mod lattice;
pub mod maximal;
pub mod numeric;
pub mod rng;
pub mod slln;

pub use error::{Error, Result};
pub use lattice::{LatticeTable, MultiIndex, RectangleSchedule};
