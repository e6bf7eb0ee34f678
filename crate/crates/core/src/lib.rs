//! Joint sojourn-time distributions for Markov chains with a three-way state
//! partition.
//!
//! The library computes the joint law of (time spent in the upper closure of
//! the state space, current position) for finite chains and bounded-jump
//! random walks, in two independent ways:
//!
//!   - a dynamic-programming oracle that walks the chain step by step, and
//!   - generating-function kernels assembled from entrance-time ladders and
//!     solved as linear systems over truncated power series (exact rational
//!     or floating point).
//!
//! Two sojourn variants are supported: the plain count of visits to the upper
//! closure, and a modified count that only accrues while the most recent
//! crossing came from above. Closed-form evaluators for the one-step walk and
//! explicit kernel matrices for bounded jumps round out the toolkit, with a
//! verification suite cross-checking every route against the oracle.

pub mod chain;
pub mod closedform;
pub mod error;
pub mod genfun;
pub mod linalg;
pub mod lrwalk;
pub mod oracle;
pub mod parallel;
pub mod scalar;
pub mod series;
pub mod verify;

pub use chain::{
    check_assumptions, lr_canonical_partition, materialize_window, parse_inline_lr, simple_walk,
    varpi, window_for, CanonicalPartition, ChainSpec, FiniteChain, JumpDistribution, Partition,
    StateClass, TargetSet, ValidationReport, WindowChain,
};
pub use closedform::{
    k0_closed, k0_closed_series, k0_factorization_check, k0_x_boundary, k0_y_boundary,
    ktilde0_closed, ktilde0_crosscheck, ktilde0_nostay, ktilde0_nostay_series,
    ktilde0_nostay_split, ErratumReport, FactorizationReport, FormulaCheck, OrdinaryWalk,
    TildeCoefficients,
};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use lrwalk::{
    binomial_family, build_matrices, gamma_numeric, gamma_numeric_symmetric, gamma_series,
    k_lr_numeric, k_lr_series, ktilde_lr_numeric, ktilde_lr_series, rho_binomial_family,
    solve_roots, symmetric22, uniform_family, CharPoly, GammaKernel, LrMatrixSet, RootSet,
    Sym22Kernels,
};
pub use scalar::{parse_prob, Rat, Ring, Scalar};
pub use series::{solve_linear, Series1, Series2, SeriesMatrix};
pub use verify::{
    run_criterion, run_suite, CriterionResult, FaultInjection, Suite, SuiteReport, CRITERION_COUNT,
};
