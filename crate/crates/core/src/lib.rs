//! Symmetry-reduced variational solver for the conformally invariant
//! Choquard equation
//!
//! ```text
//! -Δu = (|x|^{-μ} * |u|^{2*_μ}) |u|^{2*_μ - 2} u   on R^n,   2*_μ = (2n - μ)/(n - 2),
//! ```
//!
//! worked on the sphere `S^n` through the stereographic lift, where the energy
//! reads
//!
//! ```text
//! E(v) = ½ ∫ (|∇v|² + n(n-2)/4 v²) dV − 1/(2·2*_μ) ∬ |v(ξ)|^{2*_μ} |v(ζ)|^{2*_μ} / |ξ − ζ|^μ dV dV.
//! ```
//!
//! Functions invariant under `O(n_1) x O(n_2)` depend on a single angle, so the
//! problem collapses to a one-dimensional spectral discretisation
//! ([`grid`]) with a dense nonlocal operator ([`kernel`]). Critical points are
//! computed in [`solver`]; [`symmetry`] describes the groups, [`stereo`] the
//! lift, and [`ledger`] the exact exponent bookkeeping of the regularity
//! bootstrap.

pub mod error;
pub mod grid;
pub mod kernel;
pub mod ledger;
pub mod params;
pub mod quadrature;
pub mod solver;
pub mod stereo;
pub mod symmetry;

pub use error::{Error, ErrorKind, Result};
pub use grid::{build_grid, FieldFunction, ReducedGrid, SymmetryClass};
pub use kernel::{assemble_kernel, KernelCache, KernelMatrix};
pub use ledger::{build_q_sequence, classify_case, LedgerReport};
pub use params::{make_params, Bubble, ProblemParams, Scalar};
pub use solver::{ChoquardProblem, EnergyBreakdown, SequenceOutcome, SolveOptions, SolveResult};
pub use symmetry::GroupDescriptor;

/// Surface area `|S^k|` of the unit `k`-sphere in `R^{k+1}`.
pub fn sphere_area(k: u32) -> f64 {
    let h = (k as f64 + 1.0) / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / statrs::function::gamma::gamma(h)
}
