//! Joint distributions of dependent non-negative lifetimes through their
//! multivariate conditional hazard rate (m.c.h.r.) functions.
//!
//! The crate models a vector `(X_1, .., X_n)` of dependent lifetimes by the
//! family of conditional failure intensities `λ_j(t | I; t_1, .., t_k)` and
//! computes exact or simulated answers to questions about minima:
//!
//! * survival of `min_{j ∈ A} X_j` and its cumulative hazard,
//! * the hit probabilities `α_j^[A] = P(X_j = min_{k ∈ A} X_k)`,
//! * joint events `{X_j = min, min ∈ B}` and full joint densities,
//! * stochastic-precedence relations, their non-transitivity cycles and
//!   aggregation/marginalization reversals, and the sufficient conditions
//!   that rule those pathologies out,
//! * per-path-set importance of components of a coherent system.
//!
//! Everything numeric is generic over the scalar type via [`real::Real`]
//! (`f32` or `f64`); `f64` aliases are exported at the crate root. The
//! load-sharing subset DP can additionally run over exact rationals, see
//! [`kernel::dp`].

pub mod hazard;
pub mod history;
pub mod kernel;
pub mod law;
pub mod model;
pub mod precedence;
pub mod quad;
pub mod real;
pub mod reliability;
pub mod simulate;
pub mod subset;

pub use history::FailureHistory;
pub use model::{FrailtyMixing, ModelKind, ModelSpec, PairTable, ValidationReport, Violation};
pub use subset::{SubsetMask, VariableIndex, MAX_VARIABLES};

/// `f64` model specification.
pub type Model = model::ModelSpec<f64>;
/// `f64` failure history.
pub type History = history::FailureHistory<f64>;
/// `f64` lifetime law.
pub type Law = law::LifetimeLaw<f64>;
/// `f64` hazard curve.
pub type Hazard = hazard::HazardCurve<f64>;
/// `f64` quadrature configuration.
pub type QuadratureConfig = quad::QuadratureConfig<f64>;
/// `f64` kernel configuration.
pub type KernelConfig = kernel::KernelConfig<f64>;
/// `f64` minimum report.
pub type MinReport = kernel::MinReport<f64>;
/// `f64` Monte Carlo estimate.
pub type Estimate = simulate::Estimate<f64>;
/// `f64` stochastic-precedence matrix.
pub type SpMatrix = precedence::SpMatrix<f64>;
