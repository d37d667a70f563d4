//! Generalized multiple importance sampling over low-dimensional targets.
//!
//! A proposal set of `N` densities is sampled `M = kN` times. How the
//! proposal index of each draw is chosen ([`SelectionStrategy`]) and which
//! density goes in the importance weight's denominator
//! ([`WeightingFunction`]) together determine one of six distinct
//! estimators ([`SchemeTag`]). [`run_estimator`] draws one estimate,
//! [`analytic_variance`] computes its exact variance by quadrature.

mod density;
mod estimator;
pub mod quadrature;
mod scheme;
mod selection;
mod target;
mod variance;
mod weighting;

pub use density::{Domain, Point, Proposal, ProposalSet, Univariate, NORMAL_SUPPORT_SIGMAS};
pub use estimator::{run_estimator, run_trials, EstimatorReport};
pub use scheme::{MisScheme, SchemeTag};
pub use selection::{select_indices, SelectionStrategy};
pub use target::{Integrand, Target};
pub use variance::{analytic_variance, domain_integral, MAX_ENUMERATED_PROPOSALS};
pub use weighting::{weighting_denominator, CycleView, WeightingFunction};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MisError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("scheme ({selection}, {weighting}) is {actual}, not {requested}")]
    InconsistentScheme {
        requested: SchemeTag,
        actual: SchemeTag,
        selection: SelectionStrategy,
        weighting: WeightingFunction,
    },
    #[error("estimator invalid: zero weighting density at x = ({x}, {y}) where the target is {value}")]
    ZeroDenominator { x: f64, y: f64, value: f64 },
    #[error("{0} enumeration refused for N = {1} (limit {MAX_ENUMERATED_PROPOSALS})")]
    Capability(SchemeTag, usize),
    #[error("variance integral diverges: {0}")]
    Divergence(String),
}
