//! Eigenvalue statistics of the correlated Jacobi and Cauchy-Lorentz
//! ensembles, computed by Monte Carlo sampling, exact finite-size formulas and
//! large-matrix saddle-point asymptotics.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
pub mod error;
pub mod exact_complex;
pub mod exact_real;
pub mod model;
pub mod polyroots;
pub mod quad;
pub mod sampler;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use model::{
    cl_to_jacobi_point, jacobi_to_cl_point, transport_density_cl_to_jacobi, transport_density_jacobi_to_cl, Beta,
    CorrelationSpectrum, DensityCurve, Domain, EnsembleParams, EvaluationGrid, Method,
};
