//! Asymptotic uniform-convergence and interpolation quantities for
//! random features regression, with a finite-size simulator to check them.
//!
//! The crate is organised bottom-up:
//!
//! * [`activation`] computes the Gaussian Hermite coefficients of the activation.
//! * [`fixedpoint`] solves the coupled Stieltjes-transform equations.
//! * [`asymptotics`] turns fixed points into penalized values, norm levels,
//!   dual bounds, min-norm risk and kernel-regime limits.
//! * [`simulator`] draws finite instances and solves the matching quadratic programs.
//! * [`analysis`] fits power laws and compares theory with simulation.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activation;
pub mod analysis;
pub mod asymptotics;
pub mod error;
pub mod fixedpoint;
pub mod model;
pub mod simulator;

pub use activation::{hermite_coeffs, preset, ActivationProfile, DEFAULT_QUAD_ORDER};
pub use asymptotics::{
    alpha_curve, dual_value, kernel_limit, risk_min_norm, tbar_point, ubar_point, DualCurve,
    DualPoint, Family, KernelQuantity, LagrangianPoint, MinNormPoint,
};
pub use error::{Error, Result};
pub use fixedpoint::{
    EquationFamily, FixedPointSolver, FixedPointState, QVec, SolverOptions, ZetaConvention,
};
pub use model::ModelParams;
