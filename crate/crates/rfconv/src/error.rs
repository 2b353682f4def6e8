use thiserror::Error;

/// Errors raised by the solvers, the simulator and the analysis helpers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("activation evaluates to a non-finite value at x = {x}")]
    NonFiniteActivation { x: f64 },

    #[error("degenerate activation: mu1^2 = {mu1_sq:.3e}, mu*^2 = {mustar_sq:.3e} (both must exceed 1e-12)")]
    DegenerateActivation { mu1_sq: f64, mustar_sq: f64 },

    #[error("quadrature order {0} is below the minimum of 20")]
    QuadratureOrder(usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("denominator vanished while evaluating the fixed-point map (|den| = {magnitude:.3e})")]
    SingularDenominator { magnitude: f64 },

    #[error(
        "fixed-point solve did not converge after {iters} iterations (residual {residual:.3e})"
    )]
    NoConvergence { iters: usize, residual: f64 },

    #[error("terminal tail of the xi -> 0 continuation is not Cauchy (gap {gap:.3e})")]
    BranchInstability { gap: f64 },

    #[error("logarithm argument too close to zero (|arg| = {magnitude:.3e})")]
    BranchCutHit { magnitude: f64 },

    #[error("lambda = {lambda} lies outside the admissible region")]
    OutsideAdmissibleRegion { lambda: f64 },

    #[error("interpolator quantities need psi1 > psi2 (got psi1 = {psi1}, psi2 = {psi2})")]
    RequiresOverparam { psi1: f64, psi2: f64 },

    #[error("norm level {level} is outside the attainable range (reached {reached} before the boundary)")]
    NormLevelOutOfRange { level: f64, reached: f64 },

    #[error("1/psi1 extrapolation is unstable (relative residual {residual:.3e})")]
    ExtrapolationUnstable { residual: f64 },

    #[error("feature matrix is numerically rank deficient (singular value ratio {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error(
        "penalized sup is unbounded at lambda = {lambda} (top eigenvalue {top_eigenvalue:.3e})"
    )]
    NotNegativeDefinite { lambda: f64, top_eigenvalue: f64 },

    #[error("KKT system is singular at lambda = {lambda}")]
    SingularKkt { lambda: f64 },

    #[error("spectral parameter hits the spectrum (distance {distance:.3e})")]
    SpectrumHit { distance: f64 },

    #[error("every replicate was infeasible at lambda = {lambda}")]
    AllReplicatesInfeasible { lambda: f64 },

    #[error("need at least {needed} points in the fit window, found {found}")]
    InsufficientPoints { needed: usize, found: usize },

    #[error("no positive ordinate inside the fit window")]
    NonPositiveOrdinate,

    #[error("theory and simulation grids do not match: {0}")]
    GridMismatch(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
