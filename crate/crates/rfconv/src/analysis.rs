//! Power-law fits, theory versus simulation comparison and grid sweeps.

use rayon::prelude::*;

use crate::asymptotics::{
    finite_width_value, kernel_limit, lagrangian_curve, Family, KernelLimit, KernelQuantity,
};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::simulator::ReplicateStats;

/// Least-squares line through `(log x, log y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(x_min, x_max)` of the points actually used.
    pub window: (f64, f64),
    pub used: usize,
    /// Points inside the window dropped for a non-positive ordinate.
    pub excluded: usize,
}

const MIN_FIT_POINTS: usize = 4;

/// `count` log-spaced points from `min` to `max` inclusive.
pub fn log_space(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![min],
        _ => {
            let (a, b) = (min.ln(), max.ln());
            let mut v: Vec<f64> = (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect();
            v[0] = min;
            v[count - 1] = max;
            v
        }
    }
}

/// `count` evenly spaced points from `min` to `max` inclusive.
pub fn lin_space(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![min],
        _ => (0..count)
            .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Window covering the top decade of the abscissae.
pub fn top_decade(points: &[(f64, f64)]) -> (f64, f64) {
    let max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    (max / 10.0, max)
}

// Natural log of y / y0 that only depends on the binary exponent
// difference, so scaling every y by a power of two leaves it unchanged.
fn log_ratio(y: f64, y0: f64) -> f64 {
    let split = |v: f64| {
        let bits = v.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        if exp == 0 {
            return (v.ln(), 0);
        }
        let mant = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1023u64 << 52));
        (mant.ln(), exp - 1023)
    };
    let (m, e) = split(y);
    let (m0, e0) = split(y0);
    (m - m0) + (e - e0) as f64 * std::f64::consts::LN_2
}

/// Fit `log y = intercept + slope log x` over `window` (top decade of x
/// when `None`). Points with `y <= 0` are dropped and counted.
pub fn powerlaw_slope(points: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<PowerLawFit> {
    if points.iter().any(|p| !(p.0 > 0.0) || !p.0.is_finite()) {
        return Err(Error::InvalidParams(
            "abscissae must be positive and finite".into(),
        ));
    }
    let (lo, hi) = window.unwrap_or_else(|| top_decade(points));
    let tol = 1e-12 * hi.abs();
    let inside: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|p| p.0 >= lo - tol && p.0 <= hi + tol)
        .collect();
    let kept: Vec<(f64, f64)> = inside
        .iter()
        .copied()
        .filter(|p| p.1 > 0.0 && p.1.is_finite())
        .collect();
    if !inside.is_empty() && kept.is_empty() {
        return Err(Error::NonPositiveOrdinate);
    }
    if kept.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientPoints {
            needed: MIN_FIT_POINTS,
            found: kept.len(),
        });
    }
    let n = kept.len() as f64;
    let (x0, y0) = kept[0];
    let lx: Vec<f64> = kept.iter().map(|p| (p.0 / x0).ln()).collect();
    let ly: Vec<f64> = kept.iter().map(|p| log_ratio(p.1, y0)).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            found: 1,
        });
    }
    let slope = sxy / sxx;
    let intercept = y0.ln() + my - slope * (mx + x0.ln());
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    let xs = kept.iter().map(|p| p.0);
    let window = (
        xs.clone().fold(f64::INFINITY, f64::min),
        xs.fold(f64::NEG_INFINITY, f64::max),
    );
    Ok(PowerLawFit {
        slope,
        intercept,
        r_squared,
        window,
        used: kept.len(),
        excluded: inside.len() - kept.len(),
    })
}

/// Subtract `tau_sq` from every ordinate; returns the shifted points and
/// how many became non-positive.
pub fn excess(points: &[(f64, f64)], tau_sq: f64) -> (Vec<(f64, f64)>, usize) {
    let shifted: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x, y - tau_sq)).collect();
    let dropped = shifted.iter().filter(|p| !(p.1 > 0.0)).count();
    (shifted, dropped)
}

/// Deterministic theory at one lambda, in the coordinates the simulator measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryPoint {
    pub lambda: f64,
    /// `A_U(lambda)` or `A_T(lambda)`.
    pub norm_sq: f64,
    /// `value + lambda * norm_sq`: the gap for U, the risk for T.
    pub objective: f64,
}

/// Theory points for the simulated coordinates over an unscaled lambda grid.
pub fn theory_curve(
    family: Family,
    lambdas: &[f64],
    params: &ModelParams,
) -> Vec<Result<TheoryPoint>> {
    let bars: Vec<f64> = lambdas.iter().map(|l| l / params.mustar_sq()).collect();
    lagrangian_curve(family, &bars, params)
        .into_iter()
        .zip(lambdas)
        .map(|(p, &lambda)| {
            p.map(|p| TheoryPoint {
                lambda,
                norm_sq: p.norm_sq,
                objective: p.objective(),
            })
        })
        .collect()
}

/// A z-score, or a flag when the standard error is zero but the values differ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZScore {
    Finite(f64),
    DegenerateStderr,
}

impl ZScore {
    pub fn new(sim_mean: f64, stderr: f64, theory: f64) -> Self {
        let diff = sim_mean - theory;
        if stderr > 0.0 {
            Self::Finite(diff / stderr)
        } else if diff == 0.0 {
            Self::Finite(0.0)
        } else {
            Self::DegenerateStderr
        }
    }

    pub fn within(self, bound: f64) -> bool {
        matches!(self, Self::Finite(z) if z.abs() <= bound)
    }

    pub fn value(self) -> f64 {
        match self {
            Self::Finite(z) => z,
            Self::DegenerateStderr => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub lambda: f64,
    pub theory: TheoryPoint,
    pub stats: ReplicateStats,
    pub z_norm: ZScore,
    pub z_value: ZScore,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub pass_rate: f64,
}

pub const Z_BOUND: f64 = 3.0;

/// Per-lambda z-scores of simulation against theory. A point passes when
/// both coordinates are within [`Z_BOUND`] standard errors.
pub fn compare_theory_sim(
    theory: &[TheoryPoint],
    stats: &[(f64, ReplicateStats)],
) -> Result<Comparison> {
    if theory.len() != stats.len() {
        return Err(Error::GridMismatch(format!(
            "{} theory points against {} simulated points",
            theory.len(),
            stats.len()
        )));
    }
    let mut rows = Vec::with_capacity(theory.len());
    for (t, (lambda, s)) in theory.iter().zip(stats) {
        if (t.lambda - lambda).abs() > 1e-12 * lambda.abs().max(1.0) {
            return Err(Error::GridMismatch(format!(
                "lambda {} against {}",
                t.lambda, lambda
            )));
        }
        let z_norm = ZScore::new(s.norm_sq.mean, s.norm_sq.stderr, t.norm_sq);
        let z_value = ZScore::new(s.value.mean, s.value.stderr, t.objective);
        rows.push(ComparisonRow {
            lambda: *lambda,
            theory: *t,
            stats: s.clone(),
            z_norm,
            z_value,
            pass: z_norm.within(Z_BOUND) && z_value.within(Z_BOUND),
        });
    }
    let pass_rate = if rows.is_empty() {
        0.0
    } else {
        rows.iter().filter(|r| r.pass).count() as f64 / rows.len() as f64
    };
    Ok(Comparison { rows, pass_rate })
}

/// Kernel-regime limits over a `psi2` grid, evaluated in parallel.
pub fn kernel_sweep(
    quantity: KernelQuantity,
    psi2_grid: &[f64],
    alpha: f64,
    base: &ModelParams,
) -> Vec<(f64, Result<KernelLimit>)> {
    psi2_grid
        .par_iter()
        .map(|&p2| (p2, kernel_limit(quantity, p2, alpha, base)))
        .collect()
}

/// Kernel-regime uniform bound at the growing level `A(psi2) = scale * psi2^p`.
pub fn level_sweep(
    p: f64,
    scale: f64,
    psi2_grid: &[f64],
    base: &ModelParams,
) -> Vec<(f64, Result<KernelLimit>)> {
    psi2_grid
        .par_iter()
        .map(|&p2| {
            (
                p2,
                kernel_limit(KernelQuantity::UbarLevel(scale * p2.powf(p)), p2, 1.0, base),
            )
        })
        .collect()
}

/// `|X(psi1) - X_inf|` over a `psi1` grid at fixed `psi2`.
pub fn finite_width_sweep(
    quantity: KernelQuantity,
    psi1_grid: &[f64],
    psi2: f64,
    alpha: f64,
    base: &ModelParams,
) -> Result<(KernelLimit, Vec<(f64, f64)>)> {
    let limit = kernel_limit(quantity, psi2, alpha, base)?;
    let deltas = psi1_grid
        .par_iter()
        .map(|&p1| {
            let v = finite_width_value(quantity, alpha, &base.with_psi(p1, psi2))?;
            Ok((p1, (v - limit.value).abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((limit, deltas))
}
