//! Gaussian Hermite coefficients of activation functions.
//!
//! For `G ~ N(0, 1)` the asymptotic formulas only see three numbers:
//! `mu0 = E[s(G)]`, `mu1 = E[G s(G)]` and the nonlinear residual
//! `mustar_sq = E[s(G)^2] - mu0^2 - mu1^2`.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub const DEFAULT_QUAD_ORDER: usize = 200;
const MIN_QUAD_ORDER: usize = 20;
const DEGENERACY_FLOOR: f64 = 1e-12;
const NEGATIVE_VARIANCE_SLACK: f64 = 1e-10;

// Gaussian mass beyond |x| = 16 is below 1e-56, far under double precision.
const TRUNCATION: f64 = 16.0;

/// A scalar activation together with its Hermite coefficients.
#[derive(Clone, Copy)]
pub struct ActivationProfile {
    pub name: &'static str,
    pub evaluator: fn(f64) -> f64,
    pub mu0: f64,
    pub mu1: f64,
    pub mustar_sq: f64,
    pub quad_order: usize,
    kinks: &'static [f64],
}

impl fmt::Debug for ActivationProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ActivationProfile")
            .field("name", &self.name)
            .field("mu0", &self.mu0)
            .field("mu1", &self.mu1)
            .field("mustar_sq", &self.mustar_sq)
            .field("quad_order", &self.quad_order)
            .finish()
    }
}

impl ActivationProfile {
    pub fn mu1_sq(&self) -> f64 {
        self.mu1 * self.mu1
    }

    /// `mu1^2 / mustar^2`, the linear-to-nonlinear signal ratio.
    pub fn zeta(&self) -> f64 {
        self.mu1_sq() / self.mustar_sq
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.evaluator)(x)
    }

    /// `s(x) - mu0`, the centered activation used by the simulator.
    pub fn eval_centered(&self, x: f64) -> f64 {
        (self.evaluator)(x) - self.mu0
    }

    /// Nonlinear residual computed as `E[(s(G) - mu0 - mu1 G)^2]`,
    /// independently of the moment difference stored in `mustar_sq`.
    pub fn residual_variance(&self) -> f64 {
        let rule = GaussRule::standard_normal(self.quad_order, self.kinks);
        rule.expect(|x| {
            let r = self.eval(x) - self.mu0 - self.mu1 * x;
            r * r
        })
    }

    /// Same activation, coefficients recomputed at another order.
    pub fn with_order(&self, quad_order: usize) -> Result<Self> {
        coeffs_with_kinks(self.name, self.evaluator, quad_order, self.kinks)
    }
}

/// Plain ReLU, `max(0, x)`. Its `mu0` is `1/sqrt(2 pi)`, not zero.
pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// ReLU shifted to zero Gaussian mean, `max(0, x) - 1/sqrt(2 pi)`.
pub fn shifted_relu(x: f64) -> f64 {
    x.max(0.0) - (2.0 * PI).sqrt().recip()
}

pub fn tanh(x: f64) -> f64 {
    x.tanh()
}

struct Preset {
    name: &'static str,
    evaluator: fn(f64) -> f64,
    kinks: &'static [f64],
}

const PRESETS: &[Preset] = &[
    Preset {
        name: "relu",
        evaluator: relu,
        kinks: &[0.0],
    },
    Preset {
        name: "shifted-relu",
        evaluator: shifted_relu,
        kinks: &[0.0],
    },
    Preset {
        name: "tanh",
        evaluator: tanh,
        kinks: &[],
    },
];

/// Names accepted by [`preset`].
pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.name)
}

/// Look up a built-in activation by name and compute its coefficients.
pub fn preset(name: &str, quad_order: usize) -> Result<ActivationProfile> {
    let p = PRESETS
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::InvalidParams(format!("unknown activation `{name}`")))?;
    coeffs_with_kinks(p.name, p.evaluator, quad_order, p.kinks)
}

/// Gauss-Hermite estimates of the coefficients of a smooth activation.
///
/// Activations with kinks converge only algebraically under a single
/// Gauss-Hermite rule; use [`hermite_coeffs_with_kinks`] for those.
pub fn hermite_coeffs(sigma: fn(f64) -> f64, quad_order: usize) -> Result<ActivationProfile> {
    coeffs_with_kinks("custom", sigma, quad_order, &[])
}

/// Coefficients of an activation that is smooth away from `kinks`.
/// The Gaussian integral is split at the kinks and each piece uses
/// Gauss-Legendre nodes, which restores exponential convergence.
pub fn hermite_coeffs_with_kinks(
    sigma: fn(f64) -> f64,
    quad_order: usize,
    kinks: &'static [f64],
) -> Result<ActivationProfile> {
    coeffs_with_kinks("custom", sigma, quad_order, kinks)
}

fn coeffs_with_kinks(
    name: &'static str,
    sigma: fn(f64) -> f64,
    quad_order: usize,
    kinks: &'static [f64],
) -> Result<ActivationProfile> {
    if quad_order < MIN_QUAD_ORDER {
        return Err(Error::QuadratureOrder(quad_order));
    }
    let rule = GaussRule::standard_normal(quad_order, kinks);
    let (mut e0, mut e1, mut e2) = (0.0, 0.0, 0.0);
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let s = sigma(x);
        if !s.is_finite() {
            return Err(Error::NonFiniteActivation { x });
        }
        e0 += w * s;
        e1 += w * x * s;
        e2 += w * s * s;
    }
    let raw = e2 - e0 * e0 - e1 * e1;
    if raw < -NEGATIVE_VARIANCE_SLACK * e2.max(1.0) {
        return Err(Error::InvalidParams(format!(
            "negative nonlinear residual {raw:.3e}; quadrature order too low"
        )));
    }
    let mustar_sq = raw.max(0.0);
    let mu1_sq = e1 * e1;
    if mu1_sq <= DEGENERACY_FLOOR || mustar_sq <= DEGENERACY_FLOOR {
        return Err(Error::DegenerateActivation { mu1_sq, mustar_sq });
    }
    Ok(ActivationProfile {
        name,
        evaluator: sigma,
        mu0: e0,
        mu1: e1,
        mustar_sq,
        quad_order,
        kinks,
    })
}

/// Nodes and weights of a quadrature rule for `E[f(G)]`, `G ~ N(0, 1)`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Gauss-Hermite rule for the probabilists' weight, normalized so the
    /// weights sum to one.
    pub fn hermite(order: usize) -> Self {
        let offdiag: Vec<f64> = (1..order).map(|k| (k as f64).sqrt()).collect();
        let (nodes, weights) = golub_welsch(&vec![0.0; order], &offdiag);
        Self { nodes, weights }
    }

    /// Gauss-Legendre rule on `[-1, 1]`.
    pub fn legendre(order: usize) -> Self {
        let offdiag: Vec<f64> = (1..order)
            .map(|k| {
                let k = k as f64;
                k / (4.0 * k * k - 1.0).sqrt()
            })
            .collect();
        let (nodes, mut weights) = golub_welsch(&vec![0.0; order], &offdiag);
        weights.iter_mut().for_each(|w| *w *= 2.0);
        Self { nodes, weights }
    }

    /// Rule for the standard normal law. Without kinks this is plain
    /// Gauss-Hermite; otherwise the truncated line is cut at the kinks
    /// and each panel gets `order` Gauss-Legendre nodes.
    pub fn standard_normal(order: usize, kinks: &[f64]) -> Self {
        if kinks.is_empty() {
            return Self::hermite(order);
        }
        let mut cuts = vec![-TRUNCATION];
        let mut inner: Vec<f64> = kinks
            .iter()
            .copied()
            .filter(|k| k.abs() < TRUNCATION)
            .collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        cuts.extend(inner);
        cuts.push(TRUNCATION);

        let base = Self::legendre(order);
        let norm = (2.0 * PI).sqrt().recip();
        let mut rule = Self {
            nodes: Vec::with_capacity(order * (cuts.len() - 1)),
            weights: Vec::with_capacity(order * (cuts.len() - 1)),
        };
        for pair in cuts.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (b + a);
            for (&t, &w) in base.nodes.iter().zip(&base.weights) {
                let x = mid + half * t;
                rule.nodes.push(x);
                rule.weights.push(w * half * norm * (-0.5 * x * x).exp());
            }
        }
        rule
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

// Nodes are the eigenvalues of the symmetric Jacobi matrix, weights the
// squared first components of its normalized eigenvectors.
fn golub_welsch(diag: &[f64], offdiag: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i + 1 == j {
            offdiag[i]
        } else if j + 1 == i {
            offdiag[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}
