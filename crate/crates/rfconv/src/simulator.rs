//! Finite-size Monte Carlo for random features regression.
//!
//! An instance draws covariates and first-layer weights uniformly on the
//! sphere of radius `sqrt(d)`, a linear target on the sphere of radius
//! `F1` and Gaussian label noise. Population risk uses the surrogate
//! `Uc = mu1^2 Q + mustar^2 I` and `v = (mu1 / sqrt(d)) Theta beta`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fixedpoint::QVec;
use crate::model::ModelParams;

const RANK_RATIO: f64 = 1e-10;
const DEFINITENESS_MARGIN: f64 = 1e-8;
const SPECTRUM_MARGIN: f64 = 1e-12;

/// Problem dimensions: covariate dimension, features, samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub d: usize,
    pub n_features: usize,
    pub n_samples: usize,
}

impl Dims {
    pub fn new(d: usize, n_features: usize, n_samples: usize) -> Result<Self> {
        if d == 0 || n_features == 0 || n_samples == 0 {
            return Err(Error::InvalidParams(format!(
                "dimensions must be positive, got d = {d}, N = {n_features}, n = {n_samples}"
            )));
        }
        Ok(Self {
            d,
            n_features,
            n_samples,
        })
    }

    /// Dimensions nearest to the aspect ratios of `params` at covariate dimension `d`.
    pub fn from_ratios(d: usize, params: &ModelParams) -> Result<Self> {
        let round = |r: f64| (r * d as f64).round().max(1.0) as usize;
        Self::new(d, round(params.psi1), round(params.psi2))
    }

    /// Realized `N / d`.
    pub fn psi1(&self) -> f64 {
        self.n_features as f64 / self.d as f64
    }

    /// Realized `n / d`.
    pub fn psi2(&self) -> f64 {
        self.n_samples as f64 / self.d as f64
    }
}

/// One finite-size draw with its derived matrices.
#[derive(Debug, Clone)]
pub struct SimInstance {
    pub dims: Dims,
    pub seed: u64,
    pub params: ModelParams,
    /// `n x d`, rows of norm `sqrt(d)`.
    pub x: DMatrix<f64>,
    /// `N x d`, rows of norm `sqrt(d)`.
    pub theta: DMatrix<f64>,
    /// Norm `F1`.
    pub beta: DVector<f64>,
    pub eps: DVector<f64>,
    /// `n x N`, centered features scaled by `1 / sqrt(d)`.
    pub z: DMatrix<f64>,
    /// `Theta Theta^T / d`.
    pub q: DMatrix<f64>,
    /// `X X^T / d`.
    pub h: DMatrix<f64>,
    pub y: DVector<f64>,
    pub uc: DMatrix<f64>,
    pub v: DVector<f64>,
    pub ey2: f64,
    cache: InstanceCache,
}

#[derive(Debug, Clone, Default)]
struct InstanceCache {
    uniform: OnceLock<SymmetricEigen<f64, nalgebra::Dyn>>,
    gram: OnceLock<SymmetricEigen<f64, nalgebra::Dyn>>,
    projected_q_top: OnceLock<f64>,
}

fn sphere_rows(rng: &mut ChaCha20Rng, rows: usize, cols: usize, radius: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        let row = sphere_vector(rng, cols, radius);
        m.row_mut(i).copy_from(&row.transpose());
    }
    m
}

fn sphere_vector(rng: &mut ChaCha20Rng, dim: usize, radius: f64) -> DVector<f64> {
    loop {
        let g = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = g.norm();
        if norm > 0.0 {
            return g * (radius / norm);
        }
    }
}

/// Draw an instance. Everything is a deterministic function of `seed`:
/// the draws happen in the order `X`, `Theta`, `beta`, `eps`.
pub fn sample_instance(dims: Dims, params: &ModelParams, seed: u64) -> Result<SimInstance> {
    params.validate()?;
    let Dims {
        d,
        n_features,
        n_samples,
    } = dims;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let root_d = (d as f64).sqrt();
    let x = sphere_rows(&mut rng, n_samples, d, root_d);
    let theta = sphere_rows(&mut rng, n_features, d, root_d);
    let beta = sphere_vector(&mut rng, d, params.f1_sq.sqrt());
    let tau = params.tau_sq.sqrt();
    let eps = DVector::from_fn(n_samples, |_, _| tau * rng.sample::<f64, _>(StandardNormal));

    let profile = params.profile;
    let pre = &x * theta.transpose() / root_d;
    let z = pre.map(|t| profile.eval_centered(t) / root_d);
    let q = &theta * theta.transpose() / d as f64;
    let h = &x * x.transpose() / d as f64;
    let y = &x * &beta + &eps;
    let uc = &q * params.mu1_sq() + DMatrix::identity(n_features, n_features) * params.mustar_sq();
    let v = (&theta * &beta) * (profile.mu1 / root_d);
    Ok(SimInstance {
        dims,
        seed,
        params: *params,
        x,
        theta,
        beta,
        eps,
        z,
        q,
        h,
        y,
        uc,
        v,
        ey2: params.f1_sq + params.tau_sq,
        cache: InstanceCache::default(),
    })
}

/// Penalized maximizer of the uniform-convergence gap.
#[derive(Debug, Clone)]
pub struct UniformSolution {
    pub a: DVector<f64>,
    /// `R - Rhat - psi1 lambda ||a||^2`.
    pub objective: f64,
    /// `R - Rhat`.
    pub gap: f64,
    /// `||M a - vbar|| / ||vbar||`.
    pub stationarity: f64,
}

/// Penalized maximizer of the risk over interpolators.
#[derive(Debug, Clone)]
pub struct InterpolatorSolution {
    pub a: DVector<f64>,
    pub mu: DVector<f64>,
    /// `R - psi1 lambda ||a||^2`.
    pub objective: f64,
    pub risk: f64,
    /// `||Z a - y / sqrt(d)|| / ||y / sqrt(d)||`.
    pub feasibility: f64,
    /// Relative residual of the first KKT block row.
    pub stationarity: f64,
}

impl SimInstance {
    pub fn psi1(&self) -> f64 {
        self.dims.psi1()
    }

    pub fn psi2(&self) -> f64 {
        self.dims.psi2()
    }

    /// Normalized squared norm `psi1 ||a||^2 = (N / d) ||a||^2`.
    pub fn scaled_norm_sq(&self, a: &DVector<f64>) -> f64 {
        self.psi1() * a.norm_squared()
    }

    fn target(&self) -> DVector<f64> {
        &self.y / (self.dims.d as f64).sqrt()
    }

    /// Population risk (through `Uc`) and empirical risk of `a`.
    pub fn risks(&self, a: &DVector<f64>) -> (f64, f64) {
        let pop = a.dot(&(&self.uc * a)) - 2.0 * a.dot(&self.v) + self.ey2;
        let resid = &self.z * a - self.target();
        let emp = resid.norm_squared() * self.dims.d as f64 / self.dims.n_samples as f64;
        (pop, emp)
    }

    fn gram(&self) -> &SymmetricEigen<f64, nalgebra::Dyn> {
        self.cache
            .gram
            .get_or_init(|| SymmetricEigen::new(&self.z * self.z.transpose()))
    }

    fn check_rank(&self) -> Result<()> {
        let ev = &self.gram().eigenvalues;
        let max = ev.max();
        let min = ev.min();
        let ratio = if max > 0.0 {
            (min.max(0.0) / max).sqrt()
        } else {
            0.0
        };
        if ratio < RANK_RATIO {
            return Err(Error::RankDeficient { ratio });
        }
        Ok(())
    }

    // (Z Z^T)^{-1} b through the cached eigendecomposition.
    fn gram_solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let eig = self.gram();
        let mut c = eig.eigenvectors.transpose() * b;
        c.iter_mut()
            .zip(eig.eigenvalues.iter())
            .for_each(|(ci, e)| *ci /= e);
        &eig.eigenvectors * c
    }

    /// Least-norm solution of `Z a = y / sqrt(d)`.
    pub fn min_norm_interpolator(&self) -> Result<DVector<f64>> {
        if self.dims.n_features <= self.dims.n_samples {
            return Err(Error::RequiresOverparam {
                psi1: self.psi1(),
                psi2: self.psi2(),
            });
        }
        self.check_rank()?;
        Ok(self.z.transpose() * self.gram_solve(&self.target()))
    }

    /// Component of `a` in the null space of `Z`.
    pub fn null_component(&self, a: &DVector<f64>) -> DVector<f64> {
        a - self.z.transpose() * self.gram_solve(&(&self.z * a))
    }

    fn uniform_eigen(&self) -> &SymmetricEigen<f64, nalgebra::Dyn> {
        self.cache.uniform.get_or_init(|| {
            let m = &self.uc - self.z.transpose() * &self.z / self.psi2();
            SymmetricEigen::new(m)
        })
    }

    fn vbar(&self) -> DVector<f64> {
        &self.v - self.z.transpose() * &self.y / ((self.dims.d as f64).sqrt() * self.psi2())
    }

    /// `Uc - Z^T Z / psi2 - psi1 lambda I`.
    pub fn uniform_matrix(&self, lambda: f64) -> DMatrix<f64> {
        let n = self.dims.n_features;
        &self.uc
            - self.z.transpose() * &self.z / self.psi2()
            - DMatrix::identity(n, n) * (self.psi1() * lambda)
    }

    /// Objective `R - Rhat - psi1 lambda ||a||^2` at any `a`.
    pub fn uniform_objective(&self, a: &DVector<f64>, lambda: f64) -> f64 {
        let (r, rhat) = self.risks(a);
        r - rhat - self.psi1() * lambda * a.norm_squared()
    }

    /// Maximizer `Mbar^{-1} vbar` of the penalized gap.
    pub fn maximizer_u(&self, lambda: f64) -> Result<UniformSolution> {
        let eig = self.uniform_eigen();
        let shift = self.psi1() * lambda;
        let top = eig.eigenvalues.max() - shift;
        if top > -DEFINITENESS_MARGIN {
            return Err(Error::NotNegativeDefinite {
                lambda,
                top_eigenvalue: top,
            });
        }
        let vbar = self.vbar();
        let mut c = eig.eigenvectors.transpose() * &vbar;
        c.iter_mut()
            .zip(eig.eigenvalues.iter())
            .for_each(|(ci, e)| *ci /= e - shift);
        let a = &eig.eigenvectors * c;
        let resid = self.uniform_matrix(lambda) * &a - &vbar;
        let scale = vbar.norm();
        let (r, rhat) = self.risks(&a);
        Ok(UniformSolution {
            objective: r - rhat - shift * a.norm_squared(),
            gap: r - rhat,
            stationarity: if scale > 0.0 {
                resid.norm() / scale
            } else {
                resid.norm()
            },
            a,
        })
    }

    /// Largest eigenvalue of `P Q P` with `P` the projector onto `null(Z)`.
    pub fn projected_q_top(&self) -> f64 {
        *self.cache.projected_q_top.get_or_init(|| {
            let n = self.dims.n_features;
            let zt_inv = {
                let eig = self.gram();
                let scaled = &eig.eigenvectors
                    * DMatrix::from_diagonal(&eig.eigenvalues.map(|e| 1.0 / e))
                    * eig.eigenvectors.transpose();
                self.z.transpose() * scaled
            };
            let p = DMatrix::identity(n, n) - zt_inv * &self.z;
            let pqp = &p * &self.q * &p;
            let sym = (&pqp + pqp.transpose()) * 0.5;
            SymmetricEigen::new(sym).eigenvalues.max()
        })
    }

    /// Objective `R - psi1 lambda ||a||^2`.
    pub fn interpolator_objective(&self, a: &DVector<f64>, lambda: f64) -> f64 {
        self.risks(a).0 - self.psi1() * lambda * a.norm_squared()
    }

    /// Solve the KKT system `[Uc - psi1 lambda I, Z^T; Z, 0] [a; mu] = [v; y / sqrt(d)]`.
    pub fn maximizer_t(&self, lambda: f64) -> Result<InterpolatorSolution> {
        let (nf, ns) = (self.dims.n_features, self.dims.n_samples);
        if nf <= ns {
            return Err(Error::RequiresOverparam {
                psi1: self.psi1(),
                psi2: self.psi2(),
            });
        }
        self.check_rank()?;
        let shift = self.psi1() * lambda;
        let top = self.params.mu1_sq() * self.projected_q_top() + self.params.mustar_sq() - shift;
        if top > -DEFINITENESS_MARGIN {
            return Err(Error::NotNegativeDefinite {
                lambda,
                top_eigenvalue: top,
            });
        }
        let size = nf + ns;
        let mut k = DMatrix::zeros(size, size);
        k.view_mut((0, 0), (nf, nf))
            .copy_from(&(&self.uc - DMatrix::identity(nf, nf) * shift));
        k.view_mut((0, nf), (nf, ns)).copy_from(&self.z.transpose());
        k.view_mut((nf, 0), (ns, nf)).copy_from(&self.z);
        let mut rhs = DVector::zeros(size);
        rhs.rows_mut(0, nf).copy_from(&self.v);
        let target = self.target();
        rhs.rows_mut(nf, ns).copy_from(&target);

        let lu = k.clone().lu();
        let mut sol = lu.solve(&rhs).ok_or(Error::SingularKkt { lambda })?;
        let resid = &rhs - &k * &sol;
        if let Some(corr) = lu.solve(&resid) {
            sol += corr;
        }
        if !sol.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularKkt { lambda });
        }
        let a = sol.rows(0, nf).into_owned();
        let mu = sol.rows(nf, ns).into_owned();
        let row1 = (&self.uc - DMatrix::identity(nf, nf) * shift) * &a + self.z.transpose() * &mu
            - &self.v;
        let feas = &self.z * &a - &target;
        let risk = self.risks(&a).0;
        Ok(InterpolatorSolution {
            objective: risk - shift * a.norm_squared(),
            risk,
            feasibility: feas.norm() / target.norm().max(f64::MIN_POSITIVE),
            stationarity: row1.norm() / self.v.norm().max(1.0),
            a,
            mu,
        })
    }

    /// Block matrix `[[s1 I + s2 Q, (Z + p Z1)^T], [Z + p Z1, t1 I + t2 H]]`
    /// with `Z1 = mu1 X Theta^T / d`.
    pub fn block_matrix(&self, q: &QVec) -> DMatrix<f64> {
        let (nf, ns) = (self.dims.n_features, self.dims.n_samples);
        let d = self.dims.d as f64;
        let z1 = &self.x * self.theta.transpose() * (self.params.profile.mu1 / d);
        let off = &self.z + z1 * q.p;
        let mut a = DMatrix::zeros(nf + ns, nf + ns);
        a.view_mut((0, 0), (nf, nf))
            .copy_from(&(DMatrix::identity(nf, nf) * q.s1 + &self.q * q.s2));
        a.view_mut((0, nf), (nf, ns)).copy_from(&off.transpose());
        a.view_mut((nf, 0), (ns, nf)).copy_from(&off);
        a.view_mut((nf, nf), (ns, ns))
            .copy_from(&(DMatrix::identity(ns, ns) * q.t1 + &self.h * q.t2));
        a
    }

    /// `G_d(xi; q) = (1/d) sum_i Log(lambda_i(A(q)) - xi)`, principal branch.
    pub fn empirical_log_det(&self, q: &QVec, xi: Complex64) -> Result<Complex64> {
        let ev = self.block_matrix(q).symmetric_eigenvalues();
        let distance = ev
            .iter()
            .map(|&l| (Complex64::new(l, 0.0) - xi).norm())
            .fold(f64::INFINITY, f64::min);
        if distance < SPECTRUM_MARGIN {
            return Err(Error::SpectrumHit { distance });
        }
        let sum: Complex64 = ev.iter().map(|&l| (Complex64::new(l, 0.0) - xi).ln()).sum();
        Ok(sum / self.dims.d as f64)
    }
}

/// Mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(count)`.
    pub stderr: f64,
}

impl MeanSe {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n;
        let stderr = if xs.len() < 2 {
            f64::NAN
        } else {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        };
        Self { mean, stderr }
    }
}

/// Aggregated `(psi1 ||a||^2, objective)` pairs over replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateStats {
    pub norm_sq: MeanSe,
    pub value: MeanSe,
    pub count: usize,
}

impl ReplicateStats {
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let v: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        Self {
            norm_sq: MeanSe::from_samples(&a),
            value: MeanSe::from_samples(&v),
            count: pairs.len(),
        }
    }
}

/// What a replicate row measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimFamily {
    /// Penalized uniform-convergence maximizer; value is `R - Rhat`.
    Uniform,
    /// Penalized interpolator maximizer; value is `R`.
    Interpolator,
    /// Min-norm interpolator; value is `R`.
    MinNorm,
}

impl SimFamily {
    pub fn label(self) -> &'static str {
        match self {
            Self::Uniform => "U",
            Self::Interpolator => "T",
            Self::MinNorm => "min-norm",
        }
    }
}

/// One measured `(family, lambda, replicate)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRow {
    pub family: SimFamily,
    /// `NaN` for the min-norm rows.
    pub lambda: f64,
    pub replicate: usize,
    pub seed: u64,
    pub norm_sq: f64,
    pub value: f64,
    /// Set when the cell was skipped, for example outside the empirical admissible region.
    pub skipped: Option<String>,
}

/// Worst-case optimality diagnostics over every solved cell.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OptimalityReport {
    pub max_u_stationarity: f64,
    pub max_t_stationarity: f64,
    pub max_t_feasibility: f64,
    pub max_min_norm_null: f64,
    pub max_min_norm_rhat: f64,
    /// Cells with `||a_T|| < ||a_min||` beyond roundoff.
    pub norm_order_violations: usize,
}

impl OptimalityReport {
    fn merge(self, o: Self) -> Self {
        Self {
            max_u_stationarity: self.max_u_stationarity.max(o.max_u_stationarity),
            max_t_stationarity: self.max_t_stationarity.max(o.max_t_stationarity),
            max_t_feasibility: self.max_t_feasibility.max(o.max_t_feasibility),
            max_min_norm_null: self.max_min_norm_null.max(o.max_min_norm_null),
            max_min_norm_rhat: self.max_min_norm_rhat.max(o.max_min_norm_rhat),
            norm_order_violations: self.norm_order_violations + o.norm_order_violations,
        }
    }
}

/// Settings for [`replicate_run`].
#[derive(Debug, Clone)]
pub struct ReplicatePlan {
    pub dims: Dims,
    pub params: ModelParams,
    pub lambdas_u: Vec<f64>,
    pub lambdas_t: Vec<f64>,
    pub replicates: usize,
    pub base_seed: u64,
}

/// Output of a replicate sweep. Stats are ordered like the lambda grids.
#[derive(Debug, Clone)]
pub struct ReplicateRun {
    pub rows: Vec<ReplicateRow>,
    pub uniform: Vec<Result<ReplicateStats>>,
    pub interpolator: Vec<Result<ReplicateStats>>,
    pub min_norm: Result<ReplicateStats>,
    pub report: OptimalityReport,
}

fn run_one(plan: &ReplicatePlan, k: usize) -> Result<(Vec<ReplicateRow>, OptimalityReport)> {
    let seed = plan.base_seed.wrapping_add(k as u64);
    let inst = sample_instance(plan.dims, &plan.params, seed)?;
    let mut rows = Vec::with_capacity(plan.lambdas_u.len() + plan.lambdas_t.len() + 1);
    let mut report = OptimalityReport::default();
    let row = |family, lambda, res: Result<(f64, f64)>| match res {
        Ok((norm_sq, value)) => ReplicateRow {
            family,
            lambda,
            replicate: k,
            seed,
            norm_sq,
            value,
            skipped: None,
        },
        Err(e) => ReplicateRow {
            family,
            lambda,
            replicate: k,
            seed,
            norm_sq: f64::NAN,
            value: f64::NAN,
            skipped: Some(e.to_string()),
        },
    };

    let interpolating = plan.dims.n_features > plan.dims.n_samples;
    let a_min = if interpolating {
        Some(inst.min_norm_interpolator()?)
    } else {
        None
    };
    if let Some(a) = &a_min {
        let (r, rhat) = inst.risks(a);
        report.max_min_norm_null = inst.null_component(a).norm() / a.norm().max(f64::MIN_POSITIVE);
        report.max_min_norm_rhat = rhat;
        rows.push(row(
            SimFamily::MinNorm,
            f64::NAN,
            Ok((inst.scaled_norm_sq(a), r)),
        ));
    }
    for &lambda in &plan.lambdas_u {
        let res = inst.maximizer_u(lambda).map(|s| {
            report.max_u_stationarity = report.max_u_stationarity.max(s.stationarity);
            (inst.scaled_norm_sq(&s.a), s.gap)
        });
        rows.push(row(SimFamily::Uniform, lambda, res));
    }
    for &lambda in &plan.lambdas_t {
        let res = inst.maximizer_t(lambda).map(|s| {
            report.max_t_stationarity = report.max_t_stationarity.max(s.stationarity);
            report.max_t_feasibility = report.max_t_feasibility.max(s.feasibility);
            if let Some(a) = &a_min {
                if s.a.norm_squared() < a.norm_squared() * (1.0 - 1e-12) {
                    report.norm_order_violations += 1;
                }
            }
            (inst.scaled_norm_sq(&s.a), s.risk)
        });
        rows.push(row(SimFamily::Interpolator, lambda, res));
    }
    Ok((rows, report))
}

/// Run `replicates` instances with seeds `base_seed + k` in parallel and
/// aggregate per lambda. Cells that fail (for example an indefinite
/// penalized problem) are recorded as skipped rows, not errors.
pub fn replicate_run(plan: &ReplicatePlan) -> Result<ReplicateRun> {
    if plan.replicates < 2 {
        return Err(Error::InvalidParams(format!(
            "need at least 2 replicates, got {}",
            plan.replicates
        )));
    }
    let per: Vec<(Vec<ReplicateRow>, OptimalityReport)> = (0..plan.replicates)
        .into_par_iter()
        .map(|k| run_one(plan, k))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut report = OptimalityReport::default();
    for (r, rep) in per {
        rows.extend(r);
        report = report.merge(rep);
    }

    let aggregate = |family: SimFamily, lambda: f64| -> Result<ReplicateStats> {
        let pairs: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.family == family && r.skipped.is_none())
            .filter(|r| family == SimFamily::MinNorm || r.lambda == lambda)
            .map(|r| (r.norm_sq, r.value))
            .collect();
        if pairs.is_empty() {
            return Err(Error::AllReplicatesInfeasible { lambda });
        }
        Ok(ReplicateStats::from_pairs(&pairs))
    };
    let uniform = plan
        .lambdas_u
        .iter()
        .map(|&l| aggregate(SimFamily::Uniform, l))
        .collect();
    let interpolator = plan
        .lambdas_t
        .iter()
        .map(|&l| aggregate(SimFamily::Interpolator, l))
        .collect();
    let min_norm = aggregate(SimFamily::MinNorm, f64::NAN);
    Ok(ReplicateRun {
        rows,
        uniform,
        interpolator,
        min_norm,
        report,
    })
}
