//! Closed-form asymptotics: penalized values, norm levels, dual bounds,
//! the min-norm interpolator and the kernel-regime limit.
//!
//! The penalized families are continued in `kappa = lambda_bar * psi1`
//! on the real solution at `xi = 0`. The continuation starts far inside
//! the admissible region and walks toward small `lambda`; the admissible
//! boundary shows up as a fold of the real branch, where the norm level
//! diverges.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fixedpoint::{
    EquationFamily, FixedPointSolver, FixedPointSystem, QVec, ZetaConvention, C64,
};
use crate::model::ModelParams;

/// Which constrained sup the dual formula refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Uniform convergence over the whole norm ball.
    U,
    /// Uniform convergence over interpolators in the ball.
    T,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Self::U => "U",
            Self::T => "T",
        }
    }

    fn equation(self, lambda_bar: f64) -> EquationFamily {
        match self {
            Self::U => EquationFamily::Ubar { lambda_bar },
            Self::T => EquationFamily::Tbar { lambda_bar },
        }
    }
}

/// Limits of the transforms and the derived ratios at one `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiRecord {
    pub m1: f64,
    pub m2: f64,
    pub chi1: f64,
    pub chi2: f64,
    pub chi3: f64,
    pub chi4: f64,
}

/// Penalized value and the matching norm level at one multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangianPoint {
    /// Unscaled multiplier.
    pub lambda: f64,
    /// `lambda / mustar^2`.
    pub lambda_bar: f64,
    /// Penalized sup (`Ubar` or `Tbar`).
    pub value: f64,
    /// Norm level `-d value / d lambda` (`A_U` or `A_T`).
    pub norm_sq: f64,
    pub chi: ChiRecord,
    pub family: Family,
}

impl LagrangianPoint {
    /// Constrained objective at the self-consistent level, `value + lambda * norm_sq`.
    pub fn objective(&self) -> f64 {
        self.value + self.lambda * self.norm_sq
    }
}

/// Starting point of every continuation, `kappa = 10 psi1 max(1, psi2)`.
pub fn anchor_kappa(params: &ModelParams) -> f64 {
    10.0 * params.psi1 * params.psi2.max(1.0)
}

const MAX_STEP: f64 = 0.3;
const MIN_STEP: f64 = 1e-13;
const JUMP: f64 = 0.5;
// Roundoff allowance on the monotonicity of the norm along the branch.
const NORM_SLACK: f64 = 1e-10;
const SLOPE_PROBE: f64 = 1e-6;
const CORRECTOR_RATIO: f64 = 0.5;
const ANCHOR_RETRIES: usize = 6;

/// Real solution branch of a penalized family, parameterized by `kappa`.
#[derive(Debug, Clone)]
pub struct LagrangianBranch {
    family: Family,
    params: ModelParams,
    kappa: f64,
    m: [f64; 2],
    det_sign: f64,
    solver: FixedPointSolver,
}

impl LagrangianBranch {
    /// Branch at the anchor, found by the `xi -> 0` homotopy.
    pub fn new(family: Family, params: &ModelParams) -> Result<Self> {
        // Small psi can push the boundary past the default anchor; move up until real.
        let mut kappa = anchor_kappa(params);
        let mut tries = 0;
        loop {
            match Self::at_kappa(family, params, kappa, FixedPointSolver::default()) {
                Err(Error::OutsideAdmissibleRegion { .. }) if tries < ANCHOR_RETRIES => {
                    kappa *= 10.0;
                    tries += 1;
                }
                other => return other,
            }
        }
    }

    /// Branch seeded at `kappa` by the `xi -> 0` homotopy. Only safe far
    /// from the admissible boundary.
    pub fn at_kappa(
        family: Family,
        params: &ModelParams,
        kappa: f64,
        solver: FixedPointSolver,
    ) -> Result<Self> {
        params.validate()?;
        let lambda_bar = kappa / params.psi1;
        let lambda = lambda_bar * params.mustar_sq();
        let limit = solver.solve_at_zero(family.equation(lambda_bar), params)?;
        if !limit.real_limit {
            return Err(Error::OutsideAdmissibleRegion { lambda });
        }
        let m = [limit.state.m1.re, limit.state.m2.re];
        let mut branch = Self {
            family,
            params: *params,
            kappa,
            m,
            det_sign: 0.0,
            solver,
        };
        branch.det_sign = branch
            .jacobian_det(kappa, m)
            .map(f64::signum)
            .ok_or(Error::OutsideAdmissibleRegion { lambda })?;
        Ok(branch)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn lambda_bar(&self) -> f64 {
        self.kappa / self.params.psi1
    }

    pub fn lambda(&self) -> f64 {
        self.lambda_bar() * self.params.mustar_sq()
    }

    /// `(m1, m2)` in rescaled units.
    pub fn m(&self) -> [f64; 2] {
        self.m
    }

    fn system(&self, kappa: f64) -> FixedPointSystem {
        let z = self.params.zeta();
        let t1 = match self.family {
            Family::U => self.params.psi2,
            Family::T => 0.0,
        };
        FixedPointSystem {
            q: QVec::new(1.0 - kappa, z, t1, 0.0, 0.0),
            psi1: self.params.psi1,
            psi2: self.params.psi2,
            mu1_sq: z,
            mustar_sq: 1.0,
        }
    }

    // Jacobian of the defect m - rhs(m), real at xi = 0.
    fn defect_jacobian(&self, kappa: f64, m: [f64; 2]) -> Option<[[f64; 2]; 2]> {
        let j = self
            .system(kappa)
            .rhs_jacobian(to_c(m), C64::new(0.0, 0.0))
            .ok()?;
        Some([
            [1.0 - j[0][0].re, -j[0][1].re],
            [-j[1][0].re, 1.0 - j[1][1].re],
        ])
    }

    fn jacobian_det(&self, kappa: f64, m: [f64; 2]) -> Option<f64> {
        let a = self.defect_jacobian(kappa, m)?;
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        (det.is_finite() && det != 0.0).then_some(det)
    }

    /// `dm / dkappa` by implicit differentiation of the fixed point.
    pub fn tangent(&self) -> Option<[f64; 2]> {
        self.tangent_at(self.kappa, self.m)
    }

    fn tangent_at(&self, kappa: f64, m: [f64; 2]) -> Option<[f64; 2]> {
        let a = self.defect_jacobian(kappa, m)?;
        // d(rhs_1)/d kappa = m1^2 / psi1 at the fixed point; rhs_2 has no kappa.
        let b = [m[0] * m[0] / self.params.psi1, 0.0];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if !(det.is_finite() && det != 0.0) {
            return None;
        }
        let x = [
            (b[0] * a[1][1] - b[1] * a[0][1]) / det,
            (a[0][0] * b[1] - a[1][0] * b[0]) / det,
        ];
        (x[0].is_finite() && x[1].is_finite()).then_some(x)
    }

    fn norm_at(&self, kappa: f64, m: [f64; 2]) -> Option<f64> {
        let t = self.tangent_at(kappa, m)?;
        let g = value_gradient(m, self.params.zeta(), self.params.f1_sq, self.params.tau_sq);
        Some(-(g[0] * t[0] + g[1] * t[1]) * self.params.psi1 / self.params.mustar_sq())
    }

    // A step is kept when the corrector lands near the predictor, the
    // determinant keeps its sign and the norm moves the right way: it can
    // only grow as kappa shrinks. Together these stop Newton from hopping
    // across a fold onto a neighbouring root.
    fn try_step(&self, next: f64) -> Option<([f64; 2], f64)> {
        let mut start = self.m;
        if let Some(t) = self.tangent() {
            let dk = next - self.kappa;
            start = [self.m[0] + t[0] * dk, self.m[1] + t[1] * dk];
        }
        let sys = self.system(next);
        let (root, _) = sys.newton(to_c(start), C64::new(0.0, 0.0), self.solver.opts.tol, 60)?;
        let m = [root[0].re, root[1].re];
        // The corrector must be a small fraction of the move itself.
        let close = (0..2).all(|i| {
            let moved = (m[i] - self.m[i]).abs();
            (m[i] - start[i]).abs() <= CORRECTOR_RATIO * moved + 1e-9 * m[i].abs()
                && moved <= JUMP * (m[i].abs().max(self.m[i].abs()))
        });
        let det = self.jacobian_det(next, m)?;
        if !close || det.signum() != self.det_sign {
            return None;
        }
        let a1 = self.norm_at(next, m)?;
        if let Some(a0) = self.norm_sq() {
            let slack = NORM_SLACK * a0.abs().max(a1.abs()) + f64::MIN_POSITIVE;
            let monotone = if next < self.kappa {
                a1 >= a0 - slack
            } else {
                a1 <= a0 + slack
            };
            if !monotone {
                return None;
            }
        }
        // A large step can land past the fold on a neighbouring root whose
        // norm still looks right; its slope in kappa has the wrong sign.
        let probe = next * (1.0 + SLOPE_PROBE);
        let t = self.tangent_at(next, m)?;
        let guess = [m[0] + t[0] * (probe - next), m[1] + t[1] * (probe - next)];
        let (pm, _) =
            self.system(probe)
                .newton(to_c(guess), C64::new(0.0, 0.0), self.solver.opts.tol, 60)?;
        let a2 = self.norm_at(probe, [pm[0].re, pm[1].re])?;
        if a2 > a1 + NORM_SLACK * a1.abs().max(a2.abs()) {
            return None;
        }
        Some((m, det))
    }

    /// Move along the branch to `target`, shrinking the step whenever
    /// Newton fails, jumps, or crosses onto the other sheet of a fold.
    pub fn advance_to(&mut self, target: f64) -> Result<()> {
        let mut step = MAX_STEP;
        while self.kappa != target {
            let down = target < self.kappa;
            let next = if down {
                target.max(self.kappa * (1.0 - step))
            } else {
                target.min(self.kappa * (1.0 + 3.0 * step))
            };
            match self.try_step(next) {
                Some((m, _)) => {
                    self.kappa = next;
                    self.m = m;
                    step = (step * 1.5).min(MAX_STEP);
                }
                None => {
                    step /= 3.0;
                    if step < MIN_STEP {
                        return Err(Error::OutsideAdmissibleRegion {
                            lambda: target / self.params.psi1 * self.params.mustar_sq(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Walk down until a step of relative size `MIN_STEP` fails and
    /// return the smallest admissible `kappa` reached.
    pub fn walk_to_boundary(&mut self) -> f64 {
        let mut step = MAX_STEP;
        while step >= MIN_STEP {
            let next = self.kappa * (1.0 - step);
            match self.try_step(next) {
                Some((m, _)) => {
                    self.kappa = next;
                    self.m = m;
                    step = (step * 1.5).min(MAX_STEP);
                }
                None => step /= 3.0,
            }
        }
        self.kappa
    }

    /// Penalized value at the current point.
    pub fn value(&self) -> f64 {
        penalized_value(
            self.m,
            self.params.zeta(),
            self.params.f1_sq,
            self.params.tau_sq,
        )
    }

    /// Norm level `-d value / d lambda` from the exact tangent.
    pub fn norm_sq(&self) -> Option<f64> {
        self.norm_at(self.kappa, self.m)
    }

    /// Central-difference norm level with relative step `h`, for checks.
    pub fn norm_sq_central(&self, h: f64) -> Option<f64> {
        let dk = h * self.kappa;
        let mut plus = self.clone();
        let mut minus = self.clone();
        plus.advance_to(self.kappa + dk).ok()?;
        minus.advance_to(self.kappa - dk).ok()?;
        let dv = (plus.value() - minus.value()) / (2.0 * dk);
        Some(-dv * self.params.psi1 / self.params.mustar_sq())
    }

    pub fn chi(&self) -> ChiRecord {
        chi_record(
            self.m,
            self.params.zeta(),
            self.params.psi1,
            self.params.psi2,
            self.lambda_bar(),
        )
    }

    pub fn point(&self) -> Result<LagrangianPoint> {
        let norm_sq = self.norm_sq().ok_or(Error::OutsideAdmissibleRegion {
            lambda: self.lambda(),
        })?;
        if !(norm_sq >= 0.0) {
            return Err(Error::OutsideAdmissibleRegion {
                lambda: self.lambda(),
            });
        }
        Ok(LagrangianPoint {
            lambda: self.lambda(),
            lambda_bar: self.lambda_bar(),
            value: self.value(),
            norm_sq,
            chi: self.chi(),
            family: self.family,
        })
    }
}

fn to_c(m: [f64; 2]) -> [C64; 2] {
    [C64::new(m[0], 0.0), C64::new(m[1], 0.0)]
}

/// `-(m2 - 1)(tau^2 chi1 + F1^2) / chi1`, shared by both families.
pub fn penalized_value(m: [f64; 2], zeta: f64, f1_sq: f64, tau_sq: f64) -> f64 {
    let chi1 = 1.0 + zeta * m[0] - zeta * m[0] * m[1];
    (1.0 - m[1]) * (f1_sq / chi1 + tau_sq)
}

fn value_gradient(m: [f64; 2], zeta: f64, f1_sq: f64, tau_sq: f64) -> [f64; 2] {
    let [m1, m2] = m;
    let chi1 = 1.0 + zeta * m1 - zeta * m1 * m2;
    let c2 = chi1 * chi1;
    let d1 = -(1.0 - m2) * f1_sq * zeta * (1.0 - m2) / c2;
    let d2 = -(f1_sq / chi1 + tau_sq) + (1.0 - m2) * f1_sq * zeta * m1 / c2;
    [d1, d2]
}

fn chi_record(m: [f64; 2], zeta: f64, psi1: f64, psi2: f64, lambda_bar: f64) -> ChiRecord {
    let [m1, m2] = m;
    let chi1 = m1 * zeta - m1 * m2 * zeta + 1.0;
    ChiRecord {
        m1,
        m2,
        chi1,
        chi2: m1 - psi2 + m1 * zeta / chi1,
        chi3: lambda_bar * psi1 + m2 - 1.0 + zeta * (m2 - 1.0) / chi1,
        chi4: m1 + m1 * zeta / chi1,
    }
}

fn branch_to(family: Family, lambda_bar: f64, params: &ModelParams) -> Result<LagrangianBranch> {
    if family == Family::T && !params.is_overparameterized() {
        return Err(Error::RequiresOverparam {
            psi1: params.psi1,
            psi2: params.psi2,
        });
    }
    if !(lambda_bar.is_finite() && lambda_bar > 0.0) {
        return Err(Error::InvalidParams(format!(
            "lambda_bar = {lambda_bar} must be positive"
        )));
    }
    let kappa = lambda_bar * params.psi1;
    let anchor = anchor_kappa(params);
    if kappa >= anchor {
        return LagrangianBranch::at_kappa(family, params, kappa, FixedPointSolver::default());
    }
    let mut branch = LagrangianBranch::new(family, params)?;
    branch.advance_to(kappa)?;
    Ok(branch)
}

/// Penalized uniform-convergence value and `A_U` at `lambda_bar`.
pub fn ubar_point(lambda_bar: f64, params: &ModelParams) -> Result<LagrangianPoint> {
    branch_to(Family::U, lambda_bar, params)?.point()
}

/// Penalized interpolator value and `A_T` at `lambda_bar`. Needs `psi1 > psi2`.
pub fn tbar_point(lambda_bar: f64, params: &ModelParams) -> Result<LagrangianPoint> {
    branch_to(Family::T, lambda_bar, params)?.point()
}

pub fn lagrangian_point(
    family: Family,
    lambda_bar: f64,
    params: &ModelParams,
) -> Result<LagrangianPoint> {
    branch_to(family, lambda_bar, params)?.point()
}

/// Points over a grid of `lambda_bar`, sharing one continuation. Entries
/// below the admissible boundary come back as errors.
pub fn lagrangian_curve(
    family: Family,
    lambda_bars: &[f64],
    params: &ModelParams,
) -> Vec<Result<LagrangianPoint>> {
    let mut order: Vec<usize> = (0..lambda_bars.len()).collect();
    order.sort_by(|&a, &b| lambda_bars[b].total_cmp(&lambda_bars[a]));
    let mut out: Vec<Option<Result<LagrangianPoint>>> = vec![None; lambda_bars.len()];
    let mut branch: Option<LagrangianBranch> = None;
    let mut blocked: Option<Error> = None;
    for idx in order {
        let lb = lambda_bars[idx];
        let res = if let Some(e) = &blocked {
            Err(match e {
                Error::OutsideAdmissibleRegion { .. } => Error::OutsideAdmissibleRegion {
                    lambda: lb * params.mustar_sq(),
                },
                other => other.clone(),
            })
        } else {
            let kappa = lb * params.psi1;
            let step = match branch.as_mut() {
                Some(b) if kappa < b.kappa() => b.advance_to(kappa).map(|_| b.clone()),
                _ => branch_to(family, lb, params),
            };
            match step {
                Ok(b) => {
                    let p = b.point();
                    branch = Some(b);
                    p
                }
                Err(e) => {
                    blocked = Some(e.clone());
                    Err(e)
                }
            }
        };
        out[idx] = Some(res);
    }
    out.into_iter()
        .map(|r| r.expect("every index visited"))
        .collect()
}

/// Smallest admissible `lambda` found by walking the branch to its fold.
pub fn admissible_boundary(family: Family, params: &ModelParams) -> Result<f64> {
    if family == Family::T && !params.is_overparameterized() {
        return Err(Error::RequiresOverparam {
            psi1: params.psi1,
            psi2: params.psi2,
        });
    }
    let mut branch = LagrangianBranch::new(family, params)?;
    let kappa = branch.walk_to_boundary();
    Ok(kappa / params.psi1 * params.mustar_sq())
}

/// Candidate rational closed forms for the norm level, evaluated beside
/// the derivative definition.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalCandidate {
    pub label: &'static str,
    pub value: f64,
    /// `|value - norm_sq| / max(1, |norm_sq|)`.
    pub rel_diff: f64,
}

/// Evaluate the printed rational norm formulas (and the plausible variants
/// of their term pairing) at `point`, for comparison with `norm_sq`.
pub fn rational_norm_candidates(
    point: &LagrangianPoint,
    params: &ModelParams,
) -> Vec<RationalCandidate> {
    let c = point.chi;
    let (m1, m2) = (c.m1, c.m2);
    let (p1, p2) = (params.psi1, params.psi2);
    let z = params.zeta();
    let (f, t) = (params.f1_sq, params.tau_sq);
    let ms = params.mustar_sq();
    let (x1, x2, x3, x4) = (c.chi1, c.chi2, c.chi3, c.chi4);

    let mut out = Vec::new();
    let mut push = |label: &'static str, v: f64| {
        out.push(RationalCandidate {
            label,
            value: v,
            rel_diff: (v - point.norm_sq).abs() / point.norm_sq.abs().max(1.0),
        });
    };
    match point.family {
        Family::U => {
            let e1 = p1 * p1 * (p2 * x1.powi(4) + p2 * x1 * x1 * z);
            let e2 = p1
                * p1
                * (x1 * x1 * x2 * x2 * m2 * m2 * z - 2.0 * x1 * x1 * x2 * x2 * m2 * z
                    + x1 * x1 * x2 * x2 * z
                    + p2 * x1 * x1
                    - p2 * m1 * m1 * m2 * m2 * z.powi(3)
                    + 2.0 * p2 * m1 * m1 * m2 * z.powi(3)
                    - p2 * m1 * m1 * z.powi(3)
                    + p2 * z);
            let e3 = -x1.powi(4) * x2 * x2 * x3 * x3
                + p1 * p2 * x1.powi(4)
                + p1 * x1 * x1 * x2 * x2 * m2 * m2 * z * z
                - 2.0 * p1 * x1 * x1 * x2 * x2 * m2 * z * z
                + p1 * x1 * x1 * x2 * x2 * z * z
                + p2 * x1 * x1 * x3 * x3 * m1 * m1 * z * z
                + 2.0 * p1 * p2 * x1 * x1 * z
                - p1 * p2 * m1 * m1 * m2 * m2 * z.powi(4)
                + 2.0 * p1 * p2 * m1 * m1 * m2 * z.powi(4)
                - p1 * p2 * m1 * m1 * z.powi(4)
                + p1 * p2 * z * z;
            push("(tau2*E1+F1*E1)/E2", (t * e1 + f * e1) / e2);
            push("(tau2*E1+F1*E3)/E2", (t * e1 + f * e3) / e2);
            push("(tau2*E3+F1*E1)/E2", (t * e3 + f * e1) / e2);
            push(
                "(tau2*E1+F1*E1)/(mustar2*E2)",
                (t * e1 + f * e1) / (ms * e2),
            );
            push(
                "(tau2*E1+F1*E3)/(mustar2*E2)",
                (t * e1 + f * e3) / (ms * e2),
            );
            push(
                "(tau2*E3+F1*E1)/(mustar2*E2)",
                (t * e3 + f * e1) / (ms * e2),
            );
        }
        Family::T => {
            let z2 = z * z;
            let z3 = z2 * z;
            let z4 = z3 * z;
            let z5 = z4 * z;
            let e4 = p1
                * (p2 * x1.powi(4) * x4.powi(3) + x1.powi(4) * x4 * x4 * m1.powi(3) * m2 * m2 * z3
                    - 2.0 * x1.powi(4) * x4 * x4 * m1.powi(3) * m2 * z3
                    + x1.powi(4) * x4 * x4 * m1.powi(3) * z3
                    + 2.0 * x1.powi(3) * x4 * x4 * m1.powi(3) * m2 * m2 * z2
                    - 4.0 * x1.powi(3) * x4 * x4 * m1.powi(3) * m2 * z2
                    + 2.0 * x1.powi(3) * x4 * x4 * m1.powi(3) * z2
                    - p2 * x1.powi(3) * x4 * x4 * m1 * z
                    + x1 * x1 * x4 * x4 * m1.powi(3) * m2 * m2 * z
                    - 2.0 * x1 * x1 * x4 * x4 * m1.powi(3) * m2 * z
                    + x1 * x1 * x4 * x4 * m1.powi(3) * z
                    + p2 * x1 * x1 * x4 * x4 * m1 * z
                    - p2 * x1 * x1 * m1.powi(5) * m2 * m2 * z5
                    + 2.0 * p2 * x1 * x1 * m1.powi(5) * m2 * z5
                    - p2 * x1 * x1 * m1.powi(5) * z5
                    - 2.0 * p2 * x1 * m1.powi(5) * m2 * m2 * z4
                    + 4.0 * p2 * x1 * m1.powi(5) * m2 * z4
                    - 2.0 * p2 * x1 * m1.powi(5) * z4
                    - p2 * m1.powi(5) * m2 * m2 * z3
                    + 2.0 * p2 * m1.powi(5) * m2 * z3
                    - p2 * m1.powi(5) * z3);
            let lead = z + 1.0 + m1 * z - m1 * m2 * z;
            let e5 = m1
                * lead
                * lead
                * (-x1.powi(4) * x3 * x3 * x4 * x4 * m1 * m1 + p1 * p2 * x1.powi(4) * x4 * x4
                    - 2.0 * p1 * p2 * x1.powi(3) * x4 * m1 * z
                    + p2 * x1 * x1 * x3 * x3 * m1.powi(4) * z2
                    + p1 * x1 * x1 * x4 * x4 * m1 * m1 * m2 * m2 * z2
                    - 2.0 * p1 * x1 * x1 * x4 * x4 * m1 * m1 * m2 * z2
                    + p1 * x1 * x1 * x4 * x4 * m1 * m1 * z2
                    + 2.0 * p1 * p2 * x1 * x1 * x4 * m1 * z
                    + p1 * p2 * x1 * x1 * m1 * m1 * z2
                    - 2.0 * p1 * p2 * x1 * m1 * m1 * z2
                    - p1 * p2 * m1.powi(4) * m2 * m2 * z4
                    + 2.0 * p1 * p2 * m1.powi(4) * m2 * z4
                    - p1 * p2 * m1.powi(4) * z4
                    + p1 * p2 * m1 * m1 * z2);
            let e6 = x1
                * x1
                * x4
                * x4
                * p1
                * p2
                * (x4 * x1 * x1 - m1 * x1 * z + m1 * z)
                * (m1 * z - m1 * m2 * z + 1.0).powi(2);
            push("-psi1*(F1*E4+tau2*E6)/E5", -p1 * (f * e4 + t * e6) / e5);
            push(
                "-psi1*(F1*E4+tau2*E6)/(mustar2*E5)",
                -p1 * (f * e4 + t * e6) / (ms * e5),
            );
            push("(F1*E4+tau2*E6)/E5", (f * e4 + t * e6) / e5);
        }
    }
    out
}

/// Risk and norm of the minimum-norm interpolator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinNormPoint {
    pub risk: f64,
    /// `psi1 * ||a_min||^2` in the limit.
    pub norm_sq: f64,
    /// `lim nu1 nu2` as `u -> 0+`.
    pub chi: f64,
}

/// Closed-form `u -> 0+` limit of `nu1 nu2`: the negative root of
/// `z c^2 - (1 + z - psi z) c - psi = 0` with `psi = min(psi1, psi2)`.
pub fn chi_limit(zeff_sq: f64, psi1: f64, psi2: f64) -> f64 {
    let psi = psi1.min(psi2);
    let z = zeff_sq;
    if z == 0.0 {
        return -psi;
    }
    let b = 1.0 + z - psi * z;
    let disc = (b * b + 4.0 * z * psi).sqrt();
    // Rationalized form of (b - disc) / (2z), stable when z is small.
    -2.0 * psi / (b + disc)
}

/// Asymptotic risk and norm of the min-norm interpolator.
pub fn risk_min_norm(params: &ModelParams) -> Result<MinNormPoint> {
    risk_min_norm_with(params, &FixedPointSolver::default())
}

pub fn risk_min_norm_with(params: &ModelParams, solver: &FixedPointSolver) -> Result<MinNormPoint> {
    params.validate()?;
    let z = match solver.opts.zeta {
        ZetaConvention::Effective => params.zeta(),
        ZetaConvention::Literal => params.zeta() * params.zeta(),
    };
    let limit = solver.solve_at_zero(EquationFamily::RiskNu, params)?;
    let traced = (limit.state.m1 * limit.state.m2).re;
    let exact = chi_limit(z, params.psi1, params.psi2);
    let gap = (traced - exact).abs() / exact.abs().max(1.0);
    if gap > 1e-6 {
        return Err(Error::BranchInstability { gap });
    }
    let c = exact;
    let (p1, p2) = (params.psi1, params.psi2);
    let (z1, z2, z3) = (z, z * z, z * z * z);
    let e0 = -c.powi(5) * z3 + 3.0 * c.powi(4) * z2 + (p1 * p2 - p2 - p1 + 1.0) * c.powi(3) * z3
        - 2.0 * c.powi(3) * z2
        - 3.0 * c.powi(3) * z1
        + (p1 + p2 - 3.0 * p1 * p2 + 1.0) * c * c * z2
        + 2.0 * c * c * z1
        + c * c
        + 3.0 * p1 * p2 * c * z1
        - p1 * p2;
    let e1 = p2 * c.powi(3) * z2 - p2 * c * c * z1 + p1 * p2 * c * z1 - p1 * p2;
    let e2 = c.powi(5) * z3 - 3.0 * c.powi(4) * z2
        + (p1 - 1.0) * c.powi(3) * z3
        + 2.0 * c.powi(3) * z2
        + 3.0 * c.powi(3) * z1
        + (-p1 - 1.0) * c * c * z2
        - 2.0 * c * c * z1
        - c * c;
    if e0 == 0.0 || !e0.is_finite() {
        return Err(Error::OutsideAdmissibleRegion { lambda: 0.0 });
    }
    let (f, t) = (params.f1_sq, params.tau_sq);
    let risk = f * e1 / e0 + t * e2 / e0 + t;
    // (F1^2 + tau^2) times the rho-weighted bracket, written without rho so
    // that tau^2 = 0 needs no limit.
    let signal = -c * c * (c * z2 - c * z1 + p2 * z1 + z1 - c * p2 * z2 + 1.0);
    let noise = c * c * (c * z1 - 1.0) * (c * c * z2 - 2.0 * c * z1 + z1 + 1.0);
    let norm_sq = p1 * (f * signal + t * noise) / (params.mustar_sq() * e0);
    Ok(MinNormPoint {
        risk,
        norm_sq,
        chi: c,
    })
}

/// Dual bound at one norm level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualPoint {
    /// Squared-radius level `A`.
    pub level: f64,
    /// `inf_lambda [value(lambda) + lambda A]`.
    pub bound: f64,
    /// Attaining multiplier (unscaled).
    pub lambda: f64,
    /// Penalized value at the attaining multiplier.
    pub value: f64,
    /// Whether the bound also sits below the dual objective at `lambda (1 +- 1e-3)`.
    pub envelope_ok: bool,
}

/// Dual conversion of a penalized family into its constrained bound.
#[derive(Debug, Clone)]
pub struct DualCurve {
    pub family: Family,
    pub points: Vec<DualPoint>,
    pub params: ModelParams,
}

const UPWARD_LIMIT: f64 = 1e12;

/// `inf_lambda [value(lambda) + lambda A]` for the given family.
pub fn dual_value(family: Family, level: f64, params: &ModelParams) -> Result<DualPoint> {
    if family == Family::T && !params.is_overparameterized() {
        return Err(Error::RequiresOverparam {
            psi1: params.psi1,
            psi2: params.psi2,
        });
    }
    if !(level.is_finite() && level > 0.0) {
        return Err(Error::InvalidParams(format!(
            "norm level {level} must be positive"
        )));
    }
    let out_of_range = |reached: f64| Error::NormLevelOutOfRange { level, reached };
    let norm = |b: &LagrangianBranch| b.norm_sq().ok_or_else(|| out_of_range(f64::NAN));

    let mut hi = LagrangianBranch::new(family, params)?;
    let mut a_hi = norm(&hi)?;

    // Levels below the anchor's norm need larger lambda.
    let mut lo_kappa = None;
    if a_hi >= level {
        let start = hi.kappa();
        loop {
            let previous = hi.clone();
            let target = hi.kappa() * 4.0;
            if target > start * UPWARD_LIMIT {
                return Err(out_of_range(a_hi));
            }
            hi.advance_to(target).map_err(|_| out_of_range(a_hi))?;
            a_hi = norm(&hi)?;
            if a_hi < level {
                lo_kappa = Some(previous.kappa());
                break;
            }
        }
    }

    let lo_kappa = match lo_kappa {
        Some(k) => k,
        None => {
            // Walk toward the fold until the level is crossed.
            let mut step = MAX_STEP;
            loop {
                let next = hi.kappa() * (1.0 - step);
                match hi.try_step(next) {
                    Some((m, _)) => {
                        let mut cand = hi.clone();
                        cand.kappa = next;
                        cand.m = m;
                        let a = norm(&cand)?;
                        if a >= level {
                            break next;
                        }
                        hi = cand;
                        a_hi = a;
                        step = (step * 1.5).min(MAX_STEP);
                    }
                    None => {
                        step /= 3.0;
                        if step < MIN_STEP {
                            return Err(out_of_range(a_hi));
                        }
                    }
                }
            }
        }
    };

    // Bisection on kappa between lo (level reached) and hi (not reached).
    let mut lo = lo_kappa;
    for _ in 0..200 {
        if (hi.kappa() - lo) <= 1e-14 * hi.kappa() {
            break;
        }
        let mid = 0.5 * (lo + hi.kappa());
        let mut cand = hi.clone();
        match cand.advance_to(mid).ok().and_then(|_| cand.norm_sq()) {
            Some(a) if a < level => hi = cand,
            _ => lo = mid,
        }
    }

    let lambda = hi.lambda();
    let value = hi.value();
    let bound = value + lambda * level;
    let envelope_ok = [1.0 + 1e-3, 1.0 - 1e-3].iter().all(|&f| {
        let mut probe = hi.clone();
        match probe.advance_to(hi.kappa() * f) {
            Ok(()) => probe.value() + probe.lambda() * level >= bound - 1e-9 * bound.abs().max(1.0),
            // Beyond the boundary the penalized sup is infinite.
            Err(_) => true,
        }
    });
    Ok(DualPoint {
        level,
        bound,
        lambda,
        value,
        envelope_ok,
    })
}

pub fn dual_curve(family: Family, levels: &[f64], params: &ModelParams) -> Result<DualCurve> {
    let points = levels
        .iter()
        .map(|&a| dual_value(family, a, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(DualCurve {
        family,
        points,
        params: *params,
    })
}

/// Dual bound at `alpha` times the min-norm interpolator's norm.
pub fn alpha_curve(family: Family, alpha: f64, params: &ModelParams) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidParams(format!(
            "alpha = {alpha} must exceed 1"
        )));
    }
    let base = risk_min_norm(params)?;
    Ok(dual_value(family, alpha * base.norm_sq, params)?.bound)
}

/// Quantities tracked in the `psi1 -> infinity` limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelQuantity {
    UbarAlpha,
    TbarAlpha,
    Risk,
    Norm,
    /// Uniform bound at a fixed norm level.
    UbarLevel(f64),
}

/// Extrapolated `psi1 -> infinity` value from a `c0 + c1 / psi1` fit.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelLimit {
    pub value: f64,
    pub slope: f64,
    /// Largest fit residual relative to `max |y|`.
    pub rel_residual: f64,
    pub psi1: Vec<f64>,
    pub samples: Vec<f64>,
}

/// Default `psi1` grid for the limit at a given `psi2`.
///
/// The leading correction is of order `psi2^2 / psi1` relative to the
/// smallest quantities, so the grid starts at `1e3 max(1, psi2)^2`.
pub fn default_kernel_grid(psi2: f64) -> Vec<f64> {
    let base = 1e3 * psi2.max(1.0).powi(2);
    (0..4).map(|k| base * 10f64.powi(k)).collect()
}

/// Evaluate one quantity at finite `psi1`.
pub fn finite_width_value(
    quantity: KernelQuantity,
    alpha: f64,
    params: &ModelParams,
) -> Result<f64> {
    match quantity {
        KernelQuantity::Risk => Ok(risk_min_norm(params)?.risk),
        KernelQuantity::Norm => Ok(risk_min_norm(params)?.norm_sq),
        KernelQuantity::UbarAlpha => alpha_curve(Family::U, alpha, params),
        KernelQuantity::TbarAlpha => alpha_curve(Family::T, alpha, params),
        KernelQuantity::UbarLevel(level) => Ok(dual_value(Family::U, level, params)?.bound),
    }
}

/// Least-squares `c0 + c1 / psi1` extrapolation over `psi1_grid`.
pub fn extrapolate_inverse(psi1: &[f64], y: &[f64]) -> Result<KernelLimit> {
    if psi1.len() < 2 || psi1.len() != y.len() {
        return Err(Error::InsufficientPoints {
            needed: 2,
            found: psi1.len().min(y.len()),
        });
    }
    let n = psi1.len() as f64;
    let x: Vec<f64> = psi1.iter().map(|p| 1.0 / p).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mx) * (xi - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let c1 = sxy / sxx;
    let c0 = my - c1 * mx;
    let scale = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let worst = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (c0 + c1 * xi - yi).abs())
        .fold(0.0, f64::max);
    Ok(KernelLimit {
        value: c0,
        slope: c1,
        rel_residual: if scale > 0.0 { worst / scale } else { 0.0 },
        psi1: psi1.to_vec(),
        samples: y.to_vec(),
    })
}

const EXTRAPOLATION_TOL: f64 = 1e-3;

/// Kernel-regime limit of `quantity` at `psi2`, on the default grid.
pub fn kernel_limit(
    quantity: KernelQuantity,
    psi2: f64,
    alpha: f64,
    params_base: &ModelParams,
) -> Result<KernelLimit> {
    kernel_limit_on(
        quantity,
        psi2,
        alpha,
        params_base,
        &default_kernel_grid(psi2),
    )
}

pub fn kernel_limit_on(
    quantity: KernelQuantity,
    psi2: f64,
    alpha: f64,
    params_base: &ModelParams,
    psi1_grid: &[f64],
) -> Result<KernelLimit> {
    let samples = psi1_grid
        .iter()
        .map(|&p1| finite_width_value(quantity, alpha, &params_base.with_psi(p1, psi2)))
        .collect::<Result<Vec<_>>>()?;
    let fit = extrapolate_inverse(psi1_grid, &samples)?;
    if fit.rel_residual > EXTRAPOLATION_TOL {
        return Err(Error::ExtrapolationUnstable {
            residual: fit.rel_residual,
        });
    }
    Ok(fit)
}

/// Complex helper for callers that want `Xi` at the penalized solution.
pub fn penalized_log_det(
    family: Family,
    lambda_bar: f64,
    params: &ModelParams,
) -> Result<Complex64> {
    let branch = branch_to(family, lambda_bar, params)?;
    let sys = branch.system(branch.kappa());
    sys.xi_functional(C64::new(0.0, 0.0), to_c(branch.m()))
}
