//! Coupled Stieltjes-transform fixed points.
//!
//! Every family handled here is an instance of one map
//!
//! ```text
//! m1 = psi1 / (-xi + s1 - ms*m2 + ((1 + t2 m2) s2 - k m2) / D)
//! m2 = psi2 / (-xi + t1 - ms*m1 + ((1 + s2 m1) t2 - k m1) / D)
//! D  = (1 + s2 m1)(1 + t2 m2) - k m1 m2,   k = m1s (1 + p)^2
//! ```
//!
//! with `(m1s, ms) = (mu1^2, mustar^2)`. The penalized families use the
//! rescaled units `mustar^2 = 1`, `mu1^2 = zeta`, where `m1` is
//! `mustar^2` times the unscaled transform and `m2` is unchanged.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ModelParams;

pub type C64 = Complex64;

const DENOMINATOR_FLOOR: f64 = 1e-14;
const LOG_FLOOR: f64 = 1e-14;

/// The five-parameter perturbation `q = (s1, s2, t1, t2, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QVec {
    pub s1: f64,
    pub s2: f64,
    pub t1: f64,
    pub t2: f64,
    pub p: f64,
}

impl QVec {
    pub const ZERO: Self = Self {
        s1: 0.0,
        s2: 0.0,
        t1: 0.0,
        t2: 0.0,
        p: 0.0,
    };

    pub fn new(s1: f64, s2: f64, t1: f64, t2: f64, p: f64) -> Self {
        Self { s1, s2, t1, t2, p }
    }

    /// Perturbation whose log-determinant derivatives give the penalized
    /// uniform-convergence objective at unscaled `lambda`.
    pub fn uniform(lambda: f64, params: &ModelParams) -> Self {
        Self::new(
            params.mustar_sq() - lambda * params.psi1,
            params.mu1_sq(),
            params.psi2,
            0.0,
            0.0,
        )
    }

    /// Same as [`QVec::uniform`] for the interpolator-restricted problem.
    pub fn interpolating(lambda: f64, params: &ModelParams) -> Self {
        Self {
            t1: 0.0,
            ..Self::uniform(lambda, params)
        }
    }

    /// Membership in the domain `|s2 t2| <= mu1^2 (1 + p)^2 / 2`.
    pub fn in_domain(&self, mu1_sq: f64) -> bool {
        (self.s2 * self.t2).abs() <= 0.5 * mu1_sq * (1.0 + self.p).powi(2)
    }
}

/// Which system of equations to solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EquationFamily {
    /// General perturbation in unscaled units.
    GeneralQ(QVec),
    /// Penalized sup over the norm ball, at rescaled `lambda_bar = lambda / mustar^2`.
    Ubar { lambda_bar: f64 },
    /// Penalized sup over interpolators.
    Tbar { lambda_bar: f64 },
    /// The (nu1, nu2) system behind the min-norm interpolator risk.
    RiskNu,
}

impl EquationFamily {
    pub fn validate(&self, mu1_sq: f64) -> Result<()> {
        match *self {
            Self::GeneralQ(q) if !q.in_domain(mu1_sq) => Err(Error::InvalidParams(format!(
                "q = {q:?} violates |s2 t2| <= mu1^2 (1 + p)^2 / 2"
            ))),
            Self::Ubar { lambda_bar } | Self::Tbar { lambda_bar }
                if !(lambda_bar.is_finite() && lambda_bar > 0.0) =>
            {
                Err(Error::InvalidParams(format!(
                    "lambda_bar = {lambda_bar} must be positive"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// How the squared ratio enters the `(nu1, nu2)` equations.
///
/// `Effective` uses `zeta_eff^2 = mu1^2 / mustar^2`, which is the general
/// map at `q = 0` in rescaled units. `Literal` squares the ratio once more
/// and is kept only for auditing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZetaConvention {
    #[default]
    Effective,
    Literal,
}

/// A fully resolved instance of the fixed-point map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointSystem {
    pub q: QVec,
    pub psi1: f64,
    pub psi2: f64,
    pub mu1_sq: f64,
    pub mustar_sq: f64,
}

struct Terms {
    n1: C64,
    n2: C64,
    d: C64,
    b1: C64,
    b2: C64,
    k: f64,
}

impl FixedPointSystem {
    pub fn new(family: EquationFamily, params: &ModelParams, zeta: ZetaConvention) -> Result<Self> {
        family.validate(params.mu1_sq())?;
        let rescaled = |q: QVec, mu1_sq: f64| Self {
            q,
            psi1: params.psi1,
            psi2: params.psi2,
            mu1_sq,
            mustar_sq: 1.0,
        };
        let z = params.zeta();
        Ok(match family {
            EquationFamily::GeneralQ(q) => Self {
                q,
                psi1: params.psi1,
                psi2: params.psi2,
                mu1_sq: params.mu1_sq(),
                mustar_sq: params.mustar_sq(),
            },
            EquationFamily::Ubar { lambda_bar } => rescaled(
                QVec::new(1.0 - lambda_bar * params.psi1, z, params.psi2, 0.0, 0.0),
                z,
            ),
            EquationFamily::Tbar { lambda_bar } => rescaled(
                QVec::new(1.0 - lambda_bar * params.psi1, z, 0.0, 0.0, 0.0),
                z,
            ),
            EquationFamily::RiskNu => {
                let zeff_sq = match zeta {
                    ZetaConvention::Effective => z,
                    ZetaConvention::Literal => z * z,
                };
                rescaled(QVec::ZERO, zeff_sq)
            }
        })
    }

    fn terms(&self, m: [C64; 2], xi: C64) -> Result<Terms> {
        let QVec { s1, s2, t1, t2, p } = self.q;
        let k = self.mu1_sq * (1.0 + p) * (1.0 + p);
        let [m1, m2] = m;
        let n1 = (1.0 + t2 * m2) * s2 - k * m2;
        let n2 = (1.0 + s2 * m1) * t2 - k * m1;
        let d = (1.0 + s2 * m1) * (1.0 + t2 * m2) - k * m1 * m2;
        if d.norm() < DENOMINATOR_FLOOR {
            return Err(Error::SingularDenominator {
                magnitude: d.norm(),
            });
        }
        let b1 = -xi + s1 - self.mustar_sq * m2 + n1 / d;
        let b2 = -xi + t1 - self.mustar_sq * m1 + n2 / d;
        let smallest = b1.norm().min(b2.norm());
        if smallest < DENOMINATOR_FLOOR {
            return Err(Error::SingularDenominator {
                magnitude: smallest,
            });
        }
        Ok(Terms {
            n1,
            n2,
            d,
            b1,
            b2,
            k,
        })
    }

    /// Right-hand side of the fixed-point equations.
    pub fn rhs(&self, m: [C64; 2], xi: C64) -> Result<[C64; 2]> {
        let t = self.terms(m, xi)?;
        Ok([self.psi1 / t.b1, self.psi2 / t.b2])
    }

    /// Jacobian of [`FixedPointSystem::rhs`] with respect to `(m1, m2)`.
    pub fn rhs_jacobian(&self, m: [C64; 2], xi: C64) -> Result<[[C64; 2]; 2]> {
        let t = self.terms(m, xi)?;
        let QVec { s2, t2, .. } = self.q;
        let d2 = t.d * t.d;
        let cross = -self.mustar_sq + ((s2 * t2 - t.k) * t.d - t.n1 * t.n2) / d2;
        let db1 = [-t.n1 * t.n1 / d2, cross];
        let db2 = [cross, -t.n2 * t.n2 / d2];
        let g1 = -self.psi1 / (t.b1 * t.b1);
        let g2 = -self.psi2 / (t.b2 * t.b2);
        Ok([[g1 * db1[0], g1 * db1[1]], [g2 * db2[0], g2 * db2[1]]])
    }

    /// Defect `m - rhs(m)`.
    pub fn defect(&self, m: [C64; 2], xi: C64) -> Result<[C64; 2]> {
        let f = self.rhs(m, xi)?;
        Ok([m[0] - f[0], m[1] - f[1]])
    }

    /// Largest component defect, relative to `|m_i|`. Components can be
    /// many orders of magnitude apart, so an absolute floor would hide
    /// errors in the small one.
    pub fn residual(&self, m: [C64; 2], xi: C64) -> Result<f64> {
        let g = self.defect(m, xi)?;
        Ok(scaled_max(g, m))
    }

    /// Newton iteration on the defect. Returns the root and its residual,
    /// or `None` when the iteration diverges or leaves the finite domain.
    /// A root whose Newton step has shrunk to roundoff is accepted even if
    /// its residual sits slightly above `tol`.
    pub fn newton(
        &self,
        m0: [C64; 2],
        xi: C64,
        tol: f64,
        max_iters: usize,
    ) -> Option<([C64; 2], f64)> {
        let mut m = m0;
        for _ in 0..=max_iters {
            let f = self.rhs(m, xi).ok()?;
            let g = [m[0] - f[0], m[1] - f[1]];
            let res = scaled_max(g, m);
            if !res.is_finite() {
                return None;
            }
            if res < tol {
                return Some((m, res));
            }
            let j = self.rhs_jacobian(m, xi).ok()?;
            let a = [[j[0][0] - 1.0, j[0][1]], [j[1][0], j[1][1] - 1.0]];
            let step = solve2(a, [-g[0], -g[1]])?;
            // Ill-conditioned roots can stall just above `tol` at roundoff level.
            if res < STALL_RESIDUAL && scaled_max(step, m) <= STALL_STEP {
                return Some((m, res));
            }
            m = [m[0] - step[0], m[1] - step[1]];
        }
        None
    }

    /// The log-determinant functional `Xi(xi, z1, z2; q; psi)`, principal logs.
    pub fn xi_functional(&self, xi: C64, z: [C64; 2]) -> Result<C64> {
        let QVec { s1, s2, t1, t2, p } = self.q;
        let k = self.mu1_sq * (1.0 + p) * (1.0 + p);
        let [z1, z2] = z;
        let det = (s2 * z1 + 1.0) * (t2 * z2 + 1.0) - k * z1 * z2;
        let r1 = z1 / self.psi1;
        let r2 = z2 / self.psi2;
        let smallest = det.norm().min(r1.norm()).min(r2.norm());
        if smallest < LOG_FLOOR {
            return Err(Error::BranchCutHit {
                magnitude: smallest,
            });
        }
        Ok(det.ln() - self.mustar_sq * z1 * z2 + s1 * z1 + t1 * z2
            - self.psi1 * r1.ln()
            - self.psi2 * r2.ln()
            - xi * (z1 + z2)
            - self.psi1
            - self.psi2)
    }

    /// Gradient of `Xi` in `(z1, z2)`; it vanishes exactly at fixed points.
    pub fn xi_gradient(&self, xi: C64, z: [C64; 2]) -> Result<[C64; 2]> {
        let t = self.terms(z, xi)?;
        Ok([t.b1 - self.psi1 / z[0], t.b2 - self.psi2 / z[1]])
    }

    /// Hessian of `Xi` in `(z1, z2)`.
    pub fn xi_hessian(&self, xi: C64, z: [C64; 2]) -> Result<[[C64; 2]; 2]> {
        let t = self.terms(z, xi)?;
        let QVec { s2, t2, .. } = self.q;
        let d2 = t.d * t.d;
        let cross = -self.mustar_sq + ((s2 * t2 - t.k) * t.d - t.n1 * t.n2) / d2;
        Ok([
            [-t.n1 * t.n1 / d2 + self.psi1 / (z[0] * z[0]), cross],
            [cross, -t.n2 * t.n2 / d2 + self.psi2 / (z[1] * z[1])],
        ])
    }

    /// Stationary point of `Xi` found by Newton on its gradient, independent
    /// of the fixed-point iteration.
    pub fn xi_stationary_point(&self, xi: C64, start: [C64; 2], tol: f64) -> Option<[C64; 2]> {
        let mut z = start;
        for _ in 0..100 {
            let g = self.xi_gradient(xi, z).ok()?;
            let h = self.xi_hessian(xi, z).ok()?;
            let step = solve2(h, g)?;
            z = [z[0] - step[0], z[1] - step[1]];
            if scaled_max(step, z) < tol {
                return Some(z);
            }
        }
        None
    }
}

const STALL_RESIDUAL: f64 = 1e-9;
const STALL_STEP: f64 = 1e-15;

fn scaled_max(v: [C64; 2], m: [C64; 2]) -> f64 {
    (v[0].norm() / m[0].norm().max(f64::MIN_POSITIVE))
        .max(v[1].norm() / m[1].norm().max(f64::MIN_POSITIVE))
}

fn solve2(a: [[C64; 2]; 2], b: [C64; 2]) -> Option<[C64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    // Compare against the cancelling products so row and column scaling
    // do not matter.
    let scale = (a[0][0] * a[1][1]).norm() + (a[0][1] * a[1][0]).norm();
    if !(det.norm() > 1e-300 && det.norm() > 1e-14 * scale) {
        return None;
    }
    let x = [
        (b[0] * a[1][1] - b[1] * a[0][1]) / det,
        (a[0][0] * b[1] - a[1][0] * b[0]) / det,
    ];
    (x[0].is_finite() && x[1].is_finite()).then_some(x)
}

/// A solved (or partially solved) fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointState {
    pub xi: C64,
    pub m1: C64,
    pub m2: C64,
    pub residual: f64,
    pub family: EquationFamily,
}

impl FixedPointState {
    pub fn m(&self) -> [C64; 2] {
        [self.m1, self.m2]
    }

    /// Starting state `(0, 0)` at spectral parameter `xi`.
    pub fn origin(xi: C64, family: EquationFamily) -> Self {
        Self {
            xi,
            m1: C64::new(0.0, 0.0),
            m2: C64::new(0.0, 0.0),
            residual: f64::INFINITY,
            family,
        }
    }
}

/// Result of continuing a fixed point along `xi = iu` down to `u -> 0+`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroLimit {
    /// Terminal state. When `real_limit` holds it sits at `xi = 0` after a
    /// real Newton polish, otherwise at the smallest `u` reached.
    pub state: FixedPointState,
    /// `true` when the limit is real and was polished at `xi = 0`.
    pub real_limit: bool,
    /// Last states of the continuation, in decreasing `u`.
    pub tail: Vec<FixedPointState>,
    /// Relative gap between the states at the two smallest `u`.
    pub cauchy_gap: f64,
}

/// Tuning knobs for the homotopy solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub damping: f64,
    pub max_iters: usize,
    /// Minimum number of geometric nodes on the homotopy path.
    pub nodes: usize,
    /// Start of the path, in units of `max(1, psi1, psi2)`.
    pub u_start: f64,
    /// Smallest `u` visited by [`FixedPointSolver::solve_at_zero`].
    pub u_end: f64,
    pub tol: f64,
    pub cauchy_tol: f64,
    pub zeta: ZetaConvention,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            max_iters: 10_000,
            nodes: 40,
            u_start: 1e3,
            u_end: 1e-8,
            tol: 1e-13,
            cauchy_tol: 1e-6,
            zeta: ZetaConvention::Effective,
        }
    }
}

const NEWTON_ITERS: usize = 60;
const MAX_SUBDIVISIONS: usize = 40;
const U_FLOOR: f64 = 1e-16;

/// Homotopy solver for the fixed-point families.
#[derive(Debug, Clone, Copy, Default)]
pub struct FixedPointSolver {
    pub opts: SolverOptions,
}

impl FixedPointSolver {
    pub fn new(opts: SolverOptions) -> Self {
        Self { opts }
    }

    pub fn system(&self, family: EquationFamily, params: &ModelParams) -> Result<FixedPointSystem> {
        FixedPointSystem::new(family, params, self.opts.zeta)
    }

    /// One damped sweep `m <- (1 - damping) m + damping rhs(m)`.
    pub fn iterate_once(
        &self,
        state: &FixedPointState,
        params: &ModelParams,
        damping: f64,
    ) -> Result<FixedPointState> {
        let sys = self.system(state.family, params)?;
        let f = sys.rhs(state.m(), state.xi)?;
        let m1 = (1.0 - damping) * state.m1 + damping * f[0];
        let m2 = (1.0 - damping) * state.m2 + damping * f[1];
        let residual = sys.residual([m1, m2], state.xi)?;
        Ok(FixedPointState {
            m1,
            m2,
            residual,
            ..*state
        })
    }

    /// Solve at `xi` (with `Im xi > 0`) by continuation from a large
    /// imaginary part, where the solution is close to `psi / (-xi)`.
    pub fn solve_at(
        &self,
        xi: C64,
        family: EquationFamily,
        params: &ModelParams,
    ) -> Result<FixedPointState> {
        if !(xi.im > 0.0) {
            return Err(Error::InvalidParams(format!(
                "solve_at needs Im(xi) > 0, got {xi}"
            )));
        }
        let sys = self.system(family, params)?;
        let path = self.path(&sys, xi.im);
        let mut tail = Vec::new();
        let m = self.follow(&sys, xi.re, &path, &mut tail)?;
        Ok(self.state(&sys, m, xi, family))
    }

    /// Continue along `xi = iu` down to `u_end`, check that the tail is
    /// Cauchy, then polish at `xi = 0` when the limit is real.
    pub fn solve_at_zero(&self, family: EquationFamily, params: &ModelParams) -> Result<ZeroLimit> {
        let sys = self.system(family, params)?;
        let mut path = self.path(&sys, self.opts.u_end);
        path.push(0.5 * self.opts.u_end);
        let mut tail = Vec::new();
        self.follow(&sys, 0.0, &path, &mut tail)?;
        let gap = |tail: &[(f64, [C64; 2])]| {
            let (_, a) = tail[tail.len() - 2];
            let (_, b) = tail[tail.len() - 1];
            match family {
                EquationFamily::RiskNu => {
                    (a[0] * a[1] - b[0] * b[1]).norm() / (b[0] * b[1]).norm().max(1.0)
                }
                _ => scaled_max([a[0] - b[0], a[1] - b[1]], b),
            }
        };
        // Problems with small inner denominators converge more slowly in u;
        // keep descending a decade at a time until the tail settles.
        let mut cauchy_gap = gap(&tail);
        let mut u = tail[tail.len() - 1].0;
        while !(cauchy_gap <= self.opts.cauchy_tol) && u > U_FLOOR {
            u *= 0.1;
            self.follow(&sys, 0.0, &[2.0 * u, u], &mut tail)?;
            cauchy_gap = gap(&tail);
        }
        if !(cauchy_gap <= self.opts.cauchy_tol) {
            return Err(Error::BranchInstability { gap: cauchy_gap });
        }
        let states: Vec<FixedPointState> = tail
            .iter()
            .map(|&(u, m)| self.state(&sys, m, C64::new(0.0, u), family))
            .collect();
        let last = states[states.len() - 1];

        let mut out = ZeroLimit {
            state: last,
            real_limit: false,
            tail: states,
            cauchy_gap,
        };
        if family != EquationFamily::RiskNu {
            if let Some(polished) = self.polish_real(&sys, last.m()) {
                out.state = self.state(&sys, polished, C64::new(0.0, 0.0), family);
                out.real_limit = true;
            }
        }
        Ok(out)
    }

    /// Real Newton solve at `xi = 0` started from the real part of `m`.
    /// Accepted only if `m` is nearly real and the polish barely moves it.
    pub fn polish_real(&self, sys: &FixedPointSystem, m: [C64; 2]) -> Option<[C64; 2]> {
        let near_real = m.iter().all(|z| z.im.abs() <= 1e-4 * z.norm());
        if !near_real {
            return None;
        }
        let start = [C64::new(m[0].re, 0.0), C64::new(m[1].re, 0.0)];
        let (root, _) = sys.newton(start, C64::new(0.0, 0.0), self.opts.tol, NEWTON_ITERS)?;
        let moved = scaled_max([root[0] - m[0], root[1] - m[1]], root);
        (moved <= 1e-5).then_some(root)
    }

    fn state(
        &self,
        sys: &FixedPointSystem,
        m: [C64; 2],
        xi: C64,
        family: EquationFamily,
    ) -> FixedPointState {
        let residual = sys.residual(m, xi).unwrap_or(f64::INFINITY);
        FixedPointState {
            xi,
            m1: m[0],
            m2: m[1],
            residual,
            family,
        }
    }

    fn path(&self, sys: &FixedPointSystem, u_last: f64) -> Vec<f64> {
        let u0 = self.opts.u_start * sys.psi1.max(sys.psi2).max(1.0);
        if u_last >= u0 {
            return vec![u_last];
        }
        let decades = (u0 / u_last).log10();
        let count = self.opts.nodes.max((4.0 * decades).ceil() as usize).max(2);
        let ratio = (u_last / u0).powf(1.0 / (count - 1) as f64);
        let mut path: Vec<f64> = (0..count).map(|i| u0 * ratio.powi(i as i32)).collect();
        path[count - 1] = u_last;
        path
    }

    // Walk the nodes of `path`, halving a step geometrically whenever a node
    // fails. Records every accepted (u, m) in `tail` and resumes from its
    // last entry when it is not empty.
    fn follow(
        &self,
        sys: &FixedPointSystem,
        re: f64,
        path: &[f64],
        tail: &mut Vec<(f64, [C64; 2])>,
    ) -> Result<[C64; 2]> {
        // Resume from the last recorded node, or start at the asymptote.
        let (mut u, mut m) = match tail.last() {
            Some(&(u, m)) => (u, m),
            None => {
                let xi0 = C64::new(re, path[0]);
                (f64::INFINITY, [sys.psi1 / -xi0, sys.psi2 / -xi0])
            }
        };
        for &target in path {
            let mut pending = vec![target];
            let mut splits = 0;
            while let Some(&next) = pending.last() {
                match self.node(sys, m, C64::new(re, next)) {
                    Ok(found) => {
                        m = found;
                        u = next;
                        tail.push((u, m));
                        pending.pop();
                    }
                    Err(e) => {
                        splits += 1;
                        if splits > MAX_SUBDIVISIONS || !u.is_finite() {
                            return Err(e);
                        }
                        pending.push((u * next).sqrt());
                    }
                }
            }
        }
        if tail.len() > 8 {
            tail.drain(..tail.len() - 8);
        }
        Ok(m)
    }

    // Newton from the warm start first; fall back to damped iteration.
    fn node(&self, sys: &FixedPointSystem, warm: [C64; 2], xi: C64) -> Result<[C64; 2]> {
        if let Some((m, _)) = sys.newton(warm, xi, self.opts.tol, NEWTON_ITERS) {
            if acceptable(m, warm, xi) {
                return Ok(m);
            }
        }
        let mut m = warm;
        let mut residual = f64::INFINITY;
        for _ in 0..self.opts.max_iters {
            let f = sys.rhs(m, xi)?;
            let d = self.opts.damping;
            m = [(1.0 - d) * m[0] + d * f[0], (1.0 - d) * m[1] + d * f[1]];
            residual = sys.residual(m, xi)?;
            if residual < 1e-6 {
                if let Some((root, _)) = sys.newton(m, xi, self.opts.tol, NEWTON_ITERS) {
                    if acceptable(root, warm, xi) {
                        return Ok(root);
                    }
                }
            }
            if residual < self.opts.tol && acceptable(m, warm, xi) {
                return Ok(m);
            }
        }
        Err(Error::NoConvergence {
            iters: self.opts.max_iters,
            residual,
        })
    }
}

// Herglotz sign and a bound on how far one node may move the solution.
fn acceptable(m: [C64; 2], warm: [C64; 2], xi: C64) -> bool {
    let herglotz = xi.im <= 0.0 || m.iter().all(|z| z.im >= -1e-10 * z.norm());
    let bounded = (0..2).all(|i| (m[i] - warm[i]).norm() <= 3.0 * warm[i].norm());
    herglotz && bounded && m.iter().all(|z| z.is_finite())
}

/// Limiting log-determinant `g(xi; q; psi)`, i.e. `Xi` at the fixed point.
pub fn log_det_limit(xi: C64, family: EquationFamily, params: &ModelParams) -> Result<C64> {
    let solver = FixedPointSolver::default();
    let state = solver.solve_at(xi, family, params)?;
    solver.system(family, params)?.xi_functional(xi, state.m())
}
