use std::path::PathBuf;

use rayon::prelude::*;
use rfconv::analysis::{self, compare_theory_sim, theory_curve, Comparison, TheoryPoint};
use rfconv::asymptotics::{
    self, finite_width_value, lagrangian_curve, rational_norm_candidates, Family, KernelQuantity,
};
use rfconv::fixedpoint::{log_det_limit, EquationFamily, FixedPointSolver, QVec, C64};
use rfconv::simulator::{self, Dims, ReplicatePlan, ReplicateRun, ReplicateStats};
use rfconv::ModelParams;

use crate::args::PowerlawArgs;
use crate::config::{KernelMode, RunConfig};
use crate::error::CliError;
use crate::output::{read_csv, Cell, Table};

/// Files written by a command, in write order.
pub type Written = Vec<PathBuf>;

fn emit(
    table: &Table,
    cfg: &RunConfig,
    family: &str,
    written: &mut Written,
) -> Result<(), CliError> {
    let path = cfg.output_path(family);
    table.write(&path)?;
    written.push(path);
    Ok(())
}

fn or_nan<T>(r: &Result<T, rfconv::Error>, f: impl Fn(&T) -> f64) -> f64 {
    r.as_ref().map(f).unwrap_or(f64::NAN)
}

pub fn theory(cfg: &RunConfig, diagnostics: bool) -> Result<Written, CliError> {
    let params = cfg.model_params()?;
    let lambdas = cfg.require_grid(&cfg.grids.lambda, "lambda")?.points();
    let bars: Vec<f64> = lambdas.iter().map(|l| l / params.mustar_sq()).collect();
    let u = lagrangian_curve(Family::U, &bars, &params);
    let t = if params.is_overparameterized() {
        lagrangian_curve(Family::T, &bars, &params)
    } else {
        bars.iter()
            .map(|_| {
                Err(rfconv::Error::RequiresOverparam {
                    psi1: params.psi1,
                    psi2: params.psi2,
                })
            })
            .collect()
    };
    let mn = asymptotics::risk_min_norm(&params);

    let mut table = Table::new(&[
        "lambda",
        "lambda_bar",
        "ubar",
        "a_u",
        "tbar",
        "a_t",
        "risk",
        "norm",
    ]);
    for i in 0..lambdas.len() {
        table.push(vec![
            lambdas[i].into(),
            bars[i].into(),
            or_nan(&u[i], |p| p.value).into(),
            or_nan(&u[i], |p| p.norm_sq).into(),
            or_nan(&t[i], |p| p.value).into(),
            or_nan(&t[i], |p| p.norm_sq).into(),
            or_nan(&mn, |m| m.risk).into(),
            or_nan(&mn, |m| m.norm_sq).into(),
        ]);
    }
    let missing = u.iter().chain(&t).filter(|r| r.is_err()).count();
    if missing > 0 {
        eprintln!("note: {missing} cells outside the admissible region are written as NaN");
    }
    let mut written = Vec::new();
    emit(&table, cfg, "lagrangian", &mut written)?;

    if diagnostics {
        let mut rational = Table::new(&[
            "family",
            "lambda",
            "form",
            "rational",
            "derivative",
            "rel_diff",
            "flagged",
        ]);
        for p in u.iter().chain(&t).flatten() {
            for c in rational_norm_candidates(p, &params) {
                rational.push(vec![
                    p.family.label().into(),
                    p.lambda.into(),
                    c.label.into(),
                    c.value.into(),
                    p.norm_sq.into(),
                    c.rel_diff.into(),
                    (c.rel_diff > 1e-3).into(),
                ]);
            }
        }
        emit(&rational, cfg, "rational", &mut written)?;
        emit(
            &limit_directions(&params, &bars)?,
            cfg,
            "limits",
            &mut written,
        )?;
    }
    Ok(written)
}

// Both readings of the limit defining the transforms at zero: u -> 0+
// (used throughout) and u -> infinity, where every transform vanishes.
fn limit_directions(params: &ModelParams, bars: &[f64]) -> Result<Table, CliError> {
    let solver = FixedPointSolver::default();
    let mut table = Table::new(&[
        "family",
        "lambda_bar",
        "limit",
        "u",
        "m1_re",
        "m1_im",
        "m2_re",
        "m2_im",
    ]);
    let mut families = vec![Family::U];
    if params.is_overparameterized() {
        families.push(Family::T);
    }
    const U_LARGE: f64 = 1e8;
    for fam in families {
        for &lb in bars {
            let eq = match fam {
                Family::U => EquationFamily::Ubar { lambda_bar: lb },
                Family::T => EquationFamily::Tbar { lambda_bar: lb },
            };
            let zero = solver.solve_at_zero(eq, params).map(|z| z.state);
            let inf = solver.solve_at(C64::new(0.0, U_LARGE), eq, params);
            for (label, u, st) in [("u->0+", 0.0, zero), ("u->inf", U_LARGE, inf)] {
                let (m1, m2) = st
                    .map(|s| (s.m1, s.m2))
                    .unwrap_or((C64::new(f64::NAN, f64::NAN), C64::new(f64::NAN, f64::NAN)));
                table.push(vec![
                    fam.label().into(),
                    lb.into(),
                    label.into(),
                    u.into(),
                    m1.re.into(),
                    m1.im.into(),
                    m2.re.into(),
                    m2.im.into(),
                ]);
            }
        }
    }
    Ok(table)
}

fn sim_plan(cfg: &RunConfig, params: &ModelParams) -> Result<ReplicatePlan, CliError> {
    let s = &cfg.sim;
    let dims =
        Dims::new(s.d, s.n_features, s.n_samples).map_err(|e| CliError::Config(e.to_string()))?;
    if dims.n_features <= dims.n_samples {
        return Err(CliError::Config(format!(
            "simulation needs n_features > n_samples, got N = {}, n = {}",
            dims.n_features, dims.n_samples
        )));
    }
    if s.replicates < 2 {
        return Err(CliError::Config(format!(
            "need at least 2 replicates, got {}",
            s.replicates
        )));
    }
    let lu = cfg.require_grid(&cfg.grids.lambda, "lambda")?.points();
    let lt = cfg
        .grids
        .lambda_t
        .as_ref()
        .map(|g| g.points())
        .unwrap_or_else(|| lu.clone());
    // The instance uses its realized aspect ratios.
    let params = params.with_psi(dims.psi1(), dims.psi2());
    Ok(ReplicatePlan {
        dims,
        params,
        lambdas_u: lu,
        lambdas_t: lt,
        replicates: s.replicates,
        base_seed: s.base_seed,
    })
}

fn stats_cells(s: &Result<ReplicateStats, rfconv::Error>) -> Vec<Cell> {
    match s {
        Ok(s) => vec![
            s.count.into(),
            s.norm_sq.mean.into(),
            s.norm_sq.stderr.into(),
            s.value.mean.into(),
            s.value.stderr.into(),
        ],
        Err(_) => vec![
            0usize.into(),
            f64::NAN.into(),
            f64::NAN.into(),
            f64::NAN.into(),
            f64::NAN.into(),
        ],
    }
}

fn write_simulation(
    cfg: &RunConfig,
    plan: &ReplicatePlan,
    run: &ReplicateRun,
    written: &mut Written,
) -> Result<(), CliError> {
    let mut rows = Table::new(&[
        "family",
        "lambda",
        "replicate",
        "seed",
        "norm_sq",
        "value",
        "skipped",
    ]);
    for r in &run.rows {
        rows.push(vec![
            r.family.label().into(),
            r.lambda.into(),
            r.replicate.into(),
            r.seed.into(),
            r.norm_sq.into(),
            r.value.into(),
            r.skipped.clone().unwrap_or_default().into(),
        ]);
    }
    emit(&rows, cfg, "replicates", written)?;

    let header = [
        "lambda",
        "count",
        "norm_mean",
        "norm_stderr",
        "value_mean",
        "value_stderr",
    ];
    for (family, lambdas, stats) in [
        ("U", &plan.lambdas_u, &run.uniform),
        ("T", &plan.lambdas_t, &run.interpolator),
    ] {
        let mut t = Table::new(&header);
        for (&l, s) in lambdas.iter().zip(stats) {
            let mut row: Vec<Cell> = vec![l.into()];
            row.extend(stats_cells(s));
            t.push(row);
        }
        emit(&t, cfg, family, written)?;
    }
    let mut mn = Table::new(&header[1..]);
    mn.push(stats_cells(&run.min_norm));
    emit(&mn, cfg, "minnorm", written)?;

    let r = &run.report;
    let mut opt = Table::new(&["check", "worst"]);
    for (name, v) in [
        ("u_stationarity", r.max_u_stationarity),
        ("t_stationarity", r.max_t_stationarity),
        ("t_feasibility", r.max_t_feasibility),
        ("min_norm_null_component", r.max_min_norm_null),
        ("min_norm_empirical_risk", r.max_min_norm_rhat),
        ("norm_order_violations", r.norm_order_violations as f64),
    ] {
        opt.push(vec![name.into(), v.into()]);
    }
    emit(&opt, cfg, "optimality", written)?;
    Ok(())
}

fn run_simulation(cfg: &RunConfig) -> Result<(ReplicatePlan, ReplicateRun), CliError> {
    let params = cfg.model_params()?;
    let plan = sim_plan(cfg, &params)?;
    let run = simulator::replicate_run(&plan).map_err(|e| {
        CliError::numerical(format!("simulation with base seed {}", plan.base_seed), e)
    })?;
    let skipped = run.rows.iter().filter(|r| r.skipped.is_some()).count();
    if skipped > 0 {
        eprintln!("note: {skipped} cells skipped (see the `skipped` column)");
    }
    Ok((plan, run))
}

pub fn simulate(cfg: &RunConfig) -> Result<Written, CliError> {
    let (plan, run) = run_simulation(cfg)?;
    let mut written = Vec::new();
    write_simulation(cfg, &plan, &run, &mut written)?;
    Ok(written)
}

fn comparison_table(c: &Comparison) -> Table {
    let mut t = Table::new(&[
        "lambda",
        "theory_norm",
        "theory_value",
        "sim_norm_mean",
        "sim_norm_stderr",
        "sim_value_mean",
        "sim_value_stderr",
        "z_norm",
        "z_value",
        "pass",
    ]);
    for r in &c.rows {
        t.push(vec![
            r.lambda.into(),
            r.theory.norm_sq.into(),
            r.theory.objective.into(),
            r.stats.norm_sq.mean.into(),
            r.stats.norm_sq.stderr.into(),
            r.stats.value.mean.into(),
            r.stats.value.stderr.into(),
            r.z_norm.value().into(),
            r.z_value.value().into(),
            r.pass.into(),
        ]);
    }
    t
}

const THEORY_CURVE_POINTS: usize = 200;

pub fn compare(cfg: &RunConfig) -> Result<Written, CliError> {
    let (plan, run) = run_simulation(cfg)?;
    let mut written = Vec::new();
    write_simulation(cfg, &plan, &run, &mut written)?;
    let params = plan.params;

    for (family, lambdas, stats) in [
        (Family::U, &plan.lambdas_u, &run.uniform),
        (Family::T, &plan.lambdas_t, &run.interpolator),
    ] {
        let theory: Vec<TheoryPoint> = theory_curve(family, lambdas, &params)
            .into_iter()
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::numerical(format!("{} theory curve", family.label()), e))?;
        let sim: Vec<(f64, ReplicateStats)> = lambdas
            .iter()
            .zip(stats)
            .map(|(&l, s)| s.clone().map(|s| (l, s)))
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::numerical(format!("{} simulation", family.label()), e))?;
        let cmp = compare_theory_sim(&theory, &sim)
            .map_err(|e| CliError::numerical(format!("{} comparison", family.label()), e))?;
        println!(
            "{}: {:.0}% of {} points within {} standard errors",
            family.label(),
            100.0 * cmp.pass_rate,
            cmp.rows.len(),
            analysis::Z_BOUND
        );
        emit(
            &comparison_table(&cmp),
            cfg,
            &format!("compare_{}", family.label()),
            &mut written,
        )?;

        // Dense curve for plotting, across the simulated range.
        let lo = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dense = analysis::lin_space(lo, hi, THEORY_CURVE_POINTS);
        let mut curve = Table::new(&["lambda", "norm_sq", "objective"]);
        for (l, p) in dense.iter().zip(theory_curve(family, &dense, &params)) {
            curve.push(vec![
                (*l).into(),
                or_nan(&p, |p| p.norm_sq).into(),
                or_nan(&p, |p| p.objective).into(),
            ]);
        }
        emit(
            &curve,
            cfg,
            &format!("theory_{}", family.label()),
            &mut written,
        )?;
    }

    let mn = asymptotics::risk_min_norm(&params)
        .map_err(|e| CliError::numerical("min-norm theory", e))?;
    let mut t = Table::new(&["quantity", "theory", "sim_mean", "sim_stderr", "z"]);
    if let Ok(s) = &run.min_norm {
        for (name, th, ms) in [("norm", mn.norm_sq, s.norm_sq), ("risk", mn.risk, s.value)] {
            let z = analysis::ZScore::new(ms.mean, ms.stderr, th).value();
            t.push(vec![
                name.into(),
                th.into(),
                ms.mean.into(),
                ms.stderr.into(),
                z.into(),
            ]);
        }
    }
    emit(&t, cfg, "compare_minnorm", &mut written)?;
    Ok(written)
}

const KERNEL_QUANTITIES: [(KernelQuantity, &str); 4] = [
    (KernelQuantity::Norm, "norm"),
    (KernelQuantity::Risk, "risk"),
    (KernelQuantity::UbarAlpha, "u_alpha"),
    (KernelQuantity::TbarAlpha, "t_alpha"),
];

pub fn kernel_limit(cfg: &RunConfig, mode: Option<KernelMode>) -> Result<Written, CliError> {
    let params = cfg.model_params()?;
    let mode = mode.unwrap_or(cfg.kernel.mode);
    let mut written = Vec::new();
    let mut failures = 0usize;
    match mode {
        KernelMode::Psi2 => {
            let psi2 = cfg.require_grid(&cfg.grids.psi2, "psi2")?.points();
            let levels = if cfg.kernel.noise_levels.is_empty() {
                vec![params.tau_sq]
            } else {
                cfg.kernel.noise_levels.clone()
            };
            for tau in levels {
                let base = params.with_noise(tau);
                let cols: Vec<Vec<f64>> = KERNEL_QUANTITIES
                    .iter()
                    .map(|(q, _)| {
                        analysis::kernel_sweep(*q, &psi2, cfg.alpha, &base)
                            .into_iter()
                            .map(|(_, r)| r.map(|k| k.value).unwrap_or(f64::NAN))
                            .collect()
                    })
                    .collect();
                let mut t = Table::new(&["psi2", "tau_sq", "norm", "risk", "u_alpha", "t_alpha"]);
                for (i, &p2) in psi2.iter().enumerate() {
                    let mut row: Vec<Cell> = vec![p2.into(), tau.into()];
                    for c in &cols {
                        failures += c[i].is_nan() as usize;
                        row.push(c[i].into());
                    }
                    t.push(row);
                }
                emit(&t, cfg, &format!("tau{tau}"), &mut written)?;
            }
        }
        KernelMode::Levels => {
            let psi2 = cfg.require_grid(&cfg.grids.psi2, "psi2")?.points();
            let mut t = Table::new(&["p", "psi2", "level", "u_level"]);
            for &p in &cfg.kernel.level_exponents {
                for (p2, r) in analysis::level_sweep(p, cfg.kernel.level_scale, &psi2, &params) {
                    let v = r.map(|k| k.value).unwrap_or(f64::NAN);
                    failures += v.is_nan() as usize;
                    t.push(vec![
                        p.into(),
                        p2.into(),
                        (cfg.kernel.level_scale * p2.powf(p)).into(),
                        v.into(),
                    ]);
                }
            }
            emit(&t, cfg, "levels", &mut written)?;
        }
        KernelMode::FiniteWidth => {
            let psi1 = cfg.require_grid(&cfg.grids.psi1, "psi1")?.points();
            let psi2 = params.psi2;
            let mut limits = Table::new(&["quantity", "psi2", "limit", "slope", "rel_residual"]);
            let mut values = Vec::new();
            for (q, name) in KERNEL_QUANTITIES {
                let lim = asymptotics::kernel_limit(q, psi2, cfg.alpha, &params).map_err(|e| {
                    CliError::numerical(format!("{name} limit at psi2 = {psi2}"), e)
                })?;
                limits.push(vec![
                    name.into(),
                    psi2.into(),
                    lim.value.into(),
                    lim.slope.into(),
                    lim.rel_residual.into(),
                ]);
                let col: Vec<f64> = psi1
                    .par_iter()
                    .map(|&p1| {
                        finite_width_value(q, cfg.alpha, &params.with_psi(p1, psi2))
                            .unwrap_or(f64::NAN)
                    })
                    .collect();
                values.push((lim.value, col));
            }
            let mut t = Table::new(&[
                "psi1",
                "norm",
                "norm_delta",
                "risk",
                "risk_delta",
                "u_alpha",
                "u_alpha_delta",
                "t_alpha",
                "t_alpha_delta",
            ]);
            for (i, &p1) in psi1.iter().enumerate() {
                let mut row: Vec<Cell> = vec![p1.into()];
                for (lim, col) in &values {
                    failures += col[i].is_nan() as usize;
                    row.push(col[i].into());
                    row.push((col[i] - lim).abs().into());
                }
                t.push(row);
            }
            emit(&limits, cfg, "limits", &mut written)?;
            emit(&t, cfg, "finite_width", &mut written)?;
        }
    }
    if failures > 0 {
        eprintln!("note: {failures} cells could not be evaluated and are written as NaN");
    }
    Ok(written)
}

pub fn powerlaw(cfg: &RunConfig, args: &PowerlawArgs) -> Result<Written, CliError> {
    let (header, rows) = read_csv(&args.input)?;
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Config(format!("column `{name}` not in {}", args.input.display()))
        })
    };
    let xi = col(&args.x)?;
    let parse = |s: &str| s.trim().parse::<f64>().unwrap_or(f64::NAN);
    let mut t = Table::new(&[
        "input",
        "x",
        "y",
        "subtract",
        "slope",
        "intercept",
        "r_squared",
        "x_min",
        "x_max",
        "used",
        "excluded",
    ]);
    for y in &args.y {
        let yi = col(y)?;
        let points: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (parse(&r[xi]), parse(&r[yi]) - args.subtract))
            .filter(|p| p.0.is_finite() && p.0 > 0.0 && !p.1.is_nan())
            .collect();
        let fit = analysis::powerlaw_slope(&points, args.window)
            .map_err(|e| CliError::numerical(format!("fit of `{y}` against `{}`", args.x), e))?;
        println!(
            "{y}: slope {:.4} (r^2 {:.6}, {} points)",
            fit.slope, fit.r_squared, fit.used
        );
        t.push(vec![
            args.input.display().to_string().into(),
            args.x.clone().into(),
            y.clone().into(),
            args.subtract.into(),
            fit.slope.into(),
            fit.intercept.into(),
            fit.r_squared.into(),
            fit.window.0.into(),
            fit.window.1.into(),
            fit.used.into(),
            fit.excluded.into(),
        ]);
    }
    let mut written = Vec::new();
    emit(&t, cfg, "powerlaw", &mut written)?;
    Ok(written)
}

pub fn logdet_check(cfg: &RunConfig) -> Result<Written, CliError> {
    let params = cfg.model_params()?;
    let lc = &cfg.logdet;
    if lc.replicates == 0 || lc.dims.is_empty() || lc.u.is_empty() || lc.lambdas.is_empty() {
        return Err(CliError::Config(
            "logdet needs non-empty dims, u, lambdas and replicates".into(),
        ));
    }
    let mut t = Table::new(&[
        "d",
        "u",
        "lambda",
        "replicate",
        "g_d_re",
        "g_d_im",
        "g_re",
        "g_im",
        "abs_diff",
    ]);
    for &d in &lc.dims {
        let dims = Dims::from_ratios(d, &params).map_err(|e| CliError::Config(e.to_string()))?;
        let realized = params.with_psi(dims.psi1(), dims.psi2());
        for &u in &lc.u {
            let xi = C64::new(0.0, u);
            for &lambda in &lc.lambdas {
                let q = QVec::uniform(lambda, &realized);
                let g = log_det_limit(xi, EquationFamily::GeneralQ(q), &realized).map_err(|e| {
                    CliError::numerical(format!("limit at d = {d}, u = {u}, lambda = {lambda}"), e)
                })?;
                let cells: Vec<Result<(usize, C64), CliError>> = (0..lc.replicates)
                    .into_par_iter()
                    .map(|k| {
                        let seed = cfg.sim.base_seed.wrapping_add(k as u64);
                        let inst = simulator::sample_instance(dims, &realized, seed)
                            .map_err(|e| CliError::numerical(format!("instance seed {seed}"), e))?;
                        let gd = inst.empirical_log_det(&q, xi).map_err(|e| {
                            CliError::numerical(format!("log-determinant seed {seed}"), e)
                        })?;
                        Ok((k, gd))
                    })
                    .collect();
                for cell in cells {
                    let (k, gd) = cell?;
                    t.push(vec![
                        d.into(),
                        u.into(),
                        lambda.into(),
                        k.into(),
                        gd.re.into(),
                        gd.im.into(),
                        g.re.into(),
                        g.im.into(),
                        (gd - g).norm().into(),
                    ]);
                }
            }
        }
    }
    let mut written = Vec::new();
    emit(&t, cfg, "logdet", &mut written)?;
    Ok(written)
}
