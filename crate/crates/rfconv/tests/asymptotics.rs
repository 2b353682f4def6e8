use rfconv::asymptotics::{
    admissible_boundary, chi_limit, dual_curve, extrapolate_inverse, kernel_limit_on,
    lagrangian_curve, lagrangian_point, LagrangianBranch,
};
use rfconv::{
    alpha_curve, dual_value, preset, risk_min_norm, tbar_point, ubar_point, Error, Family,
    KernelQuantity, ModelParams,
};

fn relu(f1_sq: f64, tau_sq: f64) -> ModelParams {
    ModelParams::new(2.5, 1.5, f1_sq, tau_sq, preset("relu", 200).unwrap()).unwrap()
}

fn lb(lambda: f64, p: &ModelParams) -> f64 {
    lambda / p.mustar_sq()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn zero_signal_and_noise_give_zero_value() {
    let p = relu(0.0, 0.0);
    for lambda in [0.45, 0.8, 2.0, 10.0] {
        for fam in [Family::U, Family::T] {
            let pt = lagrangian_point(fam, lb(lambda, &p), &p).unwrap();
            assert_eq!(pt.value, 0.0);
            assert_eq!(pt.norm_sq, 0.0);
        }
    }
    let mn = risk_min_norm(&p).unwrap();
    assert_eq!((mn.risk, mn.norm_sq), (0.0, 0.0));
}

#[test]
fn point_records_are_consistent() {
    let p = relu(1.0, 0.2);
    let pt = ubar_point(lb(0.8, &p), &p).unwrap();
    assert!((pt.lambda - 0.8).abs() < 1e-14);
    assert_eq!(pt.family, Family::U);
    assert!(pt.norm_sq > 0.0 && pt.value > 0.0);
    assert!((pt.objective() - (pt.value + 0.8 * pt.norm_sq)).abs() < 1e-15);
    let c = pt.chi;
    assert!((c.chi1 - (1.0 + p.zeta() * c.m1 * (1.0 - c.m2))).abs() < 1e-12);
}

#[test]
fn norm_level_derivative_checks() {
    let p = relu(1.0, 0.0);
    for fam in [Family::U, Family::T] {
        let mut b = LagrangianBranch::new(fam, &p).unwrap();
        b.advance_to(lb(0.9, &p) * p.psi1).unwrap();
        let exact = b.norm_sq().unwrap();
        let h = b.norm_sq_central(2e-4).unwrap();
        let h2 = b.norm_sq_central(1e-4).unwrap();
        // Richardson pair: second-order error drops fourfold.
        assert!(rel(h, h2) < 1e-6, "{fam:?}: {h} vs {h2}");
        assert!(rel(h2, exact) < 1e-6, "{fam:?}: {h2} vs {exact}");
    }
}

#[test]
fn interpolators_need_overparameterization() {
    let p = relu(1.0, 0.0).with_psi(1.0, 1.5);
    let expect = |r: Result<_, Error>| assert!(matches!(r, Err(Error::RequiresOverparam { .. })));
    expect(tbar_point(5.0, &p).map(|_| ()));
    expect(dual_value(Family::T, 1.0, &p).map(|_| ()));
    expect(admissible_boundary(Family::T, &p).map(|_| ()));
    assert!(ubar_point(20.0, &p).is_ok());
}

#[test]
fn admissible_boundaries() {
    let p = relu(1.0, 0.0);
    let lu = admissible_boundary(Family::U, &p).unwrap();
    let lt = admissible_boundary(Family::T, &p).unwrap();
    assert!((lu - 0.42201).abs() < 1e-4, "{lu}");
    assert!((lt - 0.20752).abs() < 1e-4, "{lt}");
    assert!(matches!(
        ubar_point(lb(0.95 * lu, &p), &p),
        Err(Error::OutsideAdmissibleRegion { .. })
    ));
    assert!(tbar_point(lb(1.01 * lt, &p), &p).is_ok());
}

#[test]
fn curve_blocks_below_the_boundary() {
    let p = relu(1.0, 0.0);
    let lbs: Vec<f64> = [2.0, 1.0, 0.3, 0.5].iter().map(|&l| lb(l, &p)).collect();
    let pts = lagrangian_curve(Family::U, &lbs, &p);
    assert!(pts[0].is_ok() && pts[1].is_ok() && pts[3].is_ok());
    assert!(matches!(pts[2], Err(Error::OutsideAdmissibleRegion { .. })));
    let single = ubar_point(lbs[3], &p).unwrap();
    assert!(rel(pts[3].as_ref().unwrap().norm_sq, single.norm_sq) < 1e-10);
}

#[test]
fn norm_grows_toward_the_boundary() {
    for p in [relu(1.0, 0.0), relu(1.0, 0.3)] {
        for fam in [Family::U, Family::T] {
            // The anchor sits at lambda of about 1.36 here.
            let mut b = LagrangianBranch::new(fam, &p).unwrap();
            let mut last = b.norm_sq().unwrap();
            for lambda in [1.2, 1.0, 0.7, 0.5, 0.45] {
                b.advance_to(lb(lambda, &p) * p.psi1).unwrap();
                let a = b.norm_sq().unwrap();
                assert!(a >= last, "{fam:?} at {lambda}: {a} < {last}");
                last = a;
            }
        }
    }
}

#[test]
fn penalized_value_is_convex_in_lambda() {
    let p = relu(1.0, 0.1);
    for fam in [Family::U, Family::T] {
        let lambdas: Vec<f64> = (0..25).map(|k| 0.45 + 0.06 * k as f64).collect();
        let lbs: Vec<f64> = lambdas.iter().map(|&l| lb(l, &p)).collect();
        let v: Vec<f64> = lagrangian_curve(fam, &lbs, &p)
            .into_iter()
            .map(|r| r.unwrap().value)
            .collect();
        for w in v.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-8, "{fam:?}: {w:?}");
        }
    }
}

#[test]
fn interpolator_norm_exceeds_the_min_norm() {
    let p = relu(1.0, 0.0);
    let a = risk_min_norm(&p).unwrap().norm_sq;
    for k in 0..12 {
        let lambda = 0.21 + (2.0 - 0.21) * k as f64 / 11.0;
        let t = tbar_point(lb(lambda, &p), &p).unwrap();
        assert!(t.norm_sq >= a, "lambda {lambda}: {} < {a}", t.norm_sq);
    }
}

#[test]
fn min_norm_reference_values() {
    let p = relu(1.0, 0.0);
    let mn = risk_min_norm(&p).unwrap();
    assert!((mn.risk - 0.60524).abs() < 1e-4, "{}", mn.risk);
    assert!((mn.norm_sq - 6.90248).abs() < 1e-4, "{}", mn.norm_sq);
    assert!(mn.chi < 0.0);
    assert_eq!(chi_limit(0.0, 2.5, 1.5), -1.5);
    // The closed form solves its own quadratic.
    let (z, psi) = (0.7, 1.5);
    let c = chi_limit(z, 2.5, psi);
    assert!((z * c * c - (1.0 + z - psi * z) * c - psi).abs() < 1e-14);
}

#[test]
fn dual_first_order_condition() {
    let p = relu(1.0, 0.1);
    for fam in [Family::U, Family::T] {
        let lambda0 = 0.8;
        let pt = lagrangian_point(fam, lb(lambda0, &p), &p).unwrap();
        let d = dual_value(fam, pt.norm_sq, &p).unwrap();
        assert!(d.envelope_ok);
        assert!((d.lambda - lambda0).abs() < 1e-8, "{fam:?}: {}", d.lambda);
        assert!((d.bound - (pt.value + lambda0 * pt.norm_sq)).abs() < 1e-8);
    }
}

#[test]
fn dual_bound_is_below_every_grid_objective() {
    let p = relu(1.0, 0.0);
    let level = 10.0;
    for fam in [Family::U, Family::T] {
        let d = dual_value(fam, level, &p).unwrap();
        let lbs: Vec<f64> = (0..30).map(|k| lb(0.43 + 0.1 * k as f64, &p)).collect();
        for pt in lagrangian_curve(fam, &lbs, &p).into_iter().flatten() {
            assert!(d.bound <= pt.value + pt.lambda * level + 1e-9);
        }
    }
}

#[test]
fn dual_curve_is_monotone_in_the_level() {
    let p = relu(1.0, 0.0);
    let levels = [8.0, 10.0, 14.0, 20.0];
    let c = dual_curve(Family::U, &levels, &p).unwrap();
    assert_eq!(c.points.len(), 4);
    for w in c.points.windows(2) {
        assert!(w[1].bound >= w[0].bound);
        assert!(w[1].lambda <= w[0].lambda);
    }
    assert!(matches!(
        dual_value(Family::U, -1.0, &p),
        Err(Error::InvalidParams(_))
    ));
}

#[test]
fn low_levels_are_out_of_range_for_interpolators() {
    let p = relu(1.0, 0.0);
    let a = risk_min_norm(&p).unwrap().norm_sq;
    assert!(matches!(
        dual_value(Family::T, 0.5 * a, &p),
        Err(Error::NormLevelOutOfRange { .. })
    ));
}

#[test]
fn ordering_of_the_bounds() {
    for tau_sq in [0.0, 0.1, 0.5] {
        let p = relu(1.0, tau_sq);
        let r = risk_min_norm(&p).unwrap().risk;
        let u = alpha_curve(Family::U, 1.5, &p).unwrap();
        let t = alpha_curve(Family::T, 1.5, &p).unwrap();
        assert!(u >= t && t >= r && r >= tau_sq, "tau {tau_sq}: {u} {t} {r}");
    }
    assert!(alpha_curve(Family::U, 1.0, &relu(1.0, 0.0)).is_err());
}

#[test]
fn shrinking_ball_lowers_the_interpolator_bound() {
    let p = relu(1.0, 0.1);
    let r = risk_min_norm(&p).unwrap().risk;
    let mut last = f64::INFINITY;
    for alpha in [2.0, 1.6, 1.3, 1.1, 1.03, 1.01] {
        let t = alpha_curve(Family::T, alpha, &p).unwrap();
        assert!(t <= last && t >= r, "alpha {alpha}: {t}");
        last = t;
    }
}

#[test]
fn noisy_uniform_bound_exceeds_the_noise_and_grows() {
    let base = relu(1.0, 0.1);
    let mut last = 0.0;
    for psi2 in [1.0, 2.0, 4.0, 8.0] {
        let p = base.with_psi(20.0 * psi2, psi2);
        let u = alpha_curve(Family::U, 1.5, &p).unwrap();
        assert!(u > 0.1 && u > last, "psi2 {psi2}: {u}");
        last = u;
    }
}

#[test]
fn kernel_extrapolation_on_two_grids() {
    let p = relu(1.0, 0.1);
    for q in [
        KernelQuantity::Risk,
        KernelQuantity::Norm,
        KernelQuantity::UbarAlpha,
    ] {
        let a = kernel_limit_on(q, 2.0, 1.5, &p, &[1e2, 1e3, 1e4]).unwrap();
        let b = kernel_limit_on(q, 2.0, 1.5, &p, &[1e3, 1e4, 1e5]).unwrap();
        assert!(
            rel(a.value, b.value) < 1e-3,
            "{q:?}: {} vs {}",
            a.value,
            b.value
        );
    }
}

#[test]
fn inverse_fit_is_exact_on_exact_data() {
    let x = [10.0, 100.0, 1000.0];
    let y: Vec<f64> = x.iter().map(|v| 3.0 - 7.0 / v).collect();
    let fit = extrapolate_inverse(&x, &y).unwrap();
    assert!((fit.value - 3.0).abs() < 1e-12 && (fit.slope + 7.0).abs() < 1e-9);
    assert!(fit.rel_residual < 1e-12);
    assert!(matches!(
        extrapolate_inverse(&x[..1], &y[..1]),
        Err(Error::InsufficientPoints { .. })
    ));
}

#[test]
fn small_aspect_ratios_find_a_real_anchor() {
    let p = ModelParams::new(0.25, 0.2, 1.0, 0.0, preset("shifted-relu", 200).unwrap()).unwrap();
    let u = alpha_curve(Family::U, 1.5, &p).unwrap();
    let t = alpha_curve(Family::T, 1.5, &p).unwrap();
    let r = risk_min_norm(&p).unwrap().risk;
    assert!(u >= t - 1e-9 && t >= r - 1e-9, "{u} {t} {r}");
}
