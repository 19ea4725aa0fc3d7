use super::*;
use crate::special::normal_tail;

const INF: f64 = f64::INFINITY;

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}

/// Fixed constants, for formulas whose `H_α` has no closed form.
struct Fixed(f64);

impl ConstantsProvider for Fixed {
    fn pickands(&self, _alpha: f64) -> Result<ProvidedConstant> {
        Ok(ProvidedConstant {
            value: self.0,
            source: ConstantSource::ClosedForm,
        })
    }

    fn piterbarg(
        &self,
        _: f64,
        _: f64,
        _: &TrendFunction,
        _: f64,
        _: f64,
    ) -> Result<ProvidedConstant> {
        Ok(ProvidedConstant {
            value: self.0,
            source: ConstantSource::ClosedForm,
        })
    }
}

#[test]
fn branch_selection() {
    assert_eq!(branch(1.0, 2.0, TIE_TOL), Branch::Below);
    assert_eq!(branch(2.0, 1.0, TIE_TOL), Branch::Above);
    assert_eq!(branch(1.0, 1.0, TIE_TOL), Branch::Tie);
    assert_eq!(branch(1.0 + 0.4 * TIE_TOL, 1.0, TIE_TOL), Branch::Tie);
    assert_eq!(branch(1.0 + 2.0 * TIE_TOL, 1.0, TIE_TOL), Branch::Above);
    let p = RegimeParams::new(1.0, 1.0, 3.0, 1.0, 1.0).with_trend(1.0, 0.5);
    assert_eq!(p.beta_star(), 1.0);
    assert_eq!(p.lambda(), 2.0);
    assert_eq!(p.eta(), Eta::Finite(1.0));
}

#[test]
fn classic_cases() {
    let above = RegimeParams::new(1.5, 1.0, 1.0, 1.0, 4.0);
    let r = classic_nonstationary(&above, &ClosedForm).unwrap();
    assert_eq!(r.branch, Branch::Above);
    assert!(rel(r.value, normal_tail(4.0)) < 1e-14);

    let below = RegimeParams::new(1.0, 1.0, 2.0, 1.0, 5.0);
    let r = classic_nonstationary(&below, &ClosedForm).unwrap();
    assert!(rel(r.constant, 0.886_226_925_452_758) < 1e-14);
    assert!(rel(r.value, 1.270_191_706_113_491_4e-6) < 1e-12);

    // α = β = 1, b/a = 1: P^{|t|}_{1,1}[0, ∞) = 2
    let tie = RegimeParams::new(1.0, 1.0, 1.0, 1.0, 3.0);
    let r = classic_nonstationary(&tie, &ClosedForm).unwrap();
    assert_eq!(r.branch, Branch::Tie);
    assert!(rel(r.constant, 2.0) < 1e-14);

    let no_constant = RegimeParams::new(1.5, 1.0, 1.5, 1.0, 3.0);
    assert!(matches!(
        classic_nonstationary(&no_constant, &ClosedForm),
        Err(Error::ConstantUnavailable(_))
    ));
}

#[test]
fn classic_functional_form() {
    let p = RegimeParams::new(1.0, 2.0, 3.0, 0.5, 10.0);
    let scaled: Vec<f64> = [10.0, 20.0, 40.0]
        .iter()
        .map(|&u| {
            let r = classic_nonstationary(&p.clone().at_u(u), &ClosedForm).unwrap();
            (r.log_value - log_normal_tail(u) - (2.0 - 2.0 / 3.0) * u.ln()).exp()
        })
        .collect();
    assert!(rel(scaled[0], scaled[1]) < 1e-12 && rel(scaled[0], scaled[2]) < 1e-12);
}

fn peak(a: f64, c: f64, gamma: f64, position: PeakPosition) -> StationaryPeak {
    StationaryPeak {
        a,
        c,
        gamma,
        position,
    }
}

#[test]
fn locally_stationary_boundary_peak_with_linear_trend() {
    let r = locally_stationary_trend(
        6.0,
        1.0,
        peak(0.7, 1.3, 1.0, PeakPosition::LeftBoundary),
        0.0,
        &ClosedForm,
    )
    .unwrap();
    assert!(rel(r.value, 3.187_437_007_044_870_1e-9) < 1e-12);

    let alpha = 1.5;
    let h = 0.7;
    let u = 9.0;
    let (a, c) = (0.4, 2.0);
    let r = locally_stationary_trend(
        u,
        alpha,
        peak(a, c, 1.0, PeakPosition::LeftBoundary),
        0.0,
        &Fixed(h),
    )
    .unwrap();
    let expected = a.powf(1.0 / alpha) * h / c * u.powf(2.0 / alpha - 1.0) * normal_tail(u);
    assert!(rel(r.value, expected) < 1e-12);
}

#[test]
fn locally_stationary_regimes() {
    let g_m = 0.3;
    let steep = locally_stationary_trend(
        5.0,
        2.0,
        peak(1.0, 1.0, 0.5, PeakPosition::Interior),
        g_m,
        &ClosedForm,
    )
    .unwrap();
    assert_eq!(steep.branch, Branch::Above);
    assert!(rel(steep.value, normal_tail(5.0 - g_m)) < 1e-13);

    let inner = locally_stationary_trend(
        5.0,
        1.0,
        peak(1.0, 2.0, 1.5, PeakPosition::Interior),
        g_m,
        &ClosedForm,
    )
    .unwrap();
    let edge = locally_stationary_trend(
        5.0,
        1.0,
        peak(1.0, 2.0, 1.5, PeakPosition::RightBoundary),
        g_m,
        &ClosedForm,
    )
    .unwrap();
    assert!(rel(inner.value, 2.0 * edge.value) < 1e-14);

    // the integral form at a near-boundary peak agrees with the Γ form in the limits d → 0 and d → ∞
    let near = |d| {
        locally_stationary_trend(
            5.0,
            1.0,
            peak(1.0, 2.0, 1.5, PeakPosition::NearLeft(d)),
            g_m,
            &ClosedForm,
        )
        .unwrap()
        .value
    };
    assert!(rel(near(0.0), edge.value) < 1e-7);
    assert!(rel(near(50.0), inner.value) < 1e-7);

    // α = 2γ: P^{c|t|}_{2,a}[0, ∞) = Φ(m) + φ(m)/m with m = c/√(2a)
    let tie = locally_stationary_trend(
        5.0,
        2.0,
        peak(3.0, 1.0, 1.0, PeakPosition::LeftBoundary),
        0.0,
        &ClosedForm,
    )
    .unwrap();
    assert_eq!(tie.branch, Branch::Tie);
    assert!(rel(tie.constant, 1.557_526_324_945_47) < 1e-12);
}

#[test]
fn pure_peak_value_scales_with_trend_coefficient() {
    let v = |c: f64| {
        locally_stationary_trend(
            5.0,
            1.0,
            peak(1.0, c, 2.0, PeakPosition::Interior),
            0.0,
            &ClosedForm,
        )
        .unwrap()
        .value
    };
    assert!(rel(v(4.0) / v(1.0), 0.5) < 1e-14);
}

#[test]
fn multi_peak_sums_constants() {
    // peaks at (4j + 1)T/4 of a periodic variance; γ = 2 with c' = 2c(π/T)²
    let (t, c, u) = (3.0_f64, 0.8_f64, 4.0);
    let cp = 2.0 * c * (std::f64::consts::PI / t).powi(2);
    let peaks: Vec<_> = (0..2)
        .map(|j| {
            peak(
                0.5 / ((4 * j + 1) as f64 * t / 4.0),
                cp,
                2.0,
                PeakPosition::Interior,
            )
        })
        .collect();
    let r = locally_stationary_multi_peak(u, 1.0, &peaks, c, &ClosedForm).unwrap();
    assert!(rel(r.value, 0.005_884_508_957_563_924) < 1e-12);

    let one = locally_stationary_multi_peak(u, 1.0, &peaks[..1], c, &ClosedForm).unwrap();
    let single = locally_stationary_trend(u, 1.0, peaks[0], c, &ClosedForm).unwrap();
    assert_eq!(one.value, single.value);
    let twice =
        locally_stationary_multi_peak(u, 1.0, &[peaks[0], peaks[0]], c, &ClosedForm).unwrap();
    assert!(rel(twice.value, 2.0 * single.value) < 1e-14);

    let mixed = [peaks[0], peak(1.0, 1.0, 1.0, PeakPosition::Interior)];
    assert!(matches!(
        locally_stationary_multi_peak(u, 1.0, &mixed, c, &ClosedForm),
        Err(Error::Unsupported(_))
    ));
    assert!(locally_stationary_multi_peak(u, 1.0, &[], c, &ClosedForm).is_err());
}

/// Brownian bridge with trend: variance peak at ½ (σ = ½, β = 2, b = 1),
/// local correlation `1 − r ≈ 2|t|`, trend peak `g ≈ c/2 − c|t|`.
fn bridge_two_sided(u: f64, c: f64) -> RegimeParams {
    RegimeParams::new(1.0, 2.0, 2.0, 1.0, u)
        .with_sigma(0.5)
        .with_trend(c, 1.0)
        .with_peak_value(c / 2.0)
}

#[test]
fn bridge_with_two_sided_trend() {
    let c = 0.5;
    let r = nonstationary_trend(&bridge_two_sided(2.0, c), &ClosedForm).unwrap();
    assert_eq!(r.branch, Branch::Below);
    assert_eq!(r.constant_source, ConstantSource::Quadrature);
    assert!(rel(r.value, 0.001_630_942_851_234_327_5) < 1e-7);

    let log_limit = |u: f64| (2.0 * normal_tail(c)).ln() - 2.0 * (u * u - c * u);
    let ratios: Vec<f64> = [4.0, 8.0, 16.0, 32.0]
        .iter()
        .map(|&u| {
            (nonstationary_trend(&bridge_two_sided(u, c), &ClosedForm)
                .unwrap()
                .log_value
                - log_limit(u))
            .exp()
        })
        .collect();
    assert!(ratios
        .windows(2)
        .all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()));
    assert!((ratios[3] - 1.0).abs() < 0.01);
}

/// Bridge with linear drift `ct`: the moving maximizer gives
/// `u√(8π)Ψ(2√(u² + cu))`, which is asymptotic to `e^{−2(u² + cu)}`.
#[test]
fn bridge_with_drift_tends_to_exact_probability() {
    let c = 0.5;
    let value = |u: f64| {
        let t_u = u / (c + 2.0 * u);
        let p = RegimeParams::new(1.0, 2.0, 2.0, 1.0, u)
            .with_sigma(0.5)
            .with_moving_peak(-c * t_u, (t_u * (1.0 - t_u)).sqrt());
        nonstationary_trend(&p, &ClosedForm).unwrap()
    };
    for u in [1.0, 2.0, 3.0] {
        let r = value(u);
        let x = 2.0 * (u * u + c * u).sqrt();
        assert!(
            rel(
                r.value,
                u * (8.0 * std::f64::consts::PI).sqrt() * normal_tail(x)
            ) < 1e-7
        );
    }
    let ratios: Vec<f64> = [1.0, 4.0, 16.0, 64.0]
        .iter()
        .map(|&u| (value(u).log_value + 2.0 * (u * u + c * u)).exp())
        .collect();
    assert!(ratios
        .windows(2)
        .all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()));
    assert!((ratios[3] - 1.0).abs() < 0.01);
}

#[test]
fn nonstationary_regimes() {
    let p = RegimeParams::new(1.5, 1.0, 1.0, 1.0, 6.0)
        .with_trend(1.0, 1.0)
        .with_sigma(0.8)
        .with_peak_value(0.4);
    let r = nonstationary_trend(&p, &ClosedForm).unwrap();
    assert_eq!(r.branch, Branch::Above);
    assert!(rel(r.value, normal_tail((6.0 - 0.4) / 0.8)) < 1e-13);

    // β = 2γ: both terms enter f and shrink the integral
    let both = RegimeParams::new(1.0, 1.0, 2.0, 1.0, 5.0).with_trend(1.0, 1.0);
    let only_variance = RegimeParams::new(1.0, 1.0, 2.0, 1.0, 5.0).with_trend(1.0, 3.0);
    assert!(matches!(both.limit_trend(), TrendFunction::Sum { ref terms } if terms.len() == 2));
    let r_both = nonstationary_trend(&both, &ClosedForm).unwrap();
    let r_var = nonstationary_trend(&only_variance, &ClosedForm).unwrap();
    assert!(r_both.constant < r_var.constant);
    // with no trend exponent in play the constant is H₁·∫e^{−t²} = √π
    assert!(rel(r_var.constant, std::f64::consts::PI.sqrt()) < 1e-8);

    // σ = 1 and no trend reduce to the classical formula at an interior peak
    let classic = RegimeParams::new(1.0, 1.0, 2.0, 1.0, 5.0).at(PeakPosition::LeftBoundary);
    let a = nonstationary_trend(&classic, &ClosedForm).unwrap();
    let b = classic_nonstationary(&classic, &ClosedForm).unwrap();
    assert!(rel(a.value, b.value) < 1e-8);
}

#[test]
fn general_constant_forms() {
    let zero = TrendFunction::Zero;
    for form in [ZeroEtaForm::One, ZeroEtaForm::Supremum] {
        let c = general_constant(
            Eta::Zero,
            1.0,
            &TrendFunction::Linear { c: 1.0 },
            0.0,
            5.0,
            form,
            &ClosedForm,
        );
        assert!(rel(c.unwrap().value, 1.0) < 1e-12);
    }
    // window away from the minimizer of f
    let sup = general_constant(
        Eta::Zero,
        1.0,
        &TrendFunction::AbsPowerTwoSided { c: 1.0, gamma: 2.0 },
        0.5,
        INF,
        ZeroEtaForm::Supremum,
        &ClosedForm,
    )
    .unwrap();
    assert!(rel(sup.value, (-0.25_f64).exp()) < 1e-12);

    let h = general_constant(
        Eta::Infinite,
        2.0,
        &zero,
        0.0,
        3.0,
        ZeroEtaForm::One,
        &ClosedForm,
    )
    .unwrap();
    assert!(rel(h.value, 3.0 / std::f64::consts::PI.sqrt()) < 1e-12);

    let f = TrendFunction::AbsPowerTwoSided { c: 1.5, gamma: 0.7 };
    let two_sided = general_constant(
        Eta::Infinite,
        1.0,
        &f,
        -INF,
        INF,
        ZeroEtaForm::One,
        &ClosedForm,
    )
    .unwrap();
    assert!(rel(two_sided.value, 1.418_548_570_091_914) < 1e-8);
    assert_eq!(two_sided.source, ConstantSource::Quadrature);

    let finite = general_constant(
        Eta::Finite(1.0),
        1.0,
        &TrendFunction::Linear { c: 1.0 },
        0.0,
        INF,
        ZeroEtaForm::One,
        &ClosedForm,
    );
    assert!(rel(finite.unwrap().value, 2.0) < 1e-14);

    assert!(general_constant(
        Eta::Infinite,
        1.0,
        &zero,
        0.0,
        INF,
        ZeroEtaForm::One,
        &ClosedForm
    )
    .is_err());
    assert!(general_constant(
        Eta::Infinite,
        1.0,
        &zero,
        2.0,
        1.0,
        ZeroEtaForm::One,
        &ClosedForm
    )
    .is_err());
}

#[test]
fn ruin_exact_values() {
    assert!(rel(ruin_exact(0.0, 1.0, 1.0, 1.0).unwrap(), 1.0) < 1e-15);
    assert!(
        rel(
            ruin_exact(2.0, 1.0, 1.0, 1.0).unwrap(),
            1.404_361_624_755_272_3e-4
        ) < 1e-12
    );
    let path: Vec<f64> = (0..20)
        .map(|i| ruin_exact(i as f64 * 0.5, 1.0, 1.0, 1.0).unwrap())
        .collect();
    assert!(path.windows(2).all(|w| w[1] < w[0]));
    // far tail stays finite in log space
    assert!(ruin_exact_log(100.0, 1.0, 1.0, 1.0).unwrap().is_finite());
    assert!(ruin_exact(1.0, 0.0, 1.0, 1.0).is_err());
}

#[test]
fn ruin_asymptotic_ratios() {
    let ratio = |u: f64| {
        let a = ruin_asymptotic(u, 1.0, 1.0, 1.0, &ClosedForm).unwrap();
        (a.log_value - ruin_exact_log(u, 1.0, 1.0, 1.0).unwrap()).exp()
    };
    let expected = [
        (2.0, 1.054_860_716_580_513_7),
        (4.0, 1.019_846_287_273_908),
        (8.0, 1.006_155_258_054_316),
        (16.0, 1.001_728_640_462_395_9),
    ];
    for (u, e) in expected {
        assert!(rel(ratio(u), e) < 1e-10, "u = {u}");
    }
    let r5 = ratio(5.0);
    assert!((0.9..=1.1).contains(&r5));

    let a = ruin_asymptotic(3.0, 1.0, 2.0, 0.5, &ClosedForm).unwrap();
    let x = (2.0 * 2.0 * 9.0 + 4.0 * 3.0_f64).sqrt() / 0.5;
    assert_eq!(a.tail_argument, x);
    for u in [3.0, 6.0, 12.0] {
        let a = ruin_asymptotic(u, 1.0, 2.0, 0.5, &ClosedForm).unwrap();
        assert!(
            rel(
                a.constant,
                (a.log_value - log_normal_tail(a.tail_argument)).exp()
            ) < 1e-12
        );
    }
}

#[test]
fn piterbarg_identity() {
    assert!(
        rel(
            piterbarg_identity_rhs(1.0, 1.0, 1.0).unwrap(),
            12.714_622_263_547_988
        ) < 1e-13
    );
    assert!(rel(piterbarg_identity_rhs(1e-12, 1.0, 1.0).unwrap(), 2.0) < 1e-9);
    let c = 10.0;
    let x = std::f64::consts::SQRT_2 * c;
    let mills = (2.0 * std::f64::consts::PI).sqrt() * x * (x * x / 2.0).exp();
    assert!(rel(piterbarg_identity_rhs(c, 1.0, 1.0).unwrap(), mills) < 0.01);
    // closed-form constant times e^{c²/(σ²δ)} reproduces the identity
    let (c, delta, sigma) = (0.7, 1.3, 0.9);
    let h = TrendFunction::ruin_h(c, delta, sigma).unwrap();
    let r = c / delta;
    let p = ClosedForm
        .piterbarg(1.0, delta / (sigma * sigma), &h, -r * r, INF)
        .unwrap()
        .value;
    let lhs = p * (c * c / (sigma * sigma * delta)).exp();
    assert!(rel(lhs, piterbarg_identity_rhs(c, delta, sigma).unwrap()) < 1e-12);
}

#[test]
fn values_decrease_in_u() {
    let us: Vec<f64> = (4..40).map(|i| 0.5 * i as f64).collect();
    // compared in log space; the linear values underflow for the larger u
    let check = |f: &dyn Fn(f64) -> f64| {
        let v: Vec<f64> = us.iter().map(|&u| f(u)).collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]), "{v:?}");
    };
    check(&|u| {
        classic_nonstationary(&RegimeParams::new(1.0, 1.0, 2.0, 1.0, u), &ClosedForm)
            .unwrap()
            .log_value
    });
    check(&|u| {
        locally_stationary_trend(
            u,
            1.0,
            peak(1.0, 1.0, 1.5, PeakPosition::Interior),
            0.2,
            &ClosedForm,
        )
        .unwrap()
        .log_value
    });
    check(&|u| {
        nonstationary_trend(&bridge_two_sided(u, 0.5), &ClosedForm)
            .unwrap()
            .log_value
    });
    check(&|u| {
        ruin_asymptotic(u, 1.0, 1.0, 1.0, &ClosedForm)
            .unwrap()
            .log_value
    });
}

#[test]
fn infimum_scan() {
    let f = TrendFunction::AbsPowerTwoSided { c: 1.0, gamma: 2.0 }.shifted(-0.3);
    assert!(infimum(&f, -INF, INF).abs() < 1e-9);
    assert!((infimum(&f, 1.0, 2.0) - 0.49).abs() < 1e-12);
}
