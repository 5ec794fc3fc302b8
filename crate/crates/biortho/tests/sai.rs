use biortho::gram::{minimal_norm_growing, Coefficients, Method};
use biortho::sai::{
    choose_params, log_mollifier, log_weierstrass, sai_family, sai_norm, theoretical_b_star, CalibrationConstants,
    MollifierParams,
};
use biortho::spectra::{analyze_gaps, gen_quadratic};
use biortho::{GapProfile, PrecisionContext, Sign, Spectrum};
use num_complex::Complex64;

const CALIBRATION: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/calibration.ini");

fn cal() -> CalibrationConstants {
    CalibrationConstants::read_file(CALIBRATION).unwrap()
}

fn ctx() -> PrecisionContext {
    PrecisionContext::default()
}

#[test]
fn shipped_calibration_is_consistent() {
    let c = cal();
    let t3 = 128.0 * c.theta0 * c.c_u_growth.powi(2) / c.theta1.powi(2);
    assert!(((c.theta3 - t3) / t3).abs() < 1e-12);
    let back = CalibrationConstants::from_text(&c.to_text()).unwrap();
    assert_eq!(back, c);
    let drift: f64 = c.provenance["drift_theta3"].parse().unwrap();
    assert!(drift < 0.05);
}

#[test]
fn parameter_choice() {
    let c = cal();
    assert_eq!(choose_params(2.0, 1.0, &c).unwrap().t_prime, 1.0);
    let p = choose_params(0.25, 1.0, &c).unwrap();
    assert_eq!(p.t_prime, 0.25);
    assert_eq!(p.n_prime, (2.0 + 4.0 * c.theta3).ceil() as usize);
    for (t, g) in [(0.1, 1.0), (1.0, 1.0), (3.0, 0.5), (0.01, 2.0)] {
        let p = choose_params(t, g, &c).unwrap();
        let n = p.n_prime as f64;
        assert!((n - 1.0) * p.t_prime / 2.0 <= p.c_const && p.c_const <= n * p.t_prime / 2.0);
        let w = c.theta3 / (g * g * p.t_prime);
        assert!(2.0 + w <= n && n <= 4.0 + w);
        // integrability: growth of F_m is beaten by the decay of P on the real axis
        let rate = c.theta1 / 8.0 * (p.c_const / c.theta0).sqrt();
        assert!(c.c_u_growth / g < rate, "T={t}");
    }
}

#[test]
fn mollifier_bounds() {
    let c = cal();
    for p in [MollifierParams::new(1.0, 10, c.theta3).unwrap(), choose_params(1.0, 1.0, &c).unwrap()] {
        let at0 = log_mollifier(&p, Complex64::new(0.0, 0.0), &ctx()).unwrap();
        assert_eq!(at0.value.sign(), Sign::Positive);
        assert!(at0.value.ln_f64().abs() < 1e-30);
        let scale = 1.0 / p.c_const;
        for i in 0..12 {
            for j in 0..8 {
                let re = scale * (10f64.powf(i as f64 / 2.0) - 1.0) * if i % 2 == 0 { 1.0 } else { -1.0 };
                let im = scale * (10f64.powf(j as f64 / 2.0) - 1.0);
                let z = Complex64::new(re, im);
                let v = log_mollifier(&p, z, &ctx()).unwrap();
                if v.value.is_zero() {
                    continue;
                }
                let ln = v.value.ln_f64();
                assert!(ln <= 1e-12, "|P({z})| > 1: {ln}");
                // |e^{-izT'/2} P(z)| = |P(z)| e^{Im z T'/2}
                assert!(ln + im * p.t_prime / 2.0 <= z.norm() * p.t_prime / 2.0 + 1e-12);
            }
        }
        for i in 0..40 {
            let x = 10f64.powf(-2.0 + 8.0 * i as f64 / 39.0) / p.c_const;
            let v = log_mollifier(&p, Complex64::new(0.0, x), &ctx()).unwrap().value.ln_f64();
            assert!(v >= -c.theta2 * (p.c_const * x).sqrt() - 1e-12, "x={x}");
        }
    }
}

#[test]
fn theta2_ratio_is_bounded_on_small_mollifier() {
    let p = MollifierParams::new(1.0, 10, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..48 {
        let x = 10f64.powf(-2.0 + 8.0 * i as f64 / 47.0);
        let v = log_mollifier(&p, Complex64::new(0.0, x), &ctx()).unwrap().value.ln_f64();
        worst = worst.max(-v / (p.c_const * x).sqrt());
    }
    assert!(worst.is_finite() && worst > 0.0 && worst < cal().theta2 + 1e-9, "{worst}");
}

#[test]
fn weierstrass_interpolates() {
    let s = gen_quadratic(1.0, 0.0, 0.0, 24).unwrap();
    let p = analyze_gaps(&s, 1).unwrap();
    for m in [1, 4, 9] {
        for n in 1..=24 {
            let z = Complex64::new(0.0, -s.lambda(n));
            let v = log_weierstrass(&s, &p, m, z, &ctx()).unwrap();
            if n == m {
                assert!(v.value.ln_f64().abs() < 1e-30);
            } else {
                assert!(v.value.is_zero(), "m={m} n={n}");
            }
        }
    }
}

#[test]
fn weierstrass_at_origin() {
    let s = gen_quadratic(1.0, 0.0, 0.0, 10_000).unwrap();
    let p = GapProfile::uniform(1.0);
    let v = log_weierstrass(&s, &p, 1, Complex64::new(0.0, 0.0), &ctx()).unwrap();
    assert!(v.tail_bound < 1e-8);
    let f = v.value.to_f64();
    assert!((f - 0.867817177509905).abs() < 1e-8, "{f}");
}

#[test]
fn weierstrass_growth() {
    let c = cal();
    let s = gen_quadratic(1.0, 0.0, 0.0, 512).unwrap();
    let p = analyze_gaps(&s, 1).unwrap();
    for m in 1..=6 {
        for i in 0..30 {
            let x = 10f64.powf(-1.0 + 5.0 * i as f64 / 29.0);
            let v = log_weierstrass(&s, &p, m, Complex64::new(x, 0.0), &ctx()).unwrap().value.ln_f64();
            let bound = c.c_u_growth / p.gamma_min * (x.sqrt() + s.lambda(m).sqrt());
            assert!(v <= bound, "m={m} x={x}: {v} > {bound}");
        }
    }
}

#[test]
fn chain_on_small_grid() {
    let c = cal();
    let s = gen_quadratic(1.0, 0.0, 0.0, 32).unwrap();
    let p = analyze_gaps(&s, 1).unwrap();
    for t in [0.1, 1.0] {
        let params = choose_params(t, p.gamma_min_star, &c).unwrap();
        for m in [1, 2, 5] {
            let sai = sai_norm(&s, &p, m, t, &params, &ctx()).unwrap();
            assert_eq!(sai.sign(), Sign::Positive);
            assert!(sai.ln_f64().is_finite());
            let min = minimal_norm_growing(&s, t, m, &ctx()).unwrap().ln_f64();
            assert!(sai.ln_f64() >= min - 1e-6, "T={t} m={m}");
            let b = theoretical_b_star(&p, s.lambda(m), s.lambda(p.n_star_upper), t, &c).unwrap().ln_f64();
            assert!(2.0 * sai.ln_f64() <= b, "T={t} m={m}");
        }
    }
}

#[test]
fn single_mode_family() {
    let s = Spectrum::from_values(vec![1.0]).unwrap();
    let p = GapProfile::uniform(1.0);
    let params = choose_params(1.0, 1.0, &cal()).unwrap();
    let fam = sai_family(&s, &p, &[1], 1.0, &params, &ctx().with_target(1e-6)).unwrap();
    assert_eq!(fam.method, Method::Sai);
    assert!(fam.residuals[0][0] <= 1e-6);
}

#[test]
fn small_family_parseval_and_support() {
    let s = gen_quadratic(1.0, 0.0, 0.0, 16).unwrap();
    let p = analyze_gaps(&s, 1).unwrap();
    let params = choose_params(1.0, 1.0, &cal()).unwrap();
    let fam = sai_family(&s, &p, &[1, 2], 1.0, &params, &ctx().with_target(1e-6)).unwrap();
    assert!(fam.max_residual() <= 1e-6);
    assert_eq!(fam.residuals[0].len(), 2);
    let Coefficients::Sai(samples) = &fam.coefficients else { panic!("wrong representation") };
    for (i, smp) in samples.iter().enumerate() {
        let a = smp.parseval_norm.ln_f64();
        let b = smp.time_domain_norm.ln_f64();
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        assert!(smp.support_ratio <= 1e-6);
        let direct = sai_norm(&s, &p, fam.indices[i], 1.0, &params, &ctx()).unwrap().ln_f64();
        assert!((direct - fam.norms[i].ln_f64()).abs() < 1e-9);
    }
}

#[test]
fn b_star_without_defect() {
    let c = cal();
    let p = GapProfile::uniform(1.0);
    for (t, lm) in [(0.5, 4.0), (2.0, 9.0)] {
        let got = theoretical_b_star(&p, lm, 1.0, t, &c).unwrap().ln_f64();
        let rate: f64 = if t <= 1.0 { t.powf(-1.5) + 1.0 / (t * t) } else { 2.0 };
        let want = c.c_u_growth.ln() + 2f64.ln() + c.c_u_growth / lm.sqrt() + rate.ln() - 2.0 * lm * t
            + c.c_exponent / t
            + c.c_exponent * lm.sqrt();
        assert!((got - want).abs() < 1e-10, "T={t}: {got} vs {want}");
    }
}

#[test]
fn b_star_regime_boundary_probe() {
    let c = cal();
    let p = GapProfile::new(0.5, 2.0, 1.0, 1.0, 4, 4).unwrap();
    assert!(p.m_star > 0.0);
    let t0 = 1.0;
    let below = theoretical_b_star(&p, 9.0, 16.0, t0 * (1.0 - 1e-12), &c).unwrap().ln_f64();
    let above = theoretical_b_star(&p, 9.0, 16.0, t0 * (1.0 + 1e-12), &c).unwrap().ln_f64();
    assert!(below.is_finite() && above.is_finite());
    // no continuity is claimed across the switch; the jump is only recorded
    eprintln!("ln B* jump at T = 1/gamma*^2: {}", above - below);
    assert!(theoretical_b_star(&p, 0.0, 16.0, 1.0, &c).is_err());
}
