use biortho::spectra::{analyze_gaps, gen_bessel_like, gen_bessel_order, gen_quadratic, verify_gap_hypotheses};
use biortho::{Error, GapProfile, Spectrum};
use proptest::prelude::*;
use std::f64::consts::PI;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1e-300)
}

#[test]
fn quadratic_values() {
    assert_eq!(gen_quadratic(1.0, 0.0, 0.0, 4).unwrap().values(), &[1.0, 4.0, 9.0, 16.0]);
    assert_eq!(gen_quadratic(1.0, 1.0, 0.0, 3).unwrap().values(), &[2.0, 6.0, 12.0]);
    assert!(gen_quadratic(1.0, -3.0, 0.0, 2).is_err());
}

#[test]
fn quadratic_sqrt_gaps_are_sqrt_r() {
    let r = 2.5;
    let s = gen_quadratic(r, 0.0, 0.0, 50).unwrap();
    let p = analyze_gaps(&s, 1).unwrap();
    assert!(close(p.gamma_min, r.sqrt(), 1e-12));
    assert!(close(p.gamma_max, r.sqrt(), 1e-12));
}

#[test]
fn bessel_half_order_is_n_pi() {
    let s = gen_bessel_order(0.5, 1.0, 3).unwrap();
    for (n, v) in s.values().iter().enumerate() {
        let k = (n + 1) as f64;
        assert!(close(*v, k * k * PI * PI, 1e-12), "{v}");
    }
    let j0 = gen_bessel_order(0.0, 1.0, 1).unwrap();
    assert!(close(j0.lambda(1), 2.404825557695773f64.powi(2), 1e-12));
    assert!((j0.lambda(1) - 5.7832).abs() < 1e-4);
}

#[test]
fn bessel_like_asymptotic_gap() {
    let s = gen_bessel_like(1.0, 4.0, 200).unwrap();
    let p = analyze_gaps(&s, 1).unwrap();
    assert!(verify_gap_hypotheses(&s, &p));
    let v = s.values();
    let last = v[199].sqrt() - v[198].sqrt();
    assert!(close(last, 2.0 * PI, 1e-3), "{last}");
}

#[test]
fn gap_examples() {
    let s = Spectrum::from_values(vec![1.0, 4.0, 9.0, 16.0]).unwrap();
    let p = analyze_gaps(&s, 1).unwrap();
    assert_eq!((p.gamma_min, p.gamma_max, p.gamma_min_star, p.gamma_max_star), (1.0, 1.0, 1.0, 1.0));
    assert_eq!(p.m_star, 0.0);

    let s = Spectrum::from_values(vec![0.25, 4.0, 9.0]).unwrap();
    let p = analyze_gaps(&s, 2).unwrap();
    assert_eq!((p.gamma_min, p.gamma_max, p.gamma_min_star, p.gamma_max_star), (1.0, 1.5, 1.0, 1.0));
    assert_eq!(p.m_star, 0.0);

    let s = Spectrum::from_values(vec![0.01, 4.0, 9.0, 16.0]).unwrap();
    let p = analyze_gaps(&s, 2).unwrap();
    assert!(close(p.gamma_max, 1.9, 1e-12));
    assert_eq!((p.gamma_min, p.gamma_min_star, p.gamma_max_star), (1.0, 1.0, 1.0));

    assert!(matches!(analyze_gaps(&Spectrum::from_values(vec![1.0]).unwrap(), 1), Err(Error::TooShort { .. })));
}

#[test]
fn hypothesis_failures() {
    let s = Spectrum::from_values(vec![1.0, 4.0, 9.0]).unwrap();
    let p = analyze_gaps(&s, 1).unwrap();
    assert!(verify_gap_hypotheses(&s, &p));
    let wide = GapProfile::new(2.0, 2.0, 2.0, 2.0, 1, 1).unwrap();
    assert!(!verify_gap_hypotheses(&s, &wide));
    let narrow = GapProfile::new(1.0, 1.0, 1.0, 0.5, 1, 2).unwrap();
    assert!(!verify_gap_hypotheses(&s, &narrow));
}

#[test]
fn rejects_bad_values() {
    assert!(Spectrum::from_values(vec![1.0, 1.0]).is_err());
    assert!(Spectrum::from_values(vec![-1.0, 1.0]).is_err());
    assert!(Spectrum::from_values(vec![2.0, 1.0]).is_err());
}

#[test]
fn file_round_trip() {
    let s = gen_quadratic(1.5, 0.25, 0.0, 10).unwrap();
    let back = Spectrum::parse(&s.to_file_string(), None).unwrap();
    assert_eq!(back.values(), s.values());
    let t = Spectrum::parse("# header\n1.0\n\n  2.5 # inline\n", None).unwrap();
    assert_eq!(t.values(), &[1.0, 2.5]);
    assert!(Spectrum::parse("1.0\nabc\n", None).is_err());
}

proptest! {
    #[test]
    fn scale_covariance(r in 0.2f64..5.0, b in 0.0f64..3.0, s in 0.1f64..10.0, ns in 1usize..10) {
        let sp = gen_quadratic(r, b, 0.0, 20).unwrap();
        let p = analyze_gaps(&sp, ns).unwrap();
        let q = analyze_gaps(&sp.scaled(s).unwrap(), ns).unwrap();
        prop_assert!(close(q.gamma_min, s * p.gamma_min, 1e-9));
        prop_assert!(close(q.gamma_max, s * p.gamma_max, 1e-9));
        prop_assert!(close(q.gamma_min_star, s * p.gamma_min_star, 1e-9));
        prop_assert!(close(q.gamma_max_star, s * p.gamma_max_star, 1e-9));
        prop_assert!((q.m_star - p.m_star).abs() <= 1e-9 * (1.0 + p.m_star));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_spectra_satisfy_measured_profile(
        r in 0.1f64..10.0, b in 0.0f64..5.0, c in 0.0f64..5.0, n in 2usize..40, alpha in 0.05f64..1.95,
    ) {
        let q = gen_quadratic(r, b, c, n).unwrap();
        let ns = 1 + n / 3;
        prop_assert!(verify_gap_hypotheses(&q, &analyze_gaps(&q, ns.min(n - 1)).unwrap()));
        let bl = gen_bessel_like(alpha, r, n).unwrap();
        prop_assert!(verify_gap_hypotheses(&bl, &analyze_gaps(&bl, 1).unwrap()));
    }
}
