use biortho::gram::{
    distance, distance_converged, gram_matrix, minimal_family, minimal_norm_growing, muntz_infinite_distance, Method,
};
use biortho::spectra::gen_quadratic;
use biortho::{PrecisionContext, Spectrum};
use proptest::prelude::*;
use rug::Float;

fn ctx() -> PrecisionContext {
    PrecisionContext::default()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `d^2` for two exponents via the 2x2 Schur complement, independently at `bits`.
fn schur_2x2(l1: u32, l2: u32, t: u32, bits: u32) -> Float {
    let entry = |s: u32| {
        let e = Float::with_val(bits, -(Float::with_val(bits, s * t))).exp();
        Float::with_val(bits, 1 - e) / s
    };
    let a = entry(2 * l1);
    let b = entry(l1 + l2);
    let c = entry(2 * l2);
    a - Float::with_val(bits, b.square_ref()) / c
}

#[test]
fn gram_entries() {
    let s = Spectrum::from_values(vec![1.0, 2.0]).unwrap();
    let g = gram_matrix(&s, 1.0, 200).to_f64();
    let want = [[0.432332358381693, 0.316737643877379], [0.316737643877379, 0.245421090277816]];
    for i in 0..2 {
        for j in 0..2 {
            assert!(rel(g[i][j], want[i][j]) < 1e-13, "{i}{j} {}", g[i][j]);
        }
    }
    let z = Spectrum::from_values(vec![0.0]).unwrap();
    assert_eq!(gram_matrix(&z, 3.5, 100).to_f64(), vec![vec![3.5]]);
    let far = gram_matrix(&s, 200.0, 100).to_f64();
    assert!(rel(far[0][1], 1.0 / 3.0) < 1e-15);
    assert!(rel(far[1][1], 0.25) < 1e-15);
}

#[test]
fn two_by_two_distance_matches_independent_schur() {
    let s = Spectrum::from_values(vec![1.0, 2.0]).unwrap();
    let r = distance(&s, 1.0, 1, &ctx()).unwrap();
    let d2 = Float::with_val(400, r.d.ln() * 2u32).exp();
    let reference = schur_2x2(1, 2, 1, 400);
    let err = Float::with_val(400, &d2 - &reference).abs() / &reference;
    assert!(err.to_f64() < 1e-30, "{}", err.to_f64());
    assert!((reference.to_f64() - 0.0235544).abs() < 1e-7);
    assert!((r.d.to_f64() - 0.153474).abs() < 1e-6);
    assert!(r.residual <= ctx().residual_target);
}

#[test]
fn single_exponential() {
    for t in [0.1, 1.0, 7.0] {
        let s = Spectrum::from_values(vec![1.0]).unwrap();
        let d = distance(&s, t, 1, &ctx()).unwrap().d.to_f64();
        assert!(rel(d, ((1.0 - (-2.0 * t).exp()) / 2.0).sqrt()) < 1e-14);
    }
}

#[test]
fn long_horizon_matches_muntz() {
    let s = Spectrum::from_values(vec![1.0, 2.0]).unwrap();
    let d = distance(&s, 50.0, 1, &ctx()).unwrap().d.to_f64();
    assert!(rel(d, 1.0 / (3.0 * 2f64.sqrt())) < 1e-6);

    let q = gen_quadratic(1.0, 0.0, 0.0, 12).unwrap();
    for m in [1, 3, 6] {
        let d = distance(&q, 25.0, m, &ctx()).unwrap().d;
        let inf = muntz_infinite_distance(&q, m).unwrap();
        assert!((d.ln_f64() - inf.ln_f64()).abs() < 1e-6, "m={m}");
    }
}

#[test]
fn muntz_examples() {
    let s = Spectrum::from_values(vec![1.0, 2.0]).unwrap();
    assert!(rel(muntz_infinite_distance(&s, 1).unwrap().to_f64(), 0.235702260395516) < 1e-13);
    let one = Spectrum::from_values(vec![1.0]).unwrap();
    assert!(rel(muntz_infinite_distance(&one, 1).unwrap().to_f64(), 0.5f64.sqrt()) < 1e-14);
    let three = Spectrum::from_values(vec![1.0, 2.0, 3.0]).unwrap();
    assert!(rel(muntz_infinite_distance(&three, 2).unwrap().to_f64(), 1.0 / 30.0) < 1e-13);
    let zero = Spectrum::from_values(vec![0.0, 1.0]).unwrap();
    assert!(muntz_infinite_distance(&zero, 1).is_err());
}

#[test]
fn minimal_family_norms() {
    let s = Spectrum::from_values(vec![1.0, 2.0]).unwrap();
    let fam = minimal_family(&s, 1.0, &ctx()).unwrap();
    assert_eq!(fam.method, Method::Minimal);
    assert!((fam.norms[0].to_f64() - 6.5159).abs() < 1e-3);
    assert!(fam.max_residual() <= fam.tolerance);
    for m in 1..=2 {
        let d = distance(&s, 1.0, m, &ctx()).unwrap().d;
        assert!((fam.norms[m - 1].ln_f64() + d.ln_f64()).abs() < 1e-14);
    }

    let one = Spectrum::from_values(vec![3.0]).unwrap();
    let fam = minimal_family(&one, 0.5, &ctx()).unwrap();
    assert!(fam.max_residual() < 1e-50);
    let norm2 = (1.0 - (-3.0f64).exp()) / 6.0;
    assert!(rel(fam.norms[0].to_f64(), 1.0 / norm2.sqrt()) < 1e-14);
}

#[test]
fn minimal_growing_norm() {
    let s = Spectrum::from_values(vec![1.0, 2.0]).unwrap();
    let v = minimal_norm_growing(&s, 1.0, 1, &ctx()).unwrap().to_f64();
    assert!((v - 2.3970).abs() < 1e-3);
    let z = Spectrum::from_values(vec![0.0]).unwrap();
    assert!(rel(minimal_norm_growing(&z, 4.0, 1, &ctx()).unwrap().to_f64(), 0.5) < 1e-14);
    let q = gen_quadratic(1.0, 0.0, 0.0, 10).unwrap();
    let a = minimal_norm_growing(&q, 0.5, 2, &ctx()).unwrap().ln_f64();
    let b = minimal_norm_growing(&q, 1.0, 2, &ctx()).unwrap().ln_f64();
    assert!(a > b);
}

#[test]
fn truncation_convergence() {
    let geometric = Spectrum::from_values((1..=128).map(|n| 2f64.powi(n)).collect()).unwrap();
    let c = distance_converged(&geometric, 1.0, 2, &ctx(), 8, 1e-8).unwrap();
    assert!(c.converged);
    assert!(c.truncation <= 64);

    // sum 1/lambda_k has an O(1/N) tail, so d keeps moving and the protocol reports it
    let q = gen_quadratic(1.0, 0.0, 0.0, 64).unwrap();
    let c = distance_converged(&q, 1.0, 2, &ctx(), 8, 1e-8).unwrap();
    assert!(!c.converged);
    assert_eq!(c.truncation, 64);
    let lns: Vec<f64> = c.history.iter().map(|h| h.1).collect();
    assert!(lns.windows(2).all(|w| w[1] <= w[0] + 1e-15));
}

#[test]
fn ill_conditioned_case_escalates_or_starts_high() {
    let q = gen_quadratic(1.0, 0.0, 0.0, 48).unwrap();
    let r = distance(&q, 0.05, 10, &ctx()).unwrap();
    assert!(r.residual <= ctx().residual_target);
    assert!(r.precision_used >= 50);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn monotone_in_horizon(m in 1usize..8, t1 in 0.05f64..3.0, f in 1.01f64..4.0) {
        let q = gen_quadratic(1.0, 0.0, 0.0, 16).unwrap();
        let a = distance(&q, t1, m, &ctx()).unwrap().d.ln_f64();
        let b = distance(&q, t1 * f, m, &ctx()).unwrap().d.ln_f64();
        prop_assert!(a <= b + 1e-14);
    }

    #[test]
    fn monotone_in_truncation(m in 1usize..6, t in 0.1f64..2.0, n in 7usize..16) {
        let q = gen_quadratic(1.0, 0.5, 0.0, 16).unwrap();
        let a = distance(&q.truncate(n).unwrap(), t, m, &ctx()).unwrap().d.ln_f64();
        let b = distance(&q.truncate(n + 1).unwrap(), t, m, &ctx()).unwrap().d.ln_f64();
        prop_assert!(b <= a + 1e-14);
    }
}
