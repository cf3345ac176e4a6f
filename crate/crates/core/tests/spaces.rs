use std::sync::Arc;

use dirichlet_zeros::divisor::WeightSpec;
use dirichlet_zeros::paley_wiener::{LaplaceOf, Profile};
use dirichlet_zeros::quadrature::QuadratureSpec;
use dirichlet_zeros::spaces::{
    bergman_norm, hardy_norm, helson_check, random_polynomial, AnalyticHandle, DirichletPolynomial, MonteCarloSpec,
    ZeroSequence,
};
use dirichlet_zeros::verify::random_piecewise_linear;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use statrs::function::gamma::gamma;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn polynomial(coeffs: Vec<(f64, f64)>) -> DirichletPolynomial {
    DirichletPolynomial::new(1, coeffs.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap()
}

// Monte Carlo checks: a fixed runner seed keeps the 64 draws reproducible
proptest! {
    #![proptest_config(ProptestConfig { rng_seed: RngSeed::Fixed(20), ..ProptestConfig::with_cases(64) })]

    #[test]
    fn parseval_at_alpha_zero(coeffs in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..40), seed in 0u64..1000) {
        let f = polynomial(coeffs);
        let d0 = f.dirichlet_norm(&WeightSpec::divisor_power(0.0), None).unwrap();
        let h2 = hardy_norm(&f, 2.0, &MonteCarloSpec { seed, ..MonteCarloSpec::default() }).unwrap();
        prop_assert!((d0 - h2.estimate).abs() <= 4.0 * h2.std_error + 1e-9 * d0);
    }

    #[test]
    fn helson_on_random_polynomials(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_polynomial(&mut rng, 64);
        let r = helson_check(&f, &MonteCarloSpec { seed, samples: 5000, ..MonteCarloSpec::default() }).unwrap();
        prop_assert!(r.holds, "{:?}", r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_round_trip(pairs in prop::collection::btree_map(1u64..5000, (-1e3f64..1e3, -1e3f64..1e3), 0..30)) {
        let f = DirichletPolynomial::from_pairs(pairs.into_iter().map(|(n, (a, b))| (n, Complex64::new(a, b)))).unwrap();
        let back = DirichletPolynomial::from_json(&f.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.trimmed(), f.trimmed());
    }

    #[test]
    fn evaluation_is_linear(a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..30),
                            b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..30),
                            sigma in 0.51f64..4.0, t in -20.0f64..20.0) {
        let (f, g) = (polynomial(a), polynomial(b));
        let s = Complex64::new(sigma, t);
        let lhs = f.add(&g).evaluate(s);
        let rhs = f.evaluate(s) + g.evaluate(s);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }
}

#[test]
fn zero_sequence_json_keeps_multiplicity() {
    let s = ZeroSequence::from_json(r#"[{"sigma": 0.8, "t": 1.5, "multiplicity": 3}, {"sigma": 2.0, "t": 0.0, "multiplicity": 1}]"#).unwrap();
    assert_eq!(s.len(), 4);
    let back = ZeroSequence::from_json(&s.to_json().unwrap()).unwrap();
    assert_eq!(back.distinct(), s.distinct());
}

#[test]
fn bergman_norm_homogeneity_and_triangle() {
    let quad = QuadratureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..4 {
        let p = random_piecewise_linear(&mut rng, 0.0, 4.0, 5).unwrap();
        let q = random_piecewise_linear(&mut rng, 0.5, 3.0, 4).unwrap();
        let f = AnalyticHandle::laplace_of(p.clone());
        let g = AnalyticHandle::laplace_of(q.clone());
        let nf = bergman_norm(&f, 1.0, &quad).unwrap().norm;
        let ng = bergman_norm(&g, 1.0, &quad).unwrap().norm;
        let c = Complex64::new(-1.5, 2.0);
        let ncf = bergman_norm(&f.clone().scaled(c), 1.0, &quad).unwrap().norm;
        assert!((ncf / (c.norm() * nf) - 1.0).abs() < 1e-9);
        let nsum = bergman_norm(&f.plus(g), 1.0, &quad).unwrap().norm;
        assert!(nsum <= (nf + ng) * (1.0 + 1e-2));
    }
}

#[test]
fn laplace_isometry_on_random_profiles() {
    let quad = QuadratureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for beta in [0.5, 1.0, 3.0] {
        for _ in 0..20 {
            // a linear ramp at ξ = 0 has infinite norm once β ≥ 2
            let lo = if beta < 2.0 { 0.0 } else { 0.5 };
            let p = random_piecewise_linear(&mut rng, lo, 5.0, 6).unwrap();
            let a = p.l2beta_norm(beta).unwrap();
            let b = bergman_norm(&LaplaceOf(Arc::new(p)), beta, &quad).unwrap().norm;
            assert!((b / a - 1.0).abs() < 0.02, "β = {beta}: {b} vs {a}");
        }
    }
}

#[test]
fn profile_norm_of_exponential_family() {
    // φ = ξ^k e^{−ξ}: (2πΓ(β)/2^β) ∫ ξ^{2k−β} e^{−2ξ} = 2πΓ(β)Γ(2k−β+1)/2^{2k+1}
    for (k, beta) in [(1, 1.0), (2, 1.0), (2, 1.5)] {
        let p = Profile::from_real_fn(|x| x.powi(k) * (-x).exp(), 0.0, 45.0, 20_000, 0.0).unwrap();
        let exact = 2.0 * std::f64::consts::PI * gamma(beta) * gamma(2.0 * k as f64 - beta + 1.0) / 2f64.powi(2 * k + 1);
        let got = p.l2beta_norm_sq(beta).unwrap();
        assert!((got / exact - 1.0).abs() < 1e-4, "k = {k}, β = {beta}: {got} vs {exact}");
    }
}
