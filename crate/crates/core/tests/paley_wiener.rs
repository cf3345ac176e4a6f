use std::sync::Arc;

use dirichlet_zeros::paley_wiener::{laplace_invert, laplace_invert_native, FftSpec, LaplaceOf, Profile};
use dirichlet_zeros::spaces::{AnalyticHandle, FnHandle, HalfPlaneFn};
use num_complex::Complex64;
use proptest::prelude::*;

fn bump(lo: f64, hi: f64) -> Profile {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    Profile::from_real_fn(|x| (1.0 - ((x - mid) / half).powi(2)).max(0.0).powi(3), lo, hi, 2000, lo).unwrap()
}

fn relative_gap(a: &Profile, b: &Profile, beta: f64) -> f64 {
    a.sub(b).unwrap().l2beta_norm(beta).unwrap() / a.l2beta_norm(beta).unwrap()
}

#[test]
fn transform_of_xi_exp() {
    let p = Profile::from_real_fn(|x| x * (-x).exp(), 0.0, 40.0, 8000, 0.0).unwrap();
    let s = Complex64::new(1.5, 0.0);
    assert!((p.laplace(s) - 0.25).norm() < 1e-4);
    assert!(Profile::zero_on(0.0, 1.0).laplace(s).norm() == 0.0);
}

#[test]
fn inversion_round_trip() {
    let p = bump(3.0, 20.0);
    let f = LaplaceOf(Arc::new(p.clone()));
    let q = laplace_invert_native(&f, 3.0, 25.0, &FftSpec::default()).unwrap();
    let gap = relative_gap(&p, &q, 1.0);
    assert!(gap < 0.05, "{gap}");
}

#[test]
fn inversion_onto_a_grid_and_of_zero() {
    let p = bump(4.0, 9.0);
    let grid: Vec<f64> = (0..=500).map(|k| 4.0 + 6.0 * k as f64 / 500.0).collect();
    let q = laplace_invert(&LaplaceOf(Arc::new(p.clone())), &grid, 4.0, &FftSpec::default()).unwrap();
    assert_eq!(q.xi().first(), Some(&4.0));
    assert!(relative_gap(&p, &q, 1.0) < 0.05);
    let z = laplace_invert_native(&AnalyticHandle::Zero, 0.0, 5.0, &FftSpec::default()).unwrap();
    assert!(z.values().iter().all(|v| v.norm() == 0.0));
}

#[test]
fn multiplying_by_two_to_the_minus_s_shifts_right() {
    let p = bump(3.0, 8.0);
    let base = LaplaceOf(Arc::new(p.clone()));
    let shifted = FnHandle(move |s: Complex64| (-(s - 0.5) * 2f64.ln()).exp() * base.eval(s));
    let spec = FftSpec::default();
    let q = laplace_invert_native(&shifted, 0.0, 12.0, &spec).unwrap();
    let peak = |prof: &Profile| {
        prof.xi()
            .iter()
            .zip(prof.values())
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(x, _)| *x)
            .unwrap()
    };
    assert!((peak(&q) - peak(&p) - 2f64.ln()).abs() <= spec.xi_step() + 1e-9);
}

#[test]
fn single_cell_closed_form() {
    // φ = 1 + ξ on [0, 1]: ∫ (1+ξ) e^{−zξ} = (1 − 2e^{−z})/z + (1 − e^{−z})/z²
    let p = Profile::new(vec![0.0, 1.0], vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)], 0.0).unwrap();
    for s in [Complex64::new(0.9, 0.3), Complex64::new(2.5, -4.0), Complex64::new(0.55, 10.0)] {
        let z = s - 0.5;
        let exact = (1.0 - 2.0 * (-z).exp()) / z + (1.0 - (-z).exp()) / (z * z);
        assert!((p.laplace(s) - exact).norm() < 1e-12 * exact.norm().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplace_is_linear(a in prop::collection::vec(-3.0f64..3.0, 4..12),
                         b in prop::collection::vec(-3.0f64..3.0, 4..12),
                         sigma in 0.55f64..5.0, t in -30.0f64..30.0) {
        let mk = |v: &Vec<f64>, w: f64| {
            let xi: Vec<f64> = (0..v.len()).map(|k| w * k as f64 / (v.len() - 1) as f64).collect();
            Profile::new(xi, v.iter().map(|&x| Complex64::new(x, 0.0)).collect(), 0.0).unwrap()
        };
        let (p, q) = (mk(&a, 4.0), mk(&b, 6.5));
        let s = Complex64::new(sigma, t);
        let lhs = p.add(&q).unwrap().laplace(s);
        let rhs = p.laplace(s) + q.laplace(s);
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
    }

    #[test]
    fn csv_round_trip(v in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..30)) {
        let xi: Vec<f64> = (0..v.len()).map(|k| 1.0 + 0.37 * k as f64).collect();
        let p = Profile::new(xi, v.iter().map(|&(a, b)| Complex64::new(a, b)).collect(), 1.0).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let q = Profile::read_csv(buf.as_slice(), Some(1.0)).unwrap();
        prop_assert_eq!(p.xi(), q.xi());
        prop_assert_eq!(p.values(), q.values());
    }
}
