use std::sync::OnceLock;

use dirichlet_zeros::conditions::{
    blaschke_sum, epsilon_blaschke_sum, gamma_blaschke_sum, in_cone, weight_admissibility, SequenceSource,
};
use dirichlet_zeros::divisor::{DivisorTable, WeightSpec};
use dirichlet_zeros::spaces::{HalfPlanePoint, ZeroSequence};
use proptest::prelude::*;

fn table() -> &'static DivisorTable {
    static T: OnceLock<DivisorTable> = OnceLock::new();
    T.get_or_init(|| DivisorTable::sieve(10_000_000).unwrap())
}

fn sequence(points: &[(f64, f64)]) -> ZeroSequence {
    ZeroSequence::new(points.iter().map(|&(e, t)| HalfPlanePoint::from_excess(e, t).unwrap()).collect())
}

proptest! {
    #[test]
    fn sums_are_ordered_on_unit_excesses(pts in prop::collection::vec((1e-6f64..1.0, -10.0f64..10.0), 1..50),
                                         eps in 0.01f64..2.0, gamma in 0.01f64..0.99) {
        let s = sequence(&pts);
        let src = SequenceSource::Finite(&s);
        let b = blaschke_sum(&src).value;
        let e = epsilon_blaschke_sum(&src, eps).unwrap().value;
        let g = gamma_blaschke_sum(&src, gamma).unwrap().value;
        prop_assert!(g >= b * (1.0 - 1e-12));
        prop_assert!(b >= e * (1.0 - 1e-12));
    }

    #[test]
    fn cone_membership_is_monotone(pts in prop::collection::vec((1e-3f64..3.0, -10.0f64..10.0), 1..30),
                                   t0 in -5.0f64..5.0, c in 0.01f64..20.0, k in 1.0f64..10.0) {
        let s = sequence(&pts);
        if in_cone(&s, t0, c).unwrap() {
            prop_assert!(in_cone(&s, t0, c * k).unwrap());
        }
    }

    #[test]
    fn gamma_sum_tends_to_blaschke(pts in prop::collection::vec((1e-3f64..3.0, -1.0f64..1.0), 1..20)) {
        let s = sequence(&pts);
        let src = SequenceSource::Finite(&s);
        let b = blaschke_sum(&src).value;
        let g = gamma_blaschke_sum(&src, 1e-9).unwrap().value;
        prop_assert!((g - b).abs() <= 1e-6 * b.max(1.0));
    }
}

#[test]
fn divisor_weights_agree_with_block_fit() {
    let cps: Vec<f64> = (3..=7).map(|k| 10f64.powi(k)).collect();
    for (alpha, gamma, lo, hi) in [(1.0, 1.0 / 3.0, 500, 4000), (2.0, 0.25, 1000, 10_000)] {
        let beta = 2f64.powf(alpha) - 1.0;
        let r = weight_admissibility(&WeightSpec::divisor_power(alpha), beta, table(), &cps, gamma, (lo, hi)).unwrap();
        let fit = table().fit_block_exponent(alpha, gamma, lo, hi).unwrap();
        assert!((r.fitted_slope.unwrap() - fit).abs() < 1e-9);
        assert!(r.passed(), "{r:?}");
    }
}

#[test]
fn admissibility_rejects_large_gamma() {
    let cps = [1e3, 1e4];
    assert!(weight_admissibility(&WeightSpec::log_power(1.0), 1.0, table(), &cps, 0.5, (10, 20)).is_err());
}
