use dirichlet_zeros::divisor::{divisor_count, DivisorTable, SieveConfig};
use proptest::prelude::*;
use std::sync::OnceLock;

fn table() -> &'static DivisorTable {
    static T: OnceLock<DivisorTable> = OnceLock::new();
    T.get_or_init(|| DivisorTable::sieve(10_000_000).unwrap())
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

proptest! {
    #[test]
    fn multiplicative_on_coprime_pairs(m in 1u64..3000, n in 1u64..3000) {
        prop_assume!(gcd(m, n) == 1);
        let t = table();
        prop_assert_eq!(t.d(m * n), t.d(m) * t.d(n));
    }

    #[test]
    fn agrees_with_trial_division(n in 1u64..10_000_000) {
        prop_assert_eq!(table().d(n), divisor_count(n));
    }

    #[test]
    fn segment_length_does_not_matter(seg in 7usize..5000, x in 1u64..20_000) {
        let cfg = SieveConfig { segment_len: seg, ..SieveConfig::default() };
        let t = DivisorTable::sieve_with(x, &cfg).unwrap();
        for n in (1..=x).step_by(97) {
            prop_assert_eq!(t.d(n), table().d(n));
        }
    }
}

#[test]
fn partial_sums_stay_in_a_band() {
    let xs: Vec<f64> = (12..=28).map(|k| 10f64.powf(k as f64 / 4.0)).collect();
    for alpha in [0.0, 1.0, 2.0] {
        let beta = 2f64.powf(alpha) - 1.0;
        let sums = table().divisor_power_sums(alpha, &xs).unwrap();
        let normalized: Vec<f64> = xs.iter().zip(&sums).map(|(x, s)| s / (x * x.ln().powf(beta))).collect();
        let max = normalized.iter().copied().fold(f64::MIN, f64::max);
        let min = normalized.iter().copied().fold(f64::MAX, f64::min);
        assert!(max / min <= 2.0, "α = {alpha}: band {min}..{max}");
    }
}

#[test]
fn blocks_telescope_to_direct_sums() {
    // consecutive inclusive blocks share an endpoint only when log n hits a
    // block boundary exactly, which never happens for integers n > 1 here
    let t = table();
    let gamma = 1.0 / 3.0;
    let (j0, j1) = (600u64, 900u64);
    let blocks: f64 = (j0..=j1).filter_map(|j| t.block_sum(1.0, gamma, j).ok()).sum();
    let lo = (j0 as f64).powf(gamma).exp().ceil() as u64;
    let hi = ((j1 + 1) as f64).powf(gamma).exp().floor() as u64;
    let direct: f64 = (lo..=hi).map(|n| t.d(n) as f64 / n as f64).sum();
    assert!((blocks - direct).abs() <= 1e-10 * direct, "{blocks} vs {direct}");
}
