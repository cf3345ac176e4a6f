use std::sync::OnceLock;

use dirichlet_zeros::discretization::{discretize, BlockPartition};
use dirichlet_zeros::divisor::{DivisorTable, WeightSpec};
use dirichlet_zeros::paley_wiener::Profile;
use dirichlet_zeros::verify::random_piecewise_linear;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn table() -> &'static DivisorTable {
    static T: OnceLock<DivisorTable> = OnceLock::new();
    T.get_or_init(|| DivisorTable::sieve(2_000_000).unwrap())
}

fn partition(n: u64) -> &'static BlockPartition {
    static P: OnceLock<Vec<(u64, BlockPartition)>> = OnceLock::new();
    let all = P.get_or_init(|| {
        [100u64, 400, 1600, 4000]
            .iter()
            .map(|&n| (n, BlockPartition::build_to_table(1.0, n, table()).unwrap()))
            .collect()
    });
    &all.iter().find(|(m, _)| *m == n).unwrap().1
}

#[test]
fn endpoint_consistency_and_bounded_a_j() {
    let t = table();
    for n in [100u64, 4000] {
        let part = partition(n);
        let b = part.beta + 1.0;
        for block in &part.blocks {
            let lhs: f64 = block.xi.windows(2).map(|w| (w[1].powf(b) - w[0].powf(b)) / b).sum();
            let rhs: f64 = (block.n_start..block.n_end).map(|m| t.d(m) as f64 / m as f64).sum::<f64>() * block.a_j;
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "block {}: {lhs} vs {rhs}", block.j);
        }
        assert!(part.a_spread() <= 10.0, "A_j spread {}", part.a_spread());
    }
}

#[test]
fn norm_contract_across_n() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let shapes: Vec<Profile> = (0..20).map(|_| random_piecewise_linear(&mut rng, 0.0, 5.0, 7).unwrap()).collect();
    let w = WeightSpec::divisor_power(1.0);
    let mut ratios = Vec::new();
    for n in [100u64, 400, 1600, 4000] {
        let part = partition(n);
        for s in &shapes {
            let phi = s.shift(part.log_n()).unwrap();
            let f = discretize(&phi, part).unwrap();
            ratios.push(f.dirichlet_norm(&w, Some(table())).unwrap() / phi.l2beta_norm(1.0).unwrap());
        }
    }
    let max = ratios.iter().copied().fold(f64::MIN, f64::max);
    let min = ratios.iter().copied().fold(f64::MAX, f64::min);
    assert!(max / min <= 3.0, "{min}..{max}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn discretize_is_linear(seed in 0u64..1000, c in -3.0f64..3.0) {
        let part = partition(400);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_piecewise_linear(&mut rng, part.log_n(), 4.0, 5).unwrap();
        let q = random_piecewise_linear(&mut rng, part.log_n() + 0.3, 3.0, 4).unwrap();
        let cc = Complex64::new(c, 0.5);
        let lhs = discretize(&p.combine(cc, &q, Complex64::new(1.0, 0.0)).unwrap(), part).unwrap();
        let rhs = discretize(&p, part).unwrap().scale(cc).add(&discretize(&q, part).unwrap());
        let diff = lhs.add(&rhs.scale(Complex64::new(-1.0, 0.0)));
        prop_assert!(diff.l2_norm_sq().sqrt() <= 1e-10 * (1.0 + rhs.l2_norm_sq().sqrt()));
    }
}
