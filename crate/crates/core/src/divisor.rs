//! Divisor-function arithmetic.
//!
//! [`DivisorTable`] holds d(n) for every n up to a sieve bound. On top of it
//! this module computes the power sums D_α(x) = Σ_{n≤x} d(n)^α and the
//! logarithmic block sums
//!
//! ```text
//! Σ_{j^γ ≤ log n ≤ (j+1)^γ} d(n)^α / n  ≍  j^{γ 2^α − 1}
//! ```
//!
//! which control the block partition used by the discretization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::KahanSum;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Sieve parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SieveConfig {
    /// Length of one sieve segment.
    pub segment_len: usize,
    /// Largest admissible `x_max`; bounds the memory held by the table.
    pub max_x: u64,
}

impl Default for SieveConfig {
    fn default() -> Self {
        Self {
            segment_len: 1 << 20,
            max_x: 200_000_000,
        }
    }
}

/// Exact divisor counts d(n) for 1 ≤ n ≤ x_max. Immutable once built.
#[derive(Debug, Clone)]
pub struct DivisorTable {
    // d[0] is unused.
    d: Vec<u16>,
    max_count: u32,
}

impl DivisorTable {
    /// Sieve with the default configuration.
    pub fn sieve(x_max: u64) -> Result<Self> {
        Self::sieve_with(x_max, &SieveConfig::default())
    }

    /// Segmented divisor sieve. Inside a segment every divisor pair
    /// (k, n/k) with k ≤ √n is counted once, so the work per segment is
    /// O(len · log √hi) and the working set stays inside one segment.
    pub fn sieve_with(x_max: u64, cfg: &SieveConfig) -> Result<Self> {
        if x_max == 0 {
            return Err(Error::InvalidParameter("x_max must be at least 1".into()));
        }
        if x_max > cfg.max_x {
            return Err(Error::Capacity {
                requested: x_max,
                limit: cfg.max_x,
            });
        }
        if cfg.segment_len == 0 {
            return Err(Error::InvalidParameter("segment_len must be positive".into()));
        }
        let x = x_max as usize;
        let mut d = vec![0u16; x + 1];
        let seg = cfg.segment_len;
        let mut lo = 1usize;
        while lo <= x {
            let hi = (lo + seg - 1).min(x);
            let buf = &mut d[lo..=hi];
            let kmax = isqrt(hi as u64) as usize;
            for k in 1..=kmax {
                let sq = k * k;
                let first = sq.max(lo.div_ceil(k) * k);
                let mut m = first;
                while m <= hi {
                    buf[m - lo] += 2;
                    m += k;
                }
                if sq >= lo && sq <= hi {
                    buf[sq - lo] -= 1;
                }
            }
            lo = hi + 1;
        }
        let max_count = d[1..].iter().copied().max().unwrap_or(1) as u32;
        Ok(Self { d, max_count })
    }

    pub fn x_max(&self) -> u64 {
        (self.d.len() - 1) as u64
    }

    /// d(n), or `None` when n is 0 or beyond the table.
    #[inline]
    pub fn get(&self, n: u64) -> Option<u32> {
        if n == 0 {
            return None;
        }
        self.d.get(n as usize).map(|&v| v as u32)
    }

    /// d(n) for n inside the table. Panics outside it.
    #[inline]
    pub fn d(&self, n: u64) -> u32 {
        self.d[n as usize] as u32
    }

    /// Largest divisor count in the table.
    pub fn max_count(&self) -> u32 {
        self.max_count
    }

    /// Lookup table for d(n)^α over all counts that occur in the table.
    pub fn powers(&self, alpha: f64) -> DivisorPowers {
        DivisorPowers::new(alpha, self.max_count())
    }

    /// D_α(x) = Σ_{n≤x} d(n)^α.
    pub fn divisor_power_sum(&self, alpha: f64, x: f64) -> Result<f64> {
        let n = self.check_x(x)?;
        let pw = self.powers(alpha);
        Ok((1..=n).map(|k| pw.get(self.d(k))).collect::<KahanSum>().value())
    }

    /// D_α at several increasing checkpoints in a single sweep.
    pub fn divisor_power_sums(&self, alpha: f64, checkpoints: &[f64]) -> Result<Vec<f64>> {
        let pw = self.powers(alpha);
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut acc = KahanSum::new();
        let mut next = 1u64;
        for &x in checkpoints {
            let n = self.check_x(x)?;
            if n + 1 < next {
                return Err(Error::InvalidParameter("checkpoints must be non-decreasing".into()));
            }
            while next <= n {
                acc.add(pw.get(self.d(next)));
                next += 1;
            }
            out.push(acc.value());
        }
        Ok(out)
    }

    /// Σ_{j^γ ≤ log n ≤ (j+1)^γ} d(n)^α / n with both endpoints inclusive.
    ///
    /// For α = 0 the weights are identically one and blocks reaching past the
    /// table are summed with the asymptotic expansion of the harmonic numbers.
    pub fn block_sum(&self, alpha: f64, gamma: f64, j: u64) -> Result<f64> {
        check_gamma(gamma)?;
        let (lo, hi) = block_range(gamma, j).ok_or(Error::EmptyBlock { j })?;
        if hi > self.x_max() {
            if alpha == 0.0 {
                return Ok(harmonic_range(lo, hi));
            }
            return Err(Error::OutOfRange {
                what: "block end",
                value: hi as f64,
                x_max: self.x_max(),
            });
        }
        let pw = self.powers(alpha);
        Ok(self.sum_range(lo, hi, |n, d| pw.get(d) / n as f64))
    }

    /// Σ_{j^γ ≤ log n ≤ (j+1)^γ} w(n) / n for an arbitrary weight.
    pub fn weighted_block_sum(&self, gamma: f64, j: u64, w: impl Fn(u64, u32) -> f64) -> Result<f64> {
        check_gamma(gamma)?;
        let (lo, hi) = block_range(gamma, j).ok_or(Error::EmptyBlock { j })?;
        if hi > self.x_max() {
            return Err(Error::OutOfRange {
                what: "block end",
                value: hi as f64,
                x_max: self.x_max(),
            });
        }
        Ok(self.sum_range(lo, hi, |n, d| w(n, d) / n as f64))
    }

    /// Block sums for every j in `j_min..=j_max`; `None` marks an empty block.
    pub fn block_sums(&self, alpha: f64, gamma: f64, j_min: u64, j_max: u64) -> Result<Vec<(u64, Option<f64>)>> {
        check_gamma(gamma)?;
        (j_min..=j_max)
            .map(|j| match self.block_sum(alpha, gamma, j) {
                Ok(v) => Ok((j, Some(v))),
                Err(Error::EmptyBlock { .. }) => Ok((j, None)),
                Err(e) => Err(e),
            })
            .collect()
    }

    /// Least-squares slope of log(block_sum) against log(j) over the
    /// nonempty blocks in `j_min..=j_max`. Expected value: γ·2^α − 1.
    pub fn fit_block_exponent(&self, alpha: f64, gamma: f64, j_min: u64, j_max: u64) -> Result<f64> {
        let sums = self.block_sums(alpha, gamma, j_min, j_max)?;
        let points: Vec<(f64, f64)> = sums
            .into_iter()
            .filter_map(|(j, v)| v.map(|v| ((j as f64).ln(), v.ln())))
            .collect();
        log_log_slope(&points)
    }

    /// Σ f(n, d(n)) over lo..=hi with compensated accumulation.
    pub(crate) fn sum_range(&self, lo: u64, hi: u64, f: impl Fn(u64, u32) -> f64) -> f64 {
        (lo..=hi).map(|n| f(n, self.d(n))).collect::<KahanSum>().value()
    }

    pub(crate) fn check_x(&self, x: f64) -> Result<u64> {
        if !(x >= 1.0) || x.floor() > self.x_max() as f64 {
            return Err(Error::OutOfRange {
                what: "x",
                value: x,
                x_max: self.x_max(),
            });
        }
        Ok(x.floor() as u64)
    }
}

/// d^α for every count d ≤ max, computed once.
#[derive(Debug, Clone)]
pub struct DivisorPowers {
    alpha: f64,
    lut: Vec<f64>,
}

impl DivisorPowers {
    pub fn new(alpha: f64, max_count: u32) -> Self {
        let lut = (0..=max_count).map(|d| divisor_weight(d, alpha)).collect();
        Self { alpha, lut }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn get(&self, d: u32) -> f64 {
        match self.lut.get(d as usize) {
            Some(&v) => v,
            None => divisor_weight(d, self.alpha),
        }
    }
}

/// d^α: exact integer powers for α ∈ {0, 1, 2, 3}, exp(α log d) otherwise.
pub fn divisor_weight(d: u32, alpha: f64) -> f64 {
    if alpha >= 0.0 && alpha <= 3.0 && alpha.fract() == 0.0 {
        let d = d as u64;
        return d.pow(alpha as u32) as f64;
    }
    (alpha * (d as f64).ln()).exp()
}

/// Integers n with j^γ ≤ log n ≤ (j+1)^γ, or `None` if there are none.
pub fn block_range(gamma: f64, j: u64) -> Option<(u64, u64)> {
    let a = (j as f64).powf(gamma);
    let b = ((j + 1) as f64).powf(gamma);
    let lo = first_with_log_at_least(a);
    let hi = last_with_log_at_most(b);
    (lo <= hi).then_some((lo, hi))
}

/// Smallest n ≥ 1 with log n ≥ a.
pub fn first_with_log_at_least(a: f64) -> u64 {
    if a <= 0.0 {
        return 1;
    }
    let mut n = a.exp().ceil().max(1.0) as u64;
    while n > 1 && ((n - 1) as f64).ln() >= a {
        n -= 1;
    }
    while (n as f64).ln() < a {
        n += 1;
    }
    n
}

/// Largest n ≥ 0 with log n ≤ b (0 when no positive integer qualifies).
pub fn last_with_log_at_most(b: f64) -> u64 {
    if b < 0.0 {
        return 0;
    }
    let mut n = b.exp().floor() as u64;
    while ((n + 1) as f64).ln() <= b {
        n += 1;
    }
    while n > 0 && (n as f64).ln() > b {
        n -= 1;
    }
    n
}

/// Number of divisors by trial division; used outside the sieve range.
pub fn divisor_count(mut n: u64) -> u32 {
    assert!(n > 0, "d(0) is undefined");
    let mut count = 1u32;
    let mut p = 2u64;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        count *= e + 1;
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        count *= 2;
    }
    count
}

/// Σ_{lo ≤ n ≤ hi} 1/n.
pub fn harmonic_range(lo: u64, hi: u64) -> f64 {
    if hi < lo {
        return 0.0;
    }
    const DIRECT: u64 = 4096;
    if hi - lo < DIRECT || lo < DIRECT {
        if hi < 2 * DIRECT || hi - lo < DIRECT {
            return (lo..=hi).map(|n| 1.0 / n as f64).collect::<KahanSum>().value();
        }
        // split: direct head, asymptotic tail
        return harmonic_range(lo, DIRECT - 1) + harmonic_range(DIRECT, hi);
    }
    // H(hi) − H(lo − 1) via the Euler–Maclaurin tail of H(m) − ln m − γ.
    let a = (lo - 1) as f64;
    let b = hi as f64;
    let corr = |m: f64| {
        let m2 = m * m;
        1.0 / (2.0 * m) - 1.0 / (12.0 * m2) + 1.0 / (120.0 * m2 * m2) - 1.0 / (252.0 * m2 * m2 * m2)
    };
    ((b - a) / a).ln_1p() + corr(b) - corr(a)
}

/// Slope of the least-squares line through `(x, y)` points.
pub fn log_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    const MIN_POINTS: usize = 10;
    if points.len() < MIN_POINTS {
        return Err(Error::InsufficientBlocks {
            needed: MIN_POINTS,
            found: points.len(),
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxy = KahanSum::new();
    let mut sxx = KahanSum::new();
    for &(x, y) in points {
        sxy.add((x - mx) * (y - my));
        sxx.add((x - mx) * (x - mx));
    }
    Ok(sxy.value() / sxx.value())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("gamma = {gamma} must lie in (0, 1)")))
    }
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Coefficient weights w_n of a weighted Dirichlet space. Indices with
/// w_n = 0 are excluded from the space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    /// w_n = d(n)^α.
    DivisorPower { alpha: f64 },
    /// w_n = (log n)^β, so w_1 = 0.
    LogPower { beta: f64 },
    /// w_n = table[n − 1]; zero beyond the table.
    Custom { table: Vec<f64> },
}

impl WeightSpec {
    pub fn divisor_power(alpha: f64) -> Self {
        Self::DivisorPower { alpha }
    }

    pub fn log_power(beta: f64) -> Self {
        Self::LogPower { beta }
    }

    /// w_n. Divisor counts come from `table` when it covers n and from
    /// trial division otherwise.
    pub fn weight(&self, n: u64, table: Option<&DivisorTable>) -> f64 {
        assert!(n > 0, "weights are indexed from 1");
        match self {
            Self::DivisorPower { alpha } => {
                let d = table.and_then(|t| t.get(n)).unwrap_or_else(|| divisor_count(n));
                divisor_weight(d, *alpha)
            }
            Self::LogPower { beta } => {
                if n == 1 {
                    0.0
                } else {
                    (n as f64).ln().powf(*beta)
                }
            }
            Self::Custom { table } => table.get((n - 1) as usize).copied().unwrap_or(0.0),
        }
    }

    /// Σ_{n≤x} w_n at increasing checkpoints.
    pub fn partial_sums(&self, table: &DivisorTable, checkpoints: &[f64]) -> Result<Vec<f64>> {
        if let Self::DivisorPower { alpha } = self {
            return table.divisor_power_sums(*alpha, checkpoints);
        }
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut acc = KahanSum::new();
        let mut next = 1u64;
        for &x in checkpoints {
            let n = table.check_x(x)?;
            while next <= n {
                acc.add(self.weight(next, Some(table)));
                next += 1;
            }
            out.push(acc.value());
        }
        Ok(out)
    }

    /// Σ_{j^γ ≤ log n ≤ (j+1)^γ} w_n / n.
    pub fn block_sum(&self, table: &DivisorTable, gamma: f64, j: u64) -> Result<f64> {
        match self {
            Self::DivisorPower { alpha } => table.block_sum(*alpha, gamma, j),
            _ => table.weighted_block_sum(gamma, j, |n, _| self.weight(n, None)),
        }
    }
}

/// One row of the block-sum CSV.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct BlockSumRow {
    pub j: u64,
    pub block_sum: f64,
    /// j^{γ 2^α − 1}, the predicted order of magnitude.
    pub predicted_exponent_value: f64,
}

impl DivisorTable {
    /// Rows for the nonempty blocks in `j_min..=j_max`.
    pub fn block_sum_rows(&self, alpha: f64, gamma: f64, j_min: u64, j_max: u64) -> Result<Vec<BlockSumRow>> {
        let exponent = gamma * 2f64.powf(alpha) - 1.0;
        Ok(self
            .block_sums(alpha, gamma, j_min, j_max)?
            .into_iter()
            .filter_map(|(j, v)| {
                v.map(|block_sum| BlockSumRow {
                    j,
                    block_sum,
                    predicted_exponent_value: (j as f64).powf(exponent),
                })
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn brute_d(n: u64) -> u32 {
        (1..=n).filter(|k| n % k == 0).count() as u32
    }

    #[test]
    fn small_values() {
        let t = DivisorTable::sieve(1000).unwrap();
        assert_eq!(t.d(1), 1);
        assert_eq!(t.d(97), 2);
        assert_eq!(t.d(12), 6);
        assert_eq!(t.d(720), 30);
    }

    #[test]
    fn segment_boundaries_do_not_matter() {
        let cfg = SieveConfig { segment_len: 37, max_x: 1 << 20 };
        let a = DivisorTable::sieve_with(5000, &cfg).unwrap();
        let b = DivisorTable::sieve(5000).unwrap();
        for n in 1..=5000 {
            assert_eq!(a.d(n), b.d(n), "n = {n}");
            assert_eq!(a.d(n), brute_d(n));
        }
    }

    #[test]
    fn capacity_and_zero_are_rejected() {
        assert!(matches!(DivisorTable::sieve(0), Err(Error::InvalidParameter(_))));
        assert!(matches!(
            DivisorTable::sieve(1_000_000_000_000),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn trial_division_agrees() {
        let t = DivisorTable::sieve(20_000).unwrap();
        for n in 1..=20_000 {
            assert_eq!(divisor_count(n), t.d(n));
        }
    }

    #[test]
    fn power_sums() {
        let t = DivisorTable::sieve(1000).unwrap();
        assert_eq!(t.divisor_power_sum(0.0, 1000.0).unwrap(), 1000.0);
        assert_eq!(t.divisor_power_sum(1.0, 10.0).unwrap(), 27.0);
        assert_eq!(t.divisor_power_sum(2.0, 4.0).unwrap(), 18.0);
        assert_eq!(t.divisor_power_sum(1.0, 10.7).unwrap(), 27.0);
        assert!(t.divisor_power_sum(1.0, 1000.5).is_ok());
        assert!(matches!(t.divisor_power_sum(1.0, 1001.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(t.divisor_power_sum(1.0, 0.5), Err(Error::OutOfRange { .. })));
        let many = t.divisor_power_sums(1.0, &[1.0, 4.0, 10.0]).unwrap();
        assert_eq!(many, vec![1.0, 8.0, 27.0]);
    }

    #[test]
    fn non_integer_alpha_uses_exp_log() {
        assert_relative_eq!(divisor_weight(6, 0.5), 6f64.sqrt(), max_relative = 1e-15);
        assert_eq!(divisor_weight(6, 3.0), 216.0);
    }

    #[test]
    fn block_ranges_are_inclusive_and_exact() {
        // 10 ≤ log n ≤ 10.0499 for γ = 1/2, j = 100
        let (lo, hi) = block_range(0.5, 100).unwrap();
        assert!((lo as f64).ln() >= 10.0 && ((lo - 1) as f64).ln() < 10.0);
        assert!((hi as f64).ln() <= 101f64.sqrt() && ((hi + 1) as f64).ln() > 101f64.sqrt());
        // the block for j = 0 starts at n = 1
        assert_eq!(block_range(0.5, 0).unwrap().0, 1);
    }

    #[test]
    fn harmonic_block_example() {
        let t = DivisorTable::sieve(30_000).unwrap();
        let v = t.block_sum(0.0, 0.5, 100).unwrap();
        let len = 101f64.sqrt() - 10.0;
        assert!((v / len - 1.0).abs() < 0.05, "{v} vs {len}");
    }

    #[test]
    fn harmonic_closed_form_matches_direct_sum() {
        for &(lo, hi) in &[(5000u64, 9000u64), (10_000, 1_000_000), (3, 50_000), (123_456, 123_999)] {
            let direct = (lo..=hi).map(|n| 1.0 / n as f64).collect::<KahanSum>().value();
            assert_relative_eq!(harmonic_range(lo, hi), direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn alpha_zero_blocks_extend_past_the_table() {
        let t = DivisorTable::sieve(1000).unwrap();
        let v = t.block_sum(0.0, 0.5, 900).unwrap();
        let len = 901f64.sqrt() - 30.0;
        assert!((v / len - 1.0).abs() < 1e-3);
        assert!(matches!(t.block_sum(1.0, 0.5, 900), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn empty_block_is_reported() {
        let t = DivisorTable::sieve(1000).unwrap();
        // e^{900^{1/4}} ≈ 239.18 and e^{901^{1/4}} ≈ 239.55
        assert!(matches!(t.block_sum(2.0, 0.25, 900), Err(Error::EmptyBlock { j: 900 })));
    }

    #[test]
    fn fit_needs_ten_blocks() {
        let t = DivisorTable::sieve(100_000).unwrap();
        assert!(matches!(
            t.fit_block_exponent(1.0, 0.5, 50, 55),
            Err(Error::InsufficientBlocks { .. })
        ));
    }

    #[test]
    fn telescoping_blocks_reconcile_with_direct_sum() {
        let t = DivisorTable::sieve(2_000_000).unwrap();
        let (alpha, gamma) = (1.0, 1.0 / 3.0);
        let (j0, j1) = (300u64, 400u64);
        let blocks: f64 = (j0..=j1).map(|j| t.block_sum(alpha, gamma, j).unwrap_or(0.0)).sum();
        let lo = first_with_log_at_least((j0 as f64).powf(gamma));
        let hi = last_with_log_at_most(((j1 + 1) as f64).powf(gamma));
        let direct = t.sum_range(lo, hi, |n, d| d as f64 / n as f64);
        // integers sitting exactly on a shared boundary are counted twice
        let mut doubled = 0.0;
        for j in j0 + 1..=j1 {
            let (lo_j, _) = block_range(gamma, j).unwrap();
            let (_, hi_prev) = block_range(gamma, j - 1).unwrap();
            if hi_prev >= lo_j {
                doubled += t.sum_range(lo_j, hi_prev, |n, d| d as f64 / n as f64);
            }
        }
        assert_relative_eq!(blocks - doubled, direct, max_relative = 1e-12);
    }
}
