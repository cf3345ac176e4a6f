//! Blaschke-type summability conditions on zero sequences, cone membership,
//! and admissibility checks for generalized coefficient weights.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::divisor::{log_log_slope, DivisorTable, WeightSpec};
use crate::error::{Error, Result};
use crate::spaces::ZeroSequence;
use crate::summation::KahanSum;

/// A zero sequence given either explicitly or by its excesses σ_j − 1/2,
/// j = 1, 2, …, summed up to a cutoff.
pub enum SequenceSource<'a> {
    Finite(&'a ZeroSequence),
    Generator {
        excess: &'a dyn Fn(u64) -> f64,
        cutoff: u64,
    },
}

/// Value of a condition sum. For generated sequences the sum is also taken
/// to twice the cutoff and flagged divergent when the two differ by more
/// than the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionSum {
    pub value: f64,
    pub value_at_double_cutoff: Option<f64>,
    pub divergent: bool,
}

/// Default tolerance of the doubling-cutoff comparison.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-3;

fn condition_sum(src: &SequenceSource<'_>, power: f64) -> ConditionSum {
    match src {
        SequenceSource::Finite(s) => ConditionSum {
            value: s.points().iter().map(|p| p.excess().powf(power)).collect::<KahanSum>().value(),
            value_at_double_cutoff: None,
            divergent: false,
        },
        SequenceSource::Generator { excess, cutoff } => {
            let mut acc = KahanSum::new();
            for j in 1..=*cutoff {
                acc.add(excess(j).powf(power));
            }
            let value = acc.value();
            for j in cutoff + 1..=2 * cutoff {
                acc.add(excess(j).powf(power));
            }
            let doubled = acc.value();
            ConditionSum {
                value,
                value_at_double_cutoff: Some(doubled),
                divergent: doubled - value > DIVERGENCE_TOLERANCE,
            }
        }
    }
}

/// Σ (σ_j − 1/2).
pub fn blaschke_sum(src: &SequenceSource<'_>) -> ConditionSum {
    condition_sum(src, 1.0)
}

/// Σ (σ_j − 1/2)^{1+ε}.
pub fn epsilon_blaschke_sum(src: &SequenceSource<'_>, epsilon: f64) -> Result<ConditionSum> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be positive")));
    }
    Ok(condition_sum(src, 1.0 + epsilon))
}

/// Σ (σ_j − 1/2)^{1−γ}.
pub fn gamma_blaschke_sum(src: &SequenceSource<'_>, gamma: f64) -> Result<ConditionSum> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must lie in (0, 1)")));
    }
    Ok(condition_sum(src, 1.0 - gamma))
}

/// Whether every point satisfies |t_j − t0| ≤ c(σ_j − 1/2).
pub fn in_cone(s: &ZeroSequence, t0: f64, c: f64) -> Result<bool> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("cone aperture c = {c} must be positive")));
    }
    Ok(s.points().iter().all(|p| (p.t() - t0).abs() <= c * p.excess()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub t0: f64,
    pub c: f64,
    pub inside: bool,
}

/// All conditions for one sequence. Values only; no verdict on whether the
/// sequence is a zero set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub blaschke_sum: ConditionSum,
    pub epsilon_sums: BTreeMap<String, ConditionSum>,
    pub gamma_sums: BTreeMap<String, ConditionSum>,
    pub cone: Option<ConeReport>,
}

pub fn condition_report(
    s: &ZeroSequence,
    epsilons: &[f64],
    gammas: &[f64],
    cone: Option<(f64, f64)>,
) -> Result<ConditionReport> {
    let src = SequenceSource::Finite(s);
    let mut epsilon_sums = BTreeMap::new();
    for &e in epsilons {
        epsilon_sums.insert(e.to_string(), epsilon_blaschke_sum(&src, e)?);
    }
    let mut gamma_sums = BTreeMap::new();
    for &g in gammas {
        gamma_sums.insert(g.to_string(), gamma_blaschke_sum(&src, g)?);
    }
    let cone = match cone {
        Some((t0, c)) => Some(ConeReport {
            t0,
            c,
            inside: in_cone(s, t0, c)?,
        }),
        None => None,
    };
    Ok(ConditionReport {
        blaschke_sum: blaschke_sum(&src),
        epsilon_sums,
        gamma_sums,
        cone,
    })
}

/// Largest accepted max/min ratio of the normalized partial sums.
pub const BAND_RATIO_LIMIT: f64 = 2.0;
/// Accepted deviation of the fitted block-sum slope.
pub const SLOPE_TOLERANCE: f64 = 0.1;

/// Outcome of [`weight_admissibility`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub beta: f64,
    pub gamma: f64,
    /// Σ_{n≤x} w_n / (x (log x)^β) at each checkpoint.
    pub band_values: Vec<(f64, f64)>,
    pub band_ratio: Option<f64>,
    pub band_ok: bool,
    pub fitted_slope: Option<f64>,
    pub expected_slope: f64,
    pub slope_ok: bool,
    /// Set when the weights vanish on every checkpoint or block.
    pub degenerate: bool,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.band_ok && self.slope_ok && !self.degenerate
    }
}

/// Checks that Σ_{n≤x} w_n stays within a constant band of x(log x)^β and
/// that the block sums Σ w_n/n over j^γ ≤ log n ≤ (j+1)^γ grow like
/// j^{γ(β+1)−1}.
pub fn weight_admissibility(
    w: &WeightSpec,
    beta: f64,
    table: &DivisorTable,
    x_checkpoints: &[f64],
    gamma: f64,
    j_range: (u64, u64),
) -> Result<AdmissibilityReport> {
    if !(gamma > 0.0 && gamma < 2.0 / (3.0 + beta)) {
        return Err(Error::InvalidParameter(format!(
            "gamma = {gamma} must lie in (0, 2/(3+β)) = (0, {})",
            2.0 / (3.0 + beta)
        )));
    }
    if x_checkpoints.iter().any(|&x| !(x > 1.0)) {
        return Err(Error::InvalidParameter("checkpoints must exceed 1".into()));
    }
    let sums = w.partial_sums(table, x_checkpoints)?;
    let band_values: Vec<(f64, f64)> = x_checkpoints
        .iter()
        .zip(&sums)
        .map(|(&x, &v)| (x, v / (x * x.ln().powf(beta))))
        .collect();
    let positive: Vec<f64> = band_values.iter().map(|b| b.1).filter(|&v| v > 0.0).collect();
    let band_ratio = if positive.len() == band_values.len() && !positive.is_empty() {
        let max = positive.iter().copied().fold(f64::MIN, f64::max);
        let min = positive.iter().copied().fold(f64::MAX, f64::min);
        Some(max / min)
    } else {
        None
    };

    let mut points = Vec::new();
    for j in j_range.0..=j_range.1 {
        let v = match w.block_sum(table, gamma, j) {
            Ok(v) => v,
            Err(Error::EmptyBlock { .. }) => continue,
            Err(e) => return Err(e),
        };
        if v > 0.0 {
            points.push(((j as f64).ln(), v.ln()));
        }
    }
    let fitted_slope = if points.is_empty() { None } else { Some(log_log_slope(&points)?) };
    let expected_slope = gamma * (beta + 1.0) - 1.0;
    Ok(AdmissibilityReport {
        beta,
        gamma,
        band_ok: band_ratio.is_some_and(|r| r <= BAND_RATIO_LIMIT),
        band_ratio,
        band_values,
        slope_ok: fitted_slope.is_some_and(|s| (s - expected_slope).abs() <= SLOPE_TOLERANCE),
        fitted_slope,
        expected_slope,
        degenerate: band_ratio.is_none() && points.is_empty(),
    })
}
