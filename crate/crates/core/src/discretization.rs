//! Block partition of the integers and the map from profiles supported on
//! [log N, ∞) to Dirichlet polynomials Σ_{n≥N} a_n n^{−s}.
//!
//! Inside block j the grid ξ_n runs from j^γ to (j+1)^γ with
//! (ξ_{n+1}^{β+1} − ξ_n^{β+1})/(β+1) = A_j d(n)^α / n, and the coefficients
//! are a_n = √n ∫_{ξ_n}^{ξ_{n+1}} φ.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::divisor::{first_with_log_at_least, DivisorTable};
use crate::error::{Error, Result};
use crate::paley_wiener::Profile;
use crate::spaces::{DirichletPolynomial, HalfPlanePoint};
use crate::summation::KahanSum;

/// One block n_j ≤ n ≤ n_{j+1} of the partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub j: u64,
    pub n_start: u64,
    /// n_{j+1}, the first index of the next block.
    pub n_end: u64,
    /// ξ_n for n_start ≤ n ≤ n_end.
    pub xi: Vec<f64>,
    pub a_j: f64,
}

/// The block partition for given α and N.
#[derive(Debug, Clone)]
pub struct BlockPartition {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub n: u64,
    /// Largest integer strictly below (log N)^{1/γ}.
    pub j_first: u64,
    pub blocks: Vec<Block>,
}

/// γ = 2/(4 + 2^α).
pub fn partition_gamma(alpha: f64) -> f64 {
    2.0 / (4.0 + 2f64.powf(alpha))
}

/// β = 2^α − 1.
pub fn beta_of(alpha: f64) -> f64 {
    2f64.powf(alpha) - 1.0
}

impl BlockPartition {
    /// Blocks J ≤ j ≤ j_max.
    pub fn build(alpha: f64, n: u64, j_max: u64, table: &DivisorTable) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("α = {alpha} must be positive")));
        }
        if n < 2 {
            return Err(Error::InvalidParameter("N must be at least 2".into()));
        }
        let gamma = partition_gamma(alpha);
        let beta = beta_of(alpha);
        let j_first = first_block_index(n, gamma);
        if j_max < j_first {
            return Err(Error::InvalidParameter(format!("j_max = {j_max} is below J = {j_first}")));
        }
        let top = first_with_log_at_least(((j_max + 1) as f64).powf(gamma));
        if top > table.x_max() {
            return Err(Error::OutOfRange {
                what: "partition end",
                value: top as f64,
                x_max: table.x_max(),
            });
        }
        let pw = table.powers(alpha);
        let e = beta + 1.0;
        let mut blocks = Vec::with_capacity((j_max - j_first + 1) as usize);
        let mut n_start = first_with_log_at_least((j_first as f64).powf(gamma));
        for j in j_first..=j_max {
            let n_end = first_with_log_at_least(((j + 1) as f64).powf(gamma));
            if n_end <= n_start {
                return Err(Error::DegenerateBlocks { j });
            }
            let lo = (j as f64).powf(gamma * e);
            let hi = ((j + 1) as f64).powf(gamma * e);
            let s = table.sum_range(n_start, n_end - 1, |m, d| pw.get(d) / m as f64);
            let a_j = (hi - lo) / e / s;
            let mut xi = Vec::with_capacity((n_end - n_start + 1) as usize);
            xi.push((j as f64).powf(gamma));
            let mut acc = KahanSum::new();
            acc.add(lo);
            for m in n_start..n_end {
                acc.add(e * a_j * pw.get(table.d(m)) / m as f64);
                xi.push(acc.value().powf(1.0 / e));
            }
            blocks.push(Block {
                j,
                n_start,
                n_end,
                xi,
                a_j,
            });
            n_start = n_end;
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            n,
            j_first,
            blocks,
        })
    }

    /// Partition reaching as far as the table allows.
    pub fn build_to_table(alpha: f64, n: u64, table: &DivisorTable) -> Result<Self> {
        let gamma = partition_gamma(alpha);
        let top = (table.x_max() as f64).ln();
        // largest j with e^{(j+1)^γ} rounded up still inside the table
        let mut j_max = top.powf(1.0 / gamma).floor() as u64;
        while j_max > 0 && first_with_log_at_least(((j_max + 1) as f64).powf(gamma)) > table.x_max() {
            j_max -= 1;
        }
        Self::build(alpha, n, j_max, table)
    }

    pub fn j_last(&self) -> u64 {
        self.blocks.last().map(|b| b.j).unwrap_or(self.j_first)
    }

    /// First index n_J covered by the partition.
    pub fn n_first(&self) -> u64 {
        self.blocks[0].n_start
    }

    /// One past the last index covered.
    pub fn n_last(&self) -> u64 {
        self.blocks.last().unwrap().n_end
    }

    pub fn xi_first(&self) -> f64 {
        self.blocks[0].xi[0]
    }

    /// ξ at the top of the partition, (j_max + 1)^γ.
    pub fn xi_last(&self) -> f64 {
        *self.blocks.last().unwrap().xi.last().unwrap()
    }

    pub fn log_n(&self) -> f64 {
        (self.n as f64).ln()
    }

    /// Largest endpoint mismatch |ξ_{n_{j+1}} − (j+1)^γ| over all blocks.
    pub fn endpoint_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (b.xi.last().unwrap() - ((b.j + 1) as f64).powf(self.gamma)).abs())
            .fold(0.0, f64::max)
    }

    /// max A_j / min A_j.
    pub fn a_spread(&self) -> f64 {
        let (lo, hi) = self
            .blocks
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), b| (lo.min(b.a_j), hi.max(b.a_j)));
        hi / lo
    }

    /// CSV rows (j, n_j, A_j).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["j", "n_j", "A_j"])?;
        for b in &self.blocks {
            wr.serialize((b.j, b.n_start, b.a_j))?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Largest integer strictly below (log N)^{1/γ}.
pub fn first_block_index(n: u64, gamma: f64) -> u64 {
    let l = (n as f64).ln().powf(1.0 / gamma);
    let c = l.ceil();
    (c as u64).saturating_sub(1)
}

/// Map a profile supported on [log N, ξ_top] to its Dirichlet polynomial.
pub fn discretize(phi: &Profile, part: &BlockPartition) -> Result<DirichletPolynomial> {
    check_support(phi, part)?;
    Ok(discretize_unchecked(phi, part))
}

/// Discretize φ·1_{ξ ≤ ξ_top}. Also returns ‖φ·1_{ξ > ξ_top}‖_{L²_β}, the
/// part of the profile the partition cannot represent.
pub fn discretize_truncated(phi: &Profile, part: &BlockPartition) -> Result<(DirichletPolynomial, f64)> {
    let tol = 1e-9 * part.log_n();
    if phi.support_left() < part.log_n() - tol {
        return Err(Error::SupportViolation(format!(
            "support starts at {} < log N = {}",
            phi.support_left(),
            part.log_n()
        )));
    }
    let tail = if phi.xi_max() > part.xi_last() {
        phi.restrict(part.xi_last(), phi.xi_max())?.l2beta_norm(part.beta)?
    } else {
        0.0
    };
    Ok((discretize_unchecked(phi, part), tail))
}

fn check_support(phi: &Profile, part: &BlockPartition) -> Result<()> {
    let tol = 1e-9 * part.log_n();
    if phi.support_left() < part.log_n() - tol && !phi.is_zero() {
        let first_nonzero = phi
            .xi()
            .iter()
            .zip(phi.values())
            .find(|(_, v)| v.norm() > 0.0)
            .map(|(x, _)| *x)
            .unwrap_or(f64::INFINITY);
        if first_nonzero < part.log_n() - tol || phi.xi_min() < part.log_n() - tol {
            return Err(Error::SupportViolation(format!(
                "profile starts at {} below log N = {}",
                phi.xi_min(),
                part.log_n()
            )));
        }
    }
    let top = part.xi_last();
    if phi.xi_max() > top + 1e-12 {
        let beyond = phi.xi().iter().zip(phi.values()).any(|(x, v)| *x > top && v.norm() > 0.0);
        if beyond || phi.eval(top).norm() > 0.0 {
            return Err(Error::SupportViolation(format!(
                "profile extends to {} beyond the partition top {top}",
                phi.xi_max()
            )));
        }
    }
    Ok(())
}

fn discretize_unchecked(phi: &Profile, part: &BlockPartition) -> DirichletPolynomial {
    let lo = phi.xi_min();
    let hi = phi.xi_max();
    // only blocks meeting the profile's range contribute
    let first = part.blocks.partition_point(|b| *b.xi.last().unwrap() <= lo);
    let last = part.blocks.partition_point(|b| b.xi[0] < hi);
    if first >= last {
        return DirichletPolynomial::zero();
    }
    let n0 = part.blocks[first].n_start;
    let n1 = part.blocks[last - 1].n_end;
    let mut coeffs = Vec::with_capacity((n1 - n0) as usize);
    for b in &part.blocks[first..last] {
        let ints = phi.integrate_cells(&b.xi);
        for (k, v) in ints.into_iter().enumerate() {
            let n = b.n_start + k as u64;
            coeffs.push(v * (n as f64).sqrt());
        }
    }
    DirichletPolynomial::new(n0, coeffs).expect("indices start at n ≥ 1").trimmed()
}

/// Φ(s) = ∫ φ(ξ) e^{−(s−1/2)ξ} dξ − f(s).
pub fn error_function(phi: &Profile, f: &DirichletPolynomial, s: Complex64) -> Complex64 {
    phi.laplace(s) - f.evaluate(s)
}

/// Pointwise ratios |Φ(s)| / (|s−1/2| N^{1/2−σ} (log N)^{−1} ‖φ‖_{L²_β}).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ErrorBoundReport {
    pub b_hat: f64,
    pub ratios: Vec<f64>,
    pub phi_norm: f64,
}

/// The largest normalized discretization error over `sample`.
pub fn verify_error_bound(
    phi: &Profile,
    f: &DirichletPolynomial,
    part: &BlockPartition,
    sample: &[HalfPlanePoint],
) -> Result<ErrorBoundReport> {
    verify_error_bound_with(phi, part, sample, |s| f.evaluate(s))
}

/// As [`verify_error_bound`] with a caller-supplied evaluator for f.
pub fn verify_error_bound_with(
    phi: &Profile,
    part: &BlockPartition,
    sample: &[HalfPlanePoint],
    f_eval: impl Fn(Complex64) -> Complex64,
) -> Result<ErrorBoundReport> {
    if sample.is_empty() {
        return Err(Error::InvalidParameter("sample must be nonempty".into()));
    }
    let norm = phi.l2beta_norm(part.beta)?;
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let log_n = part.log_n();
    let ratios: Vec<f64> = sample
        .iter()
        .map(|p| {
            let s = p.s();
            let phi_err = (phi.laplace(s) - f_eval(s)).norm();
            let scale = (s - 0.5).norm() * (-p.excess() * log_n).exp() / log_n * norm;
            phi_err / scale
        })
        .collect();
    Ok(ErrorBoundReport {
        b_hat: ratios.iter().copied().fold(0.0, f64::max),
        ratios,
        phi_norm: norm,
    })
}
