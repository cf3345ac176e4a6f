//! Quadrature rules for weighted half-plane and disk integrals.
//!
//! Gauss–Jacobi nodes come from the Golub–Welsch eigenvalue problem for the
//! Jacobi matrix. The half-plane rule is a tensor product of Gauss–Jacobi
//! in σ′ = σ − 1/2 (weight σ′^{β−1}, so the endpoint singularity sits in the
//! weight) and the trapezoid rule in t.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::summation::KahanSum;

/// Nodes and weights on [−1, 1] for the weight (1−x)^a (1+x)^b, a, b > −1.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || !(a > -1.0) || !(b > -1.0) {
        return Err(Error::InvalidParameter(format!(
            "gauss_jacobi needs n ≥ 1 and a, b > −1 (n = {n}, a = {a}, b = {b})"
        )));
    }
    let ab = a + b;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        m[(k, k)] = diag;
        if k + 1 < n {
            let j = kf + 1.0;
            let t = 2.0 * j + ab;
            let num = 4.0 * j * (j + a) * (j + b) * (j + ab);
            let den = t * t * (t + 1.0) * (t - 1.0);
            let off = (num / den).sqrt();
            m[(k, k + 1)] = off;
            m[(k + 1, k)] = off;
        }
    }
    let ln_mu0 = (ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(ab + 2.0);
    let mu0 = ln_mu0.exp();
    let eig = SymmetricEigen::new(m);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(pairs.into_iter().unzip())
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    gauss_jacobi(n, 0.0, 0.0)
}

/// Nodes on [0, L] integrating g(x)·x^{β−1}.
pub fn power_weight_rule(n: usize, beta: f64, len: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(beta > 0.0) || !(len > 0.0) {
        return Err(Error::InvalidParameter(format!("need β > 0 and L > 0 (β = {beta}, L = {len})")));
    }
    let (x, w) = gauss_jacobi(n, 0.0, beta - 1.0)?;
    let scale = (len / 2.0).powf(beta);
    Ok((
        x.iter().map(|&x| len * (1.0 + x) / 2.0).collect(),
        w.iter().map(|&w| w * scale).collect(),
    ))
}

/// Truncation and node counts for the half-plane integral.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub sigma_max: f64,
    pub t_max: f64,
    pub n_sigma: usize,
    pub n_t: usize,
    /// Largest accepted relative error (node halving plus truncated tails).
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            sigma_max: 40.0,
            t_max: 60.0,
            n_sigma: 200,
            n_t: 2000,
            tolerance: 1e-2,
        }
    }
}

/// Result of a quadrature with its error indicators.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    /// |I(n) − I(n/2)| relative to |I(n)|.
    pub refinement_error: f64,
    /// Estimated mass outside the truncated box, relative to |I(n)|.
    pub tail_error: f64,
}

impl QuadratureResult {
    pub fn relative_error(&self) -> f64 {
        self.refinement_error + self.tail_error
    }
}

fn trapezoid_nodes(n: usize, t_max: f64) -> (Vec<f64>, f64) {
    let h = 2.0 * t_max / n as f64;
    ((0..=n).map(|k| -t_max + k as f64 * h).collect(), h)
}

fn tensor_sum(
    f: &impl Fn(Complex64) -> f64,
    sig: &[f64],
    sw: &[f64],
    ts: &[f64],
    h: f64,
) -> f64 {
    let mut acc = KahanSum::new();
    for (&s, &w) in sig.iter().zip(sw) {
        let mut line = KahanSum::new();
        let last = ts.len() - 1;
        for (k, &t) in ts.iter().enumerate() {
            let end = if k == 0 || k == last { 0.5 } else { 1.0 };
            line.add(end * f(Complex64::new(0.5 + s, t)));
        }
        acc.add(w * h * line.value());
    }
    acc.value()
}

/// ∫_{ℂ_{1/2}} g(s) (σ−1/2)^{β−1} dm(s) for a non-negative integrand g.
///
/// Returns an error if the combined error indicator exceeds the tolerance.
pub fn integrate_half_plane(
    g: impl Fn(Complex64) -> f64,
    beta: f64,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult> {
    let r = integrate_half_plane_unchecked(&g, beta, spec)?;
    if r.relative_error() > spec.tolerance {
        return Err(Error::Quadrature {
            estimate: r.relative_error(),
            tolerance: spec.tolerance,
        });
    }
    Ok(r)
}

/// As [`integrate_half_plane`] but never rejects on the error indicator.
pub fn integrate_half_plane_unchecked(
    g: &impl Fn(Complex64) -> f64,
    beta: f64,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult> {
    if spec.n_sigma < 2 || spec.n_t < 2 {
        return Err(Error::InvalidParameter("quadrature needs at least 2 nodes per direction".into()));
    }
    let (sig, sw) = power_weight_rule(spec.n_sigma, beta, spec.sigma_max)?;
    let (ts, h) = trapezoid_nodes(spec.n_t, spec.t_max);
    let full = tensor_sum(g, &sig, &sw, &ts, h);

    let (sig2, sw2) = power_weight_rule(spec.n_sigma / 2, beta, spec.sigma_max)?;
    let (ts2, h2) = trapezoid_nodes(spec.n_t / 2, spec.t_max);
    let half = tensor_sum(g, &sig2, &sw2, &ts2, h2);

    // Tails: beyond |t| = t_max assume |g| ~ t^{−2}; beyond σ_max assume the
    // vertical-line mass decays no slower than σ^{−2}.
    let mut t_tail = KahanSum::new();
    for (&s, &w) in sig.iter().zip(&sw) {
        let edge = g(Complex64::new(0.5 + s, spec.t_max)) + g(Complex64::new(0.5 + s, -spec.t_max));
        t_tail.add(w * edge * spec.t_max);
    }
    let line = {
        let mut acc = KahanSum::new();
        for (k, &t) in ts.iter().enumerate() {
            let end = if k == 0 || k == ts.len() - 1 { 0.5 } else { 1.0 };
            acc.add(end * g(Complex64::new(0.5 + spec.sigma_max, t)));
        }
        acc.value() * h
    };
    let s_tail = line * spec.sigma_max.powf(beta);
    let scale = full.abs().max(f64::MIN_POSITIVE);
    Ok(QuadratureResult {
        value: full,
        refinement_error: if full == 0.0 { 0.0 } else { (full - half).abs() / scale },
        tail_error: if full == 0.0 { 0.0 } else { (t_tail.value() + s_tail) / scale },
    })
}

/// Disk integration nodes for ∫_𝔻 g(z) (1−|z|²)^{β−1} dm(z).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiskQuadratureSpec {
    pub n_radial: usize,
    pub n_angular: usize,
}

impl Default for DiskQuadratureSpec {
    fn default() -> Self {
        Self {
            n_radial: 200,
            n_angular: 256,
        }
    }
}

/// ∫_𝔻 g(z) (1−|z|²)^{β−1} dm(z), Gauss–Jacobi in r (weight (1−r)^{β−1}),
/// trapezoid in the angle.
pub fn integrate_disk(g: impl Fn(Complex64) -> f64, beta: f64, spec: &DiskQuadratureSpec) -> Result<f64> {
    if !(beta > 0.0) || spec.n_angular == 0 {
        return Err(Error::InvalidParameter("disk quadrature needs β > 0 and angular nodes".into()));
    }
    let (x, w) = gauss_jacobi(spec.n_radial, beta - 1.0, 0.0)?;
    let dtheta = std::f64::consts::TAU / spec.n_angular as f64;
    let mut acc = KahanSum::new();
    for (&x, &w) in x.iter().zip(&w) {
        let r = (1.0 + x) / 2.0;
        // (1−x)^{β−1} = (2(1−r))^{β−1}; dr = dx/2
        let jac = 0.5 / 2f64.powf(beta - 1.0) * r * (1.0 + r).powf(beta - 1.0);
        let mut ring = KahanSum::new();
        for k in 0..spec.n_angular {
            let th = k as f64 * dtheta;
            ring.add(g(Complex64::from_polar(r, th)));
        }
        acc.add(w * jac * ring.value() * dtheta);
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10).unwrap();
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert_relative_eq!(i, 2.0 / 19.0, max_relative = 1e-13);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn jacobi_moments() {
        // ∫_0^1 x^{β−1} x^2 dx = 1/(β+2)
        for &beta in &[0.3, 1.0, 1.7, 3.0] {
            let (x, w) = power_weight_rule(12, beta, 1.0).unwrap();
            let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
            assert_relative_eq!(i, 1.0 / (beta + 2.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn half_plane_closed_form() {
        // ∫∫ |s+1/2|^{−4} over σ′ > 0 equals π/4
        let r = integrate_half_plane(|s| (s + 0.5).norm_sqr().powi(-2), 1.0, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(r.value, PI / 4.0, max_relative = 2e-3);
        assert!(r.relative_error() < 1e-2);
    }

    #[test]
    fn disk_area_and_moment() {
        let spec = DiskQuadratureSpec::default();
        assert_relative_eq!(integrate_disk(|_| 1.0, 1.0, &spec).unwrap(), PI, max_relative = 1e-12);
        assert_relative_eq!(integrate_disk(|z| z.norm_sqr(), 1.0, &spec).unwrap(), PI / 2.0, max_relative = 1e-12);
        // ∫ (1−|z|²)^{β−1} dm = π/β
        assert_relative_eq!(integrate_disk(|_| 1.0, 2.5, &spec).unwrap(), PI / 2.5, max_relative = 1e-12);
    }
}
