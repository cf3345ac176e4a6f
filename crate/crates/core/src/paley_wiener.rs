//! Piecewise-linear profiles and the Laplace transform
//! F(s) = ∫ φ(ξ) e^{−(s−1/2)ξ} dξ between L²_β and the Bergman space A_β.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::spaces::HalfPlaneFn;
use crate::summation::{ComplexKahanSum, KahanSum};

/// A piecewise-linear function on [ξ_0, ξ_M], zero outside that range and
/// left of `support_left`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    xi: Vec<f64>,
    values: Vec<Complex64>,
    support_left: f64,
}

impl Profile {
    /// Build a profile. Nodes left of `support_left` are dropped and a node
    /// is inserted at `support_left` when it falls inside a cell.
    pub fn new(xi: Vec<f64>, values: Vec<Complex64>, support_left: f64) -> Result<Self> {
        if xi.len() != values.len() {
            return Err(Error::InvalidParameter("profile grid and values differ in length".into()));
        }
        if xi.len() < 2 {
            return Err(Error::InvalidParameter("profile needs at least two nodes".into()));
        }
        if xi.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("profile grid must be strictly increasing".into()));
        }
        if xi[0] < 0.0 || !xi.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("profile grid must be finite and lie in [0, ∞)".into()));
        }
        if !values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::InvalidParameter("profile values must be finite".into()));
        }
        if !support_left.is_finite() {
            return Err(Error::InvalidParameter("support_left must be finite".into()));
        }
        let last = *xi.last().unwrap();
        if support_left <= xi[0] {
            return Ok(Self { xi, values, support_left });
        }
        if support_left >= last {
            return Ok(Self::zero_on(support_left, support_left + 1.0));
        }
        let k = xi.partition_point(|&x| x <= support_left);
        let mut nx = Vec::with_capacity(xi.len() - k + 1);
        let mut nv = Vec::with_capacity(xi.len() - k + 1);
        if xi[k - 1] == support_left {
            nx.push(support_left);
            nv.push(values[k - 1]);
        } else {
            let u = (support_left - xi[k - 1]) / (xi[k] - xi[k - 1]);
            nx.push(support_left);
            nv.push(values[k - 1] + (values[k] - values[k - 1]) * u);
        }
        nx.extend_from_slice(&xi[k..]);
        nv.extend_from_slice(&values[k..]);
        if nx.len() < 2 {
            return Ok(Self::zero_on(support_left, support_left + 1.0));
        }
        Ok(Self {
            xi: nx,
            values: nv,
            support_left,
        })
    }

    /// The zero profile on [lo, hi].
    pub fn zero_on(lo: f64, hi: f64) -> Self {
        Self {
            xi: vec![lo, hi],
            values: vec![Complex64::new(0.0, 0.0); 2],
            support_left: lo,
        }
    }

    /// Sample `f` on a uniform grid of `cells` cells over [lo, hi].
    pub fn from_fn(f: impl Fn(f64) -> Complex64, lo: f64, hi: f64, cells: usize, support_left: f64) -> Result<Self> {
        if cells == 0 || !(hi > lo) {
            return Err(Error::InvalidParameter("from_fn needs hi > lo and at least one cell".into()));
        }
        let h = (hi - lo) / cells as f64;
        let xi: Vec<f64> = (0..=cells).map(|k| if k == cells { hi } else { lo + k as f64 * h }).collect();
        let values = xi.iter().map(|&x| f(x)).collect();
        Self::new(xi, values, support_left)
    }

    /// Real-valued convenience constructor.
    pub fn from_real_fn(f: impl Fn(f64) -> f64, lo: f64, hi: f64, cells: usize, support_left: f64) -> Result<Self> {
        Self::from_fn(|x| Complex64::new(f(x), 0.0), lo, hi, cells, support_left)
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn support_left(&self) -> f64 {
        self.support_left
    }

    pub fn xi_min(&self) -> f64 {
        self.xi[0]
    }

    pub fn xi_max(&self) -> f64 {
        *self.xi.last().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    /// φ(ξ); zero outside [ξ_0, ξ_M].
    pub fn eval(&self, x: f64) -> Complex64 {
        if x < self.xi[0] || x > self.xi_max() {
            return Complex64::new(0.0, 0.0);
        }
        let k = self.xi.partition_point(|&v| v <= x);
        if k == self.xi.len() {
            return *self.values.last().unwrap();
        }
        let (a, b) = (self.xi[k - 1], self.xi[k]);
        let u = (x - a) / (b - a);
        self.values[k - 1] + (self.values[k] - self.values[k - 1]) * u
    }

    /// c·φ.
    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            xi: self.xi.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            support_left: self.support_left,
        }
    }

    /// φ(ξ − d), moving the support right by d.
    pub fn shift(&self, d: f64) -> Result<Self> {
        Self::new(
            self.xi.iter().map(|x| x + d).collect(),
            self.values.clone(),
            self.support_left + d,
        )
    }

    /// φ restricted to [lo, hi].
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Self> {
        let lo = lo.max(self.xi[0]);
        let hi = hi.min(self.xi_max());
        if !(hi > lo) {
            return Ok(Self::zero_on(lo.min(hi), lo.min(hi) + 1.0));
        }
        let mut xi = vec![lo];
        xi.extend(self.xi.iter().copied().filter(|&x| x > lo && x < hi));
        xi.push(hi);
        let values = xi.iter().map(|&x| self.eval(x)).collect();
        Self::new(xi, values, self.support_left.max(lo))
    }

    /// a·φ + b·ψ on the union of both grids. A jump at an end of one profile
    /// is kept sharp by a node placed one ulp-scale step outside it.
    pub fn combine(&self, a: Complex64, other: &Profile, b: Complex64) -> Result<Self> {
        let mut xi: Vec<f64> = self.xi.iter().chain(other.xi.iter()).copied().collect();
        for p in [self, other] {
            let eps = 1e-12 * p.xi_max().abs().max(1.0);
            for (x, v) in [(p.xi[0] - eps, p.values[0]), (p.xi_max() + eps, *p.values.last().unwrap())] {
                if v != Complex64::new(0.0, 0.0) && x >= 0.0 {
                    xi.push(x);
                }
            }
        }
        xi.sort_by(f64::total_cmp);
        xi.dedup();
        let values = xi.iter().map(|&x| self.eval(x) * a + other.eval(x) * b).collect();
        Self::new(xi, values, self.support_left.min(other.support_left))
    }

    pub fn add(&self, other: &Profile) -> Result<Self> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Profile) -> Result<Self> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }

    /// ∫ φ over [b_k, b_{k+1}] for consecutive entries of a sorted boundary list.
    /// Exact for the piecewise-linear interpolant.
    pub fn integrate_cells(&self, bounds: &[f64]) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(bounds.len().saturating_sub(1));
        let m = self.xi.len();
        let mut k = match bounds.first() {
            Some(&b0) => self.xi.partition_point(|&x| x <= b0).saturating_sub(1),
            None => 0,
        };
        for w in bounds.windows(2) {
            let (lo, hi) = (w[0].max(self.xi[0]), w[1].min(self.xi_max()));
            if !(hi > lo) {
                out.push(Complex64::new(0.0, 0.0));
                continue;
            }
            while k + 1 < m && self.xi[k + 1] <= lo {
                k += 1;
            }
            let mut acc = ComplexKahanSum::new();
            let mut j = k;
            while j + 1 < m && self.xi[j] < hi {
                let a = self.xi[j].max(lo);
                let b = self.xi[j + 1].min(hi);
                if b > a {
                    let mid = 0.5 * (a + b);
                    let u = (mid - self.xi[j]) / (self.xi[j + 1] - self.xi[j]);
                    acc.add((self.values[j] + (self.values[j + 1] - self.values[j]) * u) * (b - a));
                }
                j += 1;
            }
            out.push(acc.value());
        }
        out
    }

    /// F(s) = ∫ φ(ξ) e^{−(s−1/2)ξ} dξ, exact per cell.
    pub fn laplace(&self, s: Complex64) -> Complex64 {
        let z = s - 0.5;
        let mut acc = ComplexKahanSum::new();
        for run in uniform_runs(&self.xi) {
            acc.add(self.laplace_run(z, run));
        }
        acc.value()
    }

    fn laplace_run(&self, z: Complex64, (start, end): (usize, usize)) -> Complex64 {
        // cells start..end share the width h = (x_end − x_start)/(end − start)
        let cells = end - start;
        let x0 = self.xi[start];
        let h = (self.xi[end] - x0) / cells as f64;
        let w = z * h;
        let (e1, e2) = exp_moments(w);
        let r = (-w).exp();
        let v = &self.values[start..=end];
        let mut p = Complex64::new(0.0, 0.0);
        let mut q = Complex64::new(0.0, 0.0);
        for k in (0..cells).rev() {
            p = p * r + v[k];
            q = q * r + v[k + 1];
        }
        (-z * x0).exp() * h * ((e1 - e2) * p + e2 * q)
    }

    /// ‖φ‖_{L²_β} = ((2πΓ(β)/2^β) ∫ |φ|² ξ^{−β} dξ)^{1/2}, exact per cell.
    pub fn l2beta_norm(&self, beta: f64) -> Result<f64> {
        Ok(self.l2beta_norm_sq(beta)?.sqrt())
    }

    pub fn l2beta_norm_sq(&self, beta: f64) -> Result<f64> {
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!("β = {beta} must be positive")));
        }
        let mut acc = KahanSum::new();
        for k in 0..self.xi.len() - 1 {
            let (a, b) = (self.xi[k], self.xi[k + 1]);
            let (va, vb) = (self.values[k], self.values[k + 1]);
            let d = vb - va;
            let p = [va.norm_sqr(), 2.0 * (va * d.conj()).re, d.norm_sqr()];
            if p.iter().all(|&c| c == 0.0) {
                continue;
            }
            acc.add(cell_weighted_integral(a, b - a, p, beta)?);
        }
        Ok(l2beta_constant(beta) * acc.value())
    }

    /// Write as CSV with columns xi, re, im.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["xi", "re", "im"])?;
        for (x, v) in self.xi.iter().zip(&self.values) {
            wr.serialize((x, v.re, v.im))?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Read the CSV layout written by [`Profile::write_csv`].
    pub fn read_csv<R: Read>(r: R, support_left: Option<f64>) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        let mut xi = Vec::new();
        let mut values = Vec::new();
        for rec in rd.deserialize() {
            let (x, re, im): (f64, f64, f64) = rec?;
            xi.push(x);
            values.push(Complex64::new(re, im));
        }
        let left = support_left.unwrap_or_else(|| xi.first().copied().unwrap_or(0.0));
        Self::new(xi, values, left)
    }
}

/// 2πΓ(β)/2^β.
pub fn l2beta_constant(beta: f64) -> f64 {
    2.0 * PI * gamma(beta) / 2f64.powf(beta)
}

/// Free-function form of [`Profile::laplace`].
pub fn laplace_eval(phi: &Profile, s: Complex64) -> Complex64 {
    phi.laplace(s)
}

/// Free-function form of [`Profile::l2beta_norm`].
pub fn l2beta_norm(phi: &Profile, beta: f64) -> Result<f64> {
    phi.l2beta_norm(beta)
}

/// Maximal index ranges of cells with a common width.
fn uniform_runs(xi: &[f64]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let m = xi.len() - 1;
    let mut start = 0;
    while start < m {
        let h = xi[start + 1] - xi[start];
        let mut end = start + 1;
        while end < m {
            let predicted = xi[start] + (end + 1 - start) as f64 * h;
            if (xi[end + 1] - predicted).abs() > 1e-9 * h {
                break;
            }
            end += 1;
        }
        runs.push((start, end));
        start = end;
    }
    runs
}

/// E1(w) = ∫_0^1 e^{−wu} du and E2(w) = ∫_0^1 u e^{−wu} du.
pub(crate) fn exp_moments(w: Complex64) -> (Complex64, Complex64) {
    if w.norm() < 0.5 {
        // Σ (−w)^k/(k+1)! and Σ (−w)^k/(k!(k+2))
        let mut e1 = Complex64::new(0.0, 0.0);
        let mut e2 = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0);
        let mut fact = 1.0; // (k+1)!
        for k in 0..24 {
            e1 += pow / fact;
            e2 += pow * (k as f64 + 1.0) / (fact * (k as f64 + 2.0));
            pow *= -w;
            fact *= k as f64 + 2.0;
        }
        (e1, e2)
    } else {
        let ew = (-w).exp();
        let e1 = (1.0 - ew) / w;
        let e2 = (1.0 - ew - w * ew) / (w * w);
        (e1, e2)
    }
}

/// ∫_0^1 (p0 + p1 u + p2 u²) (a + h u)^{−β} h du.
fn cell_weighted_integral(a: f64, h: f64, p: [f64; 3], beta: f64) -> Result<f64> {
    if a == 0.0 {
        let mut s = 0.0;
        for (k, &c) in p.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let e = k as f64 + 1.0 - beta;
            if e <= 0.0 {
                return Err(Error::Divergent(format!(
                    "profile does not vanish fast enough at ξ = 0 for β = {beta}"
                )));
            }
            s += c / e;
        }
        return Ok(s * h.powf(1.0 - beta));
    }
    let rho = h / a;
    let moments = if rho < 0.25 {
        // binomial series of (1 + ρu)^{−β}
        let mut m = [0.0f64; 3];
        let mut coef = 1.0;
        let mut rp = 1.0;
        for n in 0..60 {
            let nf = n as f64;
            for (k, mk) in m.iter_mut().enumerate() {
                *mk += coef * rp / (nf + k as f64 + 1.0);
            }
            coef *= -(beta + nf) / (nf + 1.0);
            rp *= rho;
            if (coef * rp).abs() < 1e-18 {
                break;
            }
        }
        m
    } else {
        // u = (y−1)/ρ with y ∈ [1, 1+ρ]
        let l = rho.ln_1p();
        let ipow = |m: f64| {
            let c = m + 1.0 - beta;
            if c == 0.0 {
                l
            } else {
                (c * l).exp_m1() / c
            }
        };
        let (i0, i1, i2) = (ipow(0.0), ipow(1.0), ipow(2.0));
        [
            i0 / rho,
            (i1 - i0) / (rho * rho),
            (i2 - 2.0 * i1 + i0) / (rho * rho * rho),
        ]
    };
    let s = p[0] * moments[0] + p[1] * moments[1] + p[2] * moments[2];
    Ok(s * h * a.powf(-beta))
}

/// Contour-inversion parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FftSpec {
    /// Contour abscissa offset: samples are taken on Re s = 1/2 + c.
    pub c: f64,
    /// Half-width of the sampled window in t.
    pub t_max: f64,
    /// Number of samples (a power of two is fastest).
    pub samples: usize,
    /// Largest accepted |F| at t = ±t_max relative to max |F| on the window.
    pub decay_tolerance: f64,
}

impl Default for FftSpec {
    fn default() -> Self {
        Self {
            c: 0.05,
            t_max: 400.0,
            samples: 1 << 16,
            decay_tolerance: 1e-3,
        }
    }
}

impl FftSpec {
    /// Spacing of the native ξ grid, π / t_max.
    pub fn xi_step(&self) -> f64 {
        PI / self.t_max
    }
}

/// Invert the Laplace transform of `f` and return the profile on its native
/// uniform grid, restricted to [support_left, xi_max].
pub fn laplace_invert_native(f: &dyn HalfPlaneFn, support_left: f64, xi_max: f64, spec: &FftSpec) -> Result<Profile> {
    if !(spec.c > 0.0) || !(spec.t_max > 0.0) || spec.samples < 8 {
        return Err(Error::InvalidParameter("FFT spec needs c > 0, t_max > 0 and at least 8 samples".into()));
    }
    let m = spec.samples;
    let dt = 2.0 * spec.t_max / m as f64;
    let dxi = 2.0 * PI / (m as f64 * dt);
    if xi_max >= m as f64 * dxi / 2.0 {
        return Err(Error::InvalidParameter("xi_max exceeds half the FFT period".into()));
    }
    let pts: Vec<Complex64> = (0..m)
        .map(|k| Complex64::new(0.5 + spec.c, -spec.t_max + k as f64 * dt))
        .collect();
    let mut buf = f.eval_many(&pts);
    let peak = buf.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(Profile::zero_on(support_left, xi_max.max(support_left + dxi)));
    }
    let edge = buf[0].norm().max(buf[m - 1].norm());
    if edge > spec.decay_tolerance * peak {
        return Err(Error::InsufficientDecay { ratio: edge / peak });
    }
    // X_j = Σ_k F_k e^{+2πi jk/m}
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    let lo = (support_left / dxi).floor().max(0.0) as usize;
    let hi = ((xi_max / dxi).ceil() as usize).min(m / 2);
    let mut xi = Vec::with_capacity(hi - lo + 1);
    let mut vals = Vec::with_capacity(hi - lo + 1);
    for j in lo..=hi {
        let x = j as f64 * dxi;
        // e^{i t_k ξ_j} = e^{−i t_max ξ_j} e^{2πi jk/m}
        let phase = Complex64::from_polar(1.0, -spec.t_max * x);
        let v = buf[j] * phase * (dt / (2.0 * PI)) * (spec.c * x).exp();
        xi.push(x);
        vals.push(v);
    }
    Profile::new(xi, vals, support_left)
}

/// Invert onto a caller-supplied grid by linear interpolation of the native
/// samples; values left of `support_left` are cleared.
pub fn laplace_invert(f: &dyn HalfPlaneFn, xi_grid: &[f64], support_left: f64, spec: &FftSpec) -> Result<Profile> {
    if xi_grid.len() < 2 {
        return Err(Error::InvalidParameter("target grid needs two nodes".into()));
    }
    let hi = *xi_grid.last().unwrap();
    let native = laplace_invert_native(f, support_left, hi + spec.xi_step(), spec)?;
    let vals = xi_grid.iter().map(|&x| if x < support_left { Complex64::new(0.0, 0.0) } else { native.eval(x) }).collect();
    Profile::new(xi_grid.to_vec(), vals, support_left)
}

/// Laplace transform of a profile as a half-plane function.
#[derive(Debug, Clone)]
pub struct LaplaceOf(pub Arc<Profile>);

impl HalfPlaneFn for LaplaceOf {
    fn eval(&self, s: Complex64) -> Complex64 {
        self.0.laplace(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn xe(x: f64) -> f64 {
        x * (-x).exp()
    }

    #[test]
    fn laplace_of_xexp() {
        let p = Profile::from_real_fn(xe, 0.0, 40.0, 4000, 0.0).unwrap();
        let s = Complex64::new(1.5, 0.0);
        assert!((p.laplace(s) - 0.25).norm() < 1e-4);
        let s = Complex64::new(0.9, 2.3);
        let exact = (s + 0.5).powi(-2);
        assert!((p.laplace(s) - exact).norm() < 1e-4);
    }

    #[test]
    fn single_cell_matches_antiderivative() {
        // φ linear from 2 at ξ=1 to 5 at ξ=3
        let p = Profile::new(vec![1.0, 3.0], vec![Complex64::new(2.0, 0.0), Complex64::new(5.0, 0.0)], 0.0).unwrap();
        for s in [Complex64::new(0.7, 0.0), Complex64::new(1.3, -4.0), Complex64::new(0.55, 0.01)] {
            let z = s - 0.5;
            // ∫ (2 + 1.5(ξ−1)) e^{−zξ} dξ, antiderivative −e^{−zξ}(q(ξ)/z + q′/z²)
            let q = |x: f64| 2.0 + 1.5 * (x - 1.0);
            let anti = |x: f64| -(-z * x).exp() * (q(x) / z + 1.5 / (z * z));
            let exact = anti(3.0) - anti(1.0);
            assert!((p.laplace(s) - exact).norm() < 1e-10 * exact.norm().max(1.0), "{s}");
        }
        // z → 0 recovers ∫ φ = 7
        let tiny = p.laplace(Complex64::new(0.5 + 1e-12, 0.0));
        assert!((tiny - 7.0).norm() < 1e-10);
    }

    #[test]
    fn l2beta_closed_form() {
        let p = Profile::from_real_fn(xe, 0.0, 40.0, 4000, 0.0).unwrap();
        let n = p.l2beta_norm(1.0).unwrap();
        assert_relative_eq!(n, (PI / 4.0).sqrt(), max_relative = 5e-3);
    }

    #[test]
    fn l2beta_divergence_detected() {
        let p = Profile::from_real_fn(|_| 1.0, 0.0, 1.0, 10, 0.0).unwrap();
        assert!(matches!(p.l2beta_norm(1.0), Err(Error::Divergent(_))));
        assert!(p.l2beta_norm(0.5).is_ok());
    }

    #[test]
    fn l2beta_series_and_closed_branch_agree() {
        // same cell evaluated with ρ just below and above the switch
        for &beta in &[0.4, 1.0, 2.0, 3.0] {
            let p = [1.0, -0.3, 0.7];
            let a = cell_weighted_integral(4.0, 0.999, p, beta).unwrap();
            let b = cell_weighted_integral(4.0, 1.001, p, beta).unwrap();
            assert_relative_eq!(a, b, max_relative = 2e-3);
        }
    }

    #[test]
    fn support_left_clips() {
        let p = Profile::from_real_fn(|_| 1.0, 0.0, 10.0, 10, 2.5).unwrap();
        assert_eq!(p.xi_min(), 2.5);
        assert_eq!(p.eval(2.0), Complex64::new(0.0, 0.0));
        assert_eq!(p.eval(2.5), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn integrate_cells_exact() {
        let p = Profile::from_real_fn(|x| x, 0.0, 4.0, 7, 0.0).unwrap();
        let r = p.integrate_cells(&[0.5, 1.0, 3.7, 5.0]);
        assert_relative_eq!(r[0].re, (1.0 - 0.25) / 2.0, max_relative = 1e-13);
        assert_relative_eq!(r[1].re, (3.7f64.powi(2) - 1.0) / 2.0, max_relative = 1e-13);
        assert_relative_eq!(r[2].re, (16.0 - 3.7f64.powi(2)) / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn csv_round_trip() {
        let p = Profile::from_real_fn(xe, 1.0, 3.0, 5, 1.0).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let q = Profile::read_csv(buf.as_slice(), Some(1.0)).unwrap();
        assert_eq!(p, q);
    }
}
