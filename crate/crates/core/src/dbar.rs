//! Cauchy-transform solution of ∂̄u = g for g supported on the box
//! Ω(R, τ) = {1/2 ≤ σ ≤ 1/2 + τ, |t| ≤ R}, and the cutoff Θ.
//!
//! The transform u(s) = (1/π) ∫ g(w)/(s − w) dm(w) is a midpoint sum over
//! grid cells; the cell containing s contributes nothing. Far from a
//! 32×32-cell patch the patch is replaced by its multipole expansion.

use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::KahanSum;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default grid spacing.
pub const DEFAULT_H: f64 = 0.02;

/// Ω(R, τ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub r: f64,
    pub tau: f64,
}

impl BoxDomain {
    pub fn new(r: f64, tau: f64) -> Result<Self> {
        if !(r > 2.0) || !(tau > 2.0) || !r.is_finite() || !tau.is_finite() {
            return Err(Error::InvalidParameter(format!("box needs R, τ > 2 (R = {r}, τ = {tau})")));
        }
        Ok(Self { r, tau })
    }

    /// s ∈ Ω(R − m, τ − m).
    pub fn contains_shrunk(&self, s: Complex64, m: f64) -> bool {
        s.re >= 0.5 && s.re <= 0.5 + self.tau - m && s.im.abs() <= self.r - m
    }

    pub fn contains(&self, s: Complex64) -> bool {
        self.contains_shrunk(s, 0.0)
    }
}

/// 3x² − 2x³ on [0, 1], clamped outside.
pub fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x * x * (3.0 - 2.0 * x)
    }
}

fn smoothstep_slope(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        6.0 * x * (1.0 - x)
    }
}

/// Θ(s) = θ₁(σ)θ₂(t): one on Ω(R−1, τ−1), zero off Ω(R, τ), with smoothstep
/// ramps across the unit-width collars at σ = 1/2 + τ and |t| = R.
pub fn bump_theta(b: &BoxDomain, s: Complex64) -> f64 {
    if s.re < 0.5 {
        return 0.0;
    }
    smoothstep(0.5 + b.tau - s.re) * smoothstep(b.r - s.im.abs())
}

/// ∂̄Θ = (∂_σΘ + i∂_tΘ)/2 in closed form.
pub fn dbar_theta(b: &BoxDomain, s: Complex64) -> Complex64 {
    if s.re < 0.5 {
        return ZERO;
    }
    let xs = 0.5 + b.tau - s.re;
    let xt = b.r - s.im.abs();
    let th1 = smoothstep(xs);
    let th2 = smoothstep(xt);
    let d1 = -smoothstep_slope(xs);
    let d2 = -s.im.signum() * smoothstep_slope(xt);
    Complex64::new(d1 * th2, th1 * d2) * 0.5
}

/// Complex samples at the cell centres σ_i = 1/2 + (i+1/2)h,
/// t_k = −R + (k+1/2)h of a grid covering Ω(R, τ).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub domain: BoxDomain,
    pub h: f64,
    pub n_sigma: usize,
    pub n_t: usize,
    /// Row-major in σ: index i·n_t + k.
    pub values: Vec<Complex64>,
}

/// Largest grid accepted by [`GridFunction::zeros`].
pub const MAX_CELLS: usize = 16_000_000;

impl GridFunction {
    pub fn zeros(domain: BoxDomain, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter("grid spacing must be positive".into()));
        }
        let n_sigma = (domain.tau / h - 1e-9).ceil() as usize;
        let n_t = (2.0 * domain.r / h - 1e-9).ceil() as usize;
        if n_sigma.saturating_mul(n_t) > MAX_CELLS {
            return Err(Error::Capacity {
                requested: (n_sigma * n_t) as u64,
                limit: MAX_CELLS as u64,
            });
        }
        Ok(Self {
            domain,
            h,
            n_sigma,
            n_t,
            values: vec![ZERO; n_sigma * n_t],
        })
    }

    /// Sample `f` at every cell centre.
    pub fn from_fn(domain: BoxDomain, h: f64, f: impl Fn(Complex64) -> Complex64 + Sync) -> Result<Self> {
        Self::from_fn_where(domain, h, |_| true, f)
    }

    /// Sample `f` where `mask` holds; zero elsewhere.
    pub fn from_fn_where(
        domain: BoxDomain,
        h: f64,
        mask: impl Fn(Complex64) -> bool + Sync,
        f: impl Fn(Complex64) -> Complex64 + Sync,
    ) -> Result<Self> {
        let mut g = Self::zeros(domain, h)?;
        let nt = g.n_t;
        let centre = |i: usize, k: usize| Complex64::new(0.5 + (i as f64 + 0.5) * h, -domain.r + (k as f64 + 0.5) * h);
        g.values.par_chunks_mut(nt).enumerate().for_each(|(i, row)| {
            for (k, v) in row.iter_mut().enumerate() {
                let s = centre(i, k);
                if mask(s) {
                    *v = f(s);
                }
            }
        });
        Ok(g)
    }

    pub fn centre(&self, i: usize, k: usize) -> Complex64 {
        Complex64::new(0.5 + (i as f64 + 0.5) * self.h, -self.domain.r + (k as f64 + 0.5) * self.h)
    }

    pub fn get(&self, i: usize, k: usize) -> Complex64 {
        self.values[i * self.n_t + k]
    }

    /// Cell containing s, if any.
    pub fn cell_of(&self, s: Complex64) -> Option<(usize, usize)> {
        let x = (s.re - 0.5) / self.h;
        let y = (s.im + self.domain.r) / self.h;
        if x < 0.0 || y < 0.0 {
            return None;
        }
        let (i, k) = (x.floor() as usize, y.floor() as usize);
        (i < self.n_sigma && k < self.n_t).then_some((i, k))
    }

    pub fn map(&self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n_sigma {
            for k in 0..self.n_t {
                let idx = i * self.n_t + k;
                out.values[idx] = f(self.centre(i, k), self.values[idx]);
            }
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|_, v| v * c)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n_sigma != other.n_sigma || self.n_t != other.n_t || self.h != other.h {
            return Err(Error::InvalidParameter("grids differ".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(out)
    }

    /// CSV rows (i, k, sigma, t, re, im) for the nonzero cells.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["i", "k", "sigma", "t", "re", "im"])?;
        for i in 0..self.n_sigma {
            for k in 0..self.n_t {
                let v = self.get(i, k);
                if v != ZERO {
                    let c = self.centre(i, k);
                    wr.serialize((i, k, c.re, c.im, v.re, v.im))?;
                }
            }
        }
        wr.flush()?;
        Ok(())
    }

    /// Inverse of [`GridFunction::write_csv`] for a known box and spacing.
    pub fn read_csv<R: Read>(r: R, domain: BoxDomain, h: f64) -> Result<Self> {
        let mut g = Self::zeros(domain, h)?;
        let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        for rec in rd.deserialize() {
            let (i, k, _, _, re, im): (usize, usize, f64, f64, f64, f64) = rec?;
            if i >= g.n_sigma || k >= g.n_t {
                return Err(Error::InvalidParameter(format!("cell ({i}, {k}) outside the grid")));
            }
            g.values[i * g.n_t + k] = Complex64::new(re, im);
        }
        Ok(g)
    }
}

/// max |u| over the grid.
pub fn sup_norm(u: &GridFunction) -> Result<f64> {
    if u.values.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(u.values.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

/// Direct midpoint evaluation of the Cauchy transform at one point.
pub fn cauchy_transform(g: &GridFunction, s: Complex64) -> Complex64 {
    let own = g.cell_of(s);
    let area = g.h * g.h;
    let mut acc = ZERO;
    for i in 0..g.n_sigma {
        for k in 0..g.n_t {
            let v = g.get(i, k);
            if v == ZERO || own == Some((i, k)) {
                continue;
            }
            acc += v * area / (s - g.centre(i, k));
        }
    }
    acc / std::f64::consts::PI
}

const PATCH: usize = 32;
const TERMS: usize = 41;

#[derive(Debug, Clone)]
struct Patch {
    i0: usize,
    i1: usize,
    k0: usize,
    k1: usize,
    centre: Complex64,
    radius: f64,
    /// M_k = Σ g h² (w − c)^k.
    moments: Vec<Complex64>,
}

/// Cauchy transform of a fixed grid function with patch multipoles.
#[derive(Debug, Clone)]
pub struct CauchySolver {
    grid: GridFunction,
    patches: Vec<Patch>,
    global: Option<Patch>,
}

impl CauchySolver {
    pub fn new(grid: GridFunction) -> Self {
        let area = grid.h * grid.h;
        let build = |i0: usize, i1: usize, k0: usize, k1: usize| -> Option<Patch> {
            let mut any = false;
            let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
            let mut hi = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
            for i in i0..i1 {
                for k in k0..k1 {
                    if grid.get(i, k) != ZERO {
                        any = true;
                        let c = grid.centre(i, k);
                        lo = Complex64::new(lo.re.min(c.re), lo.im.min(c.im));
                        hi = Complex64::new(hi.re.max(c.re), hi.im.max(c.im));
                    }
                }
            }
            if !any {
                return None;
            }
            let centre = (lo + hi) * 0.5;
            let mut radius: f64 = 0.0;
            let mut moments = vec![ZERO; TERMS];
            for i in i0..i1 {
                for k in k0..k1 {
                    let v = grid.get(i, k);
                    if v == ZERO {
                        continue;
                    }
                    let d = grid.centre(i, k) - centre;
                    radius = radius.max(d.norm());
                    let mut p = v * area;
                    for m in moments.iter_mut() {
                        *m += p;
                        p *= d;
                    }
                }
            }
            Some(Patch {
                i0,
                i1,
                k0,
                k1,
                centre,
                radius: radius + grid.h,
                moments,
            })
        };
        let mut patches = Vec::new();
        for i0 in (0..grid.n_sigma).step_by(PATCH) {
            for k0 in (0..grid.n_t).step_by(PATCH) {
                if let Some(p) = build(i0, (i0 + PATCH).min(grid.n_sigma), k0, (k0 + PATCH).min(grid.n_t)) {
                    patches.push(p);
                }
            }
        }
        let global = build(0, grid.n_sigma, 0, grid.n_t);
        Self { grid, patches, global }
    }

    pub fn grid(&self) -> &GridFunction {
        &self.grid
    }

    fn far(p: &Patch, s: Complex64) -> Option<Complex64> {
        let d = s - p.centre;
        if d.norm() < 2.0 * p.radius {
            return None;
        }
        let q = 1.0 / d;
        let mut acc = ZERO;
        for m in p.moments.iter().rev() {
            acc = (acc + m) * q;
        }
        Some(acc)
    }

    /// u(s) = (1/π) Σ g h²/(s − w) over all cells except the one holding s.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        if let Some(v) = self.global.as_ref().and_then(|g| Self::far(g, s)) {
            return v / std::f64::consts::PI;
        }
        let own = self.grid.cell_of(s);
        let area = self.grid.h * self.grid.h;
        let mut acc = ZERO;
        for p in &self.patches {
            if let Some(v) = Self::far(p, s) {
                acc += v;
                continue;
            }
            for i in p.i0..p.i1 {
                for k in p.k0..p.k1 {
                    let v = self.grid.get(i, k);
                    if v == ZERO || own == Some((i, k)) {
                        continue;
                    }
                    acc += v * area / (s - self.grid.centre(i, k));
                }
            }
        }
        acc / std::f64::consts::PI
    }

    pub fn eval_many(&self, pts: &[Complex64]) -> Vec<Complex64> {
        pts.par_iter().map(|&s| self.eval(s)).collect()
    }

    /// u at every cell centre of a grid with the same box and spacing,
    /// restricted to cells where `mask` holds.
    pub fn eval_on_grid(&self, mask: impl Fn(Complex64) -> bool + Sync) -> Result<GridFunction> {
        GridFunction::from_fn_where(self.grid.domain, self.grid.h, mask, |s| self.eval(s))
    }
}

/// Central-difference ∂̄u at interior cells (zero on the outermost ring).
pub fn dbar_fd(u: &GridFunction) -> GridFunction {
    let mut out = u.clone();
    out.values.iter_mut().for_each(|v| *v = ZERO);
    let h = u.h;
    for i in 1..u.n_sigma.saturating_sub(1) {
        for k in 1..u.n_t.saturating_sub(1) {
            let ds = (u.get(i + 1, k) - u.get(i - 1, k)) / (2.0 * h);
            let dt = (u.get(i, k + 1) - u.get(i, k - 1)) / (2.0 * h);
            out.values[i * u.n_t + k] = (ds + Complex64::i() * dt) * 0.5;
        }
    }
    out
}

/// ‖∂̄u − g‖₂ / ‖g‖₂ over the cells where `region` holds and all four
/// neighbours are inside the grid.
pub fn dbar_residual(u: &GridFunction, g: &GridFunction, region: impl Fn(Complex64) -> bool) -> Result<f64> {
    let d = dbar_fd(u);
    let mut num = KahanSum::new();
    let mut den = KahanSum::new();
    for i in 1..u.n_sigma.saturating_sub(1) {
        for k in 1..u.n_t.saturating_sub(1) {
            if !region(u.centre(i, k)) {
                continue;
            }
            let idx = i * u.n_t + k;
            num.add((d.values[idx] - g.values[idx]).norm_sqr());
            den.add(g.values[idx].norm_sqr());
        }
    }
    if den.value() == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((num.value() / den.value()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn theta_values() {
        let b = BoxDomain::new(10.0, 10.0).unwrap();
        assert_eq!(bump_theta(&b, c(0.6, 0.0)), 1.0);
        assert_eq!(bump_theta(&b, c(10.5, 0.0)), 0.0);
        assert_eq!(bump_theta(&b, c(3.0, 10.0)), 0.0);
        assert!(BoxDomain::new(2.0, 5.0).is_err());
    }

    #[test]
    fn dbar_theta_matches_finite_differences() {
        let b = BoxDomain::new(4.0, 3.0).unwrap();
        let e = 1e-6;
        for s in [c(3.1, 0.2), c(1.0, 3.4), c(3.2, -3.7), c(2.0, 0.0)] {
            let ds = (bump_theta(&b, s + e) - bump_theta(&b, s - e)) / (2.0 * e);
            let dt = (bump_theta(&b, s + c(0.0, e)) - bump_theta(&b, s - c(0.0, e))) / (2.0 * e);
            let fd = c(ds, dt) * 0.5;
            assert!((fd - dbar_theta(&b, s)).norm() < 1e-6, "{s}");
        }
    }

    #[test]
    fn zero_grid_gives_zero() {
        let b = BoxDomain::new(3.0, 3.0).unwrap();
        let g = GridFunction::zeros(b, 0.1).unwrap();
        let sol = CauchySolver::new(g.clone());
        assert_eq!(sol.eval(c(1.0, 0.5)), ZERO);
        assert_eq!(sup_norm(&g).unwrap(), 0.0);
    }

    #[test]
    fn multipole_agrees_with_direct_sum() {
        let b = BoxDomain::new(3.0, 3.0).unwrap();
        let g = GridFunction::from_fn(b, 0.05, |s| c((s.re * 3.0).sin(), s.im.cos() * s.re)).unwrap();
        let sol = CauchySolver::new(g.clone());
        for s in [c(1.03, 0.41), c(2.9, -2.2), c(5.0, 7.0), c(0.6, 30.0)] {
            let a = sol.eval(s);
            let d = cauchy_transform(&g, s);
            assert!((a - d).norm() < 1e-10 * d.norm().max(1.0), "{s}: {a} vs {d}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let b = BoxDomain::new(2.5, 2.5).unwrap();
        let g = GridFunction::from_fn_where(b, 0.25, |s| s.re > 2.0, |s| s * s).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let back = GridFunction::read_csv(buf.as_slice(), b, 0.25).unwrap();
        assert_eq!(back, g);
    }
}
