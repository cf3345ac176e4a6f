//! Dirichlet polynomials, half-plane points and analytic functions on
//! ℂ_{1/2}, together with the norms of 𝒟_w, A_β and ℋ^p.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::divisor::{DivisorTable, WeightSpec};
use crate::error::{Error, Result};
use crate::paley_wiener::Profile;
use crate::quadrature::{integrate_disk, integrate_half_plane, DiskQuadratureSpec, QuadratureResult, QuadratureSpec};
use crate::summation::{ComplexKahanSum, KahanSum};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A function on the half-plane Re s > 1/2.
pub trait HalfPlaneFn: Send + Sync {
    fn eval(&self, s: Complex64) -> Complex64;

    fn eval_many(&self, pts: &[Complex64]) -> Vec<Complex64> {
        pts.iter().map(|&s| self.eval(s)).collect()
    }
}

/// A closure as a [`HalfPlaneFn`].
pub struct FnHandle<F>(pub F);

impl<F: Fn(Complex64) -> Complex64 + Send + Sync> HalfPlaneFn for FnHandle<F> {
    fn eval(&self, s: Complex64) -> Complex64 {
        (self.0)(s)
    }
}

/// A point of ℂ_{1/2}, stored through σ − 1/2 so that points close to the
/// boundary keep full relative precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlanePoint {
    excess: f64,
    t: f64,
}

impl HalfPlanePoint {
    pub fn new(sigma: f64, t: f64) -> Result<Self> {
        Self::from_excess(sigma - 0.5, t)
    }

    pub fn from_excess(excess: f64, t: f64) -> Result<Self> {
        if !(excess > 0.0) || !excess.is_finite() || !t.is_finite() {
            return Err(Error::PointOutside(format!("σ − 1/2 = {excess}, t = {t}")));
        }
        Ok(Self { excess, t })
    }

    pub fn sigma(&self) -> f64 {
        0.5 + self.excess
    }

    /// σ − 1/2.
    pub fn excess(&self) -> f64 {
        self.excess
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn s(&self) -> Complex64 {
        Complex64::new(self.sigma(), self.t)
    }
}

impl TryFrom<Complex64> for HalfPlanePoint {
    type Error = Error;
    fn try_from(s: Complex64) -> Result<Self> {
        Self::new(s.re, s.im)
    }
}

/// A finite multiset of points in ℂ_{1/2}; multiplicity is repetition.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ZeroSequence {
    points: Vec<HalfPlanePoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ZeroEntry {
    sigma: f64,
    t: f64,
    #[serde(default = "one")]
    multiplicity: usize,
}

fn one() -> usize {
    1
}

impl ZeroSequence {
    pub fn new(points: Vec<HalfPlanePoint>) -> Self {
        Self { points }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Points given as complex numbers.
    pub fn from_complex(pts: &[Complex64]) -> Result<Self> {
        pts.iter().map(|&s| HalfPlanePoint::try_from(s)).collect::<Result<Vec<_>>>().map(Self::new)
    }

    pub fn points(&self) -> &[HalfPlanePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Distinct points with their multiplicities, in first-seen order.
    pub fn distinct(&self) -> Vec<(HalfPlanePoint, usize)> {
        let mut out: Vec<(HalfPlanePoint, usize)> = Vec::new();
        for p in &self.points {
            match out.iter_mut().find(|(q, _)| q == p) {
                Some(e) => e.1 += 1,
                None => out.push((*p, 1)),
            }
        }
        out
    }

    /// Parse `[{"sigma": .., "t": .., "multiplicity": ..}, ..]`.
    pub fn from_json(text: &str) -> Result<Self> {
        let entries: Vec<ZeroEntry> = serde_json::from_str(text)?;
        let mut pts = Vec::new();
        for e in entries {
            let p = HalfPlanePoint::new(e.sigma, e.t)?;
            if e.multiplicity == 0 {
                return Err(Error::InvalidParameter("multiplicity must be at least 1".into()));
            }
            pts.extend(std::iter::repeat_n(p, e.multiplicity));
        }
        Ok(Self::new(pts))
    }

    pub fn to_json(&self) -> Result<String> {
        let entries: Vec<ZeroEntry> = self
            .distinct()
            .into_iter()
            .map(|(p, m)| ZeroEntry {
                sigma: p.sigma(),
                t: p.t(),
                multiplicity: m,
            })
            .collect();
        Ok(serde_json::to_string_pretty(&entries)?)
    }
}

/// A finite Dirichlet polynomial Σ_{n=n_min}^{n_max} a_n n^{−s}.
#[derive(Debug, Clone, Default)]
pub struct DirichletPolynomial {
    n_min: u64,
    coeffs: Vec<Complex64>,
    order: OnceLock<Vec<u32>>,
}

impl PartialEq for DirichletPolynomial {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (self.trimmed(), other.trimmed());
        a.coeffs == b.coeffs && (a.coeffs.is_empty() || a.n_min == b.n_min)
    }
}

impl DirichletPolynomial {
    /// Coefficients a_{n_min}, a_{n_min+1}, ….
    pub fn new(n_min: u64, coeffs: Vec<Complex64>) -> Result<Self> {
        if n_min == 0 {
            return Err(Error::InvalidParameter("Dirichlet polynomials are indexed from n = 1".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidParameter("coefficients must be finite".into()));
        }
        Ok(Self {
            n_min,
            coeffs,
            order: OnceLock::new(),
        })
    }

    pub fn zero() -> Self {
        Self {
            n_min: 1,
            coeffs: Vec::new(),
            order: OnceLock::new(),
        }
    }

    /// Build from (n, a_n) pairs; repeated indices add up.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, Complex64)>) -> Result<Self> {
        let map: BTreeMap<u64, Complex64> = pairs.into_iter().fold(BTreeMap::new(), |mut m, (n, c)| {
            *m.entry(n).or_insert(ZERO) += c;
            m
        });
        let (Some(&lo), Some(&hi)) = (map.keys().next(), map.keys().next_back()) else {
            return Ok(Self::zero());
        };
        let mut coeffs = vec![ZERO; (hi - lo + 1) as usize];
        for (n, c) in map {
            coeffs[(n - lo) as usize] = c;
        }
        Self::new(lo, coeffs)
    }

    pub fn monomial(n: u64, c: Complex64) -> Result<Self> {
        Self::new(n, vec![c])
    }

    pub fn n_min(&self) -> u64 {
        self.n_min
    }

    /// Largest stored index (n_min − 1 when empty).
    pub fn n_max(&self) -> u64 {
        self.n_min + self.coeffs.len() as u64 - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, n: u64) -> Complex64 {
        if n < self.n_min {
            return ZERO;
        }
        self.coeffs.get((n - self.n_min) as usize).copied().unwrap_or(ZERO)
    }

    /// Nonzero terms (n, a_n).
    pub fn terms(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != ZERO)
            .map(move |(k, &c)| (self.n_min + k as u64, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    /// Drop leading and trailing zero coefficients.
    pub fn trimmed(&self) -> Self {
        let first = self.coeffs.iter().position(|c| *c != ZERO);
        let last = self.coeffs.iter().rposition(|c| *c != ZERO);
        match (first, last) {
            (Some(a), Some(b)) => Self {
                n_min: self.n_min + a as u64,
                coeffs: self.coeffs[a..=b].to_vec(),
                order: OnceLock::new(),
            },
            _ => Self::zero(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() {
            return other.clone();
        }
        if other.coeffs.is_empty() {
            return self.clone();
        }
        let lo = self.n_min.min(other.n_min);
        let hi = self.n_max().max(other.n_max());
        let coeffs = (lo..=hi).map(|n| self.coeff(n) + other.coeff(n)).collect();
        Self {
            n_min: lo,
            coeffs,
            order: OnceLock::new(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            n_min: self.n_min,
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
            order: OnceLock::new(),
        }
    }

    fn order(&self) -> &[u32] {
        self.order.get_or_init(|| {
            let mut idx: Vec<u32> = (0..self.coeffs.len() as u32).filter(|&k| self.coeffs[k as usize] != ZERO).collect();
            idx.sort_by(|&a, &b| self.coeffs[b as usize].norm().total_cmp(&self.coeffs[a as usize].norm()));
            idx
        })
    }

    /// f(s) = Σ a_n e^{−s log n}, accumulated with compensation in order of
    /// decreasing |a_n|.
    pub fn evaluate(&self, s: Complex64) -> Complex64 {
        let mut acc = ComplexKahanSum::new();
        for &k in self.order() {
            let n = self.n_min + k as u64;
            acc.add(self.coeffs[k as usize] * (-s * (n as f64).ln()).exp());
        }
        acc.value()
    }

    /// ‖f‖ = (Σ |a_n|²/w_n)^{1/2}.
    pub fn dirichlet_norm(&self, w: &WeightSpec, table: Option<&DivisorTable>) -> Result<f64> {
        let mut acc = KahanSum::new();
        for (n, c) in self.terms() {
            let wn = w.weight(n, table);
            if wn == 0.0 {
                return Err(Error::ExcludedIndex { n });
            }
            acc.add(c.norm_sqr() / wn);
        }
        Ok(acc.value().sqrt())
    }

    /// Σ |a_n|².
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect::<KahanSum>().value()
    }

    /// Fast evaluator that bins the frequencies log n onto a uniform grid.
    pub fn binned(&self, dxi: f64) -> BinnedSeries {
        BinnedSeries::new(self, dxi)
    }

    /// JSON object {"n": [re, im], ...} over the nonzero terms.
    pub fn to_json_writer<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"{")?;
        let mut first = true;
        for (n, c) in self.terms() {
            if !first {
                w.write_all(b",")?;
            }
            first = false;
            write!(w, "\n  \"{n}\": [{}, {}]", serde_json::to_string(&c.re)?, serde_json::to_string(&c.im)?)?;
        }
        w.write_all(b"\n}\n")?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.to_json_writer(&mut buf)?;
        Ok(String::from_utf8(buf).expect("JSON output is UTF-8"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let map: BTreeMap<String, [f64; 2]> = serde_json::from_str(text)?;
        let pairs = map
            .into_iter()
            .map(|(k, [re, im])| {
                k.parse::<u64>()
                    .map(|n| (n, Complex64::new(re, im)))
                    .map_err(|_| Error::InvalidParameter(format!("coefficient key {k:?} is not a positive integer")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_pairs(pairs)
    }
}

/// f(s) = Σ m_n e^{−(s−1/2) log n} with the point masses m_n = a_n n^{−1/2}
/// spread onto a uniform ξ grid by 4-point Lagrange weights. Evaluation is a
/// Horner sweep over the grid. The interpolation error is about
/// 0.023 |(s−1/2)Δξ|⁴ times Σ|m_n|; beyond `z_limit` the exact sum is used.
#[derive(Debug, Clone)]
pub struct BinnedSeries {
    xi0: f64,
    dxi: f64,
    weights: Vec<Complex64>,
    z_limit: f64,
    exact: Arc<DirichletPolynomial>,
}

impl BinnedSeries {
    pub fn new(f: &DirichletPolynomial, dxi: f64) -> Self {
        let f = f.trimmed();
        let exact = Arc::new(f.clone());
        if f.is_zero() {
            return Self {
                xi0: 0.0,
                dxi,
                weights: Vec::new(),
                z_limit: f64::INFINITY,
                exact,
            };
        }
        let lo = (f.n_min() as f64).ln();
        let hi = (f.n_max() as f64).ln();
        let xi0 = lo - dxi;
        let len = ((hi - xi0) / dxi).ceil() as usize + 3;
        let mut weights = vec![ZERO; len];
        for (n, a) in f.terms() {
            let x = (n as f64).ln();
            let m = a / (n as f64).sqrt();
            let pos = (x - xi0) / dxi;
            let k = (pos.floor() as usize).clamp(1, len - 3);
            let u = pos - k as f64;
            let l = [
                -u * (u - 1.0) * (u - 2.0) / 6.0,
                (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
                -(u + 1.0) * u * (u - 2.0) / 2.0,
                (u + 1.0) * u * (u - 1.0) / 6.0,
            ];
            for (i, li) in l.iter().enumerate() {
                weights[k - 1 + i] += m * *li;
            }
        }
        // 0.023 |zΔ|⁴ ≤ 1e−9
        let z_limit = (1e-9 / 0.023f64).powf(0.25) / dxi;
        Self {
            xi0,
            dxi,
            weights,
            z_limit,
            exact,
        }
    }

    pub fn z_limit(&self) -> f64 {
        self.z_limit
    }

    pub fn polynomial(&self) -> &DirichletPolynomial {
        &self.exact
    }
}

impl HalfPlaneFn for BinnedSeries {
    fn eval(&self, s: Complex64) -> Complex64 {
        let z = s - 0.5;
        if z.norm() > self.z_limit {
            return self.exact.evaluate(s);
        }
        if self.weights.is_empty() {
            return ZERO;
        }
        let r = (-z * self.dxi).exp();
        let mut p = ZERO;
        for w in self.weights.iter().rev() {
            p = p * r + w;
        }
        p * (-z * self.xi0).exp()
    }
}

/// Analytic functions on the unit disk used as Cayley pullback data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DiskFunction {
    /// Π (z − a_j)/(1 − ā_j z).
    Blaschke(Vec<Complex64>),
    /// Σ c_k z^k.
    Polynomial(Vec<Complex64>),
}

impl DiskFunction {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Self::Blaschke(zeros) => zeros.iter().map(|&a| blaschke_factor(a, z)).product(),
            Self::Polynomial(c) => c.iter().rev().fold(ZERO, |acc, &ck| acc * z + ck),
        }
    }
}

/// b_a(z) = (z − a)/(1 − ā z).
pub fn blaschke_factor(a: Complex64, z: Complex64) -> Complex64 {
    (z - a) / (1.0 - a.conj() * z)
}

/// z = (s − 3/2)/(s + 1/2), mapping ℂ_{1/2} onto the unit disk.
pub fn cayley_map(s: Complex64) -> Result<Complex64> {
    let d = s + 0.5;
    if d == ZERO {
        return Err(Error::PointOutside("s = −1/2 is the pole of the Cayley map".into()));
    }
    Ok((s - 1.5) / d)
}

/// s = (3/2 + z/2)/(1 − z), the inverse of [`cayley_map`]; requires |z| < 1.
pub fn cayley_inverse(z: Complex64) -> Result<Complex64> {
    if !(z.norm() < 1.0) {
        return Err(Error::PointOutside(format!("|z| = {} is not inside the unit disk", z.norm())));
    }
    Ok((1.5 + 0.5 * z) / (1.0 - z))
}

/// s ↦ scale · (s+1/2)^{−exponent} · B(φ(s)).
///
/// With exponent β+1 and scale 2^β this maps the disk space with weight
/// (1−|z|²)^{β−1} isometrically onto A_β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CayleyPullback {
    pub disk: DiskFunction,
    pub beta: f64,
    pub exponent: f64,
    pub scale: Complex64,
}

impl CayleyPullback {
    pub fn isometric(disk: DiskFunction, beta: f64) -> Self {
        Self {
            disk,
            beta,
            exponent: beta + 1.0,
            scale: Complex64::new(2f64.powf(beta), 0.0),
        }
    }

    pub fn with_exponent(disk: DiskFunction, beta: f64, exponent: f64) -> Self {
        Self {
            disk,
            beta,
            exponent,
            scale: Complex64::new(1.0, 0.0),
        }
    }
}

impl HalfPlaneFn for CayleyPullback {
    fn eval(&self, s: Complex64) -> Complex64 {
        let w = s + 0.5;
        let z = (s - 1.5) / w;
        self.scale * (-self.exponent * w.ln()).exp() * self.disk.eval(z)
    }
}

/// An evaluable analytic function on ℂ_{1/2}.
#[derive(Clone)]
pub enum AnalyticHandle {
    Zero,
    /// ∫ φ(ξ) e^{−(s−1/2)ξ} dξ.
    Laplace(Arc<Profile>),
    /// A Dirichlet polynomial through its binned evaluator.
    Dirichlet(Arc<BinnedSeries>),
    Pullback(Arc<CayleyPullback>),
    /// E_N(s) = N^{−s+1/2}.
    Exponential { n: f64 },
    Scaled(Complex64, Box<AnalyticHandle>),
    Sum(Box<AnalyticHandle>, Box<AnalyticHandle>),
    Product(Box<AnalyticHandle>, Box<AnalyticHandle>),
    Custom(Arc<dyn HalfPlaneFn>),
}

impl fmt::Debug for AnalyticHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Laplace(p) => write!(f, "Laplace({} nodes)", p.xi().len()),
            Self::Dirichlet(b) => write!(f, "Dirichlet(n ≤ {})", b.polynomial().n_max()),
            Self::Pullback(p) => write!(f, "Pullback({:?})", p),
            Self::Exponential { n } => write!(f, "E_{n}"),
            Self::Scaled(c, h) => write!(f, "{c}·{h:?}"),
            Self::Sum(a, b) => write!(f, "({a:?} + {b:?})"),
            Self::Product(a, b) => write!(f, "({a:?} · {b:?})"),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl AnalyticHandle {
    pub fn laplace_of(p: Profile) -> Self {
        Self::Laplace(Arc::new(p))
    }

    pub fn exponential(n: f64) -> Self {
        Self::Exponential { n }
    }

    pub fn scaled(self, c: Complex64) -> Self {
        Self::Scaled(c, Box::new(self))
    }

    pub fn plus(self, other: Self) -> Self {
        Self::Sum(Box::new(self), Box::new(other))
    }

    pub fn minus(self, other: Self) -> Self {
        self.plus(other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn times(self, other: Self) -> Self {
        Self::Product(Box::new(self), Box::new(other))
    }
}

impl HalfPlaneFn for AnalyticHandle {
    fn eval(&self, s: Complex64) -> Complex64 {
        match self {
            Self::Zero => ZERO,
            Self::Laplace(p) => p.laplace(s),
            Self::Dirichlet(b) => b.eval(s),
            Self::Pullback(p) => p.eval(s),
            Self::Exponential { n } => (-(s - 0.5) * n.ln()).exp(),
            Self::Scaled(c, h) => c * h.eval(s),
            Self::Sum(a, b) => a.eval(s) + b.eval(s),
            Self::Product(a, b) => a.eval(s) * b.eval(s),
            Self::Custom(f) => f.eval(s),
        }
    }
}

impl<T: HalfPlaneFn + ?Sized> HalfPlaneFn for Arc<T> {
    fn eval(&self, s: Complex64) -> Complex64 {
        (**self).eval(s)
    }

    fn eval_many(&self, pts: &[Complex64]) -> Vec<Complex64> {
        (**self).eval_many(pts)
    }
}

/// ‖F‖_{A_β} with the quadrature error indicators.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct BergmanNorm {
    pub norm: f64,
    pub quadrature: QuadratureResult,
}

/// ‖F‖_{A_β} = (∫ |F|² (σ−1/2)^{β−1} dm)^{1/2} by tensor quadrature.
pub fn bergman_norm(f: &dyn HalfPlaneFn, beta: f64, quad: &QuadratureSpec) -> Result<BergmanNorm> {
    let q = integrate_half_plane(|s| f.eval(s).norm_sqr(), beta, quad)?;
    Ok(BergmanNorm {
        norm: q.value.max(0.0).sqrt(),
        quadrature: q,
    })
}

/// Outcome of comparing disk and half-plane norms under a Cayley pullback.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct CayleyCheck {
    pub disk_norm_sq: f64,
    pub half_plane_norm_sq: f64,
    /// half-plane / disk for the tested function.
    pub ratio: f64,
    /// half-plane / disk for B ≡ 1 under the same pullback.
    pub calibration: f64,
    /// |ratio / calibration − 1|.
    pub relative_error: f64,
}

/// Compare ∫_𝔻 |B|² (1−|z|²)^{β−1} dm with ‖pullback(B)‖²_{A_β}, after
/// dividing out the ratio measured for B ≡ 1.
pub fn cayley_pullback_norm_check(
    b: &DiskFunction,
    beta: f64,
    exponent: f64,
    quad: &QuadratureSpec,
    disk_quad: &DiskQuadratureSpec,
) -> Result<CayleyCheck> {
    let ratio_of = |d: &DiskFunction| -> Result<(f64, f64)> {
        let disk = integrate_disk(|z| d.eval(z).norm_sqr(), beta, disk_quad)?;
        let pb = CayleyPullback::with_exponent(d.clone(), beta, exponent);
        let half = bergman_norm(&pb, beta, quad)?.norm.powi(2);
        Ok((disk, half))
    };
    let (d1, h1) = ratio_of(&DiskFunction::Polynomial(vec![Complex64::new(1.0, 0.0)]))?;
    let (disk, half) = ratio_of(b)?;
    if disk == 0.0 || d1 == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let calibration = h1 / d1;
    let ratio = half / disk;
    Ok(CayleyCheck {
        disk_norm_sq: disk,
        half_plane_norm_sq: half,
        ratio,
        calibration,
        relative_error: (ratio / calibration - 1.0).abs(),
    })
}

/// Sampling parameters for ℋ^p norms through the Bohr lift.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MonteCarloSpec {
    pub samples: usize,
    pub seed: u64,
    /// Up to this many primes the torus average is a tensor trapezoid rule
    /// instead of a random sample.
    pub max_grid_primes: usize,
    /// Trapezoid points per torus coordinate in grid mode.
    pub grid_points: usize,
}

impl Default for MonteCarloSpec {
    fn default() -> Self {
        Self {
            samples: 20_000,
            seed: 0,
            max_grid_primes: 2,
            grid_points: 4096,
        }
    }
}

/// Estimate of an ℋ^p norm with its standard error.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct HardyEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Prime exponents of n as (prime index, exponent) pairs.
fn factor_into(mut n: u64, primes: &mut Vec<u64>) -> Vec<(usize, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((prime_index(p, primes), e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((prime_index(n, primes), 1));
    }
    out
}

fn prime_index(p: u64, primes: &mut Vec<u64>) -> usize {
    match primes.iter().position(|&q| q == p) {
        Some(i) => i,
        None => {
            primes.push(p);
            primes.len() - 1
        }
    }
}

/// ‖f‖_{ℋ^p} via the Bohr lift: p_j^{−it} becomes an independent uniform
/// point z_j of the unit circle and the norm is the L^p norm over the torus.
pub fn hardy_norm(f: &DirichletPolynomial, p: f64, mc: &MonteCarloSpec) -> Result<HardyEstimate> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("Hardy exponent p = {p} must be at least 1")));
    }
    let mut primes = Vec::new();
    let terms: Vec<(Complex64, Vec<(usize, u32)>)> = f.terms().map(|(n, c)| (c, factor_into(n, &mut primes))).collect();
    if terms.is_empty() {
        return Ok(HardyEstimate {
            estimate: 0.0,
            std_error: 0.0,
        });
    }
    let k = primes.len();
    let value_at = |theta: &[f64]| -> f64 {
        let mut acc = ComplexKahanSum::new();
        for (c, exps) in &terms {
            let phase: f64 = exps.iter().map(|&(i, e)| e as f64 * theta[i]).sum();
            acc.add(c * Complex64::from_polar(1.0, phase));
        }
        acc.value().norm().powf(p)
    };
    if k == 0 {
        return Ok(HardyEstimate {
            estimate: terms[0].0.norm(),
            std_error: 0.0,
        });
    }
    if k <= mc.max_grid_primes {
        let grid_mean = |m: usize| -> f64 {
            let h = TAU / m as f64;
            let mut acc = KahanSum::new();
            let mut theta = vec![0.0; k];
            let total = m.pow(k as u32);
            for idx in 0..total {
                let mut r = idx;
                for th in theta.iter_mut() {
                    *th = (r % m) as f64 * h;
                    r /= m;
                }
                acc.add(value_at(&theta));
            }
            acc.value() / total as f64
        };
        let m = if k == 1 { mc.grid_points } else { (mc.grid_points as f64).sqrt().ceil() as usize };
        let fine = grid_mean(m.max(4));
        let coarse = grid_mean((m / 2).max(2));
        let est = fine.powf(1.0 / p);
        let err = (fine.powf(1.0 / p) - coarse.powf(1.0 / p)).abs();
        return Ok(HardyEstimate {
            estimate: est,
            std_error: err,
        });
    }
    if mc.samples < 2 {
        return Err(Error::InvalidParameter("Monte Carlo needs at least two samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
    let mut theta = vec![0.0; k];
    let mut sum = KahanSum::new();
    let mut sum_sq = KahanSum::new();
    for _ in 0..mc.samples {
        for th in theta.iter_mut() {
            *th = rng.random::<f64>() * TAU;
        }
        let v = value_at(&theta);
        sum.add(v);
        sum_sq.add(v * v);
    }
    let n = mc.samples as f64;
    let mean = sum.value() / n;
    let var = ((sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0);
    let se_mean = (var / n).sqrt();
    let est = mean.powf(1.0 / p);
    // delta method for m ↦ m^{1/p}
    let se = if mean > 0.0 { est / (p * mean) * se_mean } else { 0.0 };
    Ok(HardyEstimate {
        estimate: est,
        std_error: se,
    })
}

/// Comparison of ‖f‖_{𝒟_1} with the estimated ‖f‖_{ℋ^1}.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct HelsonReport {
    pub d1: f64,
    pub h1: f64,
    pub h1_err: f64,
    pub holds: bool,
}

pub fn helson_check(f: &DirichletPolynomial, mc: &MonteCarloSpec) -> Result<HelsonReport> {
    let d1 = f.dirichlet_norm(&WeightSpec::divisor_power(1.0), None)?;
    let h = hardy_norm(f, 1.0, mc)?;
    Ok(HelsonReport {
        d1,
        h1: h.estimate,
        h1_err: h.std_error,
        // equality holds for monomials, so leave room for rounding
        holds: d1 <= h.estimate + 3.0 * h.std_error + 1e-12 * h.estimate,
    })
}

/// Polynomial a_1 + … + a_m m^{−s} with i.i.d. standard complex Gaussian
/// coefficients, m drawn uniformly from 1..=max_len.
pub fn random_polynomial<R: Rng>(rng: &mut R, max_len: u64) -> DirichletPolynomial {
    let m = rng.random_range(1..=max_len);
    let coeffs = (0..m)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect();
    DirichletPolynomial::new(1, coeffs).expect("n_min = 1")
}

/// (1/2π) ∫ |1 + e^{iθ}| dθ = 4/π.
pub const HARDY1_ONE_PLUS_TWO: f64 = 4.0 / PI;
