//! Iterative construction of Dirichlet polynomials vanishing on a finite
//! set S ⊂ ℂ_{1/2}.
//!
//! G is a normalized Bergman function vanishing exactly on S. For F with
//! profile φ supported on [log N, ∞) the step is
//!
//! ```text
//! f = discretize(φ),  Φ = F − f,  ∂̄u = (∂̄Θ)Φ / (G E_N),  T_N F = ΘΦ − G E_N u,
//! ```
//!
//! and the profile of T_N F is recovered by contour inversion. Starting from
//! F_0 = E_N G, the partial sums f_0 + … + f_j + F_{j+1} vanish on S.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dbar::{bump_theta, dbar_theta, BoxDomain, CauchySolver, GridFunction, DEFAULT_H};
use crate::discretization::{beta_of, discretize_truncated, BlockPartition};
use crate::divisor::{DivisorTable, WeightSpec};
use crate::error::{Error, Result};
use crate::paley_wiener::{laplace_invert_native, FftSpec, Profile};
use crate::quadrature::{integrate_disk, DiskQuadratureSpec, QuadratureSpec};
use crate::spaces::{
    bergman_norm, cayley_map, AnalyticHandle, BinnedSeries, CayleyPullback, DirichletPolynomial, DiskFunction,
    HalfPlaneFn, ZeroSequence,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Parameters of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub alpha: f64,
    pub n: u64,
    pub domain: BoxDomain,
    pub iterations: usize,
    pub fft: FftSpec,
    /// Accepted vanishing residual relative to ‖f‖_{𝒟_α}.
    pub tolerance: f64,
    /// ∂̄ grid spacing.
    pub h: f64,
    /// Bin width of the fast Dirichlet-polynomial evaluator.
    pub bin_dxi: f64,
    /// Recovered profiles are kept on [log N, log N + xi_span].
    pub xi_span: f64,
}

impl SchemeConfig {
    pub fn new(alpha: f64, n: u64) -> Self {
        Self {
            alpha,
            n,
            domain: BoxDomain { r: 6.0, tau: 6.0 },
            iterations: 3,
            fft: FftSpec::default(),
            tolerance: 1e-2,
            h: DEFAULT_H,
            bin_dxi: 1e-3,
            xi_span: 30.0,
        }
    }

    pub fn beta(&self) -> f64 {
        beta_of(self.alpha)
    }

    pub fn log_n(&self) -> f64 {
        (self.n as f64).ln()
    }
}

/// c · 2^β (s+1/2)^{−(β+1)} Π_j b_{z_j}(φ(s)) with z_j = φ(s_j), scaled to
/// unit A_β norm.
#[derive(Debug, Clone)]
pub struct VanishingG {
    pub pullback: CayleyPullback,
    /// ‖G‖_{A_β} by half-plane quadrature (should be 1).
    pub quadrature_norm: f64,
}

impl HalfPlaneFn for VanishingG {
    fn eval(&self, s: Complex64) -> Complex64 {
        self.pullback.eval(s)
    }
}

/// Normalized G ∈ A_β vanishing exactly on S (with multiplicity).
pub fn build_vanishing_g(s: &ZeroSequence, beta: f64, quad: &QuadratureSpec) -> Result<VanishingG> {
    let zeros = s.points().iter().map(|p| cayley_map(p.s())).collect::<Result<Vec<_>>>()?;
    let disk = DiskFunction::Blaschke(zeros);
    // the pullback is an isometry, so normalize on the disk
    let dq = DiskQuadratureSpec {
        n_radial: 200,
        n_angular: 512,
    };
    let disk_norm = integrate_disk(|z| disk.eval(z).norm_sqr(), beta, &dq)?.sqrt();
    let mut pullback = CayleyPullback::isometric(disk, beta);
    pullback.scale /= disk_norm;
    let quadrature_norm = bergman_norm(&pullback, beta, quad)?.norm;
    Ok(VanishingG {
        pullback,
        quadrature_norm,
    })
}

/// Φ(s) = ∫ φ e^{−(s−1/2)ξ} dξ − f(s) with f through its binned evaluator.
#[derive(Debug, Clone)]
pub struct DiscretizationError {
    pub phi: Arc<Profile>,
    pub f: Arc<BinnedSeries>,
}

impl HalfPlaneFn for DiscretizationError {
    fn eval(&self, s: Complex64) -> Complex64 {
        self.phi.laplace(s) - self.f.eval(s)
    }
}

/// T_N F = ΘΦ − G E_N u as an evaluable function.
#[derive(Debug, Clone)]
pub struct Residual {
    pub domain: BoxDomain,
    pub log_n: f64,
    pub phi_err: DiscretizationError,
    pub g: Arc<VanishingG>,
    pub u: Arc<CauchySolver>,
}

impl Residual {
    fn e_n(&self, s: Complex64) -> Complex64 {
        (-(s - 0.5) * self.log_n).exp()
    }
}

impl HalfPlaneFn for Residual {
    fn eval(&self, s: Complex64) -> Complex64 {
        let theta = bump_theta(&self.domain, s);
        let a = if theta > 0.0 { self.phi_err.eval(s) * theta } else { ZERO };
        a - self.g.eval(s) * self.e_n(s) * self.u.eval(s)
    }

    fn eval_many(&self, pts: &[Complex64]) -> Vec<Complex64> {
        pts.par_iter().map(|&s| self.eval(s)).collect()
    }
}

/// Result of one application of T_N.
#[derive(Debug, Clone)]
pub struct Step {
    pub f: DirichletPolynomial,
    pub residual: Arc<Residual>,
    /// Profile of T_N F on [log N, log N + xi_span].
    pub next: Profile,
    /// ‖T_N F‖ / ‖F‖ from the profile norms.
    pub ratio: f64,
    /// ‖φ·1_{ξ > ξ_top}‖_{L²_β}: the part beyond the partition.
    pub tail_norm: f64,
    /// sup |(∂̄Θ)Φ/(G E_N)| on the grid.
    pub g_sup: f64,
}

/// S, N, α, the partition and G bundled for repeated applications of T_N.
pub struct Scheme<'a> {
    pub cfg: SchemeConfig,
    pub zeros: ZeroSequence,
    pub table: &'a DivisorTable,
    pub partition: BlockPartition,
    pub g: Arc<VanishingG>,
}

impl<'a> Scheme<'a> {
    pub fn new(zeros: ZeroSequence, cfg: SchemeConfig, table: &'a DivisorTable) -> Result<Self> {
        for p in zeros.points() {
            if !cfg.domain.contains_shrunk(p.s(), 2.0) || p.excess() <= 0.0 {
                return Err(Error::PointOutside(format!(
                    "{} (outside Ω(R−2, τ−2) for R = {}, τ = {})",
                    p.s(),
                    cfg.domain.r,
                    cfg.domain.tau
                )));
            }
        }
        if cfg.iterations == 0 {
            return Err(Error::InvalidParameter("at least one iteration is required".into()));
        }
        let partition = BlockPartition::build_to_table(cfg.alpha, cfg.n, table)?;
        let g = Arc::new(build_vanishing_g(&zeros, cfg.beta(), &QuadratureSpec::default())?);
        Ok(Self {
            cfg,
            zeros,
            table,
            partition,
            g,
        })
    }

    /// E_N(s) = N^{−s+1/2}.
    pub fn e_n(&self, s: Complex64) -> Complex64 {
        (-(s - 0.5) * self.cfg.log_n()).exp()
    }

    /// Profile of an E_N A_β function on [log N, log N + xi_span].
    pub fn profile_of(&self, f: &dyn HalfPlaneFn) -> Result<Profile> {
        let lo = self.cfg.log_n();
        laplace_invert_native(f, lo, lo + self.cfg.xi_span, &self.cfg.fft)
    }

    /// Profile of F_0 = E_N G.
    pub fn initial_profile(&self) -> Result<Profile> {
        let f0 = AnalyticHandle::Custom(self.g.clone()).times(AnalyticHandle::exponential(self.cfg.n as f64));
        self.profile_of(&f0)
    }

    /// One application of T_N to the function with profile φ.
    pub fn apply(&self, phi: &Profile) -> Result<Step> {
        let beta = self.cfg.beta();
        let norm_in = phi.l2beta_norm(beta)?;
        let (f, tail_norm) = discretize_truncated(phi, &self.partition)?;
        let phi_err = DiscretizationError {
            phi: Arc::new(phi.clone()),
            f: Arc::new(f.binned(self.cfg.bin_dxi)),
        };
        let domain = self.cfg.domain;
        let g_fn = self.g.clone();
        let log_n = self.cfg.log_n();
        let rhs = GridFunction::from_fn_where(
            domain,
            self.cfg.h,
            |s| dbar_theta(&domain, s) != ZERO,
            |s| {
                let en = (-(s - 0.5) * log_n).exp();
                dbar_theta(&domain, s) * phi_err.eval(s) / (g_fn.eval(s) * en)
            },
        )?;
        let g_sup = rhs.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if !g_sup.is_finite() {
            return Err(Error::InvalidParameter("G E_N vanishes on the cutoff collar".into()));
        }
        let residual = Arc::new(Residual {
            domain,
            log_n,
            phi_err,
            g: self.g.clone(),
            u: Arc::new(CauchySolver::new(rhs)),
        });
        let next = if phi.is_zero() {
            Profile::zero_on(log_n, log_n + self.cfg.xi_span)
        } else {
            self.profile_of(residual.as_ref())?
        };
        let norm_out = next.l2beta_norm(beta)?;
        Ok(Step {
            f,
            residual,
            next,
            ratio: if norm_in > 0.0 { norm_out / norm_in } else { 0.0 },
            tail_norm,
            g_sup,
        })
    }

    /// Iterate from the given starting profile.
    pub fn iterate(&self, phi0: Profile) -> Result<SchemeRun> {
        let beta = self.cfg.beta();
        let mut norm_history = vec![phi0.l2beta_norm(beta)?];
        let mut f_list = Vec::new();
        let mut tail_norms = Vec::new();
        let mut ratios = Vec::new();
        let mut telescoping = Vec::new();
        let mut phi = phi0.clone();
        let mut partial = DirichletPolynomial::zero();
        for _ in 0..self.cfg.iterations {
            let step = self.apply(&phi)?;
            partial = partial.add(&step.f);
            let binned = partial.binned(self.cfg.bin_dxi);
            telescoping.push(
                self.zeros
                    .distinct()
                    .iter()
                    .map(|(p, _)| (binned.eval(p.s()) + step.next.laplace(p.s())).norm())
                    .collect(),
            );
            norm_history.push(step.next.l2beta_norm(beta)?);
            tail_norms.push(step.tail_norm);
            ratios.push(step.ratio);
            f_list.push(step.f);
            phi = step.next;
        }
        Ok(SchemeRun {
            f_total: partial,
            f_list,
            initial: phi0,
            last: phi,
            norm_history,
            tail_norms,
            ratios,
            telescoping,
        })
    }

    /// Largest ‖T_N F‖/‖F‖ over the trial profiles.
    pub fn estimate_operator_norm(&self, trials: &[Profile]) -> Result<f64> {
        if trials.is_empty() {
            return Err(Error::InvalidParameter("no trial profiles".into()));
        }
        let mut worst: f64 = 0.0;
        for p in trials {
            if p.l2beta_norm(self.cfg.beta())? == 0.0 {
                return Err(Error::ZeroNorm);
            }
            worst = worst.max(self.apply(p)?.ratio);
        }
        Ok(worst)
    }
}

/// Output of an iteration.
#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub f_total: DirichletPolynomial,
    pub f_list: Vec<DirichletPolynomial>,
    pub initial: Profile,
    pub last: Profile,
    /// ‖F_0‖, ‖F_1‖, … in A_β, from the profiles.
    pub norm_history: Vec<f64>,
    pub tail_norms: Vec<f64>,
    pub ratios: Vec<f64>,
    /// |f_0 + … + f_j + F_{j+1}| at each distinct point of S, per iteration.
    pub telescoping: Vec<Vec<f64>>,
}

impl SchemeRun {
    pub fn is_contracting(&self) -> bool {
        self.norm_history.windows(2).all(|w| w[1] < w[0])
    }

    pub fn check_contraction(&self) -> Result<()> {
        if self.is_contracting() {
            Ok(())
        } else {
            Err(Error::ContractionFailure {
                history: self.norm_history.clone(),
            })
        }
    }
}

/// Summary of a vanishing run, computed with the plain polynomial evaluator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeReport {
    pub alpha: f64,
    pub n: u64,
    pub iterations: usize,
    pub norm_history: Vec<f64>,
    pub ratios: Vec<f64>,
    pub tail_norms: Vec<f64>,
    pub f_total_norm: f64,
    /// |f_total(s_k)| / ‖f_total‖_{𝒟_α} for each distinct point.
    pub vanishing_residuals: Vec<f64>,
    pub max_residual: f64,
    /// f_j(1) for each j.
    pub f_at_one: Vec<[f64; 2]>,
    /// |f_0(1)| − Σ_{j≥1} |f_j(1)|.
    pub nontriviality_margin: f64,
    pub telescoping: Vec<Vec<f64>>,
    pub contracting: bool,
    pub g_norm_quadrature: f64,
}

/// Run the vanishing scheme from F_0 = E_N G.
pub fn run_scheme_unchecked(zeros: &ZeroSequence, cfg: &SchemeConfig, table: &DivisorTable) -> Result<(SchemeRun, SchemeReport)> {
    let scheme = Scheme::new(zeros.clone(), cfg.clone(), table)?;
    let run = scheme.iterate(scheme.initial_profile()?)?;
    let report = summarize(&scheme, &run)?;
    Ok((run, report))
}

/// As [`run_scheme_unchecked`], failing when the norms do not decrease.
pub fn run_scheme(zeros: &ZeroSequence, cfg: &SchemeConfig, table: &DivisorTable) -> Result<(SchemeRun, SchemeReport)> {
    let (run, report) = run_scheme_unchecked(zeros, cfg, table)?;
    run.check_contraction()?;
    Ok((run, report))
}

fn summarize(scheme: &Scheme<'_>, run: &SchemeRun) -> Result<SchemeReport> {
    let w = WeightSpec::divisor_power(scheme.cfg.alpha);
    let total_norm = run.f_total.dirichlet_norm(&w, Some(scheme.table))?;
    let residuals: Vec<f64> = scheme
        .zeros
        .distinct()
        .iter()
        .map(|(p, _)| {
            let v = run.f_total.evaluate(p.s()).norm();
            if total_norm > 0.0 {
                v / total_norm
            } else {
                v
            }
        })
        .collect();
    let one = Complex64::new(1.0, 0.0);
    let f_at_one: Vec<Complex64> = run.f_list.iter().map(|f| f.evaluate(one)).collect();
    let margin = f_at_one.first().map(|v| v.norm()).unwrap_or(0.0) - f_at_one.iter().skip(1).map(|v| v.norm()).sum::<f64>();
    Ok(SchemeReport {
        alpha: scheme.cfg.alpha,
        n: scheme.cfg.n,
        iterations: scheme.cfg.iterations,
        norm_history: run.norm_history.clone(),
        ratios: run.ratios.clone(),
        tail_norms: run.tail_norms.clone(),
        f_total_norm: total_norm,
        max_residual: residuals.iter().copied().fold(0.0, f64::max),
        vanishing_residuals: residuals,
        f_at_one: f_at_one.iter().map(|v| [v.re, v.im]).collect(),
        nontriviality_margin: margin,
        telescoping: run.telescoping.clone(),
        contracting: run.is_contracting(),
        g_norm_quadrature: scheme.g.quadrature_norm,
    })
}

/// Interpolation outcome at the points of S.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub targets: Vec<[f64; 2]>,
    pub values: Vec<[f64; 2]>,
    /// |f_total(s_k) − F(s_k)| / |F(s_k)|.
    pub relative_errors: Vec<f64>,
    /// max_k |f_total(s_k) − F(s_k)| / ‖F‖_{A_β}.
    pub normalized_error: f64,
    pub norm_history: Vec<f64>,
}

/// Find f with f = F on S, starting the iteration from F_0 = F. The target's
/// profile must be supported on [log N, ∞).
pub fn run_interpolation(
    zeros: &ZeroSequence,
    target: &AnalyticHandle,
    cfg: &SchemeConfig,
    table: &DivisorTable,
) -> Result<(DirichletPolynomial, InterpolationReport)> {
    let scheme = Scheme::new(zeros.clone(), cfg.clone(), table)?;
    let phi0 = match target {
        AnalyticHandle::Laplace(p) => {
            if p.support_left() < cfg.log_n() - 1e-9 && !p.is_zero() {
                return Err(Error::SupportViolation(format!(
                    "target profile starts at {} below log N = {}",
                    p.support_left(),
                    cfg.log_n()
                )));
            }
            (**p).clone()
        }
        AnalyticHandle::Zero => Profile::zero_on(cfg.log_n(), cfg.log_n() + cfg.xi_span),
        other => scheme.profile_of(other)?,
    };
    let run = scheme.iterate(phi0.clone())?;
    let norm = phi0.l2beta_norm(cfg.beta())?;
    let mut targets = Vec::new();
    let mut values = Vec::new();
    let mut rel = Vec::new();
    let mut worst: f64 = 0.0;
    for (p, _) in zeros.distinct() {
        let t = target.eval(p.s());
        let v = run.f_total.evaluate(p.s());
        targets.push([t.re, t.im]);
        values.push([v.re, v.im]);
        rel.push(if t.norm() > 0.0 { (v - t).norm() / t.norm() } else { (v - t).norm() });
        worst = worst.max((v - t).norm());
    }
    let report = InterpolationReport {
        targets,
        values,
        relative_errors: rel,
        normalized_error: if norm > 0.0 { worst / norm } else { worst },
        norm_history: run.norm_history.clone(),
    };
    Ok((run.f_total, report))
}

/// Trial profiles (ξ − log N)^k e^{−(ξ − log N)} on [log N, log N + width].
pub fn monomial_trials(log_n: f64, width: f64, degrees: &[i32], cells: usize) -> Result<Vec<Profile>> {
    degrees
        .iter()
        .map(|&k| Profile::from_real_fn(|x| (x - log_n).powi(k) * (-(x - log_n)).exp(), log_n, log_n + width, cells, log_n))
        .collect()
}

/// max |F(σ+it)| N^{σ−1/2} over a grid of σ ∈ [1, 3], |t| ≤ t_max.
pub fn en_membership(f: &dyn HalfPlaneFn, n: f64, t_max: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..=8 {
        let sigma = 1.0 + 0.25 * i as f64;
        for k in -8..=8 {
            let s = Complex64::new(sigma, t_max * k as f64 / 8.0);
            worst = worst.max(f.eval(s).norm() * ((sigma - 0.5) * n.ln()).exp());
        }
    }
    worst
}
