//! Closed-form Gaussian distances: 1-d Hellinger, the root average squared
//! Hellinger distance between Whittle laws, Kullback–Leibler divergence with
//! its variance term, and numerical audits of the bounds relating them to
//! parameter distances.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fourier::{build_freq_cov, make_design, DesignKind, DesignSpec};
use crate::linalg::{cholesky_strict, sym_eigenvalues, sym_inv_sqrt, SpdFactor};
use crate::rng::rng_from_seed;
use crate::spectral::{simpson, SpectralDensity};

/// Two univariate Gaussians; `s1`, `s2` are variances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussPair1d {
    pub mu1: f64,
    pub mu2: f64,
    pub s1: f64,
    pub s2: f64,
}

impl GaussPair1d {
    pub fn new(mu1: f64, mu2: f64, s1: f64, s2: f64) -> Result<Self> {
        if !(s1 > 0.0 && s2 > 0.0) || !(mu1.is_finite() && mu2.is_finite()) {
            return Err(invalid(format!(
                "need finite means and positive variances, got ({mu1}, {mu2}, {s1}, {s2})"
            )));
        }
        Ok(Self { mu1, mu2, s1, s2 })
    }
}

/// `d_H² = 1 − √(2σ₁σ₂/(σ₁²+σ₂²)) exp(−(μ₁−μ₂)²/(4(σ₁²+σ₂²)))`, returned as `d_H`.
pub fn hellinger_1d(p: &GaussPair1d) -> f64 {
    hellinger_sq(p.mu1, p.mu2, p.s1, p.s2).sqrt()
}

fn hellinger_sq(mu1: f64, mu2: f64, s1: f64, s2: f64) -> f64 {
    let sum = s1 + s2;
    let bc = (2.0 * (s1 * s2).sqrt() / sum).sqrt() * (-(mu1 - mu2).powi(2) / (4.0 * sum)).exp();
    (1.0 - bc).clamp(0.0, 1.0)
}

/// `½∫(√p − √q)²` by Simpson's rule; a check on [`hellinger_1d`].
pub fn hellinger_1d_quadrature(p: &GaussPair1d) -> f64 {
    let sd = p.s1.max(p.s2).sqrt();
    let lo = p.mu1.min(p.mu2) - 40.0 * sd;
    let hi = p.mu1.max(p.mu2) + 40.0 * sd;
    let dens =
        |x: f64, m: f64, s: f64| (-(x - m).powi(2) / (2.0 * s)).exp() / (2.0 * PI * s).sqrt();
    let integrand = |x: f64| (dens(x, p.mu1, p.s1).sqrt() - dens(x, p.mu2, p.s2).sqrt()).powi(2);
    (0.5 * simpson(integrand, lo, hi, 200_000)).sqrt()
}

/// Means and variances of the `n` Fourier coefficients under `(θ, f)`.
fn whittle_marginals<F: SpectralDensity + ?Sized>(
    design: &DesignSpec,
    theta: &[f64],
    f: &F,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if theta.len() != design.r() {
        return Err(invalid(format!(
            "θ has length {}, design has {} columns",
            theta.len(),
            design.r()
        )));
    }
    let d = build_freq_cov(|w| f.eval(w), design.n)?;
    let th = DVector::from_column_slice(theta);
    let mean = (&design.xtilde * th).as_slice().to_vec();
    Ok((mean, d.diag))
}

/// `√((1/n) Σ_j d_H²(p_j(θ₀, f₀), p_j(θ, f)))` over the Fourier coefficients.
pub fn d_nh<F: SpectralDensity + ?Sized, G: SpectralDensity + ?Sized>(
    design: &DesignSpec,
    theta: &[f64],
    f: &F,
    theta0: &[f64],
    f0: &G,
) -> Result<f64> {
    let (m, s) = whittle_marginals(design, theta, f)?;
    let (m0, s0) = whittle_marginals(design, theta0, f0)?;
    let total: f64 = (0..design.n)
        .map(|j| hellinger_sq(m0[j], m[j], s0[j], s[j]))
        .sum();
    Ok((total / design.n as f64).sqrt())
}

/// `K = KL(N(μ₀,Σ₀) ‖ N(μ₁,Σ₁))` and `V = Var_{N(μ₀,Σ₀)} log(p₀/p₁)`.
pub fn kl_gaussian(
    mu0: &[f64],
    sigma0: &DMatrix<f64>,
    mu1: &[f64],
    sigma1: &DMatrix<f64>,
) -> Result<(f64, f64)> {
    let d = mu0.len();
    if mu1.len() != d || sigma0.nrows() != d || sigma1.nrows() != d {
        return Err(invalid("dimension mismatch between means and covariances"));
    }
    let c0 = cholesky_strict(sigma0)?;
    let c1 = cholesky_strict(sigma1)?;
    let s1_inv = c1.inverse();
    let s0_inv = c0.inverse();
    let delta = DVector::from_fn(d, |i, _| mu0[i] - mu1[i]);
    let logdet = |c: &nalgebra::Cholesky<f64, nalgebra::Dyn>| {
        2.0 * c.l().diagonal().iter().map(|v| v.ln()).sum::<f64>()
    };
    let m = &s1_inv * sigma0;
    let k =
        0.5 * (m.trace() - d as f64 + delta.dot(&(&s1_inv * &delta)) + logdet(&c1) - logdet(&c0));
    let a = &s1_inv - &s0_inv;
    let as0 = &a * sigma0;
    let b = &s1_inv * &delta;
    let v = 0.5 * (&as0 * &as0).trace() + b.dot(&(sigma0 * &b));
    Ok((k.max(0.0), v.max(0.0)))
}

/// `(K_n, V_n) = (K, V) / n` between the Whittle laws `N(X̃θ₀, D₀)` and `N(X̃θ, D)`.
pub fn kn_vn<F: SpectralDensity + ?Sized, G: SpectralDensity + ?Sized>(
    design: &DesignSpec,
    theta: &[f64],
    f: &F,
    theta0: &[f64],
    f0: &G,
) -> Result<(f64, f64)> {
    let (m1, s1) = whittle_marginals(design, theta, f)?;
    let (m0, s0) = whittle_marginals(design, theta0, f0)?;
    let (k, v) = diagonal_kl(&m0, &s0, &m1, &s1);
    let n = design.n as f64;
    Ok((k / n, v / n))
}

fn diagonal_kl(m0: &[f64], s0: &[f64], m1: &[f64], s1: &[f64]) -> (f64, f64) {
    let mut k = 0.0;
    let mut v = 0.0;
    for j in 0..m0.len() {
        let r = s0[j] / s1[j];
        let d2 = (m0[j] - m1[j]).powi(2);
        k += 0.5 * (r - 1.0 + d2 / s1[j] - r.ln());
        v += 0.5 * (r - 1.0).powi(2) + d2 * s0[j] / (s1[j] * s1[j]);
    }
    (k.max(0.0), v.max(0.0))
}

/// Fitted proportionality constants of a bound `quantity ≤ C · distance`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundFit {
    pub instances: usize,
    /// Largest observed `K / distance`.
    pub c_k: f64,
    /// Largest observed `V / distance`.
    pub c_v: f64,
    /// Every `K`, `V` and distance was finite and nonnegative.
    pub all_finite: bool,
}

impl BoundFit {
    fn from_ratios(ratios: &[(f64, f64, f64)]) -> Self {
        let all_finite = ratios
            .iter()
            .all(|&(k, v, d)| k.is_finite() && v.is_finite() && k >= 0.0 && v >= 0.0 && d > 0.0);
        let c_k = ratios.iter().map(|&(k, _, d)| k / d).fold(0.0, f64::max);
        let c_v = ratios.iter().map(|&(_, v, d)| v / d).fold(0.0, f64::max);
        Self {
            instances: ratios.len(),
            c_k,
            c_v,
            all_finite,
        }
    }
}

fn random_spd<R: Rng>(rng: &mut R, d: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let ev = DMatrix::from_diagonal(&DVector::from_fn(d, |_, _| rng.random_range(lo..hi)));
    let m = &q * ev * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// Random pairs with eigenvalues in `[0.5, 2]` and
/// `λ_min(Σ₁^{-1/2} Σ₀ Σ₁^{-1/2}) ≥ ½`, against
/// `‖Σ₀ − Σ₁‖_F² + ‖μ₀ − μ₁‖²`.
pub fn kl_bound_audit(dim: usize, instances: usize, seed: u64) -> Result<BoundFit> {
    let mut rng = rng_from_seed(seed);
    let mut ratios = Vec::with_capacity(instances);
    while ratios.len() < instances {
        let s0 = random_spd(&mut rng, dim, 0.5, 2.0);
        let s1 = random_spd(&mut rng, dim, 0.5, 2.0);
        let r = sym_inv_sqrt(&s1);
        if sym_eigenvalues(&(&r * &s0 * &r))[0] < 0.5 {
            continue;
        }
        let mu0: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let mu1: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let (k, v) = kl_gaussian(&mu0, &s0, &mu1, &s1)?;
        let dist = (&s0 - &s1).norm_squared()
            + mu0
                .iter()
                .zip(&mu1)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>();
        ratios.push((k, v, dist));
    }
    Ok(BoundFit::from_ratios(&ratios))
}

/// Smooth AR(1) truth plus a bounded cosine perturbation.
#[derive(Clone, Copy, Debug)]
struct PerturbedSpectrum {
    alpha: f64,
    amp: f64,
    freq: f64,
}

impl PerturbedSpectrum {
    fn base(&self, w: f64) -> f64 {
        1.0 / (2.0 * PI * (1.0 - 2.0 * self.alpha * w.cos() + self.alpha * self.alpha))
    }
}

fn random_instance<R: Rng>(rng: &mut R, r: usize) -> (PerturbedSpectrum, Vec<f64>, Vec<f64>) {
    let alpha: f64 = rng.random_range(-0.5..0.5);
    // τ₀ = half the minimum of f₀, so f stays ≥ τ₀ > 0.
    let tau0 = 0.5 / (2.0 * PI * (1.0 + alpha.abs()).powi(2));
    let pert = PerturbedSpectrum {
        alpha,
        amp: rng.random_range(-0.9..0.9) * tau0,
        freq: rng.random_range(0.0..4.0),
    };
    let theta0: Vec<f64> = (0..r).map(|_| rng.sample(StandardNormal)).collect();
    let theta: Vec<f64> = theta0
        .iter()
        .map(|t| t + 0.3 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    (pert, theta, theta0)
}

/// Fit of `n K_n ≤ C (‖D − D₀‖_F² + ‖X̃(θ − θ₀)‖²)` (and the same for `V_n`)
/// on random instances with `‖f − f₀‖_∞ ≤ τ₀`, for an intercept-plus-trend design.
pub fn kn_bound_audit(n: usize, instances: usize, seed: u64) -> Result<BoundFit> {
    let design = make_design(DesignKind::LinearTrend { intercept: true }, n, None)?;
    let mut rng = rng_from_seed(seed);
    let mut ratios = Vec::with_capacity(instances);
    for _ in 0..instances {
        let (p, theta, theta0) = random_instance(&mut rng, design.r());
        let f0 = |w: f64| p.base(w);
        let f = |w: f64| p.base(w) + p.amp * (p.freq * w).cos();
        let (kn, vn) = kn_vn(&design, &theta, &f, &theta0, &f0)?;
        let d = build_freq_cov(f, n)?;
        let d0 = build_freq_cov(f0, n)?;
        let dd: f64 = d
            .diag
            .iter()
            .zip(&d0.diag)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let shift = &design.xtilde * DVector::from_fn(design.r(), |i, _| theta[i] - theta0[i]);
        let dist = dd + shift.norm_squared();
        ratios.push((n as f64 * kn, n as f64 * vn, dist));
    }
    Ok(BoundFit::from_ratios(&ratios))
}

/// Stability of a fitted constant across sample sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnAudit {
    pub n_list: Vec<usize>,
    pub fits: Vec<BoundFit>,
    /// `max C / min C` over `n` for the `K_n` bound.
    pub k_spread: f64,
    pub v_spread: f64,
}

pub fn kn_stability_audit(n_list: &[usize], instances: usize, seed: u64) -> Result<KnAudit> {
    if n_list.is_empty() {
        return Err(invalid("need at least one sample size"));
    }
    let fits: Vec<BoundFit> = n_list
        .iter()
        .enumerate()
        .map(|(i, &n)| kn_bound_audit(n, instances, crate::rng::derive_seed(seed, i as u64)))
        .collect::<Result<_>>()?;
    let spread = |sel: fn(&BoundFit) -> f64| {
        let hi = fits.iter().map(sel).fold(0.0, f64::max);
        let lo = fits.iter().map(sel).fold(f64::INFINITY, f64::min);
        hi / lo
    };
    Ok(KnAudit {
        n_list: n_list.to_vec(),
        k_spread: spread(|f| f.c_k),
        v_spread: spread(|f| f.c_v),
        fits,
    })
}

/// Lower-bound check `d_nH² ≥ c · (1/n) Σ_j (1 − exp(−κ δ_j²))` with
/// `δ = X̃(θ − θ₀)` and `κ = 1/(8 · 2π · sup f)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HellingerLowerAudit {
    /// Smallest ratio on the calibration set.
    pub c: f64,
    pub validation: usize,
    /// Validation instances with `d_nH² < c/2 · term`.
    pub violations: usize,
}

pub fn hellinger_lower_audit(
    n: usize,
    calibration: usize,
    validation: usize,
    seed: u64,
) -> Result<HellingerLowerAudit> {
    let design = make_design(DesignKind::LinearTrend { intercept: true }, n, None)?;
    let mut rng = rng_from_seed(seed);
    let mut ratio = || -> Result<f64> {
        let (p, theta, theta0) = random_instance(&mut rng, design.r());
        let f0 = |w: f64| p.base(w);
        let f = |w: f64| p.base(w) + p.amp * (p.freq * w).cos();
        let h = d_nh(&design, &theta, &f, &theta0, &f0)?;
        let sup = build_freq_cov(f, n)?
            .diag
            .iter()
            .chain(build_freq_cov(f0, n)?.diag.iter())
            .cloned()
            .fold(0.0, f64::max);
        let kappa = 1.0 / (8.0 * sup);
        let shift = &design.xtilde * DVector::from_fn(design.r(), |i, _| theta[i] - theta0[i]);
        let term = shift
            .iter()
            .map(|d| 1.0 - (-kappa * d * d).exp())
            .sum::<f64>()
            / n as f64;
        Ok(h * h / term)
    };
    let c = (0..calibration)
        .map(|_| ratio())
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let mut violations = 0;
    for _ in 0..validation {
        if ratio()? < 0.5 * c {
            violations += 1;
        }
    }
    Ok(HellingerLowerAudit {
        c,
        validation,
        violations,
    })
}

/// Everything reported by the `distances audit` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceAudit {
    /// Largest `|closed form − quadrature|` over random 1-d pairs.
    pub hellinger_max_error: f64,
    pub kl: BoundFit,
    pub kn: KnAudit,
    pub hellinger_lower: HellingerLowerAudit,
}

pub fn run_distance_audit(seed: u64) -> Result<DistanceAudit> {
    let mut rng = rng_from_seed(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let p = GaussPair1d::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(0.2..3.0),
            rng.random_range(0.2..3.0),
        )?;
        worst = worst.max((hellinger_1d(&p) - hellinger_1d_quadrature(&p)).abs());
    }
    Ok(DistanceAudit {
        hellinger_max_error: worst,
        kl: kl_bound_audit(3, 100, crate::rng::derive_seed(seed, 1))?,
        kn: kn_stability_audit(&[16, 32, 64, 128], 200, crate::rng::derive_seed(seed, 2))?,
        hellinger_lower: hellinger_lower_audit(64, 200, 200, crate::rng::derive_seed(seed, 3))?,
    })
}

/// Monte Carlo estimates of `K` and `V` with their standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KlMonteCarlo {
    pub k: f64,
    pub v: f64,
    pub k_se: f64,
    pub v_se: f64,
}

/// Moments of `log(p₀/p₁)` under draws from `N(μ₀, Σ₀)`; a test oracle for [`kl_gaussian`].
pub fn kl_monte_carlo<R: Rng>(
    mu0: &[f64],
    sigma0: &DMatrix<f64>,
    mu1: &[f64],
    sigma1: &DMatrix<f64>,
    draws: usize,
    rng: &mut R,
) -> Result<KlMonteCarlo> {
    let d = mu0.len();
    let c0 = cholesky_strict(sigma0)?;
    let f0 = SpdFactor::new(sigma0)?;
    let f1 = SpdFactor::new(sigma1)?;
    let (ld0, ld1) = (f0.log_det(), f1.log_det());
    let m0 = DVector::from_column_slice(mu0);
    let m1 = DVector::from_column_slice(mu1);
    let samples: Vec<f64> = (0..draws)
        .map(|_| {
            let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let x = &m0 + c0.l() * z;
            let r0 = &x - &m0;
            let r1 = &x - &m1;
            0.5 * (ld1 - ld0) - 0.5 * r0.dot(&f0.solve_vec(&r0)) + 0.5 * r1.dot(&f1.solve_vec(&r1))
        })
        .collect();
    let m = draws as f64;
    let k = samples.iter().sum::<f64>() / m;
    let v = samples.iter().map(|x| (x - k).powi(2)).sum::<f64>() / (m - 1.0);
    let mu4 = samples.iter().map(|x| (x - k).powi(4)).sum::<f64>() / m;
    Ok(KlMonteCarlo {
        k,
        v,
        k_se: (v / m).sqrt(),
        v_se: ((mu4 - v * v).max(0.0) / m).sqrt(),
    })
}
