//! Spectral densities on `[0, π]`: Bernstein mixtures, AR(1)/MA(1), the
//! spectral-to-autocovariance transform, the Lipschitz-norm membership test,
//! and Gaussian series simulation.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::cholesky_strict;

/// Panels for the composite Simpson rule used by spectral transforms.
pub const SIMPSON_PANELS: usize = 4096;

/// Default grid for the Lipschitz-norm check.
pub const LIPSCHITZ_GRID: usize = 512;

const OMEGA_SLACK: f64 = 1e-12;

/// Anything that can be evaluated as a spectral density on `[0, π]`.
pub trait SpectralDensity {
    fn eval(&self, omega: f64) -> f64;
}

impl<F: Fn(f64) -> f64> SpectralDensity for F {
    fn eval(&self, omega: f64) -> f64 {
        self(omega)
    }
}

/// `ln(m!)` for `m = 0..=max`.
pub(crate) fn ln_factorials(max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for m in 1..=max {
        acc += (m as f64).ln();
        out.push(acc);
    }
    out
}

/// Density of `Beta(a, b)` at `x ∈ [0, 1]` for integer shapes `a, b ≥ 1`.
///
/// At the boundary a shape of one gives the finite limit; larger shapes give 0.
pub fn beta_density(x: f64, a: usize, b: usize) -> f64 {
    assert!(a >= 1 && b >= 1, "Beta shapes must be at least one");
    let lf = ln_factorials(a + b);
    beta_density_with(x, a, b, &lf)
}

fn beta_density_with(x: f64, a: usize, b: usize, lf: &[f64]) -> f64 {
    // 1/B(a,b) = (a+b−1)! / ((a−1)! (b−1)!)
    let ln_norm = lf[a + b - 1] - lf[a - 1] - lf[b - 1];
    if x <= 0.0 {
        return if a == 1 { ln_norm.exp() } else { 0.0 };
    }
    if x >= 1.0 {
        return if b == 1 { ln_norm.exp() } else { 0.0 };
    }
    let ln = ln_norm + (a - 1) as f64 * x.ln() + (b - 1) as f64 * (-x).ln_1p();
    ln.exp()
}

/// Values `b(x | j, k−j+1)` for `j = 1..=k`.
pub fn bernstein_basis(k: usize, x: f64) -> Vec<f64> {
    let lf = ln_factorials(k);
    (1..=k)
        .map(|j| beta_density_with(x, j, k - j + 1, &lf))
        .collect()
}

/// Row-major table of the degree-`k` basis at the points `omegas` (scaled by
/// `1/π`): entry `[i * k + (j−1)]` is `b(ω_i/π | j, k−j+1)`.
pub fn bernstein_table(k: usize, omegas: &[f64]) -> Vec<f64> {
    let lf = ln_factorials(k);
    let mut out = Vec::with_capacity(k * omegas.len());
    for &w in omegas {
        let x = (w / PI).clamp(0.0, 1.0);
        out.extend((1..=k).map(|j| beta_density_with(x, j, k - j + 1, &lf)));
    }
    out
}

/// `f(ω) = Σ_j w_j b(ω/π | j, k−j+1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernsteinSpectrum {
    pub k: usize,
    pub weights: Vec<f64>,
}

impl BernsteinSpectrum {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("Bernstein degree must be at least 1"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(invalid("Bernstein weights must be finite and nonnegative"));
        }
        Ok(Self {
            k: weights.len(),
            weights,
        })
    }

    /// Degree-`k` approximant of `f` with weights `∫_{(j−1)/k}^{j/k} f(πx) dx`.
    pub fn approximant<F: SpectralDensity + ?Sized>(f: &F, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("Bernstein degree must be at least 1"));
        }
        let panels = (SIMPSON_PANELS / k).max(16) & !1;
        let weights = (1..=k)
            .map(|j| {
                let lo = (j - 1) as f64 / k as f64;
                let hi = j as f64 / k as f64;
                simpson(|x| f.eval(PI * x), lo, hi, panels)
            })
            .collect();
        Self::new(weights)
    }

    pub fn eval(&self, omega: f64) -> Result<f64> {
        let omega = check_omega(omega)?;
        let basis = bernstein_basis(self.k, omega / PI);
        Ok(self.weights.iter().zip(&basis).map(|(w, b)| w * b).sum())
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

impl SpectralDensity for BernsteinSpectrum {
    fn eval(&self, omega: f64) -> f64 {
        let x = (omega / PI).clamp(0.0, 1.0);
        let basis = bernstein_basis(self.k, x);
        self.weights.iter().zip(&basis).map(|(w, b)| w * b).sum()
    }
}

pub fn bernstein_eval(spec: &BernsteinSpectrum, omega: f64) -> Result<f64> {
    spec.eval(omega)
}

fn check_omega(omega: f64) -> Result<f64> {
    if !(-OMEGA_SLACK..=PI + OMEGA_SLACK).contains(&omega) {
        return Err(invalid(format!("frequency {omega} outside [0, π]")));
    }
    Ok(omega.clamp(0.0, PI))
}

/// Causal AR(1) `e_t = α e_{t−1} + ε_t`, `ε_t ~ N(0, σ²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ar1Spec {
    pub alpha: f64,
    pub sigma2: f64,
}

impl Ar1Spec {
    pub fn new(alpha: f64, sigma2: f64) -> Result<Self> {
        if !(alpha.abs() < 1.0) {
            return Err(invalid(format!(
                "AR(1) coefficient must satisfy |α| < 1, got {alpha}"
            )));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(invalid(format!(
                "innovation variance must be positive, got {sigma2}"
            )));
        }
        Ok(Self { alpha, sigma2 })
    }

    pub fn spectral(&self, omega: f64) -> f64 {
        let a = self.alpha;
        self.sigma2 / (2.0 * PI * (1.0 - 2.0 * a * omega.cos() + a * a))
    }

    /// `γ(h) = σ² α^{|h|} / (1 − α²)`.
    pub fn autocovariance(&self, h: usize) -> f64 {
        self.sigma2 * self.alpha.powi(h as i32) / (1.0 - self.alpha * self.alpha)
    }

    pub fn stationary_variance(&self) -> f64 {
        self.autocovariance(0)
    }
}

impl SpectralDensity for Ar1Spec {
    fn eval(&self, omega: f64) -> f64 {
        self.spectral(omega)
    }
}

/// MA(1) `e_t = ε_t + θ ε_{t−1}`, `ε_t ~ N(0, σ²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ma1Spec {
    pub theta: f64,
    pub sigma2: f64,
}

impl Ma1Spec {
    pub fn spectral(&self, omega: f64) -> f64 {
        let t = self.theta;
        self.sigma2 * (1.0 + 2.0 * t * omega.cos() + t * t) / (2.0 * PI)
    }
}

impl SpectralDensity for Ma1Spec {
    fn eval(&self, omega: f64) -> f64 {
        self.spectral(omega)
    }
}

pub fn ar1_spectral(spec: &Ar1Spec, omega: f64) -> Result<f64> {
    Ok(spec.spectral(check_omega(omega)?))
}

/// Toeplitz covariance `σ²(1−α²)^{-1} α^{|i−j|}`.
pub fn ar1_covariance(spec: &Ar1Spec, n: usize) -> DMatrix<f64> {
    let gammas: Vec<f64> = (0..n).map(|h| spec.autocovariance(h)).collect();
    DMatrix::from_fn(n, n, |i, j| gammas[i.abs_diff(j)])
}

/// Covariance matrix from an autocovariance sequence `γ(0), …, γ(n−1)`.
pub fn toeplitz(gammas: &[f64]) -> DMatrix<f64> {
    let n = gammas.len();
    DMatrix::from_fn(n, n, |i, j| gammas[i.abs_diff(j)])
}

/// Composite Simpson rule with an even number of panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let m = if panels % 2 == 0 { panels } else { panels + 1 };
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for i in 1..m {
        let x = a + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    acc * h / 3.0
}

/// `γ(h) = ∫_0^{2π} f(ω) e^{ihω} dω = 2 ∫_0^π f(ω) cos(hω) dω`, using the even
/// extension `f(2π−ω) = f(ω)`.
pub fn autocov_from_spectral<F: SpectralDensity + ?Sized>(f: &F, h: i64) -> Result<f64> {
    let h = h.unsigned_abs() as f64;
    let g = |w: f64| f.eval(w) * (h * w).cos();
    let fine = 2.0 * simpson(g, 0.0, PI, SIMPSON_PANELS);
    let coarse = 2.0 * simpson(g, 0.0, PI, SIMPSON_PANELS / 2);
    if !fine.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integral at lag {h}")));
    }
    let scale = 2.0 * simpson(|w| f.eval(w).abs(), 0.0, PI, SIMPSON_PANELS / 2);
    if (fine - coarse).abs() > 1e-6 * scale.max(1e-300) {
        return Err(Error::Quadrature(format!(
            "Simpson refinement changed the lag-{h} integral by {:e}",
            (fine - coarse).abs()
        )));
    }
    Ok(fine)
}

/// `max|f| + max |f(ω_{i+1}) − f(ω_i)| / Δω` over an equispaced grid on `[0, π]`.
pub fn lipschitz_norm<F: SpectralDensity + ?Sized>(f: &F, grid_size: usize) -> Result<f64> {
    if grid_size < 2 {
        return Err(invalid("Lipschitz grid needs at least two points"));
    }
    let step = PI / (grid_size - 1) as f64;
    let vals: Vec<f64> = (0..grid_size).map(|i| f.eval(i as f64 * step)).collect();
    let sup = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let slope = vals
        .windows(2)
        .fold(0.0_f64, |m, w| m.max((w[1] - w[0]).abs() / step));
    Ok(sup + slope)
}

/// Bounds `0 < τ₀ < τ₁` of the truncation set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationBounds {
    pub tau0: f64,
    pub tau1: f64,
}

impl TruncationBounds {
    pub fn new(tau0: f64, tau1: f64) -> Result<Self> {
        if !(tau0 > 0.0 && tau1 > tau0 && tau1.is_finite()) {
            return Err(invalid(format!("need 0 < τ₀ < τ₁, got ({tau0}, {tau1})")));
        }
        Ok(Self { tau0, tau1 })
    }

    /// `min f ≥ τ₀` and `‖f‖_L ≤ τ₁`, both on a grid.
    pub fn contains<F: SpectralDensity + ?Sized>(&self, f: &F, grid_size: usize) -> bool {
        let step = PI / (grid_size.max(2) - 1) as f64;
        let min = (0..grid_size.max(2))
            .map(|i| f.eval(i as f64 * step))
            .fold(f64::INFINITY, f64::min);
        min >= self.tau0 && lipschitz_norm(f, grid_size.max(2)).map_or(false, |l| l <= self.tau1)
    }
}

/// Source of a simulated stationary Gaussian series.
#[derive(Clone, Copy, Debug)]
pub enum SimSource<'a> {
    Ar1(Ar1Spec),
    Covariance(&'a DMatrix<f64>),
}

pub fn simulate_ts(source: SimSource<'_>, n: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_ts_with(source, n, &mut rng)
}

/// AR(1) uses the O(n) recursion from the stationary initial law; a general
/// covariance uses its lower Cholesky factor.
pub fn simulate_ts_with<R: Rng + ?Sized>(
    source: SimSource<'_>,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    match source {
        SimSource::Ar1(spec) => {
            let mut out = Vec::with_capacity(n);
            if n == 0 {
                return Ok(out);
            }
            let sd = spec.sigma2.sqrt();
            let z: f64 = rng.sample(StandardNormal);
            let mut e = z * spec.stationary_variance().sqrt();
            out.push(e);
            for _ in 1..n {
                let z: f64 = rng.sample(StandardNormal);
                e = spec.alpha * e + sd * z;
                out.push(e);
            }
            Ok(out)
        }
        SimSource::Covariance(cov) => {
            if cov.nrows() != n {
                return Err(invalid(format!(
                    "covariance is {}x{}, expected n = {n}",
                    cov.nrows(),
                    cov.ncols()
                )));
            }
            let chol = cholesky_strict(cov)?;
            let z = nalgebra::DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            Ok((chol.l() * z).as_slice().to_vec())
        }
    }
}
