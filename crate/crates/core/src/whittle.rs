//! Whittle likelihood for linear regression with stationary Gaussian errors,
//! the exact time-domain Gaussian likelihood, the conjugate conditional
//! posterior of the coefficients, and the LAN decomposition of the Whittle
//! log-likelihood ratio.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fourier::{
    build_freq_cov, coordinate_frequency, num_frequencies, DesignSpec, DftMatrix, FreqCov,
};
use crate::linalg::{cholesky_strict, sym_inv_sqrt, sym_sqrt, symmetrize, SpdFactor};
use crate::spectral::SpectralDensity;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Observations and design together with their frequency-domain images.
#[derive(Clone, Debug)]
pub struct WhittleModel {
    pub n: usize,
    pub z: Vec<f64>,
    pub ztilde: Vec<f64>,
    pub design: DesignSpec,
}

impl WhittleModel {
    pub fn new(z: Vec<f64>, design: DesignSpec) -> Result<Self> {
        let dft = DftMatrix::new(z.len())?;
        Self::with_dft(z, design, &dft)
    }

    pub fn with_dft(z: Vec<f64>, design: DesignSpec, dft: &DftMatrix) -> Result<Self> {
        let n = z.len();
        if design.n != n || dft.n() != n {
            return Err(invalid(format!(
                "observation length {n} does not match design ({}) or transform ({})",
                design.n,
                dft.n()
            )));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(invalid("observations must be finite"));
        }
        let ztilde = dft.forward(&z);
        Ok(Self {
            n,
            z,
            ztilde,
            design,
        })
    }

    pub fn r(&self) -> usize {
        self.design.r()
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.r() {
            return Err(invalid(format!(
                "θ has length {}, design has {} columns",
                theta.len(),
                self.r()
            )));
        }
        Ok(())
    }

    /// `Z̃ − X̃θ`.
    pub fn residual_tilde(&self, theta: &[f64]) -> Vec<f64> {
        let xt = &self.design.xtilde;
        (0..self.n)
            .map(|i| self.ztilde[i] - (0..theta.len()).map(|c| xt[(i, c)] * theta[c]).sum::<f64>())
            .collect()
    }

    /// `Z − Xθ` in the time domain.
    pub fn residual_time(&self, theta: &[f64]) -> Vec<f64> {
        let x = &self.design.x;
        (0..self.n)
            .map(|i| self.z[i] - (0..theta.len()).map(|c| x[(i, c)] * theta[c]).sum::<f64>())
            .collect()
    }

    /// Per-frequency residual power, the sufficient statistic of the Whittle
    /// likelihood for a fixed `θ`.
    pub fn periodogram(&self, theta: &[f64]) -> FrequencyPowers {
        FrequencyPowers::from_residuals(&self.residual_tilde(theta))
    }
}

/// Residual power `Σ r_i²` and coordinate count at each Fourier frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyPowers {
    pub n: usize,
    pub power: Vec<f64>,
    pub multiplicity: Vec<f64>,
}

impl FrequencyPowers {
    pub fn from_residuals(res: &[f64]) -> Self {
        let n = res.len();
        let mut power = vec![0.0; num_frequencies(n)];
        let mut multiplicity = vec![0.0; num_frequencies(n)];
        for (r, j) in res.iter().zip(coordinate_frequency(n)) {
            power[j] += r * r;
            multiplicity[j] += 1.0;
        }
        Self {
            n,
            power,
            multiplicity,
        }
    }

    /// Whittle log-likelihood given `f(λ_j)` at each frequency. Returns
    /// `-∞` if any value is not strictly positive.
    pub fn loglik(&self, f_values: &[f64]) -> f64 {
        debug_assert_eq!(f_values.len(), self.power.len());
        let mut acc = -0.5 * self.n as f64 * LN_2PI;
        for ((&p, &m), &f) in self.power.iter().zip(&self.multiplicity).zip(f_values) {
            if !(f > 0.0) || !f.is_finite() {
                return f64::NEG_INFINITY;
            }
            let d = 2.0 * PI * f;
            acc -= 0.5 * (m * d.ln() + p / d);
        }
        acc
    }
}

/// `log p_W(Z | θ, f) = −(n/2) log 2π − ½ log|D_n| − ½ rᵀ D_n⁻¹ r` with `r = Z̃ − X̃θ`.
pub fn whittle_loglik<F: SpectralDensity + ?Sized>(
    model: &WhittleModel,
    theta: &[f64],
    f: &F,
) -> Result<f64> {
    let d = build_freq_cov(|w| f.eval(w), model.n)?;
    whittle_loglik_cov(model, theta, &d)
}

pub fn whittle_loglik_cov(model: &WhittleModel, theta: &[f64], d: &FreqCov) -> Result<f64> {
    model.check_theta(theta)?;
    let res = model.residual_tilde(theta);
    let quad: f64 = res.iter().zip(&d.diag).map(|(r, di)| r * r / di).sum();
    Ok(-0.5 * model.n as f64 * LN_2PI - 0.5 * d.log_det() - 0.5 * quad)
}

/// Exact Gaussian log-density of `Z ~ N(Xθ, Σ_n)`.
pub fn true_gaussian_loglik(
    model: &WhittleModel,
    theta: &[f64],
    sigma: &DMatrix<f64>,
) -> Result<f64> {
    model.check_theta(theta)?;
    if sigma.nrows() != model.n {
        return Err(invalid(format!(
            "Σ_n is {}x{}, expected n = {}",
            sigma.nrows(),
            sigma.ncols(),
            model.n
        )));
    }
    let chol = cholesky_strict(sigma)?;
    let r = DVector::from_vec(model.residual_time(theta));
    let w = chol
        .l()
        .solve_lower_triangular(&r)
        .expect("Cholesky factor is nonsingular");
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(-0.5 * model.n as f64 * LN_2PI - 0.5 * log_det - 0.5 * w.norm_squared())
}

/// Prior on the regression coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum ThetaPrior {
    Flat,
    Gaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
}

impl ThetaPrior {
    /// Independent normals with the given means and standard deviations.
    pub fn independent_normal(mean: Vec<f64>, sd: &[f64]) -> Self {
        let r = sd.len();
        let cov = (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| if i == j { sd[i] * sd[i] } else { 0.0 })
                    .collect()
            })
            .collect();
        ThetaPrior::Gaussian { mean, cov }
    }

    pub fn isotropic(r: usize, mean: f64, variance: f64) -> Self {
        Self::independent_normal(vec![mean; r], &vec![variance.sqrt(); r])
    }

    pub fn log_density(&self, theta: &[f64]) -> f64 {
        match self {
            ThetaPrior::Flat => 0.0,
            ThetaPrior::Gaussian { mean, cov } => {
                let r = mean.len();
                let c = DMatrix::from_fn(r, r, |i, j| cov[i][j]);
                let Ok(fac) = SpdFactor::new(&c) else {
                    return f64::NEG_INFINITY;
                };
                let d = DVector::from_fn(r, |i, _| theta[i] - mean[i]);
                -0.5 * (r as f64 * LN_2PI + fac.log_det() + d.dot(&fac.solve_vec(&d)))
            }
        }
    }
}

/// Conditional posterior `N(mean, cov)` of the coefficients given `f`.
#[derive(Clone, Debug)]
pub struct ThetaPosterior {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// `L` with `L Lᵀ = cov`, for drawing.
    pub root: DMatrix<f64>,
}

impl ThetaPosterior {
    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let r = self.mean.len();
        let z = DVector::from_fn(r, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        (&self.mean + &self.root * z).as_slice().to_vec()
    }
}

/// `X̃ᵀ D⁻¹ X̃` and `X̃ᵀ D⁻¹ Z̃` for a diagonal `D⁻¹`.
pub fn normal_equations(model: &WhittleModel, dinv: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let xt = &model.design.xtilde;
    let r = model.r();
    let mut a = DMatrix::zeros(r, r);
    let mut b = DVector::zeros(r);
    for i in 0..model.n {
        let w = dinv[i];
        for c1 in 0..r {
            let v = w * xt[(i, c1)];
            b[c1] += v * model.ztilde[i];
            for c2 in 0..=c1 {
                a[(c1, c2)] += v * xt[(i, c2)];
            }
        }
    }
    for c1 in 0..r {
        for c2 in 0..c1 {
            a[(c2, c1)] = a[(c1, c2)];
        }
    }
    (a, b)
}

pub fn conditional_theta_posterior<F: SpectralDensity + ?Sized>(
    model: &WhittleModel,
    f: &F,
    prior: &ThetaPrior,
) -> Result<ThetaPosterior> {
    let d = build_freq_cov(|w| f.eval(w), model.n)?;
    conditional_theta_posterior_cov(model, &d, prior)
}

/// Flat prior: `Σ = (X̃ᵀD⁻¹X̃)⁻¹`, mean `Σ X̃ᵀD⁻¹Z̃`. Gaussian prior adds the
/// prior precision and `V₀⁻¹ m₀` to the two terms.
pub fn conditional_theta_posterior_cov(
    model: &WhittleModel,
    d: &FreqCov,
    prior: &ThetaPrior,
) -> Result<ThetaPosterior> {
    conditional_theta_posterior_dinv(model, &d.inverse_diag(), prior)
}

pub fn conditional_theta_posterior_dinv(
    model: &WhittleModel,
    dinv: &[f64],
    prior: &ThetaPrior,
) -> Result<ThetaPosterior> {
    let (precision, rhs) = normal_equations(model, dinv);
    posterior_from_normal_equations(precision, rhs, prior)
}

/// Gaussian posterior from the likelihood precision `A` and score `b`
/// (likelihood mean `A⁻¹b`), combined with the prior.
pub fn posterior_from_normal_equations(
    mut precision: DMatrix<f64>,
    mut rhs: DVector<f64>,
    prior: &ThetaPrior,
) -> Result<ThetaPosterior> {
    if let ThetaPrior::Gaussian { mean, cov } = prior {
        let r = rhs.len();
        if mean.len() != r || cov.len() != r {
            return Err(invalid(format!(
                "prior dimension {} does not match r = {r}",
                mean.len()
            )));
        }
        let v0 = DMatrix::from_fn(r, r, |i, j| cov[i][j]);
        let v0_fac = SpdFactor::new(&v0)?;
        let m0 = DVector::from_column_slice(mean);
        precision += v0_fac.inverse();
        rhs += v0_fac.solve_vec(&m0);
    }
    let fac = SpdFactor::new(&precision)?;
    let mean = fac.solve_vec(&rhs);
    let cov = fac.inverse();
    let root = fac.inverse_root();
    Ok(ThetaPosterior { mean, cov, root })
}

/// LAN pieces at `(θ₀, f₀)`.
#[derive(Clone, Debug)]
pub struct LanParts {
    /// `S_n = X̃ᵀ D_{n,0}⁻¹ X̃`.
    pub s: DMatrix<f64>,
    pub s_half: DMatrix<f64>,
    /// `G_n = S_n^{-1/2} X̃ᵀ D_{n,0}⁻¹ (Z̃ − X̃θ₀)`.
    pub g: DVector<f64>,
    pub theta0: DVector<f64>,
    d0_inv: Vec<f64>,
    z0: Vec<f64>,
    xtilde: DMatrix<f64>,
}

/// Remainder `R = R₁ − ½R₂` of the LAN expansion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LanRemainder {
    pub r1: f64,
    pub r2: f64,
    pub total: f64,
}

pub fn lan_decompose<F: SpectralDensity + ?Sized>(
    model: &WhittleModel,
    theta0: &[f64],
    f0: &F,
) -> Result<LanParts> {
    model.check_theta(theta0)?;
    let d0 = build_freq_cov(|w| f0.eval(w), model.n)?;
    let d0_inv = d0.inverse_diag();
    let z0 = model.residual_tilde(theta0);
    let xt = &model.design.xtilde;
    let (s, _) = normal_equations(model, &d0_inv);
    let weighted: DVector<f64> =
        DVector::from_iterator(model.n, z0.iter().zip(&d0_inv).map(|(z, d)| z * d));
    let score = xt.tr_mul(&weighted);
    let g = sym_inv_sqrt(&s) * score;
    Ok(LanParts {
        s_half: sym_sqrt(&s),
        s: symmetrize(&s),
        g,
        theta0: DVector::from_column_slice(theta0),
        d0_inv,
        z0,
        xtilde: xt.clone(),
    })
}

impl LanParts {
    /// `(θ−θ₀)ᵀ S^{1/2} G − ½ (θ−θ₀)ᵀ S (θ−θ₀)`.
    pub fn quadratic_part(&self, theta: &[f64]) -> (f64, f64) {
        let delta = DVector::from_column_slice(theta) - &self.theta0;
        let linear = delta.dot(&(&self.s_half * &self.g));
        let quad = delta.dot(&(&self.s * &delta));
        (linear, quad)
    }

    /// `(θ−θ₀)ᵀ S (θ−θ₀)`.
    pub fn local_norm2(&self, theta: &[f64]) -> f64 {
        self.quadratic_part(theta).1
    }

    pub fn lambda_min(&self) -> f64 {
        crate::linalg::sym_eigenvalues(&self.s)[0]
    }
}

pub fn lan_remainder<F: SpectralDensity + ?Sized>(
    parts: &LanParts,
    theta: &[f64],
    f: &F,
) -> Result<LanRemainder> {
    let n = parts.z0.len();
    let d = build_freq_cov(|w| f.eval(w), n)?;
    lan_remainder_cov(parts, theta, &d)
}

pub fn lan_remainder_cov(parts: &LanParts, theta: &[f64], d: &FreqCov) -> Result<LanRemainder> {
    if theta.len() != parts.theta0.len() {
        return Err(invalid("θ dimension does not match θ₀"));
    }
    let delta = DVector::from_column_slice(theta) - &parts.theta0;
    let xd: DVector<f64> = &parts.xtilde * &delta;
    let mut r1 = 0.0;
    let mut r2 = 0.0;
    for i in 0..parts.z0.len() {
        let diff = 1.0 / d.diag[i] - parts.d0_inv[i];
        r1 += xd[i] * diff * parts.z0[i];
        r2 += xd[i] * diff * xd[i];
    }
    Ok(LanRemainder {
        r1,
        r2,
        total: r1 - 0.5 * r2,
    })
}

/// `log p_W(Z | θ, f) − log p_W(Z | θ₀, f)`.
pub fn loglik_ratio<F: SpectralDensity + ?Sized>(
    model: &WhittleModel,
    theta: &[f64],
    theta0: &[f64],
    f: &F,
) -> Result<f64> {
    let d = build_freq_cov(|w| f.eval(w), model.n)?;
    Ok(whittle_loglik_cov(model, theta, &d)? - whittle_loglik_cov(model, theta0, &d)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{make_design, DesignKind};
    use crate::spectral::{ar1_covariance, Ar1Spec, BernsteinSpectrum};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense multivariate normal log-density, written independently of the
    /// diagonal fast path.
    fn dense_mvn_logpdf(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
        let n = x.len() as f64;
        let chol = nalgebra::Cholesky::new(cov.clone()).unwrap();
        let d = x - mean;
        let sol = chol.solve(&d);
        let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        -0.5 * (n * (2.0 * PI).ln() + logdet + d.dot(&sol))
    }

    fn random_model(n: usize, r: usize, rng: &mut ChaCha8Rng) -> WhittleModel {
        let x = DMatrix::from_fn(n, r, |i, c| {
            if c == 0 {
                1.0
            } else {
                rng.random::<f64>() + (i as f64 / n as f64)
            }
        });
        let design = make_design(DesignKind::Custom, n, Some(x)).unwrap();
        let z: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        WhittleModel::new(z, design).unwrap()
    }

    fn smooth_spectrum(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> f64 {
        let a = 0.2 + rng.random::<f64>();
        let b = rng.random::<f64>() * 0.8;
        let c = rng.random::<f64>() * 3.0;
        move |w: f64| a + b * (w + c).cos().powi(2)
    }

    #[test]
    fn exact_fit_leaves_only_normalizer() {
        let n = 10;
        let design = make_design(DesignKind::LinearTrend { intercept: true }, n, None).unwrap();
        let theta = [0.4, -1.2];
        let z: Vec<f64> = (0..n)
            .map(|i| theta[0] + theta[1] * (i + 1) as f64 / n as f64)
            .collect();
        let model = WhittleModel::new(z, design).unwrap();
        let c = 0.37;
        let ll = whittle_loglik(&model, &theta, &|_| c).unwrap();
        assert_relative_eq!(
            ll,
            -(n as f64 / 2.0) * (2.0 * PI * 2.0 * PI * c).ln(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn matches_dense_gaussian_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 4..=32 {
            let model = random_model(n, 2, &mut rng);
            let f = smooth_spectrum(&mut rng);
            let theta = [rng.random::<f64>(), rng.random::<f64>() - 0.5];
            let d = build_freq_cov(&f, n).unwrap();
            let mean = &model.design.xtilde * DVector::from_column_slice(&theta);
            let oracle = dense_mvn_logpdf(
                &DVector::from_vec(model.ztilde.clone()),
                &mean,
                &d.to_matrix(),
            );
            let ll = whittle_loglik(&model, &theta, &f).unwrap();
            assert!((ll - oracle).abs() < 1e-8, "n = {n}");
            let fast = model.periodogram(&theta).loglik(
                &crate::fourier::fourier_frequencies(n)
                    .iter()
                    .map(|&w| f(w))
                    .collect::<Vec<_>>(),
            );
            assert!((fast - ll).abs() < 1e-9);
        }
    }

    #[test]
    fn doubling_the_spectrum_rescales() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 6;
        let model = random_model(n, 1, &mut rng);
        let f = smooth_spectrum(&mut rng);
        let theta = [0.3];
        let d = build_freq_cov(&f, n).unwrap();
        let quad: f64 = model
            .residual_tilde(&theta)
            .iter()
            .zip(&d.diag)
            .map(|(r, di)| r * r / di)
            .sum();
        let l1 = whittle_loglik(&model, &theta, &f).unwrap();
        let l2 = whittle_loglik(&model, &theta, &|w| 2.0 * f(w)).unwrap();
        // −½ log|2D| − ½ q/2 = −½ log|D| − (n/2) log 2 − ½ q + q/4
        assert_relative_eq!(
            l2 - l1,
            -(n as f64 / 2.0) * 2.0_f64.ln() + 0.25 * quad,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rejects_nonpositive_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = random_model(8, 1, &mut rng);
        assert!(whittle_loglik(&model, &[0.0], &|w: f64| w - 0.1).is_err());
        assert!(whittle_loglik(&model, &[0.0, 1.0], &|_| 1.0).is_err());
    }

    #[test]
    fn true_loglik_white_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 8;
        let model = random_model(n, 2, &mut rng);
        let s2 = 1.7;
        let theta = [0.2, 0.9];
        let res = model.residual_time(&theta);
        let direct = -0.5 * n as f64 * (2.0 * PI * s2).ln()
            - 0.5 * res.iter().map(|r| r * r).sum::<f64>() / s2;
        let ll = true_gaussian_loglik(&model, &theta, &(DMatrix::identity(n, n) * s2)).unwrap();
        assert!((ll - direct).abs() < 1e-10);
    }

    #[test]
    fn true_loglik_rejects_indefinite() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = random_model(4, 1, &mut rng);
        let bad = DMatrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { 2.0 });
        assert!(true_gaussian_loglik(&model, &[0.0], &bad).is_err());
    }

    #[test]
    fn whittle_close_to_exact_for_ar1() {
        let n = 64;
        let spec = Ar1Spec::new(0.7, 1.0).unwrap();
        let design = make_design(DesignKind::Mean, n, None).unwrap();
        let z = crate::spectral::simulate_ts(crate::spectral::SimSource::Ar1(spec), n, 21).unwrap();
        let model = WhittleModel::new(z, design).unwrap();
        let w = whittle_loglik(&model, &[0.0], &spec).unwrap();
        let t = true_gaussian_loglik(&model, &[0.0], &ar1_covariance(&spec, n)).unwrap();
        assert!((w - t).abs() / n as f64 <= 0.2);
    }

    #[test]
    fn true_loglik_shift_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 12;
        let model = random_model(n, 2, &mut rng);
        let sigma = ar1_covariance(&Ar1Spec::new(-0.4, 0.8).unwrap(), n);
        let theta = [0.1, 0.5];
        let delta = [1.5, -2.0];
        let xd = &model.design.x * DVector::from_column_slice(&delta);
        let z2: Vec<f64> = model.z.iter().zip(xd.iter()).map(|(a, b)| a + b).collect();
        let shifted = WhittleModel::new(z2, model.design.clone()).unwrap();
        let moved = [theta[0] + delta[0], theta[1] + delta[1]];
        let a = true_gaussian_loglik(&model, &theta, &sigma).unwrap();
        let b = true_gaussian_loglik(&shifted, &moved, &sigma).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn mean_design_posterior_is_sample_mean() {
        let n = 20;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 3.0).collect();
        let zbar = z.iter().sum::<f64>() / n as f64;
        let model = WhittleModel::new(z, make_design(DesignKind::Mean, n, None).unwrap()).unwrap();
        let c = 0.8;
        let post = conditional_theta_posterior(&model, &|_| c, &ThetaPrior::Flat).unwrap();
        assert_relative_eq!(post.mean[0], zbar, epsilon = 1e-12);
        assert_relative_eq!(post.cov[(0, 0)], 2.0 * PI * c / n as f64, epsilon = 1e-12);
    }

    #[test]
    fn vague_gaussian_prior_recovers_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = random_model(24, 2, &mut rng);
        let f = smooth_spectrum(&mut rng);
        let flat = conditional_theta_posterior(&model, &f, &ThetaPrior::Flat).unwrap();
        let vague =
            conditional_theta_posterior(&model, &f, &ThetaPrior::isotropic(2, 0.0, 1e8)).unwrap();
        assert!((&flat.mean - &vague.mean).amax() < 1e-6);
        assert!((&flat.cov - &vague.cov).amax() < 1e-6);
    }

    #[test]
    fn gaussian_prior_shrinks_toward_prior_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = random_model(24, 1, &mut rng);
        let flat = conditional_theta_posterior(&model, &|_| 1.0, &ThetaPrior::Flat).unwrap();
        let tight =
            conditional_theta_posterior(&model, &|_| 1.0, &ThetaPrior::isotropic(1, 10.0, 1e-6))
                .unwrap();
        assert!((tight.mean[0] - 10.0).abs() < 1e-3);
        assert!(tight.cov[(0, 0)] < flat.cov[(0, 0)]);
    }

    #[test]
    fn conjugacy_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let model = random_model(30, 3, &mut rng);
        let f = smooth_spectrum(&mut rng);
        let d = build_freq_cov(&f, 30).unwrap();
        let post = conditional_theta_posterior_cov(&model, &d, &ThetaPrior::Flat).unwrap();
        let (a, b) = normal_equations(&model, &d.inverse_diag());
        let prec = post.cov.clone().try_inverse().unwrap();
        assert!((&prec * &post.mean - &b).amax() < 1e-10 * (1.0 + b.amax()));
        assert!((&a * &post.mean - &b).amax() < 1e-10 * (1.0 + b.amax()));
        assert!((&post.cov - post.cov.transpose()).amax() < 1e-10);
        assert!(crate::linalg::sym_eigenvalues(&post.cov)[0] > 0.0);
        assert!((&post.root * post.root.transpose() - &post.cov).amax() < 1e-12);
    }

    #[test]
    fn posterior_density_matches_grid_integration() {
        let n = 16;
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let model = random_model(n, 1, &mut rng);
        let f = smooth_spectrum(&mut rng);
        let post = conditional_theta_posterior(&model, &f, &ThetaPrior::Flat).unwrap();
        let (m, s) = (post.mean[0], post.cov[(0, 0)].sqrt());
        let (lo, hi, pts) = (m - 12.0 * s, m + 12.0 * s, 20_001);
        let h = (hi - lo) / (pts - 1) as f64;
        let grid: Vec<f64> = (0..pts).map(|i| lo + i as f64 * h).collect();
        let ll: Vec<f64> = grid
            .iter()
            .map(|&t| whittle_loglik(&model, &[t], &f).unwrap())
            .collect();
        let lmax = ll.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let un: Vec<f64> = ll.iter().map(|l| (l - lmax).exp()).collect();
        let z = h * (un.iter().sum::<f64>() - 0.5 * (un[0] + un[pts - 1]));
        for (i, &t) in grid.iter().enumerate().step_by(50) {
            if (t - m).abs() > 4.0 * s {
                continue;
            }
            let exact = (-(t - m).powi(2) / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt());
            let brute = un[i] / z;
            assert!((brute / exact - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn lan_identity_and_zero_remainder() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 16;
        for _ in 0..100 {
            let model = random_model(n, 2, &mut rng);
            let f0 = smooth_spectrum(&mut rng);
            let f = smooth_spectrum(&mut rng);
            let theta0 = [rng.random::<f64>(), rng.random::<f64>()];
            let theta = [
                rng.random::<f64>() * 3.0 - 1.5,
                rng.random::<f64>() * 3.0 - 1.5,
            ];
            let parts = lan_decompose(&model, &theta0, &f0).unwrap();
            let (lin, quad) = parts.quadratic_part(&theta);
            let rem = lan_remainder(&parts, &theta, &f).unwrap();
            let lhs = loglik_ratio(&model, &theta, &theta0, &f).unwrap();
            assert!((lhs - (lin - 0.5 * quad + rem.total)).abs() < 1e-8);
            assert_eq!(lan_remainder(&parts, &theta, &f0).unwrap().total, 0.0);
            let at0 = lan_remainder(&parts, &theta0, &f).unwrap();
            assert_eq!((at0.r1, at0.r2), (0.0, 0.0));
            assert_eq!(parts.quadratic_part(&theta0), (0.0, 0.0));
        }
    }

    #[test]
    fn lan_g_is_standardized_score() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let model = random_model(20, 2, &mut rng);
        let f0 = smooth_spectrum(&mut rng);
        let theta0 = [0.5, 0.5];
        let parts = lan_decompose(&model, &theta0, &f0).unwrap();
        // θ₀ + S^{-1/2} G is the Whittle weighted least-squares estimate.
        let post = conditional_theta_posterior(&model, &f0, &ThetaPrior::Flat).unwrap();
        let centre = &parts.theta0 + sym_inv_sqrt(&parts.s) * &parts.g;
        assert!((centre - &post.mean).amax() < 1e-9);
        let b = BernsteinSpectrum::approximant(&f0, 10).unwrap();
        assert!(lan_remainder(&parts, &[0.6, 0.4], &b)
            .unwrap()
            .total
            .is_finite());
    }
}
