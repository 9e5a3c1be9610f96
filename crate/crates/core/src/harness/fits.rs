//! The three error models compared in the simulation study: the
//! nonparametric Bernstein–Dirichlet fit, a parametric AR(1) fit and an
//! i.i.d. (white noise) fit.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Error, Result};
use crate::fourier::{coordinate_frequency, fourier_frequencies};
use crate::linalg::SpdFactor;
use crate::rng::rng_from_seed;
use crate::sampler::{run_chain, summarize_coefficients, CoefSummary, SamplerConfig};
use crate::whittle::{
    conditional_theta_posterior_dinv, posterior_from_normal_equations, ThetaPosterior, ThetaPrior,
    WhittleModel,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrorModel {
    #[serde(rename = "NP")]
    Np,
    #[serde(rename = "AR")]
    Ar,
    #[serde(rename = "WN")]
    Wn,
}

impl ErrorModel {
    pub fn label(self) -> &'static str {
        match self {
            ErrorModel::Np => "NP",
            ErrorModel::Ar => "AR",
            ErrorModel::Wn => "WN",
        }
    }
}

/// Likelihood used by the AR(1) reference fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArLikelihood {
    #[default]
    Whittle,
    Exact,
}

/// Acceptance rate the `ρ` random walk is tuned toward.
const RHO_TARGET: f64 = 0.44;
const RHO_START_LIMIT: f64 = 0.95;

/// White-noise errors under the Jeffreys prior `p(θ, σ²) ∝ 1/σ²`: the
/// marginal posterior of each coefficient is Student-t with `n − r` degrees
/// of freedom, so the summaries are exact.
pub fn fit_wn(model: &WhittleModel, level: f64) -> Result<Vec<CoefSummary>> {
    check_level(level)?;
    let n = model.n;
    let r = model.r();
    if n <= r {
        return Err(invalid(format!(
            "white-noise fit needs n > r, got n = {n}, r = {r}"
        )));
    }
    let x = &model.design.x;
    let z = DVector::from_column_slice(&model.z);
    let gram = SpdFactor::new(&x.tr_mul(x))?;
    let theta_hat = gram.solve_vec(&x.tr_mul(&z));
    let resid = &z - x * &theta_hat;
    let dof = (n - r) as f64;
    let s2 = resid.norm_squared() / dof;
    let t = StudentsT::new(0.0, 1.0, dof).map_err(|e| invalid(e.to_string()))?;
    let q = t.inverse_cdf(0.5 + level / 2.0);
    let xtx_inv = gram.inverse();
    Ok((0..r)
        .map(|c| {
            let half = q * (s2 * xtx_inv[(c, c)]).sqrt();
            CoefSummary {
                mean: theta_hat[c],
                median: theta_hat[c],
                lower: theta_hat[c] - half,
                upper: theta_hat[c] + half,
                length: 2.0 * half,
            }
        })
        .collect())
}

/// Nonparametric fit: the Bernstein–Dirichlet chain, summarised over `θ`.
pub fn fit_np(
    model: &WhittleModel,
    sampler: &SamplerConfig,
    level: f64,
) -> Result<Vec<CoefSummary>> {
    let out = run_chain(model, sampler)?;
    let thetas: Vec<Vec<f64>> = out.draws.into_iter().map(|d| d.theta).collect();
    summarize_coefficients(&thetas, level)
}

/// Parametric AR(1) fit. Coefficients are drawn from their Gaussian
/// conditional, `σ²` from its inverse-gamma conditional under the Jeffreys
/// prior and `ρ` by a random-walk Metropolis step under a Uniform(−1, 1)
/// prior. The schedule (iterations, burn-in, thinning, seed) and the
/// coefficient prior come from `sampler`.
pub fn ar_draws(
    model: &WhittleModel,
    sampler: &SamplerConfig,
    likelihood: ArLikelihood,
) -> Result<Vec<Vec<f64>>> {
    sampler.validate()?;
    let mut rng = rng_from_seed(sampler.seed);
    let prior = &sampler.theta_prior;
    let mut target: Box<dyn ArTarget + '_> = match likelihood {
        ArLikelihood::Whittle => Box::new(WhittleAr::new(model)),
        ArLikelihood::Exact => Box::new(ExactAr::new(model)),
    };

    let (mut rho, mut sigma2) = initial_ar_state(model)?;
    let mut scale = sampler.proposals.tau.max(0.05);
    let mut draws = Vec::with_capacity(sampler.retained());
    for t in 0..sampler.iterations {
        let theta = target.theta_posterior(rho, sigma2, prior)?.draw(&mut rng);
        target.set_theta(&theta);

        let ss = target.sum_of_squares(rho);
        let shape = model.n as f64 / 2.0;
        let g: f64 = rng.sample(Gamma::new(shape, 1.0).map_err(|e| invalid(e.to_string()))?);
        sigma2 = (ss / 2.0 / g).max(f64::MIN_POSITIVE);

        let step: f64 = rng.sample(StandardNormal);
        let proposal = rho + scale * step;
        let mut accepted = false;
        if proposal.abs() < 1.0 {
            let log_ratio = target.log_profile(proposal, sigma2) - target.log_profile(rho, sigma2);
            let u: f64 = rng.random();
            if u.ln() < log_ratio {
                rho = proposal;
                accepted = true;
            }
        }
        if !target.log_profile(rho, sigma2).is_finite() {
            return Err(Error::NonFiniteLikelihood { iteration: t });
        }
        if sampler.adapt && t < sampler.burnin {
            let gain = (t as f64 + 1.0).powf(-0.6);
            let a = if accepted { 1.0 } else { 0.0 };
            scale = (scale.ln() + gain * (a - RHO_TARGET))
                .exp()
                .clamp(1e-4, 1.0);
        }
        if t >= sampler.burnin && (t - sampler.burnin + 1) % sampler.thinning == 0 {
            draws.push(theta);
        }
    }
    Ok(draws)
}

pub fn fit_ar(
    model: &WhittleModel,
    sampler: &SamplerConfig,
    likelihood: ArLikelihood,
    level: f64,
) -> Result<Vec<CoefSummary>> {
    summarize_coefficients(&ar_draws(model, sampler, likelihood)?, level)
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!(
            "credible level must lie in (0, 1), got {level}"
        )));
    }
    Ok(())
}

/// Lag-one autocorrelation of the OLS residuals and the matching innovation
/// variance.
fn initial_ar_state(model: &WhittleModel) -> Result<(f64, f64)> {
    let x = &model.design.x;
    let z = DVector::from_column_slice(&model.z);
    let theta = SpdFactor::new(&x.tr_mul(x))?.solve_vec(&x.tr_mul(&z));
    let e = &z - x * &theta;
    let var = e.norm_squared() / model.n as f64;
    let lag1 = e.as_slice().windows(2).map(|w| w[0] * w[1]).sum::<f64>() / model.n as f64;
    let rho = if var > 0.0 {
        (lag1 / var).clamp(-RHO_START_LIMIT, RHO_START_LIMIT)
    } else {
        0.0
    };
    let sigma2 = (var * (1.0 - rho * rho)).max(f64::MIN_POSITIVE);
    Ok((rho, sigma2))
}

/// AR(1) likelihood in the form `−(n/2) ln σ² + h(ρ) − S(ρ)/(2σ²)`, with the
/// residuals of the current `θ` cached by `set_theta`.
trait ArTarget {
    fn theta_posterior(&self, rho: f64, sigma2: f64, prior: &ThetaPrior) -> Result<ThetaPosterior>;
    fn set_theta(&mut self, theta: &[f64]);
    fn sum_of_squares(&self, rho: f64) -> f64;
    fn log_jacobian(&self, rho: f64) -> f64;

    fn log_profile(&self, rho: f64, sigma2: f64) -> f64 {
        self.log_jacobian(rho) - self.sum_of_squares(rho) / (2.0 * sigma2)
    }
}

/// Whittle form: `D_ii = σ²/g(λ_i)` with `g(λ) = 1 − 2ρ cos λ + ρ²`.
struct WhittleAr<'m> {
    model: &'m WhittleModel,
    cosines: Vec<f64>,
    multiplicity: Vec<f64>,
    power: Vec<f64>,
}

impl<'m> WhittleAr<'m> {
    fn new(model: &'m WhittleModel) -> Self {
        let cosines = fourier_frequencies(model.n)
            .into_iter()
            .map(f64::cos)
            .collect::<Vec<_>>();
        let mut multiplicity = vec![0.0; cosines.len()];
        for j in coordinate_frequency(model.n) {
            multiplicity[j] += 1.0;
        }
        let power = vec![0.0; cosines.len()];
        Self {
            model,
            cosines,
            multiplicity,
            power,
        }
    }

    fn g(&self, j: usize, rho: f64) -> f64 {
        1.0 - 2.0 * rho * self.cosines[j] + rho * rho
    }
}

impl ArTarget for WhittleAr<'_> {
    fn theta_posterior(&self, rho: f64, sigma2: f64, prior: &ThetaPrior) -> Result<ThetaPosterior> {
        let dinv: Vec<f64> = coordinate_frequency(self.model.n)
            .into_iter()
            .map(|j| self.g(j, rho) / sigma2)
            .collect();
        conditional_theta_posterior_dinv(self.model, &dinv, prior)
    }

    fn set_theta(&mut self, theta: &[f64]) {
        self.power = self.model.periodogram(theta).power;
    }

    fn sum_of_squares(&self, rho: f64) -> f64 {
        self.power
            .iter()
            .enumerate()
            .map(|(j, p)| p * self.g(j, rho))
            .sum()
    }

    fn log_jacobian(&self, rho: f64) -> f64 {
        0.5 * self
            .multiplicity
            .iter()
            .enumerate()
            .map(|(j, m)| m * self.g(j, rho).ln())
            .sum::<f64>()
    }
}

/// Exact Gaussian AR(1) likelihood through the Prais–Winsten transform
/// `e*_1 = √(1−ρ²) e_1`, `e*_t = e_t − ρ e_{t−1}`.
struct ExactAr<'m> {
    model: &'m WhittleModel,
    resid: Vec<f64>,
}

impl<'m> ExactAr<'m> {
    fn new(model: &'m WhittleModel) -> Self {
        Self {
            model,
            resid: vec![0.0; model.n],
        }
    }

    fn transform(v: &[f64], rho: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(v.len());
        out.push((1.0 - rho * rho).sqrt() * v[0]);
        out.extend(v.windows(2).map(|w| w[1] - rho * w[0]));
        out
    }
}

impl ArTarget for ExactAr<'_> {
    fn theta_posterior(&self, rho: f64, sigma2: f64, prior: &ThetaPrior) -> Result<ThetaPosterior> {
        let x = &self.model.design.x;
        let r = x.ncols();
        let mut xs = DMatrix::zeros(self.model.n, r);
        for c in 0..r {
            let col: Vec<f64> = x.column(c).iter().copied().collect();
            xs.set_column(c, &DVector::from_vec(Self::transform(&col, rho)));
        }
        let zs = DVector::from_vec(Self::transform(&self.model.z, rho));
        let precision = xs.tr_mul(&xs) / sigma2;
        let rhs = xs.tr_mul(&zs) / sigma2;
        posterior_from_normal_equations(precision, rhs, prior)
    }

    fn set_theta(&mut self, theta: &[f64]) {
        self.resid = self.model.residual_time(theta);
    }

    fn sum_of_squares(&self, rho: f64) -> f64 {
        Self::transform(&self.resid, rho)
            .iter()
            .map(|e| e * e)
            .sum()
    }

    fn log_jacobian(&self, rho: f64) -> f64 {
        0.5 * (1.0 - rho * rho).ln()
    }
}

/// `2π f(0)` of an AR(1) process, the long-run variance of its sample mean.
pub fn ar1_long_run_variance(rho: f64, sigma2: f64) -> f64 {
    sigma2 / (1.0 - rho).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{make_design, DesignKind};
    use crate::spectral::{simulate_ts, Ar1Spec, SimSource};

    fn mean_model(rho: f64, n: usize, seed: u64) -> WhittleModel {
        let spec = Ar1Spec::new(rho, 1.0).unwrap();
        let y = simulate_ts(SimSource::Ar1(spec), n, seed).unwrap();
        let z = y.iter().map(|v| v + 1.0).collect();
        WhittleModel::new(z, make_design(DesignKind::Mean, n, None).unwrap()).unwrap()
    }

    #[test]
    fn wn_interval_is_student_t() {
        let m = mean_model(0.0, 20, 3);
        let s = &fit_wn(&m, 0.9).unwrap()[0];
        let mean = m.z.iter().sum::<f64>() / 20.0;
        let sd = (m.z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 19.0 / 20.0).sqrt();
        assert!((s.mean - mean).abs() < 1e-12);
        // t_{19, 0.95}
        assert!((s.upper - mean - 1.729_132_811_521_367 * sd).abs() < 1e-9);
    }

    #[test]
    fn ar_fit_recovers_mean_and_autocorrelation() {
        let m = mean_model(0.7, 512, 11);
        let cfg = SamplerConfig {
            iterations: 3000,
            burnin: 1000,
            thinning: 2,
            ..Default::default()
        };
        for lik in [ArLikelihood::Whittle, ArLikelihood::Exact] {
            let s = &fit_ar(&m, &cfg, lik, 0.9).unwrap()[0];
            let sd = ar1_long_run_variance(0.7, 1.0).sqrt() / (512f64).sqrt();
            assert!((s.mean - 1.0).abs() < 4.0 * sd, "{lik:?}: {}", s.mean);
            // Interval length close to 2·1.645·sd of the true long-run variance.
            assert!(
                (s.length / (2.0 * 1.6449 * sd) - 1.0).abs() < 0.35,
                "{lik:?}: {}",
                s.length
            );
        }
    }

    #[test]
    fn ar_draws_are_deterministic() {
        let m = mean_model(0.3, 64, 2);
        let cfg = SamplerConfig {
            iterations: 200,
            burnin: 100,
            thinning: 1,
            seed: 9,
            ..Default::default()
        };
        assert_eq!(
            ar_draws(&m, &cfg, ArLikelihood::Whittle).unwrap(),
            ar_draws(&m, &cfg, ArLikelihood::Whittle).unwrap()
        );
    }

    #[test]
    fn model_labels_match_serde_names() {
        for m in [ErrorModel::Np, ErrorModel::Ar, ErrorModel::Wn] {
            assert_eq!(
                serde_json::to_string(&m).unwrap(),
                format!("\"{}\"", m.label())
            );
        }
    }
}
