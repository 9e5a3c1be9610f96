//! Bernstein–Dirichlet process prior for the error spectrum and a
//! Metropolis-within-Gibbs sampler for the joint posterior of `(θ, f)`.
//!
//! The spectral density is
//!
//! ```text
//! f(ω) = τ Σ_{j=1}^{k} Φ((j−1)/k, j/k] · b(ω/π | j, k−j+1),   Φ ~ DP(M, Uniform[0,1])
//! ```
//!
//! with the Dirichlet process truncated to `L` sticks, `k ~ p(k) ∝ exp(−c k²)` on
//! `1..=k_max`, and `τ ~ Gamma(shape, rate)`. Coefficients are drawn exactly from
//! their Gaussian full conditional; the spectral parameters are updated by
//! random-walk Metropolis–Hastings blocks.

mod chain;
mod summary;

pub use chain::{
    gibbs_theta, mh_block_f, run_chain, AcceptFlags, AcceptanceStats, Chain, ChainOutput,
    Checkpoint, PosteriorDraw, CHECKPOINT_VERSION,
};
pub use summary::{
    quantile, summarize, summarize_coefficients, CoefSummary, PosteriorSummary, SpectrumBand,
    SPECTRUM_GRID,
};

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::spectral::{BernsteinSpectrum, TruncationBounds};
use crate::whittle::ThetaPrior;

/// Hard cap on the Bernstein degree.
pub const K_MAX: usize = 500;

/// DP truncation level `20 + ⌈√n⌉`.
pub fn default_truncation(n: usize) -> usize {
    20 + (n as f64).sqrt().ceil() as usize
}

/// Random-walk proposal sizes for the spectral blocks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProposalScales {
    /// Standard deviation of the logit-scale stick walk.
    pub stick: f64,
    /// Half-width of the reflected uniform window for locations.
    pub location: f64,
    /// Standard deviation of the log-scale walk on `τ`.
    pub tau: f64,
    /// Largest step of the degree walk; steps are uniform on `±{1..=k_step}`.
    pub k_step: usize,
}

impl Default for ProposalScales {
    fn default() -> Self {
        Self {
            stick: 1.0,
            location: 0.2,
            tau: 0.3,
            k_step: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burnin: usize,
    pub thinning: usize,
    /// DP concentration `M`.
    pub concentration: f64,
    /// `c` in `p(k) ∝ exp(−c k²)`.
    pub k_prior_c: f64,
    pub k_max: usize,
    pub tau_shape: f64,
    pub tau_rate: f64,
    /// DP truncation `L`; `None` means `20 + ⌈√n⌉`.
    pub truncation: Option<usize>,
    pub proposals: ProposalScales,
    /// Robbins–Monro tuning of proposal scales during burn-in.
    pub adapt: bool,
    pub target_acceptance: f64,
    pub truncation_bounds: Option<TruncationBounds>,
    pub theta_prior: ThetaPrior,
    /// Pin the Bernstein degree (disables the `k` block).
    pub fixed_k: Option<usize>,
    /// When false the likelihood is dropped and the chain targets the prior.
    pub use_likelihood: bool,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            iterations: 6000,
            burnin: 2000,
            thinning: 2,
            concentration: 1.0,
            k_prior_c: 0.01,
            k_max: K_MAX,
            tau_shape: 0.001,
            tau_rate: 0.001,
            truncation: None,
            proposals: ProposalScales::default(),
            adapt: true,
            target_acceptance: 0.3,
            truncation_bounds: None,
            theta_prior: ThetaPrior::Flat,
            fixed_k: None,
            use_likelihood: true,
            seed: 1,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.iterations == 0 {
            return bad("iterations must be positive");
        }
        if self.burnin >= self.iterations {
            return bad("burnin must be smaller than iterations");
        }
        if self.thinning == 0 {
            return bad("thinning must be at least 1");
        }
        if !(self.concentration > 0.0) {
            return bad("DP concentration must be positive");
        }
        if !(self.k_prior_c > 0.0) {
            return bad("k prior constant must be positive");
        }
        if self.k_max == 0 || self.k_max > K_MAX {
            return bad("k_max must lie in 1..=500");
        }
        if !(self.tau_shape > 0.0 && self.tau_rate > 0.0) {
            return bad("τ prior shape and rate must be positive");
        }
        if let Some(l) = self.truncation {
            if l < 2 {
                return bad("DP truncation must be at least 2");
            }
        }
        if let Some(k) = self.fixed_k {
            if k == 0 || k > self.k_max {
                return bad("fixed k must lie in 1..=k_max");
            }
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return bad("target acceptance must lie in (0, 1)");
        }
        let p = &self.proposals;
        if !(p.stick >= 0.0 && p.location >= 0.0 && p.tau >= 0.0) {
            return bad("proposal scales must be nonnegative");
        }
        Ok(())
    }

    /// Number of retained draws: post-burn-in iterations that are multiples of the thinning.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burnin) / self.thinning
    }

    pub fn truncation_for(&self, n: usize) -> usize {
        self.truncation.unwrap_or_else(|| default_truncation(n))
    }

    pub fn k_prior(&self) -> KPrior {
        KPrior::new(self.k_prior_c, self.k_max)
    }
}

/// Normalized `p(k) ∝ exp(−c k²)` on `1..=k_max`.
#[derive(Clone, Debug)]
pub struct KPrior {
    pub c: f64,
    pub probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl KPrior {
    pub fn new(c: f64, k_max: usize) -> Self {
        let raw: Vec<f64> = (1..=k_max).map(|k| (-c * (k * k) as f64).exp()).collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { c, probs, cdf }
    }

    pub fn k_max(&self) -> usize {
        self.probs.len()
    }

    /// Unnormalized log mass; `-∞` outside the support.
    pub fn log_mass(&self, k: usize) -> f64 {
        if k == 0 || k > self.k_max() {
            f64::NEG_INFINITY
        } else {
            -self.c * (k * k) as f64
        }
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c < u);
        idx.min(self.k_max() - 1) + 1
    }
}

/// Truncated stick-breaking state of the Bernstein–Dirichlet prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpState {
    /// Stick fractions `V_ℓ ∈ (0, 1)`.
    pub sticks: Vec<f64>,
    /// Atom locations `U_ℓ ∈ [0, 1]`.
    pub locations: Vec<f64>,
    pub k: usize,
    pub tau: f64,
}

impl DpState {
    pub fn truncation(&self) -> usize {
        self.sticks.len()
    }

    /// `p_ℓ = V_ℓ Π_{m<ℓ}(1 − V_m)`, with the leftover mass put on the last atom.
    pub fn stick_weights(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.sticks.len()];
        stick_weights_into(&self.sticks, &mut out);
        out
    }

    /// `w_j = τ Σ_{ℓ: U_ℓ ∈ ((j−1)/k, j/k]} p_ℓ`.
    pub fn bernstein_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.k];
        let p = self.stick_weights();
        bernstein_weights_into(&p, &self.locations, self.k, self.tau, &mut w);
        w
    }

    pub fn spectrum(&self) -> BernsteinSpectrum {
        BernsteinSpectrum {
            k: self.k,
            weights: self.bernstein_weights(),
        }
    }

    /// Evenly spread atoms with equal mass. The spectrum is `f ≡ τ` when `k`
    /// divides the truncation and close to it otherwise.
    pub fn flat(truncation: usize, k: usize, tau: f64) -> Self {
        let l = truncation;
        let sticks = (0..l)
            .map(|i| if i + 1 < l { 1.0 / (l - i) as f64 } else { 0.5 })
            .collect();
        let locations = (0..l).map(|i| (i as f64 + 0.5) / l as f64).collect();
        Self {
            sticks,
            locations,
            k,
            tau,
        }
    }
}

pub(crate) fn stick_weights_into(sticks: &[f64], out: &mut [f64]) {
    let l = sticks.len();
    let mut rest = 1.0;
    for i in 0..l {
        if i + 1 == l {
            out[i] = rest;
        } else {
            out[i] = sticks[i] * rest;
            rest *= 1.0 - sticks[i];
        }
    }
}

/// Bin index (0-based) of location `u` in the partition `((j−1)/k, j/k]`.
#[inline]
pub(crate) fn bin_of(u: f64, k: usize) -> usize {
    let b = (u * k as f64).ceil() as usize;
    b.clamp(1, k) - 1
}

pub(crate) fn bernstein_weights_into(
    p: &[f64],
    locations: &[f64],
    k: usize,
    tau: f64,
    out: &mut [f64],
) {
    out[..k].iter_mut().for_each(|w| *w = 0.0);
    for (pl, &u) in p.iter().zip(locations) {
        out[bin_of(u, k)] += tau * pl;
    }
}

/// Draws a state from the prior with `L = truncation` sticks.
pub fn prior_draw(config: &SamplerConfig, truncation: usize, seed: u64) -> Result<DpState> {
    config.validate()?;
    let mut rng = rng_from_seed(seed);
    prior_draw_with(config, truncation, &mut rng)
}

pub fn prior_draw_with<R: Rng + ?Sized>(
    config: &SamplerConfig,
    truncation: usize,
    rng: &mut R,
) -> Result<DpState> {
    if truncation < 2 {
        return Err(Error::Config("DP truncation must be at least 2".into()));
    }
    let beta = Beta::new(1.0, config.concentration).map_err(|e| Error::Config(e.to_string()))?;
    let gamma = Gamma::new(config.tau_shape, 1.0 / config.tau_rate)
        .map_err(|e| Error::Config(e.to_string()))?;
    let sticks = (0..truncation)
        .map(|_| beta.sample(rng).clamp(f64::EPSILON, 1.0 - f64::EPSILON))
        .collect();
    let locations = (0..truncation).map(|_| rng.random::<f64>()).collect();
    let k = match config.fixed_k {
        Some(k) => k,
        None => config.k_prior().sample(rng),
    };
    // Very small shapes underflow to exactly zero; keep τ strictly positive.
    let tau = gamma.sample(rng).max(f64::MIN_POSITIVE);
    Ok(DpState {
        sticks,
        locations,
        k,
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::default().validate().is_ok());
        let mut c = SamplerConfig::default();
        c.burnin = c.iterations;
        assert!(c.validate().is_err());
        let c = SamplerConfig {
            thinning: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = SamplerConfig {
            iterations: 100,
            burnin: 50,
            thinning: 5,
            ..Default::default()
        };
        assert_eq!(c.retained(), 10);
    }

    #[test]
    fn truncation_rule() {
        assert_eq!(default_truncation(128), 32);
        assert_eq!(default_truncation(100), 30);
    }

    #[test]
    fn prior_draw_is_deterministic() {
        let c = SamplerConfig::default();
        assert_eq!(
            prior_draw(&c, 30, 5).unwrap(),
            prior_draw(&c, 30, 5).unwrap()
        );
        assert_ne!(
            prior_draw(&c, 30, 5).unwrap(),
            prior_draw(&c, 30, 6).unwrap()
        );
    }

    #[test]
    fn degree_one_gives_constant_spectrum() {
        let c = SamplerConfig {
            fixed_k: Some(1),
            tau_shape: 2.0,
            tau_rate: 1.0,
            ..Default::default()
        };
        let s = prior_draw(&c, 25, 3).unwrap();
        let spec = s.spectrum();
        let total: f64 = s.stick_weights().iter().sum();
        for w in [0.0, 1.0, 2.0, PI] {
            assert_relative_eq!(spec.eval(w).unwrap(), s.tau * total, epsilon = 1e-12);
        }
    }

    #[test]
    fn prior_mean_of_k() {
        let c = SamplerConfig::default();
        let kp = c.k_prior();
        // Direct summation oracle.
        let num: f64 = (1..=500)
            .map(|k| k as f64 * (-0.01 * (k * k) as f64).exp())
            .sum();
        let den: f64 = (1..=500).map(|k| (-0.01 * (k * k) as f64).exp()).sum();
        assert_relative_eq!(kp.mean(), num / den, epsilon = 1e-12);
        let mut rng = rng_from_seed(77);
        let draws = 10_000;
        let mean = (0..draws)
            .map(|_| prior_draw_with(&c, 25, &mut rng).unwrap().k as f64)
            .sum::<f64>()
            / draws as f64;
        assert!(
            (mean / (num / den) - 1.0).abs() < 0.02,
            "{mean} vs {}",
            num / den
        );
    }

    #[test]
    fn flat_state_gives_flat_spectrum() {
        let s = DpState::flat(32, 8, 0.4);
        for p in s.stick_weights() {
            assert_relative_eq!(p, 1.0 / 32.0, epsilon = 1e-12);
        }
        let spec = s.spectrum();
        for w in [0.0, 0.7, PI] {
            assert_relative_eq!(spec.eval(w).unwrap(), 0.4, epsilon = 1e-12);
        }
    }

    #[test]
    fn bins_are_right_closed() {
        assert_eq!(bin_of(0.0, 4), 0);
        assert_eq!(bin_of(0.25, 4), 0);
        assert_eq!(bin_of(0.2500001, 4), 1);
        assert_eq!(bin_of(1.0, 4), 3);
    }

    proptest! {
        #[test]
        fn weights_are_a_partition_of_tau(
            sticks in proptest::collection::vec(0.001f64..0.999, 2..40),
            seed in any::<u64>(),
            k in 1usize..60,
            tau in 0.01f64..10.0,
        ) {
            let mut rng = rng_from_seed(seed);
            let locations: Vec<f64> = sticks.iter().map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
            let s = DpState { sticks, locations, k, tau };
            let p = s.stick_weights();
            prop_assert!(p.iter().all(|&v| v >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let w = s.bernstein_weights();
            prop_assert!(w.iter().all(|&v| v >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - tau).abs() < 1e-12 * tau.max(1.0));
        }
    }
}
