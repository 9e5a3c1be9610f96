use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{
    bernstein_weights_into, bin_of, stick_weights_into, DpState, KPrior, ProposalScales,
    SamplerConfig,
};
use crate::error::{invalid, Error, Result};
use crate::fourier::{coordinate_frequency, fourier_frequencies};
use crate::rng::rng_from_seed;
use crate::spectral::{bernstein_table, BernsteinSpectrum, LIPSCHITZ_GRID};
use crate::whittle::{
    conditional_theta_posterior_dinv, FrequencyPowers, ThetaPosterior, ThetaPrior, WhittleModel,
};

pub const CHECKPOINT_VERSION: u32 = 1;

const LN_2PI: f64 = 1.837_877_066_409_345_3;
const ADAPT_DECAY: f64 = 0.6;
const MAX_LOG_SCALE: f64 = 5.0;

/// Whether each block moved in a sweep (for per-element blocks: at least one element did).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptFlags {
    pub sticks: bool,
    pub locations: bool,
    pub k: bool,
    pub tau: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockCount {
    pub proposed: u64,
    pub accepted: u64,
}

impl BlockCount {
    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += u64::from(accepted);
    }

    fn add(&mut self, other: BlockCount) {
        self.proposed += other.proposed;
        self.accepted += other.accepted;
    }

    /// Acceptance rate; `None` when nothing was proposed.
    pub fn rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }
}

/// Post-burn-in acceptance counts per block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceStats {
    pub sticks: BlockCount,
    pub locations: BlockCount,
    pub k: BlockCount,
    pub tau: BlockCount,
}

impl AcceptanceStats {
    fn add(&mut self, other: &AcceptanceStats) {
        self.sticks.add(other.sticks);
        self.locations.add(other.locations);
        self.k.add(other.k);
        self.tau.add(other.tau);
    }
}

/// One retained draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraw {
    pub theta: Vec<f64>,
    pub state: DpState,
    pub loglik: f64,
    pub accept_flags: AcceptFlags,
}

impl PosteriorDraw {
    pub fn spectrum(&self) -> BernsteinSpectrum {
        self.state.spectrum()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainOutput {
    pub draws: Vec<PosteriorDraw>,
    pub acceptance: AcceptanceStats,
    pub truncation: usize,
    pub final_scales: ProposalScales,
}

/// Everything needed to continue a chain bit-for-bit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub iteration: usize,
    pub state: DpState,
    pub theta: Vec<f64>,
    pub scales: ProposalScales,
    pub acceptance: AcceptanceStats,
    pub rng: ChaCha8Rng,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cp: Checkpoint = serde_json::from_slice(&std::fs::read(path)?)?;
        if cp.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint version {}",
                cp.version
            )));
        }
        Ok(cp)
    }
}

/// Bernstein tables at the Fourier frequencies, cached per degree.
#[derive(Clone, Debug)]
struct BasisCache {
    omegas: Vec<f64>,
    tables: HashMap<usize, Vec<f64>>,
}

impl BasisCache {
    fn new(n: usize) -> Self {
        Self {
            omegas: fourier_frequencies(n),
            tables: HashMap::new(),
        }
    }

    fn nf(&self) -> usize {
        self.omegas.len()
    }

    fn ensure(&mut self, k: usize) {
        let omegas = &self.omegas;
        self.tables
            .entry(k)
            .or_insert_with(|| bernstein_table(k, omegas));
    }

    fn table(&self, k: usize) -> &[f64] {
        &self.tables[&k]
    }

    /// Unscaled spectrum `g(λ_i) = Σ_j mass_j b(λ_i/π | j, k−j+1)`.
    fn shape_values(&self, k: usize, mass: &[f64], out: &mut [f64]) {
        let t = self.table(k);
        for (i, o) in out.iter_mut().enumerate() {
            let row = &t[i * k..(i + 1) * k];
            *o = row.iter().zip(mass).map(|(b, m)| b * m).sum();
        }
    }
}

/// Whittle log-likelihood as a function of `τ` for a fixed spectral shape `g`:
/// `ll(τ) = c − ½(Σ m_i ln(2π g_i) + N ln τ) − ½ (Σ P_i / (2π g_i)) / τ`.
#[derive(Clone, Copy, Debug)]
struct TauProfile {
    log_shape: f64,
    min_shape: f64,
    count: f64,
    quad: f64,
    constant: f64,
}

impl TauProfile {
    fn new(powers: &FrequencyPowers, g: &[f64]) -> Option<Self> {
        let mut log_shape = 0.0;
        let mut quad = 0.0;
        let mut count = 0.0;
        let mut min_shape = f64::INFINITY;
        for ((&p, &m), &gi) in powers.power.iter().zip(&powers.multiplicity).zip(g) {
            if !(gi > 0.0) || !gi.is_finite() {
                return None;
            }
            min_shape = min_shape.min(gi);
            let d = 2.0 * PI * gi;
            log_shape += m * d.ln();
            quad += p / d;
            count += m;
        }
        Some(Self {
            log_shape,
            min_shape,
            count,
            quad,
            constant: -0.5 * powers.n as f64 * LN_2PI,
        })
    }

    /// `-∞` once `τ g` would underflow, so accepted spectra stay positive.
    fn loglik(&self, tau: f64) -> f64 {
        if !(tau * self.min_shape >= f64::MIN_POSITIVE) {
            return f64::NEG_INFINITY;
        }
        self.constant - 0.5 * (self.log_shape + self.count * tau.ln()) - 0.5 * self.quad / tau
    }
}

/// Scratch and caches for the spectral Metropolis–Hastings sweep.
#[derive(Clone, Debug)]
struct SpectralKernel {
    basis: BasisCache,
    coords: Vec<usize>,
}

struct SweepOutcome {
    flags: AcceptFlags,
    counts: AcceptanceStats,
    loglik: f64,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn reflect_unit(mut x: f64) -> f64 {
    loop {
        if x < 0.0 {
            x = -x;
        } else if x > 1.0 {
            x = 2.0 - x;
        } else {
            return x;
        }
    }
}

fn stick_log_target(v: f64, concentration: f64) -> f64 {
    if !(v > 0.0 && v < 1.0) {
        return f64::NEG_INFINITY;
    }
    v.ln() + concentration * (-v).ln_1p()
}

impl SpectralKernel {
    fn new(n: usize) -> Self {
        Self {
            basis: BasisCache::new(n),
            coords: coordinate_frequency(n),
        }
    }

    fn loglik(&self, powers: &FrequencyPowers, tau: f64, g: &[f64], config: &SamplerConfig) -> f64 {
        if !config.use_likelihood {
            return 0.0;
        }
        TauProfile::new(powers, g).map_or(f64::NEG_INFINITY, |p| p.loglik(tau))
    }

    fn in_bounds(&self, config: &SamplerConfig, tau: f64, mass: &[f64]) -> bool {
        match &config.truncation_bounds {
            None => true,
            Some(b) => {
                let spec = BernsteinSpectrum {
                    k: mass.len(),
                    weights: mass.iter().map(|m| tau * m).collect(),
                };
                b.contains(&spec, LIPSCHITZ_GRID)
            }
        }
    }

    /// Spectrum values `f(λ_j)` at the Fourier frequencies.
    fn spectrum_values(&mut self, state: &DpState) -> Vec<f64> {
        self.basis.ensure(state.k);
        let p = state.stick_weights();
        let mut mass = vec![0.0; state.k];
        bernstein_weights_into(&p, &state.locations, state.k, 1.0, &mut mass);
        let mut g = vec![0.0; self.basis.nf()];
        self.basis.shape_values(state.k, &mass, &mut g);
        g.iter().map(|v| state.tau * v).collect()
    }

    fn theta_posterior(
        &mut self,
        model: &WhittleModel,
        state: &DpState,
        prior: &ThetaPrior,
    ) -> Result<ThetaPosterior> {
        let f = self.spectrum_values(state);
        if let Some((j, &v)) = f
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
        {
            return Err(Error::NonPositiveSpectrum {
                omega: self.basis.omegas[j],
                value: v,
            });
        }
        let dinv: Vec<f64> = self
            .coords
            .iter()
            .map(|&j| 1.0 / (2.0 * PI * f[j]))
            .collect();
        conditional_theta_posterior_dinv(model, &dinv, prior)
    }

    fn draw_theta<R: Rng + ?Sized>(
        &mut self,
        model: &WhittleModel,
        state: &DpState,
        prior: &ThetaPrior,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        Ok(self.theta_posterior(model, state, prior)?.draw(rng))
    }

    fn sweep<R: Rng + ?Sized>(
        &mut self,
        powers: &FrequencyPowers,
        state: &mut DpState,
        config: &SamplerConfig,
        scales: &ProposalScales,
        k_prior: &KPrior,
        rng: &mut R,
    ) -> SweepOutcome {
        let l = state.truncation();
        let nf = self.basis.nf();
        let mut flags = AcceptFlags::default();
        let mut counts = AcceptanceStats::default();

        let mut p = vec![0.0; l];
        stick_weights_into(&state.sticks, &mut p);
        let k = state.k;
        self.basis.ensure(k);
        let mut mass = vec![0.0; k];
        bernstein_weights_into(&p, &state.locations, k, 1.0, &mut mass);
        let mut g = vec![0.0; nf];
        self.basis.shape_values(k, &mass, &mut g);
        let mut ll = self.loglik(powers, state.tau, &g, config);

        let mut p_new = vec![0.0; l];
        let mut mass_new = vec![0.0; k];
        let mut g_new = vec![0.0; nf];

        // Sticks: logit-scale Gaussian walk.
        for i in 0..l {
            if scales.stick == 0.0 {
                counts.sticks.record(true);
                flags.sticks = true;
                continue;
            }
            let old = state.sticks[i];
            let z: f64 = rng.sample(StandardNormal);
            let prop = logistic((old / (1.0 - old)).ln() + scales.stick * z);
            let mut log_ratio = stick_log_target(prop, config.concentration)
                - stick_log_target(old, config.concentration);
            let mut ll_prop = ll;
            if log_ratio.is_finite() {
                state.sticks[i] = prop;
                stick_weights_into(&state.sticks, &mut p_new);
                bernstein_weights_into(&p_new, &state.locations, k, 1.0, &mut mass_new);
                self.basis.shape_values(k, &mass_new, &mut g_new);
                ll_prop = self.loglik(powers, state.tau, &g_new, config);
                log_ratio += ll_prop - ll;
                if !self.in_bounds(config, state.tau, &mass_new) {
                    log_ratio = f64::NEG_INFINITY;
                }
            }
            let accept = log_ratio.is_finite() && rng.random::<f64>().ln() < log_ratio;
            if accept {
                std::mem::swap(&mut p, &mut p_new);
                std::mem::swap(&mut mass, &mut mass_new);
                std::mem::swap(&mut g, &mut g_new);
                ll = ll_prop;
                flags.sticks = true;
            } else {
                state.sticks[i] = old;
            }
            counts.sticks.record(accept);
        }

        // Locations: reflected uniform window on [0, 1].
        for i in 0..l {
            if scales.location == 0.0 {
                counts.locations.record(true);
                flags.locations = true;
                continue;
            }
            let old = state.locations[i];
            let step: f64 = rng.random_range(-1.0..1.0);
            let prop = reflect_unit(old + scales.location * step);
            let (b_old, b_new) = (bin_of(old, k), bin_of(prop, k));
            // The likelihood only sees bin membership.
            let accept = if b_old == b_new {
                true
            } else {
                state.locations[i] = prop;
                bernstein_weights_into(&p, &state.locations, k, 1.0, &mut mass_new);
                state.locations[i] = old;
                // Recomputed in full: an incremental update can leave rounding
                // residue where the exact shape underflows to zero.
                self.basis.shape_values(k, &mass_new, &mut g_new);
                let ll_prop = self.loglik(powers, state.tau, &g_new, config);
                let mut log_ratio = ll_prop - ll;
                if !self.in_bounds(config, state.tau, &mass_new) {
                    log_ratio = f64::NEG_INFINITY;
                }
                let accept = log_ratio.is_finite() && rng.random::<f64>().ln() < log_ratio;
                if accept {
                    std::mem::swap(&mut mass, &mut mass_new);
                    std::mem::swap(&mut g, &mut g_new);
                    ll = ll_prop;
                }
                accept
            };
            if accept {
                state.locations[i] = prop;
                flags.locations = true;
            }
            counts.locations.record(accept);
        }

        // Degree: symmetric discrete walk.
        if config.fixed_k.is_none() {
            let accept = if scales.k_step == 0 {
                true
            } else {
                let size = rng.random_range(1..=scales.k_step) as i64;
                let sign = if rng.random::<bool>() { 1 } else { -1 };
                let prop = k as i64 + sign * size;
                let lp_prop = if prop < 1 {
                    f64::NEG_INFINITY
                } else {
                    k_prior.log_mass(prop as usize)
                };
                let u: f64 = rng.random();
                if lp_prop.is_finite() {
                    let kp = prop as usize;
                    self.basis.ensure(kp);
                    let mut mass_k = vec![0.0; kp];
                    bernstein_weights_into(&p, &state.locations, kp, 1.0, &mut mass_k);
                    self.basis.shape_values(kp, &mass_k, &mut g_new);
                    let ll_prop = self.loglik(powers, state.tau, &g_new, config);
                    let mut log_ratio = ll_prop - ll + lp_prop - k_prior.log_mass(k);
                    if !self.in_bounds(config, state.tau, &mass_k) {
                        log_ratio = f64::NEG_INFINITY;
                    }
                    let accept = log_ratio.is_finite() && u.ln() < log_ratio;
                    if accept {
                        state.k = kp;
                        mass = mass_k;
                        std::mem::swap(&mut g, &mut g_new);
                        ll = ll_prop;
                    }
                    accept
                } else {
                    false
                }
            };
            flags.k = accept;
            counts.k.record(accept);
        }

        // Scale: log-normal walk with the Gamma prior ratio.
        {
            let accept = if scales.tau == 0.0 {
                true
            } else {
                let z: f64 = rng.sample(StandardNormal);
                let prop = state.tau * (scales.tau * z).exp();
                let u: f64 = rng.random();
                if prop > 0.0 && prop.is_finite() {
                    let ll_prop = if config.use_likelihood {
                        TauProfile::new(powers, &g).map_or(f64::NEG_INFINITY, |pr| pr.loglik(prop))
                    } else {
                        0.0
                    };
                    let mut log_ratio = ll_prop - ll
                        + config.tau_shape * (prop.ln() - state.tau.ln())
                        - config.tau_rate * (prop - state.tau);
                    if !self.in_bounds(config, prop, &mass) {
                        log_ratio = f64::NEG_INFINITY;
                    }
                    let accept = log_ratio.is_finite() && u.ln() < log_ratio;
                    if accept {
                        state.tau = prop;
                        ll = ll_prop;
                    }
                    accept
                } else {
                    false
                }
            };
            flags.tau = accept;
            counts.tau.record(accept);
        }

        let loglik = if config.use_likelihood {
            ll
        } else {
            TauProfile::new(powers, &g).map_or(f64::NEG_INFINITY, |pr| pr.loglik(state.tau))
        };
        SweepOutcome {
            flags,
            counts,
            loglik,
        }
    }
}

/// Exact draw of `θ` from its Gaussian full conditional given the spectrum of `state`.
pub fn gibbs_theta<R: Rng + ?Sized>(
    model: &WhittleModel,
    state: &DpState,
    prior: &ThetaPrior,
    rng: &mut R,
) -> Result<Vec<f64>> {
    SpectralKernel::new(model.n).draw_theta(model, state, prior, rng)
}

/// One Metropolis–Hastings sweep over sticks, locations, degree and scale at
/// fixed `θ`, using the proposal scales in `config`.
pub fn mh_block_f<R: Rng + ?Sized>(
    model: &WhittleModel,
    theta: &[f64],
    state: &DpState,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<(DpState, AcceptFlags)> {
    config.validate()?;
    if theta.len() != model.r() {
        return Err(invalid(format!(
            "θ has length {}, design has {} columns",
            theta.len(),
            model.r()
        )));
    }
    let mut kernel = SpectralKernel::new(model.n);
    let powers = model.periodogram(theta);
    let mut next = state.clone();
    let out = kernel.sweep(
        &powers,
        &mut next,
        config,
        &config.proposals,
        &config.k_prior(),
        rng,
    );
    Ok((next, out.flags))
}

/// A running Metropolis-within-Gibbs chain.
#[derive(Clone, Debug)]
pub struct Chain<'m> {
    model: &'m WhittleModel,
    config: SamplerConfig,
    kernel: SpectralKernel,
    k_prior: KPrior,
    rng: ChaCha8Rng,
    iteration: usize,
    state: DpState,
    theta: Vec<f64>,
    scales: ProposalScales,
    acceptance: AcceptanceStats,
}

impl<'m> Chain<'m> {
    /// Starts from flat spectrum at the residual variance and the least-squares `θ`.
    pub fn new(model: &'m WhittleModel, config: &SamplerConfig) -> Result<Self> {
        config.validate()?;
        if model.n < 2 {
            return Err(invalid("need at least two observations"));
        }
        let truncation = config.truncation_for(model.n);
        let mut kernel = SpectralKernel::new(model.n);
        let unit = DpState::flat(truncation, 1, 1.0);
        let ols = kernel
            .theta_posterior(model, &unit, &ThetaPrior::Flat)?
            .mean
            .as_slice()
            .to_vec();
        let res = model.residual_time(&ols);
        // Rounding-level floor for series the design fits exactly.
        let scale = model.z.iter().map(|v| v * v).sum::<f64>() / model.n as f64;
        let var = (res.iter().map(|v| v * v).sum::<f64>() / model.n as f64)
            .max(f64::EPSILON * f64::EPSILON * scale)
            .max(f64::MIN_POSITIVE);
        let k = config.fixed_k.unwrap_or(10.min(config.k_max));
        let state = DpState::flat(truncation, k, var / (2.0 * PI));
        Ok(Self {
            model,
            config: config.clone(),
            kernel,
            k_prior: config.k_prior(),
            rng: rng_from_seed(config.seed),
            iteration: 0,
            state,
            theta: ols,
            scales: config.proposals,
            acceptance: AcceptanceStats::default(),
        })
    }

    pub fn resume(
        model: &'m WhittleModel,
        config: &SamplerConfig,
        checkpoint: Checkpoint,
    ) -> Result<Self> {
        if checkpoint.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint version {}",
                checkpoint.version
            )));
        }
        config.validate()?;
        if checkpoint.theta.len() != model.r() {
            return Err(Error::Config(
                "checkpoint θ does not match the design".into(),
            ));
        }
        Ok(Self {
            model,
            config: config.clone(),
            kernel: SpectralKernel::new(model.n),
            k_prior: config.k_prior(),
            rng: checkpoint.rng,
            iteration: checkpoint.iteration,
            state: checkpoint.state,
            theta: checkpoint.theta,
            scales: checkpoint.scales,
            acceptance: checkpoint.acceptance,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            iteration: self.iteration,
            state: self.state.clone(),
            theta: self.theta.clone(),
            scales: self.scales,
            acceptance: self.acceptance,
            rng: self.rng.clone(),
        }
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn state(&self) -> &DpState {
        &self.state
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn scales(&self) -> ProposalScales {
        self.scales
    }

    pub fn acceptance(&self) -> AcceptanceStats {
        self.acceptance
    }

    pub fn is_finished(&self) -> bool {
        self.iteration >= self.config.iterations
    }

    /// One Gibbs step for `θ` followed by one spectral sweep. Returns the
    /// draw if this iteration is retained.
    pub fn step(&mut self) -> Result<Option<PosteriorDraw>> {
        let t = self.iteration;
        let cfg = &self.config;
        // Without the likelihood θ has no conditional to draw from and stays put.
        if cfg.use_likelihood {
            self.theta =
                self.kernel
                    .draw_theta(self.model, &self.state, &cfg.theta_prior, &mut self.rng)?;
        }
        let powers = self.model.periodogram(&self.theta);
        let out = self.kernel.sweep(
            &powers,
            &mut self.state,
            cfg,
            &self.scales,
            &self.k_prior,
            &mut self.rng,
        );
        if cfg.use_likelihood && !out.loglik.is_finite() {
            return Err(Error::NonFiniteLikelihood { iteration: t });
        }
        if t < cfg.burnin {
            if cfg.adapt {
                adapt_scales(&mut self.scales, &out.counts, cfg.target_acceptance, t);
            }
        } else {
            self.acceptance.add(&out.counts);
        }
        self.iteration += 1;
        let retained = t >= cfg.burnin && (t - cfg.burnin + 1) % cfg.thinning == 0;
        Ok(retained.then(|| PosteriorDraw {
            theta: self.theta.clone(),
            state: self.state.clone(),
            loglik: out.loglik,
            accept_flags: out.flags,
        }))
    }

    /// Runs up to `sweeps` further iterations (stopping at the configured end).
    pub fn run(&mut self, sweeps: usize) -> Result<Vec<PosteriorDraw>> {
        let mut draws = Vec::new();
        for _ in 0..sweeps {
            if self.is_finished() {
                break;
            }
            if let Some(d) = self.step()? {
                draws.push(d);
            }
        }
        Ok(draws)
    }

    pub fn run_to_end(&mut self) -> Result<Vec<PosteriorDraw>> {
        self.run(self.config.iterations.saturating_sub(self.iteration))
    }

    pub fn into_output(self, draws: Vec<PosteriorDraw>) -> ChainOutput {
        ChainOutput {
            draws,
            acceptance: self.acceptance,
            truncation: self.state.truncation(),
            final_scales: self.scales,
        }
    }
}

/// Robbins–Monro step on the log proposal scales.
fn adapt_scales(scales: &mut ProposalScales, counts: &AcceptanceStats, target: f64, t: usize) {
    let gain = 1.0 / ((t + 1) as f64).powf(ADAPT_DECAY);
    let update = |s: &mut f64, c: &BlockCount, cap: f64| {
        if *s > 0.0 {
            if let Some(rate) = c.rate() {
                let ls =
                    (s.ln() + gain * (rate - target)).clamp(-MAX_LOG_SCALE * 3.0, MAX_LOG_SCALE);
                *s = ls.exp().min(cap);
            }
        }
    };
    update(&mut scales.stick, &counts.sticks, f64::INFINITY);
    update(&mut scales.location, &counts.locations, 1.0);
    update(&mut scales.tau, &counts.tau, f64::INFINITY);
}

/// Runs a full chain and returns the retained draws.
pub fn run_chain(model: &WhittleModel, config: &SamplerConfig) -> Result<ChainOutput> {
    let mut chain = Chain::new(model, config)?;
    let draws = chain.run_to_end()?;
    log::debug!(
        "chain finished: {} draws, acceptance sticks {:?} locations {:?} k {:?} tau {:?}",
        draws.len(),
        chain.acceptance.sticks.rate(),
        chain.acceptance.locations.rate(),
        chain.acceptance.k.rate(),
        chain.acceptance.tau.rate()
    );
    Ok(chain.into_output(draws))
}
