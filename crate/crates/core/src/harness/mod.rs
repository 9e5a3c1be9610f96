//! Simulation studies over replicated data sets, and the single-series
//! fitting pipeline.

mod dataset;
mod fits;

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{make_design, DesignKind, DesignSpec};
use crate::rng::derive_seed;
use crate::sampler::{CoefSummary, SamplerConfig};
use crate::spectral::{simulate_ts, Ar1Spec, SimSource};
use crate::whittle::WhittleModel;

pub use dataset::{
    case_study_prior, emit_plotdata, fit_dataset, fit_series, read_plotdata, read_series,
    FitOptions, FitReport, FittedBand, PlotRow,
};
pub use fits::{ar1_long_run_variance, ar_draws, fit_ar, fit_np, fit_wn, ArLikelihood, ErrorModel};

/// Largest tolerated share of failed replicates per `(n, model)` cell.
pub const MAX_FAILURE_RATE: f64 = 0.05;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// `Z_t = μ + Y_t`.
    #[default]
    MeanAr1,
    /// `Z_t = β₀ + β₁ t/n + Y_t`.
    LinregAr1,
    /// Caller-chosen built-in design and coefficients.
    Custom,
}

/// A simulation study: AR(1) errors `Y_t = ρ Y_{t−1} + e_t`,
/// `e_t ~ N(0, σ²)`, added to a regression mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub scenario: Scenario,
    pub rho: f64,
    pub sigma2: f64,
    pub mu: f64,
    pub beta: Vec<f64>,
    /// Design for [`Scenario::Custom`].
    pub design: Option<DesignKind>,
    /// Coefficients for [`Scenario::Custom`].
    pub theta: Option<Vec<f64>>,
    pub n_list: Vec<usize>,
    pub replicates: usize,
    pub fits: Vec<ErrorModel>,
    pub level: f64,
    pub seed: u64,
    pub ar_likelihood: ArLikelihood,
    pub sampler: SamplerConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::MeanAr1,
            rho: 0.7,
            sigma2: 1.0,
            mu: 1.0,
            beta: vec![1.0, 100.0],
            design: None,
            theta: None,
            n_list: vec![128, 256, 512],
            replicates: 200,
            fits: vec![ErrorModel::Np, ErrorModel::Ar, ErrorModel::Wn],
            level: 0.9,
            seed: 1,
            ar_likelihood: ArLikelihood::Whittle,
            sampler: SamplerConfig::default(),
        }
    }
}

impl StudyConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.n_list.is_empty() {
            return bad("n_list must not be empty".into());
        }
        if self.fits.is_empty() {
            return bad("at least one error model must be fitted".into());
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("level must lie in (0, 1), got {}", self.level));
        }
        if !(self.rho.abs() < 1.0) {
            return bad(format!(
                "AR coefficient must satisfy |ρ| < 1, got {}",
                self.rho
            ));
        }
        if !(self.sigma2 > 0.0) {
            return bad(format!(
                "innovation variance must be positive, got {}",
                self.sigma2
            ));
        }
        match self.scenario {
            Scenario::LinregAr1 if self.beta.len() != 2 => {
                return bad(format!(
                    "linreg_ar1 needs two coefficients, got {}",
                    self.beta.len()
                ))
            }
            Scenario::Custom => {
                let (Some(kind), Some(theta)) = (&self.design, &self.theta) else {
                    return bad("custom scenario needs `design` and `theta`".into());
                };
                if *kind == DesignKind::Custom {
                    return bad("custom scenario needs a built-in design kind".into());
                }
                if theta.is_empty() {
                    return bad("theta must not be empty".into());
                }
            }
            _ => {}
        }
        self.sampler.validate()
    }

    fn design_kind(&self) -> DesignKind {
        match self.scenario {
            Scenario::MeanAr1 => DesignKind::Mean,
            Scenario::LinregAr1 => DesignKind::LinearTrend { intercept: true },
            Scenario::Custom => self.design.clone().unwrap_or(DesignKind::Mean),
        }
    }

    /// True regression coefficients.
    pub fn truth(&self) -> Vec<f64> {
        match self.scenario {
            Scenario::MeanAr1 => vec![self.mu],
            Scenario::LinregAr1 => self.beta.clone(),
            Scenario::Custom => self.theta.clone().unwrap_or_default(),
        }
    }

    pub fn parameter_names(&self) -> Vec<String> {
        match self.scenario {
            Scenario::MeanAr1 => vec!["mu".into()],
            Scenario::LinregAr1 => vec!["beta0".into(), "beta1".into()],
            Scenario::Custom => (1..=self.truth().len())
                .map(|i| format!("theta{i}"))
                .collect(),
        }
    }
}

/// One line of a results table, aggregated over replicates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub model: ErrorModel,
    pub parameter: String,
    pub n: usize,
    /// Average posterior mean.
    pub mean: f64,
    pub mse: f64,
    pub coverage: f64,
    pub length: f64,
    pub replicates: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicateSeed {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCount {
    pub n: usize,
    pub model: ErrorModel,
    pub failed: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub config: StudyConfig,
    pub rows: Vec<StudyRow>,
    pub seeds: Vec<ReplicateSeed>,
    pub failures: Vec<FailureCount>,
    /// DP truncation used by the nonparametric fit at each `n`.
    pub truncation: BTreeMap<usize, usize>,
}

impl StudyResult {
    pub fn row(&self, model: ErrorModel, parameter: &str, n: usize) -> Option<&StudyRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.parameter == parameter && r.n == n)
    }

    /// Writes `study.json` (config echo, rows, seeds, failures) and
    /// `study_rows.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        crate::asymptotics::write_json(self, &dir.join("study.json"))?;
        let mut w = csv::Writer::from_path(dir.join("study_rows.csv"))?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Seed of replicate `rep` at the `i`-th sample size.
pub fn replicate_seed(base: u64, n_index: usize, rep: usize) -> u64 {
    derive_seed(derive_seed(base, n_index as u64), rep as u64)
}

/// Simulates one data set of the study at sample size `n`.
pub fn simulate_replicate(
    config: &StudyConfig,
    design: &DesignSpec,
    seed: u64,
) -> Result<WhittleModel> {
    let spec = Ar1Spec::new(config.rho, config.sigma2)?;
    let noise = simulate_ts(SimSource::Ar1(spec), design.n, derive_seed(seed, 0))?;
    let theta = config.truth();
    if theta.len() != design.r() {
        return Err(Error::Config(format!(
            "{} coefficients for a design with {} columns",
            theta.len(),
            design.r()
        )));
    }
    let z = (0..design.n)
        .map(|t| {
            noise[t]
                + (0..theta.len())
                    .map(|c| design.x[(t, c)] * theta[c])
                    .sum::<f64>()
        })
        .collect();
    WhittleModel::new(z, design.clone())
}

fn fit_one(
    config: &StudyConfig,
    model: &WhittleModel,
    which: ErrorModel,
    seed: u64,
) -> Result<Vec<CoefSummary>> {
    let sampler = SamplerConfig {
        seed,
        ..config.sampler.clone()
    };
    match which {
        ErrorModel::Np => fits::fit_np(model, &sampler, config.level),
        ErrorModel::Ar => fits::fit_ar(model, &sampler, config.ar_likelihood, config.level),
        ErrorModel::Wn => fits::fit_wn(model, config.level),
    }
}

type ReplicateFits = Vec<(ErrorModel, Result<Vec<CoefSummary>>)>;

fn run_replicate(config: &StudyConfig, design: &DesignSpec, seed: u64) -> ReplicateFits {
    let model = match simulate_replicate(config, design, seed) {
        Ok(m) => m,
        Err(e) => {
            let msg = e.to_string();
            return config
                .fits
                .iter()
                .map(|&m| (m, Err(Error::Data(msg.clone()))))
                .collect();
        }
    };
    config
        .fits
        .iter()
        .enumerate()
        .map(|(i, &which)| {
            (
                which,
                fit_one(config, &model, which, derive_seed(seed, 1 + i as u64)),
            )
        })
        .collect()
}

/// Runs every replicate at every sample size and aggregates per
/// `(model, parameter, n)`. Replicates run on the current rayon pool;
/// results do not depend on the pool size.
pub fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    config.validate()?;
    let truth = config.truth();
    let names = config.parameter_names();
    let mut rows = Vec::new();
    let mut seeds = Vec::new();
    let mut failures = Vec::new();
    let mut truncation = BTreeMap::new();

    for (ni, &n) in config.n_list.iter().enumerate() {
        let design = make_design(config.design_kind(), n, None)?;
        if design.r() != truth.len() {
            return Err(Error::Config(format!(
                "{} coefficients for a design with {} columns",
                truth.len(),
                design.r()
            )));
        }
        truncation.insert(n, config.sampler.truncation_for(n));
        let rep_seeds: Vec<u64> = (0..config.replicates)
            .map(|rep| replicate_seed(config.seed, ni, rep))
            .collect();
        let outcomes: Vec<ReplicateFits> = rep_seeds
            .par_iter()
            .map(|&seed| run_replicate(config, &design, seed))
            .collect();
        seeds.extend(
            rep_seeds
                .iter()
                .enumerate()
                .map(|(replicate, &seed)| ReplicateSeed { n, replicate, seed }),
        );

        for (mi, &which) in config.fits.iter().enumerate() {
            let mut ok: Vec<&Vec<CoefSummary>> = Vec::with_capacity(config.replicates);
            for (rep, out) in outcomes.iter().enumerate() {
                match &out[mi].1 {
                    Ok(s) => ok.push(s),
                    Err(e) => log::warn!("n = {n}, replicate {rep}, {}: {e}", which.label()),
                }
            }
            let failed = config.replicates - ok.len();
            failures.push(FailureCount {
                n,
                model: which,
                failed,
                total: config.replicates,
            });
            if failed as f64 > MAX_FAILURE_RATE * config.replicates as f64 || ok.is_empty() {
                return Err(Error::TooManyFailures {
                    failed,
                    total: config.replicates,
                });
            }
            for (c, name) in names.iter().enumerate() {
                rows.push(aggregate(
                    which,
                    name,
                    n,
                    truth[c],
                    ok.iter().map(|s| &s[c]),
                ));
            }
        }
    }
    Ok(StudyResult {
        config: config.clone(),
        rows,
        seeds,
        failures,
        truncation,
    })
}

fn aggregate<'a>(
    model: ErrorModel,
    parameter: &str,
    n: usize,
    truth: f64,
    summaries: impl Iterator<Item = &'a CoefSummary>,
) -> StudyRow {
    let (mut mean, mut mse, mut covered, mut length, mut count) = (0.0, 0.0, 0usize, 0.0, 0usize);
    for s in summaries {
        mean += s.mean;
        mse += (s.mean - truth).powi(2);
        covered += usize::from(s.covers(truth));
        length += s.length;
        count += 1;
    }
    let k = count as f64;
    StudyRow {
        model,
        parameter: parameter.to_string(),
        n,
        mean: mean / k,
        mse: mse / k,
        coverage: covered as f64 / k,
        length: length / k,
        replicates: count,
    }
}
