//! Fitting a single observed series: CSV ingestion, the regression fit with
//! a nonparametric error spectrum, and plot data for the fitted curve.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{make_design, DesignKind};
use crate::sampler::{
    quantile, run_chain, summarize, AcceptanceStats, CoefSummary, SamplerConfig, SpectrumBand,
};
use crate::whittle::{ThetaPrior, WhittleModel};

/// Seasonal designs need at least this many full periods.
const MIN_PERIODS: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Header name of the value column.
    pub value_column: String,
    /// Take natural logarithms of the values before fitting.
    pub log: bool,
    pub design: DesignKind,
    pub level: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            value_column: "value".into(),
            log: false,
            design: DesignKind::TrendDummies { period: 12 },
            level: 0.9,
        }
    }
}

/// Pointwise posterior median and band of the fitted regression curve `Xθ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedBand {
    pub median: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub options: FitOptions,
    pub n: usize,
    pub coefficient_names: Vec<String>,
    pub coefficients: Vec<CoefSummary>,
    /// The fitted series, after the optional log transform.
    pub observed: Vec<f64>,
    pub fitted: FittedBand,
    pub spectrum: SpectrumBand,
    pub acceptance: AcceptanceStats,
    pub truncation: usize,
    pub draws: usize,
    pub sampler: SamplerConfig,
}

impl FitReport {
    /// Share of time points whose observed value lies inside the band.
    pub fn observed_in_band(&self) -> f64 {
        in_band(&self.observed, &self.fitted)
    }

    /// Share of time points whose fitted median lies inside the band.
    pub fn median_in_band(&self) -> f64 {
        in_band(&self.fitted.median, &self.fitted)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::asymptotics::write_json(self, path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(std::io::BufReader::new(
            std::fs::File::open(path)?,
        ))?)
    }
}

fn in_band(values: &[f64], band: &FittedBand) -> f64 {
    let hits = values
        .iter()
        .enumerate()
        .filter(|&(t, v)| band.lower[t] <= *v && *v <= band.upper[t])
        .count();
    hits as f64 / values.len() as f64
}

/// Normal priors with mean 0: standard deviation 10000 on the trend and 100
/// on each of the `r − 1` seasonal effects.
pub fn case_study_prior(r: usize) -> ThetaPrior {
    let mut sd = vec![100.0; r];
    sd[0] = 10_000.0;
    ThetaPrior::independent_normal(vec![0.0; r], &sd)
}

/// Reads one numeric column, selected by header name.
pub fn read_series(path: &Path, column: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let idx = rdr
        .headers()?
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| Error::Data(format!("no column named `{column}` in {}", path.display())))?;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = rec.get(idx).unwrap_or("").trim();
        let v: f64 = field
            .parse()
            .map_err(|_| Error::Data(format!("row {}: `{field}` is not a number", line + 1)))?;
        if !v.is_finite() {
            return Err(Error::Data(format!(
                "row {}: value is not finite",
                line + 1
            )));
        }
        out.push(v);
    }
    Ok(out)
}

fn coefficient_names(kind: &DesignKind, r: usize) -> Vec<String> {
    match kind {
        DesignKind::Mean => vec!["mean".into()],
        DesignKind::LinearTrend { intercept: true } => vec!["intercept".into(), "trend".into()],
        DesignKind::LinearTrend { intercept: false } => vec!["trend".into()],
        DesignKind::TrendSeasonal { .. } => ["intercept".to_string(), "trend".to_string()]
            .into_iter()
            .chain((2..r).map(|s| format!("season{s}")))
            .collect(),
        DesignKind::TrendDummies { .. } => std::iter::once("trend".to_string())
            .chain((1..r).map(|s| format!("season{s}")))
            .collect(),
        DesignKind::Custom => (1..=r).map(|c| format!("x{c}")).collect(),
    }
}

/// Fits the series in `path`. See [`fit_series`].
pub fn fit_dataset(
    path: &Path,
    options: &FitOptions,
    sampler: &SamplerConfig,
) -> Result<FitReport> {
    let values = read_series(path, &options.value_column)?;
    fit_series(values, options, sampler)
}

/// Regression of the (optionally logged) series on the chosen design with a
/// Bernstein–Dirichlet prior on the error spectrum. Seasonal series are cut
/// to a whole number of periods.
pub fn fit_series(
    mut values: Vec<f64>,
    options: &FitOptions,
    sampler: &SamplerConfig,
) -> Result<FitReport> {
    if options.log {
        if let Some(v) = values.iter().find(|v| **v <= 0.0) {
            return Err(Error::Data(format!(
                "log transform needs positive values, found {v}"
            )));
        }
        values.iter_mut().for_each(|v| *v = v.ln());
    }
    let period = match options.design {
        DesignKind::TrendSeasonal { period } | DesignKind::TrendDummies { period } => Some(period),
        _ => None,
    };
    if let Some(p) = period {
        if p == 0 || values.len() < MIN_PERIODS * p {
            return Err(Error::Data(format!(
                "seasonal design with period {p} needs at least {} observations, got {}",
                MIN_PERIODS * p,
                values.len()
            )));
        }
        let whole = values.len() / p * p;
        if whole < values.len() {
            log::warn!(
                "dropping {} trailing observations to keep whole periods",
                values.len() - whole
            );
            values.truncate(whole);
        }
    }
    let n = values.len();
    let design = make_design(options.design.clone(), n, None)?;
    let names = coefficient_names(&options.design, design.r());
    let model = WhittleModel::new(values, design)?;
    let out = run_chain(&model, sampler)?;
    let summary = summarize(&out.draws, options.level)?;

    let x = &model.design.x;
    let tail = (1.0 - options.level) / 2.0;
    let mut fitted = FittedBand {
        median: vec![],
        lower: vec![],
        upper: vec![],
    };
    let mut column = Vec::with_capacity(out.draws.len());
    for t in 0..n {
        column.clear();
        column.extend(out.draws.iter().map(|d| {
            d.theta
                .iter()
                .enumerate()
                .map(|(c, b)| x[(t, c)] * b)
                .sum::<f64>()
        }));
        column.sort_by(f64::total_cmp);
        fitted.median.push(quantile(&column, 0.5));
        fitted.lower.push(quantile(&column, tail));
        fitted.upper.push(quantile(&column, 1.0 - tail));
    }

    Ok(FitReport {
        options: options.clone(),
        n,
        coefficient_names: names,
        coefficients: summary.coefficients,
        observed: model.z,
        fitted,
        spectrum: summary.spectrum,
        acceptance: out.acceptance,
        truncation: out.truncation,
        draws: out.draws.len(),
        sampler: sampler.clone(),
    })
}

/// One row of the plot-data file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub t: usize,
    pub observed: f64,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Writes `t, observed, median, lower, upper` with `t` counted from 1.
pub fn emit_plotdata(report: &FitReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for t in 0..report.n {
        w.serialize(PlotRow {
            t: t + 1,
            observed: report.observed[t],
            median: report.fitted.median[t],
            lower: report.fitted.lower[t],
            upper: report.fitted.upper[t],
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_plotdata(path: &Path) -> Result<Vec<PlotRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}
