use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::PosteriorDraw;
use crate::error::{invalid, Result};
use crate::spectral::bernstein_table;

/// Points of the `[0, π]` grid on which spectrum bands are reported.
pub const SPECTRUM_GRID: usize = 128;

const MIN_DRAWS: usize = 10;

/// Type-7 (linear interpolation) sample quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefSummary {
    pub mean: f64,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
    pub length: f64,
}

impl CoefSummary {
    pub fn from_samples(samples: &[f64], level: f64) -> Self {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let tail = (1.0 - level) / 2.0;
        let lower = quantile(&sorted, tail);
        let upper = quantile(&sorted, 1.0 - tail);
        Self {
            mean: samples.iter().sum::<f64>() / samples.len() as f64,
            median: quantile(&sorted, 0.5),
            lower,
            upper,
            length: upper - lower,
        }
    }

    pub fn covers(&self, truth: f64) -> bool {
        self.lower <= truth && truth <= self.upper
    }
}

/// Pointwise posterior median and equal-tailed band of the spectral density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBand {
    pub omegas: Vec<f64>,
    pub median: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub level: f64,
    pub draws: usize,
    pub coefficients: Vec<CoefSummary>,
    pub spectrum: SpectrumBand,
}

fn check(len: usize, level: f64) -> Result<()> {
    if len < MIN_DRAWS {
        return Err(invalid(format!(
            "need at least {MIN_DRAWS} draws, got {len}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!(
            "credible level must lie in (0, 1), got {level}"
        )));
    }
    Ok(())
}

/// Per-coefficient summaries of `draws[i][c]`.
pub fn summarize_coefficients(draws: &[Vec<f64>], level: f64) -> Result<Vec<CoefSummary>> {
    check(draws.len(), level)?;
    let r = draws[0].len();
    if draws.iter().any(|d| d.len() != r) {
        return Err(invalid("draws have inconsistent dimension"));
    }
    Ok((0..r)
        .map(|c| {
            let col: Vec<f64> = draws.iter().map(|d| d[c]).collect();
            CoefSummary::from_samples(&col, level)
        })
        .collect())
}

pub fn summarize(draws: &[PosteriorDraw], level: f64) -> Result<PosteriorSummary> {
    check(draws.len(), level)?;
    let thetas: Vec<Vec<f64>> = draws.iter().map(|d| d.theta.clone()).collect();
    let coefficients = summarize_coefficients(&thetas, level)?;

    let omegas: Vec<f64> = (0..SPECTRUM_GRID)
        .map(|i| PI * i as f64 / (SPECTRUM_GRID - 1) as f64)
        .collect();
    let mut tables: HashMap<usize, Vec<f64>> = HashMap::new();
    let mut columns = vec![Vec::with_capacity(draws.len()); SPECTRUM_GRID];
    for d in draws {
        let k = d.state.k;
        let t = tables
            .entry(k)
            .or_insert_with(|| bernstein_table(k, &omegas));
        let w = d.state.bernstein_weights();
        for (i, col) in columns.iter_mut().enumerate() {
            col.push(
                t[i * k..(i + 1) * k]
                    .iter()
                    .zip(&w)
                    .map(|(b, w)| b * w)
                    .sum(),
            );
        }
    }
    let tail = (1.0 - level) / 2.0;
    let mut band = SpectrumBand {
        omegas,
        median: Vec::with_capacity(SPECTRUM_GRID),
        lower: Vec::with_capacity(SPECTRUM_GRID),
        upper: Vec::with_capacity(SPECTRUM_GRID),
    };
    for mut col in columns {
        col.sort_by(f64::total_cmp);
        band.median.push(quantile(&col, 0.5));
        band.lower.push(quantile(&col, tail));
        band.upper.push(quantile(&col, 1.0 - tail));
    }
    Ok(PosteriorSummary {
        level,
        draws: draws.len(),
        coefficients,
        spectrum: band,
    })
}
