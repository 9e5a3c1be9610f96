//! Real orthogonal DFT, the diagonal frequency-domain covariance, and the
//! standard regression designs in both time and frequency domain.
//!
//! Row layout of the transform is `(e₀, c₁, s₁, …, c_N, s_N[, e_{n/2}])` with
//! `N = ⌊(n−1)/2⌋`. The complex exponential vector `e_j` has entries
//! `n^{-1/2} exp(−2πi j t / n)` for `t = 1, …, n` (powers start at one), and
//! `c_j = √2 Re e_j`, `s_j = √2 Im e_j`. All frequency-domain indexing in the
//! crate assumes this interleaved layout.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Above this size the transform is applied with an FFT instead of a dense matrix.
pub const DENSE_LIMIT: usize = 1024;

/// Relative singular value threshold for the rank check.
pub const RANK_TOL: f64 = 1e-8;

/// Number of distinct Fourier frequencies `λ_0 … λ_{⌊n/2⌋}`.
pub fn num_frequencies(n: usize) -> usize {
    n / 2 + 1
}

/// Fourier frequencies `λ_j = 2πj/n` for `j = 0, …, ⌊n/2⌋`.
pub fn fourier_frequencies(n: usize) -> Vec<f64> {
    (0..num_frequencies(n))
        .map(|j| 2.0 * PI * j as f64 / n as f64)
        .collect()
}

/// Frequency index of each of the `n` transformed coordinates.
pub fn coordinate_frequency(n: usize) -> Vec<usize> {
    let mut idx = Vec::with_capacity(n);
    idx.push(0);
    let big_n = (n - 1) / 2;
    for j in 1..=big_n {
        idx.push(j);
        idx.push(j);
    }
    if n % 2 == 0 {
        idx.push(n / 2);
    }
    idx
}

/// How many coordinates share each frequency (1 at `0` and `π`, 2 otherwise).
pub fn frequency_multiplicity(n: usize) -> Vec<usize> {
    let mut m = vec![0usize; num_frequencies(n)];
    for j in coordinate_frequency(n) {
        m[j] += 1;
    }
    m
}

struct FftPair {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// The orthogonal real DFT matrix `F_n`.
///
/// For `n ≤ DENSE_LIMIT` the matrix is materialized; larger sizes apply the
/// transform through an FFT and only materialize on request.
pub struct DftMatrix {
    n: usize,
    rows: Option<DMatrix<f64>>,
    fft: FftPair,
}

impl std::fmt::Debug for DftMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DftMatrix")
            .field("n", &self.n)
            .field("dense", &self.rows.is_some())
            .finish()
    }
}

impl DftMatrix {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("DFT size must be at least 2, got {n}")));
        }
        let mut planner = FftPlanner::new();
        let fft = FftPair {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        };
        let rows = (n <= DENSE_LIMIT).then(|| dense_rows(n));
        Ok(Self { n, rows, fft })
    }

    /// Always materializes the dense matrix, whatever the size.
    pub fn new_dense(n: usize) -> Result<Self> {
        let mut m = Self::new(n)?;
        if m.rows.is_none() {
            m.rows = Some(dense_rows(n));
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Option<&DMatrix<f64>> {
        self.rows.as_ref()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.rows.clone().unwrap_or_else(|| dense_rows(self.n))
    }

    /// `F_n v`.
    pub fn forward(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(
            v.len(),
            self.n,
            "vector length must match the transform size"
        );
        match &self.rows {
            Some(m) => (m * DVector::from_column_slice(v)).as_slice().to_vec(),
            None => self.forward_fft(v),
        }
    }

    /// `F_nᵀ y`, which is also `F_n⁻¹ y`.
    pub fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(
            y.len(),
            self.n,
            "vector length must match the transform size"
        );
        match &self.rows {
            Some(m) => (m.tr_mul(&DVector::from_column_slice(y)))
                .as_slice()
                .to_vec(),
            None => self.adjoint_fft(y),
        }
    }

    /// Column-wise `F_n X`.
    pub fn forward_matrix(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.n);
        match &self.rows {
            Some(m) => m * x,
            None => {
                let mut out = DMatrix::zeros(x.nrows(), x.ncols());
                for (c, col) in x.column_iter().enumerate() {
                    let t = self.forward_fft(col.as_slice());
                    out.column_mut(c).copy_from_slice(&t);
                }
                out
            }
        }
    }

    pub fn adjoint_matrix(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(y.nrows(), self.n);
        match &self.rows {
            Some(m) => m.tr_mul(y),
            None => {
                let mut out = DMatrix::zeros(y.nrows(), y.ncols());
                for (c, col) in y.column_iter().enumerate() {
                    let t = self.adjoint_fft(col.as_slice());
                    out.column_mut(c).copy_from_slice(&t);
                }
                out
            }
        }
    }

    /// FFT path: `Σ_t v_t exp(−2πijt/n)` with `t` starting at one is the
    /// zero-based transform times the phase `exp(−2πij/n)`.
    pub fn forward_fft(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft.fwd.process(&mut buf);
        let inv_sqrt_n = 1.0 / (n as f64).sqrt();
        let s = std::f64::consts::SQRT_2 * inv_sqrt_n;
        let mut out = vec![0.0; n];
        out[0] = buf[0].re * inv_sqrt_n;
        for j in 1..=(n - 1) / 2 {
            let val = buf[j] * phase(j, n, -1.0);
            out[2 * j - 1] = s * val.re;
            out[2 * j] = s * val.im;
        }
        if n % 2 == 0 {
            let val = buf[n / 2] * phase(n / 2, n, -1.0);
            out[n - 1] = val.re * inv_sqrt_n;
        }
        out
    }

    pub fn adjoint_fft(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let inv_sqrt_n = 1.0 / (n as f64).sqrt();
        let s = std::f64::consts::SQRT_2 * inv_sqrt_n;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[0] = Complex64::new(y[0] * inv_sqrt_n, 0.0);
        for j in 1..=(n - 1) / 2 {
            buf[j] = Complex64::new(s * y[2 * j - 1], s * y[2 * j]);
        }
        if n % 2 == 0 {
            buf[n / 2] = Complex64::new(y[n - 1] * inv_sqrt_n, 0.0);
        }
        self.fft.inv.process(&mut buf);
        (1..=n).map(|t| buf[t % n].re).collect()
    }
}

fn phase(j: usize, n: usize, sign: f64) -> Complex64 {
    let ang = sign * 2.0 * PI * (j % n) as f64 / n as f64;
    Complex64::new(ang.cos(), ang.sin())
}

fn dense_rows(n: usize) -> DMatrix<f64> {
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let s = std::f64::consts::SQRT_2 * inv_sqrt_n;
    let mut m = DMatrix::zeros(n, n);
    for t in 1..=n {
        m[(0, t - 1)] = inv_sqrt_n;
    }
    for j in 1..=(n - 1) / 2 {
        for t in 1..=n {
            // Reduce j·t modulo n before scaling so the angle stays in [0, 2π).
            let ang = 2.0 * PI * ((j * t) % n) as f64 / n as f64;
            m[(2 * j - 1, t - 1)] = s * ang.cos();
            m[(2 * j, t - 1)] = -s * ang.sin();
        }
    }
    if n % 2 == 0 {
        for t in 1..=n {
            m[(n - 1, t - 1)] = if t % 2 == 0 { inv_sqrt_n } else { -inv_sqrt_n };
        }
    }
    m
}

pub fn build_dft_matrix(n: usize) -> Result<DftMatrix> {
    DftMatrix::new(n)
}

/// Diagonal of `D_n(f)`: `2π f(λ_j)` laid out to match the rows of `F_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreqCov {
    pub n: usize,
    pub diag: Vec<f64>,
}

impl FreqCov {
    /// Builds the diagonal from spectral values at `λ_0 … λ_{⌊n/2⌋}`.
    pub fn from_frequency_values(n: usize, values: &[f64]) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("sample size must be at least 2, got {n}")));
        }
        if values.len() != num_frequencies(n) {
            return Err(invalid(format!(
                "expected {} spectral values, got {}",
                num_frequencies(n),
                values.len()
            )));
        }
        let lambdas = fourier_frequencies(n);
        for (j, &v) in values.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositiveSpectrum {
                    omega: lambdas[j],
                    value: v,
                });
            }
        }
        let diag = coordinate_frequency(n)
            .into_iter()
            .map(|j| 2.0 * PI * values[j])
            .collect();
        Ok(Self { n, diag })
    }

    pub fn log_det(&self) -> f64 {
        self.diag.iter().map(|d| d.ln()).sum()
    }

    pub fn inverse_diag(&self) -> Vec<f64> {
        self.diag.iter().map(|d| 1.0 / d).collect()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.diag))
    }
}

pub fn build_freq_cov<F: Fn(f64) -> f64>(f: F, n: usize) -> Result<FreqCov> {
    if n < 2 {
        return Err(invalid(format!("sample size must be at least 2, got {n}")));
    }
    let values: Vec<f64> = fourier_frequencies(n).into_iter().map(&f).collect();
    FreqCov::from_frequency_values(n, &values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DesignKind {
    Mean,
    LinearTrend {
        intercept: bool,
    },
    TrendSeasonal {
        period: usize,
    },
    /// `t/n` and one indicator per season, without an intercept.
    TrendDummies {
        period: usize,
    },
    Custom,
}

/// A regression design in time and frequency domain.
#[derive(Clone, Debug)]
pub struct DesignSpec {
    pub kind: DesignKind,
    pub n: usize,
    pub x: DMatrix<f64>,
    pub xtilde: DMatrix<f64>,
}

impl DesignSpec {
    pub fn r(&self) -> usize {
        self.x.ncols()
    }
}

/// Builds the time-domain matrix for a built-in design kind.
pub fn design_matrix(kind: &DesignKind, n: usize) -> Result<DMatrix<f64>> {
    let nf = n as f64;
    match kind {
        DesignKind::Mean => Ok(DMatrix::from_element(n, 1, 1.0)),
        DesignKind::LinearTrend { intercept } => {
            let cols = if *intercept { 2 } else { 1 };
            Ok(DMatrix::from_fn(n, cols, |i, c| {
                let trend = (i + 1) as f64 / nf;
                if *intercept && c == 0 {
                    1.0
                } else {
                    trend
                }
            }))
        }
        DesignKind::TrendSeasonal { period } => {
            let p = *period;
            if p == 0 {
                return Err(invalid("seasonal period must be at least 1"));
            }
            if p + 1 > n {
                return Err(invalid(format!("period {p} too large for n = {n}")));
            }
            // Intercept, t/n, then indicators of t ≡ l (mod p) for l = 1..p−1.
            Ok(DMatrix::from_fn(n, p + 1, |i, c| {
                let t = i + 1;
                match c {
                    0 => 1.0,
                    1 => t as f64 / nf,
                    c => {
                        if t % p == c - 1 {
                            1.0
                        } else {
                            0.0
                        }
                    }
                }
            }))
        }
        DesignKind::TrendDummies { period } => {
            let p = *period;
            if p == 0 || p + 1 > n {
                return Err(invalid(format!("period {p} invalid for n = {n}")));
            }
            // Column 1 + m marks t ≡ m + 1 (mod p).
            Ok(DMatrix::from_fn(n, p + 1, |i, c| match c {
                0 => (i + 1) as f64 / nf,
                c => {
                    if i % p == c - 1 {
                        1.0
                    } else {
                        0.0
                    }
                }
            }))
        }
        DesignKind::Custom => Err(invalid("custom designs need a caller-supplied matrix")),
    }
}

/// Builds a design of the given kind. `custom` is required for
/// [`DesignKind::Custom`] and ignored otherwise.
pub fn make_design(kind: DesignKind, n: usize, custom: Option<DMatrix<f64>>) -> Result<DesignSpec> {
    if n < 2 {
        return Err(invalid(format!("sample size must be at least 2, got {n}")));
    }
    let x = match kind {
        DesignKind::Custom => {
            let x = custom.ok_or_else(|| invalid("custom design requires a matrix"))?;
            if x.nrows() != n {
                return Err(invalid(format!(
                    "custom design has {} rows, expected {n}",
                    x.nrows()
                )));
            }
            x
        }
        ref k => design_matrix(k, n)?,
    };
    if x.ncols() == 0 || x.ncols() > n {
        return Err(invalid(format!(
            "design must have between 1 and n columns, got {}",
            x.ncols()
        )));
    }
    check_rank(&x)?;
    let dft = DftMatrix::new(n)?;
    let xtilde = dft.forward_matrix(&x);
    Ok(DesignSpec { kind, n, x, xtilde })
}

fn check_rank(x: &DMatrix<f64>) -> Result<()> {
    let sv = x.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smax > 0.0) {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    let ratio = smin / smax;
    if ratio <= RANK_TOL {
        return Err(Error::RankDeficient { ratio });
    }
    Ok(())
}

/// `(λ_min(XᵀX)/n, λ_max(XᵀX)/n)`.
pub fn gram_spectrum(design: &DesignSpec) -> (f64, f64) {
    let g = design.x.tr_mul(&design.x) / design.n as f64;
    let ev = crate::linalg::sym_eigenvalues(&g);
    (ev[0], ev[ev.len() - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ortho_error(n: usize) -> f64 {
        let f = DftMatrix::new_dense(n).unwrap().to_dense();
        let p = &f * f.transpose() - DMatrix::<f64>::identity(n, n);
        crate::linalg::max_abs(&p)
    }

    #[test]
    fn rejects_tiny_sizes() {
        assert!(DftMatrix::new(1).is_err());
        assert!(DftMatrix::new(0).is_err());
    }

    #[test]
    fn n2_rows_by_hand() {
        let f = DftMatrix::new(2).unwrap().to_dense();
        let h = 1.0 / 2.0_f64.sqrt();
        assert_relative_eq!(
            f,
            DMatrix::from_row_slice(2, 2, &[h, h, -h, h]),
            epsilon = 1e-15
        );
    }

    #[test]
    fn constant_vector_maps_to_first_coordinate() {
        let f = DftMatrix::new(4).unwrap();
        let c = 1.7;
        let out = f.forward(&[c; 4]);
        assert_relative_eq!(out[0], 2.0 * c, epsilon = 1e-14);
        for v in &out[1..] {
            assert!(v.abs() < 1e-14);
        }
    }

    #[test]
    fn orthogonal_for_small_sizes() {
        for n in 3..=64 {
            assert!(ortho_error(n) < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn first_row_is_constant() {
        let f = DftMatrix::new(9).unwrap().to_dense();
        for t in 0..9 {
            assert_relative_eq!(f[(0, t)], 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn fft_path_matches_dense() {
        for n in [2, 3, 8, 15, 64, 100] {
            let dft = DftMatrix::new(n).unwrap();
            let v: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 11) as f64 - 4.5).collect();
            let dense = dft.forward(&v);
            let fast = dft.forward_fft(&v);
            for (a, b) in dense.iter().zip(&fast) {
                assert!((a - b).abs() < 1e-11, "n = {n}");
            }
            let back_dense = dft.adjoint(&dense);
            let back_fast = dft.adjoint_fft(&dense);
            for ((a, b), c) in back_dense.iter().zip(&back_fast).zip(&v) {
                assert!((a - b).abs() < 1e-11);
                assert!((a - c).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn large_sizes_use_fft() {
        let dft = DftMatrix::new(DENSE_LIMIT + 2).unwrap();
        assert!(dft.rows().is_none());
        let v: Vec<f64> = (0..dft.n()).map(|i| (i as f64 * 0.37).sin()).collect();
        let back = dft.adjoint(&dft.forward(&v));
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn freq_cov_constant() {
        let c = 0.3;
        let d = build_freq_cov(|_| c, 7).unwrap();
        for v in d.diag {
            assert_relative_eq!(v, 2.0 * PI * c, epsilon = 1e-15);
        }
    }

    #[test]
    fn freq_cov_layout_odd_and_even() {
        let f = |w: f64| 1.0 + w;
        let l = |j: usize, n: usize| 2.0 * PI * j as f64 / n as f64;
        let d5 = build_freq_cov(f, 5).unwrap().diag;
        let e5 = [f(0.0), f(l(1, 5)), f(l(1, 5)), f(l(2, 5)), f(l(2, 5))];
        for (a, b) in d5.iter().zip(e5) {
            assert_relative_eq!(*a, 2.0 * PI * b, epsilon = 1e-14);
        }
        let d4 = build_freq_cov(f, 4).unwrap().diag;
        let e4 = [f(0.0), f(l(1, 4)), f(l(1, 4)), f(PI)];
        for (a, b) in d4.iter().zip(e4) {
            assert_relative_eq!(*a, 2.0 * PI * b, epsilon = 1e-14);
        }
    }

    #[test]
    fn freq_cov_rejects_nonpositive() {
        let err = build_freq_cov(|w| w, 6).unwrap_err();
        assert!(matches!(err, Error::NonPositiveSpectrum { .. }));
    }

    #[test]
    fn mean_design_frequency_image() {
        let d = make_design(DesignKind::Mean, 4, None).unwrap();
        assert_relative_eq!(d.xtilde[(0, 0)], 2.0, epsilon = 1e-12);
        for i in 1..4 {
            assert!(d.xtilde[(i, 0)].abs() < 1e-10);
        }
    }

    #[test]
    fn trend_without_intercept_has_cotangent_image() {
        // Odd n: X̃ᵀ = (2n)^{-1/2} ((n+1)/√2, 1, cot(λ₁/2), 1, cot(λ₂/2), …).
        let n = 5;
        let d = make_design(DesignKind::LinearTrend { intercept: false }, n, None).unwrap();
        let nf = n as f64;
        let scale = 1.0 / (2.0 * nf).sqrt();
        assert_relative_eq!(
            d.xtilde[(0, 0)],
            scale * (nf + 1.0) / 2.0_f64.sqrt(),
            epsilon = 1e-12
        );
        for j in 1..=2 {
            let lam = 2.0 * PI * j as f64 / nf;
            assert_relative_eq!(d.xtilde[(2 * j - 1, 0)], scale, epsilon = 1e-12);
            assert_relative_eq!(
                d.xtilde[(2 * j, 0)],
                scale / (lam / 2.0).tan(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn even_trend_has_trailing_term() {
        let n = 6;
        let d = make_design(DesignKind::LinearTrend { intercept: false }, n, None).unwrap();
        assert_relative_eq!(
            d.xtilde[(n - 1, 0)],
            1.0 / (4.0 * n as f64).sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn seasonal_period_one_is_linear_trend() {
        let a = make_design(DesignKind::TrendSeasonal { period: 1 }, 12, None).unwrap();
        let b = make_design(DesignKind::LinearTrend { intercept: true }, 12, None).unwrap();
        assert_eq!(a.x, b.x);
    }

    #[test]
    fn seasonal_indicators_follow_positions() {
        let d = make_design(DesignKind::TrendSeasonal { period: 4 }, 12, None).unwrap();
        assert_eq!(d.r(), 5);
        // Column 2 marks t = 1, 5, 9; column 4 marks t = 3, 7, 11.
        let col2: Vec<usize> = (0..12)
            .filter(|&i| d.x[(i, 2)] == 1.0)
            .map(|i| i + 1)
            .collect();
        let col4: Vec<usize> = (0..12)
            .filter(|&i| d.x[(i, 4)] == 1.0)
            .map(|i| i + 1)
            .collect();
        assert_eq!(col2, vec![1, 5, 9]);
        assert_eq!(col4, vec![3, 7, 11]);
    }

    #[test]
    fn rank_deficient_custom_design_rejected() {
        let x = DMatrix::from_fn(6, 2, |_, _| 1.0);
        assert!(matches!(
            make_design(DesignKind::Custom, 6, Some(x)),
            Err(Error::RankDeficient { .. })
        ));
        assert!(make_design(DesignKind::Custom, 6, None).is_err());
    }

    #[test]
    fn gram_spectrum_mean_is_one() {
        for n in [3, 17, 100] {
            let (lo, hi) = gram_spectrum(&make_design(DesignKind::Mean, n, None).unwrap());
            assert_relative_eq!(lo, 1.0, epsilon = 1e-12);
            assert_relative_eq!(hi, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gram_spectrum_linear_trend_limit() {
        // Eigenvalues of [[1, 1/2], [1/2, 1/3]]: (4 ∓ √13)/6.
        let lo_lim = (4.0 - 13.0_f64.sqrt()) / 6.0;
        let hi_lim = (4.0 + 13.0_f64.sqrt()) / 6.0;
        assert_relative_eq!(lo_lim, 0.0657, epsilon = 1e-4);
        let d = make_design(DesignKind::LinearTrend { intercept: true }, 4096, None).unwrap();
        let (lo, hi) = gram_spectrum(&d);
        assert!((lo - lo_lim).abs() < 1e-2);
        assert!((hi - hi_lim).abs() < 1e-2);
    }

    #[test]
    fn gram_spectrum_seasonal_stable() {
        let vals: Vec<(f64, f64)> = [1024, 2048, 4096]
            .iter()
            .map(|&n| {
                gram_spectrum(
                    &make_design(DesignKind::TrendSeasonal { period: 4 }, n, None).unwrap(),
                )
            })
            .collect();
        for w in vals.windows(2) {
            assert!(w[0].0 > 0.0 && w[0].1.is_finite());
            assert!((w[1].0 / w[0].0 - 1.0).abs() < 0.05);
            assert!((w[1].1 / w[0].1 - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn gram_spectrum_bounded_as_n_doubles() {
        let kinds = [
            DesignKind::Mean,
            DesignKind::LinearTrend { intercept: true },
            DesignKind::LinearTrend { intercept: false },
            DesignKind::TrendSeasonal { period: 4 },
            DesignKind::TrendSeasonal { period: 12 },
        ];
        for kind in kinds {
            for n in [128usize, 256, 512, 1024] {
                let (lo, hi) = gram_spectrum(&make_design(kind.clone(), n, None).unwrap());
                assert!(lo > 1e-3 && hi < 10.0, "{kind:?} n={n}: ({lo}, {hi})");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn parseval(v in proptest::collection::vec(-10.0f64..10.0, 2..200)) {
            let dft = DftMatrix::new(v.len()).unwrap();
            let t = dft.forward(&v);
            let a: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let b: f64 = t.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((a - b).abs() < 1e-10 * (1.0 + a));
        }

        #[test]
        fn freq_cov_is_linear(a in 0.0f64..5.0, b in 0.0f64..5.0, n in 2usize..40) {
            let f = |w: f64| 1.0 + w.cos().powi(2);
            let g = |w: f64| 2.0 + w;
            let lhs = build_freq_cov(|w| a * f(w) + b * g(w), n);
            let df = build_freq_cov(f, n).unwrap();
            let dg = build_freq_cov(g, n).unwrap();
            if a + b > 0.0 {
                let lhs = lhs.unwrap();
                for i in 0..n {
                    prop_assert!((lhs.diag[i] - (a * df.diag[i] + b * dg.diag[i])).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn mean_design_l1_mass(n in 2usize..300) {
            let d = make_design(DesignKind::Mean, n, None).unwrap();
            let l1: f64 = d.xtilde.iter().map(|v| v.abs()).sum();
            prop_assert!((l1 - (n as f64).sqrt()).abs() < 1e-8);
            prop_assert!((d.xtilde[(0, 0)] - (n as f64).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn trend_dummies_partition_the_seasons() {
        let d = make_design(DesignKind::TrendDummies { period: 12 }, 144, None).unwrap();
        assert_eq!(d.r(), 13);
        for i in 0..144 {
            let row_sum: f64 = (1..13).map(|c| d.x[(i, c)]).sum();
            assert_eq!(row_sum, 1.0);
            assert_eq!(d.x[(i, 1 + i % 12)], 1.0);
        }
        assert_relative_eq!(d.x[(143, 0)], 1.0);
        assert!(make_design(DesignKind::TrendDummies { period: 0 }, 10, None).is_err());
    }
}
