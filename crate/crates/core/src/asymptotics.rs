//! Exact finite-sample covariances behind the Bernstein–von Mises statement:
//! the Whittle reference covariance `V_W`, the sandwich covariance `V_0` under
//! the true Gaussian law, their discrepancy, the AR(1) circulant identity, the
//! corner counterexample, and an empirical diagnostic for posterior draws.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fourier::{build_freq_cov, DesignKind, DesignSpec, DftMatrix};
use crate::linalg::{cholesky_strict, sym_inv_sqrt, symmetrize, SpdFactor};
use crate::spectral::{Ar1Spec, SpectralDensity};
use crate::whittle::{conditional_theta_posterior_cov, ThetaPrior, WhittleModel};

/// Minimum number of draws accepted by [`bvm_diagnostic`].
pub const MIN_DIAGNOSTIC_DRAWS: usize = 500;

mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().cloned().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let nr = rows.len();
        let nc = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != nc) {
            return Err(serde::de::Error::custom("ragged matrix"));
        }
        Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
    }
}

/// True covariance of the error vector, dense or by its autocovariances.
#[derive(Clone, Copy, Debug)]
pub enum TrueCovariance<'a> {
    Dense(&'a DMatrix<f64>),
    /// `γ(0), …, γ(n−1)` of a stationary process.
    Autocovariance(&'a [f64]),
}

impl TrueCovariance<'_> {
    fn n(&self) -> usize {
        match self {
            TrueCovariance::Dense(m) => m.nrows(),
            TrueCovariance::Autocovariance(g) => g.len(),
        }
    }

    fn mul(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            TrueCovariance::Dense(m) => *m * v,
            TrueCovariance::Autocovariance(g) => toeplitz_mul(g, v),
        }
    }
}

/// `T v` for the symmetric Toeplitz matrix with first row `g`.
pub fn toeplitz_mul(g: &[f64], v: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.len();
    assert_eq!(v.nrows(), n);
    let mut out = DMatrix::zeros(n, v.ncols());
    for c in 0..v.ncols() {
        let col = v.column(c);
        for i in 0..n {
            let mut acc = 0.0;
            for (j, x) in col.iter().enumerate() {
                acc += g[i.abs_diff(j)] * x;
            }
            out[(i, c)] = acc;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub n: usize,
    #[serde(with = "matrix_rows")]
    pub v_w: DMatrix<f64>,
    #[serde(with = "matrix_rows")]
    pub v_0: DMatrix<f64>,
    pub discrepancy: f64,
    pub noether_ratio: f64,
}

/// `V_W = (X̃ᵀD₀⁻¹X̃)⁻¹` and `V_0 = V_W X̃ᵀD₀⁻¹ F Σ Fᵀ D₀⁻¹X̃ V_W`.
pub fn covariance_report<F: SpectralDensity + ?Sized>(
    design: &DesignSpec,
    f0: &F,
    sigma: TrueCovariance<'_>,
) -> Result<CovarianceReport> {
    let n = design.n;
    if sigma.n() != n {
        return Err(invalid(format!(
            "true covariance has size {}, design has n = {n}",
            sigma.n()
        )));
    }
    if let TrueCovariance::Dense(m) = sigma {
        cholesky_strict(m)?;
    }
    let d = build_freq_cov(|w| f0.eval(w), n)?;
    let dinv = d.inverse_diag();
    let scaled = DMatrix::from_fn(n, design.r(), |i, c| dinv[i] * design.xtilde[(i, c)]);
    let precision = symmetrize(&design.xtilde.tr_mul(&scaled));
    let v_w = SpdFactor::new(&precision)?.inverse();
    let dft = DftMatrix::new(n)?;
    let w = dft.adjoint_matrix(&scaled);
    let meat = symmetrize(&w.tr_mul(&sigma.mul(&w)));
    let v_0 = symmetrize(&(&v_w * meat * &v_w));
    let discrepancy = standardized_discrepancy(&v_w, &v_0);
    Ok(CovarianceReport {
        n,
        v_w,
        v_0,
        discrepancy,
        noether_ratio: noether_ratio(&design.x)?,
    })
}

/// `‖A^{-1/2} B A^{-1/2} − I‖_F`.
fn standardized_discrepancy(reference: &DMatrix<f64>, other: &DMatrix<f64>) -> f64 {
    let r = sym_inv_sqrt(reference);
    let m = &r * other * &r;
    (m - DMatrix::identity(reference.nrows(), reference.ncols())).norm()
}

/// `max_t ‖x_t‖² / Σ_t ‖x_t‖²` over the rows of the design.
pub fn noether_ratio(x: &DMatrix<f64>) -> Result<f64> {
    let norms: Vec<f64> = x.row_iter().map(|r| r.norm_squared()).collect();
    let total: f64 = norms.iter().sum();
    if !(total > 0.0) {
        return Err(invalid("design is identically zero"));
    }
    Ok(norms.iter().cloned().fold(0.0, f64::max) / total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CirculantCheck {
    /// `F_nᵀ D₀⁻¹ F_n`.
    pub lhs: DMatrix<f64>,
    /// `A_n`, nonzero only in the four corners.
    pub corner: DMatrix<f64>,
    pub max_error: f64,
}

/// AR(1) spectrum with unit innovation variance: checks
/// `F_nᵀ D₀⁻¹ F_n = Σ_n⁻¹ + A_n`.
pub fn ar1_circulant_identity(alpha: f64, n: usize) -> Result<CirculantCheck> {
    if n < 4 {
        return Err(invalid(format!("need n ≥ 4, got {n}")));
    }
    let spec = Ar1Spec::new(alpha, 1.0)?;
    let d = build_freq_cov(|w| spec.spectral(w), n)?;
    let dinv = d.inverse_diag();
    let f = DftMatrix::new(n)?.to_dense();
    let scaled = DMatrix::from_fn(n, n, |i, j| dinv[i] * f[(i, j)]);
    let lhs = symmetrize(&f.tr_mul(&scaled));
    let sigma_inv = ar1_precision(alpha, n);
    let corner = corner_matrix(alpha, n);
    let max_error = (&lhs - sigma_inv - &corner).amax();
    Ok(CirculantCheck {
        lhs,
        corner,
        max_error,
    })
}

/// Tridiagonal inverse of the unit-innovation AR(1) covariance.
pub fn ar1_precision(alpha: f64, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            if i == 0 || i == n - 1 {
                1.0
            } else {
                1.0 + alpha * alpha
            }
        } else if i.abs_diff(j) == 1 {
            -alpha
        } else {
            0.0
        }
    })
}

/// `A_n = α²E₁₁ − αE₁ₙ − αEₙ₁ + α²Eₙₙ`.
pub fn corner_matrix(alpha: f64, n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    a[(0, 0)] = alpha * alpha;
    a[(n - 1, n - 1)] = alpha * alpha;
    a[(0, n - 1)] = -alpha;
    a[(n - 1, 0)] = -alpha;
    a
}

/// One-column designs for the corner counterexample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignRule {
    /// `(1, …, 1, 1 + √n)`.
    SpikedLast,
    /// `(1, …, 1)`.
    Ones,
}

impl DesignRule {
    pub fn column(&self, n: usize) -> Vec<f64> {
        let mut x = vec![1.0; n];
        if let DesignRule::SpikedLast = self {
            x[n - 1] = 1.0 + (n as f64).sqrt();
        }
        x
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub n: usize,
    /// From the corner formula.
    pub value: f64,
    /// From `Xᵀ(C Σ C − C)X / n` with `C = F_nᵀ D₀⁻¹ F_n`.
    pub direct: f64,
}

impl ScanPoint {
    pub fn path_gap(&self) -> f64 {
        (self.value - self.direct).abs()
    }
}

/// `2α²/(1 − α²)`.
pub fn counterexample_limit(alpha: f64) -> f64 {
    2.0 * alpha * alpha / (1.0 - alpha * alpha)
}

/// `Xᵀ(A + AΣA)X / n` for a one-column design, in closed form.
pub fn counterexample_closed_form(alpha: f64, x: &[f64]) -> f64 {
    let n = x.len();
    let a2 = alpha * alpha;
    let an = alpha.powi(n as i32);
    let (x1, xn) = (x[0], x[n - 1]);
    let quad = 2.0 * (a2 - an * a2) / (1.0 - a2) * (x1 * x1 + xn * xn)
        - (alpha + a2 * alpha) * (1.0 - an) / (1.0 - a2) * 2.0 * x1 * xn;
    quad / n as f64
}

/// Same quantity through the transforms and the Toeplitz covariance.
pub fn counterexample_direct(alpha: f64, x: &[f64]) -> Result<f64> {
    let n = x.len();
    let spec = Ar1Spec::new(alpha, 1.0)?;
    let dinv = build_freq_cov(|w| spec.spectral(w), n)?.inverse_diag();
    let dft = DftMatrix::new(n)?;
    let mut y = dft.forward(x);
    y.iter_mut().zip(&dinv).for_each(|(v, d)| *v *= d);
    let cx = dft.adjoint(&y);
    let gammas: Vec<f64> = (0..n).map(|h| spec.autocovariance(h)).collect();
    let cx_m = DMatrix::from_column_slice(n, 1, &cx);
    let scx = toeplitz_mul(&gammas, &cx_m);
    let sandwich: f64 = cx.iter().zip(scx.iter()).map(|(a, b)| a * b).sum();
    let inner: f64 = x.iter().zip(&cx).map(|(a, b)| a * b).sum();
    Ok((sandwich - inner) / n as f64)
}

pub fn counterexample_scan(
    alpha: f64,
    rule: DesignRule,
    n_list: &[usize],
) -> Result<Vec<ScanPoint>> {
    n_list
        .iter()
        .map(|&n| {
            if n < 4 {
                return Err(invalid(format!("need n ≥ 4, got {n}")));
            }
            let x = rule.column(n);
            Ok(ScanPoint {
                n,
                value: counterexample_closed_form(alpha, &x),
                direct: counterexample_direct(alpha, &x)?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BvmDiagnostic {
    /// `‖V_W^{-1/2}(mean of draws − reference mean)‖`.
    pub mean_shift: f64,
    /// `min(1, ‖V_W^{-1/2} V_emp V_W^{-1/2} − I‖_F)`.
    pub cov_discrepancy: f64,
    pub n: usize,
}

/// Compares posterior `θ` draws with the Gaussian reference centred at the
/// Whittle estimator under the true spectrum `f0`.
pub fn bvm_diagnostic<F: SpectralDensity + ?Sized>(
    draws: &[Vec<f64>],
    model: &WhittleModel,
    f0: &F,
) -> Result<BvmDiagnostic> {
    if draws.len() < MIN_DIAGNOSTIC_DRAWS {
        return Err(invalid(format!(
            "need at least {MIN_DIAGNOSTIC_DRAWS} draws, got {}",
            draws.len()
        )));
    }
    let r = model.r();
    if draws.iter().any(|d| d.len() != r) {
        return Err(invalid("draw dimension does not match the design"));
    }
    let d = build_freq_cov(|w| f0.eval(w), model.n)?;
    let reference = conditional_theta_posterior_cov(model, &d, &ThetaPrior::Flat)?;
    let m = draws.len() as f64;
    let mean = DVector::from_fn(r, |c, _| draws.iter().map(|d| d[c]).sum::<f64>() / m);
    let mut emp = DMatrix::zeros(r, r);
    for d in draws {
        let v = DVector::from_fn(r, |c, _| d[c] - mean[c]);
        emp += &v * v.transpose();
    }
    emp /= m - 1.0;
    if cholesky_strict(&emp).is_err() {
        return Err(Error::NotPositiveDefinite(
            "empirical covariance of the draws is degenerate".into(),
        ));
    }
    let root = sym_inv_sqrt(&reference.cov);
    let mean_shift = (&root * (mean - &reference.mean)).norm();
    let cov_discrepancy = standardized_discrepancy(&reference.cov, &emp).min(1.0);
    Ok(BvmDiagnostic {
        mean_shift,
        cov_discrepancy,
        n: model.n,
    })
}

/// Standard designs used by the second-order-correctness reports.
pub fn report_design(kind: &str, n: usize) -> Result<DesignSpec> {
    use crate::fourier::make_design;
    match kind {
        "mean" => make_design(DesignKind::Mean, n, None),
        "trend" => make_design(DesignKind::LinearTrend { intercept: true }, n, None),
        "spiked" => make_design(
            DesignKind::Custom,
            n,
            Some(DMatrix::from_column_slice(
                n,
                1,
                &DesignRule::SpikedLast.column(n),
            )),
        ),
        other => Err(invalid(format!(
            "unknown report design `{other}` (expected mean, trend or spiked)"
        ))),
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn write_scan_csv(points: &[ScanPoint], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, Serialize)]
struct ReportRow {
    n: usize,
    discrepancy: f64,
    noether_ratio: f64,
    n_v_w: f64,
    n_v_0: f64,
}

/// Flat CSV of reports; the covariance columns are `n·V[0,0]`.
pub fn write_reports_csv(reports: &[CovarianceReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in reports {
        w.serialize(ReportRow {
            n: r.n,
            discrepancy: r.discrepancy,
            noether_ratio: r.noether_ratio,
            n_v_w: r.n as f64 * r.v_w[(0, 0)],
            n_v_0: r.n as f64 * r.v_0[(0, 0)],
        })?;
    }
    w.flush()?;
    Ok(())
}
