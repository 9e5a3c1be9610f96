//! Small dense linear-algebra helpers on top of `nalgebra`.
//!
//! Every r×r solve goes through [`SpdFactor`]: a Cholesky factorization when the
//! matrix is numerically positive definite, otherwise a symmetric
//! eigendecomposition with eigenvalues floored at `1e-12 * trace`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

const EIGEN_FLOOR_REL: f64 = 1e-12;
const SQRT_CLIP_REL: f64 = 1e-14;

/// Factorization of a symmetric positive (semi)definite matrix.
#[derive(Clone, Debug)]
pub enum SpdFactor {
    Cholesky(Cholesky<f64, Dyn>),
    Eigen {
        vectors: DMatrix<f64>,
        values: DVector<f64>,
    },
}

impl SpdFactor {
    /// Factorizes `a`, falling back to a floored eigendecomposition when the
    /// Cholesky factorization fails. Errors only when `a` has no positive
    /// spectrum at all.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let sym = symmetrize(a);
        if let Some(chol) = Cholesky::new(sym.clone()) {
            return Ok(SpdFactor::Cholesky(chol));
        }
        let trace = sym.trace();
        if !(trace > 0.0) || !trace.is_finite() {
            return Err(Error::SingularNormalEquations);
        }
        let eig = SymmetricEigen::new(sym);
        let floor = EIGEN_FLOOR_REL * trace;
        let values = eig.eigenvalues.map(|v| v.max(floor));
        Ok(SpdFactor::Eigen {
            vectors: eig.eigenvectors,
            values,
        })
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            SpdFactor::Cholesky(c) => c.solve(b),
            SpdFactor::Eigen { vectors, values } => {
                let mut tmp = vectors.transpose() * b;
                for (i, mut row) in tmp.row_iter_mut().enumerate() {
                    row /= values[i];
                }
                vectors * tmp
            }
        }
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        match self {
            SpdFactor::Cholesky(c) => c.solve(b),
            SpdFactor::Eigen { vectors, values } => {
                let tmp = (vectors.transpose() * b).component_div(values);
                vectors * tmp
            }
        }
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        match self {
            SpdFactor::Cholesky(c) => symmetrize(&c.inverse()),
            SpdFactor::Eigen { vectors, values } => {
                let d = DMatrix::from_diagonal(&values.map(|v| 1.0 / v));
                symmetrize(&(vectors * d * vectors.transpose()))
            }
        }
    }

    /// A matrix `L` with `L Lᵀ` equal to the inverse of the factored matrix.
    /// Used to draw from `N(m, A⁻¹)` as `m + L z`.
    pub fn inverse_root(&self) -> DMatrix<f64> {
        match self {
            SpdFactor::Cholesky(c) => {
                // A = L Lᵀ  =>  A⁻¹ = L⁻ᵀ L⁻¹, so L⁻ᵀ is a valid root.
                let l = c.l();
                let n = l.nrows();
                let linv = l
                    .solve_lower_triangular(&DMatrix::identity(n, n))
                    .expect("Cholesky factor has a nonzero diagonal");
                linv.transpose()
            }
            SpdFactor::Eigen { vectors, values } => {
                let d = DMatrix::from_diagonal(&values.map(|v| 1.0 / v.sqrt()));
                vectors * d
            }
        }
    }

    pub fn log_det(&self) -> f64 {
        match self {
            SpdFactor::Cholesky(c) => {
                2.0 * c.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
            }
            SpdFactor::Eigen { values, .. } => values.iter().map(|v| v.ln()).sum(),
        }
    }
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Strict Cholesky factorization; fails on anything not positive definite.
pub fn cholesky_strict(a: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotPositiveDefinite(format!(
            "matrix is {}x{}, not square",
            a.nrows(),
            a.ncols()
        )));
    }
    Cholesky::new(symmetrize(a))
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))
}

/// Symmetric power `a^p` through an eigendecomposition, clipping eigenvalues at
/// `1e-14 * λ_max`.
pub fn sym_power(a: &DMatrix<f64>, p: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(a));
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let clip = SQRT_CLIP_REL * lmax;
    let d = eig.eigenvalues.map(|v| v.max(clip).powf(p));
    let scaled = &eig.eigenvectors * DMatrix::from_diagonal(&d);
    symmetrize(&(scaled * eig.eigenvectors.transpose()))
}

pub fn sym_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    sym_power(a, 0.5)
}

pub fn sym_inv_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    sym_power(a, -0.5)
}

pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(symmetrize(a))
        .eigenvalues
        .iter()
        .cloned()
        .collect();
    v.sort_by(|x, y| x.total_cmp(y));
    v
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}
