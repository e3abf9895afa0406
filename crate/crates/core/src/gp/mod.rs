//! Gaussian-process regression: Matérn ARD kernels, exact inference via
//! Cholesky factorization, marginal-likelihood fitting, and fantasy
//! conditioning on hypothetical observations.

mod fit;
mod kernel;

pub use fit::{
    fit_hyperparams, fit_on_box, nll_and_grad, standardize, HyperBounds, NormalizedFit,
};
pub use kernel::{kernel_eval, GPHyperparams, KernelKind};

pub(crate) use kernel::{kernel_cross, kernel_grad_x, kernel_matrix};

use nalgebra::{DMatrix, DVector};

use crate::domain::Dataset;
use crate::error::{Error, Result};

/// Jitter ladder applied when the training covariance fails to factor:
/// relative to the signal variance, starting at 1e-8 and escalating by 10x
/// at most three times.
pub const JITTER_LADDER: [f64; 5] = [0.0, 1e-8, 1e-7, 1e-6, 1e-5];

/// Joint Gaussian over a finite set of query points (latent function values,
/// observation noise not included).
#[derive(Debug, Clone)]
pub struct PredictiveGaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl PredictiveGaussian {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Marginal variance at query `i`, truncated at zero.
    pub fn var(&self, i: usize) -> f64 {
        self.cov[(i, i)].max(0.0)
    }

    pub fn std(&self, i: usize) -> f64 {
        self.var(i).sqrt()
    }
}

/// A Gaussian-process regressor with fixed hyperparameters, holding the
/// Cholesky factor of the (noise-augmented) training covariance.
#[derive(Debug, Clone)]
pub struct GPModel {
    kind: KernelKind,
    hyper: GPHyperparams,
    train: Dataset,
    /// Lower-triangular factor of `K + (σ_n² + jitter) I`.
    chol: DMatrix<f64>,
    /// `(K + (σ_n² + jitter) I)⁻¹ (y − mean)`.
    alpha: DVector<f64>,
    /// Jitter that had to be added to factor the covariance (0 if none).
    jitter: f64,
}

fn cholesky_with_jitter(
    kind: KernelKind,
    hyper: &GPHyperparams,
    points: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, f64)> {
    let base = kernel_matrix(kind, hyper, points);
    for &rel in &JITTER_LADDER {
        let jitter = rel * hyper.signal_variance;
        let mut k = base.clone();
        for i in 0..k.nrows() {
            k[(i, i)] += hyper.noise_variance + jitter;
        }
        if let Some(chol) = k.cholesky() {
            return Ok((chol.unpack(), jitter));
        }
    }
    Err(Error::numerical(
        "training covariance is not positive definite after maximum jitter",
    ))
}

fn has_duplicate_rows(points: &DMatrix<f64>) -> bool {
    let n = points.nrows();
    for i in 0..n {
        for j in 0..i {
            if points.row(i) == points.row(j) {
                return true;
            }
        }
    }
    false
}

impl GPModel {
    /// Builds a model over the dataset. With zero noise variance the inputs
    /// must be pairwise distinct (an exact duplicate makes the covariance
    /// singular, which is reported as a numerical error rather than being
    /// papered over with jitter).
    pub fn new(kind: KernelKind, hyper: GPHyperparams, train: Dataset) -> Result<GPModel> {
        hyper.validate(train.dim())?;
        if hyper.noise_variance == 0.0 && has_duplicate_rows(train.points()) {
            return Err(Error::numerical(
                "duplicate training rows with zero noise variance make the covariance singular",
            ));
        }
        let (chol, jitter) = cholesky_with_jitter(kind, &hyper, train.points())?;
        let residual = train.values() - DVector::from_element(train.len(), hyper.mean);
        let alpha = solve_with_factor(&chol, &residual);
        Ok(GPModel {
            kind,
            hyper,
            train,
            chol,
            alpha,
            jitter,
        })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn hyper(&self) -> &GPHyperparams {
        &self.hyper
    }

    pub fn train(&self) -> &Dataset {
        &self.train
    }

    pub fn len(&self) -> usize {
        self.train.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.train.dim()
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub(crate) fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub(crate) fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Effective diagonal added to the kernel matrix (noise plus jitter).
    fn effective_noise(&self) -> f64 {
        self.hyper.noise_variance + self.jitter
    }

    /// Joint posterior over the rows of `queries` (an `m × d` matrix).
    pub fn posterior(&self, queries: &DMatrix<f64>) -> Result<PredictiveGaussian> {
        if queries.ncols() != self.dim() {
            return Err(Error::input(format!(
                "queries have dimension {} but the model has {}",
                queries.ncols(),
                self.dim()
            )));
        }
        if queries.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("query point is non-finite"));
        }
        let k_star = kernel_cross(self.kind, &self.hyper, self.train.points(), queries);
        let mean = DVector::from_element(queries.nrows(), self.hyper.mean)
            + k_star.transpose() * &self.alpha;
        let v = self
            .chol
            .solve_lower_triangular(&k_star)
            .ok_or_else(|| Error::numerical("triangular solve failed in posterior"))?;
        let prior = kernel_matrix(self.kind, &self.hyper, queries);
        let mut cov = prior - v.transpose() * v;
        // Symmetrize to keep round-off from breaking downstream factorizations.
        for i in 0..cov.nrows() {
            for j in 0..i {
                let s = 0.5 * (cov[(i, j)] + cov[(j, i)]);
                cov[(i, j)] = s;
                cov[(j, i)] = s;
            }
        }
        Ok(PredictiveGaussian { mean, cov })
    }

    /// Marginal posterior `(mean, variance)` at a single point; cheaper than
    /// building a one-row matrix.
    pub fn posterior_point(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.dim() {
            return Err(Error::input(format!(
                "query has dimension {} but the model has {}",
                x.len(),
                self.dim()
            )));
        }
        let n = self.len();
        let mut k_vec = DVector::zeros(n);
        let row: Vec<f64> = x.to_vec();
        for i in 0..n {
            let ti = self.train.row(i);
            k_vec[i] = kernel_eval(self.kind, &self.hyper, &row, &ti)?;
        }
        let mean = self.hyper.mean + k_vec.dot(&self.alpha);
        let v = self
            .chol
            .solve_lower_triangular(&k_vec)
            .ok_or_else(|| Error::numerical("triangular solve failed in posterior"))?;
        let var = self.hyper.signal_variance - v.dot(&v);
        Ok((mean, var))
    }

    /// Returns a new model conditioned on the extra observation `(x, y)`,
    /// with unchanged hyperparameters. The factorization is extended by one
    /// row instead of being recomputed, so conditioning costs `O(n²)`.
    pub fn condition(&self, x: &[f64], y: f64) -> Result<GPModel> {
        if x.len() != self.dim() {
            return Err(Error::input(format!(
                "conditioning point has dimension {} but the model has {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) || !y.is_finite() {
            return Err(Error::input("conditioning observation is non-finite"));
        }
        if self.effective_noise() == 0.0 {
            let dup = (0..self.len()).any(|i| self.train.row(i) == x);
            if dup {
                return Err(Error::numerical(
                    "conditioning on a duplicate of a noiseless training point",
                ));
            }
        }

        let n = self.len();
        let mut k_vec = DVector::zeros(n);
        for i in 0..n {
            k_vec[i] = kernel_eval(self.kind, &self.hyper, x, &self.train.row(i))?;
        }
        let v = self
            .chol
            .solve_lower_triangular(&k_vec)
            .ok_or_else(|| Error::numerical("triangular solve failed in condition"))?;
        let c = self.hyper.signal_variance + self.effective_noise();
        let d2 = c - v.dot(&v);

        let train = self.train.with_observation(x, y)?;
        if d2 <= 1e-12 * self.hyper.signal_variance {
            // The extension is numerically rank-deficient; rebuild from
            // scratch so the jitter ladder can run on the full matrix.
            return GPModel::new(self.kind, self.hyper.clone(), train);
        }

        let mut chol = DMatrix::zeros(n + 1, n + 1);
        chol.view_mut((0, 0), (n, n)).copy_from(&self.chol);
        for j in 0..n {
            chol[(n, j)] = v[j];
        }
        chol[(n, n)] = d2.sqrt();
        let residual = train.values() - DVector::from_element(n + 1, self.hyper.mean);
        let alpha = solve_with_factor(&chol, &residual);
        Ok(GPModel {
            kind: self.kind,
            hyper: self.hyper.clone(),
            train,
            chol,
            alpha,
            jitter: self.jitter,
        })
    }
}

/// Solves `(L Lᵀ) x = b` given the lower factor.
fn solve_with_factor(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let y = l
        .solve_lower_triangular(b)
        .expect("factor has positive diagonal");
    l.tr_solve_lower_triangular(&y)
        .expect("factor has positive diagonal")
}
