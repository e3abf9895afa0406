//! Matérn covariance functions with per-dimension (ARD) lengthscales.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Kernel families supported by the models in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Matérn ν = 5/2 — twice differentiable sample paths.
    Matern52,
    /// Matérn ν = 3/2 — once differentiable sample paths.
    Matern32,
}

/// Constant-mean GP hyperparameters.
///
/// `lengthscales` are in the units of each input dimension; `signal_variance`
/// and `noise_variance` are in squared response units.
#[derive(Debug, Clone, PartialEq)]
pub struct GPHyperparams {
    pub mean: f64,
    pub signal_variance: f64,
    pub lengthscales: Vec<f64>,
    pub noise_variance: f64,
}

impl GPHyperparams {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.lengthscales.len() != dim {
            return Err(Error::input(format!(
                "{} lengthscales for {dim}-dimensional inputs",
                self.lengthscales.len()
            )));
        }
        if !self.mean.is_finite() {
            return Err(Error::input("mean must be finite"));
        }
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(Error::input("signal variance must be positive and finite"));
        }
        if !self.lengthscales.iter().all(|l| l.is_finite() && *l > 0.0) {
            return Err(Error::input("lengthscales must be positive and finite"));
        }
        if self.noise_variance < 0.0 || !self.noise_variance.is_finite() {
            return Err(Error::input("noise variance must be non-negative and finite"));
        }
        Ok(())
    }
}

const SQRT5: f64 = 2.23606797749979;
const SQRT3: f64 = 1.7320508075688772;

/// Lengthscale-weighted Euclidean distance `r` between two points.
fn scaled_distance(lengthscales: &[f64], x: &[f64], x2: &[f64]) -> f64 {
    let mut r2 = 0.0;
    for i in 0..x.len() {
        let d = (x[i] - x2[i]) / lengthscales[i];
        r2 += d * d;
    }
    r2.sqrt()
}

fn shape(kind: KernelKind, r: f64) -> f64 {
    match kind {
        KernelKind::Matern52 => (1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * (-SQRT5 * r).exp(),
        KernelKind::Matern32 => (1.0 + SQRT3 * r) * (-SQRT3 * r).exp(),
    }
}

/// The radial factor of `dk/d(r²)`, i.e. `k'(r) / (2 r σ²)` times `σ²`.
///
/// Both Matérn forms give a factor that is smooth at `r = 0`:
/// `dk/dx_i = radial(r) · (x_i − x2_i) / ℓ_i²`.
fn radial_derivative(kind: KernelKind, signal_variance: f64, r: f64) -> f64 {
    match kind {
        KernelKind::Matern52 => {
            -(5.0 / 3.0) * signal_variance * (1.0 + SQRT5 * r) * (-SQRT5 * r).exp()
        }
        KernelKind::Matern32 => -3.0 * signal_variance * (-SQRT3 * r).exp(),
    }
}

/// Covariance between two points.
pub fn kernel_eval(kind: KernelKind, hyper: &GPHyperparams, x: &[f64], x2: &[f64]) -> Result<f64> {
    if x.len() != x2.len() || x.len() != hyper.lengthscales.len() {
        return Err(Error::input(format!(
            "kernel arguments of dimension {} and {} with {} lengthscales",
            x.len(),
            x2.len(),
            hyper.lengthscales.len()
        )));
    }
    let r = scaled_distance(&hyper.lengthscales, x, x2);
    Ok(hyper.signal_variance * shape(kind, r))
}

/// Gradient of `k(x, x2)` with respect to the first argument `x`.
pub(crate) fn kernel_grad_x(
    kind: KernelKind,
    hyper: &GPHyperparams,
    x: &[f64],
    x2: &[f64],
) -> Vec<f64> {
    let r = scaled_distance(&hyper.lengthscales, x, x2);
    let c = radial_derivative(kind, hyper.signal_variance, r);
    (0..x.len())
        .map(|i| {
            let l2 = hyper.lengthscales[i] * hyper.lengthscales[i];
            c * (x[i] - x2[i]) / l2
        })
        .collect()
}

/// Derivative of `k(x, x2)` with respect to `log ℓ_i`.
pub(crate) fn kernel_dlog_lengthscale(
    kind: KernelKind,
    hyper: &GPHyperparams,
    x: &[f64],
    x2: &[f64],
    i: usize,
) -> f64 {
    let r = scaled_distance(&hyper.lengthscales, x, x2);
    let c = radial_derivative(kind, hyper.signal_variance, r);
    let l2 = hyper.lengthscales[i] * hyper.lengthscales[i];
    let d = x[i] - x2[i];
    // ∂(r²)/∂log ℓ_i = −2 d_i²/ℓ_i²  and  ∂k/∂(r²) = c / 2.
    -c * d * d / l2
}

/// Dense covariance matrix of the rows of `a` (an `n × d` matrix).
pub(crate) fn kernel_matrix(
    kind: KernelKind,
    hyper: &GPHyperparams,
    a: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = a.nrows();
    let mut k = DMatrix::zeros(n, n);
    let rows: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).iter().copied().collect()).collect();
    for i in 0..n {
        k[(i, i)] = hyper.signal_variance;
        for j in 0..i {
            let r = scaled_distance(&hyper.lengthscales, &rows[i], &rows[j]);
            let v = hyper.signal_variance * shape(kind, r);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Cross-covariance matrix between the rows of `a` (`n × d`) and `b` (`m × d`).
pub(crate) fn kernel_cross(
    kind: KernelKind,
    hyper: &GPHyperparams,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = a.nrows();
    let m = b.nrows();
    let mut k = DMatrix::zeros(n, m);
    let arows: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).iter().copied().collect()).collect();
    let brows: Vec<Vec<f64>> = (0..m).map(|j| b.row(j).iter().copied().collect()).collect();
    for i in 0..n {
        for j in 0..m {
            let r = scaled_distance(&hyper.lengthscales, &arows[i], &brows[j]);
            k[(i, j)] = hyper.signal_variance * shape(kind, r);
        }
    }
    k
}
