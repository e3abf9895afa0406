//! Acquisition functions for Bayesian optimization: analytic expected
//! improvement, Monte Carlo batch expected improvement with an analytic
//! gradient, and optimizers for both.
//!
//! Conventions: objectives are maximized, the incumbent is the best observed
//! value so far, and batch acquisition values are invariant (bit-for-bit)
//! under reordering of the batch rows — the rows are canonically sorted
//! before any randomized computation.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::gp::{kernel_cross, kernel_grad_x, GPModel, PredictiveGaussian};
use crate::optim::{halton_unit, multistart_maximize, rng_from, ObjectiveHandle, Optimum};

/// Relative jitter ladder for factoring posterior covariance matrices, which
/// are frequently near-singular when batch points approach each other.
const POSTERIOR_JITTER: [f64; 5] = [0.0, 1e-12, 1e-10, 1e-8, 1e-6];

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal parameters are valid")
}

/// Analytic expected improvement of a Gaussian belief `N(mean, var)` over the
/// incumbent, for maximization:
/// `EI = (mean − incumbent)·Φ(z) + σ·φ(z)` with `z = (mean − incumbent)/σ`.
/// A degenerate belief (`var ≤ 0`) yields the deterministic improvement
/// `max(mean − incumbent, 0)`.
pub fn ei_analytic(mean: f64, var: f64, incumbent: f64) -> f64 {
    let diff = mean - incumbent;
    if var <= 0.0 {
        return diff.max(0.0);
    }
    let sd = var.sqrt();
    let z = diff / sd;
    let n = std_normal();
    let ei = diff * n.cdf(z) + sd * n.pdf(z);
    ei.max(0.0)
}

/// Expected improvement of the model's posterior at `x` over `incumbent`.
pub fn ei_at(model: &GPModel, x: &[f64], incumbent: f64) -> Result<f64> {
    let (mean, var) = model.posterior_point(x)?;
    Ok(ei_analytic(mean, var, incumbent))
}

/// Gradient of [`ei_at`] with respect to `x`:
/// `∇EI = Φ(z)·∇μ + φ(z)·∇σ`.
pub fn ei_grad(model: &GPModel, x: &[f64], incumbent: f64) -> Result<Vec<f64>> {
    let (mean, var) = model.posterior_point(x)?;
    let d = x.len();
    if var <= 0.0 {
        return Ok(vec![0.0; d]);
    }
    let sd = var.sqrt();
    let z = (mean - incumbent) / sd;
    let n = std_normal();
    let (cdf, pdf) = (n.cdf(z), n.pdf(z));

    let (grad_mean, grad_var) = posterior_point_gradients(model, x)?;
    let mut grad = vec![0.0; d];
    for i in 0..d {
        let grad_sd = grad_var[i] / (2.0 * sd);
        grad[i] = cdf * grad_mean[i] + pdf * grad_sd;
    }
    Ok(grad)
}

/// Gradients of the posterior mean and variance at a point:
/// `∇μ = Jᵀα` and `∇σ² = −2·JᵀA⁻¹k`, where `J` stacks the kernel gradients
/// against each training point and `k` is the cross-covariance vector.
fn posterior_point_gradients(model: &GPModel, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = model.dim();
    let n = model.len();
    if x.len() != d {
        return Err(Error::input(format!(
            "point has dimension {} but the model has {}",
            x.len(),
            d
        )));
    }
    let hyper = model.hyper();
    let mut k_vec = DVector::zeros(n);
    let mut jac = DMatrix::zeros(d, n);
    for i in 0..n {
        let ti = model.train().row(i);
        k_vec[i] = crate::gp::kernel_eval(model.kind(), hyper, x, &ti)?;
        let g = kernel_grad_x(model.kind(), hyper, x, &ti);
        for a in 0..d {
            jac[(a, i)] = g[a];
        }
    }
    let alpha = model.alpha();
    let grad_mean: Vec<f64> = (0..d).map(|a| jac.row(a).transpose().dot(alpha)).collect();

    let v = model
        .chol()
        .solve_lower_triangular(&k_vec)
        .ok_or_else(|| Error::numerical("triangular solve failed in gradient"))?;
    let w = model
        .chol()
        .tr_solve_lower_triangular(&v)
        .ok_or_else(|| Error::numerical("triangular solve failed in gradient"))?;
    let grad_var: Vec<f64> = (0..d)
        .map(|a| -2.0 * jac.row(a).transpose().dot(&w))
        .collect();
    Ok((grad_mean, grad_var))
}

/// Frozen standard-normal draws shared across acquisition evaluations, one
/// row per sample and one column per batch slot. Column `j` always drives
/// batch slot `j`, and the low-discrepancy constructor nests columns: the
/// first `q` columns for a batch of `q + 1` equal the columns for a batch of
/// `q` at the same seed, so values for nested batches are directly
/// comparable.
#[derive(Debug, Clone)]
pub struct BaseSampleSet {
    samples: DMatrix<f64>,
}

impl BaseSampleSet {
    /// Pseudo-random standard normals.
    pub fn monte_carlo(n_samples: usize, q: usize, seed: u64) -> Result<BaseSampleSet> {
        if n_samples == 0 || q == 0 {
            return Err(Error::input("sample count and batch size must be positive"));
        }
        let mut rng = rng_from(seed);
        let dist = rand_distr::StandardNormal;
        let samples = DMatrix::from_fn(n_samples, q, |_, _| {
            rand::Rng::sample(&mut rng, dist)
        });
        Ok(BaseSampleSet { samples })
    }

    /// Low-discrepancy standard normals: a randomized Halton set mapped
    /// through the normal quantile function. Far lower estimator variance
    /// than [`BaseSampleSet::monte_carlo`] at the same size.
    pub fn quasi_monte_carlo(n_samples: usize, q: usize, seed: u64) -> Result<BaseSampleSet> {
        if n_samples == 0 || q == 0 {
            return Err(Error::input("sample count and batch size must be positive"));
        }
        let u = halton_unit(q, n_samples, seed)?;
        let normal = std_normal();
        let samples = u.map(|p| normal.inverse_cdf(p));
        Ok(BaseSampleSet { samples })
    }

    pub fn n_samples(&self) -> usize {
        self.samples.nrows()
    }

    pub fn q(&self) -> usize {
        self.samples.ncols()
    }

    fn matrix(&self) -> &DMatrix<f64> {
        &self.samples
    }
}

/// Lexicographic order on batch rows used to canonicalize batches. Total on
/// floats via `total_cmp`, so equal batches sort identically bit-for-bit.
fn row_order(batch: &DMatrix<f64>, a: usize, b: usize) -> std::cmp::Ordering {
    for j in 0..batch.ncols() {
        let ord = batch[(a, j)].total_cmp(&batch[(b, j)]);
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

/// Returns the permutation that sorts batch rows lexicographically, and the
/// sorted batch. Acquisition values computed on the sorted batch are exactly
/// invariant to the order the caller listed the rows in.
pub(crate) fn canonical_rows(batch: &DMatrix<f64>) -> (Vec<usize>, DMatrix<f64>) {
    let q = batch.nrows();
    let mut perm: Vec<usize> = (0..q).collect();
    perm.sort_by(|&a, &b| row_order(batch, a, b));
    let sorted = DMatrix::from_fn(q, batch.ncols(), |i, j| batch[(perm[i], j)]);
    (perm, sorted)
}

/// Lower Cholesky factor of a posterior covariance, escalating a relative
/// jitter when points coincide or nearly coincide.
fn posterior_cholesky(cov: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let scale = cov
        .diagonal()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    for &rel in &POSTERIOR_JITTER {
        let jitter = rel * scale;
        let mut c = cov.clone();
        for i in 0..c.nrows() {
            c[(i, i)] += jitter;
        }
        if let Some(chol) = c.cholesky() {
            return Ok((chol.unpack(), jitter));
        }
    }
    Err(Error::numerical(
        "posterior covariance is not positive definite after maximum jitter",
    ))
}

/// Monte Carlo batch expected improvement of a joint Gaussian belief over the
/// incumbent: `(1/N) Σ_i (max_j (μ + L z_i)_j − incumbent)⁺` with `z_i` the
/// rows of `base`. Slot `j` of the belief is driven by base column `j`; the
/// caller fixes the slot order (the model-level [`qei_mc`] canonicalizes it).
pub fn qei_from_gaussian(
    gaussian: &PredictiveGaussian,
    incumbent: f64,
    base: &BaseSampleSet,
) -> Result<f64> {
    let (value, _, _) = qei_core(gaussian, incumbent, base, false)?;
    Ok(value)
}

/// Shared batch-EI core. Returns the estimate and, when `want_grad` is set,
/// the gradients with respect to the mean vector and the covariance matrix.
fn qei_core(
    gaussian: &PredictiveGaussian,
    incumbent: f64,
    base: &BaseSampleSet,
    want_grad: bool,
) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
    let q = gaussian.len();
    if q == 0 {
        return Err(Error::input("batch must be non-empty"));
    }
    if base.q() != q {
        return Err(Error::input(format!(
            "base samples have {} columns but the batch has {} points",
            base.q(),
            q
        )));
    }
    let (l, _) = posterior_cholesky(&gaussian.cov)?;
    let n = base.n_samples();
    let z = base.matrix();

    let mut total = 0.0;
    // Gradient of the estimate with respect to μ and to the factor L.
    let mut mu_bar = DVector::zeros(q);
    let mut l_bar = DMatrix::zeros(q, q);
    let mut y = vec![0.0f64; q];
    for i in 0..n {
        for j in 0..q {
            let mut acc = gaussian.mean[j];
            for b in 0..=j {
                acc += l[(j, b)] * z[(i, b)];
            }
            y[j] = acc;
        }
        let (mut arg, mut best) = (0usize, y[0]);
        for (j, &v) in y.iter().enumerate().skip(1) {
            if v > best {
                best = v;
                arg = j;
            }
        }
        if best > incumbent {
            total += best - incumbent;
            if want_grad {
                mu_bar[arg] += 1.0;
                for b in 0..=arg {
                    l_bar[(arg, b)] += z[(i, b)];
                }
            }
        }
    }
    let scale = 1.0 / n as f64;
    total *= scale;
    if !want_grad {
        return Ok((total, mu_bar, l_bar));
    }
    mu_bar *= scale;
    l_bar *= scale;

    // Pull the gradient on L back to a gradient on Σ (with Σ = L Lᵀ):
    // Σ̄ = L⁻ᵀ Φ(Lᵀ L̄) L⁻¹ symmetrized, where Φ keeps the lower triangle
    // and halves the diagonal.
    let mut phi = l.transpose() * &l_bar;
    for i in 0..q {
        phi[(i, i)] *= 0.5;
        for j in i + 1..q {
            phi[(i, j)] = 0.0;
        }
    }
    // Solve Lᵀ X = Φ, then Σ̄ᵀ = L⁻ᵀ (XᵀL⁻¹)ᵀ... done concretely:
    // A = L⁻ᵀ Φ  ⇔  Lᵀ A = Φ;   Σ̄ = A L⁻¹  ⇔  Σ̄ L = A  ⇔  Lᵀ Σ̄ᵀ = Aᵀ.
    let a = l
        .tr_solve_lower_triangular(&phi)
        .ok_or_else(|| Error::numerical("triangular solve failed in batch-EI gradient"))?;
    let sigma_bar_t = l
        .tr_solve_lower_triangular(&a.transpose())
        .ok_or_else(|| Error::numerical("triangular solve failed in batch-EI gradient"))?;
    let sigma_bar = 0.5 * (&sigma_bar_t + sigma_bar_t.transpose());
    Ok((total, mu_bar, sigma_bar))
}

/// Monte Carlo batch expected improvement of `batch` (rows are points) under
/// the model's joint posterior. The rows are canonically sorted first, so the
/// value is exactly invariant under row reordering; with the low-discrepancy
/// base constructor it is also monotone when a batch is extended by a row
/// that sorts after the existing ones.
pub fn qei_mc(
    model: &GPModel,
    batch: &DMatrix<f64>,
    incumbent: f64,
    base: &BaseSampleSet,
) -> Result<f64> {
    let (_, sorted) = canonical_rows(batch);
    let post = model.posterior(&sorted)?;
    qei_from_gaussian(&post, incumbent, base)
}

/// [`qei_mc`] together with its gradient with respect to every batch
/// coordinate (same shape as `batch`). The gradient chains the per-sample
/// argmax indicators through the posterior: `∂μ/∂x` via the kernel gradient
/// against the training set and `∂Σ/∂x` via cross-kernel gradients.
pub fn qei_mc_grad(
    model: &GPModel,
    batch: &DMatrix<f64>,
    incumbent: f64,
    base: &BaseSampleSet,
) -> Result<(f64, DMatrix<f64>)> {
    let (perm, sorted) = canonical_rows(batch);
    let post = model.posterior(&sorted)?;
    let (value, mu_bar, sigma_bar) = qei_core(&post, incumbent, base, true)?;

    let q = sorted.nrows();
    let d = sorted.ncols();
    let n = model.len();
    let hyper = model.hyper();

    // W = A⁻¹ K_* (n × q), shared by mean and covariance chains.
    let k_star = kernel_cross(model.kind(), hyper, model.train().points(), &sorted);
    let v = model
        .chol()
        .solve_lower_triangular(&k_star)
        .ok_or_else(|| Error::numerical("triangular solve failed in batch-EI gradient"))?;
    let w = model
        .chol()
        .tr_solve_lower_triangular(&v)
        .ok_or_else(|| Error::numerical("triangular solve failed in batch-EI gradient"))?;
    let alpha = model.alpha();

    let mut grad_sorted = DMatrix::zeros(q, d);
    for j in 0..q {
        let xj = sorted.row(j).iter().copied().collect::<Vec<f64>>();
        // J_j: d × n kernel gradients against the training points.
        let mut jac = DMatrix::zeros(d, n);
        for i in 0..n {
            let g = kernel_grad_x(model.kind(), hyper, &xj, &model.train().row(i));
            for a in 0..d {
                jac[(a, i)] = g[a];
            }
        }
        // Mean chain: ∂value/∂x_j += μ̄_j · Jᵀα.
        let mean_chain = &jac * alpha;
        // Covariance chain: Σ_b 2 Σ̄_{jb} (∇_{x_j} k(x_j, x_b) − J W_b),
        // where the direct kernel term vanishes at b = j.
        let mut cov_chain: DVector<f64> = DVector::zeros(d);
        for b in 0..q {
            let sb = sigma_bar[(j, b)];
            if sb == 0.0 {
                continue;
            }
            if b != j {
                let xb = sorted.row(b).iter().copied().collect::<Vec<f64>>();
                let g = kernel_grad_x(model.kind(), hyper, &xj, &xb);
                for a in 0..d {
                    cov_chain[a] += 2.0 * sb * g[a];
                }
            }
            let wb = w.column(b);
            let jw = &jac * wb;
            for a in 0..d {
                cov_chain[a] -= 2.0 * sb * jw[a];
            }
        }
        for a in 0..d {
            grad_sorted[(j, a)] = mu_bar[j] * mean_chain[a] + cov_chain[a];
        }
    }

    // Scatter the gradient back to the caller's row order.
    let mut grad = DMatrix::zeros(q, d);
    for j in 0..q {
        for a in 0..d {
            grad[(perm[j], a)] = grad_sorted[(j, a)];
        }
    }
    Ok((value, grad))
}

/// Maximizes analytic expected improvement over the domain by multistart
/// quasi-Newton ascent with the analytic gradient.
pub fn optimize_ei(
    model: &GPModel,
    domain: &BoxDomain,
    incumbent: f64,
    n_starts: usize,
    seed: u64,
) -> Result<Optimum> {
    let d = domain.dim();
    if model.dim() != d {
        return Err(Error::input(format!(
            "model has dimension {} but domain has {}",
            model.dim(),
            d
        )));
    }
    let obj = ObjectiveHandle::with_gradient(
        d,
        |x: &[f64]| ei_at(model, x, incumbent).unwrap_or(f64::NEG_INFINITY),
        |x: &[f64]| ei_grad(model, x, incumbent).unwrap_or_else(|_| vec![f64::NAN; d]),
    );
    multistart_maximize(&obj, domain, n_starts, seed)
}

/// Maximizes batch expected improvement over `q` copies of the domain by
/// multistart quasi-Newton ascent with the analytic gradient, returning the
/// best batch found (`q × d`).
pub fn optimize_qei(
    model: &GPModel,
    domain: &BoxDomain,
    q: usize,
    incumbent: f64,
    base: &BaseSampleSet,
    n_starts: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if q == 0 {
        return Err(Error::input("batch size must be positive"));
    }
    if base.q() != q {
        return Err(Error::input(format!(
            "base samples are for batch size {} but q = {}",
            base.q(),
            q
        )));
    }
    let d = domain.dim();
    if model.dim() != d {
        return Err(Error::input(format!(
            "model has dimension {} but domain has {}",
            model.dim(),
            d
        )));
    }
    let product = domain.product(q);
    let unflatten = |flat: &[f64]| DMatrix::from_fn(q, d, |i, j| flat[i * d + j]);
    let obj = ObjectiveHandle::with_gradient(
        q * d,
        |flat: &[f64]| {
            qei_mc(model, &unflatten(flat), incumbent, base).unwrap_or(f64::NEG_INFINITY)
        },
        |flat: &[f64]| match qei_mc_grad(model, &unflatten(flat), incumbent, base) {
            Ok((_, g)) => (0..q * d).map(|k| g[(k / d, k % d)]).collect(),
            Err(_) => vec![f64::NAN; q * d],
        },
    );
    let best = multistart_maximize(&obj, &product, n_starts, seed)?;
    Ok(unflatten(&best.x))
}

/// Analytic expected improvement of each batch row on its own — the
/// immediate (one-step) score used when picking a single point out of a
/// batch.
pub fn immediate_scores_bo(
    model: &GPModel,
    batch: &DMatrix<f64>,
    incumbent: f64,
) -> Result<Vec<f64>> {
    (0..batch.nrows())
        .map(|i| {
            let x: Vec<f64> = batch.row(i).iter().copied().collect();
            ei_at(model, &x, incumbent)
        })
        .collect()
}
