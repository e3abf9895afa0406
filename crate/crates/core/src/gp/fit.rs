//! Hyperparameter fitting by marginal likelihood, and a wrapper that fits on
//! normalized coordinates (inputs in the unit cube, responses standardized).

use nalgebra::{DMatrix, DVector};

use crate::domain::{BoxDomain, Dataset};
use crate::error::{Error, Result};
use crate::gp::kernel::{kernel_dlog_lengthscale, kernel_matrix};
use crate::gp::{GPHyperparams, GPModel, KernelKind, PredictiveGaussian};
use crate::optim::{local_maximize_with, seeded_uniform, LocalOpts, ObjectiveHandle};

const HALF_LOG_2PI: f64 = 0.918_938_533_204_672_8;

/// Parameter vector layout used throughout fitting:
/// `[mean, log signal_variance, log lengthscale_1 .. log lengthscale_d,
///   log noise_variance]`.
fn theta_len(dim: usize) -> usize {
    dim + 3
}

fn theta_to_hyper(dim: usize, theta: &[f64]) -> Result<GPHyperparams> {
    if theta.len() != theta_len(dim) {
        return Err(Error::input(format!(
            "parameter vector has length {} but dimension {} needs {}",
            theta.len(),
            dim,
            theta_len(dim)
        )));
    }
    Ok(GPHyperparams {
        mean: theta[0],
        signal_variance: theta[1].exp(),
        lengthscales: theta[2..2 + dim].iter().map(|t| t.exp()).collect(),
        noise_variance: theta[2 + dim].exp(),
    })
}

fn hyper_to_theta(hyper: &GPHyperparams) -> Vec<f64> {
    let mut theta = Vec::with_capacity(theta_len(hyper.lengthscales.len()));
    theta.push(hyper.mean);
    theta.push(hyper.signal_variance.ln());
    theta.extend(hyper.lengthscales.iter().map(|l| l.ln()));
    // ln(0) = -inf for noiseless models; bounds clamping handles it.
    theta.push(hyper.noise_variance.ln());
    theta
}

/// Negative log marginal likelihood and its gradient with respect to the
/// parameter vector described in [`theta_to_hyper`].
///
/// The covariance is `A = K + σ_n² I`, escalated by the same jitter ladder
/// used when building a [`GPModel`]; any jitter is proportional to the signal
/// variance and is therefore included in that entry of the gradient.
pub fn nll_and_grad(kind: KernelKind, data: &Dataset, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
    let dim = data.dim();
    let n = data.len();
    let hyper = theta_to_hyper(dim, theta)?;
    hyper.validate(dim)?;

    let k_pure = kernel_matrix(kind, &hyper, data.points());
    let mut chosen: Option<(nalgebra::Cholesky<f64, nalgebra::Dyn>, f64)> = None;
    for &rel in &super::JITTER_LADDER {
        let jitter = rel * hyper.signal_variance;
        let mut a = k_pure.clone();
        for i in 0..n {
            a[(i, i)] += hyper.noise_variance + jitter;
        }
        if let Some(c) = a.cholesky() {
            chosen = Some((c, jitter));
            break;
        }
    }
    let (chol, jitter) = chosen.ok_or_else(|| {
        Error::numerical("covariance not positive definite while evaluating likelihood")
    })?;

    let residual = data.values() - DVector::from_element(n, hyper.mean);
    let alpha = chol.solve(&residual);
    let log_det_half: f64 = (0..n).map(|i| chol.l_dirty()[(i, i)].ln()).sum();
    let nll = 0.5 * residual.dot(&alpha) + log_det_half + n as f64 * HALF_LOG_2PI;

    // M = A⁻¹ − α αᵀ; for each parameter, ∂NLL/∂θ = ½ Σ_ij M_ij (∂A/∂θ)_ij.
    let mut a_inv = DMatrix::identity(n, n);
    chol.solve_mut(&mut a_inv);
    let m = a_inv - &alpha * alpha.transpose();

    let mut grad = vec![0.0; theta_len(dim)];
    grad[0] = -alpha.sum();

    // ∂A/∂log σ_f² = K + jitter·I (every kernel entry and the jitter scale
    // linearly with the signal variance).
    let mut g_sig = 0.0;
    for i in 0..n {
        for j in 0..n {
            g_sig += m[(i, j)] * k_pure[(i, j)];
        }
        g_sig += m[(i, i)] * jitter;
    }
    grad[1] = 0.5 * g_sig;

    for l in 0..dim {
        let mut g = 0.0;
        for i in 0..n {
            let xi = data.row(i);
            for j in 0..i {
                let xj = data.row(j);
                let dk = kernel_dlog_lengthscale(kind, &hyper, &xi, &xj, l);
                g += 2.0 * m[(i, j)] * dk;
            }
            // Diagonal entries have zero distance, so they do not move with
            // the lengthscales.
        }
        grad[2 + l] = 0.5 * g;
    }

    // ∂A/∂log σ_n² = σ_n² I.
    let g_noise: f64 = (0..n).map(|i| m[(i, i)]).sum::<f64>() * hyper.noise_variance;
    grad[2 + dim] = 0.5 * g_noise;

    Ok((nll, grad))
}

/// Box constraints on the fitting parameter vector.
#[derive(Debug, Clone)]
pub struct HyperBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl HyperBounds {
    /// Default bounds from the data scales. `input_ranges` holds the width of
    /// the region of interest along each input dimension: lengthscales may
    /// range over `[1e-3, 10]` times that width, both variances are tied to
    /// the response variance (signal within `e^±10` of it, noise between
    /// `1e-6` of it and all of it), and the mean stays within three response
    /// standard deviations of the response average.
    pub fn for_data(input_ranges: &[f64], values: &DVector<f64>) -> Result<HyperBounds> {
        if input_ranges.is_empty() {
            return Err(Error::input("input_ranges must be non-empty"));
        }
        if input_ranges.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::input("input ranges must be finite and positive"));
        }
        if values.is_empty() {
            return Err(Error::input("values must be non-empty"));
        }
        let n = values.len();
        let mean = values.sum() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let var = if var > 1e-12 { var } else { 1.0 };
        let sd = var.sqrt();
        let log_var = var.ln();

        let mut lower = vec![mean - 3.0 * sd, log_var - 10.0];
        let mut upper = vec![mean + 3.0 * sd, log_var + 10.0];
        for r in input_ranges {
            lower.push((1e-3 * r).ln());
            upper.push((10.0 * r).ln());
        }
        lower.push(log_var + (1e-6f64).ln());
        upper.push(log_var);
        Ok(HyperBounds { lower, upper })
    }

    /// Bounds for data already mapped to the unit cube with standardized
    /// responses (unit input ranges; zero mean, unit variance responses).
    pub fn standardized(dim: usize) -> HyperBounds {
        let unit_sd = std::f64::consts::FRAC_1_SQRT_2;
        HyperBounds::for_data(
            &vec![1.0; dim],
            &DVector::from_column_slice(&[-unit_sd, unit_sd]),
        )
        .expect("static bounds are valid")
    }

    pub fn input_dim(&self) -> usize {
        self.lower.len() - 3
    }

    pub fn as_domain(&self) -> BoxDomain {
        BoxDomain::new(self.lower.clone(), self.upper.clone())
            .expect("bounds form a valid box")
    }

    pub fn clamp(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .map(|(t, (lo, hi))| t.max(*lo).min(*hi))
            .collect()
    }
}

/// Maximum-likelihood hyperparameters via multistart quasi-Newton ascent on
/// the (negated) marginal likelihood with its analytic gradient.
///
/// The first start is the previous fit when `warm` is given (clamped into the
/// bounds) and the bounds-box center otherwise; the remaining `restarts − 1`
/// starts are seeded uniform draws. Starts where the likelihood cannot be
/// evaluated are skipped; ties between restarts keep the earliest.
pub fn fit_hyperparams(
    kind: KernelKind,
    data: &Dataset,
    bounds: &HyperBounds,
    restarts: usize,
    seed: u64,
    warm: Option<&GPHyperparams>,
) -> Result<GPHyperparams> {
    if restarts == 0 {
        return Err(Error::input("restarts must be at least 1"));
    }
    let dim = data.dim();
    if bounds.input_dim() != dim {
        return Err(Error::input(format!(
            "bounds are for dimension {} but data has {}",
            bounds.input_dim(),
            dim
        )));
    }
    let theta_domain = bounds.as_domain();

    let objective = ObjectiveHandle::with_gradient(
        theta_len(dim),
        |theta: &[f64]| match nll_and_grad(kind, data, theta) {
            Ok((nll, _)) => -nll,
            Err(_) => f64::NEG_INFINITY,
        },
        |theta: &[f64]| match nll_and_grad(kind, data, theta) {
            Ok((_, grad)) => grad.into_iter().map(|g| -g).collect(),
            Err(_) => vec![f64::NAN; theta_len(dim)],
        },
    );

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(restarts);
    match warm {
        Some(h) => {
            h.validate(dim)?;
            starts.push(bounds.clamp(&hyper_to_theta(h)));
        }
        None => starts.push(theta_domain.center().as_slice().to_vec()),
    }
    if restarts > 1 {
        let extra = seeded_uniform(&theta_domain, restarts - 1, seed)?;
        for k in 0..restarts - 1 {
            starts.push(extra.row(k).iter().copied().collect());
        }
    }

    let opts = LocalOpts {
        max_iters: 200,
        ..LocalOpts::default()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in &starts {
        let run = match local_maximize_with(&objective, &theta_domain, start, &opts) {
            Ok(r) => r,
            Err(_) => continue,
        };
        if !run.value.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            Some((v, _)) => run.value > *v,
        };
        if better {
            best = Some((run.value, run.x));
        }
    }
    let (_, theta) = best.ok_or_else(|| {
        Error::numerical("likelihood could not be evaluated from any restart")
    })?;
    theta_to_hyper(dim, &theta)
}

/// Shift and scale that standardize `values` to zero mean and unit variance.
/// Degenerate inputs (single observation or constant responses) get unit
/// scale so the transform stays invertible.
pub fn standardize(values: &DVector<f64>) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 1.0);
    }
    let mean = values.sum() / n as f64;
    if n == 1 {
        return (mean, 1.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if sd > 1e-12 {
        (mean, sd)
    } else {
        (mean, 1.0)
    }
}

/// A model fit on normalized coordinates together with the transform back to
/// the original problem: inputs are mapped to the unit cube and responses to
/// zero mean and unit variance before fitting.
#[derive(Debug, Clone)]
pub struct NormalizedFit {
    model: GPModel,
    domain: BoxDomain,
    y_shift: f64,
    y_scale: f64,
}

/// Fits hyperparameters and builds a model for `data` over `domain`, working
/// on normalized coordinates internally. `warm` seeds the first restart with
/// an earlier fit's (already normalized) hyperparameters.
pub fn fit_on_box(
    kind: KernelKind,
    data: &Dataset,
    domain: &BoxDomain,
    restarts: usize,
    seed: u64,
    warm: Option<&GPHyperparams>,
) -> Result<NormalizedFit> {
    if data.dim() != domain.dim() {
        return Err(Error::input(format!(
            "data has dimension {} but domain has {}",
            data.dim(),
            domain.dim()
        )));
    }
    let n = data.len();
    let unit_points = DMatrix::from_fn(n, data.dim(), |i, j| {
        (data.points()[(i, j)] - domain.lower()[j]) / domain.width(j)
    });
    let (y_shift, y_scale) = standardize(data.values());
    let unit_values = data.values().map(|y| (y - y_shift) / y_scale);
    let unit_data = Dataset::new(unit_points, unit_values)?;

    let bounds = HyperBounds::standardized(data.dim());
    let hyper = fit_hyperparams(kind, &unit_data, &bounds, restarts, seed, warm)?;
    let model = GPModel::new(kind, hyper, unit_data)?;
    Ok(NormalizedFit {
        model,
        domain: domain.clone(),
        y_shift,
        y_scale,
    })
}

impl NormalizedFit {
    /// The underlying model over the unit cube with standardized responses.
    pub fn model(&self) -> &GPModel {
        &self.model
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn y_shift(&self) -> f64 {
        self.y_shift
    }

    pub fn y_scale(&self) -> f64 {
        self.y_scale
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        self.domain.to_unit(x).as_slice().to_vec()
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        self.domain.from_unit(u).as_slice().to_vec()
    }

    pub fn standardize_y(&self, y: f64) -> f64 {
        (y - self.y_shift) / self.y_scale
    }

    pub fn destandardize_y(&self, y: f64) -> f64 {
        y * self.y_scale + self.y_shift
    }

    /// Posterior over original-coordinate queries, expressed in original
    /// response units.
    pub fn posterior_original(&self, queries: &DMatrix<f64>) -> Result<PredictiveGaussian> {
        if queries.ncols() != self.domain.dim() {
            return Err(Error::input(format!(
                "queries have dimension {} but domain has {}",
                queries.ncols(),
                self.domain.dim()
            )));
        }
        let unit = DMatrix::from_fn(queries.nrows(), queries.ncols(), |i, j| {
            (queries[(i, j)] - self.domain.lower()[j]) / self.domain.width(j)
        });
        let post = self.model.posterior(&unit)?;
        let mean = post.mean.map(|m| m * self.y_scale + self.y_shift);
        let cov = post.cov.map(|c| c * self.y_scale * self.y_scale);
        Ok(PredictiveGaussian { mean, cov })
    }

    /// Marginal posterior `(mean, variance)` at an original-coordinate point,
    /// in original response units.
    pub fn posterior_point_original(&self, x: &[f64]) -> Result<(f64, f64)> {
        let u = self.domain.to_unit(x);
        let (m, v) = self.model.posterior_point(u.as_slice())?;
        Ok((
            m * self.y_scale + self.y_shift,
            v * self.y_scale * self.y_scale,
        ))
    }

    /// Conditions on an original-coordinate observation without refitting
    /// hyperparameters or changing the normalization.
    pub fn condition_original(&self, x: &[f64], y: f64) -> Result<NormalizedFit> {
        let u = self.domain.to_unit(x);
        let model = self
            .model
            .condition(u.as_slice(), self.standardize_y(y))?;
        Ok(NormalizedFit {
            model,
            domain: self.domain.clone(),
            y_shift: self.y_shift,
            y_scale: self.y_scale,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::optim::rng_from;
    use rand::Rng;

    fn toy_data(seed: u64, n: usize, dim: usize) -> Dataset {
        let domain = BoxDomain::cube(dim, 0.0, 1.0).unwrap();
        let pts = seeded_uniform(&domain, n, seed).unwrap();
        let mut rng = rng_from(seed ^ 0x5ca1e);
        let vals = DVector::from_fn(n, |i, _| {
            let x = pts.row(i);
            (3.0 * x[0]).sin() + 0.1 * rng.random::<f64>()
        });
        Dataset::new(pts, vals).unwrap()
    }

    #[test]
    fn single_point_zero_residual_nll_is_gaussian_constant() {
        // With one observation equal to the mean and unit total variance,
        // the negative log likelihood reduces to ½·log(2π).
        let data = Dataset::new(
            DMatrix::from_row_slice(1, 1, &[0.5]),
            DVector::from_column_slice(&[2.0]),
        )
        .unwrap();
        let theta = [2.0, (0.5f64).ln(), 0.0, (0.5f64).ln()];
        let (nll, _) = nll_and_grad(KernelKind::Matern52, &data, &theta).unwrap();
        assert_abs_diff_eq!(nll, 0.918_938_533_204_672_8, epsilon = 1e-12);
    }

    #[test]
    fn nll_gradient_matches_finite_differences() {
        let data = toy_data(4, 7, 2);
        let theta = [0.2, (0.9f64).ln(), (0.4f64).ln(), (0.7f64).ln(), (0.05f64).ln()];
        let (_, grad) = nll_and_grad(KernelKind::Matern52, &data, &theta).unwrap();
        let step = 1e-5;
        for k in 0..theta.len() {
            let mut plus = theta.to_vec();
            let mut minus = theta.to_vec();
            plus[k] += step;
            minus[k] -= step;
            let (fp, _) = nll_and_grad(KernelKind::Matern52, &data, &plus).unwrap();
            let (fm, _) = nll_and_grad(KernelKind::Matern52, &data, &minus).unwrap();
            let fd = (fp - fm) / (2.0 * step);
            let scale = fd.abs().max(grad[k].abs()).max(1e-8);
            assert!(
                (grad[k] - fd).abs() / scale < 1e-4,
                "component {k}: analytic {} vs finite difference {fd}",
                grad[k]
            );
        }
    }

    #[test]
    fn nll_gradient_matches_finite_differences_matern32() {
        let data = toy_data(11, 6, 3);
        let theta = [
            -0.1,
            (1.3f64).ln(),
            (0.5f64).ln(),
            (0.25f64).ln(),
            (0.9f64).ln(),
            (0.01f64).ln(),
        ];
        let (_, grad) = nll_and_grad(KernelKind::Matern32, &data, &theta).unwrap();
        let step = 1e-5;
        for k in 0..theta.len() {
            let mut plus = theta.to_vec();
            let mut minus = theta.to_vec();
            plus[k] += step;
            minus[k] -= step;
            let (fp, _) = nll_and_grad(KernelKind::Matern32, &data, &plus).unwrap();
            let (fm, _) = nll_and_grad(KernelKind::Matern32, &data, &minus).unwrap();
            let fd = (fp - fm) / (2.0 * step);
            let scale = fd.abs().max(grad[k].abs()).max(1e-8);
            assert!(
                (grad[k] - fd).abs() / scale < 1e-4,
                "component {k}: analytic {} vs finite difference {fd}",
                grad[k]
            );
        }
    }

    #[test]
    fn bounds_reject_bad_inputs() {
        assert!(HyperBounds::for_data(&[], &DVector::from_column_slice(&[1.0])).is_err());
        assert!(HyperBounds::for_data(&[0.0], &DVector::from_column_slice(&[1.0])).is_err());
        assert!(
            HyperBounds::for_data(&[1.0], &DVector::from_column_slice(&[] as &[f64])).is_err()
        );
    }

    #[test]
    fn fit_improves_on_warm_start_at_truth() {
        // Starting a single restart from given hyperparameters must never
        // return something with a worse likelihood.
        let data = toy_data(2, 12, 1);
        let bounds = HyperBounds::for_data(&[1.0], data.values()).unwrap();
        let warm = GPHyperparams {
            mean: 0.4,
            signal_variance: 0.8,
            lengthscales: vec![0.3],
            noise_variance: 0.01,
        };
        let fitted = fit_hyperparams(KernelKind::Matern52, &data, &bounds, 1, 0, Some(&warm))
            .unwrap();
        let theta_warm = bounds.clamp(&hyper_to_theta(&warm));
        let (nll_warm, _) = nll_and_grad(KernelKind::Matern52, &data, &theta_warm).unwrap();
        let (nll_fit, _) =
            nll_and_grad(KernelKind::Matern52, &data, &hyper_to_theta(&fitted)).unwrap();
        assert!(
            nll_fit <= nll_warm + 1e-9,
            "fit {nll_fit} worse than warm start {nll_warm}"
        );
    }

    #[test]
    fn fit_is_deterministic() {
        let data = toy_data(6, 9, 2);
        let bounds = HyperBounds::for_data(&[1.0, 1.0], data.values()).unwrap();
        let a = fit_hyperparams(KernelKind::Matern52, &data, &bounds, 4, 42, None).unwrap();
        let b = fit_hyperparams(KernelKind::Matern52, &data, &bounds, 4, 42, None).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.signal_variance, b.signal_variance);
        assert_eq!(a.lengthscales, b.lengthscales);
        assert_eq!(a.noise_variance, b.noise_variance);
    }

    #[test]
    fn more_restarts_never_hurt_likelihood() {
        let data = toy_data(8, 10, 1);
        let bounds = HyperBounds::for_data(&[1.0], data.values()).unwrap();
        let one = fit_hyperparams(KernelKind::Matern52, &data, &bounds, 1, 9, None).unwrap();
        let many = fit_hyperparams(KernelKind::Matern52, &data, &bounds, 6, 9, None).unwrap();
        let (nll_one, _) =
            nll_and_grad(KernelKind::Matern52, &data, &hyper_to_theta(&one)).unwrap();
        let (nll_many, _) =
            nll_and_grad(KernelKind::Matern52, &data, &hyper_to_theta(&many)).unwrap();
        assert!(nll_many <= nll_one + 1e-9);
    }

    #[test]
    fn normalized_fit_round_trips_coordinates() {
        let domain = BoxDomain::new(vec![-5.0, 0.0], vec![10.0, 15.0]).unwrap();
        let pts = seeded_uniform(&domain, 9, 3).unwrap();
        let vals = DVector::from_fn(9, |i, _| 50.0 + 10.0 * (pts[(i, 0)] * 0.5).sin());
        let data = Dataset::new(pts, vals).unwrap();
        let fit = fit_on_box(KernelKind::Matern52, &data, &domain, 3, 17, None).unwrap();

        // Training inputs land in the unit cube.
        for v in fit.model().train().points().iter() {
            assert!((-1e-12..=1.0 + 1e-12).contains(v), "unit coordinate {v}");
        }
        // Round-trip through the transforms is the identity.
        let x = [2.5, 7.0];
        let u = fit.to_unit(&x);
        let back = fit.from_unit(&u);
        assert_abs_diff_eq!(back[0], x[0], epsilon = 1e-12);
        assert_abs_diff_eq!(back[1], x[1], epsilon = 1e-12);
        let y = 61.25;
        assert_abs_diff_eq!(
            fit.destandardize_y(fit.standardize_y(y)),
            y,
            epsilon = 1e-10
        );
    }

    #[test]
    fn posterior_original_matches_transformed_unit_posterior() {
        let domain = BoxDomain::cube(1, -4.0, 6.0).unwrap();
        let pts = seeded_uniform(&domain, 8, 12).unwrap();
        let vals = DVector::from_fn(8, |i, _| 100.0 + 3.0 * (pts[(i, 0)]).cos());
        let data = Dataset::new(pts, vals).unwrap();
        let fit = fit_on_box(KernelKind::Matern32, &data, &domain, 2, 5, None).unwrap();

        let x = [1.7];
        let (m, v) = fit.posterior_point_original(&x).unwrap();
        let u = fit.to_unit(&x);
        let (mu, vu) = fit.model().posterior_point(&u).unwrap();
        assert_abs_diff_eq!(m, fit.destandardize_y(mu), epsilon = 1e-10);
        assert_abs_diff_eq!(v, vu * fit.y_scale() * fit.y_scale(), epsilon = 1e-10);

        // Near a training point the original-unit posterior mean should be
        // close to the observed value.
        let x0 = [data.points()[(0, 0)]];
        let (m0, _) = fit.posterior_point_original(&x0).unwrap();
        assert!((m0 - data.values()[0]).abs() < 1.0, "mean {m0} far from data");
    }

    #[test]
    fn condition_original_matches_unit_conditioning() {
        let domain = BoxDomain::cube(2, 0.0, 10.0).unwrap();
        let pts = seeded_uniform(&domain, 7, 8).unwrap();
        let vals = DVector::from_fn(7, |i, _| (0.3 * pts[(i, 0)]).sin() + pts[(i, 1)] * 0.1);
        let data = Dataset::new(pts, vals).unwrap();
        let fit = fit_on_box(KernelKind::Matern52, &data, &domain, 2, 1, None).unwrap();

        let x = [4.2, 8.1];
        let y = 0.95;
        let conditioned = fit.condition_original(&x, y).unwrap();
        assert_eq!(conditioned.model().len(), 8);
        // The new model interpolates near the conditioning point.
        let (m, v) = conditioned.posterior_point_original(&x).unwrap();
        let noise = conditioned.model().hyper().noise_variance;
        assert!(
            (m - y).abs() < 0.5 + noise.sqrt() * conditioned.y_scale() * 3.0,
            "conditioned mean {m} far from observed {y}"
        );
        let (_, v_before) = fit.posterior_point_original(&x).unwrap();
        assert!(v < v_before + 1e-12, "conditioning must not raise variance");
    }
}
