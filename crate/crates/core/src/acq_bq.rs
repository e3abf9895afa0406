//! Acquisition and estimation for Bayesian quadrature of non-negative
//! integrands.
//!
//! The integrand is modeled through a log warp: a Gaussian process is fit to
//! `log f`, making the belief about `f` pointwise log-normal. Closed-form
//! moment matching gives the warped mean and covariance, from which the
//! module derives the integral estimate under a normalized prior, an
//! uncertainty-sampling score, and a determinantal batch-diversity score
//! (joint differential entropy of the warped values).

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::acq_bo::canonical_rows;
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::gp::NormalizedFit;
use crate::optim::{halton_box, halton_unit, multistart_maximize, ObjectiveHandle, Optimum};

/// Default number of prior nodes used to discretize the integral.
pub const DEFAULT_INTEGRAL_NODES: usize = 2048;

/// Largest exponent fed to `exp` before the warp is declared overflowed.
const MAX_EXPONENT: f64 = 700.0;

/// Relative jitter ladder for factoring warped covariance matrices.
const ENTROPY_JITTER: [f64; 5] = [0.0, 1e-12, 1e-10, 1e-8, 1e-6];

/// `½·log(2πe)`, the entropy of a unit-variance Gaussian.
const HALF_LOG_2PI_E: f64 = 1.418_938_533_204_672_7;

/// Distribution the integral is taken against. Densities are normalized, so
/// estimates are invariant to affine reparameterizations of the domain.
#[derive(Debug, Clone)]
pub enum IntegrationPrior {
    /// Uniform over the task domain with density `1/volume`.
    UniformBox,
    /// Independent Gaussian per dimension; nodes are generated inside the
    /// mean ± 6 standard deviations box, clamped to the task domain.
    GaussianDiag { mean: Vec<f64>, sd: Vec<f64> },
}

impl IntegrationPrior {
    /// Low-discrepancy nodes distributed according to the prior, inside the
    /// domain.
    pub fn nodes(&self, domain: &BoxDomain, count: usize, seed: u64) -> Result<DMatrix<f64>> {
        match self {
            IntegrationPrior::UniformBox => halton_box(domain, count, seed),
            IntegrationPrior::GaussianDiag { mean, sd } => {
                let d = domain.dim();
                if mean.len() != d || sd.len() != d {
                    return Err(Error::input(format!(
                        "prior is {}-dimensional but the domain is {}-dimensional",
                        mean.len(),
                        d
                    )));
                }
                if sd.iter().any(|s| !s.is_finite() || *s <= 0.0) {
                    return Err(Error::input("prior standard deviations must be positive"));
                }
                let u = halton_unit(d, count, seed)?;
                let normal = Normal::new(0.0, 1.0).expect("valid standard normal");
                let mut nodes = DMatrix::zeros(count, d);
                for i in 0..count {
                    for j in 0..d {
                        let z = normal.inverse_cdf(u[(i, j)]).clamp(-6.0, 6.0);
                        let x = mean[j] + sd[j] * z;
                        nodes[(i, j)] = x.clamp(domain.lower()[j], domain.upper()[j]);
                    }
                }
                Ok(nodes)
            }
        }
    }
}

fn checked_exp(t: f64) -> Result<f64> {
    if t > MAX_EXPONENT {
        return Err(Error::numerical(format!(
            "warped posterior overflows: exponent {t} exceeds {MAX_EXPONENT}"
        )));
    }
    Ok(t.exp())
}

/// Mean of a log-normal with latent mean `m` and latent variance `s`:
/// `E[f] = exp(m + s/2)`.
pub fn warp_mean(m: f64, s: f64) -> Result<f64> {
    checked_exp(m + 0.5 * s.max(0.0))
}

/// Covariance of two jointly log-normal values with latent means `m_a, m_b`,
/// latent variances `s_a, s_b`, and latent covariance `s_ab`:
/// `Cov[f_a, f_b] = exp(m_a + m_b + (s_a + s_b)/2)·(exp(s_ab) − 1)`.
pub fn warp_cov(m_a: f64, m_b: f64, s_a: f64, s_b: f64, s_ab: f64) -> Result<f64> {
    let front = checked_exp(m_a + m_b + 0.5 * (s_a.max(0.0) + s_b.max(0.0)))?;
    let inner = checked_exp(s_ab)?;
    Ok(front * (inner - 1.0))
}

/// Prepares raw integrand observations for the log warp: values at or below
/// a relative floor (`1e-12` times the largest observation) are clipped to
/// it, and the natural log is taken. At least one observation must be
/// positive.
pub fn log_observations(values: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    if values.is_empty() {
        return Err(Error::input("values must be non-empty"));
    }
    let max = values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    if max.is_nan() || max <= 0.0 {
        return Err(Error::input(
            "log warp needs at least one positive observation",
        ));
    }
    let floor = 1e-12 * max;
    let logs = values.map(|v| v.max(floor).ln());
    Ok((logs, floor))
}

/// Normalized-integral estimate: posterior mean and variance of
/// `Z = ∫ f(x) p(x) dx`.
#[derive(Debug, Clone, Copy)]
pub struct IntegralEstimate {
    pub mean: f64,
    pub variance: f64,
}

/// A log-warped view of a latent-space fit: the wrapped model was trained on
/// `log f`, and this wrapper exposes moments of `f` itself.
#[derive(Debug)]
pub struct WarpedPosterior<'a> {
    fit: &'a NormalizedFit,
}

/// Wraps a fit whose responses were the log of the integrand.
pub fn warp_posterior(fit: &NormalizedFit) -> WarpedPosterior<'_> {
    WarpedPosterior { fit }
}

impl WarpedPosterior<'_> {
    pub fn fit(&self) -> &NormalizedFit {
        self.fit
    }

    pub fn domain(&self) -> &BoxDomain {
        self.fit.domain()
    }

    /// Mean and variance of the integrand belief at one point.
    pub fn warped_mean_var(&self, x: &[f64]) -> Result<(f64, f64)> {
        let (m, s) = self.fit.posterior_point_original(x)?;
        let s = s.max(0.0);
        let mean = warp_mean(m, s)?;
        let var = warp_cov(m, m, s, s, s)?;
        Ok((mean, var))
    }

    /// Joint mean vector and covariance matrix of the integrand belief at
    /// the rows of `queries`.
    pub fn warped_moments(&self, queries: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let post = self.fit.posterior_original(queries)?;
        let q = post.len();
        let mut mean = DVector::zeros(q);
        for a in 0..q {
            mean[a] = warp_mean(post.mean[a], post.var(a))?;
        }
        let mut cov = DMatrix::zeros(q, q);
        for a in 0..q {
            for b in 0..=a {
                let c = warp_cov(
                    post.mean[a],
                    post.mean[b],
                    post.var(a),
                    post.var(b),
                    post.cov[(a, b)],
                )?;
                cov[(a, b)] = c;
                cov[(b, a)] = c;
            }
        }
        Ok((mean, cov))
    }

    /// Posterior mean of the normalized integral, discretized on `count`
    /// prior nodes: `(1/n) Σ_i E[f(u_i)]`. Needs only marginal variances, so
    /// it stays cheap at thousands of nodes.
    pub fn integral_mean(
        &self,
        prior: &IntegrationPrior,
        count: usize,
        seed: u64,
    ) -> Result<f64> {
        let nodes = prior.nodes(self.domain(), count, seed)?;
        let mut total = 0.0;
        for i in 0..count {
            let x: Vec<f64> = nodes.row(i).iter().copied().collect();
            let (m, s) = self.fit.posterior_point_original(&x)?;
            total += warp_mean(m, s.max(0.0))?;
        }
        Ok(total / count as f64)
    }

    /// Posterior mean and variance of the normalized integral on `count`
    /// prior nodes: the mean averages the warped means and the variance sums
    /// the full warped covariance, `(1/n²)·1ᵀC1`. Quadratic in `count`.
    pub fn integral_estimate(
        &self,
        prior: &IntegrationPrior,
        count: usize,
        seed: u64,
    ) -> Result<IntegralEstimate> {
        let nodes = prior.nodes(self.domain(), count, seed)?;
        let (mean_f, cov_f) = self.warped_moments(&nodes)?;
        let mean = mean_f.sum() / count as f64;
        let variance = (cov_f.sum() / (count * count) as f64).max(0.0);
        Ok(IntegralEstimate { mean, variance })
    }

    /// Uncertainty-sampling score: the variance of the integrand belief.
    pub fn unct_score(&self, x: &[f64]) -> Result<f64> {
        self.warped_mean_var(x).map(|(_, var)| var)
    }

    /// Joint differential entropy of the warped values at the batch rows:
    /// `½·log det(2πe·C)`. Batch rows are canonically sorted first, so the
    /// score is exactly invariant under row reordering; a batch of one
    /// reduces to `½·log(2πe·variance)`, an increasing function of the
    /// uncertainty-sampling score.
    pub fn dpp_entropy(&self, batch: &DMatrix<f64>) -> Result<f64> {
        if batch.nrows() == 0 {
            return Err(Error::input("batch must be non-empty"));
        }
        let (_, sorted) = canonical_rows(batch);
        let (_, cov) = self.warped_moments(&sorted)?;
        let q = cov.nrows();
        let scale = cov
            .diagonal()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
        for &rel in &ENTROPY_JITTER {
            let mut c = cov.clone();
            for i in 0..q {
                c[(i, i)] += rel * scale;
            }
            if let Some(chol) = c.cholesky() {
                let log_det: f64 = (0..q).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>() * 2.0;
                return Ok(q as f64 * HALF_LOG_2PI_E + 0.5 * log_det);
            }
        }
        Err(Error::numerical(
            "warped covariance is not positive definite after maximum jitter",
        ))
    }

    /// Maximizes the uncertainty-sampling score over the domain.
    pub fn optimize_unct(&self, n_starts: usize, seed: u64) -> Result<Optimum> {
        let d = self.domain().dim();
        let obj = ObjectiveHandle::new(d, |x: &[f64]| {
            self.unct_score(x).unwrap_or(f64::NEG_INFINITY)
        });
        multistart_maximize(&obj, self.domain(), n_starts, seed)
    }

    /// Maximizes the batch-diversity entropy over `q` copies of the domain,
    /// returning the best batch found (`q × d`).
    pub fn optimize_dpp(&self, q: usize, n_starts: usize, seed: u64) -> Result<DMatrix<f64>> {
        if q == 0 {
            return Err(Error::input("batch size must be positive"));
        }
        let d = self.domain().dim();
        let product = self.domain().product(q);
        let unflatten = |flat: &[f64]| DMatrix::from_fn(q, d, |i, j| flat[i * d + j]);
        let obj = ObjectiveHandle::new(q * d, |flat: &[f64]| {
            self.dpp_entropy(&unflatten(flat))
                .unwrap_or(f64::NEG_INFINITY)
        });
        let best = multistart_maximize(&obj, &product, n_starts, seed)?;
        Ok(unflatten(&best.x))
    }
}

/// Integrand-belief variance of each batch row on its own — the immediate
/// score used when picking a single point out of a batch.
pub fn immediate_scores_bq(warped: &WarpedPosterior, batch: &DMatrix<f64>) -> Result<Vec<f64>> {
    (0..batch.nrows())
        .map(|i| {
            let x: Vec<f64> = batch.row(i).iter().copied().collect();
            warped.unct_score(&x)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Dataset;
    use crate::gp::{fit_on_box, KernelKind};
    use crate::optim::seeded_uniform;
    use approx::assert_abs_diff_eq;

    /// Fits the log warp to samples of `f` over `domain`.
    fn warped_fit(
        f: impl Fn(&[f64]) -> f64,
        domain: &BoxDomain,
        n: usize,
        seed: u64,
    ) -> NormalizedFit {
        let pts = seeded_uniform(domain, n, seed).unwrap();
        let raw = DVector::from_fn(n, |i, _| {
            let x: Vec<f64> = pts.row(i).iter().copied().collect();
            f(&x)
        });
        let (logs, _) = log_observations(&raw).unwrap();
        let data = Dataset::new(pts, logs).unwrap();
        fit_on_box(KernelKind::Matern32, &data, domain, 4, seed ^ 0xf17, None).unwrap()
    }

    #[test]
    fn warp_moments_match_frozen_lognormal_values() {
        // Standard log-normal (latent mean 0, latent variance 1):
        // E[f] = e^{1/2} and Var[f] = (e − 1)·e, both frozen from
        // high-precision evaluations.
        let mean = warp_mean(0.0, 1.0).unwrap();
        let var = warp_cov(0.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(mean, 1.648_721_270_700_128_1, epsilon = 1e-15);
        assert_abs_diff_eq!(var, 4.670_774_270_471_605, epsilon = 1e-14);
        // Zero latent variance collapses to a point mass.
        assert_abs_diff_eq!(warp_mean(0.3, 0.0).unwrap(), (0.3f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            warp_cov(0.3, 0.3, 0.0, 0.0, 0.0).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn warp_guards_against_overflow() {
        assert!(warp_mean(800.0, 1.0).is_err());
        assert!(warp_cov(400.0, 400.0, 1.0, 1.0, 1.0).is_err());
        assert!(warp_mean(600.0, 1.0).is_ok());
    }

    #[test]
    fn log_observations_clip_to_relative_floor() {
        let values = DVector::from_column_slice(&[2.0, 0.0, -3.0, 1e-20]);
        let (logs, floor) = log_observations(&values).unwrap();
        assert_abs_diff_eq!(floor, 2e-12, epsilon = 1e-24);
        assert_abs_diff_eq!(logs[0], (2.0f64).ln(), epsilon = 1e-15);
        for i in 1..4 {
            assert_abs_diff_eq!(logs[i], floor.ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn log_observations_require_a_positive_value() {
        let values = DVector::from_column_slice(&[0.0, -1.0]);
        assert!(log_observations(&values).is_err());
    }

    #[test]
    fn integral_of_near_constant_function_is_its_level() {
        // f ≡ 2 on any box integrates (against a normalized prior) to 2:
        // the estimate must not pick up the box volume.
        let domain = BoxDomain::cube(1, 0.0, 5.0).unwrap();
        let fit = warped_fit(|_| 2.0, &domain, 8, 4);
        let warped = warp_posterior(&fit);
        let est = warped
            .integral_estimate(&IntegrationPrior::UniformBox, 256, 2)
            .unwrap();
        assert!(
            (est.mean - 2.0).abs() < 0.05,
            "estimated mean {} for a constant level of 2",
            est.mean
        );
        assert!(est.variance >= 0.0);
        let cheap = warped
            .integral_mean(&IntegrationPrior::UniformBox, 256, 2)
            .unwrap();
        assert_abs_diff_eq!(cheap, est.mean, epsilon = 1e-12);
    }

    #[test]
    fn integral_estimate_tracks_a_smooth_integrand() {
        // f(x) = 1 + x on [0, 1]: normalized integral 1.5.
        let domain = BoxDomain::cube(1, 0.0, 1.0).unwrap();
        let fit = warped_fit(|x| 1.0 + x[0], &domain, 14, 9);
        let warped = warp_posterior(&fit);
        let est = warped
            .integral_estimate(&IntegrationPrior::UniformBox, 512, 3)
            .unwrap();
        assert!(
            (est.mean - 1.5).abs() < 0.05,
            "estimated {} for a true normalized integral of 1.5",
            est.mean
        );
    }

    #[test]
    fn unct_score_is_low_at_data_and_high_in_gaps() {
        let domain = BoxDomain::cube(1, 0.0, 1.0).unwrap();
        // Samples cluster near the ends, leaving the middle uncertain.
        let pts = DMatrix::from_row_slice(6, 1, &[0.02, 0.05, 0.1, 0.9, 0.95, 0.98]);
        let raw = DVector::from_fn(6, |i, _| 1.0 + pts[(i, 0)]);
        let (logs, _) = log_observations(&raw).unwrap();
        let data = Dataset::new(pts, logs).unwrap();
        let fit = fit_on_box(KernelKind::Matern32, &data, &domain, 4, 1, None).unwrap();
        let warped = warp_posterior(&fit);
        let at_data = warped.unct_score(&[0.05]).unwrap();
        let in_gap = warped.unct_score(&[0.5]).unwrap();
        assert!(
            in_gap > at_data * 5.0,
            "gap variance {in_gap} vs near-data variance {at_data}"
        );
    }

    #[test]
    fn dpp_entropy_of_single_point_matches_variance_formula() {
        let domain = BoxDomain::cube(2, 0.0, 1.0).unwrap();
        let fit = warped_fit(|x| 1.0 + x[0] * x[1], &domain, 10, 6);
        let warped = warp_posterior(&fit);
        for x in [[0.3, 0.7], [0.5, 0.5], [0.9, 0.1]] {
            let var = warped.unct_score(&x).unwrap();
            let batch = DMatrix::from_row_slice(1, 2, &x);
            let entropy = warped.dpp_entropy(&batch).unwrap();
            assert_abs_diff_eq!(
                entropy,
                HALF_LOG_2PI_E + 0.5 * var.ln(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn dpp_entropy_is_exactly_permutation_invariant() {
        let domain = BoxDomain::cube(2, 0.0, 1.0).unwrap();
        let fit = warped_fit(|x| 2.0 + (3.0 * x[0]).sin(), &domain, 9, 13);
        let warped = warp_posterior(&fit);
        let batch =
            DMatrix::from_row_slice(3, 2, &[0.8, 0.2, 0.1, 0.9, 0.45, 0.55]);
        let reference = warped.dpp_entropy(&batch).unwrap();
        for perm in [[1usize, 0, 2], [2, 1, 0], [1, 2, 0], [2, 0, 1], [0, 2, 1]] {
            let permuted = DMatrix::from_fn(3, 2, |i, j| batch[(perm[i], j)]);
            let value = warped.dpp_entropy(&permuted).unwrap();
            assert_eq!(value.to_bits(), reference.to_bits(), "perm {perm:?}");
        }
    }

    #[test]
    fn dpp_entropy_prefers_spread_batches() {
        let domain = BoxDomain::cube(1, 0.0, 1.0).unwrap();
        let fit = warped_fit(|x| 1.0 + x[0], &domain, 5, 21);
        let warped = warp_posterior(&fit);
        let clumped = DMatrix::from_row_slice(2, 1, &[0.5, 0.500001]);
        let spread = DMatrix::from_row_slice(2, 1, &[0.3, 0.7]);
        let h_clumped = warped.dpp_entropy(&clumped).unwrap();
        let h_spread = warped.dpp_entropy(&spread).unwrap();
        assert!(
            h_spread > h_clumped,
            "spread entropy {h_spread} vs clumped entropy {h_clumped}"
        );
    }

    #[test]
    fn single_point_dpp_and_unct_optimize_to_the_same_place() {
        let domain = BoxDomain::cube(1, 0.0, 1.0).unwrap();
        let pts = DMatrix::from_row_slice(5, 1, &[0.05, 0.1, 0.85, 0.9, 0.95]);
        let raw = DVector::from_fn(5, |i, _| 1.5 + pts[(i, 0)]);
        let (logs, _) = log_observations(&raw).unwrap();
        let data = Dataset::new(pts, logs).unwrap();
        let fit = fit_on_box(KernelKind::Matern32, &data, &domain, 4, 2, None).unwrap();
        let warped = warp_posterior(&fit);

        let unct_best = warped.optimize_unct(16, 5).unwrap();
        let dpp_best = warped.optimize_dpp(1, 16, 5).unwrap();
        let dpp_var = warped.unct_score(&[dpp_best[(0, 0)]]).unwrap();
        assert!(
            dpp_var >= 0.999 * unct_best.value,
            "batch-of-one diversity picked variance {dpp_var}, \
             uncertainty sampling found {}",
            unct_best.value
        );
    }

    #[test]
    fn gaussian_prior_nodes_concentrate_near_the_mean() {
        let domain = BoxDomain::cube(1, -10.0, 10.0).unwrap();
        let prior = IntegrationPrior::GaussianDiag {
            mean: vec![1.0],
            sd: vec![0.5],
        };
        let nodes = prior.nodes(&domain, 512, 7).unwrap();
        let mean = nodes.column(0).sum() / 512.0;
        let inside = nodes
            .column(0)
            .iter()
            .filter(|x| (**x - 1.0).abs() < 1.0)
            .count();
        assert!((mean - 1.0).abs() < 0.05, "node mean {mean}");
        assert!(inside > 480, "only {inside} of 512 nodes within 2 sd");
        for x in nodes.column(0).iter() {
            assert!(domain.contains(&[*x]));
        }
    }

    #[test]
    fn gaussian_prior_validates_shapes() {
        let domain = BoxDomain::cube(2, 0.0, 1.0).unwrap();
        let bad_dim = IntegrationPrior::GaussianDiag {
            mean: vec![0.5],
            sd: vec![0.1],
        };
        assert!(bad_dim.nodes(&domain, 16, 0).is_err());
        let bad_sd = IntegrationPrior::GaussianDiag {
            mean: vec![0.5, 0.5],
            sd: vec![0.1, 0.0],
        };
        assert!(bad_sd.nodes(&domain, 16, 0).is_err());
    }

    #[test]
    fn immediate_scores_match_pointwise_variance() {
        let domain = BoxDomain::cube(1, 0.0, 1.0).unwrap();
        let fit = warped_fit(|x| 1.0 + x[0] * x[0], &domain, 7, 31);
        let warped = warp_posterior(&fit);
        let batch = DMatrix::from_row_slice(2, 1, &[0.25, 0.75]);
        let scores = immediate_scores_bq(&warped, &batch).unwrap();
        assert_abs_diff_eq!(
            scores[0],
            warped.unct_score(&[0.25]).unwrap(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            scores[1],
            warped.unct_score(&[0.75]).unwrap(),
            epsilon = 1e-15
        );
    }
}
