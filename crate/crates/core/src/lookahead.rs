//! Nonmyopic lookahead baselines built on expected improvement.
//!
//! Two families are provided. *Rollout* scores a candidate by simulating a
//! short sequence of future expected-improvement steps: the candidate's own
//! one-step value plus the expected best value of the next step, averaged
//! over the candidate's predictive distribution with Gauss–Hermite
//! quadrature and recursing to the requested horizon. *GLASSES*-style
//! scoring instead completes the candidate into a full batch of remaining
//! steps (grown greedily by locally penalized expected improvement) and
//! scores the batch jointly by Monte Carlo batch expected improvement.

use nalgebra::DMatrix;

use crate::acq_bo::{ei_analytic, ei_at, qei_mc, BaseSampleSet};
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::gp::GPModel;
use crate::optim::{
    direct_maximize, gauss_hermite, multistart_maximize, seeded_uniform, split_seed,
    ObjectiveHandle, Optimum, QuadratureRule,
};

/// Posterior standard deviations this far below the prior scale are treated
/// as deterministic: the observation would not move the posterior, so the
/// rollout skips conditioning and only updates its incumbent.
const DETERMINISTIC_SD_FRACTION: f64 = 1e-6;

/// Settings for the rollout recursion and its optimizers.
#[derive(Debug, Clone)]
pub struct RolloutOpts {
    /// Number of sequential steps scored, counting the candidate itself.
    pub horizon: usize,
    /// Gauss–Hermite nodes per simulated observation.
    pub gh_nodes: usize,
    /// Evaluation budget of the global maximizer for each future step.
    pub inner_budget: usize,
    /// Evaluation budget of the global maximizer over candidates.
    pub outer_budget: usize,
}

impl Default for RolloutOpts {
    fn default() -> Self {
        RolloutOpts {
            horizon: 2,
            gh_nodes: 10,
            inner_budget: 100,
            outer_budget: 500,
        }
    }
}

/// How the "best next step" inside the recursion is searched for.
enum InnerMax<'a> {
    /// Global maximization over the whole domain with a fixed budget.
    Direct { budget: usize },
    /// Maximization restricted to a fixed candidate grid (rows are points).
    Grid { candidates: &'a DMatrix<f64> },
}

/// Multi-step expected improvement of `x`: its one-step value plus the
/// expected value of continuing optimally for `horizon − 1` further steps.
fn ei_recursive(
    model: &GPModel,
    domain: &BoxDomain,
    x: &[f64],
    incumbent: f64,
    horizon: usize,
    gh: &QuadratureRule,
    inner: &InnerMax,
) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::input("rollout horizon must be at least 1"));
    }
    let (mean, var) = model.posterior_point(x)?;
    let ei_now = ei_analytic(mean, var, incumbent);
    if horizon == 1 {
        return Ok(ei_now);
    }
    let sd = var.max(0.0).sqrt();
    let prior_sd = model.hyper().signal_variance.sqrt();
    if sd <= DETERMINISTIC_SD_FRACTION * prior_sd {
        // The outcome at x is (numerically) already known: conditioning on
        // it would leave the posterior unchanged, so only the incumbent of
        // the remaining steps moves.
        let future = best_next_value(model, domain, incumbent.max(mean), horizon - 1, gh, inner)?;
        return Ok(ei_now + future);
    }
    let mut expected_future = 0.0;
    for (t, w) in gh.nodes.iter().zip(gh.weights.iter()) {
        let y = mean + sd * t;
        let conditioned = model.condition(x, y)?;
        let future =
            best_next_value(&conditioned, domain, incumbent.max(y), horizon - 1, gh, inner)?;
        expected_future += w * future;
    }
    Ok(ei_now + expected_future)
}

/// Value of the best next step under the given model and incumbent.
fn best_next_value(
    model: &GPModel,
    domain: &BoxDomain,
    incumbent: f64,
    horizon: usize,
    gh: &QuadratureRule,
    inner: &InnerMax,
) -> Result<f64> {
    match inner {
        InnerMax::Direct { budget } => {
            let obj = ObjectiveHandle::new(domain.dim(), |x: &[f64]| {
                ei_recursive(model, domain, x, incumbent, horizon, gh, inner)
                    .unwrap_or(f64::NEG_INFINITY)
            });
            direct_maximize(&obj, domain, *budget).map(|o| o.value)
        }
        InnerMax::Grid { candidates } => {
            let mut best = f64::NEG_INFINITY;
            for i in 0..candidates.nrows() {
                let x: Vec<f64> = candidates.row(i).iter().copied().collect();
                let v = ei_recursive(model, domain, &x, incumbent, horizon, gh, inner)?;
                best = best.max(v);
            }
            if candidates.nrows() == 0 {
                return Err(Error::input("candidate grid must be non-empty"));
            }
            Ok(best)
        }
    }
}

/// Rollout acquisition value of a single candidate, with future steps
/// optimized globally over the domain.
pub fn rollout_acq(
    model: &GPModel,
    domain: &BoxDomain,
    x: &[f64],
    incumbent: f64,
    opts: &RolloutOpts,
) -> Result<f64> {
    let gh = gauss_hermite(opts.gh_nodes)?;
    let inner = InnerMax::Direct {
        budget: opts.inner_budget,
    };
    ei_recursive(model, domain, x, incumbent, opts.horizon, &gh, &inner)
}

/// Rollout acquisition value with future steps restricted to a candidate
/// grid — useful for dense one-dimensional visualizations where the whole
/// curve is evaluated anyway.
pub fn rollout_acq_grid(
    model: &GPModel,
    domain: &BoxDomain,
    x: &[f64],
    incumbent: f64,
    horizon: usize,
    gh_nodes: usize,
    candidates: &DMatrix<f64>,
) -> Result<f64> {
    if candidates.nrows() == 0 {
        return Err(Error::input("candidate grid must be non-empty"));
    }
    if candidates.ncols() != domain.dim() {
        return Err(Error::input(format!(
            "candidate grid has dimension {} but domain has {}",
            candidates.ncols(),
            domain.dim()
        )));
    }
    let gh = gauss_hermite(gh_nodes)?;
    let inner = InnerMax::Grid { candidates };
    ei_recursive(model, domain, x, incumbent, horizon, &gh, &inner)
}

/// Maximizes the rollout acquisition over the domain and returns the chosen
/// point with its score.
pub fn rollout_select(
    model: &GPModel,
    domain: &BoxDomain,
    incumbent: f64,
    opts: &RolloutOpts,
) -> Result<Optimum> {
    let obj = ObjectiveHandle::new(domain.dim(), |x: &[f64]| {
        rollout_acq(model, domain, x, incumbent, opts).unwrap_or(f64::NEG_INFINITY)
    });
    direct_maximize(&obj, domain, opts.outer_budget)
}

/// Settings for batch construction and scoring in the GLASSES-style policy.
#[derive(Debug, Clone)]
pub struct GlassesOpts {
    /// Monte Carlo draws behind each batch score.
    pub n_samples: usize,
    /// Evaluation budget of the global maximizer when appending one batch
    /// member.
    pub append_budget: usize,
    /// Evaluation budget of the global maximizer over candidates.
    pub select_budget: usize,
    /// Restarts when locating the posterior-mean maximum.
    pub mean_starts: usize,
    /// Uniform points probed when estimating the mean's Lipschitz constant.
    pub grad_probes: usize,
}

impl Default for GlassesOpts {
    fn default() -> Self {
        GlassesOpts {
            n_samples: 1024,
            append_budget: 200,
            select_budget: 500,
            mean_starts: 10,
            grad_probes: 500,
        }
    }
}

/// The Lipschitz probe set is fixed across calls so batch construction is a
/// deterministic function of the model state.
const GRAD_PROBE_SEED: u64 = 0x97ad_5eed;

/// Per-iteration state of the GLASSES-style policy: the greedily built batch
/// completion and the frozen base samples that score candidate batches.
#[derive(Debug, Clone)]
pub struct GlassesContext {
    q: usize,
    /// First batch member (the plain expected-improvement maximizer).
    first: Vec<f64>,
    /// Members 2..q, grown by penalized expected improvement.
    tail: DMatrix<f64>,
    base: BaseSampleSet,
    incumbent: f64,
}

/// Smoothly ramps from 0 at `lower` to 1 at `upper`.
fn smoothstep(dist: f64, lower: f64, upper: f64) -> f64 {
    if upper <= lower {
        return if dist > lower { 1.0 } else { 0.0 };
    }
    let t = ((dist - lower) / (upper - lower)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Exclusion radius around a chosen batch member: the distance within which
/// the objective plausibly stays above the member's predicted value, given
/// the mean's maximum `mean_max` and Lipschitz estimate `lipschitz`.
fn exclusion_radius(
    member_mean: f64,
    mean_max: f64,
    lipschitz: f64,
    fallback: f64,
) -> f64 {
    if lipschitz > 1e-12 {
        (mean_max - member_mean).max(0.0) / lipschitz
    } else {
        fallback
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl GlassesContext {
    /// Builds the per-iteration context: locates the posterior-mean maximum,
    /// estimates the mean's Lipschitz constant on a fixed probe set, grows
    /// the batch completion by penalized expected improvement, and freezes
    /// the base samples used to score candidate batches.
    pub fn new(
        model: &GPModel,
        domain: &BoxDomain,
        incumbent: f64,
        q: usize,
        seed: u64,
        opts: &GlassesOpts,
    ) -> Result<GlassesContext> {
        if q == 0 {
            return Err(Error::input("batch size must be positive"));
        }
        let d = domain.dim();
        if model.dim() != d {
            return Err(Error::input(format!(
                "model has dimension {} but domain has {}",
                model.dim(),
                d
            )));
        }
        let base = BaseSampleSet::quasi_monte_carlo(opts.n_samples, q, split_seed(seed, 1))?;

        // Posterior-mean maximum.
        let mean_obj = ObjectiveHandle::new(d, |x: &[f64]| {
            model
                .posterior_point(x)
                .map(|(m, _)| m)
                .unwrap_or(f64::NEG_INFINITY)
        });
        let mean_max =
            multistart_maximize(&mean_obj, domain, opts.mean_starts, split_seed(seed, 2))?.value;

        // Lipschitz estimate: largest finite-difference mean gradient over a
        // fixed set of uniform probes.
        let probes = seeded_uniform(domain, opts.grad_probes, GRAD_PROBE_SEED)?;
        let mut lipschitz = 0.0f64;
        for i in 0..probes.nrows() {
            let x: Vec<f64> = probes.row(i).iter().copied().collect();
            let mut sq = 0.0;
            for j in 0..d {
                let h = 1e-6 * domain.width(j);
                let mut plus = x.clone();
                let mut minus = x.clone();
                plus[j] = (x[j] + h).min(domain.upper()[j]);
                minus[j] = (x[j] - h).max(domain.lower()[j]);
                let span = plus[j] - minus[j];
                if span <= 0.0 {
                    continue;
                }
                let (mp, _) = model.posterior_point(&plus)?;
                let (mm, _) = model.posterior_point(&minus)?;
                let g = (mp - mm) / span;
                sq += g * g;
            }
            lipschitz = lipschitz.max(sq.sqrt());
        }
        let fallback_radius = 0.05 * domain.diameter();

        // Grow the batch by sequentially penalized expected improvement.
        let mut members: Vec<Vec<f64>> = Vec::with_capacity(q);
        let mut radii: Vec<f64> = Vec::with_capacity(q);
        for _ in 0..q {
            let picked = {
                let obj = ObjectiveHandle::new(d, |x: &[f64]| {
                    let ei = match ei_at(model, x, incumbent) {
                        Ok(v) => v,
                        Err(_) => return f64::NEG_INFINITY,
                    };
                    let mut value = ei;
                    for (member, radius) in members.iter().zip(radii.iter()) {
                        let dist = euclidean(x, member);
                        value *= smoothstep(dist, *radius, 1.1 * radius);
                    }
                    value
                });
                direct_maximize(&obj, domain, opts.append_budget)?
            };
            let (member_mean, _) = model.posterior_point(&picked.x)?;
            radii.push(exclusion_radius(
                member_mean,
                mean_max,
                lipschitz,
                fallback_radius,
            ));
            members.push(picked.x);
        }

        let first = members[0].clone();
        let tail = DMatrix::from_fn(q - 1, d, |i, j| members[i + 1][j]);
        Ok(GlassesContext {
            q,
            first,
            tail,
            base,
            incumbent,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn incumbent(&self) -> f64 {
        self.incumbent
    }

    /// The full batch the context was built around (`q × d`), first member
    /// included.
    pub fn batch(&self) -> DMatrix<f64> {
        let d = self.first.len();
        DMatrix::from_fn(self.q, d, |i, j| {
            if i == 0 {
                self.first[j]
            } else {
                self.tail[(i - 1, j)]
            }
        })
    }

    /// Score of a candidate: the joint batch expected improvement of the
    /// candidate together with the context's batch completion. A batch of
    /// one falls back to exact analytic expected improvement.
    pub fn acq(&self, model: &GPModel, x: &[f64]) -> Result<f64> {
        if x.len() != self.first.len() {
            return Err(Error::input(format!(
                "candidate has dimension {} but the context has {}",
                x.len(),
                self.first.len()
            )));
        }
        if self.q == 1 {
            return ei_at(model, x, self.incumbent);
        }
        let d = x.len();
        let batch = DMatrix::from_fn(self.q, d, |i, j| {
            if i == 0 {
                x[j]
            } else {
                self.tail[(i - 1, j)]
            }
        });
        qei_mc(model, &batch, self.incumbent, &self.base)
    }

    /// Maximizes the candidate score over the domain.
    pub fn select(
        &self,
        model: &GPModel,
        domain: &BoxDomain,
        opts: &GlassesOpts,
    ) -> Result<Optimum> {
        let obj = ObjectiveHandle::new(domain.dim(), |x: &[f64]| {
            self.acq(model, x).unwrap_or(f64::NEG_INFINITY)
        });
        direct_maximize(&obj, domain, opts.select_budget)
    }
}

/// Convenience wrapper: builds a fresh context and returns the full batch it
/// grew (`q × d`).
pub fn glasses_batch(
    model: &GPModel,
    domain: &BoxDomain,
    incumbent: f64,
    q: usize,
    seed: u64,
    opts: &GlassesOpts,
) -> Result<DMatrix<f64>> {
    GlassesContext::new(model, domain, incumbent, q, seed, opts).map(|ctx| ctx.batch())
}
