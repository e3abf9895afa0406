//! Sequential experiment loop shared by every method: policy descriptions
//! and their text nomenclature, batch-point selection strategies, progress
//! metrics, and a deterministic runner that refits the model each iteration,
//! truncates the batch size to the remaining budget, and records everything
//! needed to reproduce or audit a run.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::acq_bo::{immediate_scores_bo, optimize_ei, optimize_qei, BaseSampleSet};
use crate::acq_bq::{log_observations, warp_posterior, IntegrationPrior, WarpedPosterior};
use crate::domain::{BoxDomain, Dataset};
use crate::error::{Error, Result};
use crate::gp::{fit_on_box, GPHyperparams, KernelKind, NormalizedFit};
use crate::lookahead::{rollout_select, GlassesContext, GlassesOpts, RolloutOpts};
use crate::optim::{rng_from, seeded_uniform, split_seed};

/// Default quasi-Monte Carlo sample count behind batch-improvement scores in
/// the runner. Deliberately lean: it keeps a batch acquisition within a
/// small constant factor of the analytic single-point one, which is the
/// regime the method is meant to live in, and the low-discrepancy base makes
/// it far more accurate than its size suggests. Raise it per spec via
/// [`PolicySpec::with_mc_samples`] when accuracy matters more than latency.
pub const DEFAULT_MC_SAMPLES: usize = 64;

// Seed-stream labels. Every random decision in a run is keyed off
// `split_seed` chains rooted at (base_seed, repeat), so reruns and
// thread-count changes can never shift any draw.
const INIT_STREAM: u64 = 1;
const METRIC_STREAM: u64 = 2;
const ITER_STREAM_BASE: u64 = 1000;
const FIT_STREAM: u64 = 1;
const ACQ_STREAM: u64 = 2;
const SEL_STREAM: u64 = 3;

/// How a single point is chosen out of a proposed batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Highest immediate score; ties break to the lowest index.
    Best,
    /// Random draw with probability proportional to the immediate scores
    /// (uniform if every score is zero).
    Proportional,
    /// Uniform random draw.
    Uniform,
}

impl Selection {
    fn letter(self) -> char {
        match self {
            Selection::Best => 'b',
            Selection::Proportional => 's',
            Selection::Uniform => 'u',
        }
    }

    fn from_letter(s: &str) -> Option<Selection> {
        match s {
            "b" => Some(Selection::Best),
            "s" => Some(Selection::Proportional),
            "u" => Some(Selection::Uniform),
            _ => None,
        }
    }
}

/// Picks one index from a batch given the non-negative immediate scores of
/// its members. Deterministic for a fixed seed.
pub fn select_from_batch(scores: &[f64], strategy: Selection, seed: u64) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::input("cannot select from an empty batch"));
    }
    for (i, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            return Err(Error::input(format!("score {i} is not finite: {s}")));
        }
        if s < 0.0 {
            return Err(Error::input(format!("score {i} is negative: {s}")));
        }
    }
    let n = scores.len();
    if n == 1 {
        return Ok(0);
    }
    let mut rng = rng_from(seed);
    Ok(match strategy {
        Selection::Best => {
            let mut best = 0;
            for i in 1..n {
                if scores[i] > scores[best] {
                    best = i;
                }
            }
            best
        }
        Selection::Proportional => {
            let total: f64 = scores.iter().sum();
            if total <= 0.0 {
                rng.random_range(0..n)
            } else {
                let draw = rng.random::<f64>() * total;
                let mut cumulative = 0.0;
                let mut chosen = n - 1;
                for (i, &s) in scores.iter().enumerate() {
                    cumulative += s;
                    if draw < cumulative {
                        chosen = i;
                        break;
                    }
                }
                chosen
            }
        }
        Selection::Uniform => rng.random_range(0..n),
    })
}

/// What a policy does each iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicyKind {
    /// Uniform random search (baseline; valid for both tasks).
    Random,
    /// Analytic expected improvement (myopic BO baseline).
    Ei,
    /// Batch expected improvement sized to the remaining budget (capped at
    /// `q`), with one batch member executed per iteration.
    BatchEi { q: usize, selection: Selection },
    /// Maximal posterior variance (myopic BQ baseline).
    Unct,
    /// Batch entropy (log-determinant) objective sized like `BatchEi`, for
    /// integration tasks.
    BatchDpp { q: usize, selection: Selection },
    /// Rollout lookahead: simulates `q` future myopic steps, integrating
    /// outcomes with `gh_nodes` Gauss–Hermite nodes.
    Rollout { q: usize, gh_nodes: usize },
    /// GLASSES-style lookahead: scores each candidate jointly with a
    /// heuristically penalized completion batch of size `q`.
    Glasses { q: usize },
}

/// A policy plus the sampling effort behind its batch scores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// Quasi-Monte Carlo draws behind batch-improvement evaluations.
    pub mc_samples: usize,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        PolicySpec {
            kind,
            mc_samples: DEFAULT_MC_SAMPLES,
        }
    }

    pub fn with_mc_samples(mut self, mc_samples: usize) -> Self {
        self.mc_samples = mc_samples;
        self
    }

    /// Largest batch the policy ever proposes (before budget truncation).
    pub fn q(&self) -> usize {
        match self.kind {
            PolicyKind::Random | PolicyKind::Ei | PolicyKind::Unct => 1,
            PolicyKind::BatchEi { q, .. }
            | PolicyKind::BatchDpp { q, .. }
            | PolicyKind::Rollout { q, .. }
            | PolicyKind::Glasses { q } => q,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.q() == 0 {
            return Err(Error::input("policy batch size must be at least 1"));
        }
        if let PolicyKind::Rollout { gh_nodes, .. } = self.kind {
            if gh_nodes == 0 {
                return Err(Error::input("rollout needs at least one quadrature node"));
            }
        }
        if self.mc_samples == 0 {
            return Err(Error::input("mc_samples must be at least 1"));
        }
        Ok(())
    }
}

const POLICY_GRAMMAR: &str = "q.EI.{b|s|u} | q.DPP.{b|s|u} | q.R.n | q.G | EI | UNCT | Rand";

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PolicyKind::Random => write!(f, "Rand"),
            PolicyKind::Ei => write!(f, "EI"),
            PolicyKind::Unct => write!(f, "UNCT"),
            PolicyKind::BatchEi { q, selection } => write!(f, "{q}.EI.{}", selection.letter()),
            PolicyKind::BatchDpp { q, selection } => write!(f, "{q}.DPP.{}", selection.letter()),
            PolicyKind::Rollout { q, gh_nodes } => write!(f, "{q}.R.{gh_nodes}"),
            PolicyKind::Glasses { q } => write!(f, "{q}.G"),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<PolicySpec> {
        let bad = || Error::input(format!("unrecognized policy '{s}'; expected {POLICY_GRAMMAR}"));
        let kind = match s {
            "EI" => PolicyKind::Ei,
            "UNCT" => PolicyKind::Unct,
            "Rand" => PolicyKind::Random,
            _ => {
                let parts: Vec<&str> = s.split('.').collect();
                let q: usize = parts
                    .first()
                    .and_then(|p| p.parse().ok())
                    .filter(|&q| q >= 1)
                    .ok_or_else(bad)?;
                match parts.as_slice() {
                    [_, "G"] => PolicyKind::Glasses { q },
                    [_, "R", n] => {
                        let gh_nodes: usize =
                            n.parse().ok().filter(|&n| n >= 1).ok_or_else(bad)?;
                        PolicyKind::Rollout { q, gh_nodes }
                    }
                    [_, "EI", sel] => {
                        let selection = Selection::from_letter(sel).ok_or_else(bad)?;
                        PolicyKind::BatchEi { q, selection }
                    }
                    [_, "DPP", sel] => {
                        let selection = Selection::from_letter(sel).ok_or_else(bad)?;
                        PolicyKind::BatchDpp { q, selection }
                    }
                    _ => return Err(bad()),
                }
            }
        };
        Ok(PolicySpec::new(kind))
    }
}

/// Goal of an experiment, with the reference value (when known) used for
/// progress metrics.
#[derive(Debug, Clone)]
pub enum Task {
    Maximize {
        known_optimum: Option<f64>,
    },
    Integrate {
        prior: IntegrationPrior,
        known_integral: Option<f64>,
    },
}

impl Task {
    pub fn is_maximize(&self) -> bool {
        matches!(self, Task::Maximize { .. })
    }
}

/// A deterministic objective over a box, together with its task.
pub struct Objective {
    evaluate: EvalFn,
    domain: BoxDomain,
    task: Task,
}

type EvalFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

impl Objective {
    pub fn maximize<F>(domain: BoxDomain, f: F) -> Objective
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Objective {
            evaluate: Box::new(f),
            domain,
            task: Task::Maximize {
                known_optimum: None,
            },
        }
    }

    pub fn integrate<F>(domain: BoxDomain, prior: IntegrationPrior, f: F) -> Objective
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Objective {
            evaluate: Box::new(f),
            domain,
            task: Task::Integrate {
                prior,
                known_integral: None,
            },
        }
    }

    /// Records the true maximum for GAP reporting.
    pub fn with_known_optimum(mut self, value: f64) -> Result<Objective> {
        if !value.is_finite() {
            return Err(Error::input("known optimum must be finite"));
        }
        match &mut self.task {
            Task::Maximize { known_optimum } => *known_optimum = Some(value),
            Task::Integrate { .. } => {
                return Err(Error::input(
                    "known optimum only applies to maximization tasks",
                ))
            }
        }
        Ok(self)
    }

    /// Records the true normalized integral (prior expectation of the
    /// integrand) for fractional-error reporting.
    pub fn with_known_integral(mut self, value: f64) -> Result<Objective> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::input("known integral must be finite and positive"));
        }
        match &mut self.task {
            Task::Integrate { known_integral, .. } => *known_integral = Some(value),
            Task::Maximize { .. } => {
                return Err(Error::input(
                    "known integral only applies to integration tasks",
                ))
            }
        }
        Ok(self)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        (self.evaluate)(x)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn task(&self) -> &Task {
        &self.task
    }
}

/// Normalized optimization progress `(best − y₀)/(y* − y₀)`, clipped to
/// [0, 1]. When the initial best already matches or beats the reference
/// optimum the measure degenerates; it is defined as 1 once the reference is
/// reached and 0 otherwise, and runs hitting that case carry a flag.
pub fn gap(best_observed: f64, y_init_best: f64, y_star: f64) -> f64 {
    let denom = y_star - y_init_best;
    if denom <= 0.0 {
        return if best_observed >= y_star { 1.0 } else { 0.0 };
    }
    ((best_observed - y_init_best) / denom).clamp(0.0, 1.0)
}

/// Relative error `|Z − Ẑ|/Z` of an integral estimate against a positive
/// reference value.
pub fn fractional_error(z_hat: f64, z_true: f64) -> f64 {
    (z_hat - z_true).abs() / z_true
}

/// Runner knobs that are independent of the policy itself.
#[derive(Debug, Clone)]
pub struct RunSettings {
    /// Hyperparameter-fit restarts per iteration (the first is warm).
    pub fit_restarts: usize,
    /// Multistart count for acquisition maximization.
    pub acq_starts: usize,
    /// Prior nodes behind the integral-estimate metric.
    pub metric_nodes: usize,
    /// Record wall-clock acquisition times; disable for byte-reproducible
    /// output files.
    pub timing: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            fit_restarts: 10,
            acq_starts: 10,
            metric_nodes: 2048,
            timing: true,
        }
    }
}

/// One sequential decision and its outcome.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Proposed batch (original coordinates, one row per member).
    pub batch: DMatrix<f64>,
    /// The point actually evaluated.
    pub selected: Vec<f64>,
    pub observed: f64,
    /// Wall-clock seconds spent inside acquisition optimization (zero when
    /// timing is disabled).
    pub acq_seconds: f64,
    /// GAP (maximization) or fractional integral error (integration) after
    /// this observation; NaN when no reference value is known or the GAP is
    /// degenerate.
    pub metric: f64,
}

/// Complete, reproducible trace of one run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    /// Canonical policy string.
    pub policy: String,
    pub base_seed: u64,
    pub repeat: usize,
    pub init_points: DMatrix<f64>,
    pub init_values: DVector<f64>,
    pub iterations: Vec<IterationRecord>,
    /// Fitted hyperparameters per iteration (normalized model coordinates).
    pub hyper_trace: Vec<GPHyperparams>,
    /// The reference optimum was already matched by the initial design, so
    /// GAP carries no signal for this run.
    pub degenerate_gap: bool,
    /// Diagnostic set when a non-finite observation aborted the run.
    pub abort: Option<String>,
}

impl RunRecord {
    pub fn aborted(&self) -> bool {
        self.abort.is_some()
    }

    pub fn metric_trace(&self) -> Vec<f64> {
        self.iterations.iter().map(|it| it.metric).collect()
    }

    pub fn final_metric(&self) -> Option<f64> {
        self.iterations.last().map(|it| it.metric)
    }

    pub fn best_observed(&self) -> f64 {
        let init = self.init_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.iterations
            .iter()
            .map(|it| it.observed)
            .fold(init, f64::max)
    }
}

/// What an acquisition step proposed, before one point is executed.
enum Proposal {
    /// A batch whose members carry immediate scores; one is drawn by the
    /// policy's selection strategy.
    Scored {
        batch: DMatrix<f64>,
        scores: Vec<f64>,
        selection: Selection,
    },
    /// A single decided point (the batch is still recorded when the method
    /// reasoned over one, as GLASSES does).
    Decided { batch: DMatrix<f64>, point: Vec<f64> },
}

fn policy_task_mismatch(spec: &PolicySpec, task: &Task) -> Option<Error> {
    let maximize = task.is_maximize();
    let wrong = match spec.kind {
        PolicyKind::Random => false,
        PolicyKind::Ei
        | PolicyKind::BatchEi { .. }
        | PolicyKind::Rollout { .. }
        | PolicyKind::Glasses { .. } => !maximize,
        PolicyKind::Unct | PolicyKind::BatchDpp { .. } => maximize,
    };
    wrong.then(|| {
        Error::input(format!(
            "policy {} does not apply to {} tasks",
            spec,
            if maximize { "maximization" } else { "integration" }
        ))
    })
}

fn matrix_row(m: &DMatrix<f64>, i: usize) -> Vec<f64> {
    m.row(i).iter().copied().collect()
}

/// Maps a batch of unit-cube rows back to original coordinates.
fn batch_from_unit(fit: &NormalizedFit, batch: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = batch.clone();
    for i in 0..batch.nrows() {
        let row = fit.from_unit(&matrix_row(batch, i));
        for (j, v) in row.iter().enumerate() {
            out[(i, j)] = *v;
        }
    }
    out
}

/// Multistart budget for a joint batch optimization. The configured count
/// is treated as effort per proposed point: a batch problem is one search
/// whose evaluations already cost roughly `q` single-point ones, so giving
/// every batch size the full count would make acquisition cost grow
/// superlinearly in `q` while adding little — random multistart coverage of
/// a `q·d`-dimensional space is thin at any affordable count, and the ascent
/// itself spreads the batch. A floor of three keeps degenerate landscapes
/// from hinging on one start.
fn batch_starts(acq_starts: usize, q_eff: usize) -> usize {
    (acq_starts / q_eff.max(1)).max(3)
}

/// Acquisition step for maximization tasks. Works in the fit's normalized
/// coordinates and returns original-coordinate proposals.
fn propose_bo(
    fit: &NormalizedFit,
    spec: &PolicySpec,
    q_eff: usize,
    best_value: f64,
    settings: &RunSettings,
    acq_seed: u64,
) -> Result<Proposal> {
    let model = fit.model();
    let unit = BoxDomain::cube(model.dim(), 0.0, 1.0)?;
    let incumbent = fit.standardize_y(best_value);

    // Every batch policy collapses to the analytic single-point acquisition
    // once the remaining budget forces q_eff = 1, which also makes the final
    // decision of every run exactly the myopic one.
    let single_point = |seed: u64| -> Result<Proposal> {
        let opt = optimize_ei(model, &unit, incumbent, settings.acq_starts, seed)?;
        let point = fit.from_unit(&opt.x);
        let batch = DMatrix::from_row_slice(1, point.len(), &point);
        Ok(Proposal::Decided { batch, point })
    };

    match spec.kind {
        PolicyKind::Ei => single_point(acq_seed),
        PolicyKind::BatchEi { selection, .. } => {
            if q_eff == 1 {
                return single_point(acq_seed);
            }
            let base =
                BaseSampleSet::quasi_monte_carlo(spec.mc_samples, q_eff, split_seed(acq_seed, 1))?;
            let batch_unit = optimize_qei(
                model,
                &unit,
                q_eff,
                incumbent,
                &base,
                batch_starts(settings.acq_starts, q_eff),
                acq_seed,
            )?;
            let scores = immediate_scores_bo(model, &batch_unit, incumbent)?;
            Ok(Proposal::Scored {
                batch: batch_from_unit(fit, &batch_unit),
                scores,
                selection,
            })
        }
        PolicyKind::Rollout { gh_nodes, .. } => {
            if q_eff == 1 {
                return single_point(acq_seed);
            }
            let opts = RolloutOpts {
                horizon: q_eff,
                gh_nodes,
                ..RolloutOpts::default()
            };
            let opt = rollout_select(model, &unit, incumbent, &opts)?;
            let point = fit.from_unit(&opt.x);
            let batch = DMatrix::from_row_slice(1, point.len(), &point);
            Ok(Proposal::Decided { batch, point })
        }
        PolicyKind::Glasses { .. } => {
            if q_eff == 1 {
                return single_point(acq_seed);
            }
            let opts = GlassesOpts::default();
            let ctx = GlassesContext::new(model, &unit, incumbent, q_eff, acq_seed, &opts)?;
            let opt = ctx.select(model, &unit, &opts)?;
            let point = fit.from_unit(&opt.x);
            Ok(Proposal::Decided {
                batch: batch_from_unit(fit, &ctx.batch()),
                point,
            })
        }
        _ => unreachable!("task compatibility is checked before proposing"),
    }
}

/// Acquisition step for integration tasks, in original coordinates.
fn propose_bq(
    warped: &WarpedPosterior,
    spec: &PolicySpec,
    q_eff: usize,
    settings: &RunSettings,
    acq_seed: u64,
) -> Result<Proposal> {
    // The batch entropy objective at q = 1 is a monotone transform of the
    // posterior variance, so the truncated case reuses the plain
    // uncertainty-sampling maximizer.
    let single_point = |seed: u64| -> Result<Proposal> {
        let opt = warped.optimize_unct(settings.acq_starts, seed)?;
        let batch = DMatrix::from_row_slice(1, opt.x.len(), &opt.x);
        Ok(Proposal::Decided { batch, point: opt.x })
    };

    match spec.kind {
        PolicyKind::Unct => single_point(acq_seed),
        PolicyKind::BatchDpp { selection, .. } => {
            if q_eff == 1 {
                return single_point(acq_seed);
            }
            let batch =
                warped.optimize_dpp(q_eff, batch_starts(settings.acq_starts, q_eff), acq_seed)?;
            let scores = crate::acq_bq::immediate_scores_bq(warped, &batch)?;
            Ok(Proposal::Scored {
                batch,
                scores,
                selection,
            })
        }
        _ => unreachable!("task compatibility is checked before proposing"),
    }
}

/// Runs one policy for `budget` sequential evaluations after an `n_init`
/// seeded-uniform initial design, refitting hyperparameters every iteration
/// (warm-started) and truncating the proposal batch to the remaining budget.
/// All randomness derives from `(base_seed, repeat)`, so identical inputs
/// produce bit-identical records; runs sharing those seeds also share their
/// initial design across policies, which keeps paired significance tests
/// valid.
pub fn run_policy(
    obj: &Objective,
    spec: &PolicySpec,
    budget: usize,
    n_init: usize,
    base_seed: u64,
    repeat: usize,
    settings: &RunSettings,
) -> Result<RunRecord> {
    spec.validate()?;
    if budget == 0 {
        return Err(Error::input("budget must be at least 1"));
    }
    if n_init == 0 {
        return Err(Error::input("initial design needs at least one point"));
    }
    if let Some(err) = policy_task_mismatch(spec, obj.task()) {
        return Err(err);
    }

    let domain = obj.domain();
    let d = domain.dim();
    let run_root = split_seed(base_seed, repeat as u64);
    let init_seed = split_seed(run_root, INIT_STREAM);
    let metric_seed = split_seed(run_root, METRIC_STREAM);

    let init_points = seeded_uniform(domain, n_init, init_seed)?;
    let mut record = RunRecord {
        policy: spec.to_string(),
        base_seed,
        repeat,
        init_points: init_points.clone(),
        init_values: DVector::zeros(n_init),
        iterations: Vec::with_capacity(budget),
        hyper_trace: Vec::with_capacity(budget),
        degenerate_gap: false,
        abort: None,
    };

    // Flat row-major storage for the growing design.
    let mut flat: Vec<f64> = Vec::with_capacity((n_init + budget) * d);
    let mut values: Vec<f64> = Vec::with_capacity(n_init + budget);
    for i in 0..n_init {
        let x = matrix_row(&init_points, i);
        let y = obj.evaluate(&x);
        record.init_values[i] = y;
        if !y.is_finite() {
            record.abort = Some(format!(
                "initial observation {i} at {x:?} is not finite ({y})"
            ));
            return Ok(record);
        }
        flat.extend_from_slice(&x);
        values.push(y);
    }
    let y_init_best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let (y_star, z_true) = match obj.task() {
        Task::Maximize { known_optimum } => (*known_optimum, None),
        Task::Integrate { known_integral, .. } => (None, *known_integral),
    };
    if let Some(y_star) = y_star {
        record.degenerate_gap = y_star <= y_init_best;
    }

    let mut warm: Option<GPHyperparams> = None;
    for i in 0..budget {
        let iter_seed = split_seed(run_root, ITER_STREAM_BASE + i as u64);
        let fit_seed = split_seed(iter_seed, FIT_STREAM);
        let acq_seed = split_seed(iter_seed, ACQ_STREAM);
        let sel_seed = split_seed(iter_seed, SEL_STREAM);

        let n = values.len();
        let points = DMatrix::from_row_slice(n, d, &flat);
        let raw = DVector::from_column_slice(&values);
        let (kind, data) = match obj.task() {
            Task::Maximize { .. } => (KernelKind::Matern52, Dataset::new(points, raw)?),
            Task::Integrate { .. } => {
                let (logs, _) = log_observations(&raw)?;
                (KernelKind::Matern32, Dataset::new(points, logs)?)
            }
        };
        let fit = fit_on_box(kind, &data, domain, settings.fit_restarts, fit_seed, warm.as_ref())?;
        record.hyper_trace.push(fit.model().hyper().clone());
        warm = Some(fit.model().hyper().clone());

        let remaining = budget - i;
        let q_eff = spec.q().min(remaining);

        let started = Instant::now();
        let proposal = match (&spec.kind, obj.task()) {
            (PolicyKind::Random, _) => {
                let point = matrix_row(&seeded_uniform(domain, 1, acq_seed)?, 0);
                let batch = DMatrix::from_row_slice(1, d, &point);
                Proposal::Decided { batch, point }
            }
            (_, Task::Maximize { .. }) => {
                let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                propose_bo(&fit, spec, q_eff, best, settings, acq_seed)?
            }
            (_, Task::Integrate { .. }) => {
                let warped = warp_posterior(&fit);
                propose_bq(&warped, spec, q_eff, settings, acq_seed)?
            }
        };
        let (batch, selected) = match proposal {
            Proposal::Decided { batch, point } => (batch, point),
            Proposal::Scored {
                batch,
                scores,
                selection,
            } => {
                let idx = select_from_batch(&scores, selection, sel_seed)?;
                let point = matrix_row(&batch, idx);
                (batch, point)
            }
        };
        let acq_seconds = if settings.timing {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        };

        let observed = obj.evaluate(&selected);
        if !observed.is_finite() {
            record.abort = Some(format!(
                "observation at iteration {i} at {selected:?} is not finite ({observed})"
            ));
            return Ok(record);
        }
        flat.extend_from_slice(&selected);
        values.push(observed);

        let metric = match obj.task() {
            Task::Maximize { .. } => match y_star {
                Some(y_star) if !record.degenerate_gap => {
                    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    gap(best, y_init_best, y_star)
                }
                _ => f64::NAN,
            },
            Task::Integrate { prior, .. } => match z_true {
                Some(z_true) => {
                    // Fold the new observation into the current fit (same
                    // hyperparameters; the full refit happens next
                    // iteration) and estimate the normalized integral.
                    let (logs, _) = log_observations(&DVector::from_column_slice(&values))?;
                    let cond = fit.condition_original(&selected, logs[values.len() - 1])?;
                    let z = warp_posterior(&cond).integral_mean(
                        prior,
                        settings.metric_nodes,
                        metric_seed,
                    )?;
                    fractional_error(z, z_true)
                }
                None => f64::NAN,
            },
        };

        record.iterations.push(IterationRecord {
            iteration: i,
            batch,
            selected,
            observed,
            acq_seconds,
            metric,
        });
    }

    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> PolicySpec {
        s.parse().unwrap()
    }

    #[test]
    fn policy_strings_round_trip() {
        for s in [
            "EI", "UNCT", "Rand", "8.EI.s", "2.EI.b", "4.EI.u", "2.DPP.b", "3.DPP.s", "2.R.10",
            "5.R.32", "3.G",
        ] {
            assert_eq!(parse(s).to_string(), s, "round trip of {s}");
        }
    }

    #[test]
    fn malformed_policy_strings_are_rejected_with_the_grammar() {
        for s in ["", "EI.q", "0.EI.s", "2.EI.x", "2.R", "q.G", "8.EI", "ei", "2.dpp.b"] {
            let err = s.parse::<PolicySpec>().unwrap_err().to_string();
            assert!(err.contains("q.EI."), "error for {s:?} should cite the grammar: {err}");
        }
    }

    #[test]
    fn single_member_batches_select_index_zero_for_every_strategy() {
        for strategy in [Selection::Best, Selection::Proportional, Selection::Uniform] {
            assert_eq!(select_from_batch(&[0.7], strategy, 9).unwrap(), 0);
        }
    }

    #[test]
    fn best_selection_takes_the_argmax_and_breaks_ties_low() {
        assert_eq!(select_from_batch(&[0.0, 5.0], Selection::Best, 1).unwrap(), 1);
        assert_eq!(
            select_from_batch(&[2.0, 7.0, 7.0, 1.0], Selection::Best, 1).unwrap(),
            1
        );
    }

    #[test]
    fn negative_or_non_finite_scores_are_input_errors() {
        assert!(select_from_batch(&[1.0, -0.1], Selection::Best, 0).is_err());
        assert!(select_from_batch(&[1.0, f64::NAN], Selection::Uniform, 0).is_err());
        assert!(select_from_batch(&[], Selection::Best, 0).is_err());
    }

    #[test]
    fn proportional_selection_matches_score_ratios() {
        // Scores (1, 3): index 1 should be drawn close to 3/4 of the time.
        let draws = 100_000;
        let mut ones = 0;
        for k in 0..draws {
            if select_from_batch(&[1.0, 3.0], Selection::Proportional, k).unwrap() == 1 {
                ones += 1;
            }
        }
        let freq = ones as f64 / draws as f64;
        assert!((freq - 0.75).abs() < 0.01, "frequency {freq} should be near 0.75");
    }

    #[test]
    fn proportional_selection_with_zero_scores_falls_back_to_uniform() {
        let draws = 100_000;
        let mut ones = 0;
        for k in 0..draws {
            if select_from_batch(&[0.0, 0.0], Selection::Proportional, k).unwrap() == 1 {
                ones += 1;
            }
        }
        let freq = ones as f64 / draws as f64;
        assert!((freq - 0.5).abs() < 0.02, "frequency {freq} should be near 0.5");
    }

    #[test]
    fn selection_is_deterministic_for_a_fixed_seed() {
        let scores = [0.2, 0.5, 0.3];
        for strategy in [Selection::Proportional, Selection::Uniform] {
            let a = select_from_batch(&scores, strategy, 1234).unwrap();
            let b = select_from_batch(&scores, strategy, 1234).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn gap_interpolates_and_clips() {
        assert_eq!(gap(0.0, 0.0, 2.0), 0.0);
        assert_eq!(gap(2.0, 0.0, 2.0), 1.0);
        assert_eq!(gap(1.2, 0.0, 2.0), 0.6);
        assert_eq!(gap(3.0, 0.0, 2.0), 1.0);
        // Degenerate reference: defined by whether the reference is reached.
        assert_eq!(gap(5.0, 5.0, 4.0), 1.0);
        assert_eq!(gap(3.0, 5.0, 4.0), 0.0);
    }

    #[test]
    fn fractional_error_examples() {
        assert_eq!(fractional_error(0.5, 0.5), 0.0);
        assert_eq!(fractional_error(0.0, 0.5), 1.0);
        assert!((fractional_error(0.45, 0.5) - 0.1).abs() < 1e-15);
    }

    fn quadratic_objective() -> Objective {
        let domain = BoxDomain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        Objective::maximize(domain, |x: &[f64]| {
            1.0 - x.iter().map(|v| v * v).sum::<f64>()
        })
        .with_known_optimum(1.0)
        .unwrap()
    }

    fn light_settings() -> RunSettings {
        RunSettings {
            fit_restarts: 3,
            acq_starts: 4,
            metric_nodes: 256,
            timing: false,
        }
    }

    #[test]
    fn batch_ei_with_budget_one_behaves_exactly_as_ei() {
        let obj = quadratic_objective();
        let settings = light_settings();
        let ei = run_policy(&obj, &parse("EI"), 1, 4, 99, 0, &settings).unwrap();
        let qei = run_policy(&obj, &parse("8.EI.s"), 1, 4, 99, 0, &settings).unwrap();
        assert_eq!(ei.iterations[0].selected, qei.iterations[0].selected);
        assert_eq!(ei.iterations[0].observed, qei.iterations[0].observed);
        assert_eq!(qei.iterations[0].batch.nrows(), 1);
    }

    #[test]
    fn random_policy_points_come_from_the_seeded_uniform_stream() {
        let obj = quadratic_objective();
        let record = run_policy(&obj, &parse("Rand"), 3, 2, 7, 4, &light_settings()).unwrap();
        let run_root = split_seed(7, 4);
        for (i, it) in record.iterations.iter().enumerate() {
            let acq_seed = split_seed(split_seed(run_root, 1000 + i as u64), 2);
            let expected = seeded_uniform(obj.domain(), 1, acq_seed).unwrap();
            assert_eq!(it.selected, matrix_row(&expected, 0), "iteration {i}");
        }
    }

    #[test]
    fn reruns_are_bit_identical() {
        let obj = quadratic_objective();
        let settings = light_settings();
        let a = run_policy(&obj, &parse("2.EI.s"), 3, 3, 11, 2, &settings).unwrap();
        let b = run_policy(&obj, &parse("2.EI.s"), 3, 3, 11, 2, &settings).unwrap();
        assert_eq!(a.init_points, b.init_points);
        for (x, y) in a.iterations.iter().zip(&b.iterations) {
            assert_eq!(x.batch, y.batch);
            assert_eq!(x.selected, y.selected);
            assert_eq!(x.observed, y.observed);
            assert_eq!(x.metric.to_bits(), y.metric.to_bits());
        }
    }

    #[test]
    fn gap_trace_is_monotone_and_batches_shrink_with_the_remaining_budget() {
        let obj = quadratic_objective();
        let record = run_policy(&obj, &parse("8.EI.b"), 3, 4, 5, 0, &light_settings()).unwrap();
        assert_eq!(record.iterations.len(), 3);
        let sizes: Vec<usize> = record.iterations.iter().map(|it| it.batch.nrows()).collect();
        assert_eq!(sizes, vec![3, 2, 1], "q_eff = min(8, remaining budget)");
        if !record.degenerate_gap {
            let trace = record.metric_trace();
            for w in trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-15, "GAP trace must not decrease: {trace:?}");
            }
        }
    }

    #[test]
    fn policies_reject_mismatched_tasks() {
        let bo = quadratic_objective();
        assert!(run_policy(&bo, &parse("UNCT"), 1, 2, 0, 0, &light_settings()).is_err());
        assert!(run_policy(&bo, &parse("2.DPP.b"), 1, 2, 0, 0, &light_settings()).is_err());

        let domain = BoxDomain::new(vec![0.0], vec![1.0]).unwrap();
        let bq = Objective::integrate(domain, IntegrationPrior::UniformBox, |x: &[f64]| {
            1.0 + x[0]
        })
        .with_known_integral(1.5)
        .unwrap();
        assert!(run_policy(&bq, &parse("EI"), 1, 2, 0, 0, &light_settings()).is_err());
        assert!(run_policy(&bq, &parse("2.G"), 1, 2, 0, 0, &light_settings()).is_err());
    }

    #[test]
    fn integration_runs_report_fractional_error_metrics() {
        let domain = BoxDomain::new(vec![0.0], vec![1.0]).unwrap();
        let obj = Objective::integrate(domain, IntegrationPrior::UniformBox, |x: &[f64]| {
            1.0 + x[0]
        })
        .with_known_integral(1.5)
        .unwrap();
        let record = run_policy(&obj, &parse("2.DPP.s"), 3, 3, 21, 0, &light_settings()).unwrap();
        assert_eq!(record.iterations.len(), 3);
        let sizes: Vec<usize> = record.iterations.iter().map(|it| it.batch.nrows()).collect();
        assert_eq!(sizes, vec![2, 2, 1]);
        for it in &record.iterations {
            assert!(it.metric.is_finite() && it.metric >= 0.0);
        }
        // A smooth near-linear integrand observed at several points should
        // be estimated to within a loose tolerance already.
        assert!(record.final_metric().unwrap() < 0.5);
    }

    #[test]
    fn non_finite_observations_abort_with_a_diagnostic() {
        let domain = BoxDomain::new(vec![0.0], vec![1.0]).unwrap();
        let obj = Objective::maximize(domain, |_: &[f64]| f64::NAN);
        let record = run_policy(&obj, &parse("EI"), 2, 2, 3, 0, &light_settings()).unwrap();
        assert!(record.aborted());
        assert!(record.iterations.is_empty());
        assert!(record.abort.unwrap().contains("not finite"));
    }

    #[test]
    fn degenerate_gap_runs_are_flagged() {
        let domain = BoxDomain::new(vec![0.0], vec![1.0]).unwrap();
        // Constant objective: the initial best already equals the "optimum".
        let obj = Objective::maximize(domain, |_: &[f64]| 2.0)
            .with_known_optimum(2.0)
            .unwrap();
        let record = run_policy(&obj, &parse("Rand"), 1, 2, 0, 0, &light_settings()).unwrap();
        assert!(record.degenerate_gap);
        assert!(record.iterations[0].metric.is_nan());
    }
}
