//! Box-constrained quasi-Newton local search and seeded multistart.
//!
//! The local step is a projected L-BFGS: search directions come from the
//! two-loop recursion, components pressing against an active bound are
//! zeroed, and trial points are clamped back into the box during a
//! backtracking line search. Objectives without an analytic gradient are
//! differentiated by central finite differences with a step of `1e-6` of the
//! box width per dimension (one-sided at the boundary).



use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::optim::{seeded_uniform, ObjectiveHandle, Optimum};

/// Tuning knobs for [`local_maximize_with`].
#[derive(Debug, Clone)]
pub struct LocalOpts {
    /// Maximum number of quasi-Newton iterations.
    pub max_iters: usize,
    /// Stop when the infinity norm of the projected gradient falls below this.
    pub grad_tol: f64,
    /// Number of curvature pairs retained by the two-loop recursion.
    pub memory: usize,
}

impl Default for LocalOpts {
    fn default() -> Self {
        LocalOpts {
            max_iters: 300,
            grad_tol: 1e-10,
            memory: 10,
        }
    }
}

const FD_RELATIVE_STEP: f64 = 1e-6;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

fn fd_gradient(obj: &ObjectiveHandle, domain: &BoxDomain, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for i in 0..x.len() {
        let h = FD_RELATIVE_STEP * domain.width(i);
        let hi = (x[i] + h).min(domain.upper()[i]);
        let lo = (x[i] - h).max(domain.lower()[i]);
        xp[i] = hi;
        xm[i] = lo;
        let span = hi - lo;
        g[i] = if span > 0.0 {
            (obj.eval(&xp) - obj.eval(&xm)) / span
        } else {
            0.0
        };
        xp[i] = x[i];
        xm[i] = x[i];
    }
    g
}

fn gradient_of(obj: &ObjectiveHandle, domain: &BoxDomain, x: &[f64]) -> Vec<f64> {
    match obj.gradient(x) {
        Some(g) => g,
        None => fd_gradient(obj, domain, x),
    }
}

/// Zeroes direction components that push against an active bound.
fn project_active(domain: &BoxDomain, x: &[f64], v: &mut [f64]) {
    for i in 0..x.len() {
        let eps = 1e-12 * domain.width(i);
        let at_lower = x[i] <= domain.lower()[i] + eps;
        let at_upper = x[i] >= domain.upper()[i] - eps;
        if (at_lower && v[i] < 0.0) || (at_upper && v[i] > 0.0) {
            v[i] = 0.0;
        }
    }
}

fn two_loop(grad: &[f64], history: &[(Vec<f64>, Vec<f64>, f64)]) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let alpha = rho * dot(s, &q);
        for i in 0..q.len() {
            q[i] -= alpha * y[i];
        }
        alphas.push(alpha);
    }
    if let Some((s, y, _)) = history.last() {
        let gamma = dot(s, y) / dot(y, y).max(f64::MIN_POSITIVE);
        for v in &mut q {
            *v *= gamma;
        }
    }
    for ((s, y, rho), alpha) in history.iter().zip(alphas.into_iter().rev()) {
        let beta = rho * dot(y, &q);
        for i in 0..q.len() {
            q[i] += (alpha - beta) * s[i];
        }
    }
    q
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Maximizes the objective from `start` with default settings.
///
/// The returned point lies inside the box and its value never falls below
/// the start's value (up to `1e-12`): every accepted step strictly improves
/// and the best visited point is returned.
pub fn local_maximize(
    obj: &ObjectiveHandle,
    domain: &BoxDomain,
    start: &[f64],
) -> Result<Optimum> {
    local_maximize_with(obj, domain, start, &LocalOpts::default())
}

/// [`local_maximize`] with explicit iteration and tolerance settings.
pub fn local_maximize_with(
    obj: &ObjectiveHandle,
    domain: &BoxDomain,
    start: &[f64],
    opts: &LocalOpts,
) -> Result<Optimum> {
    obj.check_dim(domain.dim())?;
    if start.len() != domain.dim() {
        return Err(Error::input(format!(
            "start has dimension {} but domain has {}",
            start.len(),
            domain.dim()
        )));
    }
    if !domain.contains(start) {
        return Err(Error::input("start point lies outside the domain"));
    }

    // Internally minimize the negated objective.
    let mut x: Vec<f64> = domain.clamp(start).as_slice().to_vec();
    let mut fx = -obj.eval(&x);
    if !fx.is_finite() {
        return Err(Error::numerical(
            "objective is non-finite at the start point",
        ));
    }
    let mut grad: Vec<f64> = gradient_of(obj, domain, &x).iter().map(|g| -g).collect();

    let mut best_x = x.clone();
    let mut best_f = fx;
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();

    for _ in 0..opts.max_iters {
        let mut pg = grad.clone();
        project_active(domain, &x, &mut pg);
        if inf_norm(&pg) <= opts.grad_tol {
            break;
        }

        let mut dir: Vec<f64> = two_loop(&grad, &history).iter().map(|v| -v).collect();
        project_active(domain, &x, &mut dir);
        let descent = dot(&dir, &grad);
        let usable = descent.is_finite() && descent < -1e-14 * inf_norm(&dir) * inf_norm(&grad);
        if !usable {
            dir = pg.iter().map(|v| -v).collect();
        }
        if inf_norm(&dir) == 0.0 {
            break;
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let xt: Vec<f64> = (0..x.len())
                .map(|i| (x[i] + t * dir[i]).clamp(domain.lower()[i], domain.upper()[i]))
                .collect();
            let step: Vec<f64> = (0..x.len()).map(|i| xt[i] - x[i]).collect();
            if inf_norm(&step) == 0.0 {
                break;
            }
            let ft = -obj.eval(&xt);
            let slope = dot(&grad, &step);
            if ft.is_finite() && slope < 0.0 && ft <= fx + ARMIJO_C1 * slope {
                accepted = Some((xt, ft, step));
                break;
            }
            t *= 0.5;
        }
        let Some((xt, ft, step)) = accepted else {
            break;
        };

        let grad_new: Vec<f64> = gradient_of(obj, domain, &xt).iter().map(|g| -g).collect();
        let yv: Vec<f64> = (0..x.len()).map(|i| grad_new[i] - grad[i]).collect();
        let sy = dot(&step, &yv);
        if sy > 1e-12 * inf_norm(&step) * inf_norm(&yv) && sy.is_finite() {
            history.push((step, yv, 1.0 / sy));
            if history.len() > opts.memory {
                history.remove(0);
            }
        }
        x = xt;
        fx = ft;
        grad = grad_new;
        if fx < best_f {
            best_f = fx;
            best_x = x.clone();
        }
    }

    Ok(Optimum {
        x: best_x,
        value: -best_f,
    })
}

/// Best of `n_starts` local runs. The first start is the domain center and
/// the remaining `n_starts − 1` are seeded uniform draws, so the start list
/// for `n` is a prefix of the list for `n + 1` and the best value is
/// monotone in `n_starts`. Ties keep the earliest start.
pub fn multistart_maximize(
    obj: &ObjectiveHandle,
    domain: &BoxDomain,
    n_starts: usize,
    seed: u64,
) -> Result<Optimum> {
    multistart_maximize_with(obj, domain, n_starts, seed, &LocalOpts::default())
}

/// [`multistart_maximize`] with explicit local-search settings.
pub fn multistart_maximize_with(
    obj: &ObjectiveHandle,
    domain: &BoxDomain,
    n_starts: usize,
    seed: u64,
    opts: &LocalOpts,
) -> Result<Optimum> {
    if n_starts == 0 {
        return Err(Error::input("n_starts must be at least 1"));
    }
    obj.check_dim(domain.dim())?;
    let center = domain.center();
    let extra = if n_starts > 1 {
        Some(seeded_uniform(domain, n_starts - 1, seed)?)
    } else {
        None
    };
    let mut best: Option<Optimum> = None;
    for k in 0..n_starts {
        let start: Vec<f64> = if k == 0 {
            center.as_slice().to_vec()
        } else {
            let m = extra.as_ref().expect("extra starts exist when n_starts > 1");
            m.row(k - 1).iter().copied().collect()
        };
        let run = local_maximize_with(obj, domain, &start, opts)?;
        let better = match &best {
            None => true,
            Some(b) => run.value > b.value,
        };
        if better {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one start ran"))
}
