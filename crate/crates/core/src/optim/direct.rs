//! DIRECT (dividing rectangles) global maximization.
//!
//! The classic Jones–Perttunen–Stuckman scheme on the unit cube: the first
//! evaluation is the exact domain center, potentially-optimal rectangles are
//! picked from the lower convex hull in the (size, value) plane with the
//! usual `ε = 1e-4` improvement rule, and each selected rectangle is
//! trisected along its longest sides, best dimension first. The algorithm is
//! fully deterministic and never spends more objective evaluations than the
//! budget allows.

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::optim::{ObjectiveHandle, Optimum};

const EPS_IMPROVEMENT: f64 = 1e-4;

/// One trisection probe: `(axis, value at center - delta, value at
/// center + delta, low point, high point)`.
type AxisSample = (usize, f64, f64, Vec<f64>, Vec<f64>);

struct Rect {
    center: Vec<f64>, // unit-cube coordinates
    levels: Vec<u32>, // trisection count per dimension; side_i = 3^{-levels_i}
    value: f64,       // negated objective at the center
}

impl Rect {
    fn size(&self) -> f64 {
        // Center-to-vertex distance.
        0.5 * self
            .levels
            .iter()
            .map(|&l| 3.0_f64.powi(-2 * l as i32))
            .sum::<f64>()
            .sqrt()
    }
}

struct Evaluator<'a, 'b> {
    obj: &'a ObjectiveHandle<'b>,
    domain: &'a BoxDomain,
    budget: usize,
    used: usize,
    best_value: f64,
    best_unit: Vec<f64>,
}

impl Evaluator<'_, '_> {
    /// Evaluates the negated objective at a unit-cube point, or `None` once
    /// the budget is spent.
    fn eval(&mut self, unit: &[f64]) -> Option<f64> {
        if self.used >= self.budget {
            return None;
        }
        self.used += 1;
        let x = self.domain.from_unit(unit);
        let g = -self.obj.eval(x.as_slice());
        if g < self.best_value {
            self.best_value = g;
            self.best_unit = unit.to_vec();
        }
        Some(g)
    }
}

/// Indices of potentially optimal rectangles.
fn potentially_optimal(rects: &[Rect]) -> Vec<usize> {
    // One representative per size class: the lowest value, ties to the
    // earliest rectangle.
    let mut classes: Vec<(f64, usize)> = Vec::new(); // (size, rect index)
    for (idx, r) in rects.iter().enumerate() {
        let s = r.size();
        match classes
            .iter_mut()
            .find(|(cs, _)| (*cs - s).abs() <= 1e-13 * s.max(1e-300))
        {
            Some(entry) => {
                if r.value < rects[entry.1].value {
                    entry.1 = idx;
                }
            }
            None => classes.push((s, idx)),
        }
    }
    classes.sort_by(|a, b| a.0.total_cmp(&b.0));

    let g_min = classes
        .iter()
        .map(|&(_, i)| rects[i].value)
        .fold(f64::INFINITY, f64::min);
    // Size classes smaller than the best class cannot win for any positive
    // trade-off constant.
    let start = classes
        .iter()
        .position(|&(_, i)| rects[i].value == g_min)
        .unwrap_or(0);
    let pts: Vec<(f64, f64, usize)> = classes[start..]
        .iter()
        .map(|&(s, i)| (s, rects[i].value, i))
        .collect();

    // Lower convex hull over (size, value), sizes ascending.
    let mut hull: Vec<(f64, f64, usize)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Pop b when it lies on or above the chord a -> p.
            if (b.1 - a.1) * (p.0 - a.0) >= (p.1 - a.1) * (b.0 - a.0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }

    // Jones' ε rule: a hull point must promise non-trivial improvement over
    // the incumbent at its hull slope. The largest rectangle always stays.
    let mut selected = Vec::new();
    for w in 0..hull.len() {
        if w + 1 == hull.len() {
            selected.push(hull[w].2);
            break;
        }
        let (d_j, g_j, idx) = hull[w];
        let (d_n, g_n, _) = hull[w + 1];
        let slope = (g_n - g_j) / (d_n - d_j);
        if g_j - slope * d_j <= g_min - EPS_IMPROVEMENT * g_min.abs() {
            selected.push(idx);
        }
    }
    if selected.is_empty() {
        if let Some(last) = hull.last() {
            selected.push(last.2);
        }
    }
    selected
}

/// Maximizes the objective with at most `eval_budget` evaluations and returns
/// the best point found, mapped back to the original box.
pub fn direct_maximize(
    obj: &ObjectiveHandle,
    domain: &BoxDomain,
    eval_budget: usize,
) -> Result<Optimum> {
    obj.check_dim(domain.dim())?;
    if eval_budget == 0 {
        return Err(Error::input("evaluation budget must be at least 1"));
    }
    let d = domain.dim();
    let mut ev = Evaluator {
        obj,
        domain,
        budget: eval_budget,
        used: 0,
        best_value: f64::INFINITY,
        best_unit: vec![0.5; d],
    };

    let center = vec![0.5; d];
    let g0 = ev
        .eval(&center)
        .expect("budget is at least 1, so the center evaluation fits");
    if !g0.is_finite() {
        return Err(Error::numerical(
            "objective is non-finite at the domain center",
        ));
    }
    let mut rects = vec![Rect {
        center,
        levels: vec![0; d],
        value: g0,
    }];

    'outer: while ev.used < ev.budget {
        let selected = potentially_optimal(&rects);
        for idx in selected {
            let (parent_center, mut levels) = {
                let r = &rects[idx];
                (r.center.clone(), r.levels.clone())
            };
            let min_level = *levels.iter().min().expect("levels is non-empty");
            let long_dims: Vec<usize> = (0..d).filter(|&i| levels[i] == min_level).collect();
            let delta = 3.0_f64.powi(-(min_level as i32 + 1));

            // Sample center ± delta along every longest dimension.
            let mut samples: Vec<AxisSample> = Vec::new();
            for &i in &long_dims {
                let mut lo_pt = parent_center.clone();
                lo_pt[i] -= delta;
                let mut hi_pt = parent_center.clone();
                hi_pt[i] += delta;
                let Some(g_lo) = ev.eval(&lo_pt) else {
                    break 'outer;
                };
                let Some(g_hi) = ev.eval(&hi_pt) else {
                    break 'outer;
                };
                samples.push((i, g_lo, g_hi, lo_pt, hi_pt));
            }

            // Divide along the sampled dimensions, best (lowest) first, so
            // good children end up in the larger pieces.
            samples.sort_by(|a, b| {
                let wa = a.1.min(a.2);
                let wb = b.1.min(b.2);
                wa.total_cmp(&wb).then(a.0.cmp(&b.0))
            });
            for (i, g_lo, g_hi, lo_pt, hi_pt) in samples {
                levels[i] += 1;
                rects.push(Rect {
                    center: lo_pt,
                    levels: levels.clone(),
                    value: g_lo,
                });
                rects.push(Rect {
                    center: hi_pt,
                    levels: levels.clone(),
                    value: g_hi,
                });
            }
            rects[idx].levels = levels;
            if ev.used >= ev.budget {
                break 'outer;
            }
        }
    }

    let x = domain.from_unit(&ev.best_unit);
    Ok(Optimum {
        x: x.as_slice().to_vec(),
        value: -ev.best_value,
    })
}
