//! One-dimensional acquisition demonstration.
//!
//! The classic two-endpoint setup: a unit-variance Matérn-5/2 posterior on
//! `[-1, 1]` conditioned on observations of zero at both endpoints, with the
//! incumbent at zero. The command dumps three acquisition curves over a dense
//! grid — analytic expected improvement, the two-point batch-improvement
//! objective sliced through the optimal pair, and two-step lookahead — plus
//! each method's chosen point(s), as a `series,x,value` CSV for external
//! plotting. Myopic EI peaks at the center; both batch and lookahead
//! acquisitions instead split toward a symmetric pair, which is the whole
//! story the picture tells.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use sedkit_core::acq_bo::{ei_at, optimize_ei, optimize_qei, qei_mc, BaseSampleSet};
use sedkit_core::gp::{GPHyperparams, GPModel, KernelKind};
use sedkit_core::lookahead::rollout_acq_grid;
use sedkit_core::optim::split_seed;
use sedkit_core::{BoxDomain, Dataset};

use crate::error::Result;
use crate::format::fmt_real;
use crate::runner::write_atomic;

/// Grid resolution of every dumped curve.
pub const DEMO_GRID: usize = 401;
/// Gauss–Hermite nodes behind the two-step lookahead curve.
pub const DEMO_GH_NODES: usize = 32;
/// Monte Carlo draws behind the batch-improvement curve.
pub const DEMO_MC_SAMPLES: usize = 8192;

const DEMO_LENGTHSCALE: f64 = 0.25;
const DEMO_NOISE: f64 = 1e-6;

/// The demonstration posterior: zeros observed at ±1, incumbent 0.
pub fn demo_model() -> Result<(GPModel, BoxDomain)> {
    let domain = BoxDomain::cube(1, -1.0, 1.0)?;
    let data = Dataset::new(
        DMatrix::from_column_slice(2, 1, &[-1.0, 1.0]),
        DVector::from_column_slice(&[0.0, 0.0]),
    )?;
    let hyper = GPHyperparams {
        mean: 0.0,
        signal_variance: 1.0,
        lengthscales: vec![DEMO_LENGTHSCALE],
        noise_variance: DEMO_NOISE,
    };
    Ok((GPModel::new(KernelKind::Matern52, hyper, data)?, domain))
}

/// The dense evaluation grid over `[-1, 1]`.
pub fn demo_grid() -> Vec<f64> {
    (0..DEMO_GRID)
        .map(|i| -1.0 + 2.0 * i as f64 / (DEMO_GRID - 1) as f64)
        .collect()
}

fn push_series(out: &mut String, series: &str, xs: &[f64], values: &[f64]) {
    for (x, v) in xs.iter().zip(values) {
        out.push_str(&format!("{series},{},{}\n", fmt_real(*x), fmt_real(*v)));
    }
}

/// Computes all curves and choices and writes them to `out`.
pub fn cmd_demo1d(out: &Path, seed: u64) -> Result<()> {
    let (model, domain) = demo_model()?;
    let incumbent = 0.0;
    let grid = demo_grid();

    let ei_curve: Vec<f64> = grid
        .iter()
        .map(|&x| ei_at(&model, &[x], incumbent))
        .collect::<sedkit_core::Result<_>>()?;
    let ei_choice = optimize_ei(&model, &domain, incumbent, 16, split_seed(seed, 3))?;

    let base = BaseSampleSet::quasi_monte_carlo(DEMO_MC_SAMPLES, 2, split_seed(seed, 1))?;
    let pair = optimize_qei(&model, &domain, 2, incumbent, &base, 16, split_seed(seed, 2))?;
    let (lo, hi) = {
        let (a, b) = (pair[(0, 0)], pair[(1, 0)]);
        (a.min(b), a.max(b))
    };
    let pair_value = qei_mc(&model, &pair, incumbent, &base)?;
    // Slice of the two-point objective through the optimal pair: the second
    // point stays pinned at the pair's right element while the first sweeps
    // the grid, so the curve shows what pairing with x would have scored.
    let two_ei_curve: Vec<f64> = grid
        .iter()
        .map(|&x| {
            let batch = DMatrix::from_column_slice(2, 1, &[x, hi]);
            qei_mc(&model, &batch, incumbent, &base)
        })
        .collect::<sedkit_core::Result<_>>()?;

    let candidates = DMatrix::from_fn(DEMO_GRID, 1, |i, _| grid[i]);
    let two_step_curve: Vec<f64> = grid
        .iter()
        .map(|&x| {
            rollout_acq_grid(
                &model,
                &domain,
                &[x],
                incumbent,
                2,
                DEMO_GH_NODES,
                &candidates,
            )
        })
        .collect::<sedkit_core::Result<_>>()?;
    let (two_step_idx, two_step_best) = two_step_curve
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| {
            if v > acc.1 {
                (i, v)
            } else {
                acc
            }
        });

    let mut text = String::from("series,x,value\n");
    push_series(&mut text, "ei", &grid, &ei_curve);
    push_series(&mut text, "two_ei", &grid, &two_ei_curve);
    push_series(&mut text, "two_step_ei", &grid, &two_step_curve);
    push_series(&mut text, "ei_choice", &ei_choice.x, &[ei_choice.value]);
    push_series(
        &mut text,
        "two_ei_choice",
        &[lo, hi],
        &[pair_value, pair_value],
    );
    push_series(
        &mut text,
        "two_step_ei_choice",
        &[grid[two_step_idx]],
        &[two_step_best],
    );
    write_atomic(out, &text)
}
