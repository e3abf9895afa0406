//! Sweep execution: every (function, policy, repeat) combination in a config
//! becomes one independent run, dispatched across a worker pool, and lands in
//! its own CSV file. A manifest records the config together with every
//! compiled-in default that shapes the numbers, so a results directory is
//! self-describing.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sedkit_core::bench::{
    default_budget, default_n_init, registry_bo, registry_bq, BenchmarkFunction, DISCONT_FLOOR,
    GENZ_SHIFT, GENZ_STEEPNESS,
};
use sedkit_core::gp::JITTER_LADDER;
use sedkit_core::lookahead::{GlassesOpts, RolloutOpts};
use sedkit_core::policy::{run_policy, PolicySpec, RunRecord, RunSettings, DEFAULT_MC_SAMPLES};

use crate::config::{RunConfig, TaskKind};
use crate::error::{CliError, Result};
use crate::format::{fmt_point, fmt_real};

/// Exact header line of every result file.
pub const RESULT_HEADER: &str =
    "task,function,policy,repeat,iteration,sel_x,observed_y,metric,acq_seconds";

/// What happened to one dispatched run.
#[derive(Debug)]
pub struct RunOutcome {
    pub function: String,
    pub policy: String,
    pub repeat: usize,
    /// Iterations actually recorded (shorter than the budget after an abort).
    pub iterations: usize,
    /// Diagnostic when the run stopped early on a non-finite observation.
    pub abort: Option<String>,
}

/// Effective output directory: the config's `output_dir` if set, else the
/// `RESULTS_DIR` environment variable, else `./results`.
pub fn output_root(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.clone().unwrap_or_else(|| {
        std::env::var_os("RESULTS_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("results"))
    })
}

fn registry_for(task: TaskKind) -> Vec<BenchmarkFunction> {
    match task {
        TaskKind::Bo => registry_bo(),
        TaskKind::Bq => registry_bq(),
    }
}

/// Expands `all-hard` and validates explicit names against the registry for
/// the config's task.
pub fn resolve_function_names(cfg: &RunConfig) -> Result<Vec<String>> {
    let registry = registry_for(cfg.task);
    if cfg.functions.len() == 1 && cfg.functions[0] == "all-hard" {
        return Ok(registry
            .iter()
            .filter(|f| f.hard)
            .map(|f| f.name.to_string())
            .collect());
    }
    for name in &cfg.functions {
        if !registry.iter().any(|f| f.name == name) {
            let known: Vec<&str> = registry.iter().map(|f| f.name).collect();
            return Err(CliError::usage(format!(
                "unknown function {name:?} for task '{}'; available: {}",
                cfg.task.as_str(),
                known.join(", ")
            )));
        }
    }
    Ok(cfg.functions.clone())
}

fn lookup(task: TaskKind, name: &str) -> Result<BenchmarkFunction> {
    registry_for(task)
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| CliError::usage(format!("unknown function {name:?}")))
}

/// Base name (no extension) of the result file for one run.
pub fn file_stem(task: TaskKind, function: &str, policy: &str, repeat: usize) -> String {
    format!("{}_{function}_{policy}_{repeat:03}", task.as_str())
}

/// Writes `contents` to `path` atomically: a temporary sibling file is
/// renamed over the target so readers never observe a half-written file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp_name = path
        .file_name()
        .ok_or_else(|| CliError::input(format!("{} has no file name", path.display())))?
        .to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents).map_err(|e| CliError::io(format!("writing {}", tmp.display()), e))?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::io(format!("renaming {} into place", tmp.display()), e))
}

/// Serializes one finished run, one data row per iteration.
pub fn run_csv(task: TaskKind, function: &str, record: &RunRecord) -> String {
    let mut out = String::with_capacity(128 * (record.iterations.len() + 1));
    out.push_str(RESULT_HEADER);
    out.push('\n');
    for it in &record.iterations {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            task.as_str(),
            function,
            record.policy,
            record.repeat,
            it.iteration,
            fmt_point(&it.selected),
            fmt_real(it.observed),
            fmt_real(it.metric),
            fmt_real(it.acq_seconds),
        ));
    }
    out
}

/// Manifest text: the effective config plus every compiled-in default that
/// influences results, as flat `key = value` lines.
pub fn manifest_text(cfg: &RunConfig, out_dir: &Path, functions: &[String]) -> String {
    let settings = RunSettings::default();
    let rollout = RolloutOpts::default();
    let glasses = GlassesOpts::default();
    let mut s = String::new();
    s.push_str("# Reproduction record for the result files in this directory.\n");
    s.push_str(&format!("config.task = {}\n", cfg.task.as_str()));
    for f in functions {
        s.push_str(&format!("config.function = {f}\n"));
    }
    for p in &cfg.policies {
        s.push_str(&format!("config.policy = {p}\n"));
    }
    s.push_str(&format!("config.repeats = {}\n", cfg.repeats));
    s.push_str(&format!("config.base_seed = {}\n", cfg.base_seed));
    s.push_str(&format!("config.profile = {}\n", cfg.profile.as_str()));
    s.push_str(&format!("config.output_dir = {}\n", out_dir.display()));
    match cfg.budget {
        Some(b) => s.push_str(&format!("config.budget = {b}\n")),
        None => s.push_str("config.budget = auto (20 x dimension)\n"),
    }
    match cfg.n_init {
        Some(n) => s.push_str(&format!("config.n_init = {n}\n")),
        None => s.push_str("config.n_init = auto (2 x dimension)\n"),
    }
    s.push_str(&format!(
        "config.timing = {}\n",
        if cfg.timing { "wall" } else { "off" }
    ));
    for name in functions {
        if let Ok(f) = lookup(cfg.task, name) {
            let dim = f.objective.domain().dim();
            s.push_str(&format!("function.{name}.dim = {dim}\n"));
            s.push_str(&format!(
                "function.{name}.budget = {}\n",
                cfg.budget.unwrap_or_else(|| default_budget(dim))
            ));
            s.push_str(&format!(
                "function.{name}.n_init = {}\n",
                cfg.n_init.unwrap_or_else(|| default_n_init(dim))
            ));
        }
    }
    s.push_str(&format!("code.version = {}\n", env!("CARGO_PKG_VERSION")));
    s.push_str(&format!("defaults.batch_mc_samples = {DEFAULT_MC_SAMPLES}\n"));
    s.push_str(&format!("defaults.fit_restarts = {}\n", settings.fit_restarts));
    s.push_str(&format!("defaults.acq_starts = {}\n", settings.acq_starts));
    s.push_str(&format!("defaults.metric_nodes = {}\n", settings.metric_nodes));
    s.push_str(&format!(
        "defaults.rollout_inner_budget = {}\n",
        rollout.inner_budget
    ));
    s.push_str(&format!(
        "defaults.rollout_outer_budget = {}\n",
        rollout.outer_budget
    ));
    s.push_str(&format!("defaults.glasses_samples = {}\n", glasses.n_samples));
    s.push_str(&format!(
        "defaults.glasses_append_budget = {}\n",
        glasses.append_budget
    ));
    s.push_str(&format!(
        "defaults.glasses_select_budget = {}\n",
        glasses.select_budget
    ));
    s.push_str(&format!(
        "defaults.glasses_mean_starts = {}\n",
        glasses.mean_starts
    ));
    s.push_str(&format!(
        "defaults.glasses_grad_probes = {}\n",
        glasses.grad_probes
    ));
    let ladder: Vec<String> = JITTER_LADDER.iter().map(|j| j.to_string()).collect();
    s.push_str(&format!(
        "defaults.jitter_ladder = {} (relative to signal variance)\n",
        ladder.join(";")
    ));
    s.push_str(&format!("defaults.integrand_steepness = {GENZ_STEEPNESS}\n"));
    s.push_str(&format!("defaults.integrand_shift = {GENZ_SHIFT}\n"));
    s.push_str(&format!("defaults.integrand_floor = {DISCONT_FLOOR}\n"));
    s
}

fn run_one(
    cfg: &RunConfig,
    name: &str,
    spec: &PolicySpec,
    repeat: usize,
    out_dir: &Path,
) -> Result<RunOutcome> {
    let func = lookup(cfg.task, name)?;
    let dim = func.objective.domain().dim();
    let budget = cfg.budget.unwrap_or_else(|| default_budget(dim));
    let n_init = cfg.n_init.unwrap_or_else(|| default_n_init(dim));
    let settings = RunSettings {
        timing: cfg.timing,
        ..RunSettings::default()
    };
    let record = run_policy(
        &func.objective,
        spec,
        budget,
        n_init,
        cfg.base_seed,
        repeat,
        &settings,
    )?;

    let stem = file_stem(cfg.task, name, &record.policy, repeat);
    write_atomic(
        &out_dir.join(format!("{stem}.csv")),
        &run_csv(cfg.task, name, &record),
    )?;
    if let Some(msg) = &record.abort {
        write_atomic(&out_dir.join(format!("{stem}.abort.txt")), &format!("{msg}\n"))?;
    }
    eprintln!(
        "run {stem}: {} of {budget} iterations{}",
        record.iterations.len(),
        if record.aborted() { " (aborted)" } else { "" }
    );
    Ok(RunOutcome {
        function: name.to_string(),
        policy: record.policy.clone(),
        repeat,
        iterations: record.iterations.len(),
        abort: record.abort.clone(),
    })
}

/// Runs the whole sweep described by `cfg`, fanning independent runs across
/// `jobs` worker threads (`None` lets the pool size itself), and returns the
/// output directory together with one outcome per run.
pub fn execute(cfg: &RunConfig, jobs: Option<usize>) -> Result<(PathBuf, Vec<RunOutcome>)> {
    let out_dir = output_root(cfg);
    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::io(format!("creating {}", out_dir.display()), e))?;
    let names = resolve_function_names(cfg)?;
    write_atomic(
        &out_dir.join("manifest.txt"),
        &manifest_text(cfg, &out_dir, &names),
    )?;

    let mut jobs_list = Vec::new();
    for name in &names {
        for spec in &cfg.policies {
            for repeat in 0..cfg.repeats {
                jobs_list.push((name.clone(), spec.clone(), repeat));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::input(format!("could not build worker pool: {e}")))?;
    let results: Vec<Result<RunOutcome>> = pool.install(|| {
        jobs_list
            .par_iter()
            .map(|(name, spec, repeat)| run_one(cfg, name, spec, *repeat, &out_dir))
            .collect()
    });

    let mut outcomes = Vec::with_capacity(results.len());
    for r in results {
        outcomes.push(r?);
    }
    Ok((out_dir, outcomes))
}
