//! Flat `key = value` experiment configuration.
//!
//! The format is deliberately plain so configs diff well and can be written
//! by hand: one assignment per line, `#` starts a comment line, and list
//! fields (`function`, `policy`) repeat the key once per element.
//!
//! ```text
//! task = bo
//! function = eggholder
//! function = dropwave
//! policy = EI
//! policy = 8.EI.s
//! repeats = 20
//! base_seed = 42
//! profile = desk
//! output_dir = results/egg-vs-drop
//! ```

use std::collections::BTreeSet;
use std::path::PathBuf;

use sedkit_core::policy::{PolicyKind, PolicySpec};

use crate::error::{CliError, Result};

/// Which experiment family a config drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    /// Maximization runs scored by GAP.
    Bo,
    /// Integration runs scored by fractional error.
    Bq,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Bo => "bo",
            TaskKind::Bq => "bq",
        }
    }

    fn parse(text: &str) -> Result<TaskKind> {
        match text {
            "bo" => Ok(TaskKind::Bo),
            "bq" => Ok(TaskKind::Bq),
            other => Err(CliError::usage(format!(
                "task must be 'bo' or 'bq', not {other:?}"
            ))),
        }
    }
}

/// Preset experiment scale. `desk` is the everyday/CI size; `full` matches
/// the publication protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Desk,
    Full,
}

impl Profile {
    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Desk => "desk",
            Profile::Full => "full",
        }
    }

    /// Repeat count implied by the profile when `repeats` is not given.
    pub fn default_repeats(self) -> usize {
        match self {
            Profile::Desk => 20,
            Profile::Full => 100,
        }
    }

    fn parse(text: &str) -> Result<Profile> {
        match text {
            "desk" => Ok(Profile::Desk),
            "full" => Ok(Profile::Full),
            other => Err(CliError::usage(format!(
                "profile must be 'desk' or 'full', not {other:?}"
            ))),
        }
    }
}

/// A fully parsed experiment sweep description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub task: TaskKind,
    /// Benchmark names as written; may be the single sentinel `all-hard`,
    /// which the runner expands against the registry.
    pub functions: Vec<String>,
    pub policies: Vec<PolicySpec>,
    pub repeats: usize,
    pub base_seed: u64,
    pub profile: Profile,
    /// Where result files go; `None` falls back to `$RESULTS_DIR` or
    /// `./results`.
    pub output_dir: Option<PathBuf>,
    /// Iteration budget override; default is 20 × dimension per function.
    pub budget: Option<usize>,
    /// Initial design size override; default is 2 × dimension per function.
    pub n_init: Option<usize>,
    /// Whether acquisition wall-time is measured (`wall`) or written as zero
    /// (`off`). Turning it off makes rerun outputs byte-identical.
    pub timing: bool,
}

/// True when a policy is meaningful for the task: improvement-based and
/// lookahead policies need a maximization target, variance/entropy policies
/// an integrand, and random search works for either.
pub fn policy_allowed(kind: &PolicyKind, task: TaskKind) -> bool {
    match kind {
        PolicyKind::Random => true,
        PolicyKind::Ei
        | PolicyKind::BatchEi { .. }
        | PolicyKind::Rollout { .. }
        | PolicyKind::Glasses { .. } => task == TaskKind::Bo,
        PolicyKind::Unct | PolicyKind::BatchDpp { .. } => task == TaskKind::Bq,
    }
}

/// Parses config text. Scalar keys may appear once; `function` and `policy`
/// accumulate. Unknown keys are rejected so typos do not silently change an
/// experiment.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut task = None;
    let mut functions: Vec<String> = Vec::new();
    let mut policies: Vec<PolicySpec> = Vec::new();
    let mut repeats = None;
    let mut base_seed = None;
    let mut profile = None;
    let mut output_dir = None;
    let mut budget = None;
    let mut n_init = None;
    let mut timing = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::usage(format!(
                "config line {}: expected 'key = value', got {line:?}",
                lineno + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(CliError::usage(format!(
                "config line {}: key {key:?} has no value",
                lineno + 1
            )));
        }
        match key {
            "task" => set_once(&mut task, key, TaskKind::parse(value)?)?,
            "function" => functions.push(value.to_string()),
            "policy" => {
                let spec: PolicySpec = value
                    .parse()
                    .map_err(|e: sedkit_core::Error| CliError::usage(e.to_string()))?;
                policies.push(spec);
            }
            "repeats" => set_once(&mut repeats, key, parse_count(key, value)?)?,
            "base_seed" => set_once(&mut base_seed, key, parse_u64(key, value)?)?,
            "profile" => set_once(&mut profile, key, Profile::parse(value)?)?,
            "output_dir" => set_once(&mut output_dir, key, PathBuf::from(value))?,
            "budget" => set_once(&mut budget, key, parse_count(key, value)?)?,
            "n_init" => set_once(&mut n_init, key, parse_count(key, value)?)?,
            "timing" => set_once(&mut timing, key, parse_timing(value)?)?,
            other => {
                return Err(CliError::usage(format!(
                    "config line {}: unknown key {other:?}",
                    lineno + 1
                )));
            }
        }
    }

    let task = task.ok_or_else(|| CliError::usage("config is missing 'task'"))?;
    if functions.is_empty() {
        return Err(CliError::usage("config needs at least one 'function'"));
    }
    if functions.iter().any(|f| f == "all-hard") && functions.len() > 1 {
        return Err(CliError::usage(
            "'all-hard' stands for the whole hard suite and cannot be mixed \
             with explicit function names",
        ));
    }
    let mut seen = BTreeSet::new();
    for f in &functions {
        if !seen.insert(f.clone()) {
            return Err(CliError::usage(format!("function {f:?} listed twice")));
        }
    }
    if policies.is_empty() {
        return Err(CliError::usage("config needs at least one 'policy'"));
    }
    let mut seen = BTreeSet::new();
    for p in &policies {
        if !seen.insert(p.to_string()) {
            return Err(CliError::usage(format!("policy '{p}' listed twice")));
        }
        if !policy_allowed(&p.kind, task) {
            return Err(CliError::usage(format!(
                "policy '{p}' does not apply to task '{}'",
                task.as_str()
            )));
        }
    }

    let profile = profile.unwrap_or(Profile::Desk);
    let repeats = repeats.unwrap_or_else(|| profile.default_repeats());
    if repeats == 0 {
        return Err(CliError::usage("repeats must be at least 1"));
    }

    Ok(RunConfig {
        task,
        functions,
        policies,
        repeats,
        base_seed: base_seed.unwrap_or(0),
        profile,
        output_dir,
        budget,
        n_init,
        timing: timing.unwrap_or(true),
    })
}

fn set_once<T>(slot: &mut Option<T>, key: &str, value: T) -> Result<()> {
    if slot.is_some() {
        return Err(CliError::usage(format!("key {key:?} given more than once")));
    }
    *slot = Some(value);
    Ok(())
}

fn parse_count(key: &str, value: &str) -> Result<usize> {
    let n: usize = value
        .parse()
        .map_err(|_| CliError::usage(format!("{key} must be a positive integer, not {value:?}")))?;
    if n == 0 {
        return Err(CliError::usage(format!("{key} must be at least 1")));
    }
    Ok(n)
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value
        .parse()
        .map_err(|_| CliError::usage(format!("{key} must be a non-negative integer, not {value:?}")))
}

fn parse_timing(value: &str) -> Result<bool> {
    match value {
        "wall" => Ok(true),
        "off" => Ok(false),
        other => Err(CliError::usage(format!(
            "timing must be 'wall' or 'off', not {other:?}"
        ))),
    }
}
