//! Acceptance criterion for the command-line benchmark harness: rerunning
//! any configuration with the same seed produces byte-identical result
//! files, regardless of worker count.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "sedkit-accept-{tag}-{}",
        std::process::id()
    ));
    if dir.exists() {
        std::fs::remove_dir_all(&dir).expect("stale scratch removed");
    }
    std::fs::create_dir_all(&dir).expect("scratch created");
    dir
}

/// Runs the binary on `config`, sending results to `root` via the
/// environment so the config file itself stays byte-identical across
/// invocations.
fn run_into(config: &Path, root: &Path, jobs: usize) {
    let out = Command::new(env!("CARGO_BIN_EXE_sedkit"))
        .args(["--jobs", &jobs.to_string(), "run", config.to_str().unwrap()])
        .env("RESULTS_DIR", root)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "run into {} failed: {}",
        root.display(),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Byte-compares every result CSV between two output roots.
fn assert_identical_csvs(a: &Path, b: &Path) -> usize {
    let names = |dir: &Path| -> Vec<String> {
        let mut v: Vec<String> = std::fs::read_dir(dir)
            .expect("output dir readable")
            .map(|e| e.expect("entry").file_name().into_string().unwrap())
            .filter(|n| n.ends_with(".csv"))
            .collect();
        v.sort();
        v
    };
    let list = names(a);
    assert_eq!(list, names(b), "the two roots hold the same result files");
    assert!(!list.is_empty(), "runs produced result files");
    for name in &list {
        let bytes_a = std::fs::read(a.join(name)).unwrap();
        let bytes_b = std::fs::read(b.join(name)).unwrap();
        assert!(
            bytes_a == bytes_b,
            "{name} differs between {} and {}",
            a.display(),
            b.display()
        );
    }
    list.len()
}

#[test]
fn criterion_10_reruns_are_byte_identical_across_invocations_and_job_counts() {
    let started = Instant::now();
    let dir = scratch("determinism");

    let configs = [
        (
            "bo.cfg",
            "task = bo\nfunction = branin\npolicy = EI\npolicy = 2.EI.b\n\
             repeats = 2\nbudget = 3\nn_init = 2\nbase_seed = 123\ntiming = off\n",
        ),
        (
            "bq.cfg",
            "task = bq\nfunction = gauss1d\npolicy = UNCT\npolicy = 2.DPP.s\n\
             repeats = 2\nbudget = 3\nn_init = 2\nbase_seed = 321\ntiming = off\n",
        ),
    ];

    let mut compared = 0;
    for (name, body) in configs {
        let config = dir.join(name);
        std::fs::write(&config, body).expect("config written");
        let serial_a = dir.join(format!("{name}.serial-a"));
        let serial_b = dir.join(format!("{name}.serial-b"));
        let parallel = dir.join(format!("{name}.parallel"));
        run_into(&config, &serial_a, 1);
        run_into(&config, &serial_b, 1);
        run_into(&config, &parallel, 8);
        compared += assert_identical_csvs(&serial_a, &serial_b);
        assert_identical_csvs(&serial_a, &parallel);
    }

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 600.0, "criterion 10 took {elapsed:.1}s (limit 600s)");
    println!(
        "[acceptance] criterion 10 (deterministic reruns): PASS \
         ({compared} result files byte-identical across serial reruns and 8-way parallel, {elapsed:.1}s)"
    );
}
