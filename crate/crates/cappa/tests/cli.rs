//! End-to-end tests of the benchmark binary: subcommands, artifact
//! determinism, and exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_cappa-bench");

const SMALL_CONFIG: &str = r#"
master_seed = 5
trials = 3
solvers = ["cappa", "pds"]
init_conditions = [{ direction_seed = 11, norm_scale = 1.0 }]
settle_tol_rel = 1e-2
dt_sweep = [2e-3, 1e-3]
nm_sweep = [[24, 12]]

[instance]
n = 24
m = 12
s = 2
sigma = 0.0
lambda = 0.05
matrix = "partial_orthogonal"

[cappa]
eta = 0.3
kappa1 = 5.0
kappa2 = 5.0

[integrator]
dt = 1e-3
t_max = 100.0
record_stride = 50

[constants]
delta_mode = "surrogate"
surrogate_samples = 50
"#;

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

#[test]
fn generate_and_solve_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CONFIG);
    let out = dir.path().join("out");
    let o = run(&[
        "generate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("instance.bin").exists());

    // solving the saved bundle gives the same result as regenerating
    let o = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let direct = fs::read_to_string(out.join("solution.csv")).unwrap();

    let loaded_cfg = format!(
        "{SMALL_CONFIG}\n[instance.path_override]\n"
    );
    // splice the path into the instance table instead of appending a bogus table
    let loaded_cfg = loaded_cfg.replace(
        "[instance]",
        &format!("[instance]\npath = \"{}\"", out.join("instance.bin").display()),
    );
    let loaded_cfg = loaded_cfg.replace("[instance.path_override]\n", "");
    let cfg2 = dir.path().join("config2.toml");
    fs::write(&cfg2, loaded_cfg).unwrap();
    let out2 = dir.path().join("out2");
    let o = run(&[
        "solve",
        "--config",
        cfg2.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let via_bundle = fs::read_to_string(out2.join("solution.csv")).unwrap();
    // data rows agree; header differs only in the config snapshot hash
    let rows = |s: &str| {
        s.lines()
            .filter(|l| !l.starts_with('#'))
            .map(String::from)
            .collect::<Vec<_>>()
    };
    assert_eq!(rows(&direct), rows(&via_bundle));
}

#[test]
fn error_decay_is_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CONFIG);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let o = run(&[
            "fig-error-decay",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let csv_a = fs::read(out_a.join("error_decay.csv")).unwrap();
    let csv_b = fs::read(out_b.join("error_decay.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    let svg_a = fs::read(out_a.join("error_decay.svg")).unwrap();
    let svg_b = fs::read(out_b.join("error_decay.svg")).unwrap();
    assert_eq!(svg_a, svg_b);
}

#[test]
fn recovery_and_dt_sweep_emit_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CONFIG);
    let out = dir.path().join("out");
    for sub in ["fig-recovery", "bench-dt"] {
        let o = run(&[
            sub,
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
    }
    for file in [
        "signal_recovery.csv",
        "signal_recovery.svg",
        "bench_dt.csv",
        "bench_dt.svg",
    ] {
        assert!(out.join(file).exists(), "missing {file}");
    }
    let text = fs::read_to_string(out.join("signal_recovery.csv")).unwrap();
    assert!(text.starts_with("# manifest_sha256: "));
    assert!(text.contains("# support_ref: 2"));
}

#[test]
fn bench_trials_reports_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CONFIG);
    let out = dir.path().join("out");
    let o = run(&[
        "bench-trials",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("bench_trials.csv")).unwrap();
    for kind in ["min", "mean", "max"] {
        assert!(
            text.lines().any(|l| l.starts_with("cappa,") && l.contains(&format!(",{kind},"))
                || l.split(',').nth(1) == Some(kind)),
            "missing {kind} summary row"
        );
    }
    // constants block embedded in the bench header
    assert!(text.contains("# constant delta_2s:"));
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "no_such_key = 1");
    let o = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let cfg = write_config(dir.path(), "trials = 0");
    let o = run(&["bench-trials", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["solve", "--config", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn divergence_in_required_run_exits_with_code_3() {
    // a huge step with a superlinear term blows up from any nonzero state
    let body = SMALL_CONFIG
        .replace("dt = 1e-3", "dt = 5.0")
        .replace("t_max = 100.0", "t_max = 5000.0")
        .replace("kappa1 = 5.0", "kappa1 = 50.0")
        .replace("kappa2 = 5.0", "kappa2 = 50.0");
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &body);
    let out = dir.path().join("out");
    let o = run(&[
        "fig-recovery",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn non_certified_constants_exit_with_code_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CONFIG);
    let out = dir.path().join("out");
    let o = run(&[
        "constants",
        "--require-certified",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));

    // exact enumeration at this size is certified and succeeds
    let body = SMALL_CONFIG.replace("delta_mode = \"surrogate\"", "delta_mode = \"exact\"");
    let cfg = write_config(dir.path(), &body);
    let o = run(&[
        "constants",
        "--require-certified",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(out.join("constants.txt")).unwrap();
    assert!(report.contains("certified"));
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CONFIG);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for (out, seed) in [(&out_a, "5"), (&out_b, "6")] {
        let o = run(&[
            "solve",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    let a = fs::read_to_string(out_a.join("solution.csv")).unwrap();
    let b = fs::read_to_string(out_b.join("solution.csv")).unwrap();
    assert_ne!(a, b, "different seeds must give different instances");
}
