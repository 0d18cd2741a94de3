//! End-to-end tests of the `lkbo` binary: exit codes, output files, help
//! text, and byte-exact replay of every subcommand under a fixed seed.

use std::path::Path;
use std::process::{Command, Output};

fn lkbo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lkbo"))
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    lkbo().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const RASTRIGIN20: &str = r#"
seed = 3
[objective]
name = "stochastic_rastrigin"
dim = 20
[sampling]
theta = "uniform"
M = 50
[optimizer]
kind = "lkbo_fvse"
lambda = 1
sigma = 7
alpha = 30
dt = 0.01
N = 50
n_it = 500
init_box = [-3, 3]
"#;

const QUADRATIC: &str = r#"
seed = 5
[objective]
name = "quadratic"
dim = 2
[sampling]
theta = "uniform"
M = 10
[optimizer]
kind = "lkbo_fvse"
lambda = 1
sigma = 2
alpha = 1e7
dt = 0.1
N = 50
n_it = 400
init_box = [-3, 3]
"#;

#[test]
fn optimize_smoke_produces_finite_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "rastrigin20.cfg", RASTRIGIN20);
    let out = run(&[
        "optimize",
        "--config",
        &cfg,
        "--seed",
        "7",
        "--output-dir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let line = stdout(&out);
    let json: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    let candidate = json["candidate"].as_array().unwrap();
    assert_eq!(candidate.len(), 20);
    assert!(candidate.iter().all(|v| v.as_f64().unwrap().is_finite()));
    assert!(json["objective_at_candidate"].as_f64().unwrap().is_finite());
}

#[test]
fn optimize_unknown_objective_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "bad.cfg",
        &RASTRIGIN20.replace("stochastic_rastrigin", "rastrigin_typo"),
    );
    let out = run(&["optimize", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("rastrigin_typo"), "{}", stderr(&out));
}

#[test]
fn optimize_unknown_config_key_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "bad.cfg", "optimizer.lambada = 1\n");
    let out = run(&["optimize", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("optimizer.lambada"), "{}", stderr(&out));
}

#[test]
fn optimize_drift_only_quadratic_contracts_to_minimizer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "quadratic.cfg", QUADRATIC);
    let out = run(&[
        "optimize",
        "--config",
        &cfg,
        "--output-dir",
        dir.path().join("out").to_str().unwrap(),
        "--overrides",
        "optimizer.sigma=0",
        "optimizer.n_it=100",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    for v in json["candidate"].as_array().unwrap() {
        assert!(v.as_f64().unwrap().abs() < 1e-3, "{json}");
    }
}

#[test]
fn optimize_numeric_blowup_exits_3() {
    // An absurd diffusion strength overflows positions within a few
    // iterates; the non-finite-position guard reports it as a numeric
    // failure.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "blowup.cfg", RASTRIGIN20);
    let out = run(&[
        "optimize",
        "--config",
        &cfg,
        "--overrides",
        "optimizer.sigma=1e300",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("non-finite"), "{}", stderr(&out));
}

#[test]
fn benchmark_quick_mode_writes_table_and_creates_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "bench.cfg", RASTRIGIN20);
    // Nested, not-yet-existing output directory is created automatically.
    let out_dir = dir.path().join("a/b/out");
    let out = run(&[
        "benchmark",
        "--config",
        &cfg,
        "--output-dir",
        out_dir.to_str().unwrap(),
        "--overrides",
        "benchmark.n_runs=2",
        "optimizer.n_it=300",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out_dir.join("table.csv").is_file());
    assert!(out_dir.join("per_run.jsonl").is_file());
    let jsonl = std::fs::read_to_string(out_dir.join("per_run.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 2);
}

#[test]
fn benchmark_iterate_grid_has_table_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "grid.cfg",
        &format!(
            "{RASTRIGIN20}
[benchmark]
n_runs = 2
grid_rows = \"iterate\"
row_values = [100, 300]
grid_cols = \"optimizer\"
col_values = [\"lkbo_fvse\", \"lkbo_fvse_sy:3\"]
"
        ),
    );
    let out_dir = dir.path().join("out");
    let out = run(&[
        "benchmark",
        "--config",
        &cfg,
        "--output-dir",
        out_dir.to_str().unwrap(),
        "--overrides",
        "optimizer.n_it=300",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = std::fs::read_to_string(out_dir.join("table.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], ",lkbo_fvse,lkbo_fvse_sy:3");
    assert!(lines[1].starts_with("h=100,"));
    assert!(lines[2].starts_with("h=300,"));
    assert!(out_dir.join("per_run_lkbo_fvse.jsonl").is_file());
}

const MOMENTS_SMALL: &str = r#"
seed = 2
[objective]
name = "stochastic_rastrigin"
dim = 1
[sampling]
theta = "uniform"
M = 20
[optimizer]
kind = "lkbo_fvse"
lambda = 1
sigma = 0.5
alpha = 1000
dt = 0.1
N = 50
n_it = 200
init_box = [-1, 1]
[moments]
alphas = [10, 1000]
init_boxes = [-1, 1, -0.2, 0.5]
x_tilde = [0]
"#;

#[test]
fn moments_writes_trace_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "moments.cfg", MOMENTS_SMALL);
    let out_dir = dir.path().join("out");
    let out = run(&["moments", "--config", &cfg, "--output-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    for name in [
        "empirical_trace_box1_alpha10.csv",
        "empirical_trace_box1_alpha1000.csv",
        "empirical_trace_box2_alpha10.csv",
        "empirical_trace_box2_alpha1000.csv",
        "ode_trace_box1.csv",
        "ode_trace_box2.csv",
    ] {
        let text = std::fs::read_to_string(out_dir.join(name)).unwrap();
        assert_eq!(text.lines().count(), 202, "{name}");
        assert_eq!(text.lines().next().unwrap(), "t,m_1,V");
    }
}

#[test]
fn moments_zero_iterations_emit_only_initial_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "moments.cfg", MOMENTS_SMALL);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "moments",
        "--config",
        &cfg,
        "--output-dir",
        out_dir.to_str().unwrap(),
        "--overrides",
        "optimizer.n_it=0",
        "moments.alphas=[1000]",
        "moments.init_boxes=[-1, 1]",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    for name in ["empirical_trace.csv", "ode_trace.csv"] {
        let text = std::fs::read_to_string(out_dir.join(name)).unwrap();
        assert_eq!(text.lines().count(), 2, "{name}: {text}");
    }
}

const TOY_DIAGNOSE: &str = r#"
seed = 4
[objective]
name = "bounded_cosine_toy"
dim = 1
[sampling]
theta = "uniform"
M = 5
[optimizer]
lambda = 0.5
sigma = 0.1
[diagnose]
alpha = 0.1
n_mc = 4000
"#;

#[test]
fn diagnose_toy_reports_positive_mu() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "diag.cfg", TOY_DIAGNOSE);
    let out = run(&["diagnose", "--config", &cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(json["mu_positive"], serde_json::Value::Bool(true));
    assert!(json["c_alpha"].as_f64().unwrap() >= 1.0);
}

#[test]
fn diagnose_benchmark_parameters_fail_concentration_but_exit_0() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "diag.cfg",
        &TOY_DIAGNOSE
            .replace("lambda = 0.5", "lambda = 1")
            .replace("sigma = 0.1", "sigma = 7"),
    );
    let out = run(&["diagnose", "--config", &cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(json["mu_positive"], serde_json::Value::Bool(false));
}

#[test]
fn diagnose_user_c_alpha_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "diag.cfg",
        r#"
[objective]
name = "stochastic_rastrigin"
dim = 2
[optimizer]
lambda = 1
sigma = 0
[diagnose]
alpha = 30
c_alpha = 1
"#,
    );
    let out = run(&["diagnose", "--config", &cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(json["mu"].as_f64().unwrap(), 0.0);
    assert_eq!(json["mu_positive"], serde_json::Value::Bool(false));
}

#[test]
fn diagnose_without_bounds_or_user_c_alpha_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "diag.cfg",
        r#"
[objective]
name = "stochastic_rastrigin"
dim = 2
[optimizer]
lambda = 1
sigma = 7
[diagnose]
alpha = 30
"#,
    );
    let out = run(&["diagnose", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bounds"), "{}", stderr(&out));
}

#[test]
fn help_lists_every_config_key_per_subcommand() {
    // The schema is the source of truth; drift between help text and the
    // keys a subcommand reads fails here.
    let expectations: &[(&str, &[&str])] = &[
        ("optimize", &["optimize.trace"]),
        (
            "benchmark",
            &[
                "benchmark.n_runs",
                "benchmark.success_threshold",
                "benchmark.record_rate_target",
                "benchmark.track_per_iterate",
                "benchmark.report_iterate",
                "benchmark.show_first_target_iterate",
                "benchmark.grid_rows",
                "benchmark.row_values",
                "benchmark.grid_cols",
                "benchmark.col_values",
            ],
        ),
        (
            "moments",
            &[
                "moments.alphas",
                "moments.init_boxes",
                "moments.x_tilde",
                "moments.rel_tol",
                "moments.abs_tol",
            ],
        ),
        (
            "diagnose",
            &[
                "diagnose.alpha",
                "diagnose.n_mc",
                "diagnose.c_alpha",
                "diagnose.c1",
                "diagnose.c2",
                "diagnose.f_lower",
                "diagnose.v0",
                "diagnose.omega_norm",
                "diagnose.omega_mc",
            ],
        ),
    ];
    let common = [
        "seed",
        "objective.name",
        "objective.dim",
        "objective.B",
        "objective.C",
        "sampling.theta",
        "sampling.M",
        "optimizer.lambda",
        "optimizer.sigma",
        "optimizer.alpha",
        "optimizer.dt",
        "optimizer.eta",
        "optimizer.epsilon",
        "optimizer.N",
        "optimizer.n_it",
        "optimizer.diffusion",
        "optimizer.n_sY",
        "optimizer.init_box",
    ];
    for (cmd, keys) in expectations {
        let out = run(&[cmd, "--help"]);
        assert!(out.status.success());
        let help = stdout(&out);
        for key in common.iter().chain(*keys) {
            assert!(help.contains(key), "`{cmd} --help` is missing key {key}");
        }
    }
}

/// Byte-exact replay: every subcommand, run twice with the same seed into
/// fresh directories, produces identical data files (and, minus wall time,
/// identical stdout).
#[test]
fn replay_is_byte_exact_for_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let opt_cfg = write_cfg(dir.path(), "opt.cfg", QUADRATIC);
    let bench_cfg = write_cfg(
        dir.path(),
        "bench.cfg",
        &format!(
            "{RASTRIGIN20}
[benchmark]
n_runs = 3
grid_rows = \"M\"
row_values = [10, 20]
grid_cols = \"theta\"
col_values = [\"uniform\", \"exponential\"]
"
        ),
    );
    let moments_cfg = write_cfg(dir.path(), "moments.cfg", MOMENTS_SMALL);
    let diag_cfg = write_cfg(dir.path(), "diag.cfg", TOY_DIAGNOSE);

    let cases: &[(&str, &str, &[&str])] = &[
        ("optimize", &opt_cfg, &["--overrides", "optimize.trace=true", "optimizer.n_it=150"]),
        ("benchmark", &bench_cfg, &["--overrides", "optimizer.n_it=150"]),
        ("moments", &moments_cfg, &["--overrides", "optimizer.n_it=100"]),
        ("diagnose", &diag_cfg, &[]),
    ];
    for (cmd, cfg, extra) in cases {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out_dir = dir.path().join(format!("{cmd}_{rep}"));
            let mut args = vec![
                *cmd,
                "--config",
                cfg,
                "--seed",
                "11",
                "--output-dir",
                out_dir.to_str().unwrap(),
            ];
            args.extend_from_slice(extra);
            let out = run(&args);
            assert!(out.status.success(), "{cmd}: {}", stderr(&out));
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out_dir)
                .map(|entries| {
                    entries
                        .map(|e| {
                            let e = e.unwrap();
                            (
                                e.file_name().to_string_lossy().into_owned(),
                                std::fs::read(e.path()).unwrap(),
                            )
                        })
                        .collect()
                })
                .unwrap_or_default();
            files.sort();
            outputs.push((files, stdout(&out)));
        }
        let (files_a, stdout_a) = &outputs[0];
        let (files_b, stdout_b) = &outputs[1];
        assert_eq!(files_a.len(), files_b.len(), "{cmd}: file sets differ");
        for ((name_a, bytes_a), (name_b, bytes_b)) in files_a.iter().zip(files_b) {
            assert_eq!(name_a, name_b, "{cmd}");
            assert_eq!(bytes_a, bytes_b, "{cmd}: {name_a} differs between replays");
        }
        // stdout may carry wall-clock text and the (differing) output paths;
        // strip both before comparing.
        let scrub = |s: &str| {
            s.lines()
                .filter(|l| !l.contains("written to"))
                .map(|l| {
                    if let Ok(mut v) = serde_json::from_str::<serde_json::Value>(l) {
                        if let Some(obj) = v.as_object_mut() {
                            obj.remove("wall_secs");
                        }
                        v.to_string()
                    } else if let Some(i) = l.find(", wall") {
                        l[..i].to_string()
                    } else {
                        l.to_string()
                    }
                })
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(scrub(stdout_a), scrub(stdout_b), "{cmd}: stdout differs beyond wall time");
    }
}
