use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bess_sched::forecast::{synth_forecast, write_quantile_file, QuantileForecast};
use bess_sched::montecarlo::read_report_json;
use bess_sched::scenario::CrossCaseReport;
use bess_sched::scheduler::{read_solution_json, SolutionDocument};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.toml"))
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bess-sched"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn solution(dir: &Path) -> SolutionDocument {
    read_solution_json(std::fs::File::open(dir.join("solution.json")).unwrap()).unwrap()
}

fn solve(case: &str, dir: &Path) -> Output {
    cli(&["solve", "-c", s(&scenario(case)), "--out-dir", s(dir)])
}

#[test]
fn case1_run_is_deterministic_in_the_battery() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("c1");
    let out = cli(&[
        "run",
        "-c",
        s(&scenario("case1")),
        "--samples",
        "200000",
        "--out-dir",
        s(&dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    for f in [
        "scenario.toml",
        "fitted.json",
        "solution.json",
        "plot.csv",
        "montecarlo.json",
        "summary.txt",
    ] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let doc = solution(&dir);
    assert!(doc
        .solution
        .steps
        .iter()
        .all(|s| s.de_min == 0.0 && s.de_max == 0.0));
    let report =
        read_report_json(std::fs::File::open(dir.join("montecarlo.json")).unwrap()).unwrap();
    assert!(report.summary.pass);
    assert_eq!(report.summary.samples, 200_000);
}

#[test]
fn case2_absorbs_some_deviation_in_the_battery() {
    let tmp = tempfile::tempdir().unwrap();
    let out = solve("case2", tmp.path());
    assert_eq!(code(&out), 0);
    let doc = solution(tmp.path());
    assert!(doc.solution.steps.iter().any(|s| s.atom_zero > 0.0));
    assert_eq!(doc.metadata.seed, 1);
    let plot = std::fs::read_to_string(tmp.path().join("plot.csv")).unwrap();
    assert_eq!(plot.lines().count(), 25);
}

#[test]
fn repeated_runs_write_the_same_numbers() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        cli(&[
            "run",
            "-c",
            s(&scenario("case3")),
            "--samples",
            "20000",
            "--out-dir",
            s(dir),
        ]);
    }
    for f in ["fitted.json", "plot.csv", "montecarlo.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let (da, db) = (solution(&a), solution(&b));
    assert_eq!(da.solution, db.solution);
    assert_eq!(da.metadata.config_hash, db.metadata.config_hash);
    // the output directory is not part of the hash
    let text = |d: &Path| {
        std::fs::read_to_string(d.join("scenario.toml"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("output_dir"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(text(&a), text(&b));
}

#[test]
fn compare_reports_differences() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs: Vec<PathBuf> = ["case1", "case2", "case3"]
        .iter()
        .map(|c| tmp.path().join(c))
        .collect();
    for (case, dir) in ["case1", "case2", "case3"].iter().zip(&dirs) {
        assert_eq!(code(&solve(case, dir)), 0);
    }
    let json = tmp.path().join("cmp.json");
    let out = cli(&[
        "compare",
        s(&dirs[0]),
        s(&dirs[1]),
        s(&dirs[2]),
        "--out",
        s(&json),
    ]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("case1"));
    let report: CrossCaseReport =
        serde_json::from_reader(std::fs::File::open(&json).unwrap()).unwrap();
    assert_eq!(report.horizon, 24);
    assert!(report
        .pair("case1", "case2")
        .unwrap()
        .max_abs_p_g_diff
        .is_finite());
    let w = report
        .pair("case2", "case3")
        .unwrap()
        .window_p1_diff
        .unwrap();
    assert!(w <= 0.0, "{w}");

    let out = cli(&[
        "compare",
        s(&dirs[1]),
        s(&dirs[1].join("solution.json")),
        "--out",
        s(&json),
    ]);
    assert_eq!(code(&out), 0);
    let report: CrossCaseReport =
        serde_json::from_reader(std::fs::File::open(&json).unwrap()).unwrap();
    let p = &report.pairs[0];
    assert_eq!(p.max_abs_p_g_diff, 0.0);
    assert_eq!(p.window_p1_diff, Some(0.0));
}

#[test]
fn compare_rejects_mismatched_horizons() {
    let tmp = tempfile::tempdir().unwrap();
    let full = synth_forecast(1, "pv_dominant").unwrap();
    let half = QuantileForecast {
        steps: full.steps[..12].to_vec(),
        ..full
    };
    let csv = tmp.path().join("half.csv");
    write_quantile_file(&half, &csv).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(
        code(&cli(&[
            "solve",
            "--case",
            "case1",
            "--forecast",
            s(&csv),
            "--out-dir",
            s(&a)
        ])),
        0
    );
    assert_eq!(solution(&a).solution.horizon(), 12);
    assert_eq!(code(&solve("case1", &b)), 0);
    let out = cli(&["compare", s(&a), s(&b)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn fitted_model_round_trips_through_the_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(
        code(&cli(&[
            "fit",
            "-c",
            s(&scenario("case2")),
            "--out-dir",
            s(&a)
        ])),
        0
    );
    let fitted = a.join("fitted.json");
    assert_eq!(
        code(&cli(&[
            "solve",
            "-c",
            s(&scenario("case2")),
            "--fitted",
            s(&fitted),
            "--out-dir",
            s(&a)
        ])),
        0
    );
    assert_eq!(code(&solve("case2", &b)), 0);
    assert_eq!(
        solution(&a).solution.objective,
        solution(&b).solution.objective
    );
    let out = cli(&[
        "validate",
        "-c",
        s(&scenario("case2")),
        "--samples",
        "50000",
        "--out-dir",
        s(&a),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(a.join("montecarlo.json").is_file());
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cli(&["solve", "--case", "case9", "--out-dir", s(tmp.path())]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("case"));

    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "name = \"x\"\nbogus_key = 3\n").unwrap();
    let out = cli(&["solve", "-c", s(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_key"));

    std::fs::write(&bad, "e0 = \"full\"\n").unwrap();
    let out = cli(&["solve", "-c", s(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("e0"));

    assert_eq!(code(&cli(&["solve", "--no-such-flag"])), 2);
    assert_eq!(
        code(&cli(&[
            "run",
            "--profile",
            "cloudy",
            "--out-dir",
            s(tmp.path())
        ])),
        2
    );
}

#[test]
fn iteration_cap_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("capped.toml");
    std::fs::write(
        &cfg,
        "name = \"capped\"\ncase = \"case3\"\nmax_outer = 1\nmax_inner = 2\n",
    )
    .unwrap();
    let dir = tmp.path().join("out");
    let out = cli(&["solve", "-c", s(&cfg), "--out-dir", s(&dir)]);
    assert_eq!(code(&out), 3);
    // the flagged solution is still written
    assert!(!solution(&dir).solution.converged);
}

#[test]
fn oracle_failure_exits_with_four() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cli(&[
        "run",
        "-c",
        s(&scenario("case2")),
        "--samples",
        "1",
        "--out-dir",
        s(tmp.path()),
    ]);
    assert_eq!(code(&out), 4);
    let summary = std::fs::read_to_string(tmp.path().join("summary.txt")).unwrap();
    assert!(!summary.is_empty());
}
