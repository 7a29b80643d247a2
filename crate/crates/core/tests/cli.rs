use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn schemaevo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schemaevo"))
        .args(args)
        .env_remove("SCHEMAEVO_OUT_ROOT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn jsonl_records(dir: &Path) -> usize {
    let mut n = 0;
    for s in fs::read_dir(dir.join("runs")).unwrap() {
        for f in fs::read_dir(s.unwrap().path()).unwrap() {
            n += fs::read_to_string(f.unwrap().path())
                .unwrap()
                .lines()
                .count();
        }
    }
    n
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(
        r.records()
            .map(|x| x.unwrap().iter().map(String::from).collect()),
    );
    rows
}

#[test]
fn minimal_run_writes_four_records() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("a");
    let o = schemaevo(&[
        "run",
        "--runs",
        "1",
        "--releases",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(jsonl_records(&out), 4);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(
        summary["strategies"][0]["releases"][0]["cumulated_cost"]["n"],
        1
    );
    let cfg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg["config"]["runs"], 1);
    assert_eq!(cfg["tool_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(cfg["config_digest"], summary["config_digest"]);
    assert!(out.join("findings.json").is_file());
}

#[test]
fn default_run_record_count_and_exports() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("d");
    let dir = out.to_str().unwrap();
    assert_eq!(code(&schemaevo(&["run", "--out", dir])), 0);
    assert_eq!(jsonl_records(&out), 4 * 40 * 12);

    assert_eq!(
        code(&schemaevo(&["export", dir, "--figure", "cost-curves"])),
        0
    );
    let rows = read_csv(&out.join("exports/cost-curves.csv"));
    assert_eq!(rows[0], ["release", "strategy", "mean", "median"]);
    assert_eq!(rows.len(), 1 + 12 * 4);

    assert_eq!(code(&schemaevo(&["export", dir, "--figure", "boxplot"])), 0);
    let rows = read_csv(&out.join("exports/boxplot.csv"));
    assert_eq!(rows[0][7], "outlier_csv");
    for r in &rows[1..] {
        let f = |i: usize| r[i].parse::<f64>().unwrap();
        let iqr = f(4) - f(2);
        assert_eq!(f(5), f(2) - 1.5 * iqr.abs());
        assert_eq!(f(6), f(4) + 1.5 * iqr.abs());
    }

    assert_eq!(
        code(&schemaevo(&["export", dir, "--figure", "convergence"])),
        0
    );
    let rows = read_csv(&out.join("exports/convergence.csv"));
    assert_eq!(rows[0], ["checkpoint", "strategy", "release", "deviation"]);
    // checkpoints 10, 20, 40 fit into 40 runs
    assert_eq!(rows.len(), 1 + 3 * 4 * 12);

    let text = fs::read_to_string(out.join("exports/latency-curves.csv"));
    assert!(text.is_err(), "only requested figures are written");

    let check = schemaevo(&["check", dir]);
    assert_eq!(code(&check), 0);
    assert!(String::from_utf8_lossy(&check.stdout).contains("R1"));

    // Re-evaluation from persisted artifacts reproduces the stored findings.
    let before = fs::read(out.join("findings.json")).unwrap();
    assert_eq!(code(&schemaevo(&["check", dir, "--write"])), 0);
    assert_eq!(fs::read(out.join("findings.json")).unwrap(), before);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let common = [
        "run",
        "--runs",
        "6",
        "--releases",
        "4",
        "--set",
        "distribution=uniform",
    ];
    let mut args_a = common.to_vec();
    args_a.extend(["--out", a.to_str().unwrap(), "-j", "1"]);
    let mut args_b = common.to_vec();
    args_b.extend(["--out", b.to_str().unwrap(), "-j", "3"]);
    assert_eq!(code(&schemaevo(&args_a)), 0);
    assert_eq!(code(&schemaevo(&args_b)), 0);
    for f in [
        "summary.json",
        "config.json",
        "findings.json",
        "runs/lazy/run_5.jsonl",
        "runs/eager/run_0.jsonl",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn config_file_and_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("scenario.conf");
    fs::write(
        &cfg,
        "# test scenario\nreleases = 3\nruns = 2\ndistribution = uniform\n",
    )
    .unwrap();
    let out = tmp.path().join("o");
    let o = schemaevo(&[
        "run",
        "-c",
        cfg.to_str().unwrap(),
        "--releases",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(jsonl_records(&out), 4 * 2 * 2);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(v["config"]["distribution"], "uniform");
}

#[test]
fn out_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_schemaevo"))
        .args(["run", "--runs", "1", "--releases", "1"])
        .env("SCHEMAEVO_OUT_ROOT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let dirs: Vec<_> = fs::read_dir(tmp.path()).unwrap().collect();
    assert_eq!(dirs.len(), 1);
    let name = dirs[0].as_ref().unwrap().file_name();
    assert_eq!(name.to_str().unwrap().len(), 16);
}

#[test]
fn errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().to_str().unwrap();
    assert_eq!(
        code(&schemaevo(&["run", "--set", "cardinality_n=7", "--out", p])),
        1
    );
    assert_eq!(
        code(&schemaevo(&["run", "--set", "unknown_key=1", "--out", p])),
        1
    );
    assert_eq!(
        code(&schemaevo(&["run", "-c", "/nonexistent/cfg", "--out", p])),
        1
    );
    assert_eq!(code(&schemaevo(&["export", p, "--figure", "boxplot"])), 1);
    assert_eq!(code(&schemaevo(&["export", p, "--figure", "nonsense"])), 1);
    assert_eq!(code(&schemaevo(&["check", p])), 1);
}

#[test]
fn empty_runs_dir_fails_export() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let dir = out.to_str().unwrap();
    assert_eq!(
        code(&schemaevo(&[
            "run",
            "--runs",
            "1",
            "--releases",
            "1",
            "--out",
            dir
        ])),
        0
    );
    fs::remove_dir_all(out.join("runs")).unwrap();
    fs::create_dir(out.join("runs")).unwrap();
    assert_eq!(
        code(&schemaevo(&["export", dir, "--figure", "cost-curves"])),
        1
    );
}

#[test]
fn validate_lints() {
    assert_eq!(code(&schemaevo(&["validate"])), 0);
    assert_eq!(
        code(&schemaevo(&["validate", "--set", "multi_type_share=0.3"])),
        0
    );
    let o = schemaevo(&["validate", "--set", "multi_type_share=0.3", "--strict-grid"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("multi_type_share"));
    assert_eq!(
        code(&schemaevo(&["validate", "--set", "growth_rate=-1"])),
        1
    );
}

#[test]
fn single_cell_sweep_matches_run() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("sweep.conf");
    fs::write(
        &spec,
        "distribution = uniform\nworkload_executions = 1\nmulti_type_share = 0.5\ncardinality_n = 1\nreleases = 3\nruns = 3\n",
    )
    .unwrap();
    let sweep_out = tmp.path().join("sweep");
    let o = schemaevo(&[
        "sweep",
        "-s",
        spec.to_str().unwrap(),
        "--out",
        sweep_out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cells: Vec<_> = fs::read_dir(&sweep_out)
        .unwrap()
        .map(|d| d.unwrap().path())
        .filter(|p| p.is_dir())
        .collect();
    assert_eq!(cells.len(), 1);

    let run_out = tmp.path().join("run");
    let o = schemaevo(&[
        "run",
        "--set",
        "distribution=uniform",
        "--set",
        "workload_executions=1",
        "--set",
        "multi_type_share=0.5",
        "--releases",
        "3",
        "--runs",
        "3",
        "--out",
        run_out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    for f in [
        "summary.json",
        "config.json",
        "findings.json",
        "runs/predictive/run_2.jsonl",
    ] {
        assert_eq!(
            fs::read(cells[0].join(f)).unwrap(),
            fs::read(run_out.join(f)).unwrap(),
            "{f}"
        );
    }
    assert!(sweep_out.join("sweep.json").is_file());
    assert!(sweep_out.join("factor_table.csv").is_file());

    assert_eq!(
        code(&schemaevo(&[
            "export",
            sweep_out.to_str().unwrap(),
            "--figure",
            "latency-curves"
        ])),
        0
    );
    assert!(cells[0].join("exports/latency-curves.csv").is_file());
}

#[test]
fn small_grid_factor_table() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("grid.json");
    fs::write(
        &spec,
        r#"{"distribution": ["uniform", "pareto"], "workload_executions": [2], "multi_type_share": [0.25],
            "cardinality_n": [1], "releases": 4, "runs": 4}"#,
    )
    .unwrap();
    let out = tmp.path().join("s");
    assert_eq!(
        code(&schemaevo(&[
            "sweep",
            "-s",
            spec.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ])),
        0
    );
    let rows = read_csv(&out.join("factor_table.csv"));
    assert_eq!(rows.len(), 1 + 4);
    assert_eq!(
        &rows[1][..4],
        ["distribution", "uniform", "pareto", "eager"]
    );
    let index: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(index["cells"].as_array().unwrap().len(), 2);
}
