use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qpic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpic"))
        .args(args)
        .output()
        .expect("qpic runs")
}

fn ok(args: &[&str]) -> Output {
    let out = qpic(args);
    assert!(
        out.status.success(),
        "qpic {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small eight-cell two-stream setup that runs in well under a second.
const SMALL: &[&str] = &["n_cells=8", "nd=8", "particles_per_cell=40", "steps=30", "samples=40"];

fn small_dataset(dir: &Path) {
    let mut args = vec!["generate", "--out-dir", s(dir)];
    args.extend_from_slice(SMALL);
    ok(&args);
}

fn small_train(data: &Path, out: &Path, extra: &[&str]) {
    let ds = format!("dataset_dir={}", data.display());
    let mut args = vec!["train", "--out-dir", s(out), &ds, "epochs=4", "nl=2"];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    ok(&args);
}

#[test]
fn default_generate_writes_three_runs_and_500_samples() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["generate", "--out-dir", s(dir.path())]);
    for v in ["0.03", "0.05", "0.1"] {
        assert!(dir.path().join(format!("frames_{v}.csv")).exists());
    }
    let m = json(&dir.path().join("dataset.json"));
    assert_eq!(m["notes"]["samples"], 500);
    assert_eq!(m["notes"]["frames_total"], 3000);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 3);
}

#[test]
fn thermal_generate_writes_four_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "generate",
        "--out-dir",
        s(dir.path()),
        "scenario=thermal",
        "velocities=[0.01, 0.03, 0.07, 0.1]",
    ];
    args.extend_from_slice(SMALL);
    ok(&args);
    let files = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("frames_"))
        .count();
    assert_eq!(files, 4);
}

#[test]
fn usage_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = qpic(&["generate", "--out-dir", s(dir.path()), "velocities=[]"]);
    assert_eq!(out.status.code(), Some(2));

    let out = qpic(&["generate", "--out-dir", s(dir.path()), "v0_grid=3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("v0_grid"));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "steps = 10\nbogus_key = 1\n").unwrap();
    let out = qpic(&["generate", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_key"));

    let out = qpic(&["simulate", "--solver", "magic", "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(qpic(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = format!("dataset_dir={}", dir.path().join("nowhere").display());
    let out = qpic(&["train", "--out-dir", s(dir.path()), &missing]);
    assert_eq!(out.status.code(), Some(1));
    let ckpt = format!("model:{}", dir.path().join("none.json").display());
    let out = qpic(&["simulate", "--solver", &ckpt, "--out-dir", s(dir.path()), "steps=3"]);
    assert_eq!(out.status.code(), Some(1));
    let out = qpic(&[
        "evaluate",
        "compare",
        "--a",
        "x.csv",
        "--b",
        "y.csv",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "velocity = 0.07\nsteps = 5\nn_cells = 16\n").unwrap();
    let out = dir.path().join("sim");
    ok(&["simulate", "--config", s(&cfg), "--out-dir", s(&out), "steps=7"]);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["config"]["steps"], 7);
    assert_eq!(m["config"]["n_cells"], 16);
    // The resolved configuration re-parses to the same values.
    let text = toml_from_json(&m["config"]);
    let cfg2 = dir.path().join("echo.toml");
    std::fs::write(&cfg2, text).unwrap();
    let out2 = dir.path().join("sim2");
    ok(&["simulate", "--config", s(&cfg2), "--out-dir", s(&out2)]);
    assert_eq!(
        std::fs::read(out.join("diagnostics.csv")).unwrap(),
        std::fs::read(out2.join("diagnostics.csv")).unwrap()
    );
}

fn toml_from_json(v: &Value) -> String {
    let mut out = String::new();
    for (k, v) in v.as_object().unwrap() {
        if k == "out_dir" || v.is_null() {
            continue;
        }
        out.push_str(&format!("{k} = {v}\n"));
    }
    out
}

#[test]
fn baseline_simulation_reports_initial_energy() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "simulate",
        "--solver",
        "baseline",
        "--out-dir",
        s(dir.path()),
        "velocity=0.07",
        "steps=10",
    ]);
    let text = std::fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "step,time,kinetic,field,total,max_abs_E");
    let total: f64 = lines.next().unwrap().split(',').nth(4).unwrap().parse().unwrap();
    assert!((total - 0.00245).abs() < 0.01 * 0.00245, "{total}");
    assert!(dir.path().join("phase_final.csv").exists());
    assert!(dir.path().join("velocity_histogram.csv").exists());
}

#[test]
fn train_writes_checkpoint_with_expected_parameter_count() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["generate", "--out-dir", s(&data), "steps=4", "samples=8"]);
    let ds = format!("dataset_dir={}", data.display());
    let run = dir.path().join("cqc");
    ok(&[
        "train",
        "--out-dir",
        s(&run),
        &ds,
        "model=cqc",
        "ansatz=sel",
        "nl=6",
        "loss=data",
        "epochs=1",
    ]);
    assert_eq!(json(&run.join("model.json"))["params"].as_array().unwrap().len(), 8428);
    assert_eq!(json(&run.join("manifest.json"))["notes"]["param_count"], 8428);
    let loss = std::fs::read_to_string(run.join("loss.csv")).unwrap();
    assert!(loss.starts_with("epoch,loss,wall_ms\n"));

    let run = dir.path().join("ccc");
    ok(&[
        "train",
        "--out-dir",
        s(&run),
        &ds,
        "model=ccc",
        "loss=pinn",
        "lambda=0.3",
        "nd=20",
        "epochs=2",
    ]);
    let ck = json(&run.join("model.json"));
    assert_eq!(ck["params"].as_array().unwrap().len(), 12480);
    assert_eq!(ck["train"]["loss"], "pinn");
    assert_eq!(ck["train"]["lambda"], 0.3);
}

#[test]
fn workers_do_not_change_the_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    small_dataset(&data);
    let (one, six) = (dir.path().join("w1"), dir.path().join("w6"));
    small_train(&data, &one, &["workers=1"]);
    small_train(&data, &six, &["--workers", "6"]);
    let p1 = json(&one.join("model.json"))["params"].clone();
    let p6 = json(&six.join("model.json"))["params"].clone();
    let d = p1
        .as_array()
        .unwrap()
        .iter()
        .zip(p6.as_array().unwrap())
        .map(|(a, b)| (a.as_f64().unwrap() - b.as_f64().unwrap()).abs())
        .fold(0.0, f64::max);
    assert!(d < 1e-10, "parameter distance {d}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    small_dataset(&data);
    let first = std::fs::read(data.join("dataset.json")).unwrap();
    let frames = std::fs::read(data.join("frames_0.1.csv")).unwrap();
    small_dataset(&data);
    assert_eq!(std::fs::read(data.join("dataset.json")).unwrap(), first);
    assert_eq!(std::fs::read(data.join("frames_0.1.csv")).unwrap(), frames);

    let run = dir.path().join("run");
    small_train(&data, &run, &[]);
    let ckpt = std::fs::read(run.join("model.json")).unwrap();
    small_train(&data, &run, &[]);
    assert_eq!(std::fs::read(run.join("model.json")).unwrap(), ckpt);
}

#[test]
fn hybrid_simulation_with_paired_baseline_and_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    small_dataset(&data);
    let run = dir.path().join("run");
    small_train(&data, &run, &[]);
    let solver = format!("model:{}", run.join("model.json").display());

    let sim = dir.path().join("sim");
    let mut args = vec!["simulate", "--solver", &solver, "--pair-baseline", "--out-dir", s(&sim)];
    args.extend_from_slice(SMALL);
    ok(&args);
    let paired = std::fs::read_to_string(sim.join("paired.csv")).unwrap();
    assert!(paired.starts_with("step,mrae_E,baseline_maxE,hybrid_maxE\n"));
    assert_eq!(paired.lines().count(), 31);
    assert_eq!(json(&sim.join("manifest.json"))["notes"]["rescale"], "calibrated");

    let oracle = dir.path().join("oracle");
    let mut args = vec![
        "simulate",
        "--solver",
        &solver,
        "--pair-baseline",
        "--out-dir",
        s(&oracle),
        "rescale=oracle",
    ];
    args.extend_from_slice(SMALL);
    ok(&args);

    let report = dir.path().join("report");
    let (pa, pb) = (sim.join("paired.csv"), oracle.join("paired.csv"));
    let (fa, fb) = (sim.join("phase_final.csv"), oracle.join("phase_final.csv"));
    ok(&[
        "evaluate",
        "compare",
        "--a",
        s(&pa),
        "--b",
        s(&pb),
        "--phase-a",
        s(&fa),
        "--phase-b",
        s(&fb),
        "--out-dir",
        s(&report),
    ]);
    let r = json(&report.join("compare.json"));
    assert!(r["comparison"]["a"]["median"].is_number());
    assert!(r["comparison"]["b"]["median"].is_number());
    assert!(r["comparison"]["wilcoxon"]["p_value"].is_number());

    let same = dir.path().join("same");
    ok(&[
        "evaluate",
        "compare",
        "--a",
        s(&pa),
        "--b",
        s(&pa),
        "--phase-a",
        s(&fa),
        "--phase-b",
        s(&fa),
        "--out-dir",
        s(&same),
    ]);
    let r = json(&same.join("compare.json"));
    assert_eq!(r["comparison"]["wilcoxon"]["p_value"], 1.0);
    assert_eq!(r["velocity_energy_distance"], 0.0);

    ok(&["evaluate", "phase", "--a", s(&fa), "--b", s(&fa), "--out-dir", s(&same)]);
    assert_eq!(json(&same.join("phase.json"))["velocity_energy_distance"], 0.0);
    assert!(same.join("histogram_a.csv").exists());

    let diag = sim.join("diagnostics.csv");
    ok(&["evaluate", "growth", "--diagnostics", s(&diag), "--out-dir", s(&same)]);
    assert!(json(&same.join("growth.json"))["growth_rate"].is_number());
}

#[test]
fn checkpoint_grid_mismatch_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    small_dataset(&data);
    let run = dir.path().join("run");
    small_train(&data, &run, &[]);
    let solver = format!("model:{}", run.join("model.json").display());
    let out = qpic(&[
        "simulate",
        "--solver",
        &solver,
        "--out-dir",
        s(dir.path()),
        "n_cells=16",
        "steps=3",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ansatz_sweep_writes_fifteen_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    small_dataset(&data);
    let ds = format!("dataset_dir={}", data.display());
    let out = dir.path().join("sweep");
    let mut args = vec!["evaluate", "sweep", "--out-dir", s(&out), &ds, "epochs=1"];
    args.extend_from_slice(SMALL);
    ok(&args);
    let table = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "ansatz,nl,params,median,q1,q3,final_loss");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 15);
    assert!(rows[0].starts_with("sel,2,"));
    assert!(rows[14].starts_with("s2d,10,"));
}

#[test]
fn default_directories_chain_generate_train_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_qpic"))
            .current_dir(dir.path())
            .args(args)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    run(&["generate", "steps=4", "samples=8"]);
    assert!(dir.path().join("data/dataset.json").exists());
    run(&["train", "model=ccc", "epochs=1", "steps=4"]);
    assert!(dir.path().join("out/model.json").exists());
    run(&["simulate", "--solver", "model:out/model.json", "steps=4"]);
    assert!(dir.path().join("out/diagnostics.csv").exists());
}
