//! End-to-end tests of the `meshqoe` binary: exit codes, file outputs and
//! pipeline wiring.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_meshqoe"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn meshqoe")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn tmp(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_subcommand_exits_1() {
    let out = run(&["definitely-not-a-command"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_flag_exits_1() {
    let out = run(&["gen-data", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_0() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn gen_train_predict_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = tmp(&dir, "data.csv");
    let model = tmp(&dir, "model.json");

    let out = run(&[
        "gen-data",
        "--out",
        path_str(&data),
        "--seed",
        "3",
        "--noise-sigma",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&data).unwrap();
    assert!(
        text.starts_with("mesh_id,lod_index,fraction_removed,faces,distance_m,si_geo,si_col,mos")
    );
    assert_eq!(text.lines().count(), 321); // header + 8*8*5 rows

    let out = run(&[
        "train",
        "--data",
        path_str(&data),
        "--out",
        path_str(&model),
        "--trees",
        "10",
        "--seed",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0));

    let out = run(&[
        "predict",
        "--model",
        path_str(&model),
        "--faces",
        "3250",
        "--distance",
        "4",
        "--lod-index",
        "1",
        "--si-geo",
        "31",
        "--si-col",
        "60",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let value: f64 = stdout(&out).trim().parse().unwrap();
    assert!((1.0..=5.0).contains(&value));
}

#[test]
fn predict_with_constant_model_prints_leaf_value() {
    // A dataset whose MOS is constant trains to a single leaf.
    let dir = tempfile::tempdir().unwrap();
    let data = tmp(&dir, "flat.csv");
    let model = tmp(&dir, "model.json");
    let mut csv =
        String::from("mesh_id,lod_index,fraction_removed,faces,distance_m,si_geo,si_col,mos\n");
    for lod in 1u32..=4 {
        let faces = 1000 - lod * 100;
        let frac = [0.2, 0.4, 0.5, 0.6][(lod - 1) as usize];
        csv.push_str(&format!(
            "M,{lod},{frac:.6},{faces},4.000000,1.000000,1.000000,4.200000\n"
        ));
    }
    std::fs::write(&data, csv).unwrap();
    let out = run(&[
        "train",
        "--data",
        path_str(&data),
        "--out",
        path_str(&model),
        "--trees",
        "1",
        "--no-bootstrap",
        "--mtry",
        "5",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = run(&[
        "predict",
        "--model",
        path_str(&model),
        "--faces",
        "900",
        "--distance",
        "4",
        "--lod-index",
        "1",
        "--si-geo",
        "1",
        "--si-col",
        "1",
    ]);
    assert_eq!(stdout(&out).trim(), "4.2");
}

#[test]
fn allocate_single_mesh_budget_60() {
    let dir = tempfile::tempdir().unwrap();
    let inst = tmp(&dir, "inst.json");
    std::fs::write(
        &inst,
        r#"{"meshes":[{"id":"a","options":[
            {"lod_index":1,"faces":100,"qoe":5.0},
            {"lod_index":2,"faces":50,"qoe":3.0}]}],
          "budget":60}"#,
    )
    .unwrap();
    for method in ["bb", "exhaustive"] {
        let out = run(&[
            "allocate",
            "--instance",
            path_str(&inst),
            "--method",
            method,
        ]);
        assert_eq!(out.status.code(), Some(0));
        let result: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(result["total_qoe"], 3.0);
        assert_eq!(result["chosen"]["a"], 2);
        assert_eq!(result["optimal"], true);
    }
}

#[test]
fn allocate_infeasible_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let inst = tmp(&dir, "inst.json");
    std::fs::write(
        &inst,
        r#"{"meshes":[{"id":"a","options":[{"lod_index":1,"faces":100,"qoe":5.0}]}],"budget":60}"#,
    )
    .unwrap();
    let out = run(&["allocate", "--instance", path_str(&inst), "--method", "bb"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[
        "allocate",
        "--instance",
        path_str(&inst),
        "--method",
        "greedy",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // equal distribution reports exclusions instead of failing
    let out = run(&[
        "allocate",
        "--instance",
        path_str(&inst),
        "--method",
        "equal",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let result: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(result["excluded"][0], "a");
}

#[test]
fn si_command_on_pgm_frames() {
    let dir = tempfile::tempdir().unwrap();
    let edge = tmp(&dir, "edge.pgm");
    let flat = tmp(&dir, "flat.pgm");
    let mut raster = Vec::new();
    for y in 0..8 {
        for x in 0..8 {
            let _ = y;
            raster.push(if x >= 4 { 255u8 } else { 0u8 });
        }
    }
    let mut pgm = b"P5\n8 8\n255\n".to_vec();
    pgm.extend(&raster);
    std::fs::write(&edge, &pgm).unwrap();
    let mut pgm = b"P5\n8 8\n255\n".to_vec();
    pgm.extend(std::iter::repeat_n(128u8, 64));
    std::fs::write(&flat, &pgm).unwrap();

    let flat_si = run(&["si", path_str(&flat)]);
    assert_eq!(stdout(&flat_si).trim(), "0.000000");

    let max_si = run(&["si", path_str(&edge), path_str(&flat)]);
    let alone = run(&["si", path_str(&edge)]);
    assert_eq!(stdout(&max_si), stdout(&alone));

    let per_frame = run(&["si", path_str(&edge), path_str(&flat), "--per-frame"]);
    assert_eq!(stdout(&per_frame).lines().count(), 2);
}

#[test]
fn metrics_command_singletons() {
    let dir = tempfile::tempdir().unwrap();
    let a = tmp(&dir, "a.xyz");
    let b = tmp(&dir, "b.xyz");
    std::fs::write(&a, "0 0 0\n").unwrap();
    std::fs::write(&b, "3 4 0\n").unwrap();
    let out = run(&["metrics", path_str(&a), path_str(&b)]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["hausdorff"], 5.0);
    assert_eq!(doc["rmse"], 5.0);
    assert_eq!(doc["chamfer"], 50.0);
}

#[test]
fn eval_writes_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = tmp(&dir, "data.csv");
    let json = tmp(&dir, "report.json");
    run(&[
        "gen-data",
        "--out",
        path_str(&data),
        "--seed",
        "1",
        "--noise-sigma",
        "0.2",
    ]);
    let out = run(&[
        "eval",
        "--data",
        path_str(&data),
        "--model",
        "linear",
        "--runs",
        "3",
        "--seed",
        "2",
        "--json",
        path_str(&json),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["n_runs"], 3);
    assert_eq!(report["per_run"].as_array().unwrap().len(), 3);
}

#[test]
fn bench_reports_infeasible_smallest_default_budget() {
    let dir = tempfile::tempdir().unwrap();
    let csv = tmp(&dir, "bench.csv");
    let out = run(&[
        "bench",
        "--seed",
        "1",
        "--runs",
        "2",
        "--budgets",
        "25000:50000:25000",
        "--out",
        path_str(&csv),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    let bb25 = text
        .lines()
        .find(|l| l.starts_with("25000,bb"))
        .expect("bb row for 25000");
    assert!(
        bb25.ends_with(",0"),
        "infeasible row should report 0 feasible runs: {bb25}"
    );
    let bb50 = text.lines().find(|l| l.starts_with("50000,bb")).unwrap();
    assert!(bb50.ends_with(",2"));
}
