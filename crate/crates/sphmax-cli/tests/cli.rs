//! End-to-end tests of the batch CLI: exit codes, artifact formats, and
//! byte-level reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn sphmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sphmax"))
        .args(args)
        .env_remove("SPHMAX_SEED")
        .output()
        .expect("binary runs")
}

fn sphmax_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sphmax"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn region_reference_point() {
    let out = sphmax(&["region", "--m", "2", "--n", "2", "--recips", "1/2,1/2"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["verdict"], "InteriorStrong");

    let out = sphmax(&["region", "--n", "2", "--recips", "1,1"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["verdict"], "Unbounded");
}

#[test]
fn region_rejects_floats() {
    let out = sphmax(&["region", "--n", "2", "--recips", "0.5,0.5"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn vertices_csv_has_five_rows_for_bilinear() {
    let out = sphmax(&["vertices", "--m", "2", "--n", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.trim().lines().collect();
    assert_eq!(lines[0], "recip_1,recip_2");
    assert_eq!(lines.len(), 6); // header + 2^m + m - 1 rows
    assert!(lines.contains(&"1/2,1"));
}

#[test]
fn lemma2_passes_and_reports() {
    let out = sphmax(&[
        "lemma2",
        "--r1",
        "1",
        "--r2",
        "1",
        "--c",
        "2",
        "--samples",
        "50000",
        "--seed",
        "5",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["outcome"], "Pass");
    assert!(doc["max_ratio"].as_f64().unwrap() <= 2.0 + 1e-9);
}

#[test]
fn dry_run_validates_without_computing() {
    let out = sphmax(&[
        "prop1",
        "--m",
        "2",
        "--n",
        "2",
        "--recips",
        "3/4,3/4",
        "--R",
        "16,32,64,128,256,512",
        "--seed",
        "7",
        "--dry-run",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["subcommand"], "prop1");
    assert_eq!(doc["critical"], true);
    assert_eq!(doc["expected_slope"], -3.0);
}

#[test]
fn env_seed_overrides_config() {
    let out = sphmax_env(
        &[
            "prop1",
            "--m",
            "2",
            "--n",
            "2",
            "--recips",
            "3/4,3/4",
            "--R",
            "16,32,64,128",
            "--seed",
            "7",
            "--dry-run",
        ],
        "SPHMAX_SEED",
        "99",
    );
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["seed"], 99);
}

#[test]
fn prop2_artifacts_are_reproducible() {
    let dir = std::env::temp_dir().join("sphmax-cli-test-prop2");
    std::fs::create_dir_all(&dir).unwrap();
    let csv_a = dir.join("a.csv");
    let json_a = dir.join("a.json");
    let svg_a = dir.join("a.svg");
    let run = |csv: &Path, json: &Path, svg: &Path, seed: &str| {
        sphmax(&[
            "prop2",
            "--m",
            "2",
            "--n",
            "2",
            "--k",
            "1",
            "--R",
            "16,32,64,128",
            "--seed",
            seed,
            "--ball-nodes",
            "1500",
            "--csv",
            csv.to_str().unwrap(),
            "--json",
            json.to_str().unwrap(),
            "--plot",
            svg.to_str().unwrap(),
        ])
    };
    let out = run(&csv_a, &json_a, &svg_a, "11");
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let csv_b = dir.join("b.csv");
    let json_b = dir.join("b.json");
    let svg_b = dir.join("b.svg");
    let out = run(&csv_b, &json_b, &svg_b, "11");
    assert!(out.status.success());

    // Same configuration and seed: byte-identical artifacts.
    assert_eq!(
        std::fs::read(&csv_a).unwrap(),
        std::fs::read(&csv_b).unwrap()
    );
    assert_eq!(
        std::fs::read(&json_a).unwrap(),
        std::fs::read(&json_b).unwrap()
    );
    assert_eq!(
        std::fs::read(&svg_a).unwrap(),
        std::fs::read(&svg_b).unwrap()
    );

    let csv_text = std::fs::read_to_string(&csv_a).unwrap();
    assert!(csv_text.starts_with("R,value,std_error\n"));
    assert_eq!(csv_text.trim().lines().count(), 5);
    let svg_text = std::fs::read_to_string(&svg_a).unwrap();
    assert!(svg_text.starts_with("<svg"));
    assert!(!svg_text.contains("http://") || svg_text.contains("xmlns"));

    // The k = 1 indicator scan is deterministic by design (the sampling
    // ball sits inside the support), so a seed change cannot move it. Use
    // the genuinely stochastic critical scan for the cross-seed check.
    let p1 = |csv: &Path, seed: &str| {
        sphmax(&[
            "prop1",
            "--m",
            "2",
            "--n",
            "2",
            "--recips",
            "3/4,3/4",
            "--R",
            "16,32,64,128",
            "--seed",
            seed,
            "--ball-nodes",
            "1500",
            "--csv",
            csv.to_str().unwrap(),
        ])
    };
    let csv_c = dir.join("c.csv");
    let csv_d = dir.join("d.csv");
    let csv_e = dir.join("e.csv");
    assert!(p1(&csv_c, "11").status.code().is_some());
    assert!(p1(&csv_d, "11").status.code().is_some());
    assert!(p1(&csv_e, "12").status.code().is_some());
    assert_eq!(
        std::fs::read(&csv_c).unwrap(),
        std::fs::read(&csv_d).unwrap()
    );
    assert_ne!(
        std::fs::read(&csv_c).unwrap(),
        std::fs::read(&csv_e).unwrap()
    );
}

#[test]
fn run_config_rejects_unknown_keys() {
    let dir = std::env::temp_dir().join("sphmax-cli-test-cfg");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.json");
    std::fs::write(
        &path,
        r#"{"subcommand": "lemma2", "r1": 1.0, "r2": 1.0, "c": 2.0, "bogus": 1}"#,
    )
    .unwrap();
    let out = sphmax(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn run_config_executes_jobs() {
    let dir = std::env::temp_dir().join("sphmax-cli-test-run");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("lemma2.json");
    std::fs::write(
        &path,
        r#"{"subcommand": "lemma2", "r1": 2.0, "r2": 3.0, "c": 5.0, "samples": 50000, "seed": 4}"#,
    )
    .unwrap();
    let out = sphmax(&["run", "--config", path.to_str().unwrap()]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(doc["max_ratio"].as_f64().unwrap() <= 25.0 + 1e-9);
}

#[test]
fn unwritable_output_path_is_config_error() {
    let out = sphmax(&[
        "vertices",
        "--m",
        "2",
        "--n",
        "2",
        "--out",
        "/nonexistent-dir/v.csv",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn operator_eval_single_point_and_field() {
    let dir = std::env::temp_dir().join("sphmax-cli-test-op");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg_path = dir.join("mean.json");
    std::fs::write(
        &cfg_path,
        r#"{
            "op": "mean",
            "m": 2, "n": 2,
            "functions": [
                {"kind": "constant", "value": 1.0},
                {"kind": "constant", "value": 1.0}
            ],
            "x": [0.0, 0.0],
            "t": 1.0,
            "nodes": 500,
            "seed": 1
        }"#,
    )
    .unwrap();
    let out = sphmax(&["operator-eval", "--config", cfg_path.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["value"], 1.0);

    // Field mode writes a lattice CSV that parses back.
    let field_cfg = dir.join("field.json");
    let field_csv = dir.join("field.csv");
    std::fs::write(
        &field_cfg,
        format!(
            r#"{{
                "op": "hardy-littlewood",
                "m": 1, "n": 2,
                "functions": [{{"kind": "ball", "center": [0.0, 0.0], "radius": 1.0}}],
                "lattice": {{"half_width": 1.0, "spacing": 0.5}},
                "nodes": 400,
                "seed": 2,
                "radius_grid": {{"t_min": 0.1, "t_max": 5.0, "count": 24}},
                "out_csv": {:?}
            }}"#,
            field_csv.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = sphmax(&["operator-eval", "--config", field_cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&field_csv).unwrap();
    let grid = sphmax::functions::LatticeGrid::from_csv(&text).unwrap();
    assert_eq!(grid.extents(), &[4, 4]);
    // The maximal average of a nonnegative indicator is nonnegative and
    // bounded by one.
    assert!(grid.values().iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = std::env::temp_dir().join("sphmax-cli-test-threads");
    std::fs::create_dir_all(&dir).unwrap();
    let one = dir.join("one.csv");
    let two = dir.join("two.csv");
    for (path, threads) in [(&one, "1"), (&two, "2")] {
        let out = sphmax(&[
            "prop1",
            "--m",
            "2",
            "--n",
            "2",
            "--recips",
            "3/4,3/4",
            "--R",
            "16,32,64,128",
            "--seed",
            "31",
            "--ball-nodes",
            "2000",
            "--csv",
            path.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert!(out.status.code().is_some());
    }
    assert_eq!(std::fs::read(&one).unwrap(), std::fs::read(&two).unwrap());
}

#[test]
fn slice_check_quick() {
    let out = sphmax(&[
        "slice-check",
        "--cases",
        "2,2,1",
        "--nodes",
        "20000",
        "--seed",
        "3",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("Pass"));
}
