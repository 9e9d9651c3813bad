//! End-to-end runs of the `loopmesh` binary on the bundled fixtures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use loopmesh::ingest::read_msh;
use loopmesh_cli::commands::points_csv;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn loopmesh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loopmesh"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Small network so the runs take well under a second.
fn small_config(dir: &Path) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(
        &p,
        r#"{"hidden1": 16, "hidden2": 16, "epochs": 20, "mode": "stand-clamp"}"#,
    )
    .unwrap();
    p
}

#[test]
fn train_predict_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = small_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    let manifest = data("manifest.json");

    let o = loopmesh(&[
        "--config",
        cfg,
        "--ratio",
        "1",
        "--out-dir",
        out,
        "train",
        manifest.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["checkpoint.json", "train_log.csv", "run_manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let log = fs::read_to_string(dir.path().join("train_log.csv")).unwrap();
    assert!(log.starts_with("epoch,chamfer,repulsion,interior,total,mean_pairwise\n"));
    assert_eq!(log.lines().count(), 21);

    let ck = dir.path().join("checkpoint.json");
    let dat = data("naca2220.dat");
    let msh = data("naca2220.msh");
    let o = loopmesh(&[
        "--out-dir",
        out,
        "predict",
        ck.to_str().unwrap(),
        dat.to_str().unwrap(),
        "--truth",
        msh.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("interior: "));
    let csv = fs::read_to_string(dir.path().join("prediction.csv")).unwrap();
    assert_eq!(csv.lines().count(), 401);
    let svg = fs::read_to_string(dir.path().join("prediction.svg")).unwrap();
    assert!(
        svg.contains("fill=\"green\"")
            && svg.contains("stroke=\"red\"")
            && svg.contains("fill=\"blue\"")
    );

    let o = loopmesh(&[
        "--out-dir",
        out,
        "predict",
        ck.to_str().unwrap(),
        dat.to_str().unwrap(),
    ]);
    let svg = fs::read_to_string(dir.path().join("prediction.svg")).unwrap();
    assert!(o.status.success() && !svg.contains("green"));

    let pred = dir.path().join("prediction.csv");
    let o = loopmesh(&[
        "--out-dir",
        out,
        "evaluate",
        pred.to_str().unwrap(),
        msh.to_str().unwrap(),
        "--dat",
        dat.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rows: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(rows[0], "ratio,region,nodes,kl");
    assert!(
        rows[1].starts_with("0,c,400,") && rows[2].starts_with("0,w,400,"),
        "{rows:?}"
    );

    // a checkpoint evaluates the same prediction
    let o2 = loopmesh(&[
        "--out-dir",
        out,
        "--ratio",
        "0",
        "evaluate",
        ck.to_str().unwrap(),
        msh.to_str().unwrap(),
        "--dat",
        dat.to_str().unwrap(),
    ]);
    assert_eq!(stdout(&o2), stdout(&o));
}

#[test]
fn evaluating_truth_against_itself_gives_zero() {
    let dir = tempfile::tempdir().unwrap();
    let msh = data("naca2220.msh");
    let pred = dir.path().join("truth.csv");
    fs::write(&pred, points_csv(&read_msh(&msh).unwrap())).unwrap();
    let o = loopmesh(&[
        "--out-dir",
        dir.path().to_str().unwrap(),
        "evaluate",
        pred.to_str().unwrap(),
        msh.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let kls: Vec<f64> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(kls.len(), 2);
    assert!(kls.iter().all(|&k| k < 1e-6), "{kls:?}");
}

#[test]
fn malformed_prediction_row_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("p.csv");
    fs::write(&pred, "x,y\n0.1,0.2\n0.3\n").unwrap();
    let msh = data("naca2220.msh");
    let o = loopmesh(&[
        "--out-dir",
        dir.path().to_str().unwrap(),
        "evaluate",
        pred.to_str().unwrap(),
        msh.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 3"));
}

#[test]
fn node_mismatch_on_predict_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = small_config(dir.path());
    let o = loopmesh(&[
        "--config",
        cfg.to_str().unwrap(),
        "--epochs",
        "1",
        "--out-dir",
        out,
        "train",
        data("manifest.json").to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let ck = dir.path().join("checkpoint.json");
    let o = loopmesh(&[
        "--nodes",
        "300",
        "--out-dir",
        out,
        "predict",
        ck.to_str().unwrap(),
        data("naca2220.dat").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn divergence_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = loopmesh(&[
        "--config",
        small_config(dir.path()).to_str().unwrap(),
        "--mode",
        "raw",
        "--lr",
        "1e300",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "train",
        data("manifest.json").to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(String::from_utf8_lossy(&o.stderr).contains("epoch"));
}

#[test]
fn bad_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"nodez": 10}"#).unwrap();
    let o = loopmesh(&[
        "--config",
        cfg.to_str().unwrap(),
        "train",
        data("manifest.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_trains_once_then_reuses() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let args = |out: &Path| {
        vec![
            "--config".to_string(),
            small_config(dir.path()).to_str().unwrap().to_string(),
            "--out-dir".into(),
            out.to_str().unwrap().into(),
            "sweep".into(),
            data("manifest.json").to_str().unwrap().into(),
            "--ratios".into(),
            "1,0".into(),
            "--nodes-list".into(),
            "300,400".into(),
        ]
    };
    let run = |a: Vec<String>| {
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        loopmesh(&a)
    };
    let o = run(args(&out));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("trained 4, reused 0, failed 0"));
    assert_eq!(fs::read_dir(out.join("cells")).unwrap().count(), 4);
    assert_eq!(fs::read_dir(out.join("panels")).unwrap().count(), 4);

    let first = fs::read_to_string(out.join("kl.csv")).unwrap();
    let rows: Vec<&str> = first.lines().collect();
    assert_eq!(rows.len(), 9);
    let keys: Vec<String> = rows[1..]
        .iter()
        .map(|r| r.split(',').take(3).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(
        keys,
        ["1,c,300", "1,c,400", "1,w,300", "1,w,400", "0,c,300", "0,c,400", "0,w,300", "0,w,400"]
    );
    assert!(rows[1..]
        .iter()
        .all(|r| r.rsplit(',').next().unwrap().parse::<f64>().unwrap() >= 0.0));

    let o = run(args(&out));
    assert!(stdout(&o).contains("trained 0, reused 4, failed 0"));
    assert_eq!(fs::read_to_string(out.join("kl.csv")).unwrap(), first);
    let table = fs::read_to_string(out.join("kl_table.csv")).unwrap();
    assert!(table.starts_with("ratio,region,300,400\n"), "{table}");
}

#[test]
fn sweep_records_failed_cells_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = loopmesh(&[
        "--config",
        small_config(dir.path()).to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "sweep",
        data("manifest.json").to_str().unwrap(),
        "--ratios",
        "0",
        "--nodes-list",
        "1,300",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("trained 1, reused 0, failed 1"));
    let csv = fs::read_to_string(out.join("kl.csv")).unwrap();
    assert!(
        csv.contains("0,c,1,\n") && csv.contains("0,w,1,\n"),
        "{csv}"
    );
}

#[test]
fn run_manifest_verifies_its_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = loopmesh(&[
        "--config",
        small_config(dir.path()).to_str().unwrap(),
        "--epochs",
        "1",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "train",
        data("manifest.json").to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let m =
        loopmesh_cli::manifest::RunManifest::load(&dir.path().join("run_manifest.json")).unwrap();
    assert_eq!(m.inputs.len(), 3);
    assert_eq!(m.config.epochs, 1);
    m.verify_inputs().unwrap();
}
