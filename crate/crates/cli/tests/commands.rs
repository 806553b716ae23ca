use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use bicap_core::io::read_grid;
use bicap_core::metrics::roc_auc;
use bicap_core::Mode;
use bicap_testkit::{letters_table, pairwise_auc};
use tempfile::TempDir;

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn bicap(args: &[&str]) -> Out {
    let out = Command::new(env!("CARGO_BIN_EXE_bicap")).args(args).output().unwrap();
    Out {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, extra: &[&str]) {
    let mut args = vec!["--out-dir", s(dir), "synth"];
    args.extend_from_slice(extra);
    let out = bicap(&args);
    assert_eq!(out.code, 0, "{}", out.stderr);
}

fn grid_args(dir: &Path) -> Vec<String> {
    (1..=3).flat_map(|i| ["--grid".to_string(), dir.join(format!("source_{i}.csv")).display().to_string()]).collect()
}

fn train(dir: &Path, extra: &[&str]) -> Out {
    let mut args: Vec<String> = ["--out-dir", s(dir), "train", "--instances"].map(String::from).to_vec();
    args.push(dir.join("instances.csv").display().to_string());
    args.extend(["--bags".into(), dir.join("bags.csv").display().to_string()]);
    args.extend(["--labels".into(), dir.join("labels.csv").display().to_string()]);
    args.extend(extra.iter().map(|x| x.to_string()));
    bicap(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

fn grid_values(path: &Path) -> Vec<f64> {
    read_grid(fs::read(path).unwrap().as_slice()).unwrap().into_data()
}

#[test]
fn synth_writes_expected_files() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), &[]);
    for name in [
        "source_1.csv",
        "source_2.csv",
        "source_3.csv",
        "source_1.pgm",
        "gt_bipolar.csv",
        "gt_neutral.csv",
        "instances.csv",
        "bags.csv",
        "labels.csv",
        "synth.manifest.json",
    ] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn synth_tile_arithmetic() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), &["--tile", "10", "--size", "100"]);
    let labels = fs::read_to_string(dir.path().join("labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 1 + 100);
    let dir = TempDir::new().unwrap();
    synth(dir.path(), &["--tile", "5", "--size", "50"]);
    assert_eq!(fs::read_to_string(dir.path().join("labels.csv")).unwrap().lines().count(), 1 + 100);
    let out = bicap(&["--out-dir", s(dir.path()), "synth", "--tile", "0"]);
    assert_eq!(out.code, 2);
}

#[test]
fn synth_is_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    synth(a.path(), &["--seed", "5"]);
    synth(b.path(), &["--seed", "5"]);
    for entry in fs::read_dir(a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        if name.to_string_lossy().ends_with(".manifest.json") {
            continue;
        }
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn train_records_stop_reason_and_mode() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), &["--size", "40"]);
    let out = train(dir.path(), &["-I", "50"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("train.manifest.json")).unwrap()).unwrap();
    let reason = manifest["config"]["stop_reason"].as_str().unwrap();
    assert!(reason == "converged" || reason == "max_iterations");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);

    let out = train(dir.path(), &["-I", "50", "--mode", "obj2"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let text = fs::read_to_string(dir.path().join("bicap.txt")).unwrap();
    assert!(text.starts_with("bicap m=3 mode=obj2\n"));
    assert!(text.lines().any(|l| l == "A=-;B=-;0.000000"));
    let history = fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert!(history.starts_with("iteration,j_total\n0,"));
}

#[test]
fn train_input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), &["--size", "40"]);
    // a bag without a label
    let labels = fs::read_to_string(dir.path().join("labels.csv")).unwrap();
    let truncated: String = labels.lines().take(3).map(|l| format!("{l}\n")).collect();
    fs::write(dir.path().join("labels.csv"), truncated).unwrap();
    let out = train(dir.path(), &[]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("has no label"), "{}", out.stderr);

    fs::remove_file(dir.path().join("labels.csv")).unwrap();
    assert_eq!(train(dir.path(), &[]).code, 2);
}

#[test]
fn config_errors_exit_three() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), &["--size", "40"]);
    let cfg = dir.path().join("run.cfg");
    for bad in ["P = 0\n", "colour = blue\n", "eta = much\n"] {
        fs::write(&cfg, bad).unwrap();
        let out = train(dir.path(), &["--config", s(&cfg)]);
        assert_eq!(out.code, 3, "{bad}: {}", out.stderr);
    }
    assert_eq!(train(dir.path(), &["--eta", "1.5"]).code, 3);
    fs::write(&cfg, "P = 4\nI = 3\nmode = obj2\nJ_T = 0\n").unwrap();
    assert_eq!(train(dir.path(), &["--config", s(&cfg)]).code, 0);
    let manifest = fs::read_to_string(dir.path().join("train.manifest.json")).unwrap();
    assert!(manifest.contains("\"population\": 4"));
    assert!(manifest.contains("\"iterations_run\": 3"));
}

fn write_bicap(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn fuse_raw_and_absolute() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), &["--size", "30"]);
    let g = write_bicap(dir.path(), "t2.txt", &letters_table(Mode::Obj2).to_file_text());
    let raw_dir = dir.path().join("raw");
    let abs_dir = dir.path().join("abs");
    let mut args = vec![
        "--out-dir".to_string(),
        s(&raw_dir).into(),
        "fuse".into(),
        "--bicap".into(),
        s(&g).into(),
        "--raw".into(),
    ];
    args.extend(grid_args(dir.path()));
    assert_eq!(bicap(&args.iter().map(String::as_str).collect::<Vec<_>>()).code, 0);
    // same command without --raw
    args[1] = s(&abs_dir).into();
    args.truncate(5);
    args.extend(grid_args(dir.path()));
    assert_eq!(bicap(&args.iter().map(String::as_str).collect::<Vec<_>>()).code, 0);
    let raw = grid_values(&raw_dir.join("fused.csv"));
    let abs = grid_values(&abs_dir.join("fused.csv"));
    assert!(raw.iter().any(|v| *v < 0.0));
    assert_eq!(abs, raw.iter().map(|v| v.abs()).collect::<Vec<_>>());
    assert!(abs_dir.join("fused.pgm").exists());
}

#[test]
fn fuse_constant_plus_one_grid() {
    let dir = TempDir::new().unwrap();
    let grid = "# 2 3\n1,1,1\n1,1,1\n";
    let mut args = vec!["--out-dir".to_string(), s(dir.path()).into(), "fuse".into(), "--bicap".into()];
    args.push(s(&write_bicap(dir.path(), "g.txt", &letters_table(Mode::Obj1).to_file_text())).into());
    for i in 0..3 {
        let p = dir.path().join(format!("ones_{i}.csv"));
        fs::write(&p, grid).unwrap();
        args.extend(["--grid".into(), s(&p).into()]);
    }
    assert_eq!(bicap(&args.iter().map(String::as_str).collect::<Vec<_>>()).code, 0);
    assert_eq!(grid_values(&dir.path().join("fused.csv")), vec![1.0; 6]);

    // two sources against a three-source bi-capacity
    args.truncate(args.len() - 2);
    let out = bicap(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("expects 3"), "{}", out.stderr);
}

#[test]
fn fuse_letters_table_on_exact_scene() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), &["--blur", "0", "--noise", "0"]);
    let g = write_bicap(dir.path(), "t1.txt", &letters_table(Mode::Obj1).to_file_text());
    let mut args = vec!["--out-dir".to_string(), s(dir.path()).into(), "fuse".into(), "--bicap".into(), s(&g).into()];
    args.extend(grid_args(dir.path()));
    assert_eq!(bicap(&args.iter().map(String::as_str).collect::<Vec<_>>()).code, 0);
    let fused = grid_values(&dir.path().join("fused.csv"));
    let neutral = grid_values(&dir.path().join("gt_neutral.csv"));
    for (f, n) in fused.iter().zip(&neutral) {
        let expected = match *n as i32 {
            1 => 0.97,
            -1 => -1.0,
            _ => -0.85,
        };
        assert_eq!(*f, expected);
    }
}

#[test]
fn eval_reports() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), &["--size", "40"]);
    let gt = dir.path().join("gt_bipolar.csv");
    let out = bicap(&["--out-dir", s(dir.path()), "eval", "--fused", s(&gt), "--gt", s(&gt)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.stdout, "method,auc,rmse,n\nbicap,1,0,1600\n");

    let mut args =
        vec!["--out-dir".to_string(), s(dir.path()).into(), "eval".into(), "--baseline".into(), "mean".into()];
    args.extend(["--gt".into(), s(&gt).into()]);
    args.extend(grid_args(dir.path()));
    let out = bicap(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.lines().nth(1).unwrap().starts_with("mean,"));
    assert!(dir.path().join("scores_mean.csv").exists());

    // |gt_neutral| marks both letters as targets
    let neutral = dir.path().join("gt_neutral.csv");
    let out =
        bicap(&["--out-dir", s(dir.path()), "eval", "--fused", s(&neutral), "--abs", "--gt", s(&neutral), "--gt-abs"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.stdout, "method,auc,rmse,n\nbicap,1,0,1600\n");
    let out = bicap(&["--out-dir", s(dir.path()), "eval", "--fused", s(&neutral), "--abs", "--gt", s(&neutral)]);
    assert_ne!(out.stdout, "method,auc,rmse,n\nbicap,1,0,1600\n");

    let short = dir.path().join("short.csv");
    fs::write(&short, "# 1 2\n0.5,0.5\n").unwrap();
    assert_eq!(bicap(&["--out-dir", s(dir.path()), "eval", "--fused", s(&short), "--gt", s(&gt)]).code, 2);
}

#[test]
fn eval_auc_matches_pairwise_oracle_on_subsample() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), &[]);
    let s1 = grid_values(&dir.path().join("source_1.csv"));
    let gt = grid_values(&dir.path().join("gt_bipolar.csv"));
    // every 20th pixel: 500 pixels spanning both classes
    let idx: Vec<usize> = (0..gt.len()).step_by(20).collect();
    let mut fused = String::from("instance_id,value\n");
    let mut truth = String::from("instance_id,value\n");
    for &i in &idx {
        fused.push_str(&format!("{i},{}\n", s1[i]));
        truth.push_str(&format!("{i},{}\n", gt[i]));
    }
    fs::write(dir.path().join("f.csv"), fused).unwrap();
    fs::write(dir.path().join("t.csv"), truth).unwrap();
    let out = bicap(&[
        "--out-dir",
        s(dir.path()),
        "eval",
        "--fused",
        s(&dir.path().join("f.csv")),
        "--gt",
        s(&dir.path().join("t.csv")),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let auc: f64 = out.stdout.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    let scores: Vec<f64> = idx.iter().map(|&i| s1[i]).collect();
    let targets: Vec<bool> = idx.iter().map(|&i| gt[i] > 0.0).collect();
    assert_eq!(auc, pairwise_auc(&scores, &targets));
    assert_eq!(auc, roc_auc(&scores, &targets).unwrap());
}

#[test]
fn inspect_letters_table_and_roundtrip() {
    let dir = TempDir::new().unwrap();
    let g = write_bicap(dir.path(), "t1.txt", &letters_table(Mode::Obj1).to_file_text());
    let out = bicap(&["inspect", s(&g)]);
    assert_eq!(out.code, 0);
    let row23 = out.stdout.lines().find(|l| l.starts_with("23 ")).unwrap();
    // columns: label, then empty set, then {1}
    let cells: Vec<&str> = row23.split_whitespace().collect();
    assert_eq!(&cells[..3], &["23", "0.77", "-0.85"]);

    let parsed = bicap_core::lattice::parse_matrix_text(&out.stdout).unwrap();
    let again = write_bicap(dir.path(), "again.txt", &parsed.to_file_text());
    assert_eq!(bicap(&["inspect", s(&again)]).stdout, out.stdout);
}

#[test]
fn inspect_rejects_invalid_tables() {
    let dir = TempDir::new().unwrap();
    let text = letters_table(Mode::Obj1).to_file_text().replace("A=1,2;B=3;0.970000", "A=1,2;B=3;-0.5");
    let g = write_bicap(dir.path(), "bad.txt", &text);
    let out = bicap(&["inspect", s(&g)]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("g_{12,3}"), "{}", out.stderr);
}
