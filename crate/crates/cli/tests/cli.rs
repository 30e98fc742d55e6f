use std::path::Path;
use std::process::{Command, Output};

use signloss::format::write_tensor;
use signloss::Tensor;

fn signloss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_signloss"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, shape: &[usize], data: &[f64]) -> String {
    let path = dir.join(name);
    write_tensor(&Tensor::new(shape.to_vec(), data.to_vec()).unwrap(), &path).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn dsl_prints_loss_and_writes_gradients() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.dst", &[3], &[0.0, 1.0, 0.0]);
    let y = write(dir.path(), "y.dst", &[3], &[0.0, 1.0, 2.0]);
    let o = signloss(&["dsl", &x, &y, "--sharpness", "1000000"]);
    assert!(o.status.success(), "{o:?}");
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 1.0).abs() < 1e-9);

    let o = signloss(&["dsl", &x, &y, "--sign", "exact", "--scale"]);
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 1.0);

    let prefix = dir.path().join("g").to_string_lossy().into_owned();
    let o = signloss(&["dsl", &x, &y, "--sharpness", "1", "--grad", &prefix]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("d_sharpness"));
    let dy = signloss::read_tensor(format!("{prefix}_dy.dst")).unwrap();
    assert_eq!(dy.shape(), &[3]);
}

#[test]
fn persistence_then_wasserstein() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.dst", &[5], &[3.0, 1.0, 4.0, 1.0, 5.0]);
    let b = write(dir.path(), "b.dst", &[5], &[3.0, 1.0, 4.0, 2.0, 5.0]);
    let da = dir.path().join("a.csv").to_string_lossy().into_owned();
    let db = dir.path().join("b.csv").to_string_lossy().into_owned();
    assert!(signloss(&["persistence", &a, "--out", &da]).status.success());
    assert!(signloss(&["persistence", &b, "--out", &db]).status.success());
    let printed = stdout(&signloss(&["persistence", &a]));
    assert_eq!(printed, std::fs::read_to_string(&da).unwrap());
    assert!(printed.contains("inf"));

    let o = signloss(&["wasserstein", &da, &da]);
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 0.0);
    // (1, 4) against (2, 4): cheaper to move than to send both to the diagonal.
    let o = signloss(&["wasserstein", &da, &db, "--p", "1"]);
    assert!((stdout(&o).trim().parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    let o = signloss(&["wasserstein", &da, &db, "--inf", "reject"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn corrdist_identity_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.dst", &[2, 3], &[0.0, 1.0, 3.0, 2.0, 5.0, 4.0]);
    let o = signloss(&["corrdist", &x, &x]);
    assert!(o.status.success());
    assert!(stdout(&o).trim().parse::<f64>().unwrap().abs() < 1e-12);
    let o = signloss(&["corrdist", &x, &x, "--feature-axis", "0"]);
    assert!(o.status.success());
}

#[test]
fn calibrate_writes_log() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    std::fs::create_dir(&data).unwrap();
    for i in 0..16 {
        let v: Vec<f64> = (0..8).map(|j| ((i * 8 + j) as f64 * 0.37).sin() * 0.2).collect();
        write(&data, &format!("{i:02}.dst"), &[8], &v);
    }
    let log = dir.path().join("log.csv");
    let o = signloss(&[
        "calibrate",
        data.to_str().unwrap(),
        "--ref",
        "mse",
        "--max-steps",
        "50",
        "--batch-size",
        "8",
        "--log",
        log.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let s: f64 = stdout(&o).trim().parse().unwrap();
    assert!(s > 0.0 && s.is_finite());
    assert!(std::fs::read_to_string(log).unwrap().starts_with("step,s,opt_loss\n"));
}

#[test]
fn train_demo_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = signloss(&[
        "train-demo",
        "walk",
        "--dsl",
        "1",
        "--batches",
        "3",
        "--examples",
        "70",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("directional_agreement"));
    for f in ["train_log.csv", "evaluation.csv", "model/manifest.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn bench_reports_peak_memory() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let o = signloss(&[
        "bench", "--kinds", "mse,dsl", "--ranks", "1", "--sizes", "64,256", "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    // The binary installs the counting allocator, so peaks are filled in.
    assert!(lines[1..].iter().all(|l| !l.ends_with(',')));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(signloss(&["dsl"]).status.code(), Some(2));
    assert_eq!(signloss(&["bench", "--kinds", "nope"]).status.code(), Some(2));
    let missing = dir.path().join("missing.dst");
    let m = missing.to_str().unwrap();
    assert_eq!(signloss(&["dsl", m, m]).status.code(), Some(3));

    let bad = dir.path().join("bad.dst");
    std::fs::write(&bad, b"NOPE").unwrap();
    let b = bad.to_str().unwrap();
    assert_eq!(signloss(&["persistence", b]).status.code(), Some(3));

    let x = write(dir.path(), "x.dst", &[3], &[0.0, 1.0, 0.0]);
    let one = write(dir.path(), "one.dst", &[1], &[0.0]);
    assert_eq!(signloss(&["dsl", &one, &one]).status.code(), Some(4));
    assert_eq!(signloss(&["dsl", &x, &x, "--weights", "1,2"]).status.code(), Some(2));
    let flat = write(dir.path(), "flat.dst", &[3], &[1.0, 1.0, 1.0]);
    assert_eq!(signloss(&["corrdist", &x, &flat]).status.code(), Some(4));
}
