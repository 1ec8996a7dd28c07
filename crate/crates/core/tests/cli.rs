// Drives the built binary: exit codes, file outputs and the seed variable.

use std::path::Path;
use std::process::{Command, Output};

const LOOP: &str = "
circuit name=loop3 sbase_kva=1000
source bus=s pu=1.0 angle=0
bus id=s phases=abc kv=2.4
bus id=a phases=abc kv=2.4
bus id=b phases=abc kv=2.4
line id=Lsa bus1=s bus2=a phases=abc length=1 units=mi rmatrix=0.30,0.10,0.30,0.10,0.10,0.30 xmatrix=0.60,0.20,0.60,0.20,0.20,0.60
line id=Lab bus1=a bus2=b phases=abc length=1 units=mi rmatrix=0.30,0.10,0.30,0.10,0.10,0.30 xmatrix=0.60,0.20,0.60,0.20,0.20,0.60
switch id=TIE bus1=s bus2=b phases=abc state=closed
load id=LA bus=a phases=abc conn=wye model=pq kw=300,250,200 kvar=100,90,80
";

fn gridflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridflow"))
        .args(args)
        .current_dir(dir)
        .env_remove("GRIDFLOW_SEED")
        .output()
        .expect("spawn gridflow")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn small_config(dir: &Path) {
    std::fs::write(dir.join("s.cfg"), "horizon=48\nseed=1\nnoise=0.05\n").unwrap();
}

#[test]
fn help_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&gridflow(dir.path(), &["--help"])), 0);
    assert_eq!(code(&gridflow(dir.path(), &[])), 2);
    assert_eq!(code(&gridflow(dir.path(), &["frobnicate"])), 2);
    assert_eq!(code(&gridflow(dir.path(), &["validate", "--circuit", "missing.ckt"])), 2);
    assert_eq!(code(&gridflow(dir.path(), &["repro", "--case", "99node"])), 2);
    assert_eq!(code(&gridflow(dir.path(), &["--jobs", "0", "validate", "--circuit", "ieee4.ckt"])), 2);
}

#[test]
fn validate_and_solve_bundled_feeders() {
    let dir = tempfile::tempdir().unwrap();
    for ckt in ["ieee4.ckt", "synth13.ckt"] {
        assert_eq!(code(&gridflow(dir.path(), &["validate", "--circuit", ckt])), 0, "{ckt}");
    }
    let out = gridflow(dir.path(), &["solve", "--circuit", "ieee4.ckt", "--solver", "both", "--out", "v.csv"]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("v.csv")).unwrap();
    assert!(csv.lines().count() > 1);
    assert!(dir.path().join("v_losses.csv").exists());
}

#[test]
fn unconverged_solve_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&gridflow(dir.path(), &["solve", "--circuit", "ieee4.ckt", "--max-iter", "1"])), 3);
}

#[test]
fn meshed_feeder_exits_4_under_sweep_only() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("loop.ckt"), LOOP).unwrap();
    assert_eq!(code(&gridflow(dir.path(), &["solve", "--circuit", "loop.ckt", "--solver", "fbs"])), 4);
    assert_eq!(code(&gridflow(dir.path(), &["solve", "--circuit", "loop.ckt", "--solver", "ci"])), 0);
}

#[test]
fn failed_generation_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "horizon=48\nseed=1\nnoise=0.9\nshape=flat\n").unwrap();
    assert_eq!(code(&gridflow(dir.path(), &["gen", "--circuit", "ieee4.ckt", "--config", "bad.cfg", "--out", "b.ds"])), 5);
}

#[test]
fn gen_honours_seed_variable() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    let gen = |seed: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_gridflow"))
            .args(["gen", "--circuit", "ieee4.ckt", "--config", "s.cfg", "--out", out])
            .env("GRIDFLOW_SEED", seed)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        std::fs::read(dir.path().join(out)).unwrap()
    };
    let a = gen("7", "a.ds");
    let b = gen("7", "b.ds");
    let c = gen("8", "c.ds");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(dir.path().join("a.ds.report.csv").exists());
}

#[test]
fn train_eval_plot_round() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    let d = dir.path();
    assert_eq!(code(&gridflow(d, &["gen", "--circuit", "ieee4.ckt", "--config", "s.cfg", "--out", "a.ds"])), 0);
    assert_eq!(code(&gridflow(d, &["train", "--dataset", "a.ds", "--arch", "mlp", "--epochs", "0", "--out", "m.model.json"])), 2);
    let out = gridflow(d, &["train", "--dataset", "a.ds", "--arch", "mlp", "--epochs", "3", "--out", "m.model.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.join("m.model.json.loss.csv").exists());
    let out = gridflow(d, &["eval", "--model", "m.model.json", "--dataset", "a.ds", "--split", "all"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("all"));
    let out = gridflow(d, &["plot", "--solution", "a.ds", "--model", "m.model.json", "--out", "p.svg"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(d.join("p.svg")).unwrap().starts_with("<svg"));
    assert!(d.join("p.csv").exists());
}

#[test]
fn exploding_learning_rate_exits_6() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    let d = dir.path();
    assert_eq!(code(&gridflow(d, &["gen", "--circuit", "ieee4.ckt", "--config", "s.cfg", "--out", "a.ds"])), 0);
    let out = gridflow(d, &["train", "--dataset", "a.ds", "--arch", "mlp", "--epochs", "3", "--lr", "1e300", "--out", "m.model.json"]);
    assert_eq!(code(&out), 6);
}

#[test]
fn quick_repro_exit_code_tracks_its_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = gridflow(dir.path(), &["--jobs", "1", "repro", "--case", "4node", "--quick", "--json", "r.json"]);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let checks = report["checks"].as_array().expect("checks array");
    assert!(!checks.is_empty());
    let all_pass = checks.iter().all(|c| c["passed"].as_bool().unwrap());
    assert_eq!(code(&out), if all_pass { 0 } else { 7 });
}
