use std::path::Path;
use std::process::{Command, Output};

fn patina(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_patina"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .env("PATINA_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// `stage status path hash` lines printed on stdout.
fn lines(o: &Output) -> Vec<Vec<String>> {
    String::from_utf8_lossy(&o.stdout)
        .lines()
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect()
}

fn prepare(dir: &Path) {
    for step in [&["gen", "--subdivision", "4", "--spots", "3"][..], &["map"], &["extract"], &["segment"]] {
        let o = patina(dir, step);
        assert!(o.status.success(), "{step:?}: {}", stderr(&o));
    }
}

#[test]
fn second_fit_is_a_cache_hit_with_the_same_hash() {
    let dir = tempfile::tempdir().unwrap();
    prepare(dir.path());
    let first = patina(dir.path(), &["--order", "16", "fit"]);
    assert!(first.status.success(), "{}", stderr(&first));
    let second = patina(dir.path(), &["--order", "16", "fit"]);
    assert!(second.status.success());
    let (a, b) = (lines(&first), lines(&second));
    assert_eq!(a.len(), 2);
    assert!(a.iter().all(|l| l[1] == "miss"));
    assert!(b.iter().all(|l| l[1] == "hit"));
    assert!(stderr(&second).contains("cache hit"));
    for (x, y) in a.iter().zip(&b) {
        assert_eq!((&x[2], &x[3]), (&y[2], &y[3]));
    }
    let third = patina(dir.path(), &["--order", "12", "fit", "--side", "source"]);
    assert_eq!(lines(&third)[0][1], "miss");
}

#[test]
fn stages_chain_to_a_report() {
    let dir = tempfile::tempdir().unwrap();
    prepare(dir.path());
    for step in ["fit", "match", "transfer", "eval", "render"] {
        let o = patina(dir.path(), &["--order", "8", step]);
        assert!(o.status.success(), "{step}: {}", stderr(&o));
    }
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report["accuracy_hue"].as_f64().unwrap() > 0.9);
    assert!(report["provenance"]["config_hash"].is_string());
    for f in ["plots/costs.png", "plots/energy_source.png", "plots/error_hist.png", "plots/hue.ply"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn run_all_writes_report_and_result() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"seed": 2, "order": 8, "synthetic": {"subdivision": 4, "spots": 2}}"#).unwrap();
    let o = patina(dir.path(), &["--config", cfg.to_str().unwrap(), "run-all"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("result.ply").exists());
    assert!(dir.path().join("report.json").exists());
    assert!(stderr(&o).contains("accuracy"));
}

#[test]
fn mismatched_eval_names_both_vertex_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(patina(a.path(), &["gen", "--subdivision", "3", "--spots", "1"]).status.success());
    assert!(patina(b.path(), &["gen", "--subdivision", "2", "--spots", "1"]).status.success());
    let r = a.path().join("ground_truth.ply");
    let g = b.path().join("ground_truth.ply");
    let o = patina(
        a.path(),
        &["eval", "--result", r.to_str().unwrap(), "--ground-truth", g.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(4));
    let msg = stderr(&o);
    assert!(msg.contains("eval") && msg.contains("642") && msg.contains("162"), "{msg}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(patina(dir.path(), &["--order", "0", "fit"]).status.code(), Some(2));
    assert_eq!(patina(dir.path(), &["no-such-stage"]).status.code(), Some(2));
    let o = patina(dir.path(), &["match"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("match:"));
    let o = Command::new(env!("CARGO_BIN_EXE_patina"))
        .args(["--out", dir.path().to_str().unwrap(), "gen"])
        .env("PATINA_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
