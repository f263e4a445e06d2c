use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aerial_irs_cli::runner::EvalReport;

const TINY: &str = r#"
mode = "p2"
algorithm = "maddpoc"
seeds = [3]

[env]
num_gns = 4
e_m_max = 8000.0
e_a_max = 4000.0
e_th = 2500.0

[train]
episodes = 8
capacity = 64
batch_size = 16
hidden = [16, 16]
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_aerial-irs"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_config(dir: &Path) -> PathBuf {
    let p = dir.join("tiny.toml");
    std::fs::write(&p, TINY).unwrap();
    p
}

fn only_run_dir(out: &Path) -> PathBuf {
    let dirs: Vec<_> = std::fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).filter(|p| p.is_dir()).collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs[0].clone()
}

#[test]
fn train_writes_one_metrics_file_per_seed_reproducibly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let cfg = cfg.to_str().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        run(&["train", "--config", cfg, "--seed", "1", "--seed", "2", "--seed", "3", "--out", out.to_str().unwrap()]);
    }
    let (ra, rb) = (only_run_dir(&a), only_run_dir(&b));
    assert!(ra.file_name().unwrap().to_str().unwrap().starts_with("maddpoc-p2-"));
    for seed in 1..=3 {
        let name = format!("metrics-{seed}.jsonl");
        let text = std::fs::read_to_string(ra.join(&name)).unwrap();
        assert_eq!(text.lines().count(), 8);
        assert_eq!(text, std::fs::read_to_string(rb.join(&name)).unwrap());
        assert!(ra.join(format!("checkpoint-{seed}.json")).exists());
        assert!(ra.join(format!("timing-{seed}.json")).exists());
    }
    assert!(ra.join("config-resolved.toml").exists());
}

#[test]
fn eval_summary_agrees_with_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let cfg = cfg.to_str().unwrap();
    let out = tmp.path().join("runs");
    let out = out.to_str().unwrap();
    run(&["train", "--config", cfg, "--out", out]);
    run(&["eval", "--config", cfg, "--out", out]);
    let dir = only_run_dir(Path::new(out));
    let report: EvalReport = serde_json::from_slice(&std::fs::read(dir.join("eval-3.json")).unwrap()).unwrap();
    let csv = std::fs::read_to_string(dir.join("trajectory-3.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    assert_eq!(rows.len(), report.slots + 1);
    let throughput: f64 = rows.iter().map(|r| 0.5 * r[col("rate")]).sum();
    assert!((throughput - report.throughput).abs() <= 1e-9 * report.throughput.max(1.0));
    let last = rows.last().unwrap();
    let consumed = 8000.0 + 4000.0 - last[col("E_M")] - last[col("E_A")];
    assert!((consumed - report.consumed_energy).abs() < 1e-6);
    if consumed > 0.0 {
        assert!((report.energy_efficiency - report.throughput / consumed).abs() < 1e-12);
    }
    assert_eq!(last[col("xi_d")], 1.0);
}

#[test]
fn eval_rejects_checkpoint_from_another_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("runs");
    run(&["train", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let dir = only_run_dir(&out);
    // Same run directory name, different learning rate inside.
    let other = tmp.path().join("other.toml");
    std::fs::write(&other, TINY.replace("[train]", "[train]\nlearning_rate = 0.5")).unwrap();
    let other_cfg = aerial_irs_cli::runner::load_config(Some(&other), &Default::default()).unwrap();
    let other_dir = out.join(other_cfg.run_id());
    std::fs::create_dir_all(&other_dir).unwrap();
    std::fs::copy(dir.join("checkpoint-3.json"), other_dir.join("checkpoint-3.json")).unwrap();
    let res = bin()
        .args(["eval", "--config", other.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("config"));
}

#[test]
fn invalid_config_fails_with_field_path() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("bad.toml");
    std::fs::write(&p, "[env]\ne_th = 99999.0\n").unwrap();
    let res = bin().args(["train", "--config", p.to_str().unwrap()]).output().unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("env.e_th"));
}

#[test]
fn physics_report_passes_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let res = run(&["physics-report", "--out", out.to_str().unwrap()]);
        let text = String::from_utf8_lossy(&res.stdout).into_owned();
        assert!(text.contains("v_mee"), "{text}");
        assert!(!text.contains("FAIL"), "{text}");
        reports.push(std::fs::read(out.join("physics-report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}
