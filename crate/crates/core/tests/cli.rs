use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn giardia(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_giardia"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn simulate_adaptive_paper_profile_warns_and_writes() {
    let dir = tempfile::tempdir().unwrap();
    let out = giardia(
        &[
            "simulate",
            "--strategy",
            "adaptive",
            "--profile",
            "paper",
            "--out",
            "run",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stderr).contains("warning: eta"));
    let csv = std::fs::read_to_string(dir.path().join("run/trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,x2_hat,u_ugml,u_uM,r,envelope,pi"));
    assert_eq!(csv.lines().count(), 602);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["profile"], "paper-replication");
    assert_eq!(manifest["strategy"], "adaptive");
    assert_eq!(manifest["warnings"].as_array().unwrap().len(), 1);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 1);

    // The paper-profile run satisfies neither the eta condition nor any
    // guarantee, but the observer bound still holds.
    let chk = giardia(&["check", "--traj", "run/trajectory.csv"], dir.path());
    assert!(text(&chk.stdout).contains("observer bound (lambda = 0.0114): 0 violations"));
}

#[test]
fn manifest_hash_tracks_config_content() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let base = std::fs::read_to_string(data("default.json")).unwrap();
    let hash = |body: &str, out: &str| {
        std::fs::write(&cfg, body).unwrap();
        let o = giardia(&["simulate", "--config", "c.json", "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
        let m: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join(out).join("manifest.json")).unwrap(),
        )
        .unwrap();
        m["config_hash"].as_str().unwrap().to_string()
    };
    let a = hash(&base, "a");
    let b = hash(&base, "b");
    let c = hash(&base.replace("\"t_end\": 60", "\"t_end\": 30"), "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
    // identical config gives byte-identical CSV
    assert_eq!(
        std::fs::read(dir.path().join("a/trajectory.csv")).unwrap(),
        std::fs::read(dir.path().join("b/trajectory.csv")).unwrap()
    );
}

#[test]
fn theorem_profile_check_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let o = giardia(&["simulate", "--profile", "theorem", "--out", "t"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(text(&o.stderr).is_empty(), "{}", text(&o.stderr));
    let chk = giardia(
        &["check", "--traj", "t/trajectory.csv", "--delta", "0.024"],
        dir.path(),
    );
    assert_eq!(chk.status.code(), Some(0), "{}", text(&chk.stdout));
    assert!(text(&chk.stdout).contains("envelope (delta = 0.024): 0 violations"));
}

#[test]
fn check_flags_open_loop_growth() {
    let dir = tempfile::tempdir().unwrap();
    giardia(&["simulate", "--strategy", "open-loop", "--out", "o"], dir.path());
    let chk = giardia(
        &["check", "--traj", "o/trajectory.csv", "--delta", "0.024"],
        dir.path(),
    );
    assert_eq!(chk.status.code(), Some(1));
}

#[test]
fn schedule_strategy_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let strat = format!("schedule:{}", data("schedule_exp2.csv").display());
    let o = giardia(&["simulate", "--strategy", &strat, "--out", "s"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("s/trajectory.csv")).unwrap();
    let first: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first[5], "3.20000000e2");
    assert_eq!(first[7], "");
}

#[test]
fn strict_gains_escalates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = std::fs::read_to_string(data("default.json"))
        .unwrap()
        .replace("1.14e-2", "2e-2");
    std::fs::write(dir.path().join("c.json"), cfg).unwrap();
    let lax = giardia(&["simulate", "--config", "c.json", "--out", "a"], dir.path());
    assert_eq!(lax.status.code(), Some(0));
    assert!(text(&lax.stderr).contains("observer lambda"));
    let strict = giardia(
        &["simulate", "--config", "c.json", "--strict-gains", "--out", "b"],
        dir.path(),
    );
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn equilibrium_prints_root() {
    let o = giardia(&["equilibrium"], Path::new("."));
    let s = text(&o.stdout);
    assert_eq!(o.status.code(), Some(0));
    assert!(s.contains("x1_star = 6.596000000e7"));
    assert!(s.contains("x2_star = 3.60649125"));
}

#[test]
fn mc_validation_and_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = giardia(&["mc", "--n", "0"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = giardia(
        &[
            "mc",
            "--n",
            "3",
            "--seed",
            "9",
            "--profile",
            "theorem",
            "--out",
            "mc.json",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("mc.json")).unwrap()).unwrap();
    assert_eq!(v["n_runs"], 3);
    assert_eq!(v["seed"], 9);
    // published r0_bar = 3e-9 does not dominate r0/K over +-10 %
    assert_eq!(v["certified"], false);
}

#[test]
fn compare_against_counts() {
    let dir = tempfile::tempdir().unwrap();
    giardia(&["simulate", "--out", "r"], dir.path());
    std::fs::write(dir.path().join("counts.csv"), "t_hours,value\n0,2e5\n").unwrap();
    let o = giardia(
        &["compare", "--traj", "r/trajectory.csv", "--data", "counts.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let s = text(&o.stdout);
    assert!(s.starts_with("t_hours,simulated,observed,log10_ratio\n"));
    assert!(s.contains("-3.01029996e-1"));
    std::fs::write(dir.path().join("late.csv"), "t_hours,value\n100,2e5\n").unwrap();
    let o = giardia(
        &["compare", "--traj", "r/trajectory.csv", "--data", "late.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    let o = giardia(&["simulate", "--bogus"], Path::new("."));
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("Usage"));
    let o = giardia(&["simulate", "--strategy", "pid"], Path::new("."));
    assert_eq!(o.status.code(), Some(1));
    let o = giardia(&["--help"], Path::new("."));
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.json"), "").unwrap();
    let o = giardia(&["simulate", "--config", "empty.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("missing required section: model"));
}
