use std::path::Path;
use std::process::{Command, Output};

fn pmbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmbm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn simulate(dir: &Path, name: &str, extra: &[&str]) -> std::path::PathBuf {
    let path = dir.join(name);
    let mut args = vec!["simulate", "--output", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = pmbm(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    path
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = std::fs::read_to_string(simulate(dir.path(), "a.txt", &["--seed", "7"])).unwrap();
    let b = std::fs::read_to_string(simulate(dir.path(), "b.txt", &["--seed", "7"])).unwrap();
    assert_eq!(a, b);
    assert!(a.starts_with("# steps: 81\n"));

    let ids: std::collections::BTreeSet<&str> = a
        .lines()
        .filter_map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (f.get(1) == Some(&"truth")).then(|| f[2])
        })
        .collect();
    assert_eq!(ids.len(), 4);

    let c = std::fs::read_to_string(simulate(dir.path(), "c.txt", &["--seed", "7", "--run", "1"])).unwrap();
    assert_ne!(a, c, "different runs draw different measurements");
}

#[test]
fn simulate_single_step_without_targets() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "num_steps = 1\nmidpoint_step = 1\ntargets = []\nclutter_rate = 0.0\n").unwrap();
    let out = simulate(dir.path(), "s.txt", &["--config", cfg.to_str().unwrap()]);
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.trim(), "# steps: 1");
}

#[test]
fn track_writes_csv_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let scen = simulate(dir.path(), "s.txt", &[]);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = pmbm(&["track", scen.to_str().unwrap(), "--output", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read_to_string(out).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    let mut lines = a.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,estimator,ospa,cardinality_estimate,truth_cardinality"
    );
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 81 * 3);
    for r in &rows {
        let ospa: f64 = r[2].parse().unwrap();
        assert!((0.0..=10.0).contains(&ospa));
    }
    assert_eq!(rows[0][4], "4");
    assert_eq!(rows.last().unwrap()[4], "3");
}

#[test]
fn track_dumps_density_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "num_steps = 5\nmidpoint_step = 3\ntargets = [[1, 5]]\n").unwrap();
    let scen = simulate(dir.path(), "s.txt", &["--config", cfg.to_str().unwrap()]);
    let dump = dir.path().join("dump");
    let o = pmbm(&[
        "track",
        scen.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--dump-density",
        dump.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for step in 1..=5 {
        let text = std::fs::read_to_string(dump.join(format!("density_{step:04}.json"))).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v.is_object());
    }
}

#[test]
fn malformed_scenario_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "# steps: 2\n1 meas -1 1.0 2.0\n2 meas -1 oops 2.0\n").unwrap();
    let o = pmbm(&["track", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn missing_input_exits_with_error() {
    let o = pmbm(&["track", "/nonexistent/scenario.txt"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "p_detectoin = 0.9\n").unwrap();
    let o = pmbm(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&cfg, "p_detection = 1.5\n").unwrap();
    let o = pmbm(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_passes_and_detects_perturbation() {
    let o = pmbm(&["validate", "--filter", "murty,ospa"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 2, "{out}");

    let o = pmbm(&["validate", "--filter", "murty", "--perturb", "1e-3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("FAIL"));

    let o = pmbm(&["validate", "--filter", "nonsense"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn benchmark_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "num_steps = 20\nmidpoint_step = 10\ntargets = [[1, 20], [1, 15]]\ngrid = [[0.9, 10.0]]\n").unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = pmbm(&[
            "benchmark",
            "--config",
            cfg.to_str().unwrap(),
            "--runs",
            "2",
            "--output",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read_to_string(out).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    assert_eq!(a.lines().count(), 4);
    let curves = std::fs::read_to_string(dir.path().join("a_curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 3 * 20);
}
