//! End-to-end runs of the `capa` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

/// Small sweeps so every experiment finishes in about a second.
const SMALL: &str = "\
sweep_points = 5
trials = 40
op_trials = 20000
search_grid = 5
area_max = 0.5
quad_order = 12
";

fn capa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capa")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn empty_config_writes_headed_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "empty.cfg", "");
    let out = dir.path().join("out");
    let res = capa(&["fig3b", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(out.join("fig3b.csv")).unwrap();
    assert!(text.starts_with("# experiment = fig3b\n"));
    for line in ["# seed = 1", "# gamma_bar_db = 40", "# r = 10", "# lambda = 0.0107"] {
        assert!(text.lines().any(|l| l == line), "missing {line}");
    }
    let rows = data_rows(&text);
    assert_eq!(rows[0], "tau,snr_ratio_circle_over_square");
    assert_eq!(rows.len(), 41);
}

#[test]
fn fig2b_reaches_sixty_percent_with_under_forty_percent_of_the_area() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.cfg", "r_list = 2\n");
    let res = capa(&["fig2b", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(res.status.success());
    let text = fs::read_to_string(dir.path().join("fig2b.csv")).unwrap();
    let rows: Vec<Vec<f64>> = data_rows(&text)[1..].iter().map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    let nearest = rows.iter().min_by(|a, b| (a[1] - 0.6).abs().total_cmp(&(b[1] - 0.6).abs())).unwrap();
    assert!(nearest[0] < 0.4, "row nearest 0.6: {nearest:?}");
}

#[test]
fn config_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let bad = write_config(dir.path(), "bad.cfg", "# ok\nbanana = 1\n");
    let res = capa(&["fig2a", "--config", &bad, "--out", out]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 2"));

    let good = write_config(dir.path(), "good.cfg", "");
    assert_eq!(capa(&["fig9", "--config", &good]).status.code(), Some(1));
    assert_eq!(capa(&["fig2a", "--config", "/nonexistent/capa.cfg"]).status.code(), Some(1));
    assert_eq!(capa(&["fig2a"]).status.code(), Some(1));
    let domain = write_config(dir.path(), "domain.cfg", "Ax = 5\n");
    assert_eq!(capa(&["fig2a", "--config", &domain, "--out", out]).status.code(), Some(1));
}

#[test]
fn verify_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "empty.cfg", "");
    let res = capa(&["verify", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    let rows = data_rows(&text);
    assert!(rows.len() > 5);
    assert!(rows[1..].iter().all(|r| r.ends_with(",pass")), "{text}");
}

#[test]
fn outputs_are_identical_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "small.cfg", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for e in ["fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b", "verify"] {
        for (out, threads) in [(&a, "1"), (&b, "3")] {
            let res = capa(&[e, "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", threads]);
            assert!(res.status.success(), "{e}: {}", String::from_utf8_lossy(&res.stderr));
        }
        let name = format!("{e}.csv");
        let (x, y) = (fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap());
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn seed_and_trials_flags_override_the_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "small.cfg", SMALL);
    let run = |seed: &str| {
        let out = dir.path().join(seed);
        let res = capa(&["fig4b", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", seed, "--trials", "5000"]);
        assert!(res.status.success());
        fs::read_to_string(out.join("fig4b.csv")).unwrap()
    };
    let (one, two) = (run("7"), run("8"));
    assert!(one.lines().any(|l| l == "# seed = 7"));
    assert!(one.lines().any(|l| l == "# op_trials = 5000"));
    assert_ne!(data_rows(&one), data_rows(&two));
}
