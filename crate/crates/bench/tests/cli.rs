use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_setd-bench"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn analyze_prints_the_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench(&["analyze", "--out", "a"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("x_star = [0.500000, 14.500000]"));
    assert!(text.contains("criterion = 7.290000"));
    assert!(dir.path().join("a/two_state.txt").exists());
}

#[test]
fn run_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "boyan.cfg",
        "env.name = boyan\nexperiment.preset = boyan\nexperiment.horizon = 300\n",
    );
    for out_dir in ["r1", "r2"] {
        let out = bench(&["run", "--config", &cfg, "--seeds", "3", "--out", out_dir], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir.path().join("r1/curves.csv")).unwrap();
    let b = std::fs::read(dir.path().join("r2/curves.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next().unwrap(), "algorithm,seed,step,rmse,rmspbe,diverged");
    // 5 algorithms × 3 seeds × 31 checkpoints
    assert_eq!(text.lines().count(), 1 + 5 * 3 * 31);
    assert!(dir.path().join("r1/report.csv").exists());
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.cfg",
        "env.name = two_state\nalgo.setd.alpha = 0.05\nexperiment.horizon = 1000\n",
    );
    let out = bench(
        &["run", "--config", &cfg, "--seeds", "2", "--horizon", "40", "--eval-every", "20", "--out", "o"],
        dir.path(),
    );
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("o/curves.csv")).unwrap();
    let steps: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(steps, ["0", "20", "40", "0", "20", "40"]);
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "env.name = nowhere\nalgo.td.alpha = 0.1\n");
    assert_eq!(bench(&["run", "--config", &cfg], dir.path()).status.code(), Some(2));
    assert_eq!(bench(&["run", "--config", "missing.cfg"], dir.path()).status.code(), Some(2));
    let cfg = write(dir.path(), "ok.cfg", "env.name = boyan\nalgo.td.alpha = 0.1\n");
    let grid = write(dir.path(), "g.grid", "grid.alphas =\n");
    assert_eq!(
        bench(&["sweep", "--config", &cfg, "--grid", &grid], dir.path()).status.code(),
        Some(2)
    );
}

#[test]
fn contract_violations_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "etd.cfg",
        "env.name = random_mdp\nenv.n_states = 10\nenv.n_actions = 2\nenv.d = 3\n\
         algo.etd.alpha = 0.01\nexperiment.sampling = iid\nexperiment.horizon = 10\n",
    );
    assert_eq!(bench(&["run", "--config", &cfg, "--out", "o"], dir.path()).status.code(), Some(3));
}

#[test]
fn sweep_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "baird.cfg",
        "env.name = baird\nexperiment.preset = baird\nexperiment.algorithms = gtd2\nexperiment.horizon = 200\n",
    );
    let grid = write(dir.path(), "g.grid", "grid.alphas = 0.001, 0.005\ngrid.mus = 1, 4\n");
    let out = bench(&["sweep", "--config", &cfg, "--grid", &grid, "--seeds", "2", "--out", "s"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(dir.path().join("s/grid.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 4);
    assert_eq!(table.lines().filter(|l| l.ends_with(",1")).count(), 1);

    let run = bench(&["run", "--config", &cfg, "--seeds", "2", "--out", "r"], dir.path());
    assert!(run.status.success());
    let rep = bench(
        &["report", "r/curves.csv", "--threshold", "100", "--metric", "rmspbe"],
        dir.path(),
    );
    assert!(rep.status.success());
    let text = String::from_utf8(rep.stdout).unwrap();
    assert!(text.starts_with("algorithm,step,seeds,diverged,rmse_mean"));
    assert!(text.contains("gtd2,rmspbe,100.0,0\n"));

    write(dir.path(), "wrong.csv", "a,b\n1,2\n");
    assert_eq!(bench(&["report", "wrong.csv"], dir.path()).status.code(), Some(2));
}
