use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn flmar(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flmar")).args(args).current_dir(dir).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn solve_writes_allocation_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "n_devices = 6\nseed = 3\n");
    let o = flmar(&["solve", "--config", &cfg, "--out", "res"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let alloc = fs::read_to_string(dir.path().join("res/allocation.csv")).unwrap();
    let mut lines = alloc.lines();
    assert_eq!(lines.next(), Some("device,power_w,bandwidth_hz,freq_hz,resolution"));
    assert_eq!(lines.count(), 6);
    let trace = fs::read_to_string(dir.path().join("res/bcd_trace.csv")).unwrap();
    assert!(trace.starts_with("round,objective_relaxed,objective_realized,delta,sp2_iters\n"));
    assert!(trace.lines().count() >= 2);
}

#[test]
fn solve_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "n_devices = 4\nseed = 11\n");
    for out in ["a", "b"] {
        assert_eq!(flmar(&["solve", "--config", &cfg, "--out", out], dir.path()).status.code(), Some(0));
    }
    let read = |d: &str| fs::read_to_string(dir.path().join(d).join("allocation.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    for body in ["bogus = 1\n", "n_devices = five\n", "w1 = 0\nw2 = 0\n", "seed = 1\nseed = 2\n"] {
        let cfg = write(dir.path(), "bad.cfg", body);
        let o = flmar(&["solve", "--config", &cfg, "--out", "x"], dir.path());
        assert_eq!(o.status.code(), Some(2), "{body:?}: {}", stderr(&o));
    }
}

#[test]
fn missing_config_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = flmar(&["solve", "--config", "nope.cfg"], dir.path());
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn infeasible_deadline_exits_3_and_names_a_device() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "inf.cfg", "n_devices = 5\nt_fixed = 0.5\n");
    let o = flmar(&["solve", "--config", &cfg, "--out", "x"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("device"), "{}", stderr(&o));
}

#[test]
fn unknown_axis_or_algorithm_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(flmar(&["sweep", "--axis", "watts"], dir.path()).status.code(), Some(2));
    assert_eq!(flmar(&["sweep", "--axis", "p_max", "--algorithms", "magic"], dir.path()).status.code(), Some(2));
}

#[test]
fn sweep_writes_table_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.cfg", "n_devices = 4\nreplications = 2\n");
    let o = flmar(
        &["sweep", "--config", &cfg, "--axis", "f_max", "--grid", "1,2", "--algorithms", "proposed:0.5,0.5,1,minpixel", "--out", "sw"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("sw/sweep.csv")).unwrap();
    assert!(table.starts_with("scenario_id,seed,algorithm,axis_name,axis_value,"));
    // 2 grid points x 2 replications x 2 algorithms
    assert_eq!(table.lines().count(), 1 + 8);
    for f in ["fig3c.csv", "fig3d.csv"] {
        let body = fs::read_to_string(dir.path().join("sw").join(f)).unwrap();
        assert!(body.starts_with("series,x,mean,std,count\n"), "{f}");
    }
}

#[test]
fn validate_passes_and_perturbation_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.cfg", "oracle_density = 20\n");
    let ok = flmar(&["validate", "--config", &cfg, "--instances", "2"], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let bad = flmar(&["validate", "--config", &cfg, "--instances", "2", "--perturb-nu", "1e-3"], dir.path());
    assert_eq!(bad.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("[FAIL]"));
}
