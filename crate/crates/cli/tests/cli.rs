use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(cfg: &str, out: &Path) -> Output {
    let dir = out.parent().unwrap();
    let path = dir.join("run.cfg");
    fs::write(&path, cfg).unwrap();
    Command::new(env!("CARGO_BIN_EXE_fracschro"))
        .arg(&path)
        .arg("--output-dir")
        .arg(out)
        .arg("--quiet")
        .output()
        .unwrap()
}

#[test]
fn linear_run_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run("mode = linear\nn = 1\nN = 64\nL = 10\nalpha = 1\nbeta = 2\nT = 0.5\nNt = 8\nsnapshots = all\n", &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let norms = fs::read_to_string(out.join("norms.csv")).unwrap();
    assert!(norms.starts_with("t,l2,hbeta,linf\n"));
    assert_eq!(norms.lines().count(), 10);
    assert!(out.join("snapshots/u_00008.c64").exists());
    assert!(out.join("snapshots/u_00008.hdr").exists());
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("l2_drift"));
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    for cfg in ["mode = solve\nbogus = 1\n", "mode = solve\nalpha = 1.5\n", "mode = solve\nlambda = 0\n", "alpha 0.5\n"] {
        let o = run(cfg, &out);
        assert_eq!(o.status.code(), Some(2), "{cfg:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("fracschro: error:"));
    }
}

#[test]
fn missing_config_exits_2() {
    let o = Command::new(env!("CARGO_BIN_EXE_fracschro")).arg("/nonexistent/x.cfg").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oversized_horizon_diverges_with_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = "mode = solve\nn = 2\nN = 32\nL = 8\nalpha = 0.6\nbeta = 0.8\nlambda = 1\n\
               T = 5\nNt = 16\nu0_amplitude = 20\nc_emp = 1\nmax_picard_iters = 30\n";
    let o = run(cfg, &out);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn command_line_overrides_are_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let path = tmp.path().join("ml.cfg");
    fs::write(&path, "mode = ml_table\nml_alphas = 0.5\nml_t_points = 3\nml_s_points = 5\nseed = 1\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fracschro"))
        .args([path.as_os_str(), "--output-dir".as_ref(), out.as_os_str(), "--seed".as_ref(), "9".as_ref()])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("wrote"));
    let csv = fs::read_to_string(out.join("ml_table.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 5);
}
