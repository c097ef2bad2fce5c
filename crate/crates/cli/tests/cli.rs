use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ggns(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ggns"));
    cmd.args(args).env_remove("GGNS_OUT");
    if let Some(root) = env_out {
        cmd.env("GGNS_OUT", root);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn data_rows(csv: &str, kind: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>())
        .filter(|r| r[0] == kind)
        .collect()
}

#[test]
fn run_writes_all_artifacts_with_finite_evidence() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("g");
    let out = ggns(&["run", "--problem", "gaussian", "--dim", "16", "--seed", "1", "--n-live", "60", "--out", dir.to_str().unwrap()], None);
    ok(&out);
    for f in ["dead_points.csv", "summary.json", "diagnostics.csv"] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
    let s = summary(&dir);
    assert!(s["log_z"].as_f64().unwrap().is_finite());
    assert_eq!(s["dim"], 16);
    assert_eq!(s["seed"], 1);
    let header = fs::read_to_string(dir.join("dead_points.csv")).unwrap();
    let first = header.lines().next().unwrap();
    assert!(first.starts_with("weight,log_like,log_X,cluster,theta_1,"));
    assert!(first.ends_with(",theta_16"));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        ok(&ggns(&["run", "--problem", "mixture9", "--seed", "7", "--n-live", "80", "--out", d.to_str().unwrap()], None));
    }
    for f in ["dead_points.csv", "diagnostics.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn unknown_problem_fails_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("x");
    let out = ggns(&["run", "--problem", "nosuch", "--out", dir.to_str().unwrap()], None);
    assert!(!out.status.success());
    assert!(!dir.exists());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nosuch"));
}

#[test]
fn unknown_flag_and_setting_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("x");
    let d = dir.to_str().unwrap();
    assert_eq!(ggns(&["run", "--problem", "gaussian", "--bogus", "--out", d], None).status.code(), Some(2));
    assert_eq!(ggns(&["run", "--problem", "gaussian", "--set", "nlive=3", "--out", d], None).status.code(), Some(2));
    assert_eq!(ggns(&["run", "--problem", "gaussian", "--param", "dims=3", "--out", d], None).status.code(), Some(2));
    assert!(!dir.exists());
}

#[test]
fn refuses_to_overwrite_without_force() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("r");
    let d = dir.to_str().unwrap();
    let args = ["run", "--problem", "gaussian", "--dim", "2", "--n-live", "40", "--out", d];
    ok(&ggns(&args, None));
    let before = fs::read(dir.join("dead_points.csv")).unwrap();
    let again = ggns(&["run", "--problem", "gaussian", "--dim", "3", "--n-live", "40", "--out", d], None);
    assert!(!again.status.success());
    assert_eq!(fs::read(dir.join("dead_points.csv")).unwrap(), before);
    let mut forced = args.to_vec();
    forced.push("--force");
    ok(&ggns(&forced, None));
}

#[test]
fn config_file_is_merged_under_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("ggns.cfg");
    fs::write(&cfg, "# test config\nproblem = gaussian\ndim = 3\nn_live = 40\ntol = 0.05\n").unwrap();
    let c = cfg.to_str().unwrap();

    let from_file = tmp.path().join("file");
    ok(&ggns(&["run", "--config", c, "--out", from_file.to_str().unwrap()], None));
    let s = summary(&from_file);
    assert_eq!(s["config"]["n_live"], 40);
    assert_eq!(s["dim"], 3);

    let overridden = tmp.path().join("flags");
    ok(&ggns(&["run", "--config", c, "--n-live", "50", "--set", "tol=0.02", "--out", overridden.to_str().unwrap()], None));
    let s = summary(&overridden);
    assert_eq!(s["config"]["n_live"], 50);
    assert_eq!(s["config"]["tol"], 0.02);
    assert_eq!(s["dim"], 3);
}

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&ggns(&["run", "--problem", "flat", "--n-live", "30"], Some(tmp.path())));
    assert!(tmp.path().join("run").join("summary.json").is_file());
}

#[test]
fn scaling_with_one_dim_and_seed_has_one_data_row() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("s");
    ok(&ggns(&["scaling", "--dims", "4", "--seeds", "1", "--n-live", "50", "--plot", "--out", dir.to_str().unwrap()], None));
    let csv = fs::read_to_string(dir.join("scaling.csv")).unwrap();
    assert!(csv.starts_with("row,label,dim,seed,n_like_calls,"));
    assert_eq!(data_rows(&csv, "run").len(), 1);
    let std = &data_rows(&csv, "std")[0];
    assert_eq!(std[3], "", "aggregate row carries no seed");
    assert_eq!(std[8], "", "std over one run is absent");
    assert!(dir.join("report.txt").is_file());
    assert!(dir.join("scaling_calls.svg").is_file());
}

#[test]
fn table_with_one_seed_reports_absent_std() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("t");
    ok(&ggns(&["table", "--seeds", "1", "--n-live", "60", "--out", dir.to_str().unwrap()], None));
    let csv = fs::read_to_string(dir.join("table.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "problem,runs,mean_bias,std_bias,mean_sigma_kl");
    assert_eq!(rows.len(), 3);
    for r in &rows[1..] {
        let f: Vec<&str> = r.split(',').collect();
        assert!(f[2].parse::<f64>().unwrap().is_finite());
        assert_eq!(f[3], "");
    }
    let report = fs::read_to_string(dir.join("report.txt")).unwrap();
    assert!(report.contains("assumed"));
    assert!(report.contains("GFlowNet"));
}

#[test]
fn torus_includes_quadrature_check() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("t");
    ok(&ggns(&["torus", "--dims", "1,2,4", "--seeds", "2", "--n-live", "50", "--out", dir.to_str().unwrap()], None));
    let csv = fs::read_to_string(dir.join("torus.csv")).unwrap();
    assert_eq!(data_rows(&csv, "run").len(), 6);
    assert_eq!(data_rows(&csv, "mean").len(), 3);
    let quad = fs::read_to_string(dir.join("torus_quadrature.csv")).unwrap();
    assert_eq!(quad.lines().count(), 3);
    for line in quad.lines().skip(1) {
        let diff: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(diff < 1e-9);
    }
}

#[test]
fn modes_and_ablations_write_their_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let modes = tmp.path().join("m");
    ok(&ggns(&["modes", "--n-lives", "20,40", "--seeds", "2", "--out", modes.to_str().unwrap()], None));
    let csv = fs::read_to_string(modes.join("modes.csv")).unwrap();
    assert_eq!(data_rows(&csv, "run").len(), 8);
    assert_eq!(data_rows(&csv, "mean").len(), 4);
    for r in data_rows(&csv, "run") {
        let found: f64 = r[4].parse().unwrap();
        assert!((0.0..=9.0).contains(&found));
    }

    let ablate = tmp.path().join("a");
    ok(&ggns(&["ablate", "--dims", "4", "--seeds", "1", "--n-live", "40", "--plot", "--out", ablate.to_str().unwrap()], None));
    let summary = fs::read_to_string(ablate.join("ablate.csv")).unwrap();
    assert_eq!(summary.lines().count(), 8);
    for name in ["baseline", "fixed_dt_0.5", "fixed_dt_0.1", "fixed_steps_20", "fixed_steps_200", "delta_p_0", "legacy_termination"] {
        assert!(ablate.join(format!("ablate_{name}.csv")).is_file(), "missing {name}");
    }
    assert!(ablate.join("ablate_error.svg").is_file());
}
