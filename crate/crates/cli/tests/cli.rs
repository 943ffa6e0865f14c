use std::fs;
use std::process::{Command, Output};

fn tailproc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tailproc"))
        .args(args)
        .env_remove("TAILPROC_LANES")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn list_models_is_stable() {
    let a = tailproc(&["list-models"]);
    assert!(a.status.success());
    for name in ["iid", "ma", "geometric", "deterministic", "empirical"] {
        assert!(stdout(&a).lines().any(|l| l.starts_with(&format!("{name}:"))), "{name}");
    }
    assert_eq!(a.stdout, tailproc(&["list-models"]).stdout);
}

#[test]
fn list_suites_names_all_seven() {
    let o = stdout(&tailproc(&["list-suites"]));
    for s in [
        "time-change",
        "extremal-index",
        "q-identities",
        "cluster-index",
        "log-alpha1",
        "maxstable",
        "clusterlab",
    ] {
        assert!(o.lines().any(|l| l.starts_with(s)), "{s}");
    }
}

#[test]
fn extremal_index_on_geometric() {
    let o = tailproc(&[
        "run",
        "--suite",
        "extremal-index",
        "--model",
        "geometric:rho=0.5,alpha=1",
        "--n",
        "100000",
        "--seed",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert!(csv.starts_with(&format!("# tailproc {}\n# config {{", env!("CARGO_PKG_VERSION"))));
    assert!(csv.contains("\"seed\":7"));
    assert!(csv.contains("suite,check,side_a,side_b,stderr_a,stderr_b,sigmas,pass\n"));
    let rows = data_rows(&csv);
    // 15 pairs among six formulas plus six against the closed form.
    assert_eq!(rows.len(), 21);
    for r in rows {
        assert!(r.ends_with(",true"), "{r}");
        let side_b: f64 = r.rsplit(',').nth(4).unwrap().parse().unwrap();
        assert!((side_b - 0.5).abs() < 0.01, "{r}");
    }
}

#[test]
fn all_suites_pass_on_iid() {
    let o = tailproc(&["run", "--suite", "all", "--model", "iid:alpha=1.5", "--n", "50000"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    for s in ["time-change", "extremal-index", "q-identities", "cluster-index", "log-alpha1", "maxstable", "clusterlab"] {
        assert!(data_rows(&csv).iter().any(|r| r.starts_with(&format!("{s},"))), "{s}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let run = || {
        let o = tailproc(&[
            "run",
            "--suite",
            "q-identities",
            "--model",
            "ma:alpha=1.5,coeffs=1;0.5",
            "--n",
            "20000",
            "--seed",
            "3",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
        fs::read(&path).unwrap()
    };
    let first = run();
    assert!(String::from_utf8_lossy(&first).contains("out.csv"));
    assert_eq!(first, run());
}

#[test]
fn lane_count_comes_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_tailproc"))
        .args(["run", "--suite", "extremal-index", "--model", "iid:alpha=1", "--n", "1000"])
        .env("TAILPROC_LANES", "3")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("\"lanes\":3"));
    let flag = tailproc(&["run", "--suite", "extremal-index", "--model", "iid:alpha=1", "--n", "1000", "--lanes", "2"]);
    assert!(stdout(&flag).contains("\"lanes\":2"));
}

#[test]
fn failing_checks_exit_one() {
    let o = tailproc(&[
        "run",
        "--suite",
        "extremal-index",
        "--model",
        "geometric:rho=0.5,alpha=1",
        "--n",
        "2000",
        "--tol",
        "1e-6",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(data_rows(&stdout(&o)).iter().any(|r| r.ends_with(",false")));
}

#[test]
fn config_errors_exit_two() {
    let bad_model = tailproc(&["run", "--model", "ma:alpha=1.5,coeffs=1;x"]);
    assert_eq!(bad_model.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_model.stderr).contains("not a number"));
    assert_eq!(tailproc(&["run", "--model", "nope:alpha=1"]).status.code(), Some(2));
    assert_eq!(tailproc(&["run", "--model", "iid:alpha=1", "--suite", "x"]).status.code(), Some(2));
    assert_eq!(tailproc(&["run", "--model", "iid:alpha=1", "--n", "many"]).status.code(), Some(2));
    assert_eq!(tailproc(&["run", "--suite", "extremal-index"]).status.code(), Some(2));
    assert_eq!(tailproc(&["run", "--model", "iid:alpha=1", "--tol", "-1"]).status.code(), Some(2));
}

#[test]
fn io_errors_exit_three() {
    assert_eq!(
        tailproc(&["run", "--config", "/nonexistent/run.toml"]).status.code(),
        Some(3)
    );
    let o = tailproc(&[
        "run",
        "--suite",
        "extremal-index",
        "--model",
        "iid:alpha=1",
        "--n",
        "1000",
        "--out",
        "/nonexistent/dir/out.csv",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn toml_config_with_tables_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(
        &path,
        r#"
suite = "extremal-index"
n_samples = 5000
seed = 11
format = "json"
models = [
  "iid:alpha=1.2",
  { kind = "ma", alpha = 1.5, coeffs = [1.0, 0.5] },
]
"#,
    )
    .unwrap();
    let o = tailproc(&["run", "--config", path.to_str().unwrap(), "--seed", "12"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["seed"], 12);
    assert_eq!(v["config"]["n_samples"], 5000);
    assert_eq!(v["pass"], true);
    let suites = v["suites"].as_array().unwrap();
    assert_eq!(suites.len(), 2);
    assert_eq!(suites[1]["model"], "ma:alpha=1.5,coeffs=1;0.5,start=0,skew=1");
    assert_eq!(suites[0]["rows"].as_array().unwrap().len(), 21);

    fs::write(&path, "suite = \"all\"\nsamples = 10\n").unwrap();
    let o = tailproc(&["run", "--config", path.to_str().unwrap(), "--model", "iid:alpha=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field"));
}

#[test]
fn skipped_suites_do_not_fail() {
    let o = tailproc(&[
        "run",
        "--suite",
        "clusterlab",
        "--model",
        "geometric:rho=0.5,alpha=1",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["suites"][0]["skipped"].as_str().unwrap().contains("no series"));
}
