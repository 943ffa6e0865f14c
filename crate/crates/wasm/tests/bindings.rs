// Error paths build a JsError, which needs a JS host; only success paths run here.

use tailproc_wasm::{describe, run_check, series, tail_path};

#[test]
fn describe_gives_theta() {
    let d = describe("geometric:rho=0.5,alpha=1").ok().unwrap();
    assert_eq!(d, "geometric:alpha=1,rho=0.5\ntheta = 0.500000");
}

#[test]
fn tail_path_is_pareto_at_zero() {
    let y = tail_path("iid:alpha=1.5", 3, -2, 2).ok().unwrap();
    assert_eq!(y.len(), 5);
    assert!(y[2].abs() >= 1.0);
    assert!(y.iter().enumerate().all(|(i, v)| i == 2 || *v == 0.0));
}

#[test]
fn run_check_matches_the_cli_schema() {
    let csv = run_check("extremal-index", "geometric:alpha=1,rho=0.5", 5000, 1).ok().unwrap();
    assert!(csv.starts_with("suite,check,side_a,side_b,stderr_a,stderr_b,sigmas,pass\n"));
    assert_eq!(csv, run_check("extremal-index", "geometric:alpha=1,rho=0.5", 5000, 1).ok().unwrap());
    let skipped = run_check("clusterlab", "geometric:alpha=1,rho=0.5", 100, 1).ok().unwrap();
    assert!(skipped.contains("# skipped:"));
}

#[test]
fn series_has_the_requested_length() {
    assert_eq!(series("ma:alpha=1.5,coeffs=1;0.5", 100, 2).ok().unwrap().len(), 100);
}
