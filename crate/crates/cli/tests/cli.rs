//! End-to-end tests driving the compiled binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn plomega(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plomega"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("plomega-cli-{}-{}", tag, std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn make_tau_round_trips() {
    let out = plomega(&["make", "tau", "--n", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("plmap1p v1 k="));
    // inline literals are accepted wherever files are
    let echoed = plomega(&["invert", "--in", &text]);
    assert!(echoed.status.success());
    let back = plomega(&["invert", "--in", &stdout(&echoed)]);
    assert_eq!(stdout(&back), text);
}

#[test]
fn theta_prints_residue_and_orbit() {
    let out = plomega(&["theta", "--n", "2", "--x", "3/2^8"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "0 (orbit O_3)\n");
}

#[test]
fn xi_of_first_bump() {
    let zeta = stdout(&plomega(&["make", "zeta", "--n", "2", "--k", "1"]));
    let out = plomega(&["xi", "--n", "2", "--in", &zeta]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "1:+1 3:-2\n");
}

#[test]
fn check_omega_accepts_and_refuses() {
    let tau = stdout(&plomega(&["make", "tau", "--n", "4"]));
    let ok = plomega(&["check-omega", "--n", "4", "--in", &tau]);
    assert!(ok.status.success());
    assert!(stdout(&ok).contains("member of the level-4 group"));

    let t1 = stdout(&plomega(&["make", "translation", "--c", "1"]));
    let bad = plomega(&["check-omega", "--n", "4", "--in", &t1]);
    assert_eq!(bad.status.code(), Some(1));
    let text = stdout(&bad);
    assert!(text.contains("verdict=FAIL"));
    assert!(text.contains("count=1 slope_log2=0"));
}

#[test]
fn partition_lists_doubling_classes() {
    let out = plomega(&["partition", "--n", "2"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "class: 2\nclass: 1 3\neta = 1\n");
}

#[test]
fn classify_reports_subgroup_flags() {
    let zeta = stdout(&plomega(&["make", "zeta", "--n", "2", "--k", "1"]));
    let out = plomega(&["classify", "--n", "2", "--in", &zeta]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("in_F=true in_Fc=true in_Fprime=false"));
    assert!(text.contains("in_Theta=true"));
}

#[test]
fn transporter_refuses_mismatched_residues() {
    let out = plomega(&[
        "transporter", "--n", "2", "--xs", "1/2^2", "--ys", "1/2^1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("residue mismatch"));
}

#[test]
fn malformed_input_exits_two() {
    let out = plomega(&["theta", "--n", "2", "--x", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let out = plomega(&["xi", "--n", "2", "--in", "/nonexistent/file.plmap"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn normal_form_manifest_verifies_offline() {
    let dir = temp_dir("nf");
    let tau = stdout(&plomega(&["make", "tau", "--n", "2"]));
    let out = plomega(&[
        "normal-form",
        "--n",
        "2",
        "--in",
        &tau,
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = dir.join("manifest.txt");
    let check = plomega(&["verify", "--manifest", manifest.to_str().unwrap()]);
    assert!(check.status.success());
    assert!(stdout(&check).contains("manifest verifies"));

    // corrupting a factor file must break verification
    let factor = dir.join("factor_00.plmap");
    let shifted = stdout(&plomega(&["make", "translation", "--c", "1/2^1"]));
    std::fs::write(&factor, shifted).unwrap();
    let check = plomega(&["verify", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn certify_reports_exact_bounds() {
    let tau = stdout(&plomega(&["make", "tau", "--n", "2"]));
    let out = plomega(&["certify-ulam", "--n", "2", "--in", &tau]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("width-certificate kind=ulam n=2"));
    assert!(text.contains("distance_to_nZ=3/2^3"));
    assert!(text.contains("bound=1"));
    let out = plomega(&["certify-commutator", "--n", "2", "--in", &tau]);
    assert!(stdout(&out).contains("kind=commutator"));
}

#[test]
fn verify_suite_is_deterministic() {
    let a = plomega(&["verify", "--n", "2", "--seed", "5", "--iters", "8"]);
    let b = plomega(&["verify", "--n", "2", "--seed", "5", "--iters", "8"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("LEMMA closure n=2 trials=8 pass=8 fail=0"));
}

#[test]
fn eval_and_compose_agree() {
    let tau = stdout(&plomega(&["make", "tau", "--n", "2"]));
    let inv = stdout(&plomega(&["invert", "--in", &tau]));
    let id = stdout(&plomega(&["compose", "--in", &tau, "--in", &inv]));
    let out = plomega(&["eval", "--in", &id, "--x", "7/2^5"]);
    assert_eq!(stdout(&out), "7/2^5\n");
}
