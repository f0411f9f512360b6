use std::process::{Command, Output};

fn slrep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slrep"))
        .args(args)
        .output()
        .expect("spawn slrep")
}

fn json(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes).expect("manifest is JSON")
}

#[test]
fn count_table_on_stdout() {
    let out = slrep(&["count", "--rank", "2", "--n", "8"]);
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().next(), Some("n,p"));
    assert_eq!(table.lines().last(), Some("8,9"));
    // the manifest moves to stderr when stdout carries the table
    let manifest = json(&out.stderr);
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["result"]["p_n"], "9");
}

#[test]
fn count_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let out = slrep(&["count", "--rank", "3", "--n", "5", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(json(&out.stdout)["status"], "ok");
    let table = std::fs::read_to_string(&path).unwrap();
    let last = table.lines().last().unwrap();
    assert!(last.starts_with("5,"), "{last}");
}

#[test]
fn boltzmann_sampling_is_reproducible() {
    let args = [
        "sample", "--mode", "boltzmann", "--rank", "2", "--n", "100", "--samples", "2", "--seed", "7",
    ];
    let a = slrep(&args);
    let b = slrep(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout.iter().filter(|&&c| c == b'\n').count(), 2);
    let other = slrep(&[
        "sample", "--mode", "boltzmann", "--rank", "2", "--n", "100", "--samples", "2", "--seed", "8",
    ]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn uniform_sample_has_target_dimension() {
    let out = slrep(&["sample", "--mode", "uniform-dp", "--rank", "2", "--n", "40", "--samples", "3", "--seed", "1"]);
    assert!(out.status.success());
    for line in String::from_utf8(out.stdout).unwrap().lines() {
        assert_eq!(json(line.as_bytes())["dim"], 40);
    }
}

#[test]
fn weyl_check_small_box() {
    let out = slrep(&["verify", "weyl", "--rank", "2", "--N", "4", "--eps", "0.03125", "--thetas", "200"]);
    assert!(out.status.success());
    let m = json(&out.stdout);
    assert_eq!(m["result"]["pass"], true);
    assert_eq!(m["result"]["weyl"]["violations"], 0);
}

#[test]
fn rank_above_cap_is_a_config_error() {
    let out = slrep(&["count", "--rank", "7", "--n", "5"]);
    assert_eq!(out.status.code(), Some(2));
    // table commands report on stderr: the manifest line, then the message
    let err = String::from_utf8(out.stderr).unwrap();
    let manifest = json(err.lines().next().unwrap().as_bytes());
    assert_eq!(manifest["status"], "invalid-config");
}

#[test]
fn bad_weight_is_a_config_error() {
    let out = slrep(&["dist", "--stat", "mult", "--k", "1,0", "--rank", "2", "--n", "20"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_exits_two() {
    let out = slrep(&["count", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}
