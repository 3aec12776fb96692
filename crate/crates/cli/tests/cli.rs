use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use baerdec_cli::matfile::{format_entry, parse_entry, parse_matrix_file};
use proptest::prelude::*;
use serde_json::Value;

fn run(args: &[&str], stdin: Option<&str>) -> Output {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_baerdec"))
        .args(args)
        .env_remove("BAERDEC_SEED")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn baerdec");
    let mut input = child.stdin.take().unwrap();
    input.write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    drop(input);
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", stdout(o)))
}

fn file(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SWAP: &str = "matrix x 3\n5 0 0\n0 0 1\n0 0 0\nmatrix y 3\n0 1 0\n1 0 0\n0 0 1\n";

#[test]
fn decompose_reports_documented_keys() {
    let o = run(&["--json", "decompose", "--property", "normal"], Some("matrix x 2\n1 0\n0 2\n"));
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    for key in ["tolerance", "projection", "residuals", "iterations", "audit", "verdict", "seed"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["verdict"], "holds");
    assert_eq!(v["projection"]["rank"], 2);
}

#[test]
fn jordan_block_has_no_normal_part() {
    let o = run(&["decompose", "--property", "normal"], Some("matrix x 2\n0 1\n0 0\n"));
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("absent"), "{}", stdout(&o));
}

#[test]
fn canonical_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let swap = file(dir.path(), "swap.mat", SWAP);
    let o = run(&["--json", "canonical", "--property", "normal", "--in", swap.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["verdict"], "NO");
}

#[test]
fn input_errors_exit_two_with_location() {
    let o = run(&["decompose", "--property", "normal"], Some("matrix x 2\n1 0\n0 zz\n"));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");

    let o = run(&["decompose", "--property", "nonsense"], Some("matrix x 1\n1\n"));
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["decompose", "--property", "commuting"], Some("matrix x 1\n1\n"));
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["decompose", "--property", "normal"], Some("matrix x 2\n1 0\n0 1\nmatrix y 1\n1\n"));
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["wold"], Some("matrix x 2\n2 0\n0 1\n"));
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["no-such-command"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn user_functional_matches_builtin() {
    let input = "matrix a 3\n1 1 0\n0 1 0\n0 0 2j\n";
    let custom = run(&["--json", "--functional", "a*a' - a'*a", "decompose"], Some(input));
    let builtin = run(&["--json", "decompose", "--property", "normal"], Some(input));
    assert_eq!(custom.status.code(), Some(0));
    assert_eq!(json(&custom)["projection"]["rank"], 1);
    assert_eq!(json(&builtin)["projection"]["rank"], 1);
}

#[test]
fn generated_example_round_trips_through_decompose() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex.mat");
    let o = run(&["gen", "paper-example", "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let parsed = parse_matrix_file(&text).unwrap();
    assert!(parsed.get("x").is_some() && parsed.get("y").is_some());

    let p = out.to_str().unwrap();
    let o = run(&["--json", "--names", "x,y", "--in", p, "triple"], None);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["--json", "--names", "x,y", "--in", p, "decompose", "--property", "compatible"], None);
    assert_eq!(json(&o)["verdict"], "holds");
}

#[test]
fn halmos_wallen_on_generated_power_partial_isometry() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ppi.mat");
    let o = run(&["--seed", "4", "gen", "ppi", "--blocks", "1:2,3:1", "--unitary-dim", "2", "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["--json", "--names", "x", "--in", out.to_str().unwrap(), "halmos-wallen"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("\"unitary_rank\": 2") || text.contains("\"rank\": 2"), "{text}");

    let o = run(&["halmos-wallen"], Some("matrix x 2\n0 2\n0 0\n"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn projections_go_to_the_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.mat");
    let o = run(&["leftproj", "--out", out.to_str().unwrap()], Some("matrix x 2\n1 1\n1 1\n"));
    assert_eq!(o.status.code(), Some(0));
    let written = parse_matrix_file(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let p = &written.blocks()[0].1;
    assert!((p[(0, 1)].re - 0.5).abs() < 1e-12);
}

#[test]
fn selfcheck_single_suite() {
    let o = run(&["selfcheck", "--suite", "9"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("[PASS] suite"));
}

proptest! {
    #[test]
    fn entries_round_trip_bit_exactly(re in any::<f64>(), im in any::<f64>()) {
        prop_assume!(re.is_finite() && im.is_finite());
        let z = baerdec::C64::new(re, im);
        let back = parse_entry(&format_entry(z)).unwrap();
        prop_assert_eq!(back.re.to_bits(), re.to_bits());
        prop_assert_eq!(back.im.to_bits(), im.to_bits());
    }
}
