use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitval")).args(args).output().expect("binary runs")
}

fn lines(o: &Output) -> Vec<Value> {
    String::from_utf8(o.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).expect("every line is JSON"))
        .collect()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn check_t0_passes_on_gauss() {
    let inst = data("gauss.inst");
    let o = run(&["check-t0", "--instance", inst.to_str().unwrap(), "--t0", "25"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = lines(&o);
    assert_eq!(v.len(), 2);
    assert_eq!(v[0]["manifest"]["subcommand"], "check-t0");
    assert_eq!(v[1]["overall"]["status"], "pass");
}

#[test]
fn check_t0_failure_exit_code() {
    let inst = data("gauss.inst");
    let o = run(&["check-t0", "--instance", inst.to_str().unwrap(), "--t0", "17"]);
    assert_eq!(code(&o), 1);
    assert_eq!(lines(&o)[1]["overall"]["status"], "fail");
}

#[test]
fn hilbert_symbol_at_two() {
    let o = run(&["hilbert", "-1", "-1", "--place", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(lines(&o)[1]["symbol"], -1);
}

#[test]
fn conflicting_targets_exit_two() {
    let inst = data("empty-S-conflict.inst");
    let o = run(&["search-t0", "--instance", inst.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let v = lines(&o);
    assert_eq!(v.last().unwrap()["error"]["kind"], "infeasible_at_precision");
}

#[test]
fn parse_errors_have_positions() {
    let inst = data("bad-syntax.inst");
    let o = run(&["verify-hypotheses", "--instance", inst.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let e = lines(&o).last().unwrap()["error"].clone();
    assert_eq!(e["kind"], "parse");
    assert_eq!(e["line"], 2);
    assert_eq!(e["column"], 17);
    assert_eq!(code(&run(&["no-such-command"])), 2);
}

#[test]
fn search_and_fiber_on_gauss() {
    let inst = data("gauss.inst");
    let o = run(&["search-t0", "--instance", inst.to_str().unwrap(), "--bound", "200"]);
    assert_eq!(code(&o), 0);
    let v = lines(&o);
    assert_eq!(v[1]["t0"], "25");
    assert!(v.last().unwrap()["stats"].is_object());
    let o = run(&["w-verify", "--instance", inst.to_str().unwrap(), "--t0", "25", "--place", "5", "--place", "real"]);
    assert_eq!(code(&o), 0);
    let v = lines(&o);
    assert_eq!(v[1]["verdict"], "yes");
    assert_eq!(v[2]["verdict"], "yes");
}

#[test]
fn instance_digest_and_precision_override() {
    let inst = data("gauss.inst");
    let bytes = std::fs::read(&inst).unwrap();
    let o = run(&["verify-hypotheses", "--instance", inst.to_str().unwrap(), "--precision", "2=5,real=1"]);
    assert_eq!(code(&o), 0);
    let v = lines(&o);
    use sha2::Digest;
    let want = hex::encode(sha2::Sha256::digest(&bytes));
    assert_eq!(v[0]["manifest"]["input_digest"], want.as_str());
    assert_eq!(v[0]["manifest"]["parameters"]["precision"], "2=5,real=1");
    assert_eq!(v.len(), 4);
}

#[test]
fn change_vars_and_extend() {
    let inst = data("gauss.inst");
    let p = inst.to_str().unwrap();
    let o = run(&["change-vars", "--instance", p, "--map", "1,1,0,1", "--t0-prime", "25"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = lines(&o);
    assert!(v[1]["transformed"]["instance"].as_str().unwrap().contains("entry: P=t - 1"));
    assert_eq!(v[2]["identity"], true);
    let o = run(&["extend-s", "--instance", p, "--primes", "13"]);
    assert_eq!(code(&o), 0);
    let v = lines(&o);
    assert_eq!(v[1]["targets"][0], "v=13 t=1/169 N=1");
}

#[test]
fn galois_and_character_commands() {
    let o = run(&["almost-abelian", "--poly", "x^5 - x - 1", "--bound", "200"]);
    assert_eq!(code(&o), 0);
    let v = lines(&o);
    assert_eq!(v[1]["verdict"]["value"], "rejected");
    assert_eq!(v[1]["reverified"], true);
    let o = run(&["split-prime", "--field", "t^2+1", "--field", "t^2-2"]);
    assert_eq!(lines(&o)[1]["prime"], 17);
    let o = run(&["reciprocity", "3", "-5"]);
    assert_eq!(code(&o), 0);
    assert_eq!(lines(&o)[1]["defect"], "0");
    let o = run(&["cyclic-inv", "3", "--prime", "3", "--quadratic", "-1"]);
    assert_eq!(lines(&o)[1]["invariant"], "1/2");
}

#[test]
fn approximation_commands() {
    let o = run(&["norm-multiplier", "--field", "t^2+1", "--target", "v=3 t=2 N=1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(lines(&o)[1]["verified"], true);
    let o = run(&["line-trick", "--dim", "2", "--exclude", "x1 ; x2", "--target", "v=3 point=1,1 N=2", "--v0", "5", "--seed", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = lines(&o);
    assert_eq!(v[1]["verified"], true);
    assert_eq!(v[0]["manifest"]["seed"], 4);
}

#[test]
fn sieve_commands() {
    let o = run(&["hh1-search", "--form", "x^2+1", "--s", "2", "--bound", "20"]);
    assert_eq!(code(&o), 0);
    let v = lines(&o);
    assert!(v.iter().any(|h| h["lambda"] == "1" && h["mu"] == "4" && h["forms"][0]["prime"] == "17"));
    let o = run(&["irving-build", "--samples", "25"]);
    assert_eq!(code(&o), 0);
    let v = lines(&o);
    assert_eq!(v[1]["form"]["real_places"], 1);
    assert_eq!(v[1]["identity_failures"], 0);
    let o = run(&["irving-build", "--field", "t^3 - 3*t + 1"]);
    assert_eq!(code(&o), 2);
    let o = run(&["irving-scan", "--bound", "30", "--max-hits", "5"]);
    assert_eq!(code(&o), 0);
    assert!(lines(&o).len() >= 7);
}

#[test]
fn runs_are_reproducible() {
    let args = ["hh1-search", "--form", "x^3-2", "--s", "2,3", "--bound", "200", "--lambda-bound", "50", "--segment", "7"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let mut more = args.to_vec();
    more.extend(["--jobs", "1"]);
    assert_eq!(run(&more).stdout, a.stdout);
}

#[test]
fn cache_changes_nothing_but_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("factors.jsonl");
    let args = ["irving-scan", "--coeffs", "1000000007,0,0,1000000009", "--bound", "12"];
    let plain = run(&args);
    assert_eq!(code(&plain), 0);
    let with = |extra: &[&str]| {
        let mut a = args.to_vec();
        a.extend_from_slice(extra);
        run(&a)
    };
    let cold = with(&["--cache", cache.to_str().unwrap()]);
    assert_eq!(cold.stdout, plain.stdout);
    let stored = std::fs::read_to_string(&cache).unwrap();
    assert!(stored.lines().count() > 0);
    // A corrupt entry is dropped on load and never used.
    let mut text = stored.clone();
    text.push_str("{\"n\":\"1000000000000000000\",\"factors\":[[\"7\",1]]}\n");
    std::fs::write(&cache, text).unwrap();
    let warm = with(&["--cache", cache.to_str().unwrap()]);
    assert_eq!(warm.stdout, plain.stdout);
    let err = String::from_utf8_lossy(&warm.stderr);
    assert!(err.contains("1 dropped"), "{err}");
}
