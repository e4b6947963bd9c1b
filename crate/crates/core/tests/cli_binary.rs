use std::process::Command;

fn dimerbell(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dimerbell")).args(args).output().unwrap()
}

#[test]
fn exit_codes() {
    let ok = dimerbell(&["enumerate", "--n", "3"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stderr).contains("72"));

    assert_eq!(dimerbell(&["enumerate", "--n", "2"]).status.code(), Some(1));
    assert_eq!(dimerbell(&["enumerate", "--boundary", "sphere"]).status.code(), Some(1));
    assert_eq!(dimerbell(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(dimerbell(&["--help"]).status.code(), Some(0));

    // an unreachable residual target makes Lanczos give up
    let stuck = dimerbell(&["quantum-value", "--n", "3", "--class", "0", "--epsilon", "0.5", "--solver", "lanczos", "--tol", "1e-30"]);
    assert_eq!(stuck.status.code(), Some(2), "{}", String::from_utf8_lossy(&stuck.stderr));
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = dimerbell(&["classical-bound", "--n", "4", "--boundary", "klein", "--grid", "0:2:0.5", "--out", out.to_str().unwrap()]);
        assert_eq!(status.status.code(), Some(0));
        std::fs::read(out).unwrap()
    };
    let (a, b) = (run("a.json"), run("b.json"));
    let strip = |bytes: &[u8]| {
        let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
        v["config"]["out"] = serde_json::Value::Null;
        v
    };
    assert_eq!(strip(&a), strip(&b));
    let v = strip(&a);
    assert_eq!(v["bounds"].as_array().unwrap().len(), 36 * 5);
    assert_eq!(v["config"]["command"], "classical-bound");
}
