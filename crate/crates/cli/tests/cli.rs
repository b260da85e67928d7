use std::process::{Command, Output};

use serde_json::Value;

fn regmod(args: &[&str]) -> Output {
    regmod_env(args, None)
}

fn regmod_env(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_regmod"));
    cmd.args(args);
    match seed {
        Some(v) => cmd.env("REGMOD_SEED", v),
        None => cmd.env_remove("REGMOD_SEED"),
    };
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn list_names_the_entries() {
    let o = regmod(&["list"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    for name in ["ex21_branch_parabola", "ex22_hyperbola", "ex31_sqrt_problem", "shift_halfline"] {
        assert!(text.contains(name), "{name}");
    }
    let o = regmod(&["list", "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.as_array().unwrap().iter().any(|e| e["name"] == "affine_inclusion"));
}

#[test]
fn run_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let o = regmod(&[
        "run",
        "ex31_sqrt_problem",
        "problem_calmness",
        "--param",
        "beta=2",
        "--json",
        json.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("PASS ex31_sqrt_problem problem_calmness"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("wall time"));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["result"]["verdict"], "finite");
    assert_eq!(report["parameters"]["beta"], 2.0);
    let table = std::fs::read_to_string(&csv).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("radius,value,raw"));
    assert_eq!(lines.count(), report["result"]["rungs"].as_array().unwrap().len());
    // Only the two outputs remain; no temporary files are left behind.
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let mode = std::fs::metadata(&json).unwrap().permissions().mode();
        assert_eq!(mode & 0o777, 0o644);
    }
}

#[test]
fn exit_codes() {
    assert_eq!(code(&regmod(&["run", "identity", "mapping_calmness"])), 0);
    // An estimator error fails the run.
    let o = regmod(&["run", "ex31_sqrt_problem", "problem_calmness", "--param", "beta=-1"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("FAIL"));
    // Operations without rungs have no CSV.
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("x.csv");
    let o = regmod(&["run", "shift_halfline", "exactness", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    for usage in [
        vec!["run", "no_such_entry", "hemiregularity"],
        vec!["run", "identity", "exactness"],
        vec!["run", "identity", "hemiregularity", "--param", "kappa"],
        vec!["run", "identity", "hemiregularity", "--ladder", "0.5,2,8"],
        vec!["run", "identity", "hemiregularity", "--tol", "-1"],
        vec!["frobnicate"],
        vec![],
    ] {
        assert_eq!(code(&regmod(&usage)), 2, "{usage:?}");
    }
}

#[test]
fn scrambled_scheme_follows_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: Option<&str>, name: &str| {
        let path = dir.path().join(name);
        let o = regmod_env(
            &["run", "identity", "uniform_hemiregularity", "--scheme", "scrambled", "--json", path.to_str().unwrap()],
            seed,
        );
        (code(&o), std::fs::read_to_string(&path).ok())
    };
    let (c1, a) = run(Some("7"), "a.json");
    let (c2, b) = run(Some("7"), "b.json");
    let (c3, other) = run(Some("8"), "c.json");
    assert_eq!((c1, c2, c3), (0, 0, 0));
    assert_eq!(a, b);
    let seed_of = |text: &Option<String>| {
        let v: Value = serde_json::from_str(text.as_ref().unwrap()).unwrap();
        v["config"]["resolution"]["scheme"]["seed"].clone()
    };
    assert_eq!(seed_of(&a), 7);
    assert_eq!(seed_of(&other), 8);
    let (cd, default) = run(None, "d.json");
    assert_eq!(cd, 0);
    assert_eq!(seed_of(&default), regmod::metric::DEFAULT_SEED);
    let (bad, _) = run(Some("not-a-number"), "e.json");
    assert_eq!(bad, 2);
}
