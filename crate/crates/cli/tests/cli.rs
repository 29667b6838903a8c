use std::fs;
use std::path::PathBuf;

use irid_cli::{run, EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};

fn model(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../models")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn irid(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["irid"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn validate_accepts_every_bundled_model() {
    for name in [
        "wildcatter_irid.json",
        "wildcatter_irid_listing_r.json",
        "wildcatter_irid_table1_payoffs.json",
        "wildcatter_info_only.json",
        "wildcatter_no_budget.json",
        "wildcatter_budget_workaround.json",
    ] {
        let (code, out, err) = irid(&["validate", &model(name)]);
        assert_eq!(code, EXIT_OK, "{name}: {err}");
        assert_eq!(out.trim(), "OK");
    }
}

#[test]
fn broken_model_exits_two_with_a_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = fs::read_to_string(model("wildcatter_irid.json")).unwrap();
    v = v.replacen("\"relevance\"", "\"sideways\"", 1);
    let path = dir.path().join("bad.json");
    fs::write(&path, v).unwrap();
    let (code, _, err) = irid(&["validate", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("arrows["), "{err}");

    fs::write(&path, "{ \"nodes\": [").unwrap();
    let (code, _, err) = irid(&["validate", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("line"), "{err}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(irid(&[]).0, EXIT_USAGE);
    assert_eq!(irid(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(
        irid(&["solve", &model("wildcatter_irid.json")]).0,
        EXIT_USAGE
    );
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let (code, _, err) = irid(&[
        "solve",
        &model("wildcatter_irid.json"),
        "--backend",
        "gibbs",
        "--samples",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_USAGE, "{err}");
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = irid(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("compare"));
}

#[test]
fn unreadable_file_is_a_runtime_failure() {
    let (code, _, err) = irid(&["validate", "/nonexistent/model.json"]);
    assert_eq!(code, EXIT_RUNTIME);
    assert!(err.contains("cannot read"));
}

#[test]
fn exact_solution_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let (code, table, err) = irid(&[
        "solve",
        &model("wildcatter_irid.json"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(table.contains("expected value: 334750"), "{table}");
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("\"expected_value\": 334750"), "{text}");
    assert!(text.contains("\"backend\": \"exact\""));
    assert!(text.contains("\"sampler\": null"));
}

#[test]
fn gibbs_solutions_are_byte_identical_under_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let solve = |file: &str, seed: &str| {
        let out = dir.path().join(file);
        let args = [
            "solve",
            &model("wildcatter_irid.json"),
            "--backend",
            "gibbs",
            "--seed",
            seed,
            "--samples",
            "4000",
            "--out",
            out.to_str().unwrap(),
        ];
        let (code, _, err) = irid(&args);
        assert_eq!(code, EXIT_OK, "{err}");
        fs::read(out).unwrap()
    };
    let a = solve("a.json", "7");
    let b = solve("b.json", "7");
    let c = solve("c.json", "8");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn compare_reports_agreement() {
    let (code, out, err) = irid(&["compare", &model("wildcatter_irid.json"), "--seed", "42"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("policies agree"));
}

#[test]
fn oracle_prints_the_optimum() {
    let (code, out, err) = irid(&["oracle", &model("wildcatter_irid.json")]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("expected value: 334750"), "{out}");
}

#[test]
fn oracle_budget_exceeded_is_a_runtime_failure() {
    let (code, _, err) = irid(&[
        "oracle",
        &model("wildcatter_irid.json"),
        "--max-policy-combinations",
        "10",
    ]);
    assert_eq!(code, EXIT_RUNTIME, "{err}");
}

#[test]
fn minimize_override_changes_the_answer() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let (code, _, err) = irid(&[
        "solve",
        &model("wildcatter_irid.json"),
        "--objective",
        "min",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(fs::read_to_string(out)
        .unwrap()
        .contains("\"objective\": \"minimize\""));
}
