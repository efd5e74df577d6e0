use lipsel::convex::Polytope;
use lipsel::metric::PseudoSpace;
use lipsel::norm::NormTag;
use lipsel::SelectionProblem;
use lipsel_cli::generate::{generate, GenParams, Kind};
use lipsel_cli::report::from_csv;
use lipsel_cli::InstanceFile;
use std::path::Path;
use std::process::{Command, Output};

fn lipsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lipsel"))
        .args(args)
        .env_remove("LIPSEL_JOBS")
        .output()
        .unwrap()
}

fn write_instance(dir: &Path, name: &str, p: SelectionProblem) -> String {
    let path = dir.join(name);
    std::fs::write(&path, InstanceFile::new(p, None).to_json().unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn two_singletons() -> SelectionProblem {
    SelectionProblem::new(
        PseudoSpace::new(vec![vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap(),
        None,
        1,
        NormTag::Linf,
        vec![Polytope::point(&[0.0]), Polytope::point(&[3.0])],
        1.0,
    )
    .unwrap()
}

#[test]
fn solve_singleton_instance() {
    let dir = tempfile::tempdir().unwrap();
    let p = SelectionProblem::new(
        PseudoSpace::new(vec![vec![0.0]]).unwrap(),
        None,
        2,
        NormTag::Linf,
        vec![Polytope::cube(&[0.0, 0.0], &[1.0, 1.0])],
        1.0,
    )
    .unwrap();
    let path = write_instance(dir.path(), "one.json", p);
    let v = stdout_json(&lipsel(&["solve", &path]));
    assert_eq!(v["lambda_star"].as_f64(), Some(0.0));
    assert_eq!(v["pipeline"]["verified"], true);
}

#[test]
fn finiteness_on_two_singletons() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_instance(dir.path(), "pair.json", two_singletons());
    let v = stdout_json(&lipsel(&["finiteness", "--exact-rational", &path]));
    assert_eq!(v["ratio"].as_f64(), Some(1.0));
    assert_eq!(v["lambda_full"].as_f64(), Some(1.5));
}

#[test]
fn generate_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = lipsel(&["generate", "--kind", "metric", "--n", "5", "--m", "2", "--seed", "42", "--out", p.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let ta = std::fs::read_to_string(&a).unwrap();
    assert_eq!(ta, std::fs::read_to_string(&b).unwrap());
    let parsed = InstanceFile::parse(&ta).unwrap();
    assert_eq!(parsed.to_json().unwrap(), ta);
    assert_eq!(parsed, generate(GenParams::new(Kind::Metric, 5, 2, 42)).unwrap());
}

#[test]
fn errors_are_json_with_nonzero_exit() {
    let out = lipsel(&["solve", "/nonexistent/instance.json"]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(v["error"].as_str().unwrap().contains("reading"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema_version":"1","problem":{"space":{"dist":[[0,1],[2,0]]},"m":1,"F":[]}}"#).unwrap();
    let out = lipsel(&["finiteness", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn whitney_needs_a_tree() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_instance(dir.path(), "pair.json", two_singletons());
    assert_eq!(lipsel(&["whitney", &path]).status.code(), Some(2));
}

#[test]
fn tree_verbs_pass() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(GenParams::new(Kind::Tree, 6, 2, 5)).unwrap();
    let path = dir.path().join("t.json");
    std::fs::write(&path, inst.to_json().unwrap()).unwrap();
    let path = path.to_str().unwrap();
    let v = stdout_json(&lipsel(&["nagata", path]));
    assert_eq!(v.as_array().unwrap().len(), 4);
    let v = stdout_json(&lipsel(&["whitney", path]));
    assert!(v["measure"]["sum_err"].as_f64().unwrap() <= 1e-9);
    let v = stdout_json(&lipsel(&["core", "--gamma-hat", "4", path]));
    assert_eq!(v["cores"].as_array().unwrap().len(), 6);
}

#[test]
fn batch_solve_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = dir.path().join("in");
    let results = dir.path().join("res");
    let out = lipsel(&[
        "generate", "--kind", "tree", "--n", "4", "--m", "1", "--seed", "7", "--count", "5", "--out",
        inputs.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let run = |jobs: &str, res: &Path| {
        let out = lipsel(&["solve", "--jobs", jobs, "--out", res.to_str().unwrap(), inputs.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run("1", &results);
    let csv_path = dir.path().join("table.csv");
    let out = lipsel(&["report", "--out", csv_path.to_str().unwrap(), results.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with("instance,n,m,λ_N,λ_full,ratio,pipeline_seminorm,core_ratio\n"));
    assert!(!text.contains('\r'));
    let rows = from_csv(&text).unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.ratio.is_finite() && r.ratio >= 1.0 - 1e-9));

    let again = dir.path().join("res2");
    run("2", &again);
    for entry in std::fs::read_dir(&results).unwrap() {
        let p = entry.unwrap().path();
        let other = again.join(p.file_name().unwrap());
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(other).unwrap());
    }
}

#[test]
fn gamma_single_query() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_instance(dir.path(), "pair.json", two_singletons().with_lambda(1.5));
    let v = stdout_json(&lipsel(&["gamma", "--ell", "1", "--x", "0", "--xi", "0", &path]));
    assert_eq!(v["queries"][0]["decision"], "true");
    let v = stdout_json(&lipsel(&["gamma", "--ell", "0", "--x", "1", "--xi", "2", &path]));
    assert_eq!(v["queries"][0]["decision"], "false");
}
