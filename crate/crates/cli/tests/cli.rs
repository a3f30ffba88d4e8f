use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use locc_cert_cli::format::{parse_measurement_file, render_measurement_file};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_locc-cert"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).env_remove("LOCC_CERT_BACKEND").output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(s: &str) -> Value {
    serde_json::from_str(s).unwrap_or_else(|e| panic!("bad JSON ({e}): {s}"))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn exact(re: &str) -> String {
    format!(r#"{{"re":"{re}","im":"0"}}"#)
}

/// Diagonal exact matrix as a JSON array of rows.
fn diag(v: &[&str]) -> String {
    let rows: Vec<String> = (0..v.len())
        .map(|i| {
            let row: Vec<String> = (0..v.len()).map(|j| exact(if i == j { v[i] } else { "0" })).collect();
            format!("[{}]", row.join(","))
        })
        .collect();
    format!("[{}]", rows.join(","))
}

fn qubit_file(second: &str) -> String {
    format!(
        r#"{{"parties":1,"dims":[2],"mode":"exact","elements":[
            {{"factors":[{}]}},
            {{"factors":[{}]}}]}}"#,
        diag(&["1", "0"]),
        diag(&["0", second])
    )
}

#[test]
fn domino_is_certified_with_exit_10() {
    let dir = TempDir::new().unwrap();
    let m = dir.path().join("domino.json");
    assert_eq!(run(&["generate", "domino", "--out", s(&m)]).0, 0);
    let (code, out, _) = run(&["check", s(&m)]);
    assert_eq!(code, 10);
    let c = json(&out);
    assert_eq!(c["sum_e"], 14);
    assert_eq!(c["theorem2_bound"], 13);
    assert_eq!(c["theorem1_bound"], 16);
    assert_eq!(c["conclusion"], "not_finite_round_locc");
    assert_eq!(
        c["conclusion_text"],
        "not implementable by finite-round LOCC (necessary condition violated)"
    );

    // --party restricts the ray listing, not the counts.
    let (code, out, _) = run(&["check", s(&m), "--party", "1"]);
    assert_eq!(code, 10);
    let c = json(&out);
    assert_eq!(c["parties"].as_array().unwrap().len(), 1);
    assert_eq!(c["parties"][0]["extreme_rays"].as_array().unwrap().len(), 7);
    assert_eq!(c["sum_e"], 14);

    // The float backend reaches the same verdict.
    let (code, out, _) = run(&["check", s(&m), "--backend", "float", "--format", "text"]);
    assert_eq!(code, 10);
    assert!(out.contains("sum_e = 14"), "{out}");
}

#[test]
fn backend_can_come_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "f.json", r#"{"parties":1,"dims":[1],"mode":"float","elements":[{"factors":[[[[1.0,0.0]]]]}]}"#);
    let out = bin()
        .args(["check", s(&f)])
        .env("LOCC_CERT_BACKEND", "exact")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exact backend"));
}

#[test]
fn qubit_measurement_exits_0() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "q.json", &qubit_file("1"));
    let (code, out, _) = run(&["check", s(&f)]);
    assert_eq!(code, 0);
    let c = json(&out);
    assert_eq!(c["violated_t1"], false);
    assert_eq!(c["violated_t2"], false);
    assert_eq!(c["conclusion"], "inconclusive");
}

#[test]
fn zero_denominator_names_the_entry() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "bad.json", &qubit_file("1/0"));
    let (code, out, err) = run(&["check", s(&f)]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.contains("elements[1].factors[0][1][1].re"), "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn duplicates_need_dedupe() {
    let dir = TempDir::new().unwrap();
    let text = format!(
        r#"{{"parties":1,"dims":[2],"mode":"exact","elements":[
            {{"factors":[{a}]}},{{"factors":[{a}]}},{{"factors":[{b}]}}]}}"#,
        a = diag(&["1/2", "0"]),
        b = diag(&["0", "1"])
    );
    let f = write(&dir, "dup.json", &text);
    let (code, _, err) = run(&["check", s(&f)]);
    assert_eq!(code, 1);
    assert!(err.contains("(0, 1)") && err.contains("--dedupe"), "{err}");
    let (code, out, _) = run(&["check", s(&f), "--dedupe"]);
    assert_eq!(code, 0);
    let c = json(&out);
    assert_eq!(c["n"], 2);
    assert!(c["warnings"][0].as_str().unwrap().contains("merged"));
}

#[test]
fn out_flag_writes_the_certificate() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "q.json", &qubit_file("1"));
    let cert = dir.path().join("cert.json");
    let (code, out, _) = run(&["check", s(&f), "--out", s(&cert)]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    assert_eq!(json(&fs::read_to_string(cert).unwrap())["n"], 2);
}

#[test]
fn tight_fixture_pairs_audit_cleanly() {
    for (p, n) in [("2", "3"), ("3", "4")] {
        let dir = TempDir::new().unwrap();
        let m = dir.path().join("m.json");
        let t = dir.path().join("t.json");
        let (code, _, err) =
            run(&["generate", "tight", "--parties", p, "--n", n, "--out", s(&m), "--tree-out", s(&t)]);
        assert_eq!(code, 0, "{err}");
        let (code, out, _) = run(&["tree-audit", s(&t), s(&m)]);
        assert_eq!(code, 0);
        let r = json(&out);
        assert_eq!(r["passed"], true, "{out}");
        assert_eq!(r["chain_tight"], true);
        assert!(r["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
        // The generated measurement meets the sharper bound exactly.
        let (code, out, _) = run(&["check", s(&m)]);
        assert_eq!(code, 0);
        assert_eq!(json(&out)["equality_t2"], true);
    }
}

#[test]
fn omission_fixture_audits() {
    let dir = TempDir::new().unwrap();
    let m = dir.path().join("m.json");
    let t = dir.path().join("t.json");
    let args = ["generate", "tight-omit", "--parties", "2", "--n", "3", "--k", "2"];
    let (code, _, err) = run(&[&args[..], &["--out", s(&m), "--tree-out", s(&t)]].concat());
    assert_eq!(code, 0, "{err}");
    let (code, out, _) = run(&["tree-audit", s(&t), s(&m)]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["passed"], true, "{out}");
}

fn one_qutrit_projectors() -> String {
    format!(
        r#"{{"parties":1,"dims":[3],"mode":"exact","elements":[
            {{"factors":[{}]}},{{"factors":[{}]}},{{"factors":[{}]}}]}}"#,
        diag(&["1", "0", "0"]),
        diag(&["0", "1", "0"]),
        diag(&["0", "0", "1"])
    )
}

fn leaf(label: &str, element: usize) -> String {
    format!(r#"{{"party":0,"label":{label},"element_index":{element}}}"#)
}

fn inner(label: &str, children: &[String]) -> String {
    format!(r#"{{"party":0,"label":{label},"children":[{}]}}"#, children.join(","))
}

fn tree(children: &[String]) -> String {
    format!(
        r#"{{"parties":1,"dims":[3],"mode":"exact","root":{{"children":[{}]}}}}"#,
        children.join(",")
    )
}

#[test]
fn proportional_siblings_fail_the_canonical_check() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.json", &one_qutrit_projectors());
    let t = write(
        &dir,
        "t.json",
        &tree(&[
            leaf(&diag(&["1", "0", "0"]), 0),
            inner(
                &diag(&["2", "0", "0"]),
                &[leaf(&diag(&["0", "1", "0"]), 1), leaf(&diag(&["0", "0", "1"]), 2)],
            ),
        ]),
    );
    let (code, out, _) = run(&["tree-audit", s(&t), s(&m)]);
    assert_eq!(code, 0);
    let r = json(&out);
    assert_eq!(r["passed"], false);
    assert_eq!(r["canonical"]["is_canonical"], false);
    assert!(!r["canonical"]["violations"].as_array().unwrap().is_empty());
    assert!(r["aborted"].is_string());
}

#[test]
fn duplicated_leaf_is_pruned_to_n_leaves() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.json", &one_qutrit_projectors());
    // Element 0 is realized twice: directly under the root and again deep
    // inside the right branch.
    let t = write(
        &dir,
        "t.json",
        &tree(&[
            leaf(&diag(&["1", "0", "0"]), 0),
            inner(
                &diag(&["1", "1", "1"]),
                &[
                    leaf(&diag(&["0", "1", "0"]), 1),
                    inner(
                        &diag(&["1", "0", "1"]),
                        &[leaf(&diag(&["0", "0", "1"]), 2), leaf(&diag(&["1", "0", "0"]), 0)],
                    ),
                ],
            ),
        ]),
    );
    let (code, out, _) = run(&["tree-audit", s(&t), s(&m)]);
    assert_eq!(code, 0);
    let r = json(&out);
    assert_eq!(r["canonical"]["leaf_count"], 4);
    assert_eq!(r["removed_leaves"].as_array().unwrap().len(), 1);
    assert_eq!(r["pruned_leaf_count"], 3);
    assert_eq!(r["passed"], true, "{out}");
}

fn density_ratios(dir: &TempDir, parties: &str) -> Vec<String> {
    let m = dir.path().join(format!("density{parties}.json"));
    let (code, _, err) = run(&["generate", "density", "--parties", parties, "--subtrees", "8", "--out", s(&m)]);
    assert_eq!(code, 0, "{err}");
    let (code, out, _) = run(&["density", s(&m)]);
    assert_eq!(code, 0);
    let r = json(&out);
    let leaves_per_subtree = 1usize << (parties.parse::<usize>().unwrap() - 1);
    r["points"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|pt| (pt["n"].as_u64().unwrap() as usize).is_multiple_of(leaves_per_subtree))
        .map(|pt| pt["ratio"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn density_family_ratios() {
    let dir = TempDir::new().unwrap();
    let two = density_ratios(&dir, "2");
    assert_eq!(two.len(), 8);
    assert!(two.iter().all(|r| r == "3/2"), "{two:?}");
    let three = density_ratios(&dir, "3");
    assert_eq!(three.len(), 8);
    assert!(three.iter().all(|r| r == "7/4"), "{three:?}");
}

#[test]
fn constant_ray_family_density_decreases() {
    // The same two rays repeated with distinct weights on a second party
    // that stays identity, so e stays at 2 while N grows.
    let dir = TempDir::new().unwrap();
    let elements: Vec<String> = (1..=6)
        .map(|k| {
            let w = format!("1/{}", k + 1);
            let ray = if k % 2 == 0 { diag(&["1", "0"]) } else { diag(&["0", "1"]) };
            format!(r#"{{"factors":[{ray},{}]}}"#, diag(&[&w, &w]))
        })
        .collect();
    let text = format!(
        r#"{{"parties":2,"dims":[2,2],"mode":"exact","ordering":"given","elements":[{}]}}"#,
        elements.join(",")
    );
    let f = write(&dir, "c.json", &text);
    let (code, out, _) = run(&["density", s(&f), "--prefixes", "2,4,6"]);
    assert_eq!(code, 0);
    let r = json(&out);
    assert_eq!(r["ordering"], "given");
    let ratios: Vec<&str> = r["points"].as_array().unwrap().iter().map(|p| p["ratio"].as_str().unwrap()).collect();
    assert_eq!(ratios, ["1", "1/2", "1/3"]);
}

#[test]
fn bad_prefixes_are_errors() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "q.json", &qubit_file("1"));
    assert_eq!(run(&["density", s(&f), "--prefixes", "2,1"]).0, 1);
    assert_eq!(run(&["density", s(&f), "--prefixes", "3"]).0, 1);
}

#[test]
fn generated_exact_files_round_trip_byte_for_byte() {
    let cases: [&[&str]; 4] = [
        &["domino"],
        &["tight", "--parties", "3", "--n", "3"],
        &["tight-omit", "--parties", "2", "--n", "4", "--k", "3"],
        &["density", "--parties", "2", "--subtrees", "4"],
    ];
    for case in cases {
        let (code, first, err) = run(&[&["generate"], case].concat());
        assert_eq!(code, 0, "{err}");
        let (_, second, _) = run(&[&["generate"], case].concat());
        assert_eq!(first, second, "generation is deterministic");
        let parsed = parse_measurement_file(&first).unwrap();
        assert_eq!(render_measurement_file(&parsed), first, "{case:?}");
    }
}

#[test]
fn generator_parameters_are_validated() {
    assert_eq!(run(&["generate", "tight", "--parties", "1", "--n", "3"]).0, 1);
    assert_eq!(run(&["generate", "rotated-domino", "--angles", "0.1,0.2,0.3"]).0, 1);
    assert_eq!(run(&["generate", "rotated-domino", "--angles", "0.1,0.2,0.3,2.0"]).0, 1);
    assert_eq!(run(&["generate", "domino", "--tree-out", "/nonexistent/x"]).0, 1);
    let (code, out, _) = run(&["generate", "rotated-domino", "--angles", "0.3,0.5,0.7,0.9"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["mode"], "float");
}
