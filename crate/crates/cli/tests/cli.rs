use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use tdma_apx::{instance_from_json, instance_to_dot, instance_to_json, FormatError};
use tdma_apx_core::cnf::random_formula;
use tdma_apx_core::gadget::compile;
use tdma_apx_core::{Copies, FlowRequest, NcInstance, Network, NodeId};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdma-apx")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn compile_writes_instance_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let (json, dot) = (dir.path().join("eq8.json"), dir.path().join("eq8.dot"));
    let out = run(&[
        "compile",
        "--cnf",
        path_str(&fixture("eq8.cnf")),
        "--out",
        path_str(&json),
        "--dot",
        path_str(&dot),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("55 nodes"));

    let inst = instance_from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(inst.network.node_count(), 55);
    let dot = std::fs::read_to_string(&dot).unwrap();
    let mut lines: Vec<&str> = dot.lines().filter(|l| l.contains(" -- ")).collect();
    assert_eq!(lines.len(), inst.network.edge_count());
    lines.sort();
    lines.dedup();
    assert_eq!(lines.len(), inst.network.edge_count());
    assert!(dot.contains("\"K1\" [shape=octagon"));
    assert!(dot.contains("cap 5"));
}

#[test]
fn compile_missing_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["compile", "--cnf", "/nonexistent/x.cnf", "--out", path_str(&dir.path().join("x.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/x.cnf"));
}

#[test]
fn compile_rejects_bad_dimacs() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = dir.path().join("bad.cnf");
    std::fs::write(&cnf, "p cnf 2 1\n1 3 0\n").unwrap();
    let out = run(&["compile", "--cnf", path_str(&cnf), "--out", path_str(&dir.path().join("x.json"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_assignments() {
    let eq8 = fixture("eq8.json");
    let good = run(&["check", "--instance", path_str(&eq8), "--assignment", "1,2,3,-4,-5,-6"]);
    assert_eq!(good.status.code(), Some(0));
    assert!(stdout(&good).contains("verdict: feasible, 0 overloads"));

    let bad = run(&["check", "--instance", path_str(&eq8), "--assignment", "1 2 3 4 -5 -6"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("clause 3: no true literal"));

    let partial = run(&["check", "--instance", path_str(&eq8), "--assignment", "1,2,3"]);
    assert_eq!(partial.status.code(), Some(2));
}

#[test]
fn check_paths() {
    let eq8 = fixture("eq8.json");
    let canonical = "E1 P1.1 L1.1 L1.2 L1.3 Q1.3 X1 E2 P2.2 L2.2 Q2.2 X2 E3 P3.4 L3.4 Q3.4 X3 T";
    let ok = run(&["check", "--instance", path_str(&eq8), "--path", canonical]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));

    // Through the bypass of clause 1: the bypass already carries its preload.
    let bypass = "E1 B1 X1 E2 P2.2 L2.2 Q2.2 X2 E3 P3.4 L3.4 Q3.4 X3";
    let over = run(&["check", "--instance", path_str(&eq8), "--path", bypass]);
    assert_eq!(over.status.code(), Some(1));
    assert!(stdout(&over).contains("overloaded: B1(n_17^1) load 4 > 3"), "{}", stdout(&over));

    let unknown = run(&["check", "--instance", path_str(&eq8), "--path", "E1,Z9"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn solve_examples() {
    let single = run(&["solve", "--instance", path_str(&fixture("single_clause.json"))]);
    assert!(stdout(&single).contains("accepted: 2\noptimal: true"));
    let pair = run(&["solve", "--instance", path_str(&fixture("unsat_pair.json")), "--mode", "exact"]);
    assert!(stdout(&pair).contains("accepted: 2\noptimal: true"));

    let gap = path_str(&fixture("greedy_gap.json")).to_string();
    let exact = run(&["solve", "--instance", &gap, "--mode", "exact", "--json"]);
    let greedy = run(&["solve", "--instance", &gap, "--mode", "greedy", "--json"]);
    let exact: serde_json::Value = serde_json::from_slice(&exact.stdout).unwrap();
    let greedy: serde_json::Value = serde_json::from_slice(&greedy.stdout).unwrap();
    assert_eq!(exact["accepted"], 3);
    assert_eq!(greedy["accepted"], 2);
    assert_eq!(exact["optimal"], true);
}

#[test]
fn solve_with_tiny_budget_is_not_optimal() {
    let out = run(&["solve", "--instance", path_str(&fixture("eq8.json")), "--budget", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("optimal: false"));
    assert!(stdout(&out).contains("warning: node budget exhausted"));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let witnesses = dir.path().join("w");
    let w = path_str(&witnesses);

    let empty = run(&["verify", "--vars", "4", "--clauses", "3", "--k", "3", "--trials", "0", "--witness-dir", w]);
    assert_eq!(empty.status.code(), Some(0));
    assert!(stdout(&empty).contains("summary: 0/0 agree"));

    let ok = run(&["verify", "--vars", "3", "--clauses", "3", "--k", "2", "--trials", "10", "--seed", "4", "--witness-dir", w]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(!witnesses.exists());

    let broken = run(&[
        "verify", "--vars", "4", "--clauses", "3", "--k", "3", "--trials", "3", "--seed", "1", "--preset",
        "loose-bypass", "--witness-dir", w,
    ]);
    assert_eq!(broken.status.code(), Some(1));
    assert!(stdout(&broken).contains("bypass-blocked"));
    let witness = witnesses.join("trial-0000.json");
    let inst = instance_from_json(&std::fs::read_to_string(&witness).unwrap()).unwrap();
    assert_eq!(inst.network.capacity(inst.resolve("B1").unwrap()), 5);
    assert!(witnesses.join("trial-0000.cnf").exists());

    for bad in [
        &["verify", "--vars", "4", "--clauses", "3", "--k", "1", "--trials", "2"][..],
        &["verify", "--vars", "2", "--clauses", "3", "--k", "3", "--trials", "2"],
        &["verify", "--vars", "40", "--clauses", "3", "--k", "3", "--trials", "2"],
        &["verify", "--vars", "4", "--clauses", "3"],
    ] {
        assert_eq!(run(bad).status.code(), Some(2), "{bad:?}");
    }
}

#[test]
fn verify_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "verify", "--vars", "2", "--clauses", "4", "--k", "2", "--trials", "6", "--seed", "5", "--json",
        "--witness-dir", path_str(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["records"].as_array().unwrap().len(), 6);
    assert_eq!(v["summary"]["agree"], 6);
    for r in v["records"].as_array().unwrap() {
        let expected = if r["satisfiable"] == true { 5 } else { 4 };
        assert_eq!(r["optimum"], expected);
    }
}

#[test]
fn bound_output() {
    assert_eq!(stdout(&run(&["bound", "--k", "3"])), "8/7 ≈ 1.142857\n");
    assert!(stdout(&run(&["bound", "--k", "2"])).starts_with("4/3 "));
    assert_eq!(run(&["bound", "--k", "1"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["check", "--instance", "x.json"]).status.code(), Some(2));
}

fn edit_json(f: impl FnOnce(&mut serde_json::Value)) -> Result<NcInstance, FormatError> {
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("greedy_gap.json")).unwrap()).unwrap();
    f(&mut v);
    instance_from_json(&v.to_string())
}

#[test]
fn malformed_instance_files() {
    assert!(edit_json(|_| {}).is_ok());
    assert!(matches!(edit_json(|v| v["schema_version"] = 2.into()), Err(FormatError::Version(2))));
    assert!(matches!(edit_json(|v| v["flows"][0]["copies"] = 0.into()), Err(FormatError::Copies { .. })));
    assert!(matches!(edit_json(|v| v["flows"][0]["copies"] = "many".into()), Err(FormatError::Copies { .. })));
    assert!(matches!(edit_json(|v| v["nodes"][0]["subset"] = "V9".into()), Err(FormatError::Subset { .. })));
    assert!(edit_json(|v| v["edges"][0][1] = "nowhere".into()).is_err());
    assert!(matches!(
        edit_json(|v| v["formula"] = "p cnf 1 1\n1 0\n".into()),
        Err(FormatError::Role(_))
    ));
    assert!(edit_json(|v| v["flows"][0]["copies"] = "unbounded".into()).unwrap().flows[0].copies == Copies::Unbounded);
}

fn generic_instance(n: usize, edges: &[bool], caps: &[u32], demands: &[(usize, usize, u32)]) -> NcInstance {
    let mut net = Network::new();
    for (i, &c) in caps.iter().enumerate().take(n) {
        net.add_node(&format!("n{i}"), c).unwrap();
    }
    let mut k = 0;
    for a in 0..n {
        for b in a + 1..n {
            if edges[k] {
                net.add_edge(NodeId(a as u32), NodeId(b as u32)).unwrap();
            }
            k += 1;
        }
    }
    let flows = demands
        .iter()
        .filter(|(s, t, _)| s % n != t % n)
        .enumerate()
        .map(|(i, &(s, t, c))| {
            let copies = if c == 0 { Copies::Unbounded } else { Copies::Finite(c) };
            FlowRequest::new(&net, NodeId((s % n) as u32), NodeId((t % n) as u32), copies, &format!("d{i}")).unwrap()
        })
        .collect();
    NcInstance::generic(net, flows)
}

proptest! {
    #[test]
    fn compiled_instances_round_trip(n in 2u32..6, m in 1usize..5, k in 2u32..4, seed in any::<u64>()) {
        let f = random_formula(n, m, k.min(n), seed).unwrap();
        let inst = compile(&f).unwrap();
        let text = instance_to_json(&inst);
        let back = instance_from_json(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(back.layout(), inst.layout());
        prop_assert_eq!(instance_to_json(&back), text);
        prop_assert_eq!(instance_to_dot(&back), instance_to_dot(&inst));
    }

    #[test]
    fn generic_instances_round_trip(
        n in 2usize..8,
        edges in prop::collection::vec(any::<bool>(), 28),
        caps in prop::collection::vec(0u32..10, 8),
        demands in prop::collection::vec((0usize..8, 0usize..8, 0u32..4), 0..4),
    ) {
        let inst = generic_instance(n, &edges, &caps, &demands);
        let text = instance_to_json(&inst);
        let back = instance_from_json(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(instance_to_json(&back), text);
    }
}
