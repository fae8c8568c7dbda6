//! End-to-end tests of the binary: exit codes, output contracts, and the
//! realize/verify round trip, all through manifest files on disk.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SEVEN_MANIFOLD: &str = r#"{
    "pieces": [{"id": "P", "genus": 2, "slopes": [[1, 3], [1, 4], [1, 5]]}],
    "tori": []
}"#;

const SEVEN_LINK: &str = r#"{
    "knots": [
        {"id": "k1", "piece": "P", "index": 0, "kind": "singular", "slope": [1, 3]},
        {"id": "k2", "piece": "P", "index": 0, "kind": "singular", "slope": [1, 4]},
        {"id": "k3", "piece": "P", "index": 2, "kind": "singular", "slope": [1, 5]},
        {"id": "k4", "piece": "P", "index": 2, "kind": "regular"},
        {"id": "s1", "piece": "P", "index": 1, "kind": "regular"},
        {"id": "s2", "piece": "P", "index": 1, "kind": "regular"},
        {"id": "s3", "piece": "P", "index": 1, "kind": "regular"},
        {"id": "s4", "piece": "P", "index": 1, "kind": "regular"},
        {"id": "s5", "piece": "P", "index": 1, "kind": "regular"},
        {"id": "s6", "piece": "P", "index": 1, "kind": "regular"}
    ]
}"#;

const MINIMAL_MANIFOLD: &str = r#"{
    "pieces": [{"id": "P", "genus": 2, "slopes": [[1, 3]]}],
    "tori": []
}"#;

fn nmslink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmslink"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

struct Workspace {
    _dir: TempDir,
    root: PathBuf,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().expect("temp dir");
        let root = dir.path().to_path_buf();
        Workspace { _dir: dir, root }
    }

    fn file(&self, name: &str, content: &str) -> String {
        let path = self.root.join(name);
        fs::write(&path, content).expect("write fixture");
        path.to_string_lossy().into_owned()
    }

    fn path(&self, name: &str) -> String {
        self.root.join(name).to_string_lossy().into_owned()
    }
}

#[test]
fn validate_accepts_the_worked_example() {
    let ws = Workspace::new();
    let m = ws.file("w.json", SEVEN_MANIFOLD);
    let l = ws.file("l.json", SEVEN_LINK);
    let out = nmslink(&["validate", &m, &l]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("accepted"));
}

#[test]
fn validate_reports_the_count_identity() {
    let ws = Workspace::new();
    let m = ws.file("w.json", SEVEN_MANIFOLD);
    // Drop the regular index-2 record: z=3 against x=6.
    let short = SEVEN_LINK.replace(
        "        {\"id\": \"k4\", \"piece\": \"P\", \"index\": 2, \"kind\": \"regular\"},\n",
        "",
    );
    assert_ne!(short, SEVEN_LINK);
    let l = ws.file("l.json", &short);
    let out = nmslink(&["validate", &m, &l]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.contains("condition (3) violated: 3+0 != 6-4+2"), "{text}");
    assert!(text.contains("rejected"));
}

#[test]
fn realize_verify_round_trip() {
    let ws = Workspace::new();
    let m = ws.file("w.json", SEVEN_MANIFOLD);
    let l = ws.file("l.json", SEVEN_LINK);
    let cert = ws.path("cert.json");
    let dot = ws.path("graph.dot");
    let out = nmslink(&["realize", &m, &l, "--out", &cert, "--dot", &dot]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(Path::new(&cert).exists());
    let dot_text = fs::read_to_string(&dot).expect("dot file");
    assert!(dot_text.starts_with("digraph lyapunov {"));

    let out = nmslink(&["verify", &m, &l, &cert]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("verified"));
}

#[test]
fn tampered_certificate_is_rejected() {
    let ws = Workspace::new();
    let m = ws.file("w.json", SEVEN_MANIFOLD);
    let l = ws.file("l.json", SEVEN_LINK);
    let cert = ws.path("cert.json");
    let out = nmslink(&["realize", &m, &l, "--out", &cert]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    // Edit one singular slope inside a stored block shape.
    let mut value: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&cert).expect("cert")).expect("json");
    let blocks = value["pieces"][0]["blocks"].as_array_mut().expect("blocks");
    let mut edited = false;
    for block in blocks {
        let shape = &mut block["shape"];
        if shape["type"] == "one_sing" && shape["slope"] != serde_json::json!([0, 1]) {
            shape["slope"] = serde_json::json!([2, 7]);
            edited = true;
            break;
        }
    }
    assert!(edited, "no singular one-orbit block found to tamper with");
    fs::write(&cert, serde_json::to_string_pretty(&value).expect("json")).expect("write");

    let out = nmslink(&["verify", &m, &l, &cert]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.contains("slope multiset mismatch"), "{text}");
}

#[test]
fn histories_check_end_to_end() {
    let ws = Workspace::new();
    let m = ws.file("w.json", SEVEN_MANIFOLD);
    let good = SEVEN_LINK.replacen(
        "    ]\n}",
        "    ],\n    \"history\": [\n        {\"op\": \"VI\", \"knot\": \"k1\", \"class\": [3, 2], \"core_index\": 0, \"cable_index\": 2}\n    ]\n}",
        1,
    );
    assert_ne!(good, SEVEN_LINK);
    let l = ws.file("good.json", &good);
    let out = nmslink(&["check-history", &m, &l]);
    assert_eq!(code(&out), 0, "{} {}", stdout(&out), stderr(&out));
    assert!(stdout(&out).contains("realizable: 10 base records, 1 steps, 12 final knots"));

    let bad = good.replace("\"knot\": \"k1\"", "\"knot\": \"nope\"");
    let l = ws.file("bad.json", &bad);
    let out = nmslink(&["check-history", &m, &l]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.contains("HistoryStepInvalid"), "{text}");
    assert!(text.contains("rejected"));
}

#[test]
fn torus_sets_emit_valid_json() {
    let ws = Workspace::new();
    let m = ws.file("w.json", SEVEN_MANIFOLD);
    let l = ws.file("l.json", SEVEN_LINK);
    let out = nmslink(&["torus-sets", &m, &l, "--limit", "100"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("json");
    let sets = value["sets"].as_array().expect("sets");
    assert!(sets.len() >= 2, "expected at least two torus sets, got {}", sets.len());
    assert!(value["truncated"].is_boolean());
}

#[test]
fn enumerate_streams_link_lines() {
    let ws = Workspace::new();
    let m = ws.file("w.json", MINIMAL_MANIFOLD);
    let out = nmslink(&["enumerate", &m, "--max-saddles", "4"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    for line in lines {
        let value: serde_json::Value = serde_json::from_str(line).expect("line json");
        assert_eq!(value["knots"].as_array().expect("knots").len(), 6);
    }
}

#[test]
fn export_dot_is_byte_stable() {
    let ws = Workspace::new();
    let m = ws.file("w.json", SEVEN_MANIFOLD);
    let l = ws.file("l.json", SEVEN_LINK);
    let cert = ws.path("cert.json");
    nmslink(&["realize", &m, &l, "--out", &cert]);
    let first = nmslink(&["export-dot", &cert]);
    let second = nmslink(&["export-dot", &cert]);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    assert!(stdout(&first).contains("\"P.v1\""));
}

#[test]
fn malformed_input_exits_two() {
    let ws = Workspace::new();
    let m = ws.file("w.json", "{\"pieces\": [");
    let l = ws.file("l.json", SEVEN_LINK);
    let out = nmslink(&["validate", &m, &l]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("malformed JSON"));

    let out = nmslink(&["validate", &ws.path("missing.json"), &l]);
    assert_eq!(code(&out), 2);
}

#[test]
fn jobs_flag_is_accepted() {
    let ws = Workspace::new();
    let m = ws.file("w.json", SEVEN_MANIFOLD);
    let l = ws.file("l.json", SEVEN_LINK);
    let out = nmslink(&["validate", "--jobs", "4", &m, &l]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}
