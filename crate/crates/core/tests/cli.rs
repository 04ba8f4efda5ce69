use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noveltyforge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn hashes(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.json" {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, hex::encode(Sha256::digest(std::fs::read(&p).unwrap())));
            }
        }
    }
    out
}

#[test]
fn validate_bundled_models() {
    for name in ["board-lite", "delivery"] {
        let o = run(&["validate", "--bundled", name]);
        assert_eq!(code(&o), 0, "{}", stdout(&o));
    }
}

#[test]
fn validate_files_and_type_cycles() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.tsal");
    std::fs::write(&good, noveltyforge::bundled::DELIVERY).unwrap();
    let problem = dir.path().join("p.tsal");
    std::fs::write(&problem, noveltyforge::bundled::DELIVERY_P1).unwrap();
    assert_eq!(code(&run(&["validate", s(&good), s(&problem)])), 0);
    assert_eq!(code(&run(&["validate", s(&good)])), 0);

    let cyclic = dir.path().join("cyclic.tsal");
    std::fs::write(&cyclic, "(define (domain c) (:types a - b b - a) (:predicates))").unwrap();
    let o = run(&["validate", s(&cyclic)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("TYPE_CYCLE"), "{}", stdout(&o));

    let broken = dir.path().join("broken.tsal");
    std::fs::write(&broken, "(define (domain c)").unwrap();
    let o = run(&["validate", s(&broken)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("SYNTAX_ERROR"));

    let mismatched = dir.path().join("wrong-problem.tsal");
    std::fs::write(&mismatched, noveltyforge::bundled::BOARD_LITE_P1).unwrap();
    let o = run(&["validate", s(&good), s(&mismatched)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("DOMAIN_MISMATCH"), "{}", stdout(&o));
}

#[test]
fn validate_missing_file_is_io_error() {
    let o = run(&["validate", "/definitely/not/here.tsal"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("IO_ERROR"));
}

#[test]
fn usage_errors_exit_as_config_errors() {
    assert_eq!(code(&run(&["generate"])), 3);
    assert_eq!(code(&run(&["frobnicate"])), 3);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn generate_defaults_give_a_hundred_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["generate", "--session", s(dir.path()), "--bundled", "board-lite"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_dir(dir.path().join("novelties")).unwrap().count(), 100);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn generate_same_seed_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), a.path(), b.path()] {
        let o = run(&["generate", "--session", s(dir), "--bundled", "board-lite", "--count", "1", "--seed", "7"]);
        assert_eq!(code(&o), 0);
    }
    let ha = hashes(a.path());
    assert_eq!(ha.keys().filter(|k| k.starts_with("novelties")).count(), 1);
    assert_eq!(ha, hashes(b.path()));
}

#[test]
fn generate_zero_weights_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "generate",
        "--session",
        s(dir.path()),
        "--bundled",
        "board-lite",
        "--weights",
        "disable-transition=0,perturb-numeric-constant=0",
    ]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("CONFIG_ERROR"));
}

#[test]
fn config_file_unknown_key_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"generator": {"batch_size": 3, "colour": "red"}}"#).unwrap();
    let session = dir.path().join("s");
    let o = run(&["generate", "--session", s(&session), "--bundled", "board-lite", "--config", s(&cfg)]);
    assert_eq!(code(&o), 3);

    std::fs::write(&cfg, r#"{"generator": {"batch_size": 3}}"#).unwrap();
    let o = run(&["generate", "--session", s(&session), "--bundled", "board-lite", "--config", s(&cfg)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_dir(session.join("novelties")).unwrap().count(), 3);
}

#[test]
fn generate_without_base_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["generate", "--session", s(dir.path())]);
    assert_eq!(code(&o), 3);
}

fn pass_go_session(dir: &Path) -> String {
    let o = run(&[
        "generate",
        "--session",
        s(dir),
        "--bundled",
        "board-lite",
        "--count",
        "40",
        "--seed",
        "11",
        "--weights",
        "perturb-numeric-constant=1",
    ]);
    assert_eq!(code(&o), 0);
    let batch: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("batch.json")).unwrap()).unwrap();
    let (d, _) = noveltyforge::bundled::board_lite();
    batch["records"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| {
            let t = r["transformations"][0]["target"].as_str().unwrap();
            t.starts_with("event/pass-go/") && noveltyforge::transform::constant_at(&d, t) == Some(200.0)
        })
        .expect("a pass-go reward perturbation")["id"]
        .as_str()
        .unwrap()
        .to_string()
}

#[test]
fn revise_sets_a_constant() {
    let dir = tempfile::tempdir().unwrap();
    let id = pass_go_session(dir.path());
    let o = run(&["revise", "--session", s(dir.path()), &id, "--set", "constant=500", "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["parent"], serde_json::json!(id));
    assert_eq!(r["diff"][0]["after"], "500");
    let new_id = r["id"].as_str().unwrap();
    let text = std::fs::read_to_string(dir.path().join(format!("novelties/{new_id}.tsal"))).unwrap();
    assert!(text.contains(" 500)"));
    assert!(dir.path().join(format!("novelties/{id}.tsal")).exists());
}

#[test]
fn revise_without_overrides_only_adds_lineage() {
    let dir = tempfile::tempdir().unwrap();
    let id = pass_go_session(dir.path());
    let o = run(&["revise", "--session", s(dir.path()), &id, "--format", "json"]);
    assert_eq!(code(&o), 0);
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let original = std::fs::read_to_string(dir.path().join(format!("novelties/{id}.tsal"))).unwrap();
    let copy = std::fs::read_to_string(dir.path().join(format!("novelties/{}.tsal", r["id"].as_str().unwrap()))).unwrap();
    assert_eq!(copy, original);
    assert_ne!(r["id"], serde_json::json!(id));
}

#[test]
fn revise_bad_key_lists_valid_keys() {
    let dir = tempfile::tempdir().unwrap();
    let id = pass_go_session(dir.path());
    let o = run(&["revise", "--session", s(dir.path()), &id, "--set", "colour=red"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("INVALID_OVERRIDE"));
    assert!(stderr(&o).contains("constant, 0.constant"), "{}", stderr(&o));
    let o = run(&["revise", "--session", s(dir.path()), "nope", "--set", "constant=1"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn report_empty_session() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["report", "--session", s(dir.path())]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("0 novelties"));
}

#[test]
fn filter_then_report_formats() {
    let dir = tempfile::tempdir().unwrap();
    let sess = s(dir.path());
    assert_eq!(code(&run(&["generate", "--session", sess, "--bundled", "board-lite", "--count", "3", "--seed", "5"])), 0);
    let o = run(&["filter", "--session", sess, "--all", "--episodes", "4", "--max-steps", "60"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 4);
    assert!(stdout(&o).starts_with("id"));
    assert_eq!(std::fs::read_dir(dir.path().join("reports")).unwrap().count(), 3);

    let table = stdout(&run(&["report", "--session", sess]));
    assert!(table.starts_with("3 novelties, 3 filtered"));
    assert_eq!(table.lines().count(), 2 + 1 + 3);

    let csv_text = stdout(&run(&["report", "--session", sess, "--format", "csv"]));
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(csv_text.as_bytes());
    assert_eq!(reader.records().map(Result::unwrap).count(), 3);

    let json: serde_json::Value = serde_json::from_str(&stdout(&run(&["report", "--session", sess, "--format", "json"]))).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
    assert_eq!(json["filtered"], 3);

    let o = run(&["filter", "--session", sess, "0000000000000000"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("unknown novelty id"));
}

#[test]
fn serve_on_a_busy_port_fails() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port().to_string();
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["serve", "--session", s(dir.path()), "--port", &port]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("IO_ERROR"));
}
