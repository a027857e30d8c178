use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::PathBuf;
use std::process::Command;

use cuebot::domain::Domain;
use cuebot::script::{parse_script, run_script};
use cuebot::server::{drive, Server};
use cuebot::store::kb_from_json;

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn domain(name: &str) -> Domain {
    Domain::load(&data(&format!("domains/{name}.toml"))).unwrap()
}

fn script(name: &str) -> String {
    std::fs::read_to_string(data(&format!("scripts/{name}.ndjson"))).unwrap()
}

fn last_json(text: &str) -> serde_json::Value {
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn every_shipped_script_runs_clean() {
    for (s, d) in [
        ("toast_teach", "kitchen"),
        ("milk_yes", "milk"),
        ("milk_no", "milk"),
        ("tea_teach", "tea"),
        ("tea_microwave", "tea"),
        ("assist_pour", "pour"),
    ] {
        let t = run_script(&script(s), &domain(d), 0, None).unwrap();
        assert_no_errors(s, &t.lines);
        t.session.check_invariants().unwrap();
    }
}

fn assert_no_errors(name: &str, lines: &[String]) {
    let errors: Vec<&String> = lines.iter().filter(|l| l.contains(r#""type":"error""#)).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}");
}

#[test]
fn transcripts_are_deterministic() {
    let d = domain("milk");
    let a = run_script(&script("milk_yes"), &d, 42, None).unwrap();
    let b = run_script(&script("milk_yes"), &d, 42, None).unwrap();
    assert_eq!(a.text(), b.text());
    let c = run_script(&script("milk_no"), &d, 42, None).unwrap();
    assert_ne!(last_json(&a.text())["digest"], last_json(&c.text())["digest"]);
}

#[test]
fn empty_script_gives_only_the_final_line() {
    let t = run_script("# nothing here\n\n", &domain("kitchen"), 5, None).unwrap();
    assert_eq!(t.lines.len(), 1);
    let f = last_json(&t.text());
    assert_eq!(f["type"], "final");
    assert_eq!(f["phase"], "idle");
    assert_eq!(f["seed"], 5);
    assert_eq!(f["messages"], 0);
    assert_eq!(f["digest"].as_str().unwrap().len(), 64);
}

#[test]
fn script_errors_name_the_line() {
    let e = parse_script("# c\n{\"type\":\"hello\"}\n").unwrap_err();
    assert_eq!(e.line, 2);
    let e = parse_script("{\"version\":1,\"type\":\"hello\"}\n\n{\"type\":\"jump\"}\n").unwrap_err();
    assert_eq!(e.line, 3);
    assert!(e.to_string().starts_with("line 3:"));
    assert_eq!(parse_script("{\"version\":1,\"type\":\"tick\"}").unwrap().len(), 1);
}

#[test]
fn kb_carries_over_between_runs() {
    let d = domain("tea");
    let first = run_script(&script("tea_teach"), &d, 0, None).unwrap();
    assert_eq!(first.session.kb().len(), 3);
    let second = run_script(&script("tea_microwave"), &d, 0, Some(first.session.kb().clone())).unwrap();
    let names: Vec<&str> = second.session.kb().names().map(|n| n.as_str()).collect();
    assert_eq!(names, ["cool with fridge", "heat with kettle", "heat with microwave", "steep tea"]);
    let t = run_script(&script("ice_tea"), &d, 0, Some(second.session.kb().clone())).unwrap();
    assert_no_errors("ice_tea", &t.lines);
    assert!(t.text().contains(r#""cause":"step","step":4"#));
}

/// The stream driver and the headless runner must agree line for line.
#[test]
fn driven_stream_matches_script_runner() {
    let d = domain("pour");
    let text = script("assist_pour");
    let expected = run_script(&text, &d, 1, None).unwrap();
    let mut out = Vec::new();
    let session = drive(cuebot::script::new_session(&d, 1, None), text.as_bytes(), &mut out).unwrap();
    let got = String::from_utf8(out).unwrap();
    let want: String = expected.lines[..expected.lines.len() - 1].iter().map(|l| format!("{l}\n")).collect();
    assert_eq!(got, want);
    assert_eq!(session.seq(), expected.session.seq());
}

#[test]
fn malformed_lines_get_errors_not_disconnects() {
    let d = domain("kitchen");
    let input = "{\"type\":\"hello\"}\nnot json\n{\"version\":1,\"type\":\"hello\"}\n{\"type\":\"warp\"}\n{\"type\":\"tick\"}\n";
    let mut out = Vec::new();
    drive(cuebot::script::new_session(&d, 0, None), input.as_bytes(), &mut out).unwrap();
    let lines: Vec<serde_json::Value> = String::from_utf8(out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let codes: Vec<&str> = lines.iter().filter_map(|v| v["code"].as_str()).collect();
    assert_eq!(codes, ["version_mismatch", "parse_error", "parse_error"]);
    assert_eq!(lines[0]["version"], 1);
    for (i, v) in lines.iter().enumerate() {
        assert_eq!(v["seq"], i as u64 + 1);
    }
    assert_eq!(lines.last().unwrap()["update"]["cause"], "tick");
}

#[test]
fn tcp_server_serves_sessions_in_turn() {
    let d = domain("milk");
    let text = script("milk_yes");
    let expected = run_script(&text, &d, 0, None).unwrap();
    let server = Server::bind("127.0.0.1:0", d, 0, None).unwrap();
    let addr = server.local_addr().unwrap();
    let handle = std::thread::spawn(move || server.run(Some(2)));
    for _ in 0..2 {
        let mut stream = TcpStream::connect(addr).unwrap();
        stream.write_all(text.as_bytes()).unwrap();
        stream.shutdown(std::net::Shutdown::Write).unwrap();
        let got: Vec<String> = BufReader::new(stream).lines().map(Result::unwrap).collect();
        // each connection starts from a fresh session
        assert_eq!(got, expected.lines[..expected.lines.len() - 1]);
    }
    handle.join().unwrap().unwrap();
}

#[test]
fn command_line_run_and_plan() {
    let exe = env!("CARGO_BIN_EXE_cuebot");
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.json");
    let eps = dir.path().join("episodes.txt");
    let out = Command::new(exe)
        .args(["run", "--seed", "9", "--script"])
        .arg(data("scripts/toast_teach.ndjson"))
        .arg("--domain")
        .arg(data("domains/kitchen.toml"))
        .arg("--kb-out")
        .arg(&kb)
        .arg("--episodes-out")
        .arg(&eps)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(last_json(&stdout)["seed"], 9);
    assert!(std::fs::read_to_string(&eps).unwrap().contains("press(human, toaster1)"));
    let d = domain("kitchen");
    assert_eq!(kb_from_json(&std::fs::read_to_string(&kb).unwrap(), d.tree.clone()).unwrap().len(), 1);

    let out = Command::new(exe)
        .args(["plan", "--goal", "make toast", "--domain"])
        .arg(data("domains/kitchen.toml"))
        .arg("--kb")
        .arg(&kb)
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["cost"], 1);
    assert_eq!(doc["steps"][0]["name"], "toast bread");

    let out = Command::new(exe)
        .args(["plan", "--goal", "fly to the moon", "--domain"])
        .arg(data("domains/kitchen.toml"))
        .arg("--kb")
        .arg(&kb)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown command"));
}
