use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_multibot");

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/assets")
}

fn multibot(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn run(dir: &Path, script: &str, out: &str, extra: &[&str]) -> Output {
    let a = assets();
    let script_path = dir.join("script.jsonl");
    fs::write(&script_path, script).unwrap();
    let mut args = vec![
        "run".to_string(),
        "--map".into(),
        a.join("demo_map.json").display().to_string(),
        "--corpus".into(),
        a.join("demo_corpus.jsonl").display().to_string(),
        "--config".into(),
        a.join("demo_config.json").display().to_string(),
        "--script".into(),
        script_path.display().to_string(),
        "--seed".into(),
        "42".into(),
        "--out".into(),
        dir.join(out).display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    Command::new(BIN).args(&args).output().unwrap()
}

fn without_wall_time(log: &str) -> Vec<Value> {
    log.lines()
        .map(|l| {
            let mut v: Value = serde_json::from_str(l).unwrap();
            v.as_object_mut().unwrap().remove("wall_time");
            v
        })
        .collect()
}

const GOTO: &str = "{\"t\":0,\"say\":\"Husky, go to the gate\"}\n";

#[test]
fn run_is_deterministic_and_metrics_agree() {
    let dir = tempfile::tempdir().unwrap();
    let first = run(dir.path(), GOTO, "a.jsonl", &[]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(run(dir.path(), GOTO, "b.jsonl", &[]).status.success());
    let a = fs::read_to_string(dir.path().join("a.jsonl")).unwrap();
    let b = fs::read_to_string(dir.path().join("b.jsonl")).unwrap();
    assert_eq!(without_wall_time(&a), without_wall_time(&b));

    let printed: Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(printed["completed"], 1);
    let log = dir.path().join("a.jsonl");
    let m = multibot(&["metrics", log.to_str().unwrap()]);
    assert!(m.status.success());
    assert_eq!(serde_json::from_slice::<Value>(&m.stdout).unwrap(), printed);
}

#[test]
fn replay_prints_turns_and_leaves_log_untouched() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), GOTO, "l.jsonl", &[]).status.success());
    let log = dir.path().join("l.jsonl");
    let before = fs::read(&log).unwrap();
    let out = multibot(&["replay", log.to_str().unwrap()]);
    assert!(out.status.success());
    let frames: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let chat: Vec<&str> = frames
        .iter()
        .filter(|f| f["type"] == "chat")
        .map(|f| f["payload"]["speaker"].as_str().unwrap())
        .collect();
    assert_eq!(chat, ["operator", "dm", "robot:husky"]);
    assert!(frames.iter().any(|f| f["type"] == "state"));
    assert_eq!(fs::read(&log).unwrap(), before);
}

#[test]
fn wizard_replay_takes_dm_turns_from_script() {
    let dir = tempfile::tempdir().unwrap();
    let script = concat!(
        "{\"t\":0,\"say\":\"get the drone over to the tower\"}\n",
        "{\"t\":1,\"wizard\":{\"reply\":\"Snapdragon is on it.\",\"tbs\":{\"robot\":\"snapdragon\",\"action\":\"GOTO\",\"loc\":{\"kind\":\"waypoint\",\"name\":\"tower\"}}}}\n",
    );
    let out = run(dir.path(), script, "w.jsonl", &["--dm", "wizard-replay"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(m["tasks"][0]["source"], "wizard");
    assert_eq!(m["completed"], 1);

    // The same script is refused without the wizard.
    assert!(!run(dir.path(), script, "x.jsonl", &[]).status.success());
}

#[test]
fn gen_corpus_reproduces_bundled_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.jsonl");
    let map = assets().join("demo_map.json");
    let res = multibot(&["gen-corpus", "--map", map.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    assert_eq!(
        fs::read_to_string(out).unwrap(),
        fs::read_to_string(assets().join("demo_corpus.jsonl")).unwrap()
    );
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "{\"t\":0}\n", "l.jsonl", &[]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("exactly one"));

    let garbage = dir.path().join("garbage.jsonl");
    fs::write(&garbage, "not a log\n").unwrap();
    let out = multibot(&["metrics", garbage.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn serve_answers_health_checks() {
    let a = assets();
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("live.jsonl");
    let mut child = Command::new(BIN)
        .args(["serve", "--port", "0", "--map"])
        .arg(a.join("demo_map.json"))
        .arg("--corpus")
        .arg(a.join("demo_corpus.jsonl"))
        .arg("--config")
        .arg(a.join("demo_config.json"))
        .arg("--log")
        .arg(&log)
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ws://").unwrap().strip_suffix("/ws").unwrap().to_string();

    let mut stream = TcpStream::connect(&addr).unwrap();
    write!(stream, "GET /health HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.ends_with("ok"));
    let header = fs::read_to_string(&log).unwrap();
    assert!(header.lines().next().unwrap().contains("\"config\""));
}
