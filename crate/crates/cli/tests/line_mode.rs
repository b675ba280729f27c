use std::io::Write;
use std::process::{Command, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_autotrain");

fn data(name: &str) -> String {
    format!("{}/../core/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn session_reads_config_from_env_and_flag_wins() {
    let mut child = Command::new(BIN)
        .args(["session"])
        .env("AUTOTRAIN_CONFIG", data("session.toml"))
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"hello\n\nzorblax\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let lines: Vec<serde_json::Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["case_id"], "greet");
    assert_eq!(lines[1]["kind"], "clarification");

    let status = Command::new(BIN)
        .args(["session", "--config", "/nonexistent/session.toml"])
        .env("AUTOTRAIN_CONFIG", data("session.toml"))
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .unwrap();
    assert!(!status.success());
}

#[test]
fn build_lexicon_and_lm_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let lex = dir.path().join("lex.txt");
    let ok = Command::new(BIN)
        .args(["build-lexicon", &data("lexicon.txt"), "--out"])
        .arg(&lex)
        .stderr(Stdio::null())
        .status()
        .unwrap();
    assert!(ok.success());
    let model = dir.path().join("model.json");
    let ok = Command::new(BIN)
        .args(["train-lm", "--order", "3", "--smoothing", "1", "--lexicon"])
        .arg(&lex)
        .arg("--out")
        .arg(&model)
        .arg(data("corpus.txt"))
        .stderr(Stdio::null())
        .status()
        .unwrap();
    assert!(ok.success());
    assert_eq!(std::fs::read_to_string(&model).unwrap(), std::fs::read_to_string(data("model.json")).unwrap());

    let pruned = dir.path().join("pruned.json");
    let ok = Command::new(BIN)
        .args(["prune-lm", "--threshold", "0.05", "--out"])
        .arg(&pruned)
        .arg(&model)
        .stderr(Stdio::null())
        .status()
        .unwrap();
    assert!(ok.success());
    let again = Command::new(BIN).args(["prune-lm", "--threshold", "0.05"]).arg(&pruned).stderr(Stdio::null()).output().unwrap();
    assert_eq!(again.stdout, std::fs::read(&pruned).unwrap());
}

#[test]
fn bad_lexicon_exits_nonzero_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let lex = dir.path().join("lex.txt");
    std::fs::write(&lex, "relax R IH L AE K S\nbroken QQ\n").unwrap();
    let out = Command::new(BIN).arg("build-lexicon").arg(&lex).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("QQ"));
}

#[test]
fn train_net_writes_a_network_file() {
    let out = Command::new(BIN)
        .args(["--seed", "3", "train-net", "--backend", "perceptron", &data("suite.json")])
        .stderr(Stdio::null())
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["kind"], "perceptron");
}

#[test]
fn gen_suite_reproduces_bundled_suite() {
    let out = Command::new(BIN).arg("gen-suite").stderr(Stdio::null()).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim_end(), std::fs::read_to_string(data("suite.json")).unwrap().trim_end());
}
