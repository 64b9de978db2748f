mod common;

use std::path::Path;
use std::process::Command;

use serde_json::json;

use cbench::cli::run;
use common::*;

fn cli(args: &[&str]) -> String {
    let mut out = Vec::new();
    let mut full = vec!["cbench"];
    full.extend_from_slice(args);
    if let Err(e) = run(full, &mut out) {
        panic!("cbench {args:?}: {e}");
    }
    String::from_utf8(out).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[tokio::test(flavor = "multi_thread")]
async fn cli_and_http_produce_the_same_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let model = dir.path().join("m.json");
    let policy = dir.path().join("policy.csv");
    let bundle = dir.path().join("dash.tar");
    std::fs::write(&data, decision_data()).unwrap();

    let d = p(&data).to_string();
    let m = p(&model).to_string();
    let stdout = cli(&["learn", "--data", &d, "--algorithm", "tabu", "--score", "bde", "--iss", "5", "--out", &m]);
    assert!(stdout.contains("score:"));
    cli(&["fit", "--data", &d, "--model", &m]);
    let cli_query = cli(&["query", "--model", &m, "--event", "U", "--evidence", "X=hi"]);
    cli(&[
        "policy", "--model", &m, "--utility", "U", "--payoff", "good=1", "--payoff", "bad=-1", "--decision", "D",
        "--out", p(&policy),
    ]);
    cli(&["publish", "--model", &m, "--out", p(&bundle)]);

    let srv = Server::new();
    let app = &srv.app;
    let s = new_session(app).await;
    let base = format!("/api/v1/sessions/{s}");
    post_csv(app, &format!("{base}/dataset"), &decision_data()).await.ok();
    let job = learn(
        app,
        &s,
        json!({ "search": { "algorithm": "tabu", "score": { "kind": "bde", "iss": 5 } } }),
    )
    .await;
    assert_eq!(job["status"], "succeeded");
    post(app, &format!("{base}/fit"), json!({})).await.ok();
    let http_query = post(app, &format!("{base}/query"), json!({ "event": "U", "evidence": { "X": "hi" } }))
        .await
        .ok()
        .json();
    post(
        app,
        &format!("{base}/decision"),
        json!({ "utility": "U", "payoffs": { "good": 1, "bad": -1 }, "decisions": ["D"] }),
    )
    .await
    .ok();
    post(app, &format!("{base}/decision/policy"), json!({})).await.ok();

    let http_model = get(app, &format!("{base}/export/model")).await.ok().bytes;
    assert_eq!(std::fs::read(&model).unwrap(), http_model);
    let cli_query: serde_json::Value = serde_json::from_str(&cli_query).unwrap();
    assert_eq!(cli_query, http_query);
    let http_policy = get(app, &format!("{base}/export/policy")).await.ok().bytes;
    assert_eq!(std::fs::read(&policy).unwrap(), http_policy);
    let http_bundle = post(app, &format!("{base}/publish"), json!({})).await.ok().bytes;
    assert_eq!(std::fs::read(&bundle).unwrap(), http_bundle);
}

#[test]
fn bootstrap_learn_prints_strengths_and_rethresholds() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let model = dir.path().join("m.json");
    std::fs::write(&data, five_column(300)).unwrap();
    let out = cli(&[
        "learn", "--data", p(&data), "--bootstrap", "12", "--workers", "2", "--seed", "5", "--out", p(&model),
    ]);
    assert!(out.starts_with("arc strengths (12 iterations):\nfrom,to,strength,direction\n"), "{out}");
    assert!(out.contains("averaged network:\nfrom,to\n"));

    let again = cli(&["learn", "--data", p(&data), "--bootstrap", "12", "--workers", "1", "--seed", "5"]);
    assert_eq!(out, again);

    let empty = cli(&["threshold", "--model", p(&model), "--edge-threshold", "1"]);
    let all = cli(&["threshold", "--model", p(&model), "--edge-threshold", "0"]);
    assert!(empty.lines().count() <= all.lines().count());
}

#[test]
fn config_file_sets_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let cfg = dir.path().join("c.toml");
    std::fs::write(&data, two_column(1).replace(',', ";")).unwrap();
    std::fs::write(&cfg, "[csv]\ndelimiter = \"semicolon\"\n[learn]\nscore = { kind = \"loglik\" }\n").unwrap();
    let ll = cli(&["--config", p(&cfg), "learn", "--data", p(&data)]);
    let bic = cli(&["--config", p(&cfg), "learn", "--data", p(&data), "--score", "bic"]);
    let score = |s: &str| s.lines().last().unwrap().trim_start_matches("score: ").parse::<f64>().unwrap();
    // same graph, and the BIC penalty of its 3 free parameters
    assert!((score(&ll) - score(&bic) - 1.5 * (100f64).ln()).abs() < 1e-9, "{ll}\n{bic}");
}

#[test]
fn discretize_and_assoc_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let out = dir.path().join("disc.csv");
    let mut csv = String::from("g,x\n");
    for i in 0..60 {
        csv.push_str(&format!("{},{}\n", ["p", "q"][i % 2], i));
    }
    std::fs::write(&data, csv).unwrap();
    cli(&["discretize", "--data", p(&data), "--method", "quantile", "--bins", "3", "--out", p(&out)]);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 61);
    let assoc = cli(&["assoc", "--data", p(&out), "--measure", "tschuprow_t", "--linkage", "average"]);
    let v: serde_json::Value = serde_json::from_str(&assoc).unwrap();
    assert_eq!(v["network"]["measure"], "tschuprow_t");
}

#[test]
fn binary_rejects_unknown_flags() {
    let bin = env!("CARGO_BIN_EXE_cbench");
    let out = Command::new(bin).args(["learn", "--frobnicate"]).output().unwrap();
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("frobnicate"));

    let out = Command::new(bin).arg("--help").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("serve"));

    let out = Command::new(bin)
        .args(["query", "--model", "/nonexistent/m.json", "--event", "A"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
