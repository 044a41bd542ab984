use std::fs;
use std::process::{Command, Output};

fn sgmcmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgmcmc")).args(args).output().unwrap()
}

fn error_line(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not JSON ({e}): {line}"))
}

#[test]
fn runs_from_config_file_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("dw.json");
    fs::write(&cfg, r#"{"experiment": "doublewell", "h": [0.1], "total_steps": 5000, "model": {"replicates": 1}}"#)
        .unwrap();
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = sgmcmc(&[
            "doublewell",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--seed",
            "7",
            "--set",
            "kinds=msgnht-split",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let status: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(status["status"], "ok");
        outputs
            .push((fs::read(out_dir.join("kl_vs_h.csv")).unwrap(), fs::read(out_dir.join("thermostat.csv")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let kl = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert_eq!(kl.lines().count(), 2);
    assert!(kl.lines().nth(1).unwrap().starts_with("msgnht-split,0.1,0,"));
}

#[test]
fn dry_run_prints_resolved_config() {
    let out = sgmcmc(&["order-check", "--dry-run", "--seed", "3", "--set", "model.dim=4"]);
    assert!(out.status.success());
    let cfg: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cfg["experiment"], "order-check");
    assert_eq!(cfg["seed"], 3);
    assert_eq!(cfg["model"]["dim"], 4);
}

#[test]
fn config_errors_exit_nonzero_with_json_line() {
    let out = sgmcmc(&["logreg", "--set", "burn_in=5000", "--dry-run"]);
    assert_eq!(out.status.code(), Some(1));
    let err = error_line(&out);
    assert_eq!(err["status"], "error");
    assert_eq!(err["kind"], "config");

    let out = sgmcmc(&["mlp", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_line(&out)["kind"], "config");
}

#[test]
fn usage_errors_exit_nonzero_with_json_line() {
    let out = sgmcmc(&["doublewell", "--seed", "minus-one"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["kind"], "usage");
    let out = sgmcmc(&["sample"]);
    assert_eq!(out.status.code(), Some(2));
}
