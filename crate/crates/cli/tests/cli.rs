use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kondratiev-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn kondratiev(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_kondratiev")).args(args).output().unwrap()
}

#[test]
fn construct_writes_boundaries_and_overlay() {
    let dir = scratch("construct");
    let out = kondratiev(&["construct", "--n-list", "1,2,4", "--output", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["domain_n1.txt", "domain_n4.txt", "domains.svg"] {
        assert!(dir.join(name).exists(), "{name}");
    }
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sweep_writes_artifacts_and_reports_success() {
    let dir = scratch("sweep");
    let config = dir.join("config.json");
    fs::write(&config, r#"{"polygon": "square", "n_list": [1, 2], "a_list": [0.0, 0.3], "h_max": 0.15, "beta": 1.0, "source": "sine"}"#).unwrap();
    let out = kondratiev(&["sweep", "--config", config.to_str().unwrap(), "--output", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    for name in ["metadata.json", "ratio.svg", "lambda_min.svg", "domains.svg"] {
        assert!(dir.join(name).exists(), "{name}");
    }
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn failing_rows_give_nonzero_exit() {
    let dir = scratch("fail");
    let config = dir.join("config.json");
    fs::write(&config, r#"{"polygon": "square", "n_list": [1], "a_list": [0.0], "h_max": 0.2, "beta": 1.0, "order": 1, "eigen": false}"#).unwrap();
    let out = kondratiev(&["sweep", "--config", config.to_str().unwrap(), "--output", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(fs::read_to_string(dir.join("results.csv")).unwrap().contains("norms:"));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn invalid_config_is_rejected() {
    let out = kondratiev(&["sweep", "--n-list", "4,2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("strictly increasing"));
}
