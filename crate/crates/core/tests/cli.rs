use std::process::{Command, Output};

use qzkp_lab::format::to_json_pretty;
use qzkp_lab::harness::{ExperimentReport, Verdict};

fn qzkp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qzkp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(text.lines().count(), 1, "diagnostic must be one line: {text:?}");
    text.trim_end().to_string()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn keygen_is_deterministic_and_valid() {
    let a = stdout(&qzkp(&["keygen", "--p", "7", "--g", "3", "--seed", "1"]));
    let b = stdout(&qzkp(&["keygen", "--p", "7", "--g", "3", "--seed", "1"]));
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    let x = v["x_secret"].as_u64().unwrap();
    let y = v["y"].as_u64().unwrap();
    assert_eq!(qzkp_lab::groupmath::mod_pow(3, x, 7).unwrap(), y);
    assert_eq!(v["params"]["q"], 6);
}

#[test]
fn keygen_diagnostics() {
    let out = qzkp(&["keygen", "--p", "8", "--g", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).starts_with("error[parameter]: not prime"));

    let out = qzkp(&["keygen", "--p", "7", "--g", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).starts_with("error[parameter]: not a generator"));
}

#[test]
fn keygen_searches_when_params_absent() {
    let text = stdout(&qzkp(&["keygen", "--min-p", "100", "--format", "csv"]));
    let rows = csv_rows(&text);
    assert_eq!(rows[0], ["p", "g", "q", "x_secret", "y"]);
    assert_eq!(&rows[1][..3], ["101", "2", "100"]);
}

#[test]
fn run_corrected_accepts() {
    let text = stdout(&qzkp(&[
        "run", "--p", "7", "--g", "3", "--x", "2", "--mode", "corrected", "--seed", "42",
    ]));
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let kinds: Vec<&str> = lines.iter().map(|l| l["type"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["commit", "challenge", "response", "decision", "record"]);
    assert_eq!(lines[3]["accepted"], true);
    assert_eq!(lines[4]["accepted"], true);
    assert_eq!(lines[0]["amps"].as_array().unwrap().len(), 4);
}

#[test]
fn run_literal_outcome_varies_with_seed() {
    let outcomes: Vec<bool> = (0..40)
        .map(|seed| {
            let text = stdout(&qzkp(&[
                "run", "--p", "7", "--g", "3", "--x", "2", "--mode", "literal", "--seed",
                &seed.to_string(),
            ]));
            text.contains(r#""accepted":true"#)
        })
        .collect();
    assert!(outcomes.iter().any(|&a| a));
    assert!(outcomes.iter().any(|&a| !a));
}

#[test]
fn run_rejects_out_of_range_secret() {
    let out = qzkp(&["run", "--p", "7", "--g", "3", "--x", "9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).starts_with("error[parameter]:"));
}

#[test]
fn experiment_with_and_without_eve() {
    let base = ["experiment", "--p", "7", "--g", "3", "--x", "2", "--mode", "corrected", "--rounds", "10000", "--seed", "7"];
    let clean: ExperimentReport = serde_json::from_str(&stdout(&qzkp(&base))).unwrap();
    assert_eq!(clean.rate, 1.0);
    assert_eq!(clean.verdict, Verdict::IdentityAccepted);
    assert!(clean.adversary.is_none());

    let mut with_eve = base.to_vec();
    with_eve.push("--eve");
    let text = stdout(&qzkp(&with_eve));
    let attacked: ExperimentReport = serde_json::from_str(&text).unwrap();
    assert!(attacked.rate < 1.0);
    assert_eq!(attacked.verdict, Verdict::IdentityRejected);
    assert_eq!(attacked.adversary.as_ref().unwrap().measured_bits.len(), 10_000);
    assert_eq!(text, stdout(&qzkp(&with_eve)));
}

#[test]
fn experiment_json_round_trips() {
    let text = stdout(&qzkp(&[
        "experiment", "--p", "11", "--mode", "literal", "--rounds", "300", "--sigma", "0.3", "--flip-prob", "0.02",
        "--eve", "--per-round", "--seed", "99",
    ]));
    let report: ExperimentReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.per_round.as_ref().unwrap().len(), 300);
    let again = to_json_pretty(&report).unwrap() + "\n";
    assert_eq!(again, text);
    let reparsed: ExperimentReport = serde_json::from_str(&again).unwrap();
    assert_eq!(reparsed, report);

    let keys: Vec<String> = serde_json::from_str::<serde_json::Value>(&text)
        .unwrap()
        .as_object()
        .unwrap()
        .keys()
        .cloned()
        .collect();
    for key in &keys {
        assert!(
            [
                "config",
                "accepted_count",
                "rounds",
                "rate",
                "ci_low",
                "ci_high",
                "oracle_expectation",
                "verdict",
                "adversary",
                "per_round"
            ]
            .contains(&key.as_str()),
            "{key}"
        );
    }
}

#[test]
fn experiment_csv_has_rows_and_summary() {
    let text = stdout(&qzkp(&[
        "experiment", "--p", "7", "--x", "2", "--rounds", "25", "--format", "csv", "--seed", "3",
    ]));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1 + 25 + 2);
    assert_eq!(rows[0][0], "round");
    assert_eq!(rows[26][0], "summary");
    assert_eq!(rows[27][1], "25");
    assert_eq!(rows[27][7], "identity_accepted");
}

#[test]
fn experiment_writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let args = ["experiment", "--p", "7", "--rounds", "50", "--seed", "1"];
    let printed = stdout(&qzkp(&args));
    let mut with_out = args.to_vec();
    let path_str = path.to_str().unwrap();
    with_out.extend(["--out", path_str]);
    assert!(stdout(&qzkp(&with_out)).is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), printed);
}

#[test]
fn experiment_reads_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lab.conf");
    std::fs::write(&path, "# lab settings\np = 7\ng = 3\nx = 2\nrounds = 200\neve = true\nseed = 5\n").unwrap();
    let from_file = stdout(&qzkp(&["experiment", "--config", path.to_str().unwrap()]));
    let from_flags = stdout(&qzkp(&[
        "experiment", "--p", "7", "--g", "3", "--x", "2", "--rounds", "200", "--eve", "--seed", "5",
    ]));
    assert_eq!(from_file, from_flags);

    let overridden = stdout(&qzkp(&["experiment", "--config", path.to_str().unwrap(), "--rounds", "100"]));
    let report: ExperimentReport = serde_json::from_str(&overridden).unwrap();
    assert_eq!(report.rounds, 100);
}

#[test]
fn sweep_sigma_oracle_column() {
    let text = stdout(&qzkp(&[
        "sweep", "--var", "sigma", "--values", "0,0.2,0.5,1.0", "--p", "7", "--x", "2", "--rounds", "500",
    ]));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 5);
    let oracle_col = rows[0].iter().position(|h| h == "oracle_expectation").unwrap();
    for (row, sigma) in rows[1..].iter().zip([0.0f64, 0.2, 0.5, 1.0]) {
        assert_eq!(row[2], "corrected");
        let oracle: f64 = row[oracle_col].parse().unwrap();
        assert!((oracle - (0.5 + 0.5 * (-sigma * sigma / 2.0).exp())).abs() <= 1e-12);
    }
}

#[test]
fn sweep_p_oracle_is_one() {
    let text = stdout(&qzkp(&["sweep", "--var", "p", "--values", "5,7,11,13", "--x", "1", "--rounds", "200"]));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 5);
    for row in &rows[1..] {
        assert_eq!(row[9].parse::<f64>().unwrap(), 1.0);
    }
}

#[test]
fn sweep_empty_values_is_usage_error() {
    let out = qzkp(&["sweep", "--var", "sigma", "--values", ""]);
    assert_eq!(out.status.code(), Some(2));
    stderr_line(&out);
    let out = qzkp(&["sweep", "--var", "sigma"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_tables() {
    let text = stdout(&qzkp(&["oracle", "--p", "7", "--g", "3", "--x", "2", "--mode", "corrected"]));
    assert!(text.contains("# deterministic_fraction=1.0000000000000000e0"));

    let text = stdout(&qzkp(&["oracle", "--p", "7", "--g", "3", "--x", "2", "--mode", "literal"]));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 37);
    let prob = |r: &str, c: &str| -> f64 {
        rows.iter().find(|row| row[0] == r && row[1] == c).unwrap()[3].parse().unwrap()
    };
    assert!((prob("1", "1") - 0.95048).abs() <= 1e-5);
    assert!((prob("2", "1") - 1.0).abs() <= 1e-12);
    assert!((prob("2", "2") - 0.18826).abs() <= 1e-5);

    let json = stdout(&qzkp(&["oracle", "--p", "7", "--x", "2", "--mode", "literal", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 36);
    assert_eq!(v["summary"]["deterministic_count"], 2);
}

#[test]
fn oracle_enumeration_cap() {
    let out = qzkp(&["oracle", "--p", "2003"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr_line(&out).starts_with("error[enumeration-cap]:"));
}

#[test]
fn usage_errors_are_single_line() {
    let out = qzkp(&["experiment", "--mode", "sideways"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).starts_with("error[usage]:"));
    let out = qzkp(&["teleport"]);
    assert_eq!(out.status.code(), Some(2));
    stderr_line(&out);
}
