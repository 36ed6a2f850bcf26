use std::path::Path;
use std::process::{Command, Output};

fn kifer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kifer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data_lines(out: &[u8]) -> Vec<String> {
    String::from_utf8_lossy(out)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn pascal_row_five() {
    let out = kifer(&["tables", "--pascal", "5"]);
    assert!(out.status.success());
    let row5: Vec<String> = data_lines(&out.stdout)
        .iter()
        .filter(|l| l.starts_with("5,"))
        .map(|l| l.split(',').nth(2).unwrap().to_string())
        .collect();
    assert_eq!(row5, ["1", "1", "4", "4", "6", "6", "4", "4", "1", "1"]);
}

#[test]
fn narayana_table_matches_counts() {
    let out = kifer(&["tables", "--narayana", "8"]);
    let lines = data_lines(&out.stdout);
    assert_eq!(lines[0], "n,a,b");
    assert_eq!(lines[9], "8,13,60");
}

#[test]
fn metadata_header_echoes_config() {
    let out = kifer(&["--seed", "42", "walk", "--event", "cl", "--l", "300"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# kifer "));
    assert!(text.contains("# seed: 42\n"));
    assert!(text.contains("\"l\":[300]"));
    assert!(!text.contains("wall"));
    let p: f64 = data_lines(text.as_bytes())[1].split(',').nth(4).unwrap().parse().unwrap();
    assert!((p - 0.003908).abs() < 5e-6, "{p}");
}

#[test]
fn gap_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let args = [
            "gap", "--l", "2700", "--m", "400", "--replicas", "32", "--seed", "7", "--out",
        ];
        let mut all: Vec<&str> = args.to_vec();
        all.push(path.to_str().unwrap());
        let out = kifer(&all);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(&path).unwrap()
    };
    let a = run("a.csv");
    let b = run("b.csv");
    assert_eq!(a, b);
    let lines = data_lines(&a);
    assert!(lines[0].starts_with("l,K_l,epsilon,L,m,replicas,n_lm_mean,count_mean"));
    assert!(lines[1].starts_with("2700,3,"));
}

#[test]
fn fit_reads_gap_csv() {
    let dir = tempfile::tempdir().unwrap();
    let gap_csv = dir.path().join("gap.csv");
    let out = kifer(&[
        "gap",
        "--l",
        "300,1200,2700",
        "--m",
        "100",
        "--replicas",
        "4",
        "--out",
        gap_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let fit = kifer(&["fit", "--input", gap_csv.to_str().unwrap(), "--format", "json"]);
    assert!(fit.status.success(), "{}", String::from_utf8_lossy(&fit.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fit.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["rows"][0]["family"], "gamma_beta_log_holder");
}

#[test]
fn control_series_is_bounded() {
    let out = kifer(&["fit", "--control", "--family", "holder", "--alpha", "0.5"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("# verdict: bounded"));
}

#[test]
fn le_records_carry_the_spec_hash() {
    let out = kifer(&["le", "--cocycle", "free", "--E", "3", "--n", "10000", "--replicas", "2", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let row = &v["rows"][0];
    assert_eq!(row["spec_hash"].as_str().unwrap().len(), 16);
    assert!((row["value"].as_f64().unwrap() - 1.5f64.acosh()).abs() < 1e-3);
}

#[test]
fn ids_curve_is_monotone() {
    let out = kifer(&["ids", "--dim", "500", "--replicas", "2", "--points", "11"]);
    let ns: Vec<f64> = data_lines(&out.stdout)[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(ns.len(), 11);
    assert!(ns.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(kifer(&["bogus"]).status.code(), Some(2));
    assert_eq!(kifer(&["gap", "--l", "10"]).status.code(), Some(2));
    let bad = kifer(&["le", "--cocycle", "kifer", "--p", "1.5"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains('p'));
    assert_eq!(kifer(&["verify", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn verify_is_green() {
    let out = kifer(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("# failed: 0"));
}

#[test]
fn output_path_is_created() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.json");
    assert!(kifer(&["tables", "--format", "json", "--out", p.to_str().unwrap()]).status.success());
    assert!(Path::new(&p).exists());
}
