use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfrmed")).args(args).env_remove("CFRMED_DATA_DIR").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let o = run(&all);
    assert!(o.status.success(), "{}", stderr(&o));
    serde_json::from_slice(&o.stdout).expect("valid json")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cfrmed-cli-test-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn line_value<'a>(table: &'a str, key: &str) -> &'a str {
    table.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no `{key}` in\n{table}"))[key.len()..].trim()
}

const CHINA_ITALY: [&str; 7] = ["effects", "--data", "china_vs_italy_march9", "--control", "China", "--treatment", "Italy"];

#[test]
fn effects_golden_table() {
    let mut args = CHINA_ITALY.to_vec();
    args.extend(["--band", "50-59"]);
    let o = run(&args);
    assert!(o.status.success());
    let t = stdout(&o);
    assert_eq!(line_value(&t, "TCE"), "2.2%");
    assert_eq!(line_value(&t, "NDE"), "-0.8%");
    assert_eq!(line_value(&t, "NIE"), "3.3%");
    assert_eq!(line_value(&t, "CDE(50-59)"), "-1.1%");
    assert!(t.starts_with("dataset china_vs_italy_march9 (bundled) sha256 "));
}

#[test]
fn effects_json_has_provenance_and_full_precision() {
    let v = json(&CHINA_ITALY);
    assert_eq!(v["command"], "effects");
    assert_eq!(v["flags"]["control"], "China");
    assert_eq!(v["flags"]["undefined_band"], "error");
    assert_eq!(v["datasets"][0]["sha256"].as_str().unwrap().len(), 64);
    let est = v["result"]["estimates"].as_array().unwrap();
    assert_eq!(est[0]["kind"], "tce");
    assert!((est[0]["value"].as_f64().unwrap() - 0.021580187858300067).abs() < 1e-15);
    assert!((est[2]["value"].as_f64().unwrap() - 0.032679727670571465).abs() < 1e-15);
    // The document re-parses to itself.
    let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(again, v);
}

#[test]
fn effects_expected_cde_with_reference_from_other_dataset() {
    let mut args = CHINA_ITALY.to_vec();
    args.extend(["--reference", "Spain", "--reference-data", "countries_latest"]);
    let v = json(&args);
    let est = v["result"]["estimates"].as_array().unwrap();
    let e = est.iter().find(|e| e["kind"] == "expected_cde").unwrap();
    assert!((e["value"].as_f64().unwrap() + 0.010131504161629116).abs() < 1e-15);
    assert_eq!(e["reference"], "Spain");
    assert_eq!(v["datasets"].as_array().unwrap().len(), 2);
}

#[test]
fn self_pair_is_all_zero() {
    let o = run(&["effects", "--data", "china_vs_italy_march9", "--control", "China", "--treatment", "China", "--format", "csv"]);
    let csv = stdout(&o);
    for line in csv.lines().skip(1) {
        assert_eq!(line.split(',').nth(1).unwrap(), "0", "{line}");
    }
}

#[test]
fn unknown_labels_and_bands_exit_2() {
    let o = run(&["effects", "--data", "countries_latest", "--control", "Itlay", "--treatment", "Spain"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("did you mean `Italy`"), "{}", stderr(&o));
    let mut args = CHINA_ITALY.to_vec();
    args.extend(["--band", "55-64"]);
    assert_eq!(run(&args).status.code(), Some(2));
    let o = run(&["effects", "--data", "countries_lates", "--control", "a", "--treatment", "b"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("did you mean `countries_latest`"));
}

#[test]
fn schema_mismatch_and_undefined_rate_exit_2() {
    let mut args = CHINA_ITALY.to_vec();
    args.extend(["--reference", "Lombardy before 16 March", "--reference-data", "lombardy_ifr"]);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("schema"), "{}", stderr(&o));
    let o = run(&["effects", "--data", "china_vs_italy_march9", "--control", "China (0/0 variant)", "--treatment", "Italy"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "effects",
        "--data",
        "china_vs_italy_march9",
        "--control",
        "China (0/0 variant)",
        "--treatment",
        "Italy",
        "--undefined-band",
        "zero",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("coerced"));
}

fn trace_rows(data: &str) -> Vec<Vec<String>> {
    let o = run(&["trace", "--data", data, "--control", "China", "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    stdout(&o).lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn italy_trace_flips_between_12_and_19_march() {
    let rows = trace_rows("italy_series");
    assert_eq!(rows.len(), 14);
    let nde = |d: &str| rows.iter().find(|r| r[0] == d).unwrap()[2].parse::<f64>().unwrap();
    assert!(nde("2020-03-12") < 0.0 && nde("2020-03-19") > 0.0);
}

#[test]
fn spain_trace_flips_near_30_march() {
    let rows = trace_rows("spain_series");
    assert_eq!(rows.len(), 11);
    let nde = |d: &str| rows.iter().find(|r| r[0] == d).unwrap()[2].parse::<f64>().unwrap();
    assert!(nde("2020-03-30") < 0.0 && nde("2020-04-02") > 0.0);
}

#[test]
fn single_snapshot_series_gives_one_row() {
    let dir = scratch("single");
    let path = dir.join("one.csv");
    std::fs::write(&path, "#series,X\nsource: test\n#cohort,X,2020-04-01,t\nband,cases,deaths\n0-9,10,0\n10-19,10,0\n20-29,10,0\n30-39,10,0\n40-49,10,1\n50-59,10,1\n60-69,10,2\n70-79,10,3\n80+,10,4\n").unwrap();
    let rows = trace_rows(path.to_str().unwrap());
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "2020-04-01");
}

fn matrix_csv(kind: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let o = run(&["matrix", "--data", "countries_latest", "--kind", kind, "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    let head: Vec<String> = lines.next().unwrap().split(',').skip(1).map(String::from).collect();
    let values = lines.map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect()).collect();
    (head, values)
}

#[test]
fn matrices() {
    let (labels, tce) = matrix_csv("tce");
    assert_eq!(labels.len(), 12);
    for (i, row) in tce.iter().enumerate() {
        assert_eq!(row[i], 0.0);
        for (j, v) in row.iter().enumerate() {
            assert_eq!(*v, -tce[j][i]);
        }
    }
    let (nde, _) = matrix_csv("nde");
    assert!(["Diamond Princess", "China", "Portugal", "South Korea"].contains(&nde[0].as_str()));
    let (nie, _) = matrix_csv("nie");
    assert!(["South Africa", "Colombia", "Argentina"].contains(&nie[0].as_str()));
}

#[test]
fn correlations() {
    let v = json(&["correlate", "--test", "nde-vs-nie-rank"]);
    assert!((v["result"]["correlation"]["coefficient"].as_f64().unwrap() - 0.04).abs() < 0.1);
    let deltas = v["result"]["rank_deltas"].as_array().unwrap();
    assert!(deltas.iter().any(|d| d[0] == "Spain" && d[1] == -4));

    let v = json(&["correlate", "--test", "pairwise-nde-vs-nie"]);
    assert_eq!(v["result"]["correlation"]["n"], 132);
    assert!((v["result"]["correlation"]["coefficient"].as_f64().unwrap() - 0.17).abs() < 0.05);
    assert_eq!(v["result"]["sign_discordance"]["count"], 64);

    let v = json(&["correlate", "--test", "nie-rank-vs-median-age"]);
    let rho = v["result"]["correlation"]["coefficient"].as_f64().unwrap();
    assert!(rho > 0.7 && rho < 0.85, "{rho}");
    assert_eq!(v["datasets"][1]["name"], "median_ages");
}

#[test]
fn permutation_p_is_seeded() {
    let args = ["correlate", "--test", "pairwise-nde-vs-nie", "--p", "permutation", "--seed", "3", "--reps", "4000"];
    let a = json(&args);
    assert_eq!(a, json(&args));
    assert_eq!(a["flags"]["seed"], 3);
    assert_eq!(a["result"]["correlation"]["p_method"]["kind"], "permutation");
    let p = a["result"]["correlation"]["p_value"].as_f64().unwrap();
    assert!((1.0 / 4001.0..0.1).contains(&p));
}

#[test]
fn simpson_verdicts() {
    let o = run(&["simpson", "--data", "china_vs_italy_march9", "--control", "China", "--treatment", "Italy"]);
    assert_eq!(line_value(&stdout(&o), "reversal"), "yes");
    let o = run(&["simpson", "--data", "countries_latest", "--control", "Spain", "--treatment", "Spain"]);
    assert_eq!(line_value(&stdout(&o), "reversal"), "no");

    // Hand signs for Lombardy: every defined band falls or ties, and the total falls too.
    let v = json(&["simpson", "--data", "lombardy_ifr", "--control", "Lombardy before 16 March", "--treatment", "Lombardy after 16 March"]);
    let signs: Vec<&str> = v["result"]["bands"].as_array().unwrap().iter().map(|b| b["sign"].as_str().unwrap()).collect();
    assert_eq!(signs, ["zero", "zero", "negative", "negative", "negative", "negative"]);
    assert_eq!(v["result"]["total_sign"], "negative");
    assert_eq!(v["result"]["is_reversal"], false);
}

#[test]
fn validate_oracle_exit_codes() {
    let o = run(&["validate-oracle", "--k", "9", "--instances", "1000", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(line_value(&stdout(&o), "result"), "PASS");
    let v = json(&["validate-oracle", "--preset", "moderation"]);
    assert_eq!(v["result"]["exact"]["tce"], 1.0);
    assert_eq!(v["result"]["exact"]["nde"], 0.0);
    assert_eq!(v["result"]["exact"]["nie"], 0.0);
    assert_eq!(run(&["validate-oracle", "--k", "0"]).status.code(), Some(2));
    let o = run(&["validate-oracle", "--instances", "10", "--sample-n", "100000", "--models", "5", "--replicates", "50"]);
    assert!(stdout(&o).contains("sampling study"));
}

#[test]
fn datasets_list_and_show() {
    let v = json(&["datasets", "list"]);
    assert_eq!(v["result"].as_array().unwrap().len(), 6);
    let o = run(&["datasets", "show", "countries_latest"]);
    let t = stdout(&o);
    let all = t.lines().find(|l| l.starts_with("all cohorts")).unwrap();
    assert!(all.contains("756004") && all.contains("68508"), "{all}");
    assert_eq!(t.lines().filter(|l| l.contains("2020-")).count(), 13);
    let o = run(&["datasets", "show", "spain_series"]);
    assert!(stdout(&o).contains("warning Spain 2020-05-14: stated total deaths 19115 does not match per-band sum 19155"));
    assert!(stdout(&o).contains("0 errors"));
}

#[test]
fn invalid_file_reports_errors_and_exits_2() {
    let dir = scratch("invalid");
    let path = dir.join("bad.csv");
    std::fs::write(&path, "#cohort,A,2020-01-01,x\nband,cases,deaths\n0-9,3,5\n").unwrap();
    let o = run(&["datasets", "show", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("deaths exceed cases"), "{}", stderr(&o));
}

#[test]
fn data_dir_override() {
    let dir = scratch("override");
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data/china_vs_italy_march9.csv")).unwrap();
    std::fs::write(dir.join("china_vs_italy_march9.csv"), text.replace("50-59,1453,3", "50-59,1453,30")).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_cfrmed"))
        .args(["effects", "--data", "china_vs_italy_march9", "--control", "China", "--treatment", "Italy", "--band", "50-59"])
        .env("CFRMED_DATA_DIR", &dir)
        .output()
        .unwrap();
    let t = stdout(&o);
    assert!(t.contains("CFRMED_DATA_DIR:"), "{t}{}", stderr(&o));
    assert_ne!(line_value(&t, "CDE(50-59)"), "-1.1%");
}

#[test]
fn output_is_deterministic_across_runs_and_modes() {
    for args in [
        vec!["matrix", "--kind", "nie", "--format", "json"],
        vec!["correlate", "--test", "pairwise-nde-vs-nie", "--p", "permutation", "--reps", "3000", "--format", "csv"],
        vec!["validate-oracle", "--instances", "200", "--format", "json"],
    ] {
        let a = run(&args).stdout;
        assert_eq!(a, run(&args).stdout);
        let mut seq = args.clone();
        seq.push("--sequential");
        assert_eq!(a, run(&seq).stdout);
    }
}
