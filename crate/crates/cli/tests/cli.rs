//! End-to-end runs of the `pedlump` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pedlump::fixtures;
use serde_json::Value;

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name);
    path.to_str().unwrap().to_string()
}

fn pedlump(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pedlump"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&pedlump(&["--help"])), 0);
    assert_eq!(code(&pedlump(&[])), 2);
    assert_eq!(code(&pedlump(&["reduce", "--no-such-flag", "x"])), 2);
    assert_eq!(code(&pedlump(&["--bootstrap", "sometimes", "reduce", "x"])), 2);
    let o = pedlump(&["--jobs", "0", "reduce", &fixture("full_sibs.ped")]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn missing_and_malformed_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = pedlump(&["reduce", dir.path().join("absent.ped").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let bad = write(dir.path(), "bad.ped", "a 0 0 M 1\n");
    assert_eq!(code(&pedlump(&["reduce", &bad])), 2);
    let cyclic = write(dir.path(), "cyclic.ped", "a b c M 1 1\nb a c M 0 0\nc 0 0 F 0 0\n");
    assert_eq!(code(&pedlump(&["reduce", &cyclic])), 2);
    let o = pedlump(&["--meiosis-order", "nobody:p", "reduce", &fixture("full_sibs.ped")]);
    assert_eq!(code(&o), 2);
}

#[test]
fn reduce_summary_is_versioned_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("s.json");
    let run = || {
        let o = pedlump(&[
            "--no-timing",
            "reduce",
            &fixture("first_cousins.ped"),
            "--summary",
            summary.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (stdout(&o), fs::read_to_string(&summary).unwrap())
    };
    let first = run();
    assert_eq!(first, run());
    let json: Value = serde_json::from_str(&first.1).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["command"], "reduce");
    assert_eq!(json["variant"], "full");
    assert!(json["runtime_ms"].is_null());
    assert_eq!(json["full_states"], 1u64 << json["n"].as_u64().unwrap());
    assert_eq!(json["ensemble_blocks"].as_u64().unwrap() as usize, first.0.lines().count());
}

#[test]
fn summary_goes_to_stderr_by_default() {
    let o = pedlump(&["reduce", &fixture("full_sibs.ped")]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), fixtures::FULL_SIBS_ENSEMBLE);
    let json: Value = serde_json::from_str(&stderr(&o)).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert!(json["runtime_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn bootstrap_matches_full() {
    for ped in ["half_cousins.ped", "first_cousins.ped", "lineage.ped", "trio_sibs.ped"] {
        let full = pedlump(&["reduce", &fixture(ped)]);
        let boot = pedlump(&["--bootstrap", "auto", "reduce", &fixture(ped)]);
        assert_eq!(code(&boot), 0, "{}", stderr(&boot));
        assert_eq!(stdout(&full), stdout(&boot), "{ped}");
    }
}

#[test]
fn meiosis_cap_is_a_usage_error() {
    let o = pedlump(&["--max-meioses", "3", "reduce", &fixture("first_cousins.ped")]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("error:"));
}

#[test]
fn verify_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let sibs = fixture("full_sibs.ped");

    let ok = pedlump(&["verify", &sibs, &fixture("full_sibs.partition")]);
    assert_eq!(code(&ok), 0);
    assert_eq!(stdout(&ok), "OK 3 blocks, markov, refines emission\n");

    // One block is Markov but merges states with different emissions.
    let whole: Vec<String> = (0..16).map(|x| format!("{x:04b}")).collect();
    let whole = write(dir.path(), "whole.partition", &(whole.join(" ") + "\n"));
    let o = pedlump(&["verify", &sibs, &whole]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("FAIL emission"));

    let narrow = write(dir.path(), "narrow.partition", "00 11\n01 10\n");
    let o = pedlump(&["verify", &sibs, &narrow]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("2 meioses"));

    let garbage = write(dir.path(), "garbage.partition", "0000 0001\n0001\n");
    assert_eq!(code(&pedlump(&["verify", &sibs, &garbage])), 2);
}

#[test]
fn bench_csv() {
    let o = pedlump(&["bench", "--replicates", "0"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o),
        "replicate,n_meioses,full_states,ensemble_states,runtime_ms,variant,relevant_meioses,emission_states,status\n"
    );

    let args = ["--no-timing", "--seed", "4", "bench", "--replicates", "4", "--generations", "2"];
    let a = pedlump(&args);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&pedlump(&args)));
    let mut reader = csv::Reader::from_reader(a.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0], i.to_string());
        assert_eq!(&row[5], "full");
        assert_eq!(&row[4], "");
    }

    let o = pedlump(&["--meiosis-order", "a:p", "bench", "--replicates", "1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn simulated_data_round_trips_through_likelihood() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = pedlump(&[
        "--seed",
        "11",
        "simulate",
        "--generations",
        "2",
        "--replicates",
        "3",
        "--sites",
        "20",
        "--reducible-only",
        "--out-dir",
        out,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let meta: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(meta["schema_version"], 1);
    assert_eq!(meta, serde_json::from_str::<Value>(&fs::read_to_string(dir.path().join("simulate.json")).unwrap()).unwrap());

    let freqs = dir.path().join("freqs.txt");
    let mut checked = 0;
    for rep in meta["replicates"].as_array().unwrap() {
        let Some(geno) = rep["genotypes"].as_str() else { continue };
        let ped = dir.path().join(rep["pedigree"].as_str().unwrap());
        let o = pedlump(&[
            "likelihood",
            ped.to_str().unwrap(),
            dir.path().join(geno).to_str().unwrap(),
            freqs.to_str().unwrap(),
            "--check-naive",
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let json: Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(json["schema_version"], 1);
        let reduced = json["log_likelihood"].as_f64().unwrap();
        let naive = json["naive_log_likelihood"].as_f64().unwrap();
        assert!(reduced.is_finite() && reduced < 0.0);
        assert!((reduced - naive).abs() <= 1e-9);
        assert!(json["reduced_states"].as_u64().unwrap() <= json["full_states"].as_u64().unwrap());
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn simulate_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let o = pedlump(&["--seed", "5", "simulate", "--replicates", "2", "--out-dir", dir.path().to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for name in ["rep0.ped", "rep1.ped", "freqs.txt", "simulate.json"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}
