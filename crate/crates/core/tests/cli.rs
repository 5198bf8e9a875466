use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use penmeta::cli::{analyze, load_study_file, write_analysis, RunArgs, RunManifest, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE};

const STUDIES: &str = r#"{
  "studies": [
    {"id": "alpha", "modality": "or", "ratio": {"estimate": 2.1, "ci_low": 1.7, "ci_high": 2.6}},
    {"id": "beta", "modality": "or", "biased": true, "ratio": {"estimate": 3.4, "ci_low": 2.0, "ci_high": 5.8}},
    {"id": "gamma", "modality": "sir", "ratio": {"estimate": 2.5, "ci_low": 1.6, "ci_high": 3.9},
     "ages": {"cases_carrier": {"mean": 58.0, "sd": 11.0}, "cases_noncarrier": {"mean": 62.0, "sd": 12.0},
              "controls_carrier": {"mean": 58.0, "sd": 11.0}, "controls_noncarrier": {"mean": 62.0, "sd": 12.0}}}
  ]
}"#;

fn penmeta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_penmeta")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn csvs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn short_run(studies: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--studies",
        studies.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--iterations",
        "600",
        "--burn-in",
        "300",
        "--chains",
        "2",
        "--seed",
        "77",
    ];
    args.extend_from_slice(extra);
    penmeta(&args)
}

#[test]
fn run_matches_library_and_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("studies.json");
    std::fs::write(&input, STUDIES).unwrap();
    let (a, b, lib) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("lib"));

    let oa = short_run(&input, &a, &[]);
    assert!([EXIT_OK, EXIT_NOT_CONVERGED].contains(&code(&oa)), "{}", String::from_utf8_lossy(&oa.stderr));
    short_run(&input, &b, &[]);

    let mut args = RunArgs::new(&lib);
    args.studies = Some(input.clone());
    args.iterations = 600;
    args.burn_in = 300;
    args.chains = 2;
    args.seed = 77;
    let analysis = analyze(&load_study_file(&input).unwrap(), &args.config(), args.priors()).unwrap();
    let manifest = RunManifest {
        command: "run".into(),
        version: String::new(),
        config: serde_json::Value::Null,
        seed: 77,
        input_sha256: String::new(),
        chains: Vec::new(),
        gelman_rubin: analysis.rhat.clone(),
        wall_clock_seconds: 0.0,
    };
    write_analysis(&lib, &analysis, &manifest).unwrap();

    let (ca, cb, cl) = (csvs(&a), csvs(&b), csvs(&lib));
    assert_eq!(ca.len(), 5);
    assert_eq!(ca, cb);
    assert_eq!(ca, cl);
    assert!(String::from_utf8_lossy(&ca["trace_chain1.csv"]).starts_with("iteration,a,b,c,d,kappa_alpha"));

    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 77);
    assert_eq!(m["chains"].as_array().unwrap().len(), 2);
    assert_eq!(m["input_sha256"].as_str().unwrap().len(), 64);
    assert!(dir.path().read_dir().unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = penmeta(&["simulate", "--replicates", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), EXIT_USAGE);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, STUDIES.replace("ci_high\": 2.6", "ci_hi\": 2.6")).unwrap();
    let o = short_run(&bad, &out, &[]);
    assert_eq!(code(&o), EXIT_USAGE);
    assert!(String::from_utf8_lossy(&o.stderr).contains("ci_hi"));

    assert_eq!(code(&penmeta(&["run", "--dataset", "atm"])), EXIT_USAGE);
    assert_eq!(code(&penmeta(&["frobnicate"])), EXIT_USAGE);
    assert_eq!(code(&penmeta(&["--help"])), EXIT_OK);
}

#[test]
fn diagnose_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("atm");
    let o = penmeta(&[
        "run", "--dataset", "atm", "--out", out.to_str().unwrap(), "--iterations", "100", "--burn-in", "0", "--chains", "4",
    ]);
    assert_eq!(code(&o), EXIT_NOT_CONVERGED, "{}", String::from_utf8_lossy(&o.stdout));
    let o = penmeta(&["diagnose", "--traces", out.to_str().unwrap()]);
    assert_eq!(code(&o), EXIT_NOT_CONVERGED);
    assert!(String::from_utf8_lossy(&o.stdout).contains("4 chains, 100 draws"));

    let single = dir.path().join("single");
    std::fs::create_dir(&single).unwrap();
    std::fs::copy(out.join("trace_chain1.csv"), single.join("trace_chain1.csv")).unwrap();
    assert_eq!(code(&penmeta(&["diagnose", "--traces", single.to_str().unwrap()])), EXIT_USAGE);

    // chain from another dataset: different columns
    let other = dir.path().join("palb2");
    penmeta(&["run", "--dataset", "palb2", "--out", other.to_str().unwrap(), "--iterations", "50", "--burn-in", "0", "--chains", "2"]);
    std::fs::copy(other.join("trace_chain1.csv"), single.join("trace_chain2.csv")).unwrap();
    assert_eq!(code(&penmeta(&["diagnose", "--traces", single.to_str().unwrap()])), EXIT_USAGE);
}

#[test]
fn exclude_drops_biased_atm_studies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = penmeta(&[
        "run", "--dataset", "atm", "--approach", "exclude", "--out", out.to_str().unwrap(), "--iterations", "40",
        "--burn-in", "20", "--chains", "2",
    ]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("studies used: 18"));
    let header = std::fs::read_to_string(out.join("trace_chain1.csv")).unwrap();
    let header = header.lines().next().unwrap();
    assert!(!header.contains("bias_") && !header.contains("hauke2018"));
}

#[test]
fn simulate_writes_report_and_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = penmeta(&[
            "simulate", "--replicates", "2", "--iterations", "60", "--burn-in", "30", "--population", "700000",
            "--oracle-draws", "10000", "--seed", "5", "--dump-replicates", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), EXIT_OK, "{}", String::from_utf8_lossy(&o.stderr));
        csvs(&out)
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    let report = String::from_utf8_lossy(&a["sim_report.csv"]).into_owned();
    assert_eq!(report.lines().count(), 1 + 3 * 5);
}
