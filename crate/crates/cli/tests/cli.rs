use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn toy(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/toy")
        .join(file)
        .canonicalize()
        .unwrap()
}

fn molbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_molbench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Two small fingerprints on the multi-task toy set, with a light forest.
fn write_config(dir: &Path, bbt: &str) -> PathBuf {
    let text = format!(
        r#"{{
  "version": 1,
  "datasets": [{{"name": "multi", "path": "{data}", "tasks": ["polar", "halogen"]}}],
  "representations": [
    {{"name": "ECFP-count", "type": "fingerprint", "fingerprint": {{"kind": "ecfp", "length": 256}}}},
    {{"name": "AP", "type": "fingerprint", "fingerprint": {{"kind": "atom_pair", "length": 256}}}}
  ],
  "classifier": {{"evaluation": {{"forest_trees": 10}}}},
  "bbt": {bbt},
  "output_dir": "out"
}}"#,
        data = toy("toy_multitask.csv").display()
    );
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn fingerprint_writes_one_row_per_smiles() {
    let dir = tempfile::tempdir().unwrap();
    let smi = dir.path().join("in.smi");
    fs::write(&smi, "CCO ethanol\nc1ccccc1\n\nCC(=O)O\n").unwrap();
    let out = dir.path().join("fp.csv");
    let res = molbench(&[
        "fingerprint",
        smi.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
        "--kind",
        "atom-pair",
        "--length",
        "64",
    ]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0].split(',').count(), 64);
}

#[test]
fn fingerprint_rejects_bad_smiles_and_bad_length() {
    let dir = tempfile::tempdir().unwrap();
    let smi = dir.path().join("in.smi");
    fs::write(&smi, "CCO\nC1CC\n").unwrap();
    let out = dir.path().join("fp.csv");
    let res = molbench(&[
        "fingerprint",
        smi.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 3);
    assert!(stderr(&res).contains("line 2"), "{}", stderr(&res));

    fs::write(&smi, "CCO\n").unwrap();
    let res = molbench(&[
        "fingerprint",
        smi.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
        "--length",
        "1000",
    ]);
    assert_eq!(code(&res), 2);
}

#[test]
fn split_prints_disjoint_indices() {
    let data = toy("toy.csv");
    let res = molbench(&["split", data.to_str().unwrap(), "--tasks", "active"]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let split: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    let train = split["train"].as_array().unwrap();
    let test = split["test"].as_array().unwrap();
    assert_eq!(train.len() + test.len(), 200);
    assert!(train.iter().all(|i| !test.contains(i)));

    let res = molbench(&["split", "/nonexistent.csv", "--tasks", "active"]);
    assert_eq!(code(&res), 3);
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    fs::write(
        &path,
        r#"{"version": 7, "datasets": [], "representations": []}"#,
    )
    .unwrap();
    let res = molbench(&["evaluate", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains("version"), "{}", stderr(&res));

    let res = molbench(&["evaluate", "--config", "/nonexistent/config.json"]);
    assert_eq!(code(&res), 2);
}

#[test]
fn evaluate_report_compare_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"draws_per_chain": 1000, "warmup": 1000}"#);
    let cfg = cfg.to_str().unwrap();
    let out = dir.path().join("out");

    let res = molbench(&["--jobs", "1", "evaluate", "--config", cfg]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    assert!(stderr(&res).contains("2 cell(s) evaluated, 0 reused"));
    let scores = out.join("scores.csv");
    let first = fs::read(&scores).unwrap();

    let res = molbench(&["evaluate", "--config", cfg, "--resume"]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    assert!(stderr(&res).contains("0 cell(s) evaluated, 2 reused"));
    assert_eq!(fs::read(&scores).unwrap(), first);

    let res = molbench(&["report", scores.to_str().unwrap(), "--config", cfg]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    for f in [
        "table1.csv",
        "win_matrix.csv",
        "baseline_per_dataset.csv",
        "near_wins.csv",
    ] {
        assert!(out.join(f).is_file(), "{f} missing");
    }

    let cmp = dir.path().join("cmp");
    let res = molbench(&[
        "compare",
        scores.to_str().unwrap(),
        "--config",
        cfg,
        "-o",
        cmp.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let pairs = fs::read_to_string(cmp.join("bbt_pairs.csv")).unwrap();
    assert_eq!(pairs.lines().count(), 2);
    let ranking: serde_json::Value =
        serde_json::from_slice(&fs::read(cmp.join("ranking.json")).unwrap()).unwrap();
    assert_eq!(ranking["ranking"]["entries"].as_array().unwrap().len(), 2);
    assert!(ranking["diagnostics"]["rhat"].is_array());
    assert!(cmp.join("ppc.csv").is_file());
}

#[test]
fn failed_convergence_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("scores.csv");
    fs::write(
        &scores,
        "model,dataset,head,auroc\nA,d1,best,0.9\nB,d1,best,0.7\nA,d2,best,0.8\nB,d2,best,0.6\n",
    )
    .unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"draws_per_chain": 100, "warmup": 100, "min_ess": 100000, "max_extensions": 0}"#,
    );
    let res = molbench(&[
        "compare",
        scores.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 4, "{}", stderr(&res));
    assert!(stderr(&res).contains("R-hat"), "{}", stderr(&res));
}

#[test]
fn malformed_score_table_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("scores.csv");
    fs::write(&scores, "model,dataset,head,auroc\nA,d1,best,1.7\n").unwrap();
    let res = molbench(&["report", scores.to_str().unwrap()]);
    assert_eq!(code(&res), 3);
}
