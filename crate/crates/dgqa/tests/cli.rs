//! End-to-end command-line round trips on a small synthetic corpus.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_dgqa")
}

fn run_ok(args: &[&str]) -> Output {
    let out = Command::new(bin()).args(args).output().expect("spawn dgqa");
    assert!(
        out.status.success(),
        "dgqa {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_err(args: &[&str]) -> Output {
    let out = Command::new(bin()).args(args).output().expect("spawn dgqa");
    assert!(!out.status.success(), "dgqa {:?} unexpectedly succeeded", args);
    out
}

fn gen_refs(dir: &Path, count: usize) {
    run_ok(&[
        "gen-refs",
        "--out",
        dir.to_str().unwrap(),
        "--count",
        &count.to_string(),
        "--size",
        "96",
    ]);
}

fn write_config(path: &Path, refs: &Path, out: &Path, extra: &str) {
    let body = format!(
        r#"{{
  "domains": [1, 11, 13],
  "refs_dir": "{}",
  "target": {{"mixture": {{"recipe": {{"components": [
      {{"family": 11, "levels": [2, 3, 4], "weight": 1.0}}
    ]}}, "count": 8}}}},
  "levels": [1, 3, 5],
  "seed": 9,
  "n_repeats": 1,
  "out_dir": "{}"{}
}}"#,
        refs.display(),
        out.display(),
        extra
    );
    fs::write(path, body).unwrap();
}

fn read_bytes(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

/// All files under a directory, as sorted relative paths.
fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn assert_dirs_identical(a: &Path, b: &Path) {
    let fa = walk(a);
    assert_eq!(fa, walk(b), "file sets differ under {} / {}", a.display(), b.display());
    for rel in fa {
        assert_eq!(
            read_bytes(&a.join(&rel)),
            read_bytes(&b.join(&rel)),
            "{} differs",
            rel.display()
        );
    }
}

#[test]
fn synth_is_bit_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let refs = tmp.path().join("refs");
    gen_refs(&refs, 8);

    for name in ["a", "b"] {
        let config = tmp.path().join(format!("config_{name}.json"));
        write_config(&config, &refs, &tmp.path().join(format!("out_{name}")), "");
        run_ok(&["synth", "--config", config.to_str().unwrap()]);
    }
    // run.json and synth.json embed the config (and its hash), which covers
    // out_dir; compare them modulo that and everything else byte-for-byte
    let (a, b) = (tmp.path().join("out_a"), tmp.path().join("out_b"));
    for rel in walk(&a) {
        if rel == Path::new("run.json") {
            continue;
        }
        if rel == Path::new("synth.json") {
            let parse = |p: &Path| -> serde_json::Value {
                let mut v: serde_json::Value =
                    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
                v.as_object_mut().unwrap().remove("config_hash");
                v
            };
            assert_eq!(parse(&a.join(&rel)), parse(&b.join(&rel)));
            continue;
        }
        assert_eq!(read_bytes(&a.join(&rel)), read_bytes(&b.join(&rel)), "{} differs", rel.display());
    }
}

#[test]
fn pipeline_completes_without_target_labels() {
    let tmp = tempfile::tempdir().unwrap();
    let refs = tmp.path().join("refs");
    gen_refs(&refs, 8);
    let out = tmp.path().join("out");
    let config = tmp.path().join("config.json");
    write_config(&config, &refs, &out, "");
    run_ok(&["synth", "--config", config.to_str().unwrap()]);

    fs::remove_file(out.join("target").join("labels.json")).unwrap();
    let run = run_ok(&["pipeline", "--config", config.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&run.stdout).contains("unlabeled target"));

    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics, "run,seed,setting,n,srcc,plcc,plcc_mode\n");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["labels_present"], serde_json::Value::Bool(false));
    assert!(summary["dgqa_median"].is_null());
    // the unsupervised selection still produced a full report
    let selection: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("selection_report.json")).unwrap())
            .unwrap();
    assert_eq!(selection["entries"].as_array().unwrap().len(), 3);
}

#[test]
fn pipeline_rerun_from_run_json_reproduces_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let refs = tmp.path().join("refs");
    gen_refs(&refs, 8);
    let out = tmp.path().join("out");
    let config = tmp.path().join("config.json");
    write_config(&config, &refs, &out, ",\n  \"n_repeats\": 2");
    run_ok(&["synth", "--config", config.to_str().unwrap()]);
    run_ok(&["pipeline", "--config", config.to_str().unwrap()]);

    let keep = tmp.path().join("first");
    fs::create_dir_all(&keep).unwrap();
    let tracked = [
        "metrics.csv",
        "summary.json",
        "selection_report.json",
        "run.json",
        "runs/run_0/selection_report.json",
        "runs/run_0/classifier.json",
        "runs/run_0/regressor_dgqa.json",
        "runs/run_0/regressor_baseline.json",
        "runs/run_1/selection_report.json",
    ];
    for rel in tracked {
        let dst = keep.join(rel);
        fs::create_dir_all(dst.parent().unwrap()).unwrap();
        fs::copy(out.join(rel), dst).unwrap();
    }

    // re-launch solely from the recorded run.json
    let rerun_config = tmp.path().join("rerun.json");
    fs::copy(out.join("run.json"), &rerun_config).unwrap();
    run_ok(&["pipeline", "--config", rerun_config.to_str().unwrap()]);
    for rel in tracked {
        assert_eq!(read_bytes(&out.join(rel)), read_bytes(&keep.join(rel)), "{rel} differs");
    }
}

#[test]
fn staged_commands_chain_through_saved_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let refs = tmp.path().join("refs");
    gen_refs(&refs, 8);
    let out = tmp.path().join("out");
    let config = tmp.path().join("config.json");
    write_config(&config, &refs, &out, "");
    run_ok(&["synth", "--config", config.to_str().unwrap()]);
    run_ok(&["train-domain", "--config", config.to_str().unwrap()]);
    assert!(out.join("classifier.json").is_file());
    run_ok(&["select", "--config", config.to_str().unwrap()]);
    assert!(out.join("selection_report.json").is_file());
    run_ok(&["train-iqa", "--config", config.to_str().unwrap()]);
    assert!(out.join("regressor.json").is_file());
    // explicit subset override
    run_ok(&[
        "train-iqa",
        "--config",
        config.to_str().unwrap(),
        "--domains",
        "1,13",
    ]);
}

#[test]
fn missing_artifacts_are_all_listed() {
    let tmp = tempfile::tempdir().unwrap();
    let refs = tmp.path().join("refs");
    gen_refs(&refs, 4);
    let out = tmp.path().join("out");
    let config = tmp.path().join("config.json");
    write_config(&config, &refs, &out, "");
    fs::create_dir_all(&out).unwrap();

    let run = run_err(&["pipeline", "--config", config.to_str().unwrap()]);
    let stderr = String::from_utf8_lossy(&run.stderr);
    for rel in [
        "sources/domain_1/manifest.json",
        "sources/domain_11/manifest.json",
        "sources/domain_13/manifest.json",
        "target/index.json",
    ] {
        assert!(stderr.contains(rel), "stderr does not mention {rel}:\n{stderr}");
    }
}

#[test]
fn report_regeneration_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let refs = tmp.path().join("refs");
    gen_refs(&refs, 8);
    let out = tmp.path().join("out");
    let config = tmp.path().join("config.json");
    write_config(&config, &refs, &out, "");
    run_ok(&["synth", "--config", config.to_str().unwrap()]);
    run_ok(&["pipeline", "--config", config.to_str().unwrap()]);

    let (r1, r2) = (tmp.path().join("r1"), tmp.path().join("r2"));
    for r in [&r1, &r2] {
        run_ok(&[
            "report",
            "--run",
            out.to_str().unwrap(),
            "--out",
            r.to_str().unwrap(),
        ]);
    }
    assert_dirs_identical(&r1, &r2);
    let md = fs::read_to_string(r1.join("report.md")).unwrap();
    assert!(md.contains("## Source-domain selection"));
    assert!(md.contains("N.o.S."));
}

#[test]
fn single_family_synth_writes_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let refs = tmp.path().join("refs");
    gen_refs(&refs, 3);
    let out = tmp.path().join("noise");
    run_ok(&[
        "synth",
        "--refs",
        refs.to_str().unwrap(),
        "--family",
        "11",
        "--levels",
        "1..5",
        "--out",
        out.to_str().unwrap(),
    ]);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["samples"].as_array().unwrap().len(), 15);
}

#[test]
fn gds_needs_labels_and_matches_pipeline_features() {
    let tmp = tempfile::tempdir().unwrap();
    let refs = tmp.path().join("refs");
    gen_refs(&refs, 8);
    let out = tmp.path().join("out");
    let config = tmp.path().join("config.json");
    write_config(&config, &refs, &out, "");
    run_ok(&["synth", "--config", config.to_str().unwrap()]);
    run_ok(&["gds", "--config", config.to_str().unwrap()]);
    assert!(out.join("gds_report.json").is_file());
    assert!(out.join("features_cache.json").is_file());

    // labels removed: the supervised diagnostic must refuse to run
    fs::remove_file(out.join("target").join("labels.json")).unwrap();
    let run = run_err(&["gds", "--config", config.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&run.stderr).contains("labeled target"));
}
