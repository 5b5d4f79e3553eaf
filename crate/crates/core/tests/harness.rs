use std::fs;
use std::path::Path;
use std::process::Command;

use anaphora_core::harness::run::{CHECKPOINT_FILE, CONFIG_FILE, FAILURE_FILE, REPORT_FILE, STEPS_FILE};
use anaphora_core::harness::{self, Condition, ExperimentConfig, Report};
use anaphora_core::Error;
use tempfile::TempDir;

fn tiny_supervised(out: &Path) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{"experiment": "supervised", "n_subjects": 4, "n_verbs": 4, "subsample_size": null,
            "epochs": 3, "seeds": [0], "su_sample_size": 10, "su_resamples": 2, "out_dir": {:?}}}"#,
        out.to_str().unwrap()
    ))
    .unwrap()
}

fn tiny_emergent(out: &Path, condition: Condition, seeds: &[u64]) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::emergent(condition);
    cfg.n_subjects = 4;
    cfg.n_verbs = 4;
    cfg.subsample_size = None;
    cfg.alphabet_size = 6;
    cfg.max_len = 5;
    cfg.sender_hidden = 12;
    cfg.receiver_hidden = 12;
    cfg.batch_size = 16;
    cfg.interactions = 15;
    cfg.log_every = 5;
    cfg.su_sample_size = 10;
    cfg.su_resamples = 2;
    cfg.seeds = seeds.to_vec();
    cfg.out_dir = out.to_path_buf();
    cfg.validate().unwrap();
    cfg
}

#[test]
fn supervised_smoke_run_emits_all_artifacts() {
    let dir = TempDir::new().unwrap();
    let mut cfg = tiny_supervised(dir.path());
    cfg.languages = vec!["pronoun".parse().unwrap()];
    let records = harness::run_supervised(&cfg).unwrap();
    assert_eq!(records.len(), 1);
    let run = cfg.run_dir(0);
    for f in [CONFIG_FILE, STEPS_FILE, CHECKPOINT_FILE, REPORT_FILE, "corpus_pronoun.csv"] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    assert_eq!(records[0].config_hash, cfg.hash());
    let stored = ExperimentConfig::load(&run.join(CONFIG_FILE)).unwrap();
    assert_eq!(stored, cfg.for_seed(0));
    assert_eq!(fs::read_to_string(run.join(STEPS_FILE)).unwrap().lines().count(), 3);
}

#[test]
fn reruns_are_byte_identical_and_analyze_matches() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for (cfg_a, cfg_b) in [
        (tiny_supervised(a.path()), tiny_supervised(b.path())),
        (tiny_emergent(a.path(), Condition::Efficiency, &[3]), tiny_emergent(b.path(), Condition::Efficiency, &[3])),
    ] {
        harness::run_experiment(&cfg_a).unwrap();
        harness::run_experiment(&cfg_b).unwrap();
        let seed = cfg_a.seeds[0];
        let (ra, rb) = (cfg_a.run_dir(seed), cfg_b.run_dir(seed));
        for f in [STEPS_FILE, REPORT_FILE, CHECKPOINT_FILE] {
            assert_eq!(fs::read(ra.join(f)).unwrap(), fs::read(rb.join(f)).unwrap(), "{f} differs");
        }
        let again = harness::analyze_run(&ra).unwrap();
        assert_eq!(again.to_bytes(), fs::read(ra.join(REPORT_FILE)).unwrap());
    }
}

#[test]
fn analyze_rejects_empty_or_missing_inputs() {
    let dir = TempDir::new().unwrap();
    let cfg = tiny_supervised(dir.path());
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    assert!(matches!(harness::analyze_corpus(&empty, &cfg, 0), Err(Error::EmptyInput(_))));
    assert!(matches!(harness::analyze_run(&dir.path().join("nope")), Err(Error::MissingFile(_))));

    harness::run_experiment(&cfg).unwrap();
    let run = cfg.run_dir(0);
    fs::remove_file(run.join(CHECKPOINT_FILE)).unwrap();
    assert!(matches!(harness::analyze_run(&run), Err(Error::MissingFile(_))));
    fs::write(run.join(CONFIG_FILE), "{\"experiment\": \"supervised\", \"bogus\": 1}").unwrap();
    assert!(matches!(harness::analyze_run(&run), Err(Error::Schema { .. })));
}

#[test]
fn divergence_is_recorded() {
    let dir = TempDir::new().unwrap();
    let mut cfg = tiny_emergent(dir.path(), Condition::Control, &[0]);
    cfg.lr = 1e300;
    let err = harness::run_emergent(&cfg).unwrap_err();
    assert!(matches!(err, Error::Diverged { .. }), "{err}");
    let failure: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(cfg.run_dir(0).join(FAILURE_FILE)).unwrap()).unwrap();
    assert_eq!(failure["kind"], "diverged");
}

#[test]
fn summary_and_figure_tables_have_expected_shape() {
    let dir = TempDir::new().unwrap();
    let mut sup = tiny_supervised(dir.path());
    sup.seeds = vec![0, 1];
    harness::run_experiment(&sup).unwrap();
    harness::run_experiment(&tiny_emergent(dir.path(), Condition::Control, &[0, 1])).unwrap();
    harness::run_experiment(&tiny_emergent(dir.path(), Condition::Efficiency, &[0, 1])).unwrap();

    let reports = harness::collect_reports(dir.path()).unwrap();
    assert_eq!(reports.len(), 6);
    let (summary, paths) = harness::write_summary(dir.path(), &reports).unwrap();
    assert_eq!(paths.len(), 6);

    let fig4_rows: Vec<csv::StringRecord> = csv::Reader::from_path(dir.path().join("summary/figure4.csv"))
        .unwrap()
        .into_records()
        .map(|r| r.unwrap())
        .collect();
    let shown = fig4_rows.iter().filter(|r| &r[6] == "false").count();
    assert_eq!(shown, 3 * 4 * 3);
    assert_eq!(fig4_rows.len(), 3 * 5 * 3);
    assert!(fig4_rows.iter().all(|r| r[7].split(';').count() == 2));

    let fig5: Vec<csv::StringRecord> = csv::Reader::from_path(dir.path().join("summary/figure5.csv"))
        .unwrap()
        .into_records()
        .map(|r| r.unwrap())
        .collect();
    let panels: std::collections::BTreeSet<&str> = fig5.iter().map(|r| r.get(0).unwrap()).collect();
    let variants: std::collections::BTreeSet<&str> = fig5.iter().map(|r| r.get(2).unwrap()).collect();
    assert_eq!(panels.into_iter().collect::<Vec<_>>(), ["non_redundant", "redundant_subject", "redundant_verb"]);
    assert_eq!(variants.into_iter().collect::<Vec<_>>(), ["control", "efficiency"]);

    let sup_sum = summary.supervised.unwrap();
    assert_eq!(sup_sum.languages.len(), 3);
    assert_eq!(sup_sum.epoch_tests.len(), 3);
    let emg = summary.emergent.unwrap();
    assert_eq!(emg.conditions.len(), 2);
    assert!(emg.tests.iter().any(|t| t.metric == "mean_length"));

    // Identical reports give identical figure files.
    let other = TempDir::new().unwrap();
    let again = harness::emit_figure_data(&reports, other.path()).unwrap();
    for p in again {
        let name = p.file_name().unwrap();
        assert_eq!(fs::read(&p).unwrap(), fs::read(dir.path().join("summary").join(name)).unwrap());
    }

    let long = fs::read_to_string(dir.path().join("summary/supervised.csv")).unwrap();
    assert!(long.starts_with("config_hash,seed,experiment,variant,metric,group,position,value"));
    assert!(reports.iter().all(|r| matches!(r, Report::Supervised(_) | Report::Emergent(_))));
}

#[test]
fn handcrafted_dump_round_trips_through_analysis() {
    let dir = TempDir::new().unwrap();
    let mut cfg = tiny_supervised(dir.path());
    cfg.codebook_mode = anaphora_core::handcrafted::CodebookMode::Overlapping;
    let written = harness::write_languages(&cfg, &cfg.languages, dir.path()).unwrap();
    assert_eq!(written.len(), 4);
    let ne = harness::analyze_corpus(&dir.path().join("no_elision.csv"), &cfg, 0).unwrap();
    assert_eq!(ne.su[0], 0.0);
    let pr = harness::analyze_corpus(&dir.path().join("pronoun.csv"), &cfg, 0).unwrap();
    assert!(pr.su[1] > 0.0);
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_anaphora")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn cli_verbs_and_error_json() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let small = ["--set", "n_subjects=4", "--set", "n_verbs=4", "--set", "subsample_size=null", "--set", "su_sample_size=10", "--set", "su_resamples=2"];

    let (code, stdout, _) = cli(&[&["gen-language", "--language", "prodrop", "--out", out][..], &small].concat());
    assert_eq!(code, 0);
    assert!(stdout.contains("prodrop.csv"));

    let (code, _, _) =
        cli(&[&["train-receiver", "--seed", "2", "--out", out, "--set", "epochs=2"][..], &small].concat());
    assert_eq!(code, 0);
    let agent_args = ["--set", "interactions=5", "--set", "sender_hidden=8", "--set", "receiver_hidden=8", "--set", "batch_size=8"];
    let (code, _, _) =
        cli(&[&["train-agents", "--condition", "efficiency", "--seed", "1", "--out", out][..], &small, &agent_args].concat());
    assert_eq!(code, 0);
    let (code, stdout, _) = cli(&["report", "--out", out]);
    assert_eq!(code, 0);
    assert!(stdout.contains("figure5.csv"));

    let run = fs::read_dir(dir.path().join("runs")).unwrap().next().unwrap().unwrap().path();
    let seed_dir = fs::read_dir(&run).unwrap().next().unwrap().unwrap().path();
    let (code, stdout, _) = cli(&["analyze", seed_dir.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(stdout.as_bytes(), fs::read(seed_dir.join(REPORT_FILE)).unwrap());

    let (code, _, stderr) = cli(&["analyze", dir.path().join("missing").to_str().unwrap()]);
    assert_eq!(code, 1);
    let e: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(e["error"]["kind"], "missing_file");

    let (code, _, stderr) = cli(&["train-agents", "--set", "alpha=0.5", "--out", out]);
    assert_eq!(code, 1);
    let e: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(e["error"]["kind"], "invalid_config");

    let (code, _, stderr) = cli(&["train-agents", "--condition", "sometimes"]);
    assert_eq!(code, 2);
    let e: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(e["error"]["kind"], "usage");
}
