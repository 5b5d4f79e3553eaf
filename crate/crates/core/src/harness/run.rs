use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind};
use super::records::*;
use crate::agents::{
    exact_match_accuracy, train_step_emergent, train_step_supervised, Baseline, EmergentHyper, ReceiverParams,
    SenderParams,
};
use crate::error::{Error, Result};
use crate::handcrafted::{build_codebook_with_mode, generate_language, Codebook, Language, Signal};
use crate::meanings::{enumerate_meanings, sample_batch, split_dataset, subsample_meanings, DatasetSplit, Meaning};
use crate::metrics::{mean_signal_length, predictive_ambiguity_profile, signal_uniqueness, MeaningGroup, SignalCorpus};
use crate::neural::Checkpoint;

pub const CONFIG_FILE: &str = "config.json";
pub const STEPS_FILE: &str = "steps.jsonl";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const REPORT_FILE: &str = "report.json";
pub const RECORD_FILE: &str = "record.json";
pub const FAILURE_FILE: &str = "failure.json";

/// Stream offset so metric sampling never shares draws with training.
const METRIC_STREAM: u64 = 0x0005_eed0_fa11;

/// Groups reported for predictive ambiguity.
pub const PA_GROUPS: [MeaningGroup; 4] = [
    MeaningGroup::NonRedundant,
    MeaningGroup::RedundantSubject,
    MeaningGroup::RedundantVerb,
    MeaningGroup::Full,
];

const LENGTH_GROUPS: [MeaningGroup; 4] =
    [MeaningGroup::All, MeaningGroup::Partial, MeaningGroup::Full, MeaningGroup::NonRedundant];

pub fn corpus_file(language: Option<Language>) -> String {
    match language {
        Some(l) => format!("corpus_{l}.csv"),
        None => "corpus.csv".into(),
    }
}

/// The experiment's meaning set (full space or its seeded subsample).
pub fn meaning_set(cfg: &ExperimentConfig) -> Result<Vec<Meaning>> {
    let all = enumerate_meanings(&cfg.vocabulary()?);
    match cfg.subsample_size {
        Some(n) if n < all.len() => subsample_meanings(&all, n, cfg.subsample_seed),
        _ => Ok(all),
    }
}

/// The codebook used by run `seed`.
pub fn codebook(cfg: &ExperimentConfig, seed: u64) -> Result<Codebook> {
    let draw = cfg.codebook_seed.unwrap_or(seed);
    build_codebook_with_mode(&cfg.vocabulary()?, cfg.alphabet(), draw, cfg.codebook_mode)
}

fn split_for(cfg: &ExperimentConfig, seed: u64) -> Result<DatasetSplit> {
    split_dataset(&meaning_set(cfg)?, seed, cfg.test_fraction)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(&line)
            .map_err(|e| Error::Schema { path: path.to_path_buf(), detail: format!("line {}: {e}", i + 1) })?;
        out.push(v);
    }
    Ok(out)
}

struct JsonlWriter(BufWriter<File>);

impl JsonlWriter {
    fn create(path: &Path) -> Result<Self> {
        Ok(JsonlWriter(BufWriter::new(File::create(path)?)))
    }

    fn line<T: Serialize>(&mut self, value: &T) -> Result<()> {
        serde_json::to_writer(&mut self.0, value)?;
        self.0.write_all(b"\n")?;
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.0.flush()?;
        Ok(())
    }
}

fn corpus_metrics(corpus: &SignalCorpus, cfg: &ExperimentConfig, seed: u64) -> Result<CorpusMetrics> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ METRIC_STREAM);
    let mut su = [0.0; 3];
    for (n, slot) in su.iter_mut().enumerate() {
        *slot = signal_uniqueness(corpus, n + 1, cfg.su_sample_size, &mut rng, cfg.su_resamples)?;
    }
    let mut mean_length = BTreeMap::new();
    for g in LENGTH_GROUPS {
        if corpus.group(g).next().is_some() {
            mean_length.insert(g, mean_signal_length(corpus, g)?);
        }
    }
    Ok(CorpusMetrics { su, su_sample_size: cfg.su_sample_size, su_resamples: cfg.su_resamples, mean_length })
}

fn pa_profiles(receiver: &ReceiverParams, corpus: &SignalCorpus) -> Result<Vec<PaProfile>> {
    let mut out = Vec::new();
    for g in PA_GROUPS {
        let sub = corpus.subset(g);
        if sub.is_empty() {
            continue;
        }
        out.push(PaProfile { group: g, count: sub.len(), pa: predictive_ambiguity_profile(receiver, &sub)? });
    }
    Ok(out)
}

fn accuracy_on(receiver: &ReceiverParams, pairs: &[(Meaning, Signal)]) -> Result<f64> {
    let (targets, signals): (Vec<Meaning>, Vec<Signal>) = pairs.iter().cloned().unzip();
    exact_match_accuracy(&receiver.predict(&signals)?, &targets)
}

fn receiver_from(cfg: &ExperimentConfig, ck: &Checkpoint, prefix: &str) -> Result<ReceiverParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut r = ReceiverParams::new(&cfg.vocabulary()?, cfg.alphabet(), cfg.receiver_hidden, &mut rng);
    r.store.load(&ck.tensors, prefix)?;
    Ok(r)
}

fn load_corpus(dir: &Path, language: Option<Language>, provenance: &str) -> Result<SignalCorpus> {
    let path = dir.join(corpus_file(language));
    let corpus = SignalCorpus::read_csv(open(&path)?, provenance).map_err(|e| match e {
        Error::Parse(detail) => Error::Schema { path: path.clone(), detail },
        other => other,
    })?;
    if corpus.is_empty() {
        return Err(Error::EmptyInput(format!("corpus {} has no rows", path.display())));
    }
    Ok(corpus)
}

/// Recomputes a run's report from its stored artifacts.
pub fn analyze_run(dir: &Path) -> Result<Report> {
    let cfg = ExperimentConfig::load(&dir.join(CONFIG_FILE))?;
    let seed = match cfg.seeds.as_slice() {
        [s] => *s,
        _ => return Err(Error::Schema { path: dir.join(CONFIG_FILE), detail: "run config must hold one seed".into() }),
    };
    let ck = Checkpoint::load(&dir.join(CHECKPOINT_FILE))?;
    match cfg.experiment {
        ExperimentKind::Supervised => analyze_supervised(dir, &cfg, seed, &ck).map(Report::Supervised),
        ExperimentKind::Emergent => analyze_emergent(dir, &cfg, seed, &ck).map(Report::Emergent),
    }
}

fn analyze_supervised(dir: &Path, cfg: &ExperimentConfig, seed: u64, ck: &Checkpoint) -> Result<SupervisedReport> {
    let lines: Vec<EpochLine> = read_jsonl(&dir.join(STEPS_FILE))?;
    let split = split_for(cfg, seed)?;
    let pa_epoch = lines.iter().map(|l| l.epoch).max().unwrap_or(0);
    let mut languages = Vec::new();
    for &lang in &cfg.languages {
        let mine: Vec<&EpochLine> = lines.iter().filter(|l| l.language == lang).collect();
        let first_perfect_epoch = mine.iter().find(|l| l.test_acc == 1.0).map(|l| l.epoch);
        let receiver = receiver_from(cfg, ck, &format!("{lang}/"))?;
        let corpus = load_corpus(dir, Some(lang), lang.name())?;
        let test: std::collections::HashSet<Meaning> = split.test.iter().copied().collect();
        let test_pairs: Vec<(Meaning, Signal)> = corpus.pairs().into_iter().filter(|(m, _)| test.contains(m)).collect();
        languages.push(LanguageReport {
            language: lang,
            first_perfect_epoch,
            epochs_trained: mine.last().map_or(0, |l| l.epoch),
            final_test_accuracy: if test_pairs.is_empty() { 1.0 } else { accuracy_on(&receiver, &test_pairs)? },
            accuracy_all: accuracy_on(&receiver, &corpus.pairs())?,
            corpus: corpus_metrics(&corpus, cfg, seed)?,
            pa: pa_profiles(&receiver, &corpus)?,
        });
    }
    let all_perfect = languages.iter().all(|l| l.first_perfect_epoch.is_some());
    Ok(SupervisedReport { config_hash: cfg.hash(), seed, pa_epoch, all_perfect, languages })
}

fn analyze_emergent(dir: &Path, cfg: &ExperimentConfig, seed: u64, ck: &Checkpoint) -> Result<EmergentReport> {
    let lines: Vec<StepLine> = read_jsonl(&dir.join(STEPS_FILE))?;
    let split = split_for(cfg, seed)?;
    let receiver = receiver_from(cfg, ck, "receiver.")?;
    let corpus = load_corpus(dir, None, &format!("{}/{seed}", cfg.hash()))?;
    let by_meaning: BTreeMap<Meaning, Signal> = corpus.pairs().into_iter().collect();
    let pairs_for = |ms: &[Meaning]| -> Result<Vec<(Meaning, Signal)>> {
        ms.iter()
            .map(|m| {
                by_meaning
                    .get(m)
                    .map(|s| (*m, s.clone()))
                    .ok_or_else(|| Error::Schema { path: dir.join(corpus_file(None)), detail: format!("no signal for meaning {m}") })
            })
            .collect()
    };
    let steps = ck.meta.get("step").and_then(|v| v.as_u64()).unwrap_or(0);
    Ok(EmergentReport {
        config_hash: cfg.hash(),
        seed,
        condition: cfg.condition,
        alpha: cfg.alpha,
        steps,
        train_accuracy: accuracy_on(&receiver, &pairs_for(&split.train)?)?,
        test_accuracy: if split.test.is_empty() { 1.0 } else { accuracy_on(&receiver, &pairs_for(&split.test)?)? },
        corpus: corpus_metrics(&corpus, cfg, seed)?,
        pa: pa_profiles(&receiver, &corpus)?,
        final_step: lines.last().copied(),
    })
}

/// Runs or reruns one seed; returns the record of the finished run.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    let run_cfg = cfg.for_seed(seed);
    let dir = run_cfg.run_dir(seed);
    fs::create_dir_all(&dir)?;
    let _ = fs::remove_file(dir.join(FAILURE_FILE));
    fs::write(dir.join(CONFIG_FILE), run_cfg.to_json()? + "\n")?;
    let start = Instant::now();
    let trained = match cfg.experiment {
        ExperimentKind::Supervised => train_supervised(&run_cfg, seed, &dir),
        ExperimentKind::Emergent => train_emergent(&run_cfg, seed, &dir),
    };
    if let Err(e) = trained {
        write_json(&dir.join(FAILURE_FILE), &serde_json::json!({"kind": e.kind(), "message": e.to_string()}))?;
        return Err(e);
    }
    let report = analyze_run(&dir)?;
    fs::write(dir.join(REPORT_FILE), report.to_bytes())?;
    let record = RunRecord {
        config_hash: run_cfg.hash(),
        seed,
        steps_path: STEPS_FILE.into(),
        checkpoint_path: CHECKPOINT_FILE.into(),
        report_path: REPORT_FILE.into(),
        wall_clock_secs: start.elapsed().as_secs_f64(),
        code_version: env!("CARGO_PKG_VERSION").into(),
    };
    write_json(&dir.join(RECORD_FILE), &record)?;
    Ok(record)
}

/// Every configured seed in order; stops at the first failure.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    cfg.seeds.iter().map(|&s| run_seed(cfg, s)).collect()
}

pub fn run_supervised(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    if cfg.experiment != ExperimentKind::Supervised {
        return Err(Error::InvalidConfig("run_supervised needs a supervised config".into()));
    }
    run_experiment(cfg)
}

pub fn run_emergent(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    if cfg.experiment != ExperimentKind::Emergent {
        return Err(Error::InvalidConfig("run_emergent needs an emergent config".into()));
    }
    run_experiment(cfg)
}

fn rng_meta(rng: &ChaCha8Rng) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(rng)?)
}

struct LanguageState {
    language: Language,
    receiver: ReceiverParams,
    rng: ChaCha8Rng,
    train: Vec<(Meaning, Signal)>,
    test: Vec<(Meaning, Signal)>,
    first_perfect: Option<usize>,
}

fn train_supervised(cfg: &ExperimentConfig, seed: u64, dir: &Path) -> Result<()> {
    let vocab = cfg.vocabulary()?;
    let cb = codebook(cfg, seed)?;
    let meanings = meaning_set(cfg)?;
    let split = split_dataset(&meanings, seed, cfg.test_fraction)?;
    let adam = cfg.adam();
    let mut states = Vec::new();
    for &language in &cfg.languages {
        // Same initial weights for every language of a seed.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let receiver = ReceiverParams::new(&vocab, cfg.alphabet(), cfg.receiver_hidden, &mut rng);
        let corpus = SignalCorpus::new(generate_language(language, &meanings, &cb), language.name());
        let file = File::create(dir.join(corpus_file(Some(language))))?;
        corpus.write_csv(BufWriter::new(file))?;
        states.push(LanguageState {
            language,
            receiver,
            rng,
            train: generate_language(language, &split.train, &cb),
            test: generate_language(language, &split.test, &cb),
            first_perfect: None,
        });
    }
    let mut log = JsonlWriter::create(&dir.join(STEPS_FILE))?;
    let mut epoch = 0;
    while epoch < cfg.epochs {
        epoch += 1;
        for st in &mut states {
            st.train.shuffle(&mut st.rng);
            let (mut loss, mut acc) = (0.0, 0.0);
            for chunk in st.train.chunks(cfg.batch_size) {
                let m = train_step_supervised(chunk, &mut st.receiver, cfg.lr, &adam).map_err(|e| match e {
                    Error::NonFinite(op) => Error::Diverged { step: epoch, detail: format!("{}: non-finite {op}", st.language) },
                    other => other,
                })?;
                loss += m.loss * chunk.len() as f64;
                acc += m.acc * chunk.len() as f64;
            }
            let n = st.train.len() as f64;
            let test_acc = if st.test.is_empty() { 1.0 } else { accuracy_on(&st.receiver, &st.test)? };
            if test_acc == 1.0 && st.first_perfect.is_none() {
                st.first_perfect = Some(epoch);
            }
            log.line(&EpochLine { language: st.language, epoch, loss: loss / n, train_acc: acc / n, test_acc })?;
        }
        if cfg.stop_when_perfect && states.iter().all(|s| s.first_perfect.is_some()) {
            break;
        }
    }
    log.finish()?;
    let mut ck = Checkpoint {
        meta: serde_json::json!({"experiment": "supervised", "epoch": epoch}),
        ..Default::default()
    };
    let mut rngs = serde_json::Map::new();
    for st in &states {
        st.receiver.store.export(&format!("{}/", st.language), &mut ck.tensors);
        rngs.insert(st.language.name().into(), rng_meta(&st.rng)?);
    }
    ck.meta["rng"] = serde_json::Value::Object(rngs);
    ck.save(&dir.join(CHECKPOINT_FILE))
}

fn train_emergent(cfg: &ExperimentConfig, seed: u64, dir: &Path) -> Result<()> {
    let vocab = cfg.vocabulary()?;
    let meanings = meaning_set(cfg)?;
    let split = split_dataset(&meanings, seed, cfg.test_fraction)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sender = SenderParams::new(&vocab, cfg.alphabet(), cfg.sender_hidden, &mut rng);
    let mut receiver = ReceiverParams::new(&vocab, cfg.alphabet(), cfg.receiver_hidden, &mut rng);
    let mut baseline = Baseline::with_window(cfg.baseline_window);
    let hyper = EmergentHyper {
        lr: cfg.lr,
        alpha: cfg.alpha,
        entropy_coeff: cfg.entropy_coeff,
        max_len: cfg.max_len,
        adam: cfg.adam(),
    };
    let mut log = JsonlWriter::create(&dir.join(STEPS_FILE))?;
    for step in 1..=cfg.interactions {
        let batch = sample_batch(&split, &mut rng, cfg.batch_size);
        let m = train_step_emergent(&batch, &mut sender, &mut receiver, &mut baseline, &hyper, &mut rng).map_err(|e| match e {
            Error::NonFinite(op) => Error::Diverged { step, detail: format!("non-finite {op}") },
            other => other,
        })?;
        if step % cfg.log_every == 0 || step == cfg.interactions {
            log.line(&m)?;
        }
    }
    log.finish()?;

    let signals = sender.speak(&meanings, cfg.max_len, &mut rng)?;
    let corpus = SignalCorpus::new(meanings.into_iter().zip(signals).collect(), format!("{}/{seed}", cfg.hash()));
    corpus.write_csv(BufWriter::new(File::create(dir.join(corpus_file(None)))?))?;

    let mut ck = Checkpoint {
        meta: serde_json::json!({
            "experiment": "emergent",
            "step": sender.store.step,
            "baseline": baseline,
            "rng": rng_meta(&rng)?,
        }),
        ..Default::default()
    };
    sender.store.export("sender.", &mut ck.tensors);
    receiver.store.export("receiver.", &mut ck.tensors);
    ck.save(&dir.join(CHECKPOINT_FILE))
}

/// Writes `<language>.csv` for each language plus `codebook.json` into `out`,
/// using the codebook of the first configured seed.
pub fn write_languages(cfg: &ExperimentConfig, languages: &[Language], out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let cb = codebook(cfg, cfg.seeds[0])?;
    let meanings = meaning_set(cfg)?;
    let mut written = Vec::new();
    for &lang in languages {
        let path = out.join(format!("{lang}.csv"));
        let corpus = SignalCorpus::new(generate_language(lang, &meanings, &cb), lang.name());
        corpus.write_csv(BufWriter::new(File::create(&path)?))?;
        written.push(path);
    }
    let cb_path = out.join("codebook.json");
    let file = serde_json::json!({"vocabulary": cfg.vocabulary()?, "codebook": cb});
    write_json(&cb_path, &file)?;
    written.push(cb_path);
    Ok(written)
}

/// Corpus-only metrics for a language dump (no Receiver needed).
pub fn analyze_corpus(path: &Path, cfg: &ExperimentConfig, seed: u64) -> Result<CorpusMetrics> {
    let corpus = SignalCorpus::read_csv(open(path)?, path.display().to_string())?;
    if corpus.is_empty() {
        return Err(Error::EmptyInput(format!("corpus {} has no rows", path.display())));
    }
    corpus_metrics(&corpus, cfg, seed)
}
