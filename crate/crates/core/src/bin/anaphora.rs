use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anaphora_core::handcrafted::Language;
use anaphora_core::harness::{self, Condition, ExperimentConfig, ExperimentKind};
use anaphora_core::{Error, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "anaphora", version, about = "Anaphora learnability and emergence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write handcrafted language dumps and their codebook.
    GenLanguage(Common),
    /// Supervised Receiver training on handcrafted languages.
    TrainReceiver(Common),
    /// Sender/Receiver signalling game.
    TrainAgents(Common),
    /// Recompute metrics from stored artifacts.
    Analyze {
        /// Run directory holding config.json, steps.jsonl and checkpoint.bin.
        run_dir: Option<PathBuf>,
        /// Corpus CSV to measure instead of a run (signal metrics only).
        #[arg(long, conflicts_with = "run_dir")]
        corpus: Option<PathBuf>,
        /// Also rewrite report.json in the run directory.
        #[arg(long)]
        write: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Aggregate every run under --out into summary tables and figure data.
    Report(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config file; missing keys take the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run this seed only.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_condition)]
    condition: Option<Condition>,
    #[arg(long, value_parser = parse_language)]
    language: Option<Language>,
    /// Output root.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config override, `key=value` with a JSON value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn parse_condition(s: &str) -> std::result::Result<Condition, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_language(s: &str) -> std::result::Result<Language, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn build_config(c: &Common, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default_for(kind),
    };
    if cfg.experiment != kind {
        return Err(Error::InvalidConfig(format!(
            "config describes a {:?} experiment but this verb runs {:?}",
            cfg.experiment, kind
        )));
    }
    let mut overrides: Vec<(String, String)> = Vec::new();
    if let Some(cond) = c.condition {
        overrides.push(("condition".into(), format!("\"{}\"", cond.name())));
        overrides.push(("alpha".into(), cond.default_alpha().to_string()));
    }
    if let Some(lang) = c.language {
        overrides.push(("languages".into(), format!("[\"{lang}\"]")));
    }
    if let Some(seed) = c.seed {
        overrides.push(("seeds".into(), format!("[{seed}]")));
    }
    if let Some(out) = &c.out {
        overrides.push(("out_dir".into(), serde_json::to_string(out)?));
    }
    for kv in &c.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("--set expects key=value, got {kv:?}")))?;
        overrides.push((k.trim().into(), v.trim().into()));
    }
    if !overrides.is_empty() {
        cfg = cfg.with_overrides(overrides.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    }
    Ok(cfg)
}

fn emit(bytes: &[u8]) -> Result<()> {
    // A closed pipe (e.g. `| head`) is not a failure of the command.
    match std::io::stdout().lock().write_all(bytes) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn print(value: &serde_json::Value) -> Result<()> {
    emit(format!("{}\n", serde_json::to_string_pretty(value)?).as_bytes())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenLanguage(c) => {
            let cfg = build_config(&c, ExperimentKind::Supervised)?;
            let paths = harness::write_languages(&cfg, &cfg.languages, &cfg.out_dir)?;
            print(&json!({ "written": paths }))
        }
        Command::TrainReceiver(c) => {
            let cfg = build_config(&c, ExperimentKind::Supervised)?;
            print(&json!({ "runs": harness::run_supervised(&cfg)? }))
        }
        Command::TrainAgents(c) => {
            let cfg = build_config(&c, ExperimentKind::Emergent)?;
            print(&json!({ "runs": harness::run_emergent(&cfg)? }))
        }
        Command::Analyze { run_dir, corpus, write, common } => match (run_dir, corpus) {
            (Some(dir), None) => {
                let report = harness::analyze_run(&dir)?;
                if write {
                    std::fs::write(dir.join(harness::run::REPORT_FILE), report.to_bytes())?;
                }
                emit(&report.to_bytes())
            }
            (None, Some(path)) => {
                let cfg = build_config(&common, ExperimentKind::Supervised)?;
                let seed = cfg.seeds[0];
                let metrics = harness::analyze_corpus(&path, &cfg, seed)?;
                emit(format!("{}\n", serde_json::to_string_pretty(&metrics)?).as_bytes())
            }
            _ => Err(Error::InvalidConfig("analyze needs a run directory or --corpus".into())),
        },
        Command::Report(c) => {
            let root = c.out.unwrap_or_else(|| PathBuf::from("out"));
            let reports = harness::collect_reports(&root)?;
            let (_, paths) = harness::write_summary(&root, &reports)?;
            print(&json!({ "reports": reports.len(), "written": paths }))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let body = json!({ "error": { "kind": "usage", "message": e.to_string().trim() } });
            eprintln!("{body}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": { "kind": e.kind(), "message": e.to_string() } }));
            ExitCode::FAILURE
        }
    }
}
