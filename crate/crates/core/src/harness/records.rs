use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::agents::EmergentStepMetrics;
use crate::handcrafted::Language;
use crate::harness::config::Condition;
use crate::metrics::MeaningGroup;

/// One line of a supervised `steps.jsonl`: a finished epoch for one language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLine {
    pub language: Language,
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
}

/// One line of an emergent `steps.jsonl`.
pub type StepLine = EmergentStepMetrics;

/// Mean per-role predictive ambiguity (bits) over one meaning group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaProfile {
    pub group: MeaningGroup,
    pub count: usize,
    /// Indexed by role position: subj1, verb1, conj, subj2, verb2.
    pub pa: [f64; 5],
}

/// Metrics computed from signals alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusMetrics {
    /// Signal uniqueness for n = 1, 2, 3.
    pub su: [f64; 3],
    pub su_sample_size: usize,
    pub su_resamples: usize,
    pub mean_length: BTreeMap<MeaningGroup, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageReport {
    pub language: Language,
    /// First epoch with perfect test accuracy; `None` if never reached.
    pub first_perfect_epoch: Option<usize>,
    pub epochs_trained: usize,
    pub final_test_accuracy: f64,
    pub accuracy_all: f64,
    pub corpus: CorpusMetrics,
    pub pa: Vec<PaProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisedReport {
    pub config_hash: String,
    pub seed: u64,
    /// Epoch at which the stored Receivers (and their PA) were taken.
    pub pa_epoch: usize,
    /// True when every language reached perfect test accuracy by `pa_epoch`.
    pub all_perfect: bool,
    pub languages: Vec<LanguageReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergentReport {
    pub config_hash: String,
    pub seed: u64,
    pub condition: Condition,
    pub alpha: f64,
    pub steps: u64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub corpus: CorpusMetrics,
    pub pa: Vec<PaProfile>,
    pub final_step: Option<StepLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Report {
    Supervised(SupervisedReport),
    Emergent(EmergentReport),
}

impl Report {
    pub fn config_hash(&self) -> &str {
        match self {
            Report::Supervised(r) => &r.config_hash,
            Report::Emergent(r) => &r.config_hash,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Report::Supervised(r) => r.seed,
            Report::Emergent(r) => r.seed,
        }
    }

    /// Canonical bytes written to `report.json`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("report serializes");
        out.push(b'\n');
        out
    }
}

/// Bookkeeping for one finished run; `report.json` holds the metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub steps_path: String,
    pub checkpoint_path: String,
    pub report_path: String,
    pub wall_clock_secs: f64,
    pub code_version: String,
}
