use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::handcrafted::{Alphabet, CodebookMode, Language};
use crate::meanings::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Supervised,
    Emergent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Control,
    Efficiency,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::Control => "control",
            Condition::Efficiency => "efficiency",
        }
    }

    /// Length-cost weight paired with each condition by default.
    pub fn default_alpha(self) -> f64 {
        match self {
            Condition::Control => 0.0,
            Condition::Efficiency => 0.15,
        }
    }
}

impl std::str::FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "control" => Ok(Condition::Control),
            "efficiency" | "+efficiency" => Ok(Condition::Efficiency),
            _ => Err(Error::Parse(format!("unknown condition {s:?}"))),
        }
    }
}

/// Every hyperparameter of an experiment. Files may omit keys; loading fills
/// them from the defaults for the experiment kind and the stored copy is
/// always complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Name of the summary file under `summary/`.
    pub name: String,
    pub n_subjects: usize,
    pub n_verbs: usize,
    /// Seeded subsample of the meaning space; `null` keeps every meaning.
    pub subsample_size: Option<usize>,
    pub subsample_seed: u64,
    pub test_fraction: f64,
    pub alphabet_size: usize,
    pub codebook_mode: CodebookMode,
    /// Codebook draw; `null` draws a fresh codebook from each run seed.
    pub codebook_seed: Option<u64>,
    /// Languages trained side by side in a supervised run.
    pub languages: Vec<Language>,
    pub condition: Condition,
    pub alpha: f64,
    pub max_len: usize,
    pub sender_hidden: usize,
    pub receiver_hidden: usize,
    pub lr: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    /// Emergent training steps.
    pub interactions: usize,
    /// Supervised epoch budget.
    pub epochs: usize,
    /// Supervised runs stop once every language has reached perfect test accuracy.
    pub stop_when_perfect: bool,
    pub entropy_coeff: f64,
    /// Costs the REINFORCE baseline averages over; `null` averages all of them.
    pub baseline_window: Option<u64>,
    /// Emergent steps between log lines.
    pub log_every: usize,
    pub seeds: Vec<u64>,
    pub su_sample_size: usize,
    pub su_resamples: usize,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn supervised() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::Supervised,
            name: "supervised".into(),
            n_subjects: 15,
            n_verbs: 15,
            subsample_size: Some(20_000),
            subsample_seed: 0,
            test_fraction: 0.1,
            alphabet_size: 26,
            codebook_mode: CodebookMode::PrefixFree,
            codebook_seed: None,
            languages: Language::ALL.to_vec(),
            condition: Condition::Control,
            alpha: 0.0,
            max_len: 10,
            sender_hidden: 250,
            receiver_hidden: 64,
            lr: 5e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 32,
            interactions: 3000,
            epochs: 50,
            stop_when_perfect: true,
            entropy_coeff: 0.01,
            baseline_window: None,
            log_every: 10,
            seeds: (0..10).collect(),
            su_sample_size: 250,
            su_resamples: 20,
            out_dir: PathBuf::from("out"),
        }
    }

    pub fn emergent(condition: Condition) -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::Emergent,
            name: "emergent".into(),
            condition,
            alpha: condition.default_alpha(),
            receiver_hidden: 250,
            lr: 1e-3,
            batch_size: 512,
            ..Self::supervised()
        }
    }

    pub fn default_for(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::Supervised => Self::supervised(),
            ExperimentKind::Emergent => Self::emergent(Condition::Control),
        }
    }

    /// Fills missing keys from the defaults of the declared kind.
    pub fn from_value(value: Value) -> Result<Self> {
        let Value::Object(map) = value else {
            return Err(Error::InvalidConfig("config must be a JSON object".into()));
        };
        let kind: ExperimentKind = match map.get("experiment") {
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|e| Error::InvalidConfig(format!("experiment: {e}")))?,
            None => return Err(Error::InvalidConfig("missing key \"experiment\"".into())),
        };
        let mut base = Self::default_for(kind);
        if kind == ExperimentKind::Emergent {
            if let Some(c) = map.get("condition") {
                let c: Condition =
                    serde_json::from_value(c.clone()).map_err(|e| Error::InvalidConfig(format!("condition: {e}")))?;
                base = Self::emergent(c);
            }
        }
        let Value::Object(mut merged) = serde_json::to_value(&base)? else { unreachable!("config serializes to an object") };
        merged.extend(map);
        let cfg: ExperimentConfig =
            serde_json::from_value(Value::Object(merged)).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Self::from_value(value)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_json(&text).map_err(|e| match e {
            Error::InvalidConfig(detail) => Error::Schema { path: path.to_path_buf(), detail },
            other => other,
        })
    }

    /// Pretty JSON with every key present.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Applies `key=value` overrides; values parse as JSON, else as strings.
    pub fn with_overrides<'a>(&self, overrides: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let Value::Object(mut map) = serde_json::to_value(self)? else { unreachable!("config serializes to an object") };
        for (k, v) in overrides {
            if !map.contains_key(k) {
                return Err(Error::InvalidConfig(format!("unknown config key {k:?}")));
            }
            let parsed = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
            map.insert(k.to_string(), parsed);
        }
        let cfg: ExperimentConfig = serde_json::from_value(Value::Object(map)).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if (self.alpha == 0.0) != (self.condition == Condition::Control) {
            return bad(format!("alpha {} does not match condition {}", self.alpha, self.condition.name()));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be a finite non-negative number, got {}", self.alpha));
        }
        if self.n_subjects == 0 || self.n_verbs == 0 {
            return bad("vocabulary sizes must be positive".into());
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return bad(format!("test_fraction {} not in [0, 1)", self.test_fraction));
        }
        if self.alphabet_size < 2 || self.max_len == 0 {
            return bad("alphabet_size must be at least 2 and max_len at least 1".into());
        }
        if self.sender_hidden == 0 || self.receiver_hidden == 0 || self.batch_size == 0 {
            return bad("hidden sizes and batch_size must be positive".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.experiment == ExperimentKind::Supervised && self.languages.is_empty() {
            return bad("a supervised experiment needs at least one language".into());
        }
        if self.log_every == 0 || self.su_sample_size == 0 || self.su_resamples == 0 {
            return bad("log_every, su_sample_size and su_resamples must be positive".into());
        }
        if let Some(n) = self.subsample_size {
            let space = self.vocabulary()?.space_size();
            if n == 0 || n > space {
                return bad(format!("subsample_size {n} outside 1..={space}"));
            }
        }
        Ok(())
    }

    pub fn vocabulary(&self) -> Result<Vocabulary> {
        Vocabulary::new(self.n_subjects, self.n_verbs)
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.alphabet_size)
    }

    pub fn adam(&self) -> crate::neural::AdamConfig {
        crate::neural::AdamConfig { beta1: self.adam_beta1, beta2: self.adam_beta2, eps: self.adam_eps }
    }

    /// Copy restricted to one seed, as stored next to each run.
    pub fn for_seed(&self, seed: u64) -> Self {
        ExperimentConfig { seeds: vec![seed], ..self.clone() }
    }

    /// Hex SHA-256 prefix of the config with `seeds` and `out_dir` blanked,
    /// so every seed of one experiment shares a directory.
    pub fn hash(&self) -> String {
        let identity = ExperimentConfig { seeds: Vec::new(), out_dir: PathBuf::new(), ..self.clone() };
        let bytes = serde_json::to_vec(&identity).expect("config serializes");
        hex::encode(&Sha256::digest(&bytes)[..8])
    }

    pub fn run_dir(&self, seed: u64) -> PathBuf {
        self.out_dir.join("runs").join(self.hash()).join(seed.to_string())
    }
}
