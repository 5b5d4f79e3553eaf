use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::handcrafted::{read_language_csv, write_language_csv, Signal};
use crate::meanings::{classify_redundancy, Meaning, RedundancyClass};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub meaning: Meaning,
    pub signal: Signal,
    pub class: RedundancyClass,
}

/// Meaning/signal pairs with their redundancy labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalCorpus {
    pub entries: Vec<CorpusEntry>,
    pub provenance: String,
}

/// Meaning groups used for lengths and reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeaningGroup {
    All,
    NonRedundant,
    RedundantSubject,
    RedundantVerb,
    /// Either partially redundant class.
    Partial,
    Full,
    /// Any redundant class.
    Redundant,
}

impl MeaningGroup {
    pub fn contains(self, class: RedundancyClass) -> bool {
        match self {
            MeaningGroup::All => true,
            MeaningGroup::NonRedundant => class == RedundancyClass::NonRedundant,
            MeaningGroup::RedundantSubject => class == RedundancyClass::RedundantSubject,
            MeaningGroup::RedundantVerb => class == RedundancyClass::RedundantVerb,
            MeaningGroup::Partial => class.is_partial(),
            MeaningGroup::Full => class == RedundancyClass::FullyRedundant,
            MeaningGroup::Redundant => class.is_redundant(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MeaningGroup::All => "all",
            MeaningGroup::NonRedundant => "non_redundant",
            MeaningGroup::RedundantSubject => "redundant_subject",
            MeaningGroup::RedundantVerb => "redundant_verb",
            MeaningGroup::Partial => "partial",
            MeaningGroup::Full => "full",
            MeaningGroup::Redundant => "redundant",
        }
    }
}

impl SignalCorpus {
    pub fn new(pairs: Vec<(Meaning, Signal)>, provenance: impl Into<String>) -> Self {
        let entries = pairs
            .into_iter()
            .map(|(meaning, signal)| CorpusEntry { class: classify_redundancy(&meaning), meaning, signal })
            .collect();
        SignalCorpus { entries, provenance: provenance.into() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Checks that every label agrees with its meaning.
    pub fn validate(&self) -> Result<()> {
        for e in &self.entries {
            if classify_redundancy(&e.meaning) != e.class {
                return Err(Error::InvalidMeaning(format!("meaning {} is labelled {:?}", e.meaning, e.class)));
            }
        }
        Ok(())
    }

    pub fn group(&self, group: MeaningGroup) -> impl Iterator<Item = &CorpusEntry> {
        self.entries.iter().filter(move |e| group.contains(e.class))
    }

    pub fn subset(&self, group: MeaningGroup) -> SignalCorpus {
        SignalCorpus {
            entries: self.group(group).cloned().collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn meanings(&self) -> Vec<Meaning> {
        self.entries.iter().map(|e| e.meaning).collect()
    }

    pub fn signals(&self) -> Vec<Signal> {
        self.entries.iter().map(|e| e.signal.clone()).collect()
    }

    pub fn pairs(&self) -> Vec<(Meaning, Signal)> {
        self.entries.iter().map(|e| (e.meaning, e.signal.clone())).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_language_csv(w, &self.pairs())
    }

    pub fn read_csv<R: Read>(r: R, provenance: impl Into<String>) -> Result<Self> {
        Ok(SignalCorpus::new(read_language_csv(r)?, provenance))
    }
}
