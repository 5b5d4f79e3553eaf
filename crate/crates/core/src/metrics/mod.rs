//! Anaphora measurements over signal corpora and trained Receivers.

mod corpus;
mod stats;

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use corpus::{CorpusEntry, MeaningGroup, SignalCorpus};
pub use stats::{ci95, two_sample_t, StatResult};

use crate::agents::{exact_match_accuracy, ReceiverParams};
use crate::error::{Error, Result};
use crate::handcrafted::{Signal, EOS};
use crate::meanings::Role;
use crate::neural::Graph;

/// Rows per Receiver forward pass.
const CHUNK: usize = 1024;

/// Set of contiguous symbol n-grams, EOS excluded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramSet {
    pub order: usize,
    pub grams: BTreeSet<Vec<usize>>,
}

impl NgramSet {
    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }
}

pub fn extract_ngrams<'a>(signals: impl IntoIterator<Item = &'a Signal>, n: usize) -> Result<NgramSet> {
    if n == 0 {
        return Err(Error::InvalidConfig("n-gram order must be at least 1".into()));
    }
    let mut grams = BTreeSet::new();
    for s in signals {
        for w in s.body().windows(n) {
            debug_assert!(!w.contains(&EOS));
            grams.insert(w.to_vec());
        }
    }
    Ok(NgramSet { order: n, grams })
}

/// `|a ∩ b| / |a ∪ b|`, and 1 when both are empty.
pub fn jaccard(a: &NgramSet, b: &NgramSet) -> Result<f64> {
    if a.order != b.order {
        return Err(Error::InvalidConfig(format!("jaccard of {}-grams with {}-grams", a.order, b.order)));
    }
    let inter = a.grams.intersection(&b.grams).count();
    let union = a.grams.len() + b.grams.len() - inter;
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Mean over `resamples` draws of `J(A, A′) − J(R, A)` where `A`, `A′` are
/// disjoint non-redundant samples and `R` a redundant sample, each of
/// `sample_size` signals.
pub fn signal_uniqueness<R: Rng + ?Sized>(
    corpus: &SignalCorpus,
    n: usize,
    sample_size: usize,
    rng: &mut R,
    resamples: usize,
) -> Result<f64> {
    if sample_size == 0 || resamples == 0 {
        return Err(Error::InvalidConfig("sample_size and resamples must be positive".into()));
    }
    let nonred: Vec<&Signal> = corpus.group(MeaningGroup::NonRedundant).map(|e| &e.signal).collect();
    let red: Vec<&Signal> = corpus.group(MeaningGroup::Redundant).map(|e| &e.signal).collect();
    if nonred.len() < 2 * sample_size || red.len() < sample_size {
        return Err(Error::InsufficientCorpus(format!(
            "need {} non-redundant and {} redundant signals, have {} and {}",
            2 * sample_size,
            sample_size,
            nonred.len(),
            red.len()
        )));
    }
    let mut total = 0.0;
    for _ in 0..resamples {
        let idx = rand::seq::index::sample(rng, nonred.len(), 2 * sample_size).into_vec();
        let a = extract_ngrams(idx[..sample_size].iter().map(|&i| nonred[i]), n)?;
        let b = extract_ngrams(idx[sample_size..].iter().map(|&i| nonred[i]), n)?;
        let ridx = rand::seq::index::sample(rng, red.len(), sample_size).into_vec();
        let r = extract_ngrams(ridx.iter().map(|&i| red[i]), n)?;
        total += jaccard(&a, &b)? - jaccard(&r, &a)?;
    }
    Ok(total / resamples as f64)
}

/// Mean effective length over a meaning group.
pub fn mean_signal_length(corpus: &SignalCorpus, group: MeaningGroup) -> Result<f64> {
    let lens: Vec<usize> = corpus.group(group).map(|e| e.signal.len()).collect();
    if lens.is_empty() {
        return Err(Error::EmptyInput(format!("no signals in group {}", group.name())));
    }
    Ok(lens.iter().sum::<usize>() as f64 / lens.len() as f64)
}

/// Shannon entropy in bits.
pub fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.log2()).sum::<f64>()
}

/// Mean per-role entropy (bits) of the Receiver's predictions, all five roles.
pub fn predictive_ambiguity_profile(receiver: &ReceiverParams, corpus: &SignalCorpus) -> Result<[f64; 5]> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("predictive ambiguity over an empty corpus".into()));
    }
    let blocks = receiver.vocab.blocks();
    let mut sums = [0.0; 5];
    let signals = corpus.signals();
    for chunk in signals.chunks(CHUNK) {
        let mut g = Graph::new();
        let lp = receiver.forward(&mut g, chunk)?;
        let v = g.value(lp);
        for r in 0..chunk.len() {
            let row = v.row(r);
            for (k, &(o, l)) in blocks.iter().enumerate() {
                let p: Vec<f64> = row[o..o + l].iter().map(|x| x.exp()).collect();
                sums[k] += entropy_bits(&p);
            }
        }
    }
    Ok(sums.map(|s| s / corpus.len() as f64))
}

pub fn predictive_ambiguity(receiver: &ReceiverParams, corpus: &SignalCorpus, role: Role) -> Result<f64> {
    Ok(predictive_ambiguity_profile(receiver, corpus)?[role.index()])
}

/// Exact five-role match rate under argmax decoding.
pub fn communicative_accuracy(receiver: &ReceiverParams, corpus: &SignalCorpus) -> Result<f64> {
    let predicted = receiver.predict(&corpus.signals())?;
    exact_match_accuracy(&predicted, &corpus.meanings())
}
