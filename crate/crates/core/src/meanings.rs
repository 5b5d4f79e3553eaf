//! Meaning space: five-role conjoined sentences, their redundancy classes,
//! one-hot encoding and seeded train/test splits.

use std::fmt;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentence positions, in signal order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Subj1,
    Verb1,
    Conj,
    Subj2,
    Verb2,
}

impl Role {
    pub const ALL: [Role; 5] = [Role::Subj1, Role::Verb1, Role::Conj, Role::Subj2, Role::Verb2];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Subj1 => "subj1",
            Role::Verb1 => "verb1",
            Role::Conj => "conj",
            Role::Subj2 => "subj2",
            Role::Verb2 => "verb2",
        }
    }
}

/// Per-role word inventories. Subject roles share one inventory, verb roles
/// share another, and the conjunction inventory always holds a single word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub subjects: Vec<String>,
    pub verbs: Vec<String>,
    pub conj: Vec<String>,
}

impl Vocabulary {
    /// Vocabulary with generated display names (`s0..`, `v0..`, `and`).
    pub fn new(n_subjects: usize, n_verbs: usize) -> Result<Self> {
        let vocab = Vocabulary {
            subjects: (0..n_subjects).map(|i| format!("s{i}")).collect(),
            verbs: (0..n_verbs).map(|i| format!("v{i}")).collect(),
            conj: vec!["and".to_string()],
        };
        vocab.validate()?;
        Ok(vocab)
    }

    pub fn validate(&self) -> Result<()> {
        if self.subjects.is_empty() || self.verbs.is_empty() {
            return Err(Error::InvalidVocabulary("subject and verb inventories must be non-empty".into()));
        }
        if self.conj.len() != 1 {
            return Err(Error::InvalidVocabulary(format!(
                "conjunction inventory must hold exactly one word, got {}",
                self.conj.len()
            )));
        }
        Ok(())
    }

    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn n_verbs(&self) -> usize {
        self.verbs.len()
    }

    /// Inventory size for a role.
    pub fn role_size(&self, role: Role) -> usize {
        match role {
            Role::Subj1 | Role::Subj2 => self.subjects.len(),
            Role::Verb1 | Role::Verb2 => self.verbs.len(),
            Role::Conj => 1,
        }
    }

    /// `(offset, len)` of each role's block in a [`MeaningVector`].
    pub fn blocks(&self) -> [(usize, usize); 5] {
        let mut out = [(0, 0); 5];
        let mut offset = 0;
        for role in Role::ALL {
            let len = self.role_size(role);
            out[role.index()] = (offset, len);
            offset += len;
        }
        out
    }

    /// Length of the flat one-hot encoding.
    pub fn vector_len(&self) -> usize {
        2 * self.subjects.len() + 2 * self.verbs.len() + 1
    }

    /// Number of meanings in the full cross product.
    pub fn space_size(&self) -> usize {
        let s = self.subjects.len();
        let v = self.verbs.len();
        s * s * v * v
    }

    pub fn word(&self, role: Role, index: usize) -> &str {
        match role {
            Role::Subj1 | Role::Subj2 => &self.subjects[index],
            Role::Verb1 | Role::Verb2 => &self.verbs[index],
            Role::Conj => &self.conj[index],
        }
    }
}

/// One word index per role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Meaning(pub [usize; 5]);

impl Meaning {
    pub fn new(subj1: usize, verb1: usize, subj2: usize, verb2: usize) -> Self {
        Meaning([subj1, verb1, 0, subj2, verb2])
    }

    pub fn get(&self, role: Role) -> usize {
        self.0[role.index()]
    }

    pub fn validate(&self, vocab: &Vocabulary) -> Result<()> {
        for role in Role::ALL {
            if self.get(role) >= vocab.role_size(role) {
                return Err(Error::InvalidMeaning(format!(
                    "{} index {} out of range for inventory of {}",
                    role.name(),
                    self.get(role),
                    vocab.role_size(role)
                )));
            }
        }
        Ok(())
    }

    pub fn redundancy(&self) -> RedundancyClass {
        classify_redundancy(self)
    }

    pub fn render(&self, vocab: &Vocabulary) -> String {
        Role::ALL
            .iter()
            .map(|&r| vocab.word(r, self.get(r)))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for Meaning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d, e] = self.0;
        write!(f, "{a},{b},{c},{d},{e}")
    }
}

impl FromStr for Meaning {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(',').collect();
        if parts.len() != 5 {
            return Err(Error::Parse(format!("meaning needs 5 comma-separated integers: {s:?}")));
        }
        let mut out = [0usize; 5];
        for (slot, part) in out.iter_mut().zip(&parts) {
            *slot = part
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad meaning field {part:?}")))?;
        }
        Ok(Meaning(out))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RedundancyClass {
    NonRedundant,
    RedundantSubject,
    RedundantVerb,
    FullyRedundant,
}

impl RedundancyClass {
    pub const ALL: [RedundancyClass; 4] = [
        RedundancyClass::NonRedundant,
        RedundancyClass::RedundantSubject,
        RedundancyClass::RedundantVerb,
        RedundancyClass::FullyRedundant,
    ];

    pub fn is_redundant(self) -> bool {
        self != RedundancyClass::NonRedundant
    }

    pub fn is_partial(self) -> bool {
        matches!(self, RedundancyClass::RedundantSubject | RedundancyClass::RedundantVerb)
    }

    pub fn label(self) -> &'static str {
        match self {
            RedundancyClass::NonRedundant => "non_redundant",
            RedundancyClass::RedundantSubject => "redundant_subject",
            RedundancyClass::RedundantVerb => "redundant_verb",
            RedundancyClass::FullyRedundant => "fully_redundant",
        }
    }
}

impl FromStr for RedundancyClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RedundancyClass::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| Error::Parse(format!("unknown redundancy class {s:?}")))
    }
}

pub fn classify_redundancy(m: &Meaning) -> RedundancyClass {
    let same_subj = m.get(Role::Subj1) == m.get(Role::Subj2);
    let same_verb = m.get(Role::Verb1) == m.get(Role::Verb2);
    match (same_subj, same_verb) {
        (true, true) => RedundancyClass::FullyRedundant,
        (true, false) => RedundancyClass::RedundantSubject,
        (false, true) => RedundancyClass::RedundantVerb,
        (false, false) => RedundancyClass::NonRedundant,
    }
}

/// Full cross product, lexicographic by role position.
pub fn enumerate_meanings(vocab: &Vocabulary) -> Vec<Meaning> {
    let (s, v) = (vocab.n_subjects(), vocab.n_verbs());
    let mut out = Vec::with_capacity(vocab.space_size());
    for s1 in 0..s {
        for v1 in 0..v {
            for s2 in 0..s {
                for v2 in 0..v {
                    out.push(Meaning::new(s1, v1, s2, v2));
                }
            }
        }
    }
    out
}

/// Uniform seeded subsample of `size` meanings, returned in canonical order.
pub fn subsample_meanings(meanings: &[Meaning], size: usize, seed: u64) -> Result<Vec<Meaning>> {
    if size > meanings.len() {
        return Err(Error::InvalidConfig(format!(
            "subsample_size {size} exceeds meaning space of {}",
            meanings.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<Meaning> = meanings.choose_multiple(&mut rng, size).copied().collect();
    picked.sort();
    Ok(picked)
}

/// Flat concatenation of one-hot role blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct MeaningVector(pub Vec<f64>);

pub fn encode_meaning(m: &Meaning, vocab: &Vocabulary) -> MeaningVector {
    let mut out = vec![0.0; vocab.vector_len()];
    for (role, (offset, _)) in Role::ALL.iter().zip(vocab.blocks()) {
        out[offset + m.get(*role)] = 1.0;
    }
    MeaningVector(out)
}

/// Argmax of each block.
pub fn decode_meaning(v: &MeaningVector, vocab: &Vocabulary) -> Meaning {
    decode_blocks(&v.0, vocab)
}

/// Per-block argmax over any row laid out like a [`MeaningVector`]
/// (one-hot vectors, logits, probabilities). Ties go to the lowest index.
pub fn decode_blocks(row: &[f64], vocab: &Vocabulary) -> Meaning {
    let mut out = [0usize; 5];
    for (slot, (offset, len)) in out.iter_mut().zip(vocab.blocks()) {
        let block = &row[offset..offset + len];
        let mut best = 0;
        for (i, &x) in block.iter().enumerate() {
            if x > block[best] {
                best = i;
            }
        }
        *slot = best;
    }
    Meaning(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<Meaning>,
    pub test: Vec<Meaning>,
    pub seed: u64,
}

/// Seeded shuffle, then the first `round(n * test_fraction)` items go to test.
pub fn split_dataset(meanings: &[Meaning], seed: u64, test_fraction: f64) -> Result<DatasetSplit> {
    if meanings.is_empty() {
        return Err(Error::EmptyInput("cannot split an empty meaning list".into()));
    }
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidConfig(format!("test_fraction {test_fraction} not in [0, 1)")));
    }
    let mut shuffled = meanings.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let n_test = ((meanings.len() as f64) * test_fraction).round() as usize;
    let n_test = n_test.min(meanings.len() - 1);
    let train = shuffled.split_off(n_test);
    Ok(DatasetSplit { train, test: shuffled, seed })
}

/// With-replacement uniform draws from the train set.
pub fn sample_batch<R: Rng + ?Sized>(split: &DatasetSplit, rng: &mut R, batch_size: usize) -> Vec<Meaning> {
    assert!(batch_size >= 1, "batch_size must be at least 1");
    (0..batch_size)
        .map(|_| split.train[rng.random_range(0..split.train.len())])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashMap, HashSet};

    fn vocab(s: usize, v: usize) -> Vocabulary {
        Vocabulary::new(s, v).unwrap()
    }

    #[test]
    fn space_sizes() {
        assert_eq!(enumerate_meanings(&vocab(15, 15)).len(), 50_625);
        assert_eq!(enumerate_meanings(&vocab(1, 1)).len(), 1);
        let small = enumerate_meanings(&vocab(2, 3));
        assert_eq!(small.len(), 36);
        assert_eq!(small[0], Meaning([0, 0, 0, 0, 0]));
        assert!(small.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn paper_sentences_classify() {
        let mut v = Vocabulary::new(2, 2).unwrap();
        v.subjects = vec!["John".into(), "Mary".into()];
        v.verbs = vec!["walks".into(), "smiles".into()];
        let john_mary = Meaning::new(0, 0, 1, 1);
        assert_eq!(john_mary.render(&v), "John walks and Mary smiles");
        assert_eq!(classify_redundancy(&john_mary), RedundancyClass::NonRedundant);
        assert_eq!(classify_redundancy(&Meaning::new(1, 0, 1, 1)), RedundancyClass::RedundantSubject);
        assert_eq!(classify_redundancy(&Meaning::new(0, 1, 1, 1)), RedundancyClass::RedundantVerb);
        assert_eq!(classify_redundancy(&Meaning::new(1, 1, 1, 1)), RedundancyClass::FullyRedundant);
    }

    #[test]
    fn class_counts_partition_space() {
        let mut counts: HashMap<RedundancyClass, usize> = HashMap::new();
        for m in enumerate_meanings(&vocab(15, 15)) {
            *counts.entry(classify_redundancy(&m)).or_default() += 1;
        }
        assert_eq!(counts[&RedundancyClass::FullyRedundant], 225);
        assert_eq!(counts[&RedundancyClass::RedundantSubject], 3_150);
        assert_eq!(counts[&RedundancyClass::RedundantVerb], 3_150);
        assert_eq!(counts[&RedundancyClass::NonRedundant], 44_100);
        assert_eq!(counts.values().sum::<usize>(), 50_625);
    }

    #[test]
    fn encode_example() {
        let v = vocab(2, 2);
        let enc = encode_meaning(&Meaning([1, 0, 0, 0, 1]), &v);
        assert_eq!(enc.0, vec![0., 1., 1., 0., 1., 1., 0., 0., 1.]);
        assert_eq!(enc.0.iter().sum::<f64>(), 5.0);
    }

    #[test]
    fn round_trip_is_identity_on_small_spaces() {
        for s in 1..=5 {
            for v in 1..=5 {
                let voc = vocab(s, v);
                for m in enumerate_meanings(&voc) {
                    let enc = encode_meaning(&m, &voc);
                    for (offset, len) in voc.blocks() {
                        assert_eq!(enc.0[offset..offset + len].iter().sum::<f64>(), 1.0);
                    }
                    assert_eq!(decode_meaning(&enc, &voc), m);
                }
            }
        }
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ms = enumerate_meanings(&vocab(2, 5));
        assert_eq!(ms.len(), 100);
        let a = split_dataset(&ms, 7, 0.1).unwrap();
        assert_eq!((a.train.len(), a.test.len()), (90, 10));
        assert_eq!(a, split_dataset(&ms, 7, 0.1).unwrap());
        let train: HashSet<_> = a.train.iter().collect();
        assert!(a.test.iter().all(|m| !train.contains(m)));
        let all = split_dataset(&ms, 7, 0.0).unwrap();
        assert_eq!(all.train.len(), 100);
        assert!(all.test.is_empty());
        assert!(split_dataset(&[], 0, 0.1).is_err());
        assert!(split_dataset(&ms, 0, 1.0).is_err());
    }

    #[test]
    fn sample_batch_uniform() {
        let ms = enumerate_meanings(&vocab(1, 2));
        assert_eq!(ms.len(), 4);
        let split = DatasetSplit { train: ms.clone(), test: vec![], seed: 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = sample_batch(&split, &mut rng, 1_000_000);
        for m in &ms {
            let freq = draws.iter().filter(|d| *d == m).count() as f64 / 1e6;
            assert!((freq - 0.25).abs() < 0.01, "freq {freq}");
        }
        let one = DatasetSplit { train: vec![ms[2]], test: vec![], seed: 0 };
        assert_eq!(sample_batch(&one, &mut rng, 1), vec![ms[2]]);
        let mut r1 = ChaCha8Rng::seed_from_u64(11);
        let mut r2 = ChaCha8Rng::seed_from_u64(11);
        assert_eq!(sample_batch(&split, &mut r1, 64), sample_batch(&split, &mut r2, 64));
    }

    #[test]
    fn meaning_text_round_trip() {
        let m = Meaning([3, 1, 0, 2, 4]);
        assert_eq!(m.to_string(), "3,1,0,2,4");
        assert_eq!("3,1,0,2,4".parse::<Meaning>().unwrap(), m);
        assert!("1,2,3".parse::<Meaning>().is_err());
    }

    #[test]
    fn subsample_is_seeded_and_sorted() {
        let ms = enumerate_meanings(&vocab(15, 15));
        let a = subsample_meanings(&ms, 20_000, 1).unwrap();
        assert_eq!(a.len(), 20_000);
        assert_eq!(a, subsample_meanings(&ms, 20_000, 1).unwrap());
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(subsample_meanings(&ms, 60_000, 1).is_err());
    }
}
