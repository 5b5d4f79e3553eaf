//! Handcrafted languages: codebooks mapping words to symbol strings, and the
//! three encoders (No Elision, Pronoun, Pro-drop).

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanings::{classify_redundancy, enumerate_meanings, Meaning, RedundancyClass, Role, Vocabulary};

/// End-of-signal symbol id.
pub const EOS: usize = 0;

/// `size` ordinary symbols with ids `1..=size`, plus [`EOS`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    pub size: usize,
}

impl Alphabet {
    pub fn new(size: usize) -> Self {
        Alphabet { size }
    }

    /// Distinct ids including EOS.
    pub fn total(&self) -> usize {
        self.size + 1
    }

    pub fn ordinary(&self) -> impl Iterator<Item = usize> {
        1..=self.size
    }

    pub fn contains(&self, symbol: usize) -> bool {
        symbol <= self.size
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Alphabet { size: 26 }
    }
}

/// A symbol sequence terminated by exactly one [`EOS`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Signal(Vec<usize>);

impl Signal {
    pub fn new(symbols: Vec<usize>) -> Result<Self> {
        match symbols.iter().position(|&s| s == EOS) {
            Some(p) if p + 1 == symbols.len() => Ok(Signal(symbols)),
            Some(_) => Err(Error::InvalidSignal(format!("EOS must be the final and only terminator: {symbols:?}"))),
            None => Err(Error::InvalidSignal(format!("missing EOS: {symbols:?}"))),
        }
    }

    /// Appends EOS to a body of ordinary symbols.
    pub fn from_body(body: &[usize]) -> Result<Self> {
        let mut v = body.to_vec();
        v.push(EOS);
        Signal::new(v)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    /// Symbols before EOS.
    pub fn body(&self) -> &[usize] {
        &self.0[..self.0.len() - 1]
    }

    /// Effective length, EOS excluded.
    pub fn len(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn check_alphabet(&self, alphabet: Alphabet) -> Result<()> {
        match self.0.iter().find(|&&s| !alphabet.contains(s)) {
            Some(s) => Err(Error::InvalidSignal(format!("symbol {s} outside alphabet of {}", alphabet.size))),
            None => Ok(()),
        }
    }
}

impl TryFrom<Vec<usize>> for Signal {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Signal::new(v)
    }
}

impl From<Signal> for Vec<usize> {
    fn from(s: Signal) -> Self {
        s.0
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

impl FromStr for Signal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let symbols = s
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad symbol {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Signal::new(symbols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookMode {
    /// No code is a prefix of another; anaphor symbols never occur in word codes.
    PrefixFree,
    /// Anaphor symbols reuse symbols of word codes; decodable by position only.
    Overlapping,
}

/// Word → symbol-string productions for every inventory, plus anaphor codes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codebook {
    pub mode: CodebookMode,
    pub alphabet: Alphabet,
    pub subjects: Vec<Vec<usize>>,
    pub verbs: Vec<Vec<usize>>,
    pub conj: Vec<usize>,
    pub pronoun: Vec<usize>,
    pub did_too: Vec<usize>,
}

/// Strictly prefix-free codebook. Three symbols are reserved (PRONOUN,
/// DIDTOO, conjunction lead) and never appear inside word codes; every word
/// gets a distinct 2-symbol code over the remaining symbols.
pub fn build_codebook(vocab: &Vocabulary, alphabet: Alphabet, seed: u64) -> Result<Codebook> {
    vocab.validate()?;
    let words = vocab.n_subjects() + vocab.n_verbs();
    let free = alphabet.size.saturating_sub(3);
    if alphabet.size < 3 || free * free < words {
        return Err(Error::AlphabetTooSmall { available: alphabet.size, required: words + 3 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut symbols: Vec<usize> = alphabet.ordinary().collect();
    symbols.shuffle(&mut rng);
    let (reserved, pool) = symbols.split_at(3);
    let mut pairs: Vec<Vec<usize>> = pool
        .iter()
        .flat_map(|&a| pool.iter().map(move |&b| vec![a, b]))
        .collect();
    pairs.shuffle(&mut rng);
    let verbs = pairs.split_off(pairs.len() - vocab.n_verbs());
    pairs.truncate(vocab.n_subjects());
    let conj_tail = *pool.choose(&mut rng).expect("pool is non-empty");
    let cb = Codebook {
        mode: CodebookMode::PrefixFree,
        alphabet,
        subjects: pairs,
        verbs,
        conj: vec![reserved[2], conj_tail],
        pronoun: vec![reserved[0]],
        did_too: vec![reserved[1]],
    };
    cb.validate(vocab)?;
    Ok(cb)
}

/// Codebook whose anaphor symbols are shared with word codes, the
/// construction used for signal-uniqueness reference values.
///
/// With `T = max(S, V)` tail symbols `2..=T+1`: subject `i` is `(1, 2+i)`,
/// verb `j` is `(T+2, 2+j)`, the conjunction is `(T+3, 2)`, PRONOUN is `1`
/// and DIDTOO is `2`. Needs `T + 3` ordinary symbols.
pub fn build_overlapping_codebook(vocab: &Vocabulary, alphabet: Alphabet) -> Result<Codebook> {
    vocab.validate()?;
    let tails = vocab.n_subjects().max(vocab.n_verbs());
    let required = tails + 3;
    if alphabet.size < required {
        return Err(Error::AlphabetTooSmall { available: alphabet.size, required });
    }
    let subject_lead = 1;
    let verb_lead = tails + 2;
    let conj_lead = tails + 3;
    let cb = Codebook {
        mode: CodebookMode::Overlapping,
        alphabet,
        subjects: (0..vocab.n_subjects()).map(|i| vec![subject_lead, 2 + i]).collect(),
        verbs: (0..vocab.n_verbs()).map(|j| vec![verb_lead, 2 + j]).collect(),
        conj: vec![conj_lead, 2],
        pronoun: vec![subject_lead],
        did_too: vec![2],
    };
    cb.validate(vocab)?;
    Ok(cb)
}

/// Dispatch on mode; `seed` only affects the prefix-free construction.
pub fn build_codebook_with_mode(vocab: &Vocabulary, alphabet: Alphabet, seed: u64, mode: CodebookMode) -> Result<Codebook> {
    match mode {
        CodebookMode::PrefixFree => build_codebook(vocab, alphabet, seed),
        CodebookMode::Overlapping => build_overlapping_codebook(vocab, alphabet),
    }
}

impl Codebook {
    fn all_codes(&self) -> impl Iterator<Item = (&'static str, &Vec<usize>)> {
        self.subjects
            .iter()
            .map(|c| ("subject", c))
            .chain(self.verbs.iter().map(|c| ("verb", c)))
            .chain([("conj", &self.conj), ("pronoun", &self.pronoun), ("did_too", &self.did_too)])
    }

    /// Structural checks plus injectivity of all three languages over the
    /// vocabulary's full meaning space.
    pub fn validate(&self, vocab: &Vocabulary) -> Result<()> {
        if self.subjects.len() != vocab.n_subjects() || self.verbs.len() != vocab.n_verbs() {
            return Err(Error::InvalidCodebook(format!(
                "codebook covers {} subjects / {} verbs, vocabulary has {} / {}",
                self.subjects.len(),
                self.verbs.len(),
                vocab.n_subjects(),
                vocab.n_verbs()
            )));
        }
        for (kind, code) in self.all_codes() {
            if code.is_empty() {
                return Err(Error::InvalidCodebook(format!("empty {kind} code")));
            }
            if let Some(&s) = code.iter().find(|&&s| s == EOS || !self.alphabet.contains(s)) {
                return Err(Error::InvalidCodebook(format!("{kind} code {code:?} uses invalid symbol {s}")));
            }
        }
        for (kind, inventory) in [("subject", &self.subjects), ("verb", &self.verbs)] {
            let distinct: HashSet<_> = inventory.iter().collect();
            if distinct.len() != inventory.len() {
                return Err(Error::InvalidCodebook(format!("duplicate {kind} codes")));
            }
        }
        if self.pronoun.len() != 1 || self.did_too.len() != 1 {
            return Err(Error::InvalidCodebook("anaphor codes must be single symbols".into()));
        }
        if self.mode == CodebookMode::PrefixFree {
            let codes: Vec<&Vec<usize>> = self.all_codes().map(|(_, c)| c).collect();
            for (i, a) in codes.iter().enumerate() {
                for (j, b) in codes.iter().enumerate() {
                    // subject and verb codes live in separate slots and may not
                    // collide, but equality between different inventories is
                    // ruled out by the prefix test as well
                    if i != j && b.starts_with(a) {
                        return Err(Error::InvalidCodebook(format!("code {a:?} is a prefix of {b:?}")));
                    }
                }
            }
            let anaphors = [self.pronoun[0], self.did_too[0]];
            if self.subjects.iter().chain(&self.verbs).any(|c| c.iter().any(|s| anaphors.contains(s))) {
                return Err(Error::InvalidCodebook("anaphor symbol used inside a word code".into()));
            }
        }
        for language in Language::ALL {
            let mut seen = HashSet::new();
            for m in enumerate_meanings(vocab) {
                if !seen.insert(encode(language, &m, self)) {
                    return Err(Error::InvalidCodebook(format!("{language} encoding is not injective (meaning {m})")));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parse and validate against `vocab`.
    pub fn from_json(text: &str, vocab: &Vocabulary) -> Result<Self> {
        let cb: Codebook = serde_json::from_str(text)?;
        cb.validate(vocab)?;
        Ok(cb)
    }

    pub fn word_code(&self, role: Role, word: usize) -> &[usize] {
        match role {
            Role::Subj1 | Role::Subj2 => &self.subjects[word],
            Role::Verb1 | Role::Verb2 => &self.verbs[word],
            Role::Conj => &self.conj,
        }
    }
}

/// A codebook bundled with the vocabulary it was built for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodebookFile {
    pub vocabulary: Vocabulary,
    pub codebook: Codebook,
}

impl CodebookFile {
    pub fn load(text: &str) -> Result<Self> {
        let file: CodebookFile = serde_json::from_str(text)?;
        file.vocabulary.validate()?;
        file.codebook.validate(&file.vocabulary)?;
        Ok(file)
    }
}

/// The worked example (John smiles and John smiles): John → 12, smiles → 34,
/// and → 13, pronoun → 1, did too → 2.
pub const FIGURE3_FIXTURE: &str = include_str!("../fixtures/figure3_codebook.json");

pub fn figure3_fixture() -> CodebookFile {
    CodebookFile::load(FIGURE3_FIXTURE).expect("bundled fixture is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Language {
    NoElision,
    Pronoun,
    Prodrop,
}

impl Language {
    pub const ALL: [Language; 3] = [Language::NoElision, Language::Pronoun, Language::Prodrop];

    pub fn name(self) -> &'static str {
        match self {
            Language::NoElision => "no_elision",
            Language::Pronoun => "pronoun",
            Language::Prodrop => "prodrop",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no_elision" | "no-elision" => Ok(Language::NoElision),
            "pronoun" => Ok(Language::Pronoun),
            "prodrop" | "pro-drop" | "pro_drop" => Ok(Language::Prodrop),
            _ => Err(Error::Parse(format!("unknown language {s:?}"))),
        }
    }
}

/// Code segments in signal order, without the trailing EOS.
pub fn encode_segments<'a>(language: Language, m: &Meaning, cb: &'a Codebook) -> Vec<&'a [usize]> {
    let class = classify_redundancy(m);
    let same_subj = matches!(class, RedundancyClass::RedundantSubject | RedundancyClass::FullyRedundant);
    let same_verb = matches!(class, RedundancyClass::RedundantVerb | RedundancyClass::FullyRedundant);
    let mut out: Vec<&[usize]> = vec![
        cb.word_code(Role::Subj1, m.get(Role::Subj1)),
        cb.word_code(Role::Verb1, m.get(Role::Verb1)),
        cb.word_code(Role::Conj, m.get(Role::Conj)),
    ];
    let second: [(bool, Role, &'a [usize]); 2] =
        [(same_subj, Role::Subj2, &cb.pronoun), (same_verb, Role::Verb2, &cb.did_too)];
    for (redundant, role, anaphor) in second {
        match (language, redundant) {
            (Language::NoElision, _) | (_, false) => out.push(cb.word_code(role, m.get(role))),
            (Language::Pronoun, true) => out.push(anaphor),
            (Language::Prodrop, true) => {}
        }
    }
    out
}

pub fn encode(language: Language, m: &Meaning, cb: &Codebook) -> Signal {
    let mut symbols: Vec<usize> = encode_segments(language, m, cb).concat();
    symbols.push(EOS);
    Signal(symbols)
}

pub fn encode_no_elision(m: &Meaning, cb: &Codebook) -> Signal {
    encode(Language::NoElision, m, cb)
}

pub fn encode_pronoun(m: &Meaning, cb: &Codebook) -> Signal {
    encode(Language::Pronoun, m, cb)
}

pub fn encode_prodrop(m: &Meaning, cb: &Codebook) -> Signal {
    encode(Language::Prodrop, m, cb)
}

/// Signal rendered with each code written as concatenated digits, e.g.
/// `12 34 13 1 2 0`.
pub fn render_segments(language: Language, m: &Meaning, cb: &Codebook) -> String {
    let mut parts: Vec<String> = encode_segments(language, m, cb)
        .iter()
        .map(|seg| seg.iter().map(|s| s.to_string()).collect::<String>())
        .collect();
    parts.push(EOS.to_string());
    parts.join(" ")
}

pub fn generate_language(language: Language, meanings: &[Meaning], cb: &Codebook) -> Vec<(Meaning, Signal)> {
    meanings.iter().map(|m| (*m, encode(language, m, cb))).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct LanguageRow {
    subj1: usize,
    verb1: usize,
    conj: usize,
    subj2: usize,
    verb2: usize,
    signal: String,
    class: String,
}

/// CSV dump: five meaning columns, space-separated signal, class label.
pub fn write_language_csv<W: Write>(writer: W, pairs: &[(Meaning, Signal)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (m, s) in pairs {
        let [subj1, verb1, conj, subj2, verb2] = m.0;
        w.serialize(LanguageRow {
            subj1,
            verb1,
            conj,
            subj2,
            verb2,
            signal: s.to_string(),
            class: classify_redundancy(m).label().to_string(),
        })
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_language_csv<R: Read>(reader: R) -> Result<Vec<(Meaning, Signal)>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in r.deserialize::<LanguageRow>() {
        let row = row.map_err(csv_err)?;
        let m = Meaning([row.subj1, row.verb1, row.conj, row.subj2, row.verb2]);
        let class: RedundancyClass = row.class.parse()?;
        if class != classify_redundancy(&m) {
            return Err(Error::Parse(format!("class label {} inconsistent with meaning {m}", row.class)));
        }
        out.push((m, row.signal.parse()?));
    }
    Ok(out)
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("csv: {other:?}")),
    }
}
