//! Python bindings: codebooks and languages, metrics, statistics, and the
//! experiment harness. Structured results cross the boundary as JSON text.

use std::path::PathBuf;

use anaphora_core::agents::ReceiverParams;
use anaphora_core::handcrafted::{self, Alphabet, CodebookMode, Language, Signal};
use anaphora_core::harness::{self, ExperimentConfig};
use anaphora_core::meanings::{classify_redundancy, enumerate_meanings as enumerate, Meaning, Vocabulary};
use anaphora_core::metrics::{self, SignalCorpus};
use anaphora_core::Error;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

create_exception!(anaphora, AnaphoraError, PyException);

fn err(e: Error) -> PyErr {
    AnaphoraError::new_err(format!("{}: {e}", e.kind()))
}

fn json_err(e: serde_json::Error) -> PyErr {
    err(Error::Json(e))
}

type Quad = (usize, usize, usize, usize);

fn meaning(q: Quad) -> Meaning {
    Meaning::new(q.0, q.1, q.2, q.3)
}

fn quad(m: &Meaning) -> Quad {
    use anaphora_core::meanings::Role::*;
    (m.get(Subj1), m.get(Verb1), m.get(Subj2), m.get(Verb2))
}

fn signal(symbols: Vec<usize>) -> PyResult<Signal> {
    Signal::new(symbols).map_err(err)
}

fn language(name: &str) -> PyResult<Language> {
    name.parse().map_err(err)
}

fn corpus(meanings: Vec<Quad>, signals: Vec<Vec<usize>>) -> PyResult<SignalCorpus> {
    if meanings.len() != signals.len() {
        return Err(err(Error::InvalidConfig(format!(
            "{} meanings but {} signals",
            meanings.len(),
            signals.len()
        ))));
    }
    let pairs = meanings
        .into_iter()
        .zip(signals)
        .map(|(m, s)| Ok((meaning(m), signal(s)?)))
        .collect::<PyResult<Vec<_>>>()?;
    Ok(SignalCorpus::new(pairs, "python"))
}

/// Word-to-symbol productions for one vocabulary.
#[pyclass(module = "anaphora")]
struct Codebook {
    vocab: Vocabulary,
    inner: handcrafted::Codebook,
}

#[pymethods]
impl Codebook {
    /// Build a codebook; `mode` is `"prefix_free"` or `"overlapping"`.
    #[new]
    #[pyo3(signature = (n_subjects, n_verbs, alphabet_size=26, seed=0, mode="prefix_free"))]
    fn new(n_subjects: usize, n_verbs: usize, alphabet_size: usize, seed: u64, mode: &str) -> PyResult<Self> {
        let mode: CodebookMode = serde_json::from_value(serde_json::Value::String(mode.into())).map_err(json_err)?;
        let vocab = Vocabulary::new(n_subjects, n_verbs).map_err(err)?;
        let inner =
            handcrafted::build_codebook_with_mode(&vocab, Alphabet::new(alphabet_size), seed, mode).map_err(err)?;
        Ok(Codebook { vocab, inner })
    }

    /// The one-subject, one-verb worked example codebook.
    #[staticmethod]
    fn figure3() -> Self {
        let f = handcrafted::figure3_fixture();
        Codebook { vocab: f.vocabulary, inner: f.codebook }
    }

    /// Signal symbols for a `(subj1, verb1, subj2, verb2)` meaning, EOS included.
    fn encode(&self, language_name: &str, m: Quad) -> PyResult<Vec<usize>> {
        let m = meaning(m);
        m.validate(&self.vocab).map_err(err)?;
        Ok(handcrafted::encode(language(language_name)?, &m, &self.inner).symbols().to_vec())
    }

    /// Every meaning (or those given) paired with its signal.
    #[pyo3(signature = (language_name, meanings=None))]
    fn generate(&self, language_name: &str, meanings: Option<Vec<Quad>>) -> PyResult<Vec<(Quad, Vec<usize>)>> {
        let ms: Vec<Meaning> = match meanings {
            Some(v) => v.into_iter().map(meaning).collect(),
            None => enumerate(&self.vocab),
        };
        for m in &ms {
            m.validate(&self.vocab).map_err(err)?;
        }
        Ok(handcrafted::generate_language(language(language_name)?, &ms, &self.inner)
            .iter()
            .map(|(m, s)| (quad(m), s.symbols().to_vec()))
            .collect())
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }
}

/// Receiver network: signals in, per-role distributions out.
#[pyclass(module = "anaphora")]
struct Receiver {
    inner: ReceiverParams,
}

#[pymethods]
impl Receiver {
    #[new]
    #[pyo3(signature = (n_subjects, n_verbs, alphabet_size=26, hidden=64, seed=0))]
    fn new(n_subjects: usize, n_verbs: usize, alphabet_size: usize, hidden: usize, seed: u64) -> PyResult<Self> {
        let vocab = Vocabulary::new(n_subjects, n_verbs).map_err(err)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Receiver { inner: ReceiverParams::new(&vocab, Alphabet::new(alphabet_size), hidden, &mut rng) })
    }

    /// Zero the output layer, giving uniform predictions.
    fn make_uniform(&mut self) {
        self.inner.zero_output();
    }

    fn predict(&self, signals: Vec<Vec<usize>>) -> PyResult<Vec<Quad>> {
        let sigs = signals.into_iter().map(signal).collect::<PyResult<Vec<_>>>()?;
        Ok(self.inner.predict(&sigs).map_err(err)?.iter().map(quad).collect())
    }

    /// Mean predictive entropy in bits for each of the five roles.
    fn predictive_ambiguity(&self, meanings: Vec<Quad>, signals: Vec<Vec<usize>>) -> PyResult<[f64; 5]> {
        metrics::predictive_ambiguity_profile(&self.inner, &corpus(meanings, signals)?).map_err(err)
    }

    fn accuracy(&self, meanings: Vec<Quad>, signals: Vec<Vec<usize>>) -> PyResult<f64> {
        metrics::communicative_accuracy(&self.inner, &corpus(meanings, signals)?).map_err(err)
    }
}

#[pyfunction]
fn enumerate_meanings(n_subjects: usize, n_verbs: usize) -> PyResult<Vec<Quad>> {
    let vocab = Vocabulary::new(n_subjects, n_verbs).map_err(err)?;
    Ok(enumerate(&vocab).iter().map(quad).collect())
}

/// Redundancy class label of a meaning.
#[pyfunction]
fn redundancy(m: Quad) -> String {
    classify_redundancy(&meaning(m)).label().to_string()
}

#[pyfunction]
fn jaccard(a: Vec<Vec<usize>>, b: Vec<Vec<usize>>, n: usize) -> PyResult<f64> {
    let sa = a.into_iter().map(|s| Signal::from_body(&s)).collect::<Result<Vec<_>, _>>().map_err(err)?;
    let sb = b.into_iter().map(|s| Signal::from_body(&s)).collect::<Result<Vec<_>, _>>().map_err(err)?;
    let ga = metrics::extract_ngrams(&sa, n).map_err(err)?;
    let gb = metrics::extract_ngrams(&sb, n).map_err(err)?;
    metrics::jaccard(&ga, &gb).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (meanings, signals, n, sample_size=250, resamples=20, seed=0))]
fn signal_uniqueness(
    meanings: Vec<Quad>,
    signals: Vec<Vec<usize>>,
    n: usize,
    sample_size: usize,
    resamples: usize,
    seed: u64,
) -> PyResult<f64> {
    let c = corpus(meanings, signals)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    metrics::signal_uniqueness(&c, n, sample_size, &mut rng, resamples).map_err(err)
}

/// Pooled two-sample t-test as a dict.
#[pyfunction]
fn two_sample_t<'py>(py: Python<'py>, xs: Vec<f64>, ys: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let r = metrics::two_sample_t(&xs, &ys).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("t", r.t)?;
    d.set_item("df", r.df)?;
    d.set_item("p", r.p)?;
    d.set_item("mean_diff", r.mean_diff)?;
    d.set_item("ci_low", r.ci_low)?;
    d.set_item("ci_high", r.ci_high)?;
    Ok(d)
}

/// `(mean, half_width)` of the 95% t interval.
#[pyfunction]
fn ci95(xs: Vec<f64>) -> PyResult<(f64, f64)> {
    metrics::ci95(&xs).map_err(err)
}

/// Complete config JSON for `experiment`, with optional JSON overrides.
#[pyfunction]
#[pyo3(signature = (experiment, overrides=None))]
fn default_config(experiment: &str, overrides: Option<&str>) -> PyResult<String> {
    let mut v: serde_json::Value = match overrides {
        Some(text) => serde_json::from_str(text).map_err(json_err)?,
        None => serde_json::json!({}),
    };
    v["experiment"] = serde_json::Value::String(experiment.into());
    ExperimentConfig::from_value(v).and_then(|c| c.to_json()).map_err(err)
}

#[pyfunction]
fn config_hash(config_json: &str) -> PyResult<String> {
    Ok(ExperimentConfig::from_json(config_json).map_err(err)?.hash())
}

/// Train every seed of a config; returns the run records as JSON.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(err)?;
    let records = py.detach(|| harness::run_experiment(&cfg)).map_err(err)?;
    serde_json::to_string(&records).map_err(json_err)
}

/// Recompute a run's report from its directory; returns report JSON.
#[pyfunction]
fn analyze_run(py: Python<'_>, run_dir: PathBuf) -> PyResult<String> {
    let report = py.detach(|| harness::analyze_run(&run_dir)).map_err(err)?;
    Ok(String::from_utf8(report.to_bytes()).expect("report JSON is UTF-8"))
}

/// Aggregate all runs under `root` into `root/summary`; returns summary JSON.
#[pyfunction]
fn summarize(root: PathBuf) -> PyResult<String> {
    let reports = harness::collect_reports(&root).map_err(err)?;
    let (summary, _) = harness::write_summary(&root, &reports).map_err(err)?;
    serde_json::to_string(&summary).map_err(json_err)
}

#[pymodule]
fn anaphora(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AnaphoraError", m.py().get_type::<AnaphoraError>())?;
    m.add_class::<Codebook>()?;
    m.add_class::<Receiver>()?;
    m.add_function(wrap_pyfunction!(enumerate_meanings, m)?)?;
    m.add_function(wrap_pyfunction!(redundancy, m)?)?;
    m.add_function(wrap_pyfunction!(jaccard, m)?)?;
    m.add_function(wrap_pyfunction!(signal_uniqueness, m)?)?;
    m.add_function(wrap_pyfunction!(two_sample_t, m)?)?;
    m.add_function(wrap_pyfunction!(ci95, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(config_hash, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_run, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    Ok(())
}
