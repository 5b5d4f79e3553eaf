use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::records::{CorpusMetrics, EmergentReport, PaProfile, Report, SupervisedReport};
use super::run::REPORT_FILE;
use crate::error::{Error, Result};
use crate::handcrafted::Language;
use crate::harness::config::Condition;
use crate::meanings::Role;
use crate::metrics::{ci95, two_sample_t, MeaningGroup, StatResult};

/// Groups drawn as figure panels; Full is reported but not plotted.
pub const FIGURE_PANELS: [MeaningGroup; 3] =
    [MeaningGroup::NonRedundant, MeaningGroup::RedundantSubject, MeaningGroup::RedundantVerb];

/// Mean with a 95% half-width (absent when fewer than two values).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub n: usize,
    pub mean: f64,
    pub ci_half: Option<f64>,
}

impl Estimate {
    pub fn of(xs: &[f64]) -> Option<Estimate> {
        if xs.is_empty() {
            return None;
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let ci_half = ci95(xs).ok().map(|(_, h)| h);
        Some(Estimate { n: xs.len(), mean, ci_half })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub metric: String,
    pub group: Option<MeaningGroup>,
    pub position: Option<Role>,
    pub test: Option<StatResult>,
    /// One-sided p for `mean(a) > mean(b)`.
    pub p_a_greater: Option<f64>,
    /// One-sided p for `mean(a) < mean(b)`.
    pub p_a_less: Option<f64>,
    pub note: Option<String>,
}

fn compare(a: &str, b: &str, metric: &str, xs: &[f64], ys: &[f64]) -> Comparison {
    let mut c = Comparison {
        a: a.into(),
        b: b.into(),
        metric: metric.into(),
        group: None,
        position: None,
        test: None,
        p_a_greater: None,
        p_a_less: None,
        note: None,
    };
    match two_sample_t(xs, ys) {
        Ok(t) => {
            c.p_a_greater = Some(t.p_greater());
            c.p_a_less = Some(t.p_less());
            c.test = Some(t);
        }
        Err(e) => c.note = Some(e.to_string()),
    }
    c
}

/// One row of a figure CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub panel: MeaningGroup,
    pub position: Role,
    pub variant: String,
    pub pa_mean: f64,
    pub ci_half: Option<f64>,
    pub n: usize,
    /// Conj is kept in the data but left out of the published plots.
    pub omitted_in_figure: bool,
    /// `config_hash/seed` of every contributing run.
    pub runs: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageSummary {
    pub language: Language,
    pub seeds: usize,
    pub converged: usize,
    /// Seeds that never reached perfect test accuracy (left out of the mean).
    pub not_converged: Vec<u64>,
    pub epochs: Vec<Option<usize>>,
    pub epochs_to_perfect: Option<Estimate>,
    pub su: [Option<Estimate>; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisedSummary {
    pub runs: Vec<String>,
    pub languages: Vec<LanguageSummary>,
    pub epoch_tests: Vec<Comparison>,
    pub pa_tests: Vec<Comparison>,
    pub figure: Vec<FigureRow>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: Condition,
    pub seeds: usize,
    pub test_accuracy: Option<Estimate>,
    pub min_test_accuracy: Option<f64>,
    pub su: [Option<Estimate>; 3],
    pub mean_length: BTreeMap<MeaningGroup, Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergentSummary {
    pub runs: Vec<String>,
    pub conditions: Vec<ConditionSummary>,
    pub tests: Vec<Comparison>,
    pub figure: Vec<FigureRow>,
}

/// Every `runs/<hash>/<seed>/report.json` below `root`, in path order.
pub fn collect_reports(root: &Path) -> Result<Vec<Report>> {
    let runs = root.join("runs");
    if !runs.is_dir() {
        return Err(Error::MissingFile(runs));
    }
    let mut paths: Vec<PathBuf> = Vec::new();
    for hash in fs::read_dir(&runs)? {
        let hash = hash?.path();
        if !hash.is_dir() {
            continue;
        }
        for seed in fs::read_dir(&hash)? {
            let p = seed?.path().join(REPORT_FILE);
            if p.is_file() {
                paths.push(p);
            }
        }
    }
    paths.sort();
    paths
        .iter()
        .map(|p| {
            serde_json::from_slice(&fs::read(p)?)
                .map_err(|e| Error::Schema { path: p.clone(), detail: e.to_string() })
        })
        .collect()
}

fn su_estimates(corpora: &[&CorpusMetrics]) -> [Option<Estimate>; 3] {
    std::array::from_fn(|n| Estimate::of(&corpora.iter().map(|c| c.su[n]).collect::<Vec<_>>()))
}

fn pa_value(pa: &[PaProfile], group: MeaningGroup, role: Role) -> Option<f64> {
    pa.iter().find(|p| p.group == group).map(|p| p.pa[role.index()])
}

/// Per variant: each run's PA profiles with its `hash/seed` id.
type VariantRuns<'a> = (String, Vec<(&'a [PaProfile], String)>);

fn figure_rows(variants: &[VariantRuns<'_>]) -> Vec<FigureRow> {
    let mut rows = Vec::new();
    for panel in FIGURE_PANELS {
        for position in Role::ALL {
            for (variant, runs) in variants {
                let (vals, ids): (Vec<f64>, Vec<&str>) = runs
                    .iter()
                    .filter_map(|(pa, id)| pa_value(pa, panel, position).map(|v| (v, id.as_str())))
                    .unzip();
                let Some(est) = Estimate::of(&vals) else { continue };
                rows.push(FigureRow {
                    panel,
                    position,
                    variant: variant.clone(),
                    pa_mean: est.mean,
                    ci_half: est.ci_half,
                    n: est.n,
                    omitted_in_figure: position == Role::Conj,
                    runs: ids.join(";"),
                });
            }
        }
    }
    rows
}

pub fn summarize_supervised(reports: &[&SupervisedReport]) -> SupervisedSummary {
    let mut languages = Vec::new();
    let mut warnings = Vec::new();
    let mut epochs_by: BTreeMap<Language, Vec<f64>> = BTreeMap::new();
    let mut pa_by: Vec<VariantRuns> = Vec::new();
    for lang in Language::ALL {
        let rows: Vec<(&SupervisedReport, &super::records::LanguageReport)> = reports
            .iter()
            .filter_map(|r| r.languages.iter().find(|l| l.language == lang).map(|l| (*r, l)))
            .collect();
        if rows.is_empty() {
            continue;
        }
        let epochs: Vec<Option<usize>> = rows.iter().map(|(_, l)| l.first_perfect_epoch).collect();
        let not_converged: Vec<u64> =
            rows.iter().filter(|(_, l)| l.first_perfect_epoch.is_none()).map(|(r, _)| r.seed).collect();
        if !not_converged.is_empty() {
            warnings.push(format!("{lang}: seeds {not_converged:?} never reached perfect test accuracy; excluded"));
        }
        let finite: Vec<f64> = epochs.iter().flatten().map(|&e| e as f64).collect();
        let corpora: Vec<&CorpusMetrics> = rows.iter().map(|(_, l)| &l.corpus).collect();
        languages.push(LanguageSummary {
            language: lang,
            seeds: rows.len(),
            converged: finite.len(),
            not_converged,
            epochs,
            epochs_to_perfect: Estimate::of(&finite),
            su: su_estimates(&corpora),
        });
        epochs_by.insert(lang, finite);
        pa_by.push((
            lang.name().into(),
            rows.iter().map(|(r, l)| (l.pa.as_slice(), format!("{}/{}", r.config_hash, r.seed))).collect(),
        ));
    }

    let mut epoch_tests = Vec::new();
    let pairs = [
        (Language::NoElision, Language::Pronoun),
        (Language::Pronoun, Language::Prodrop),
        (Language::NoElision, Language::Prodrop),
    ];
    for (a, b) in pairs {
        if let (Some(xs), Some(ys)) = (epochs_by.get(&a), epochs_by.get(&b)) {
            epoch_tests.push(compare(a.name(), b.name(), "epochs_to_perfect", xs, ys));
        }
    }

    let mut pa_tests = Vec::new();
    let pa_of = |lang: Language, group: MeaningGroup, role: Role| -> Vec<f64> {
        reports
            .iter()
            .filter_map(|r| r.languages.iter().find(|l| l.language == lang))
            .filter_map(|l| pa_value(&l.pa, group, role))
            .collect()
    };
    for group in FIGURE_PANELS {
        for role in Role::ALL {
            for (a, b) in [
                (Language::Pronoun, Language::NoElision),
                (Language::Prodrop, Language::NoElision),
                (Language::Prodrop, Language::Pronoun),
            ] {
                let (xs, ys) = (pa_of(a, group, role), pa_of(b, group, role));
                if xs.is_empty() || ys.is_empty() {
                    continue;
                }
                let mut c = compare(a.name(), b.name(), "pa", &xs, &ys);
                c.group = Some(group);
                c.position = Some(role);
                pa_tests.push(c);
            }
        }
    }

    SupervisedSummary {
        runs: reports.iter().map(|r| format!("{}/{}", r.config_hash, r.seed)).collect(),
        languages,
        epoch_tests,
        pa_tests,
        figure: figure_rows(&pa_by),
        warnings,
    }
}

pub fn summarize_emergent(reports: &[&EmergentReport]) -> EmergentSummary {
    let mut conditions = Vec::new();
    let mut pa_by = Vec::new();
    let by = |c: Condition| -> Vec<&EmergentReport> { reports.iter().copied().filter(|r| r.condition == c).collect() };
    for cond in [Condition::Control, Condition::Efficiency] {
        let rs = by(cond);
        if rs.is_empty() {
            continue;
        }
        let acc: Vec<f64> = rs.iter().map(|r| r.test_accuracy).collect();
        let corpora: Vec<&CorpusMetrics> = rs.iter().map(|r| &r.corpus).collect();
        let mut mean_length = BTreeMap::new();
        for g in rs[0].corpus.mean_length.keys() {
            let vals: Vec<f64> = rs.iter().filter_map(|r| r.corpus.mean_length.get(g).copied()).collect();
            if let Some(e) = Estimate::of(&vals) {
                mean_length.insert(*g, e);
            }
        }
        conditions.push(ConditionSummary {
            condition: cond,
            seeds: rs.len(),
            min_test_accuracy: acc.iter().copied().reduce(f64::min),
            test_accuracy: Estimate::of(&acc),
            su: su_estimates(&corpora),
            mean_length,
        });
        pa_by.push((
            cond.name().to_string(),
            rs.iter().map(|r| (r.pa.as_slice(), format!("{}/{}", r.config_hash, r.seed))).collect::<Vec<_>>(),
        ));
    }

    let mut tests = Vec::new();
    let (eff, ctl) = (by(Condition::Efficiency), by(Condition::Control));
    if !eff.is_empty() && !ctl.is_empty() {
        for n in 0..3 {
            let xs: Vec<f64> = eff.iter().map(|r| r.corpus.su[n]).collect();
            let ys: Vec<f64> = ctl.iter().map(|r| r.corpus.su[n]).collect();
            tests.push(compare("efficiency", "control", &format!("su_{}", n + 1), &xs, &ys));
        }
        for g in [MeaningGroup::All, MeaningGroup::NonRedundant, MeaningGroup::Partial, MeaningGroup::Full] {
            let xs: Vec<f64> = eff.iter().filter_map(|r| r.corpus.mean_length.get(&g).copied()).collect();
            let ys: Vec<f64> = ctl.iter().filter_map(|r| r.corpus.mean_length.get(&g).copied()).collect();
            if xs.is_empty() || ys.is_empty() {
                continue;
            }
            let mut c = compare("efficiency", "control", "mean_length", &xs, &ys);
            c.group = Some(g);
            tests.push(c);
        }
    }

    EmergentSummary {
        runs: reports.iter().map(|r| format!("{}/{}", r.config_hash, r.seed)).collect(),
        conditions,
        tests,
        figure: figure_rows(&pa_by),
    }
}

/// Long-format row: one per run × variant × metric × group (× position).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub config_hash: String,
    pub seed: u64,
    pub experiment: String,
    pub variant: String,
    pub metric: String,
    pub group: String,
    pub position: String,
    pub value: Option<f64>,
}

fn corpus_rows(out: &mut Vec<MetricRow>, base: &MetricRow, c: &CorpusMetrics) {
    for (n, su) in c.su.iter().enumerate() {
        out.push(MetricRow { metric: format!("su_{}", n + 1), group: "redundant".into(), value: Some(*su), ..base.clone() });
    }
    for (g, len) in &c.mean_length {
        out.push(MetricRow { metric: "mean_length".into(), group: g.name().into(), value: Some(*len), ..base.clone() });
    }
}

fn pa_rows(out: &mut Vec<MetricRow>, base: &MetricRow, pa: &[PaProfile]) {
    for p in pa {
        for role in Role::ALL {
            out.push(MetricRow {
                metric: "pa".into(),
                group: p.group.name().into(),
                position: role.name().into(),
                value: Some(p.pa[role.index()]),
                ..base.clone()
            });
        }
    }
}

pub fn metric_rows(report: &Report) -> Vec<MetricRow> {
    let mut out = Vec::new();
    match report {
        Report::Supervised(r) => {
            for l in &r.languages {
                let base = MetricRow {
                    config_hash: r.config_hash.clone(),
                    seed: r.seed,
                    experiment: "supervised".into(),
                    variant: l.language.name().into(),
                    metric: String::new(),
                    group: MeaningGroup::All.name().into(),
                    position: String::new(),
                    value: None,
                };
                let epoch = l.first_perfect_epoch.map(|e| e as f64);
                out.push(MetricRow { metric: "epochs_to_perfect".into(), value: epoch, ..base.clone() });
                out.push(MetricRow { metric: "test_accuracy".into(), value: Some(l.final_test_accuracy), ..base.clone() });
                corpus_rows(&mut out, &base, &l.corpus);
                pa_rows(&mut out, &base, &l.pa);
            }
        }
        Report::Emergent(r) => {
            let base = MetricRow {
                config_hash: r.config_hash.clone(),
                seed: r.seed,
                experiment: "emergent".into(),
                variant: r.condition.name().into(),
                metric: String::new(),
                group: MeaningGroup::All.name().into(),
                position: String::new(),
                value: None,
            };
            out.push(MetricRow { metric: "train_accuracy".into(), value: Some(r.train_accuracy), ..base.clone() });
            out.push(MetricRow { metric: "test_accuracy".into(), value: Some(r.test_accuracy), ..base.clone() });
            corpus_rows(&mut out, &base, &r.corpus);
            pa_rows(&mut out, &base, &r.pa);
        }
    }
    out
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn write_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Aggregates over every stored run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub supervised: Option<SupervisedSummary>,
    pub emergent: Option<EmergentSummary>,
}

/// Writes `summary/<experiment>.{csv,json}` and the figure CSVs; returns the paths.
pub fn write_summary(root: &Path, reports: &[Report]) -> Result<(Summary, Vec<PathBuf>)> {
    if reports.is_empty() {
        return Err(Error::EmptyInput(format!("no run reports under {}", root.display())));
    }
    let dir = root.join("summary");
    fs::create_dir_all(&dir)?;
    let mut written = Vec::new();
    let sup: Vec<&SupervisedReport> =
        reports.iter().filter_map(|r| if let Report::Supervised(s) = r { Some(s) } else { None }).collect();
    let emg: Vec<&EmergentReport> =
        reports.iter().filter_map(|r| if let Report::Emergent(e) = r { Some(e) } else { None }).collect();
    let mut summary = Summary { supervised: None, emergent: None };
    for (name, figure, present) in [("supervised", "figure4", !sup.is_empty()), ("emergent", "figure5", !emg.is_empty())] {
        if !present {
            continue;
        }
        let rows: Vec<MetricRow> = reports
            .iter()
            .filter(|r| matches!((r, name), (Report::Supervised(_), "supervised") | (Report::Emergent(_), "emergent")))
            .flat_map(metric_rows)
            .collect();
        let csv_path = dir.join(format!("{name}.csv"));
        write_csv_rows(&csv_path, &rows)?;
        let json_path = dir.join(format!("{name}.json"));
        let fig_path = dir.join(format!("{figure}.csv"));
        if name == "supervised" {
            let s = summarize_supervised(&sup);
            write_pretty(&json_path, &s)?;
            write_csv_rows(&fig_path, &s.figure)?;
            summary.supervised = Some(s);
        } else {
            let s = summarize_emergent(&emg);
            write_pretty(&json_path, &s)?;
            write_csv_rows(&fig_path, &s.figure)?;
            summary.emergent = Some(s);
        }
        written.extend([csv_path, json_path, fig_path]);
    }
    Ok((summary, written))
}

/// Figure CSVs alone, from in-memory reports.
pub fn emit_figure_data(reports: &[Report], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    let sup: Vec<&SupervisedReport> =
        reports.iter().filter_map(|r| if let Report::Supervised(s) = r { Some(s) } else { None }).collect();
    let emg: Vec<&EmergentReport> =
        reports.iter().filter_map(|r| if let Report::Emergent(e) = r { Some(e) } else { None }).collect();
    if !sup.is_empty() {
        let p = dir.join("figure4.csv");
        write_csv_rows(&p, &summarize_supervised(&sup).figure)?;
        out.push(p);
    }
    if !emg.is_empty() {
        let p = dir.join("figure5.csv");
        write_csv_rows(&p, &summarize_emergent(&emg).figure)?;
        out.push(p);
    }
    Ok(out)
}
