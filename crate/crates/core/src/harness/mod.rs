//! Configuration, experiment orchestration, persistence and reporting.

pub mod config;
pub mod records;
pub mod run;
pub mod summary;

pub use config::{Condition, ExperimentConfig, ExperimentKind};
pub use records::*;
pub use run::{
    analyze_corpus, analyze_run, codebook, meaning_set, run_emergent, run_experiment, run_seed, run_supervised,
    write_languages,
};
pub use summary::{collect_reports, emit_figure_data, write_summary, Summary};
