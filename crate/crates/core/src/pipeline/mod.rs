//! End-to-end reconstruction: configuration, synthetic fixtures, the staged
//! run and the benchmark.

pub mod assign;
pub mod bench;
mod clock;
pub mod config;
pub mod fixture;
pub mod run;
pub mod template;

pub use assign::{hungarian, matched_errors};
pub use bench::{bench_csv, control_subset, run_bench, BenchOptions, BenchRow};
pub use config::{FitMethod, PipelineConfig};
pub use fixture::{synth_fixture, SyntheticPair};
pub use run::{adapt_model, localize, run_pipeline, to_model_frame, FitReport, Localization, RunOutput, StageError};
pub use template::{author_generic_model, default_side_table, template_landmarks, TemplateLandmark, TEMPLATE_IOD};
