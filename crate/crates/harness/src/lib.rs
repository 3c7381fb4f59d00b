//! Batch evaluation: run focal populations through scenarios, persist one
//! record per episode, build score reports and render episodes to frames.

pub mod job;
pub mod render;
pub mod store;

pub use job::{episode_seed, parse_population, run_evaluation, EvaluationJob, FocalPopulation, JobError};
pub use render::{render_record, RenderError, RenderManifest};
pub use store::{read_records, write_report, Record, RecordWriter};
