//! Runner around `causex-core`: image loading, per-image artifacts, batch
//! statistics and the shipped ImageNet hierarchy.

pub mod batch;
pub mod config;
pub mod imageio;
pub mod imagenet;
pub mod instances;
pub mod single;
pub mod stats;

pub use batch::{run_batch, BatchSummary, RunManifest};
pub use config::{ConfigFile, ModelSelection, RunConfig};
pub use single::{explain_tensor, run_single, run_tensor, Explained, Outcome, RecordJson, Status};
pub use stats::{emit_plot_data, StatsRow};
