//! Batch runs, aggregation, latency benchmarking, configuration and result files.

pub mod batch;
pub mod bench;
pub mod config;
pub mod emit;
pub mod units;

pub use batch::{run_all, run_batch, run_replicas, summarize, time_to_uncertainty, ReplicaSet, RunMetadata, RunSummary};
pub use bench::{latency_bench, BenchReport};
pub use config::{RunConfig, PRESETS};
pub use emit::{emit_bench, emit_summaries, load_summaries, Format, RunLog};
pub use units::{parse_time, Seconds};
