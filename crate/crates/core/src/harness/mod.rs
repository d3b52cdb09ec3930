//! End-to-end runs: configuration, seeding, pre-training, the slot loop
//! and its outputs.

pub mod config;
pub mod files;
pub mod pipeline;
pub mod records;
pub mod seeds;
pub mod stats;

pub use config::{RunConfig, TrajectorySelect};
pub use pipeline::{
    new_estimator, prepare_env, pretrain, pretrain_into, run, EpisodeLog, Estimation, RunOutput, SlotDiagnostics,
    FEASIBILITY_TOL,
};
pub use files::{read_text, write_text};
pub use records::{
    episode_log_to_string, read_records, records_to_string, summarize, write_records, SlotRecord, Summary,
    CSV_HEADER,
};
pub use seeds::{derive_seed, SeedStreams};
