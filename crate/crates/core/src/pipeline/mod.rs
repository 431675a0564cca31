//! End-to-end pipeline: cohort I/O, splitting, evaluation metrics and the
//! driver that runs holders, servers and generator together.

pub mod cohort;
pub mod config;
pub mod metrics;
pub mod run;

pub use cohort::{
    desk_cohort, split_holders, train_test_split, CohortTable, DeskCohortSpec, IngestOptions,
    LABEL_COLUMN,
};
pub use metrics::{dcr, detpr, tstr, wasserstein_mean, LogRegConfig, SoftmaxRegression};
pub use config::Config;
pub use run::{
    evaluate, run_end_to_end, run_servers_local, serve_party, stage_seed, submit_holders,
    MetricsReport, RunConfig, RunOutcome, Scores, ServerRun,
};
