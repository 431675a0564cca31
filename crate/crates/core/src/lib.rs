//! Three-server secure computation of differentially private marginals over
//! horizontally partitioned gene-expression cohorts, and synthetic data
//! generation from the released marginals.
//!
//! Secrets live in `Z_{2^64}` as 2-out-of-3 replicated shares. The
//! [`engine::Party`] context runs the interactive [`primitives`] over a
//! [`transport::Transport`]; [`protocols`] composes them into binning,
//! marginal computation and noise injection; [`generator`] turns the
//! released marginals into synthetic records and [`pipeline`] wires the
//! whole flow together with evaluation metrics.

pub mod engine;
pub mod error;
pub mod generator;
pub mod pipeline;
pub mod primitives;
pub mod protocols;
pub mod ring;
pub mod sharing;
pub mod transport;

pub use engine::{run_three_party_local, CommStats, HarnessConfig, Party, PartyOutcome};
pub use error::{Error, Result, TransportError};
pub use ring::{FixedPointCodec, RingValue};
pub use sharing::{ReplicatedShare, SharedVector};
pub use transport::PartyId;
