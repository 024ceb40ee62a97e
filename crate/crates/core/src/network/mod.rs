//! Observation graphs: the `Network` type, Kronecker synthesis, and mention-log ingestion.

mod graph;
mod kronecker;
mod mention;

pub use graph::Network;
pub use kronecker::{kronecker_generate, KroneckerSeed};
pub(crate) use mention::exposed_at;
pub use mention::{
    build_mention_network, exposure_history, FirstEdgeTimes, Mention, MentionNetwork,
};
