//! Single-pass relational models.
//!
//! Each target tuple's foreign-key neighborhood is turned into a DAG that
//! points towards the target, frequently repeated sub-DAGs are replaced by
//! learned embeddings, and one bottom-up pass over the DAG produces the
//! prediction. A multi-round message-passing model over the undirected
//! neighborhood serves as the reference point.

pub mod autodiff;
pub mod bench;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod prune;
pub mod schedule;
pub mod stats;
pub mod store;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
