pub mod annotate;
pub mod atlas;
pub mod curation;
pub mod downstream;
pub mod embed;
pub mod evalbench;
#[cfg(feature = "fixtures")]
pub mod fixtures;
pub mod error;
pub mod jsonl;
pub mod lexnet;
#[cfg(feature = "fixtures")]
pub mod mock_endpoint;
pub mod pairs;
pub mod scorer;
pub mod stats;

pub use error::{Error, Result};
