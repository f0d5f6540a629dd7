//! Basic-to-applied level scores for biomedical papers from controlled
//! vocabulary co-occurrence, plus the citation and distribution analytics
//! built on them.

pub mod analysis;
pub mod axis;
pub mod bins;
pub mod citegraph;
pub mod config;
pub mod cooccur;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod numfmt;
pub mod pipeline;

pub use error::{Error, Result};
