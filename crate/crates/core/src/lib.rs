//! Giant-reference identification on temporal co-citation networks.
//!
//! The pipeline: [`corpus`] ingests and indexes papers, [`cocite`] maintains
//! yearly co-citation snapshots, [`giant`] runs the vote/percolation
//! procedure per focal paper, [`metrics`] derives per-paper indicators and
//! [`analysis`] aggregates them into plot-ready tables. [`synthgen`] produces
//! synthetic corpora and the naive oracle used for equivalence checks.

mod binio;

pub mod analysis;
pub mod cocite;
pub mod corpus;
pub mod error;
pub mod exec;
pub mod giant;
pub mod metrics;
pub mod synthgen;

pub use error::{Error, Result};
pub use exec::Exec;
