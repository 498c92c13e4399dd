//! Expert-finding evaluation toolkit.
//!
//! The crate is organised the way data flows through an experiment:
//!
//! * [`corpus`] parses citation dumps, builds the bipartite candidate/document
//!   dataset, filters it and persists it.
//! * [`textrep`] fits TF, TF-IDF and LSI document representations.
//! * [`rankers`] scores candidates for a query with the P@noptic, voting and
//!   propagation models.
//! * [`evalproto`] computes ranking metrics and runs the topic-query and
//!   document-query protocols.
//! * [`cli`] wires everything into the `expertbench` command.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod evalproto;
pub mod rankers;
pub mod textrep;

pub use error::{Error, Result};
