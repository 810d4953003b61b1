//! Topological feature extraction for node-attributed graphs.
//!
//! The main path is: attributed graph → lower-star filtration → persistence
//! diagram → Betti function → vector of averaged Betti values. Around it sit
//! diagram distances, classical graph summaries, modified band depth,
//! E-divisive change-point detection, a random dot product graph simulator
//! and a transaction-ledger feature pipeline.

pub mod betti;
pub mod changepoint;
pub mod depth;
pub mod error;
pub mod filtration;
pub mod graph;
pub mod metrics;
pub mod persistence;
pub mod pipeline;
pub mod simulation;
pub mod stats;

pub use error::{Error, Result};
pub use graph::{AttributedGraph, DistanceMatrix};
