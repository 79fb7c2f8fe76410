//! Communication-network analysis of team voice transcripts.
//!
//! Sessions pair a game event log with per-player utterance transcripts.
//! From them the crate extracts moments of interest, builds role-level
//! directed networks from adjacency pairs, and compares network structure
//! with rank-based tests.

pub mod analysis;
pub mod ingest;
pub mod model;
pub mod moi;
pub mod network;
pub mod patterns;
pub mod stats;
pub mod synth;
pub mod timeline;
