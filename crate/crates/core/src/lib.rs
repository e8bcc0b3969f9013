//! Belief-space construction from debate vote records.
//!
//! Votes on debates become belief statements ("I agree with the following: ...").
//! Co-occurrence of beliefs across users drives anchor/positive/negative triplet
//! sampling; a triplet-loss encoder maps statements into a Euclidean space in
//! which users, groups and candidate stances can be compared.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and the
//! report bundle live in the `beliefspace` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod dissonance;
pub mod encoder;
pub mod error;
pub mod evalkit;
pub mod hash;
pub mod linalg;
pub mod predict;
pub mod profile;
pub mod space;
pub mod stats;
pub mod synth;
pub mod triplets;

pub use corpus::{BeliefKey, Corpus, Debate, DebateIdx, FoldSplit, Polarity, UserIdx};
pub use encoder::{EncoderModel, TrainConfig};
pub use error::{Error, Result};
