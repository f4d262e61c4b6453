//! A laboratory for the thermodynamics of read-once computation.
//!
//! The crate provides an exact interpreter for read-once Turing machines,
//! a reversibility verifier, history-tape embedding and rule inversion with
//! a two-pass garbage-free pipeline, a brute-force census of final dynamic
//! parts (the operational measure of erasure cost), and a Monte Carlo
//! harness for the shutter-demon experiment with its second-law ledger.

pub mod bennett;
pub mod census;
pub mod corpus;
pub mod demon;
pub mod machine;
pub mod reversibility;
pub mod sim;
