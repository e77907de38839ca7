//! Deterministic simulator for collaborative learning that combines
//! cryptographic protection of inputs with differential privacy of
//! outputs.
//!
//! The crate models clients and servers as in-process parties exchanging
//! messages over counted channels, and executes the seven-phase training
//! protocol (setup, gradient computation, protection, perturbation,
//! aggregation, update, reveal) for both federated and outsourced
//! learning. All randomness is derived from explicit seeds, so every run
//! replays bit-identically.

pub mod accountant;
pub mod config;
pub mod dataset;
pub mod experiment;
pub mod learner;
pub mod mpc;
pub mod orchestrator;
pub mod ring;
pub mod sampler;
