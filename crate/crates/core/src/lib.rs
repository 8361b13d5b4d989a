//! Federated proximal optimization: FedProx, FedExProx with constant and adaptive
//! extrapolation, τ-nice client sampling, the parallel projection method as the
//! indicator special case, Moreau-envelope calculus, and rate-constant diagnostics.
//!
//! The usual entry points are [`problems`] to build an instance, [`algorithms::run`]
//! to iterate on it, and [`harness`] to run whole experiments and write traces.

pub mod algorithms;
pub mod envelope;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod objectives;
pub mod problems;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
