//! Certified least-fixed-point computation for probabilistic polynomial
//! systems (PPSs) and the applications built on it: extinction
//! probabilities of multi-type branching processes, and string
//! probabilities / Chomsky-normal-form approximation for stochastic
//! context-free grammars with arbitrary ε-rules.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: exact rationals, dyadic fixed-point values, exact linear
//!   algebra and exact LP feasibility.
//! * [`pps`]: polynomial systems, the `|P|` size measure, simple normal form,
//!   Jacobians, dependency SCCs and value iteration.
//! * [`qualitative`]: exact classification of `q*_i = 0`, `q*_i = 1` and
//!   interior coordinates, and elimination of the trivial ones.
//! * [`newton`]: exact and rounded-down Newton iteration, the certified
//!   solver and the threshold decision procedure.
//! * [`branching`]: branching processes, their PPS translation and a Monte
//!   Carlo extinction simulator.
//! * [`scfg`]: the grammar pipeline ending in CNF and rounded CKY.

pub mod branching;
pub mod error;
pub mod graph;
pub mod newton;
pub mod numerics;
pub mod pps;
pub mod qualitative;
pub mod scfg;

pub use error::{Error, Result};
pub use numerics::{Dyadic, Rational, RationalMatrix};
