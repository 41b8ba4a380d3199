//! Exactly solvable finite-horizon stochastic control with sensor management.
//!
//! Two families of models are covered:
//!
//! - finite partially observed Markov decision processes ([`pomdp`]), with the
//!   machine-repair-with-diagnosis example in [`machine_repair`];
//! - linear-quadratic-Gaussian regulation ([`lqg`]), extended with a finite
//!   sensor menu ([`schedule`]) and with control-dependent measurement noise
//!   in a scalar two-stage problem ([`dmc`]).
//!
//! Every operation is a pure function of its inputs plus an explicit seed, so
//! all values are reproducible and safe to compute from many threads.

pub mod dmc;
pub mod format;
pub mod linalg;
pub mod lqg;
pub mod machine_repair;
pub mod pomdp;
pub mod rng;
pub mod schedule;

pub(crate) mod par;
