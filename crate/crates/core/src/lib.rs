//! Verification of sound QNP abstractions for generalized planning.
//!
//! The pipeline compiles a STRIPS-like domain into a basic action theory,
//! regresses the refinements of high-level actions through it, generates
//! first-order verification conditions and discharges them with an external
//! SMT solver. A finite-model oracle provides an independent semantics for
//! testing every stage.

pub mod bat;
pub mod golog;
pub mod logic;
pub mod oracle;
pub mod pipeline;
pub mod qnp;
pub mod regression;
pub mod sexpr;
pub mod smt;
pub mod vcgen;
