//! Interactive task learning engine: a symbolic kitchen simulator, episodic
//! memory, skill induction with type generalization, curiosity-driven
//! questions, a forward-search planner, goal inference with ergonomic
//! assistance, and the session state machine that ties them together and
//! emits explainability cues.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the wire
//! protocol and the CLI live in the `cuebot` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod assist;
pub mod cue;
pub mod curiosity;
pub mod episodic;
pub mod fixtures;
pub mod operator;
pub mod planner;
pub mod session;
pub mod skill;
pub mod sym;
pub mod world;

pub use sym::Sym;
