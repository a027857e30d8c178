//! Std-side companion to `cuebot-core`: domain and knowledge-base files, the
//! line protocol, the script runner and the TCP server.

pub mod domain;
pub mod protocol;
pub mod script;
pub mod server;
pub mod store;

pub use cuebot_core as core;
