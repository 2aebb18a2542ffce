//! Multialphabet arithmetic coding with adaptive probability models.
//!
//! The crate is split into an exact-arithmetic reference coder (`exact`),
//! which trades speed for digit-for-digit reproducible behavior, and a
//! fixed-precision integer engine (`coder`) meant for real use. Supporting
//! modules provide probability models (`model`), digit buffering and byte
//! packing (`digits`), a binary coder with decision trees (`binary`),
//! decoder symbol-search strategies (`search`), and a deterministic
//! complexity-measurement harness (`bench`).

pub mod bench;
pub mod binary;
pub mod coder;
pub mod digits;
pub mod exact;
pub mod model;
pub mod search;
