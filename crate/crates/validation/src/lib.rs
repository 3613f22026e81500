//! Independent reference implementations and random problem generators used
//! to check `lineup-core` against brute force and textbook algorithms.

pub mod instances;
pub mod oracles;

/// Invariants of the public API, checked on random inputs.
#[cfg(test)]
mod properties;
