//! Random representable matroids over finite fields.
//!
//! The crate samples the random column process over GF(q), peels matrices to their
//! 2-core, evaluates the threshold constants of the phase transition for fixed-minor
//! appearance, and provides minor finders ranging from an exhaustive oracle to the
//! instrumented supercritical pipeline.

pub mod exp;
pub mod gf;
pub mod minors;
pub mod peel;
pub mod process;
pub mod spmat;
pub mod tanner;
pub mod thresholds;
