//! Quantum XOR games: construction, strategies, see-saw lower bounds and
//! semidefinite relaxations of the entangled bias.
//!
//! Composite indices follow `|i>|j> -> i*b + j` (0-based) everywhere,
//! including the on-disk formats.

pub mod error;
pub mod games;
pub mod heuristics;
pub mod io;
pub mod linalg;
pub mod relaxations;
pub mod report;
pub mod sdp;
pub mod strategies;

pub use error::{Error, Result};
pub use games::GameMatrix;
pub use linalg::{CMat, C64};
pub use strategies::Strategy;
