//! Online learning with improving agents.
//!
//! A learner publishes a hypothesis, an agent moves along an improvement
//! graph to the most valuable label it can afford, and the learner is
//! judged at the agent's final point. The crate provides the instance
//! model, best responses, the mistake-bound dimensions with witness
//! trees, the optimal learners, lower-bound adversaries, a game engine and
//! an exact minimax solver.

pub mod adversary;
pub mod dimensions;
pub mod engine;
pub mod error;
pub mod fixtures;
pub mod gen;
pub mod io;
pub mod learners;
pub mod mask;
pub mod model;
pub mod oracle;
pub mod response;

pub use error::{Error, Result};
