//! Stochastic linear bandits under heavy-tailed noise.
//!
//! The centerpiece is [`estimator::HvtUcb`], a UCB policy whose parameter
//! estimate is refreshed by a single online-mirror-descent step on a Huber
//! loss each round, so the per-round cost does not depend on the number of
//! past observations. Two comparison policies live in [`baselines`]: OFUL
//! (ridge least squares) and an adaptive Huber regression policy that refits
//! on the full history by projected gradient descent every round.
//!
//! [`env`] generates synthetic instances and noise, and [`runner`] drives
//! seeded multi-trial experiments and writes CSV traces and summaries.

pub mod baselines;
pub mod env;
pub mod error;
pub mod estimator;
pub mod huber;
pub mod linalg;
pub mod policy;
pub mod runner;

pub use error::{Error, Result};
pub use linalg::{SpdMatrix, Vector};
