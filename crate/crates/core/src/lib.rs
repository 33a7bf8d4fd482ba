//! Rating-guided intrinsic exploration for sparse-reward reinforcement learning.
//!
//! A rater scores every action of a state in `[0, 1]`; the score is added to
//! the sparse task reward as a linearly decaying bonus and a PPO agent learns
//! from the sum. Count, ICM and RND bonuses are provided for comparison.

pub mod agent;
pub mod envs;
pub mod error;
pub mod harness;
pub mod intrinsic;
pub mod numerics;
pub mod rater;

pub use error::{Error, Result};
