//! Action assignment for robot swarms that keeps working when up to α
//! robots are knocked out by a worst-case adversary.
//!
//! The pieces, bottom to top:
//!
//! - [`scenario`]: robots, targets, motion-primitive sensing footprints,
//!   seeded generation, and the versioned on-disk format.
//! - [`objective`]: the set-coverage objective f(S) = number of targets
//!   covered, plus its curvature (how far f is from additive).
//! - [`commgraph`]: disk communication graphs and the 3-round clique
//!   partition the distributed planners run on.
//! - [`robust`]: centralized planners — greedy, bait+greedy robust, and
//!   the myopic baseline.
//! - [`attacks`]: exact and greedy adversaries, and the brute-force
//!   optimum f* used to certify approximation bounds.
//! - [`distributed`]: DRM and its variants — per-clique robust planning
//!   with message/round/evaluation accounting.
//! - [`tracking`]: multi-round episodes with Kalman-filtered moving
//!   targets, per-round attacks, and bit-reproducible logs.
//!
//! Every planner resolves value ties the same way (smallest robot id,
//! then smallest action id), so all of them are deterministic functions
//! of their inputs.

pub mod attacks;
pub mod commgraph;
pub mod distributed;
pub mod error;
pub mod objective;
pub mod robust;
pub mod scenario;
pub mod tracking;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
