//! Motion-gated post-processing for single-object trackers.
//!
//! A tracker head scores every patch of its search area; detection-based
//! post-processing (DBPP) emits the maximum-response box each frame and has
//! no way to recover once a look-alike outscores the real target. This crate
//! implements the motion-based alternative (MBPP): a constant-velocity
//! Kalman filter predicts where the target should be, a drop in IoU between
//! the max-response box and that prediction flags drift, and the target is
//! relocated to the candidate box maximizing `similarity x IoU`.
//!
//! The crate also ships the supporting toolkit: box geometry and NMS,
//! response-map candidate extraction, the tracker training losses, a
//! detection-image-to-tracking-pair generator with hybrid dataset sampling,
//! a deterministic similar-object simulator that stands in for a neural
//! tracker, and a one-pass-evaluation (OPE) metric suite.

pub mod candidates;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod kalman;
pub mod losses;
pub mod mbpp;
#[cfg(feature = "pairgen")]
pub mod pairgen;
pub mod simulator;
pub mod stream;

pub use error::{Error, Result};
pub use geometry::{AreaAspect, BBox, CenterBox, ScoredBox};
