//! Core algorithms for estimating the subsurface ocean thermal response to
//! tropical cyclone passage from paired float profiles.
//!
//! The crate is organized around the stages of the analysis:
//!
//! * [`geodesy`] — great-circle angles, track interpolation and projection,
//!   year-aware time differences.
//! * [`profiles`] — monotone cubic (pchip) gridding of raw casts onto the
//!   20-level pressure grid, vertical averaging, and the TC / non-TC split.
//! * [`pairing`] — baseline/signal pair construction, lineage sparsification,
//!   and TC-centric coordinates.
//! * [`mean_field`] — local harmonic regression of the seasonal mean field
//!   and seasonal adjustment of temperature differences.
//! * [`gp`] — locally stationary Gaussian-process variability fits and the
//!   block-diagonal covariance of paired differences.
//! * [`tps`] — fixed-knot, covariance-reweighed thin plate splines with
//!   prediction variances, plus the natural / GLS variants.
//! * [`model_selection`] — weighted leave-one-out cross-validation and the
//!   λ^1.01 selection rule.
//!
//! Everything here is pure computation over in-memory data; IO, file formats
//! and the CLI live in the companion pipeline crate. The crate is `no_std`
//! compatible (an allocator is required).

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod blockdiag;
pub mod calendar;
pub mod geodesy;
pub mod gp;
pub mod mean_field;
pub mod model_selection;
pub mod pairing;
pub mod profiles;
pub mod stats;
pub mod tps;

mod float;
mod optim;
mod rng;
