//! Lossy coded caching for users with heterogeneous distortion targets.
//!
//! The library models files as successively refinable descriptions (a rate-r
//! prefix of a bit string), splits them into refinement layers, and computes
//! achievable delivery rates and lower bounds for cache-aided broadcast:
//!
//! - [`rate_model`]: distortion targets -> per-user rates and layer sizes;
//! - [`pair`]: the provably optimal scheme for 2 files and 2 users;
//! - [`layer`] / [`opt`]: per-layer rates under heterogeneous caches and the
//!   convex rate split across sub-layers;
//! - [`alloc`]: proportional and ordered cache allocation across layers,
//!   plus memory sharing;
//! - [`bounds`]: cut-set lower bound and an uncoded baseline;
//! - [`simkit`]: bit-level placement/delivery/decode to validate the rate
//!   formulas by construction;
//! - [`scenario`]: config-driven sweeps and CSV/JSON output for the CLI.

pub mod alloc;
pub mod bounds;
pub mod error;
pub mod layer;
pub mod opt;
pub mod pair;
pub mod pwl;
pub mod rate_model;
pub mod scenario;
pub mod simkit;

pub use error::{Error, Result};
