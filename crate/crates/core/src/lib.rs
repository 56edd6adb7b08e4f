//! Simulation and verification kit for a one-dimensional combustion front:
//! particles perform rate-2 continuous-time simple symmetric random walks on
//! `Z`, a jump onto the rightmost visited site `r` ignites it (the jumper
//! branches into `a` particles and the front advances), and any jump onto a
//! site already holding `M` particles kills the jumper.
//!
//! The crate provides:
//!
//! - [`walk`]: a deterministic, counter-based store of per-label walk paths,
//!   shared by every process built on top of it;
//! - [`fast`]: an occupancy-level event engine (counts only, maximal speed);
//! - [`coupled`]: the label-level engine with ghost tracking, driven by the
//!   shared walk paths;
//! - [`auxiliary`]: the slower comparison front built from fixed finite sets
//!   of walks, and its speed estimate;
//! - [`renewal`]: detection of regeneration times on recorded coupled runs;
//! - [`estimators`]: front speed and CLT variance from regeneration
//!   increments and direct trajectories, plus the statistical test battery;
//! - [`oracles`]: closed-form roots/bounds and an exact uniformization
//!   oracle for small truncated instances;
//! - [`stats`]: shared statistical primitives (KS distances, tail fits, ...).

pub mod auxiliary;
pub mod checks;
pub mod coupled;
pub mod estimators;
pub mod fast;
pub mod model;
pub mod oracles;
pub mod renewal;
pub mod rng;
pub mod run;
pub mod stats;
pub mod walk;

pub use model::{ModelParams, Occupancy};
pub use walk::{Label, PathStore, WalkPath};
