//! Disturbance flows of monotone circle maps and the coalescing Brownian flow.
//!
//! The crate is organised bottom-up:
//!
//! * [`map_algebra`] exact piecewise-linear monotone maps, the cross transform and
//!   the metric between maps, plus the scalar functionals of a disturbance map.
//! * [`flow_core`] event flows built from rotated copies of a map at lattice or
//!   Poisson times, interval evaluation, trajectories, rescaling and time reversal.
//! * [`flow_metrics`] distances between flows, time warps and dyadic snapping.
//! * [`coalescing_sim`] a reference sampler for coalescing Brownian motions.
//! * [`web_bridge`] compactified path distances and finite web extraction.
//! * [`harness`] statistics, experiment drivers and reports used by the `cbf` binary.

pub mod coalescing_sim;
pub mod error;
pub mod flow_core;
pub mod flow_metrics;
pub mod harness;
pub mod map_algebra;
pub mod rng;
pub mod web_bridge;

pub use error::{Error, Result};
pub use flow_core::{EventFlow, Interval, SpaceTimePoint};
pub use map_algebra::{Contraction, DisturbanceProfile, MonotoneMap, Side};
