//! Code ensembles over ℝⁿ and their worst-case list sizes.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constellations;
pub mod construction_a;
pub mod error;
pub mod finite_field;
pub mod geometry;
pub mod haar;
pub mod lattice;
pub mod seed;
pub mod spherical;

pub use constellations::PeriodicConstellation;
pub use error::{Error, Result};
pub use finite_field::LinearCodeFq;
pub use geometry::{ChannelParams, ListReport, NetKind, NetSpec, ReportMode, SearchMode};
pub use lattice::{Lattice, LatticePoint, RadiiReport};
pub use seed::trial_rng;
pub use spherical::{Attack, SphericalCode};
