//! Numerical laboratory for the renormalization theory of unicritical
//! analytic circle maps with an odd critical exponent.
//!
//! The crate is organised bottom-up:
//!
//! * [`contfrac`]: continued fractions, convergents and the Gauss shift.
//! * [`circlemap`]: lifts of circle maps, orbits, closest returns and
//!   rotation numbers, plus a registry of named analytic families.
//! * [`blaschke`]: the degree-`n` Blaschke models, their circle lifts and
//!   phase tuning to a prescribed rotation number.
//! * [`pairs`]: critical commuting pairs and the renormalization operator.
//! * [`experiments`]: scaling ratios, convergence and universality runs,
//!   the parameter-scaling probe and Julia set rasters.
//!
//! Data-parallel loops go through [`exec`], which uses rayon when the
//! `parallel` feature is enabled and runs sequentially otherwise.

pub mod blaschke;
pub mod circlemap;
pub mod contfrac;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod pairs;

pub use blaschke::{BlaschkeFraction, BlaschkeLift};
pub use circlemap::{CircleLift, FamilySpec, RotationEstimate};
pub use contfrac::{ContinuedFraction, Convergent};
pub use error::{Error, Result};
pub use exec::Exec;
pub use pairs::{CommutingPair, Height, IntervalMap, MapExpr, RenormRecord};

/// Schema version stamped into every JSON document the crate produces.
pub const SCHEMA_VERSION: u32 = 1;

/// Orbit positions closer than this to an integer are treated as exact
/// returns; deeper combinatorics are refused.
pub const PRECISION_FLOOR: f64 = 1e3 * f64::EPSILON;
