//! Numerical experiments built on the core modules. Every report records how
//! deep its claims are certified.

pub mod delta;
pub mod raster;
pub mod scaling;

pub use delta::{delta_estimate, DeltaRatio, DeltaReport};
pub use raster::{classify_point, julia_raster, PixelClass, RasterImage, RasterParams, Window};
pub use scaling::{
    discrepancy_by_level, renorm_convergence, scaling_ratios, universality_compare, ConvergenceOptions,
    ConvergenceReport, ScalingRatios, UniversalityOptions, UniversalityReport,
};
