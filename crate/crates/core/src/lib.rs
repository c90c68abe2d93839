//! Parallel sets `A + rK`: construction, Lebesgue and Gaussian volume, outer
//! Minkowski content, and numerical checks of reverse isoperimetric bounds.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bodies;
pub mod error;
pub mod gaussian;
mod lp;
pub mod measure;
pub mod quad;
pub mod sampling;
pub mod surface;
pub mod verify;

pub use bodies::{BoundingBox, ConvexBody, Halfspace, ParallelHalfspace, Point, PointCloud, Scene};
pub use error::{Error, Result};
pub use measure::{Method, VolumeEstimate};
pub use sampling::ParallelSet;
pub use surface::SurfaceEstimate;

