//! Projection filtering and smoothing on the unit sphere.
//!
//! Natural parameters of von Mises-Fisher densities are propagated by the ODEs
//! obtained from projecting the filtering and smoothing density dynamics onto the
//! family. The crate provides
//!
//! * [`sphere_math`]: κ and its derivatives, projectors, rotations, sampling on S²;
//! * [`vmf`]: the von Mises-Fisher family, its moments and conjugate update;
//! * [`dynamics`]: the sphere SDE with an Ornstein-Uhlenbeck gyro signal;
//! * [`projection`]: generic and closed-form projection ODEs, filter and smoother drivers;
//! * [`gaussian`]: the Gaussian filter/smoother baseline;
//! * [`experiment`]: the Monte Carlo harness behind the `experiment` binary.

// `!(x > 0.0)` is used on purpose so NaN is rejected; grid loops index several
// parallel arrays at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod gaussian;
pub mod ode;
pub mod projection;
pub mod sphere_math;
pub mod vmf;

pub use error::{Error, Result};
pub use sphere_math::{Mat3, Vec3};
pub use vmf::{MeasurementModel, NaturalParam};
