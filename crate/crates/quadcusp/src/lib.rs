//! Rational quadrics, their isotropic cones and the geometry of the associated symmetric
//! spaces: exact form algebra, Busemann functions and horoballs, rational point enumeration,
//! Diophantine approximation on rational quadrics and the cusp excursions of geodesics.

pub mod approx;
pub mod catalog;
pub mod conepoints;
pub mod dioph;
pub mod error;
pub mod excursion;
pub mod forms;
pub mod horoball;
pub mod frame;
pub mod json;
pub mod rational;
pub mod sampling;
pub mod symspace;
pub mod ubiquity;

pub use approx::ApproxFunction;
pub use error::{Error, Result};
pub use conepoints::{ConeRegion, CountingHistogram, CuspPool};
pub use forms::{IsotropicVector, RatSymForm};
pub use frame::{witt_frame, CuspFrame, UnipotentCoord};
pub use symspace::PosDefForm;
