//! Probability-based description of mobile-to-mobile uncorrelated-scatter
//! channels over a flat scattering plane.
//!
//! Scatterers are spread uniformly over a plane and weighted by the radar
//! equation path loss. Geometry lives in prolate spheroidal coordinates with
//! the transmitter and receiver at the foci, so that the normalized delay
//! `xi` labels confocal ellipsoids. From that picture the crate evaluates the
//! joint delay-Doppler density, its hybrid and joint characteristic
//! functions, moments, asymptotic limits and coherence metrics, and it ships
//! a Monte-Carlo scatterer oracle to check all of them.

pub mod density;
pub mod doppler;
pub mod error;
pub mod geometry;
pub mod hybrid;
pub mod moments;
pub mod oracle;
pub mod quadrature;
pub mod scenario;
pub mod special;
pub mod surface;

mod ring;

pub use error::{Error, Result};
pub use geometry::{DelayRange, PlaneCoeffs, PscPoint, Scenario, Vec3};
pub use surface::{ComplexSurface, GridSpec};
