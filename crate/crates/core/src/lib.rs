//! Acoustic wave propagation in curved tubes: a 1D Webster model, a 3D
//! wave model in tube-fitted coordinates, the forcing terms that couple
//! them, and computable bounds on the gap between the two.

pub mod averaging;
pub mod certifier;
pub mod error;
pub mod forcing;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod pipeline;
pub mod quadrature;
pub mod signals;
pub mod wave3d;
pub mod webster1d;

pub use error::{CertifierError, Error, GeometryError, SolverError};
pub use geometry::{Profile, TubeGeometry, TubeSpec};
