//! Photon statistics of a Kerr-nonlinear whispering-gallery microresonator
//! whose clockwise and counterclockwise modes are coupled by two nanoscale
//! scatterers. Covers the semiclassical transmission spectrum, the Lindblad
//! steady state with g2/g3 correlations, the weak-drive analytic estimate,
//! and exceptional-point location, plus sweep/CLI plumbing.

pub mod error;
pub mod fock;
pub mod lindblad;
pub mod meanfield;
pub mod model;
pub mod sweep;
pub mod weakdrive;

pub use error::WgmError;
