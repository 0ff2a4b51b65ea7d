//! Polarization of finite configurations on the sphere: potentials and
//! certified maxima, asymptotic bounds, tight frames, signed sums, planar
//! configurations and a heuristic minimizer.

pub mod asymptotics;
pub mod certify;
pub mod config;
pub mod error;
pub mod frames;
pub mod linalg;
pub mod net;
pub mod parallel;
pub mod planar;
pub mod rng;
pub mod search;
pub mod signsum;
pub mod special;
pub mod verify;

pub use certify::{certified_max, MaxCertificate};
pub use config::{potential, Configuration, Exponent};
pub use error::{Error, Result};
pub use parallel::with_workers;
