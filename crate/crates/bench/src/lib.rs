//! Shared inputs for the benchmarks.

use polarlab_core::search::random_configuration;
use polarlab_core::{Configuration, Exponent};

pub const SEED: u64 = 17;

pub fn config(n: usize, d: usize) -> Configuration {
    random_configuration(n, d, SEED).expect("n, d > 0")
}

pub fn exponent(p: f64) -> Exponent {
    Exponent::new(p).expect("positive exponent")
}

/// Row-major d×d symmetric matrix: the frame operator of a random
/// configuration of 3d vectors.
pub fn symmetric(d: usize) -> Vec<f64> {
    polarlab_core::frames::frame_operator(&config(3 * d, d)).entries
}
