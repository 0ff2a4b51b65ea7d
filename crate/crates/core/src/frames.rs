//! Frame operators, the p = 2 polarization, isotropy and tight-frame synthesis.

use serde::{Deserialize, Serialize};

use crate::config::{dot, normalize, Configuration};
use crate::error::{invalid, Error, Result};
use crate::linalg::jacobi_eigen;
use crate::rng;

/// Default max-norm tolerance for `A ≈ (n/d) I`.
pub const ISOTROPY_TOL: f64 = 1e-9;

/// A = Σ u_i ⊗ u_i, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameOperator {
    pub dim: usize,
    pub entries: Vec<f64>,
}

impl FrameOperator {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// max_{ij} |A_ij - c δ_ij|
    pub fn deviation_from_scalar(&self, c: f64) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { c } else { 0.0 };
                worst = worst.max((self.get(i, j) - target).abs());
            }
        }
        worst
    }

    /// ‖A‖_F², equal to the frame potential.
    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum()
    }

    /// ‖A - c I‖_F², computed without cancellation.
    pub fn excess_sq(&self, c: f64) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                let x = self.get(i, j) - if i == j { c } else { 0.0 };
                s += x * x;
            }
        }
        s
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            out[i] = dot(&self.entries[i * d..(i + 1) * d], x);
        }
    }
}

pub fn frame_operator(config: &Configuration) -> FrameOperator {
    let d = config.dim();
    let mut entries = vec![0.0; d * d];
    for u in config.iter() {
        for i in 0..d {
            for j in 0..d {
                entries[i * d + j] += u[i] * u[j];
            }
        }
    }
    let a = FrameOperator { dim: d, entries };
    debug_assert!((a.trace() - config.len() as f64).abs() <= 1e-10 * (1.0 + config.len() as f64));
    a
}

/// M²(ω) = λ_max(A) and a unit eigenvector where it is attained.
pub fn polarization_p2(config: &Configuration) -> (f64, Vec<f64>) {
    let a = frame_operator(config);
    let mut e = jacobi_eigen(&a.entries, a.dim);
    (e.values[0], e.vectors.swap_remove(0))
}

/// Σ_{i,j} ⟨u_i, u_j⟩² over ordered pairs, diagonal included.
pub fn frame_potential(config: &Configuration) -> f64 {
    let n = config.len();
    let mut off = 0.0;
    for i in 0..n {
        let ui = config.vector(i);
        for j in i + 1..n {
            let g = dot(ui, config.vector(j));
            off += g * g;
        }
    }
    let diag: f64 = config.iter().map(|u| dot(u, u) * dot(u, u)).sum();
    diag + 2.0 * off
}

#[derive(Clone, Copy, Debug)]
pub struct SynthOptions {
    /// Isotropy residual the descent aims for.
    pub target: f64,
    pub max_restarts: usize,
    pub max_steps: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            target: 1e-11,
            max_restarts: 20,
            max_steps: 200_000,
        }
    }
}

const STALL_WINDOW: usize = 50;
const STALL_REL: f64 = 1e-14;

/// A unit norm tight frame of n vectors in R^d, by projected gradient descent
/// on the frame potential from a seeded random start.
pub fn synthesize_untf(n: usize, d: usize, seed: u64) -> Result<Configuration> {
    synthesize_untf_with(n, d, seed, SynthOptions::default())
}

pub fn synthesize_untf_with(
    n: usize,
    d: usize,
    seed: u64,
    opts: SynthOptions,
) -> Result<Configuration> {
    if d == 0 || n < d {
        return invalid(format!("need n >= d >= 1, got n={n}, d={d}"));
    }
    let scale = n as f64 / d as f64;
    let mut best: Option<(f64, Configuration)> = None;
    for restart in 0..opts.max_restarts {
        let mut r = rng::stream(rng::derive_seed(seed, rng::tag::UNTF), restart as u64);
        let mut coords = Vec::with_capacity(n * d);
        for _ in 0..n {
            coords.extend(rng::unit_vector(&mut r, d));
        }
        let (c, residual) = descend(n, d, coords, scale, opts);
        if residual <= opts.target {
            return Ok(Configuration::from_flat_unchecked(d, c));
        }
        if best.as_ref().is_none_or(|(b, _)| residual < *b) {
            best = Some((residual, Configuration::from_flat_unchecked(d, c)));
        }
    }
    match best {
        // Near-misses that still meet the published 1e-8 contract are usable.
        Some((res, c)) if res <= 1e-8 => Ok(c),
        Some((res, _)) => Err(Error::NoConvergence(format!(
            "tight frame synthesis for n={n}, d={d} stalled at residual {res:e}"
        ))),
        None => unreachable!("at least one restart runs"),
    }
}

fn operator(n: usize, d: usize, coords: &[f64]) -> FrameOperator {
    frame_operator(&Configuration::from_flat_unchecked(
        d,
        coords[..n * d].to_vec(),
    ))
}

/// Descend until the residual target, a stall, or the step budget.
///
/// On the product of spheres tr A = n, so the frame potential and
/// ‖A - (n/d) I‖_F² differ by a constant. The latter is tracked because it
/// stays resolvable in floating point near the minimum.
fn descend(
    n: usize,
    d: usize,
    mut coords: Vec<f64>,
    scale: f64,
    opts: SynthOptions,
) -> (Vec<f64>, f64) {
    let mut a = operator(n, d, &coords);
    let mut fp = a.excess_sq(scale);
    let mut history = std::collections::VecDeque::with_capacity(STALL_WINDOW + 1);
    let mut grad = vec![0.0; n * d];
    let mut trial = vec![0.0; n * d];
    let mut au = vec![0.0; d];
    for _ in 0..opts.max_steps {
        let residual = a.deviation_from_scalar(scale);
        if residual <= opts.target {
            return (coords, residual);
        }
        history.push_back(fp);
        if history.len() > STALL_WINDOW {
            let old = history.pop_front().unwrap();
            if (old - fp) <= STALL_REL * old {
                return (coords, residual);
            }
        }
        // Riemannian gradient of ‖A‖_F² on the product of spheres.
        for i in 0..n {
            let u = &coords[i * d..(i + 1) * d];
            a.apply(u, &mut au);
            let radial = dot(u, &au);
            for k in 0..d {
                grad[i * d + k] = 4.0 * (au[k] - radial * u[k]);
            }
        }
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if gnorm2 == 0.0 {
            return (coords, residual);
        }
        let mut t = 0.1;
        let mut accepted = false;
        while t > 1e-12 {
            for i in 0..n {
                let dst = &mut trial[i * d..(i + 1) * d];
                for k in 0..d {
                    dst[k] = coords[i * d + k] - t * grad[i * d + k];
                }
                normalize(dst);
            }
            let a_new = operator(n, d, &trial);
            let fp_new = a_new.excess_sq(scale);
            if fp_new < fp {
                std::mem::swap(&mut coords, &mut trial);
                a = a_new;
                fp = fp_new;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return (coords.clone(), a.deviation_from_scalar(scale));
        }
    }
    let residual = a.deviation_from_scalar(scale);
    (coords, residual)
}

/// The three disc moments for d = 3, after flipping each vector so its third
/// coordinate is nonnegative; z_i is the projection onto the first two
/// coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscMoments {
    /// Σ|z_i|² - 2n/3
    pub norm_excess: f64,
    /// Σ z_i², as (re, im)
    pub square_sum: [f64; 2],
    /// Σ z_i √(1 - |z_i|²), as (re, im)
    pub mixed_sum: [f64; 2],
}

impl DiscMoments {
    pub fn max_abs(&self) -> f64 {
        let h = |z: [f64; 2]| z[0].hypot(z[1]);
        self.norm_excess
            .abs()
            .max(h(self.square_sum))
            .max(h(self.mixed_sum))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotropyReport {
    pub n: usize,
    pub dim: usize,
    /// max_{ij} |A_ij - (n/d) δ_ij|
    pub residual: f64,
    pub tol: f64,
    pub is_isotropic: bool,
    /// Σ z_i² as (re, im), d = 2 only.
    pub planar_moment: Option<[f64; 2]>,
    /// d = 3 only.
    pub disc_moments: Option<DiscMoments>,
    pub n_below_dim: bool,
}

pub fn isotropy_report(config: &Configuration, tol: f64) -> IsotropyReport {
    let n = config.len();
    let d = config.dim();
    let residual = frame_operator(config).deviation_from_scalar(n as f64 / d as f64);
    let planar_moment = (d == 2).then(|| {
        let mut s = [0.0, 0.0];
        for u in config.iter() {
            s[0] += u[0] * u[0] - u[1] * u[1];
            s[1] += 2.0 * u[0] * u[1];
        }
        s
    });
    let disc_moments = (d == 3).then(|| {
        let mut m = DiscMoments {
            norm_excess: -2.0 * n as f64 / 3.0,
            square_sum: [0.0, 0.0],
            mixed_sum: [0.0, 0.0],
        };
        for u in config.iter() {
            let (x, y, w) = if u[2] < 0.0 {
                (-u[0], -u[1], -u[2])
            } else {
                (u[0], u[1], u[2])
            };
            let r2 = x * x + y * y;
            m.norm_excess += r2;
            m.square_sum[0] += x * x - y * y;
            m.square_sum[1] += 2.0 * x * y;
            // √(1 - |z|²) = w for a unit vector with w >= 0; exact on the equator.
            m.mixed_sum[0] += x * w;
            m.mixed_sum[1] += y * w;
        }
        m
    });
    IsotropyReport {
        n,
        dim: d,
        residual,
        tol,
        is_isotropic: residual <= tol,
        planar_moment,
        disc_moments,
        n_below_dim: config.is_underdetermined(),
    }
}

/// Isotropy report with the complex moment fields; d must be 2 or 3.
pub fn low_dim_isotropy_check(config: &Configuration) -> Result<IsotropyReport> {
    if !(2..=3).contains(&config.dim()) {
        return invalid(format!(
            "complex moments need d = 2 or 3, got d = {}",
            config.dim()
        ));
    }
    Ok(isotropy_report(config, ISOTROPY_TOL))
}
