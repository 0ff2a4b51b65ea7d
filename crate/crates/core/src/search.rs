//! Heuristic minimization of M^p over n-point configurations.
//!
//! The inner maximum is replaced by a soft-max over a fixed net, the outer
//! problem is descended with finite-difference gradients on the product of
//! spheres, and every candidate is judged by a certified upper bound. Nothing
//! here certifies that the minimum itself was found.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::mu;
use crate::certify::{certified_max, MaxCertificate};
use crate::config::{dot, normalize, Configuration, Exponent};
use crate::error::{invalid, Error, Result};
use crate::frames::synthesize_untf;
use crate::net::{sphere_net_with_budget, NetKind};
use crate::rng;

/// n iid uniform points on S^{d-1}; vector i is drawn from stream (seed, i).
pub fn random_configuration(n: usize, d: usize, seed: u64) -> Result<Configuration> {
    if n == 0 || d == 0 {
        return invalid("n and d must be positive");
    }
    let coords = (0..n as u64)
        .flat_map(|i| rng::unit_vector(&mut rng::stream(seed, i), d))
        .collect();
    Ok(Configuration::from_flat_unchecked(d, coords))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuredStarts {
    pub onb_copies: bool,
    pub untf: bool,
    /// d = 2 only: lines at angles kπ/n.
    pub planar_equispaced: bool,
}

impl StructuredStarts {
    pub const ALL: StructuredStarts = StructuredStarts {
        onb_copies: true,
        untf: true,
        planar_equispaced: true,
    };
    pub const NONE: StructuredStarts = StructuredStarts {
        onb_copies: false,
        untf: false,
        planar_equispaced: false,
    };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Seeded random starts, run after the structured ones.
    pub restarts: usize,
    /// δ for certification.
    pub net_delta: f64,
    pub outer_steps: usize,
    /// Soft-max parameter β; 50/n when absent.
    pub smoothing: Option<f64>,
    pub seed: u64,
    pub structured: StructuredStarts,
    pub certify_every: usize,
    /// Upper limit on the size of the surrogate net.
    pub surrogate_points: usize,
    pub fd_step: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            restarts: 4,
            net_delta: 1e-2,
            outer_steps: 200,
            smoothing: None,
            seed: 0,
            structured: StructuredStarts::ALL,
            certify_every: 25,
            surrogate_points: 2000,
            fd_step: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub start: String,
    pub start_index: usize,
    pub step: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub start: String,
    /// Certified upper bound of the unmodified start.
    pub initial_upper: f64,
    pub best_upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub n: usize,
    pub d: usize,
    pub p: Exponent,
    pub best: Configuration,
    pub certificate: MaxCertificate,
    /// n μ_{d,p}
    pub lower_bound: f64,
    pub gap: f64,
    pub provenance: Provenance,
    pub starts: Vec<StartSummary>,
    pub converged: bool,
    pub heuristic: bool,
}

pub fn minimize_polarization(
    n: usize,
    d: usize,
    p: Exponent,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    if n == 0 || d == 0 {
        return invalid("n and d must be positive");
    }
    if opts.restarts == 0 {
        return invalid("restarts must be at least 1");
    }
    if !(opts.net_delta > 0.0) {
        return invalid("net_delta must be positive");
    }
    let beta = opts.smoothing.unwrap_or(50.0 / n as f64);
    if !(beta > 0.0 && beta.is_finite()) {
        return invalid("smoothing must be positive");
    }

    let mut starts: Vec<(String, Configuration)> = Vec::new();
    if opts.structured.onb_copies {
        starts.push(("onb-copies".into(), Configuration::onb_copies(n, d)?));
    }
    if opts.structured.untf && n >= d {
        starts.push(("untf".into(), synthesize_untf(n, d, opts.seed)?));
    }
    if opts.structured.planar_equispaced && d == 2 {
        let angles: Vec<f64> = (0..n).map(|k| PI * k as f64 / n as f64).collect();
        starts.push((
            "planar-equispaced".into(),
            Configuration::from_angles(&angles)?,
        ));
    }
    let base = rng::derive_seed(opts.seed, rng::tag::SEARCH);
    for r in 0..opts.restarts {
        starts.push((
            format!("random-{r}"),
            random_configuration(n, d, rng::derive_seed(base, r as u64))?,
        ));
    }

    let net = surrogate_net(d, opts.surrogate_points)?;
    let runs = starts
        .par_iter()
        .map(|(_, c)| run_start(c, p, beta, &net, opts))
        .collect::<Result<Vec<_>>>()?;

    let mut best: Option<(usize, Candidate)> = None;
    let mut summaries = Vec::with_capacity(runs.len());
    for (index, run) in runs.into_iter().enumerate() {
        summaries.push(StartSummary {
            start: starts[index].0.clone(),
            initial_upper: run.initial_upper,
            best_upper: run.best.certificate.upper,
        });
        if best
            .as_ref()
            .is_none_or(|(_, b)| run.best.certificate.upper < b.certificate.upper)
        {
            best = Some((index, run.best));
        }
    }
    let (index, cand) = best.expect("at least one start");
    let lower_bound = n as f64 * mu(d, p);
    Ok(SearchResult {
        n,
        d,
        p,
        gap: cand.certificate.upper - lower_bound,
        converged: cand.certificate.converged,
        best: cand.config,
        certificate: cand.certificate,
        lower_bound,
        provenance: Provenance {
            start: starts[index].0.clone(),
            start_index: index,
            step: cand.step,
        },
        starts: summaries,
        heuristic: true,
    })
}

/// Coarsest spherical net with at most `max_points` points, starting from a
/// fine radius and growing it.
fn surrogate_net(d: usize, max_points: usize) -> Result<Vec<f64>> {
    let mut delta: f64 = 0.02;
    loop {
        match sphere_net_with_budget(d, delta, NetKind::Spherical, max_points) {
            Ok(net) => return Ok(net.flat().to_vec()),
            Err(Error::Budget(_)) if delta < 1.5 => delta *= 1.2,
            Err(e) => return Err(e),
        }
    }
}

struct Candidate {
    config: Configuration,
    certificate: MaxCertificate,
    step: usize,
}

struct Run {
    initial_upper: f64,
    best: Candidate,
}

/// Per-start state: vectors plus the table of |⟨w, u_i⟩|^p over the net.
struct Surrogate<'a> {
    net: &'a [f64],
    d: usize,
    p: Exponent,
    beta: f64,
    coords: Vec<f64>,
    /// terms[w * n + i]
    terms: Vec<f64>,
    totals: Vec<f64>,
}

impl<'a> Surrogate<'a> {
    fn new(net: &'a [f64], config: &Configuration, p: Exponent, beta: f64) -> Self {
        let d = config.dim();
        let n = config.len();
        let m = net.len() / d;
        let mut terms = vec![0.0; m * n];
        let mut totals = vec![0.0; m];
        for w in 0..m {
            let pt = &net[w * d..(w + 1) * d];
            for (i, u) in config.iter().enumerate() {
                terms[w * n + i] = p.pow_abs(dot(pt, u));
            }
            totals[w] = terms[w * n..(w + 1) * n].iter().sum();
        }
        Surrogate {
            net,
            d,
            p,
            beta,
            coords: config.coords().to_vec(),
            terms,
            totals,
        }
    }

    fn n(&self) -> usize {
        self.coords.len() / self.d
    }

    fn softmax(&self, values: impl Iterator<Item = f64> + Clone) -> f64 {
        let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = values.map(|v| (self.beta * (v - m)).exp()).sum();
        m + s.ln() / self.beta
    }

    fn value(&self) -> f64 {
        self.softmax(self.totals.iter().copied())
    }

    /// Soft-max with vector i replaced by `u`.
    fn value_with(&self, i: usize, u: &[f64], scratch: &mut Vec<f64>) -> f64 {
        let n = self.n();
        let d = self.d;
        scratch.clear();
        for (w, t) in self.totals.iter().enumerate() {
            let pt = &self.net[w * d..(w + 1) * d];
            scratch.push(t - self.terms[w * n + i] + self.p.pow_abs(dot(pt, u)));
        }
        self.softmax(scratch.iter().copied())
    }

    /// Finite-difference Riemannian gradient, ambient coordinates.
    fn gradient(&self, h: f64) -> Vec<f64> {
        let d = self.d;
        let mut grad = vec![0.0; self.coords.len()];
        let mut scratch = Vec::with_capacity(self.totals.len());
        let mut up = vec![0.0; d];
        let mut dn = vec![0.0; d];
        for i in 0..self.n() {
            let u = &self.coords[i * d..(i + 1) * d];
            for t in tangent_basis(u) {
                for k in 0..d {
                    up[k] = u[k] + h * t[k];
                    dn[k] = u[k] - h * t[k];
                }
                normalize(&mut up);
                normalize(&mut dn);
                let g = (self.value_with(i, &up, &mut scratch)
                    - self.value_with(i, &dn, &mut scratch))
                    / (2.0 * h);
                for k in 0..d {
                    grad[i * d + k] += g * t[k];
                }
            }
        }
        grad
    }

    fn config(&self) -> Configuration {
        Configuration::from_flat_unchecked(self.d, self.coords.clone())
    }
}

/// Orthonormal basis of u^⊥ from the Householder reflection taking u to a
/// coordinate axis.
fn tangent_basis(u: &[f64]) -> Vec<Vec<f64>> {
    let d = u.len();
    let k = (0..d)
        .max_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()))
        .unwrap_or(0);
    let mut w = u.to_vec();
    w[k] += u[k].signum();
    let ww = dot(&w, &w);
    (0..d)
        .filter(|&j| j != k)
        .map(|j| {
            let mut col: Vec<f64> = (0..d).map(|r| -2.0 * w[r] * w[j] / ww).collect();
            col[j] += 1.0;
            col
        })
        .collect()
}

fn run_start(
    start: &Configuration,
    p: Exponent,
    beta: f64,
    net: &[f64],
    opts: &SearchOptions,
) -> Result<Run> {
    let d = start.dim();
    let certify = |c: &Configuration| certified_max(c, p, opts.net_delta);
    let initial = certify(start)?;
    let mut best = Candidate {
        config: start.clone(),
        certificate: initial.clone(),
        step: 0,
    };
    if d == 1 {
        // S^0: every configuration has polarization n.
        return Ok(Run {
            initial_upper: initial.upper,
            best,
        });
    }
    let mut s = Surrogate::new(net, start, p, beta);
    let mut f = s.value();
    let mut t_last: f64 = 0.1;
    let mut trial = vec![0.0; s.coords.len()];
    let mut last_certified = 0;
    for step in 1..=opts.outer_steps {
        let g = s.gradient(opts.fd_step);
        let g2: f64 = g.iter().map(|x| x * x).sum();
        if !(g2 > 0.0) || !g2.is_finite() {
            break;
        }
        let mut t = (2.0 * t_last).min(1.0 / g2.sqrt());
        let mut accepted = None;
        for _ in 0..30 {
            for i in 0..s.n() {
                let dst = &mut trial[i * d..(i + 1) * d];
                for k in 0..d {
                    dst[k] = s.coords[i * d + k] - t * g[i * d + k];
                }
                normalize(dst);
            }
            let cand = Configuration::from_flat_unchecked(d, trial.clone());
            let next = Surrogate::new(net, &cand, p, beta);
            let fv = next.value();
            if fv <= f - 1e-4 * t * g2 {
                accepted = Some((next, fv));
                break;
            }
            t *= 0.5;
        }
        let Some((next, fv)) = accepted else { break };
        s = next;
        f = fv;
        t_last = t;
        if step % opts.certify_every.max(1) == 0 {
            last_certified = step;
            consider(&mut best, s.config(), step, &certify)?;
        }
    }
    let steps_done = last_certified;
    let final_config = s.config();
    if final_config != best.config {
        consider(&mut best, final_config, steps_done.max(1), &certify)?;
    }
    Ok(Run {
        initial_upper: initial.upper,
        best,
    })
}

fn consider(
    best: &mut Candidate,
    config: Configuration,
    step: usize,
    certify: &impl Fn(&Configuration) -> Result<MaxCertificate>,
) -> Result<()> {
    let cert = certify(&config)?;
    if cert.upper < best.certificate.upper {
        *best = Candidate {
            config,
            certificate: cert,
            step,
        };
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarSearchOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Grid points per line used to locate the local maxima.
    pub grid_per_line: usize,
    pub max_iterations: usize,
    /// Width of the final certificate; chosen from n and p when absent.
    pub certify_delta: Option<f64>,
}

impl Default for PlanarSearchOptions {
    fn default() -> Self {
        PlanarSearchOptions {
            restarts: 16,
            seed: 0,
            grid_per_line: 64,
            max_iterations: 2000,
            certify_delta: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarSearchResult {
    /// Line angles in [0, π).
    pub angles: Vec<f64>,
    pub certificate: MaxCertificate,
    pub start: usize,
    pub iterations: usize,
}

/// δ whose modulus is 1e-8 for n lines.
fn fine_delta(n: usize, p: Exponent) -> f64 {
    let target = 1e-8 / n as f64;
    let pf = p.get();
    if pf >= 1.0 {
        target / pf
    } else {
        target.powf(1.0 / pf)
    }
}

/// Minimize M^p over n lines in the plane, parametrized by angles, from
/// seeded random starts.
///
/// Each iteration locates every local maximum φ_k of U(φ) = Σ |cos(φ - α_i)|^p
/// and takes a proximal step on the piecewise-linear model
/// max_k (U(φ_k) + ∇_α U(φ_k) · Δ) + σ|Δ|²/2, whose dual is a small quadratic
/// program over the simplex.
pub fn minimize_planar(
    n: usize,
    p: Exponent,
    opts: &PlanarSearchOptions,
) -> Result<PlanarSearchResult> {
    if n == 0 || opts.restarts == 0 {
        return invalid("n and restarts must be positive");
    }
    let runs: Vec<(Vec<f64>, f64, usize)> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut g = rng::stream(rng::derive_seed(opts.seed, rng::tag::PLANAR_SCAN), r as u64);
            let angles: Vec<f64> = (0..n)
                .map(|_| PI * rand::Rng::random::<f64>(&mut g))
                .collect();
            proximal_minimax(angles, p, opts)
        })
        .collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.1 < runs[best].1 {
            best = i;
        }
    }
    let (angles, _, iterations) = runs[best].clone();
    let angles: Vec<f64> = angles.iter().map(|a| a.rem_euclid(PI)).collect();
    let delta = opts.certify_delta.unwrap_or_else(|| fine_delta(n, p));
    let certificate = certified_max(&Configuration::from_angles(&angles)?, p, delta)?;
    Ok(PlanarSearchResult {
        angles,
        certificate,
        start: best,
        iterations,
    })
}

struct Peak {
    phi: f64,
    value: f64,
}

fn line_potential(angles: &[f64], p: Exponent, phi: f64) -> f64 {
    angles.iter().map(|a| p.pow_abs((phi - a).cos())).sum()
}

/// First and second derivative of U in φ.
fn line_derivatives(angles: &[f64], p: Exponent, phi: f64) -> (f64, f64) {
    let pf = p.get();
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for a in angles {
        let (s, c) = (phi - a).sin_cos();
        let ac = c.abs();
        if ac < 1e-300 {
            continue;
        }
        let cp = p.pow_abs(c);
        d1 -= pf * cp / c * s;
        d2 += pf * (pf - 1.0) * cp / (ac * ac) * s * s - pf * cp;
    }
    (d1, d2)
}

/// All local maxima of U on [0, π).
fn find_peaks(angles: &[f64], p: Exponent, grid_per_line: usize) -> Vec<Peak> {
    let g = grid_per_line * angles.len().max(1);
    let h = PI / g as f64;
    let vals: Vec<f64> = (0..g)
        .map(|j| line_potential(angles, p, h * j as f64))
        .collect();
    let mut peaks = Vec::new();
    for j in 0..g {
        let prev = vals[(j + g - 1) % g];
        let next = vals[(j + 1) % g];
        if vals[j] >= prev && vals[j] > next {
            peaks.push(refine_peak(angles, p, h * j as f64, h));
        }
    }
    if peaks.is_empty() {
        // Constant potential on the grid.
        peaks.push(Peak {
            phi: 0.0,
            value: vals[0],
        });
    }
    peaks
}

/// Golden-section search on [x - h, x + h], then guarded Newton steps.
fn refine_peak(angles: &[f64], p: Exponent, x: f64, h: f64) -> Peak {
    let f = |t: f64| line_potential(angles, p, t);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (x - h, x + h);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if b - a < 1e-15 {
            break;
        }
    }
    let mut phi = 0.5 * (a + b);
    let mut value = f(phi);
    for _ in 0..4 {
        let (d1, d2) = line_derivatives(angles, p, phi);
        if !(d2 < 0.0) {
            break;
        }
        let next = phi - d1 / d2;
        let v = f(next);
        if (next - phi).abs() > h || v < value {
            break;
        }
        phi = next;
        value = v;
    }
    Peak { phi, value }
}

/// ∂U(φ)/∂α_i
fn angle_gradient(angles: &[f64], p: Exponent, phi: f64) -> Vec<f64> {
    let pf = p.get();
    angles
        .iter()
        .map(|a| {
            let (s, c) = (phi - a).sin_cos();
            if c.abs() < 1e-300 {
                0.0
            } else {
                pf * p.pow_abs(c) / c * s
            }
        })
        .collect()
}

/// max over λ in the simplex of λ·L - |Gᵀλ|² / (2σ), by accelerated projected
/// gradient ascent.
fn simplex_qp(values: &[f64], grads: &[Vec<f64>], sigma: f64) -> Vec<f64> {
    let k = values.len();
    let n = grads[0].len();
    let mut gram = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            gram[i * k + j] = dot(&grads[i], &grads[j]);
        }
    }
    let lip = gram.iter().map(|x| x.abs()).sum::<f64>().max(1e-300) / sigma;
    let step = 1.0 / lip;
    let mut lam = vec![1.0 / k as f64; k];
    let mut y = lam.clone();
    let mut tk: f64 = 1.0;
    for _ in 0..5000 {
        let grad: Vec<f64> = (0..k)
            .map(|i| values[i] - (0..k).map(|j| gram[i * k + j] * y[j]).sum::<f64>() / sigma)
            .collect();
        let mut next: Vec<f64> = (0..k).map(|i| y[i] + step * grad[i]).collect();
        project_simplex(&mut next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
        let moved: f64 = next.iter().zip(&lam).map(|(a, b)| (a - b).abs()).sum();
        for i in 0..k {
            y[i] = next[i] + (tk - 1.0) / t_next * (next[i] - lam[i]);
        }
        lam = next;
        tk = t_next;
        if moved < 1e-16 {
            break;
        }
    }
    let _ = n;
    lam
}

fn project_simplex(x: &mut [f64]) {
    let mut s = x.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, v) in s.iter().enumerate() {
        acc += v;
        let t = (acc - 1.0) / (i + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    x.iter_mut().for_each(|v| *v = (*v - theta).max(0.0));
}

fn proximal_minimax(
    mut angles: Vec<f64>,
    p: Exponent,
    opts: &PlanarSearchOptions,
) -> (Vec<f64>, f64, usize) {
    let n = angles.len();
    let mut peaks = find_peaks(&angles, p, opts.grid_per_line);
    let mut value = peaks
        .iter()
        .map(|q| q.value)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut sigma = n as f64;
    let mut iterations = 0;
    while iterations < opts.max_iterations && sigma < 1e14 {
        iterations += 1;
        let values: Vec<f64> = peaks.iter().map(|q| q.value).collect();
        let grads: Vec<Vec<f64>> = peaks
            .iter()
            .map(|q| angle_gradient(&angles, p, q.phi))
            .collect();
        let lam = simplex_qp(&values, &grads, sigma);
        let mut delta = vec![0.0; n];
        for (l, g) in lam.iter().zip(&grads) {
            for i in 0..n {
                delta[i] -= l * g[i] / sigma;
            }
        }
        let size = delta.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if size < 1e-15 {
            break;
        }
        let trial: Vec<f64> = angles.iter().zip(&delta).map(|(a, d)| a + d).collect();
        let trial_peaks = find_peaks(&trial, p, opts.grid_per_line);
        let trial_value = trial_peaks
            .iter()
            .map(|q| q.value)
            .fold(f64::NEG_INFINITY, f64::max);
        if trial_value < value {
            angles = trial;
            peaks = trial_peaks;
            value = trial_value;
            sigma = (sigma * 0.5).max(1e-6);
        } else {
            sigma *= 4.0;
        }
    }
    (angles, value, iterations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::isotropy_report;
    use crate::planar::{equidistribution_residual, prop5_value};

    fn exp(p: f64) -> Exponent {
        Exponent::new(p).unwrap()
    }

    fn quick(seed: u64) -> SearchOptions {
        SearchOptions {
            restarts: 2,
            outer_steps: 50,
            net_delta: 1e-2,
            seed,
            ..SearchOptions::default()
        }
    }

    #[test]
    fn random_configuration_examples() {
        let c = random_configuration(1, 1, 3).unwrap();
        assert!(c.vector(0) == [1.0] || c.vector(0) == [-1.0]);
        assert_eq!(
            random_configuration(7, 3, 9).unwrap(),
            random_configuration(7, 3, 9).unwrap()
        );
        let c = random_configuration(1000, 5, 1).unwrap();
        let v = [1.0, 0.0, 0.0, 0.0, 0.0];
        let xs: Vec<f64> = c.iter().map(|u| dot(u, &v).powi(2)).collect();
        let mean = xs.iter().sum::<f64>() / 1000.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 999.0;
        assert!((mean - 0.2).abs() <= 4.0 * (var / 1000.0).sqrt(), "{mean}");
        // Prefix stability: vector i depends only on (seed, i).
        let short = random_configuration(3, 5, 1).unwrap();
        assert_eq!(short.coords(), &c.coords()[..15]);
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        let mut r = rng::stream(2, 0);
        for d in 2..7 {
            let u = rng::unit_vector(&mut r, d);
            let b = tangent_basis(&u);
            assert_eq!(b.len(), d - 1);
            for (i, x) in b.iter().enumerate() {
                assert!(dot(x, &u).abs() < 1e-14);
                for (j, y) in b.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(x, y) - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn two_lines_p2() {
        let r = minimize_polarization(2, 2, exp(2.0), &quick(1)).unwrap();
        assert!(r.certificate.contains(1.0, 1e-12), "{:?}", r.certificate);
        assert!(r.gap >= -1e-9);
    }

    #[test]
    fn three_lines_p1_without_hints() {
        let opts = SearchOptions {
            structured: StructuredStarts::NONE,
            restarts: 4,
            outer_steps: 300,
            net_delta: 1e-3,
            ..quick(5)
        };
        let r = minimize_polarization(3, 2, exp(1.0), &opts).unwrap();
        assert!(
            r.certificate.lower <= 2.0 + r.certificate.modulus,
            "{:?}",
            r.certificate
        );
        assert!(r.certificate.upper >= 2.0 - 1e-12);
    }

    #[test]
    fn basis_is_found_for_p1() {
        for d in 2..=4 {
            let r = minimize_polarization(d, d, exp(1.0), &quick(2)).unwrap();
            let want = (d as f64).sqrt();
            assert!(r.certificate.upper >= want - 1e-9);
            assert!(r.certificate.lower <= want + r.certificate.modulus);
        }
    }

    #[test]
    fn p2_search_reaches_isotropy() {
        for d in 2..=4 {
            for n in d..=d + 3 {
                let r = minimize_polarization(n, d, exp(2.0), &quick(3)).unwrap();
                let target = n as f64 / d as f64;
                assert!(
                    r.certificate.upper <= target + 1e-3,
                    "n={n} d={d}: {:?}",
                    r.certificate
                );
                assert!(isotropy_report(&r.best, 1e-2).is_isotropic);
            }
        }
    }

    #[test]
    fn never_worse_than_structured_starts() {
        let r = minimize_polarization(5, 3, exp(1.5), &quick(4)).unwrap();
        for s in &r.starts {
            assert!(r.certificate.upper <= s.initial_upper);
        }
        assert!(r.heuristic);
    }

    #[test]
    fn search_is_deterministic() {
        let a = minimize_polarization(4, 3, exp(1.0), &quick(8)).unwrap();
        let b = minimize_polarization(4, 3, exp(1.0), &quick(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn planar_minimizer_finds_spaced_lines() {
        for (n, p) in [(3, 1.0), (3, 3.0), (4, 0.5), (5, 1.0), (2, 3.0)] {
            let r = minimize_planar(n, exp(p), &PlanarSearchOptions::default()).unwrap();
            let residual = equidistribution_residual(&r.angles);
            assert!(residual <= 1e-4, "n={n} p={p}: residual {residual}");
            if p <= 1.0 {
                let v = prop5_value(n, exp(p)).unwrap();
                assert!((r.certificate.lower - v).abs() < 1e-7, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn simplex_projection() {
        let mut x = vec![0.5, 0.5, 0.5];
        project_simplex(&mut x);
        assert!(x.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        let mut x = vec![2.0, 0.0, -1.0];
        project_simplex(&mut x);
        assert_eq!(x, vec![1.0, 0.0, 0.0]);
    }
}
