//! Certified maximization of the potential over the sphere.
//!
//! [`certified_max`] encloses M^p(ω) = max_v U^p(ω, v) between a lower bound
//! attained at an explicit witness and a rigorous upper bound. The sphere is
//! covered by centrally projected boxes on the faces of the cube; every box is
//! contained in a geodesic cap `C(c, τ)` around its center, and the supremum of
//! the potential over the cap is bounded three ways:
//!
//! * per term: `sup_C |⟨v,u⟩| = cos(max(0, ψ - τ))` with ψ the angle from c to
//!   the line through u;
//! * second order: terms whose sign is fixed on the cap are smooth, so a
//!   Taylor bound along geodesics applies, using a curvature bound built from
//!   the per-term range of `|⟨v,u⟩|`;
//! * for p = 2 only: U is the quadratic form of the frame operator, and
//!   `λ_max` is bounded by its largest absolute row sum.
//!
//! Boxes are bisected breadth-first while their bound exceeds
//! `lower + modulus(δ)`, where the modulus is the continuity allowance of a
//! uniform δ-net: `n p δ` for p ≥ 1 and `n δ^p` for p < 1. Once a box's chord
//! radius is at most δ the per-term bound is within the modulus of the center
//! value, so refinement always terminates, and
//! `lower <= M^p(ω) <= upper <= lower + modulus`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{
    check_direction, dot, normalize, potential_unchecked, Configuration, Exponent,
};
use crate::error::{invalid, Result};
use crate::net::{FaceCell, MAX_CELL_DIM};

/// Default cap on the number of evaluated cells.
pub const DEFAULT_CELL_BUDGET: u64 = 20_000_000;

pub const CONSTRUCTION_TAG: &str = "adaptive-cube-faces";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxCertificate {
    pub lower: f64,
    pub upper: f64,
    /// Direction where `lower` is attained.
    pub witness: Vec<f64>,
    pub modulus: f64,
    pub net_delta: f64,
    pub p: Exponent,
    pub construction: String,
    /// False when the cell budget ran out before the enclosure reached the
    /// requested width. The enclosure is still sound, only wider.
    pub converged: bool,
    pub cells_evaluated: u64,
    /// Set when the configuration has fewer vectors than dimensions.
    pub n_below_dim: bool,
}

impl MaxCertificate {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64, slack: f64) -> bool {
        self.lower - slack <= value && value <= self.upper + slack
    }
}

/// Continuity allowance of the potential over a δ-net.
pub fn modulus(n: usize, p: Exponent, delta: f64) -> f64 {
    let p = p.get();
    if p >= 1.0 {
        n as f64 * p * delta
    } else {
        n as f64 * delta.powf(p)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CertifyOptions {
    pub cell_budget: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            cell_budget: DEFAULT_CELL_BUDGET,
        }
    }
}

pub fn certified_max(config: &Configuration, p: Exponent, delta: f64) -> Result<MaxCertificate> {
    certified_max_with(config, p, delta, CertifyOptions::default())
}

pub fn certified_max_with(
    config: &Configuration,
    p: Exponent,
    delta: f64,
    opts: CertifyOptions,
) -> Result<MaxCertificate> {
    if !(delta > 0.0 && delta.is_finite()) {
        return invalid(format!("delta must be positive, got {delta}"));
    }
    let d = config.dim();
    let n = config.len();
    let modulus = modulus(n, p, delta);
    let base = MaxCertificate {
        lower: 0.0,
        upper: 0.0,
        witness: vec![],
        modulus,
        net_delta: delta,
        p,
        construction: CONSTRUCTION_TAG.to_string(),
        converged: true,
        cells_evaluated: 0,
        n_below_dim: config.is_underdetermined(),
    };
    if d == 1 {
        // S^0 = {+1, -1}; both points give the same value.
        let value = potential_unchecked(config, &[1.0], p);
        return Ok(MaxCertificate {
            lower: value,
            upper: value,
            witness: vec![1.0],
            cells_evaluated: 2,
            ..base
        });
    }
    if d > MAX_CELL_DIM {
        return invalid(format!(
            "certified maximization supports d <= {MAX_CELL_DIM}"
        ));
    }

    let bounder = Bounder::new(config, p);
    let mut level: Vec<(FaceCell, f64)> = FaceCell::faces(d)
        .into_iter()
        .map(|c| (c, f64::INFINITY))
        .collect();
    let mut lower = f64::NEG_INFINITY;
    let mut witness = vec![0.0; d];
    let mut discarded = f64::NEG_INFINITY;
    let mut evaluated = 0u64;
    let mut converged = true;

    while !level.is_empty() {
        if evaluated + level.len() as u64 > opts.cell_budget {
            converged = false;
            break;
        }
        let evals: Vec<CellEval> = level.par_iter().map(|(c, _)| bounder.eval(c)).collect();
        evaluated += evals.len() as u64;

        let mut best = 0;
        for (i, e) in evals.iter().enumerate() {
            if e.value > evals[best].value {
                best = i;
            }
        }
        if evals[best].value > lower {
            let start = &evals[best].center[..d];
            let refined = refine_unchecked(config, p, start);
            let (v, f) = if refined.value >= evals[best].value {
                (refined.direction, refined.value)
            } else {
                (start.to_vec(), evals[best].value)
            };
            if f > lower {
                lower = f;
                witness = v;
            }
        }

        let threshold = lower + modulus;
        let mut next = Vec::new();
        for ((cell, _), e) in level.iter().zip(&evals) {
            if e.bound <= threshold || e.chord <= 0.25 * delta {
                discarded = discarded.max(e.bound);
            } else {
                let [a, b] = cell.split();
                next.push((a, e.bound));
                next.push((b, e.bound));
            }
        }
        level = next;
    }

    let pending = level
        .iter()
        .map(|(_, b)| *b)
        .fold(f64::NEG_INFINITY, f64::max);
    let upper = lower.max(discarded).max(pending);
    Ok(MaxCertificate {
        lower,
        upper,
        witness,
        converged,
        cells_evaluated: evaluated,
        ..base
    })
}

struct CellEval {
    center: [f64; MAX_CELL_DIM],
    value: f64,
    bound: f64,
    chord: f64,
}

/// Per-configuration data for cell bounds.
struct Bounder<'a> {
    config: &'a Configuration,
    p: Exponent,
    /// Largest absolute row sum of the frame operator (p = 2 only).
    gershgorin: Option<f64>,
}

impl<'a> Bounder<'a> {
    fn new(config: &'a Configuration, p: Exponent) -> Self {
        let gershgorin = (p.get() == 2.0).then(|| {
            let d = config.dim();
            let mut a = vec![0.0; d * d];
            for u in config.iter() {
                for i in 0..d {
                    for j in 0..d {
                        a[i * d + j] += u[i] * u[j];
                    }
                }
            }
            a.chunks_exact(d)
                .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max)
        });
        Bounder {
            config,
            p,
            gershgorin,
        }
    }

    fn eval(&self, cell: &FaceCell) -> CellEval {
        let d = self.config.dim();
        let n = self.config.len() as f64;
        let p = self.p.get();
        let mut center = [0.0; MAX_CELL_DIM];
        cell.center(&mut center);
        let c = &center[..d];
        let tau = cell.angular_radius(c);
        let (st, ct) = tau.sin_cos();

        let mut value = 0.0;
        let mut per_term = 0.0;
        let mut fixed = 0.0;
        let mut crossing = 0.0;
        let mut curvature = 0.0;
        let mut grad = [0.0; MAX_CELL_DIM];
        let mut ac = [0.0; MAX_CELL_DIM];
        let mut r = [0.0; MAX_CELL_DIM];
        for u in self.config.iter() {
            let x = dot(c, u);
            let ax = x.abs();
            let mut s2 = 0.0;
            for k in 0..d {
                r[k] = u[k] - x * c[k];
                s2 += r[k] * r[k];
            }
            let s = s2.sqrt();
            let term = self.p.pow_abs(x);
            value += term;
            // ψ <= τ  <=>  s cos τ <= |x| sin τ
            let hi = if s * ct <= ax * st {
                1.0
            } else {
                (ax * ct + s * st).min(1.0)
            };
            let hi_p = self.p.pow_abs(hi);
            per_term += hi_p;
            let lo = ax * ct - s * st;
            if lo > 0.0 {
                fixed += term;
                let w = p * self.p.pow_abs(x) / ax * x.signum();
                for k in 0..d {
                    grad[k] += w * r[k];
                }
                let lo_p = self.p.pow_abs(lo);
                curvature += if p >= 2.0 {
                    p * (p - 1.0) * hi.powf(p - 2.0) * (1.0 - lo * lo) - p * lo_p
                } else if p >= 1.0 {
                    p * (p - 1.0) * lo.powf(p - 2.0) * (1.0 - lo * lo) - p * lo_p
                } else {
                    -p * lo_p
                };
            } else {
                crossing += hi_p;
            }
            if self.gershgorin.is_some() {
                for k in 0..d {
                    ac[k] += x * r[k];
                }
            }
        }

        let g = grad[..d].iter().map(|x| x * x).sum::<f64>().sqrt();
        let t = if curvature < 0.0 {
            tau.min(g / -curvature)
        } else {
            tau
        };
        let taylor = fixed + g * t + 0.5 * curvature * t * t + crossing;
        let mut bound = per_term.min(taylor);

        if let Some(mu) = self.gershgorin {
            let b = ac[..d].iter().map(|x| x * x).sum::<f64>().sqrt();
            let a = value;
            let alpha = 0.5 * (a - mu);
            let phi = b.atan2(alpha);
            let quad = if phi <= 2.0 * tau {
                0.5 * (a + mu) + alpha.hypot(b)
            } else {
                0.5 * (a + mu) + alpha * (2.0 * tau).cos() + b * (2.0 * tau).sin()
            };
            bound = bound.min(quad);
        }
        bound += 64.0 * f64::EPSILON * n * (1.0 + bound.abs());

        CellEval {
            center,
            value,
            bound,
            chord: 2.0 * (0.5 * tau).sin(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub direction: Vec<f64>,
    pub value: f64,
    pub steps: usize,
    /// The ascent direction vanished at the start point.
    pub stalled: bool,
}

const REFINE_MAX_STEPS: usize = 10_000;
const REFINE_MIN_GAIN: f64 = 1e-13;
const KINK_TOL: f64 = 1e-9;
const KINK_STEP: f64 = 1e-6;

/// Ascend the potential from `v0` by the fixed-point iteration
/// `v <- normalize(Σ sgn⟨v,u_i⟩ |⟨v,u_i⟩|^{p-1} u_i)`.
///
/// Steps that would lower the potential are damped. At a fixed point where
/// some `⟨v,u_i⟩` vanishes the potential is not differentiable, and moving
/// towards `±u_i` is tried before stopping.
pub fn local_refine(config: &Configuration, p: Exponent, v0: &[f64]) -> Result<Refinement> {
    check_direction(config.dim(), v0)?;
    Ok(refine_unchecked(config, p, v0))
}

pub(crate) fn refine_unchecked(config: &Configuration, p: Exponent, v0: &[f64]) -> Refinement {
    let d = config.dim();
    let mut v = v0.to_vec();
    let mut f = potential_unchecked(config, &v, p);
    let mut steps = 0;
    let mut cand = vec![0.0; d];
    while steps < REFINE_MAX_STEPS {
        cand.fill(0.0);
        for u in config.iter() {
            let x = dot(&v, u);
            if x != 0.0 {
                let w = if p.get() == 1.0 {
                    x.signum()
                } else {
                    x.signum() * x.abs().powf(p.get() - 1.0)
                };
                for k in 0..d {
                    cand[k] += w * u[k];
                }
            }
        }
        let mut next = None;
        if normalize(&mut cand) > 0.0 {
            next = damped_ascent(config, p, &v, &cand, f);
        } else if steps == 0 && kink_escape(config, p, &v, f).is_none() {
            return Refinement {
                direction: v,
                value: f,
                steps: 0,
                stalled: true,
            };
        }
        if next.is_none() {
            next = kink_escape(config, p, &v, f);
        }
        let Some((w, fw)) = next else { break };
        steps += 1;
        let gain = fw - f;
        v = w;
        f = fw;
        if gain < REFINE_MIN_GAIN {
            break;
        }
    }
    Refinement {
        direction: v,
        value: f,
        steps,
        stalled: false,
    }
}

fn damped_ascent(
    config: &Configuration,
    p: Exponent,
    v: &[f64],
    target: &[f64],
    f: f64,
) -> Option<(Vec<f64>, f64)> {
    let mut t = 1.0;
    for _ in 0..8 {
        let mut w: Vec<f64> = v.iter().zip(target).map(|(a, b)| a + t * (b - a)).collect();
        if normalize(&mut w) > 0.0 {
            let fw = potential_unchecked(config, &w, p);
            if fw > f {
                return Some((w, fw));
            }
        }
        t *= 0.5;
    }
    None
}

/// Try `v ± η u_i` for every i with `⟨v, u_i⟩ ≈ 0`; return the best improvement.
fn kink_escape(config: &Configuration, p: Exponent, v: &[f64], f: f64) -> Option<(Vec<f64>, f64)> {
    let mut best: Option<(Vec<f64>, f64)> = None;
    for u in config.iter() {
        if dot(v, u).abs() > KINK_TOL {
            continue;
        }
        for s in [KINK_STEP, -KINK_STEP] {
            let mut w: Vec<f64> = v.iter().zip(u).map(|(a, b)| a + s * b).collect();
            normalize(&mut w);
            let fw = potential_unchecked(config, &w, p);
            if fw > best.as_ref().map_or(f, |b| b.1) {
                best = Some((w, fw));
            }
        }
    }
    best
}
