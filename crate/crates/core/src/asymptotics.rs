//! The constants μ_{d,p} and μ̃_p, the bound sandwich for M^p_n, and the
//! block doubling construction.

use serde::{Deserialize, Serialize};

use crate::config::{Configuration, Exponent};
use crate::error::{invalid, Result};
use crate::special::{ln_gamma, ln_gamma_ratio};

/// ln μ_{d,p}. Finite even where μ itself underflows.
pub fn ln_mu(d: usize, p: Exponent) -> f64 {
    if d == 1 {
        return 0.0;
    }
    let p = p.get();
    let d = d as f64;
    ln_gamma_ratio(0.5 * d, 0.5 * (d + p)) + ln_gamma(0.5 * (p + 1.0))
        - 0.5 * std::f64::consts::PI.ln()
}

/// μ_{d,p} = E |⟨v, u⟩|^p for v uniform on S^{d-1}:
/// Γ(d/2) Γ((p+1)/2) / (√π Γ((d+p)/2)).
pub fn mu(d: usize, p: Exponent) -> f64 {
    assert!(d >= 1, "dimension must be positive");
    let pf = p.get();
    if pf.fract() == 0.0 && d as f64 + pf <= SMALL_HALF_INTEGER {
        let q = pf as u64;
        let (a, sa) = gamma_half(d as u64);
        let (b, sb) = gamma_half(q + 1);
        let (c, sc) = gamma_half(d as u64 + q);
        // √π appears sa + sb - sc - 1 times, which is 0 or -2.
        let r = a * b / c;
        return if sa + sb == sc + 1 {
            r
        } else {
            r / std::f64::consts::PI
        };
    }
    ln_mu(d, p).exp()
}

/// Largest 2x for which Γ(x) is formed as a product.
const SMALL_HALF_INTEGER: f64 = 40.0;

/// Γ(t/2) as (g, s) with Γ(t/2) = g √π^s, for a positive integer t.
fn gamma_half(t: u64) -> (f64, u64) {
    let mut g = 1.0;
    if t.is_multiple_of(2) {
        for k in 1..t / 2 {
            g *= k as f64;
        }
        (g, 0)
    } else {
        for j in 0..t / 2 {
            g *= j as f64 + 0.5;
        }
        (g, 1)
    }
}

/// μ̃_p = Γ(p+1) / Γ(p/2+1)², the generalized central binomial coefficient.
pub fn mu_tilde(p: Exponent) -> f64 {
    let p = p.get();
    (ln_gamma(p + 1.0) - 2.0 * ln_gamma(0.5 * p + 1.0)).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub n: usize,
    pub d: usize,
    pub p: Exponent,
    /// n μ_{d,p}, a lower bound for M^p_n.
    pub lower: f64,
    /// Exact polarization of `construction`, an upper bound for M^p_n.
    pub upper: f64,
    pub construction: Configuration,
    /// `upper / (n d^{-p/2})`.
    pub normalized_upper: f64,
    /// 2^{p/2}, the bound on the normalized constant; only stated for p <= 2.
    pub c_bound: Option<f64>,
    pub truncation: String,
}

pub const TRUNCATION_RULE: &str =
    "e_(i mod d) for i < n: the last basis copy keeps its first n mod d vectors";

/// Lower bound n μ_{d,p} and the basis-copies upper bound for M^p_n(S^{d-1}).
pub fn theorem1_bounds(n: usize, d: usize, p: Exponent) -> Result<BoundsReport> {
    if d == 0 || n < d {
        return invalid(format!("need n >= d >= 1, got n={n}, d={d}"));
    }
    let construction = Configuration::onb_copies(n, d)?;
    let upper = onb_copies_max(n, d, p);
    let scale = n as f64 * (d as f64).powf(-0.5 * p.get());
    Ok(BoundsReport {
        n,
        d,
        p,
        lower: n as f64 * mu(d, p),
        upper,
        construction,
        normalized_upper: upper / scale,
        c_bound: (p.get() <= 2.0).then(|| 2f64.powf(0.5 * p.get())),
        truncation: TRUNCATION_RULE.to_string(),
    })
}

/// Exact polarization of `Configuration::onb_copies(n, d)`.
///
/// With multiplicity c_j on e_j the potential is Σ c_j |v_j|^p. Writing
/// w_j = v_j² this is maximized over the simplex: for p < 2 the function is
/// concave and Hölder duality gives (Σ c_j^{2/(2-p)})^{(2-p)/2}; for p >= 2 it
/// is convex and the maximum sits at a vertex, max c_j.
pub fn onb_copies_max(n: usize, d: usize, p: Exponent) -> f64 {
    let q = n / d;
    let r = n % d;
    let p = p.get();
    if p >= 2.0 {
        return if r > 0 { (q + 1) as f64 } else { q as f64 };
    }
    let s = 2.0 / (2.0 - p);
    let hi = ((q + 1) as f64).powf(s);
    let lo = (q as f64).powf(s);
    (r as f64 * hi + (d - r) as f64 * lo).powf(1.0 / s)
}

/// Two orthogonal copies of `base` in R^{2d}: the original in the first d
/// coordinates, the copy in the last d.
pub fn doubling_construction(base: &Configuration) -> Configuration {
    let d = base.dim();
    let mut coords = vec![0.0; 4 * d * base.len()];
    for (i, u) in base.iter().enumerate() {
        coords[i * 2 * d..i * 2 * d + d].copy_from_slice(u);
        let j = i + base.len();
        coords[j * 2 * d + d..(j + 1) * 2 * d].copy_from_slice(u);
    }
    Configuration::from_flat_unchecked(2 * d, coords)
}

/// M^p(doubling_construction(ω)) / M^p(ω) = max over s in [0, 1] of
/// s^{p/2} + (1-s)^{p/2}.
pub fn doubling_factor(p: Exponent) -> f64 {
    2f64.powf(1.0 - 0.5 * p.get()).max(1.0)
}
