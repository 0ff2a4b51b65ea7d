//! Signed sums max_ε |Σ ε_i u_i|, which equal the p = 1 polarization.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{certified_max, MaxCertificate};
use crate::config::{dot, Configuration, Exponent};
use crate::error::{invalid, Error, Result};
use crate::rng;

/// Largest n accepted by exhaustive enumeration.
pub const MAX_EXACT_N: usize = 30;
/// Multi-start count for the local search.
pub const LOCAL_STARTS: u64 = 32;
/// A flip is taken when ε_k⟨u_k, z⟩ falls below this.
pub const FLIP_THRESHOLD: f64 = 1.0 - 1e-12;
/// Minimum margin of a certified Bang point.
pub const BANG_TOL: f64 = 1e-10;
/// Relative tolerance under which two squared norms count as tied.
const TIE_REL: f64 = 1e-12;
/// Patterns per enumeration chunk; fixed so results do not depend on threads.
const CHUNK_BITS: u32 = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignSumStatus {
    Exact,
    BangCertified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignSumResult {
    /// Entries are +1 or -1; the first is always +1.
    pub signs: Vec<i8>,
    pub norm: f64,
    pub status: SignSumStatus,
    /// min_k ε_k ⟨u_k, z⟩ with z = Σ ε_i u_i.
    pub bang_margin: f64,
    pub n_below_dim: bool,
}

/// z = Σ ε_i u_i
pub fn signed_sum(config: &Configuration, signs: &[i8]) -> Vec<f64> {
    let mut z = vec![0.0; config.dim()];
    for (u, &e) in config.iter().zip(signs) {
        for (zk, uk) in z.iter_mut().zip(u) {
            *zk += e as f64 * uk;
        }
    }
    z
}

/// min_k ε_k ⟨u_k, z⟩
pub fn bang_margin(config: &Configuration, signs: &[i8]) -> f64 {
    let z = signed_sum(config, signs);
    config
        .iter()
        .zip(signs)
        .map(|(u, &e)| e as f64 * dot(u, &z))
        .fold(f64::INFINITY, f64::min)
}

fn finish(config: &Configuration, mut signs: Vec<i8>, status: SignSumStatus) -> SignSumResult {
    if signs[0] < 0 {
        signs.iter_mut().for_each(|e| *e = -*e);
    }
    let z = signed_sum(config, &signs);
    SignSumResult {
        norm: dot(&z, &z).sqrt(),
        bang_margin: bang_margin(config, &signs),
        signs,
        status,
        n_below_dim: config.is_underdetermined(),
    }
}

/// Bits set where ε_k = -1, ε_1 most significant: smaller keys are
/// lexicographically smaller patterns under + < -.
fn pattern_key(signs: &[i8]) -> u64 {
    signs.iter().fold(0u64, |k, &e| (k << 1) | (e < 0) as u64)
}

/// True when (value, key) beats (best, best_key).
fn improves(value: f64, key: u64, best: f64, best_key: u64) -> bool {
    let tol = TIE_REL * best.abs().max(value.abs());
    if value > best + tol {
        true
    } else if value >= best - tol {
        key < best_key
    } else {
        false
    }
}

/// Exhaustive maximization over the 2^{n-1} patterns with ε_1 = +1, in Gray
/// code order over ε_2, ..., ε_n.
pub fn max_sign_sum_exact(config: &Configuration) -> Result<SignSumResult> {
    let n = config.len();
    if n > MAX_EXACT_N {
        return Err(Error::Budget(format!(
            "exact sign enumeration supports n <= {MAX_EXACT_N}, got n = {n}"
        )));
    }
    let m = (n - 1) as u32;
    let total = 1u64 << m;
    let chunk = 1u64 << CHUNK_BITS.min(m);
    let chunks = total / chunk;
    let best = (0..chunks)
        .into_par_iter()
        .map(|c| scan_chunk(config, c * chunk, (c + 1) * chunk))
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(|a, b| if improves(b.0, b.1, a.0, a.1) { b } else { a })
        .expect("at least one chunk");
    let signs = (0..n)
        .map(|k| {
            if best.1 >> (n - 1 - k) & 1 == 1 {
                -1
            } else {
                1
            }
        })
        .collect();
    Ok(finish(config, signs, SignSumStatus::Exact))
}

/// Best (|z|², key) over Gray indices start..end.
fn scan_chunk(config: &Configuration, start: u64, end: u64) -> (f64, u64) {
    let n = config.len();
    let gray = |i: u64| i ^ (i >> 1);
    // Bit b of the Gray word is the sign of vector n-1-b.
    let mut signs: Vec<i8> = (0..n)
        .map(|k| {
            if k > 0 && gray(start) >> (n - 1 - k) & 1 == 1 {
                -1
            } else {
                1
            }
        })
        .collect();
    let mut z = signed_sum(config, &signs);
    let mut norm2 = dot(&z, &z);
    let mut best = (norm2, pattern_key(&signs));
    for i in start + 1..end {
        let k = n - 1 - i.trailing_zeros() as usize;
        let u = config.vector(k);
        let e = signs[k] as f64;
        norm2 = norm2 - 4.0 * e * dot(u, &z) + 4.0;
        for (zj, uj) in z.iter_mut().zip(u) {
            *zj -= 2.0 * e * uj;
        }
        signs[k] = -signs[k];
        let key = pattern_key(&signs);
        if improves(norm2, key, best.0, best.1) {
            best = (norm2, key);
        }
    }
    best
}

/// Multi-start Bang hill climbing: flip any sign whose margin is below 1.
pub fn max_sign_sum_local(config: &Configuration, seed: u64) -> SignSumResult {
    let base = rng::derive_seed(seed, rng::tag::SIGN_LOCAL);
    let runs: Vec<Vec<i8>> = (0..LOCAL_STARTS)
        .into_par_iter()
        .map(|s| {
            let mut r = rng::stream(base, s);
            let signs = (0..config.len()).map(|_| rng::sign(&mut r)).collect();
            bang_climb(config, signs)
        })
        .collect();
    let mut best: Option<(f64, u64, Vec<i8>)> = None;
    for mut signs in runs {
        if signs[0] < 0 {
            signs.iter_mut().for_each(|e| *e = -*e);
        }
        let z = signed_sum(config, &signs);
        let v = dot(&z, &z);
        let key = pattern_key(&signs);
        if best.as_ref().is_none_or(|b| improves(v, key, b.0, b.1)) {
            best = Some((v, key, signs));
        }
    }
    let res = finish(
        config,
        best.expect("starts > 0").2,
        SignSumStatus::BangCertified,
    );
    debug_assert!(res.bang_margin >= 1.0 - BANG_TOL);
    res
}

/// Flip the sign with the smallest margin until every margin is >= 1.
/// Each flip raises |z|² by 4 (1 - margin) > 0 and |z|² <= n², so this ends.
pub fn bang_climb(config: &Configuration, mut signs: Vec<i8>) -> Vec<i8> {
    let mut z = signed_sum(config, &signs);
    loop {
        let (k, margin) = config
            .iter()
            .zip(&signs)
            .map(|(u, &e)| e as f64 * dot(u, &z))
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |a, (i, m)| if m < a.1 { (i, m) } else { a },
            );
        if margin >= FLIP_THRESHOLD {
            break;
        }
        let e = signs[k] as f64;
        for (zj, uj) in z.iter_mut().zip(config.vector(k)) {
            *zj -= 2.0 * e * uj;
        }
        signs[k] = -signs[k];
        // Resynchronize to keep drift out of the margins.
        z = signed_sum(config, &signs);
    }
    signs
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop3Check {
    pub sign_norm: f64,
    pub enclosure: MaxCertificate,
    pub consistent: bool,
}

/// The largest signed sum against a certified enclosure of M¹.
pub fn prop3_crosscheck(config: &Configuration, delta: f64) -> Result<Prop3Check> {
    let signs = max_sign_sum_exact(config)?;
    let enclosure = certified_max(config, Exponent::new(1.0)?, delta)?;
    Ok(Prop3Check {
        sign_norm: signs.norm,
        consistent: enclosure.contains(signs.norm, 1e-9),
        enclosure,
    })
}

/// Regular simplex on h+1 vertices in the first h coordinates plus the
/// standard basis of the remaining d - h; d + 1 vectors in all.
pub fn simplex_union_onb_with(d: usize, h: usize) -> Result<Configuration> {
    if h == 0 || h % 2 == 1 || h > d {
        return invalid(format!(
            "simplex dimension must be even with 2 <= h <= d, got h={h}, d={d}"
        ));
    }
    // Helmert basis of the sum-zero hyperplane in R^{h+1}: column j has j
    // entries 1, then -j, scaled to unit length. Vertex i of the simplex is
    // row i, rescaled by √((h+1)/h).
    let scale = ((h + 1) as f64 / h as f64).sqrt();
    let mut vectors = Vec::with_capacity(d + 1);
    for i in 0..=h {
        let mut v = vec![0.0; d];
        for j in 1..=h {
            let norm = ((j * (j + 1)) as f64).sqrt();
            v[j - 1] = match i.cmp(&j) {
                std::cmp::Ordering::Less => scale / norm,
                std::cmp::Ordering::Equal => -(j as f64) * scale / norm,
                std::cmp::Ordering::Greater => 0.0,
            };
        }
        vectors.push(v);
    }
    for k in h..d {
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        vectors.push(v);
    }
    Configuration::normalized(d, vectors)
}

/// The construction with h the largest even number <= d.
pub fn simplex_union_onb(d: usize) -> Result<Configuration> {
    simplex_union_onb_with(d, d - d % 2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionValue {
    pub h: usize,
    pub norm: f64,
    pub attains: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjectureReport {
    pub d: usize,
    pub trials: usize,
    pub seed: u64,
    pub min_over_trials: f64,
    pub violations: usize,
    pub sharp_value: f64,
    /// One entry per even h in 2..=d.
    pub constructions: Vec<ConstructionValue>,
    /// Whether `simplex_union_onb(d)` attains the sharp value; absent for d = 1.
    pub simplex_attains: Option<bool>,
}

const CONJECTURE_TOL: f64 = 1e-9;
pub const MAX_CONJECTURE_DIM: usize = 12;

/// Exact max signed sum of d+1 random unit vectors in R^d, per trial,
/// compared with √(d+2).
pub fn conjecture1_harness(d: usize, trials: usize, seed: u64) -> Result<ConjectureReport> {
    if d == 0 || d > MAX_CONJECTURE_DIM {
        return invalid(format!("need 1 <= d <= {MAX_CONJECTURE_DIM}, got {d}"));
    }
    let sharp = ((d + 2) as f64).sqrt();
    let base = rng::derive_seed(seed, rng::tag::CONJECTURE1);
    let norms = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(base, t);
            let c = Configuration::from_flat_unchecked(
                d,
                (0..=d).flat_map(|_| rng::unit_vector(&mut r, d)).collect(),
            );
            max_sign_sum_exact(&c).map(|s| s.norm)
        })
        .collect::<Result<Vec<f64>>>()?;
    let constructions = (2..=d)
        .step_by(2)
        .map(|h| {
            let norm = max_sign_sum_exact(&simplex_union_onb_with(d, h)?)?.norm;
            Ok(ConstructionValue {
                h,
                norm,
                attains: (norm - sharp).abs() <= CONJECTURE_TOL,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConjectureReport {
        d,
        trials,
        seed,
        min_over_trials: norms.iter().copied().fold(f64::INFINITY, f64::min),
        violations: norms
            .iter()
            .filter(|&&x| x < sharp - CONJECTURE_TOL)
            .count(),
        sharp_value: sharp,
        simplex_attains: constructions
            .last()
            .filter(|c| c.h == d - d % 2)
            .map(|c| c.attains),
        constructions,
    })
}
