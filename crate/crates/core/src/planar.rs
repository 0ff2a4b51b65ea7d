//! Configurations on the circle: the squaring correspondence, Riesz energies
//! of roots of unity and the maxima of their distance-sum potentials.
//!
//! A line through e^{iα} corresponds to the point e^{2iα} on the circle T,
//! and a direction e^{iφ} to the point -e^{2iφ}; distances on T are then twice
//! the absolute inner products on S¹. The T-side potential of a point set
//! `{z_k}` is `Ũ^p(z) = Σ |z - z_k|^p`.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::mu_tilde;
use crate::config::{Configuration, Exponent};
use crate::error::{invalid, Error, Result};
use crate::search::{minimize_planar, PlanarSearchOptions};

/// n points e^{iα_k} on T, angles sorted in [0, 2π).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarConfig {
    angles: Vec<f64>,
}

fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl PlanarConfig {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return invalid("a configuration needs at least one point");
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return invalid("angles must be finite");
        }
        let mut angles: Vec<f64> = angles.into_iter().map(wrap).collect();
        angles.sort_by(f64::total_cmp);
        Ok(PlanarConfig { angles })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn from_configuration(config: &Configuration) -> Result<Self> {
        if config.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: config.dim(),
            });
        }
        PlanarConfig::new(config.iter().map(|u| u[1].atan2(u[0])).collect())
    }

    pub fn to_configuration(&self) -> Configuration {
        Configuration::from_angles(&self.angles).expect("nonempty")
    }
}

/// |e^{ia} - e^{ib}| = 2 |sin((a - b)/2)|
#[inline]
pub fn chord(a: f64, b: f64) -> f64 {
    2.0 * (0.5 * (a - b)).sin().abs()
}

/// Images of the lines under the squaring map, and of the direction at
/// `v_angle`: angles 2α_i and 2φ + π.
pub fn squared_map(config: &PlanarConfig, v_angle: f64) -> (PlanarConfig, f64) {
    let mapped =
        PlanarConfig::new(config.angles.iter().map(|a| 2.0 * a).collect()).expect("nonempty");
    (mapped, wrap(2.0 * v_angle + PI))
}

pub fn equidistributed(n: usize) -> Result<PlanarConfig> {
    if n == 0 {
        return invalid("n must be positive");
    }
    Ok(PlanarConfig {
        angles: (0..n).map(|k| TAU * k as f64 / n as f64).collect(),
    })
}

/// Ũ^p(ω, e^{iθ}) = Σ |e^{iθ} - z_k|^p
pub fn t_potential(config: &PlanarConfig, p: Exponent, theta: f64) -> f64 {
    config
        .angles
        .iter()
        .map(|&a| p.pow_abs(chord(theta, a)))
        .sum()
}

/// Σ_{j,k} |z_j - z_k|^p over ordered pairs.
pub fn riesz_energy(config: &PlanarConfig, p: Exponent) -> f64 {
    let a = &config.angles;
    let mut s = 0.0;
    for (j, &x) in a.iter().enumerate() {
        for &y in &a[j + 1..] {
            s += p.pow_abs(chord(x, y));
        }
    }
    2.0 * s
}

/// Binomial coefficient as a float; exact while it fits in 53 bits.
pub fn binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r.round()
}

/// Riesz energy of the n-th roots of unity for integer 0 < p < 2n:
/// n² C(p, p/2) for even p and the cotangent sum for odd p.
pub fn riesz_energy_closed(n: usize, p: Exponent) -> Result<f64> {
    let pf = p.get();
    if pf.fract() != 0.0 {
        return invalid(format!("closed form needs an integer exponent, got {pf}"));
    }
    if n == 0 || pf >= 2.0 * n as f64 {
        return invalid(format!("closed form needs 0 < p < 2n, got p={pf}, n={n}"));
    }
    let q = pf as u64;
    let nf = n as f64;
    if q.is_multiple_of(2) {
        return Ok(nf * nf * binomial(q, q / 2));
    }
    // Terms k and q - k are equal, so sum k < q/2 twice. The argument is
    // (q - 2k) π / (2n).
    let mut s = 0.0;
    for k in 0..=q / 2 {
        let sign = if k % 2 == 0 { 2.0 } else { -2.0 };
        s += binomial(q, k) * sign * cot_pi_ratio(q - 2 * k, 2 * n as u64);
    }
    let outer = if ((q - 1) / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    Ok(nf * outer * s)
}

/// cot(rπ/m) for 0 < r < m, exact at the multiples of π/4.
fn cot_pi_ratio(r: u64, m: u64) -> f64 {
    if 2 * r > m {
        return -cot_pi_ratio(m - r, m);
    }
    if 2 * r == m {
        0.0
    } else if 4 * r == m {
        1.0
    } else if 4 * r < m {
        1.0 / (r as f64 * PI / m as f64).tan()
    } else {
        ((m - 2 * r) as f64 * PI / (2 * m) as f64).tan()
    }
}

/// E_n^p by the closed form where it applies, else by the direct sum.
pub fn equidistributed_energy(n: usize, p: Exponent) -> f64 {
    riesz_energy_closed(n, p)
        .unwrap_or_else(|_| riesz_energy(&equidistributed(n).expect("n > 0"), p))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StolarskyBranch {
    /// p < 2n and ⌊p/2⌋ odd: the maximum is at a base point.
    BelowTwoNHalfOdd,
    /// p < 2n and ⌊p/2⌋ even: the maximum is at a midpoint.
    BelowTwoNHalfEven,
    /// p >= 2n, n even: base point.
    AboveTwoNEvenN,
    /// p >= 2n, n odd: midpoint.
    AboveTwoNOddN,
}

impl StolarskyBranch {
    pub fn at_base_point(self) -> bool {
        matches!(self, Self::BelowTwoNHalfOdd | Self::AboveTwoNEvenN)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarEnergyReport {
    pub n: usize,
    pub p: Exponent,
    /// E_n^p by the double sum.
    pub direct: f64,
    /// E_n^p in closed form, for integer p < 2n.
    pub closed: Option<f64>,
    /// max over T of Ũ^p(ω_n*, ·)
    pub stolarsky_max: f64,
    pub branch: StolarskyBranch,
    /// n μ̃_p, a lower bound for `stolarsky_max`.
    pub averaging_bound: f64,
}

/// Maximum of the distance-sum potential of the n-th roots of unity.
///
/// At a base point the value is E_n/n; at a midpoint it is the sum over the
/// 2n-th roots minus the base points, E_{2n}/(2n) - E_n/n.
pub fn stolarsky_max(n: usize, p: Exponent) -> Result<PlanarEnergyReport> {
    if n == 0 {
        return invalid("n must be positive");
    }
    let pf = p.get();
    let branch = if pf < 2.0 * n as f64 {
        if (pf / 2.0).floor() as u64 % 2 == 1 {
            StolarskyBranch::BelowTwoNHalfOdd
        } else {
            StolarskyBranch::BelowTwoNHalfEven
        }
    } else if n.is_multiple_of(2) {
        StolarskyBranch::AboveTwoNEvenN
    } else {
        StolarskyBranch::AboveTwoNOddN
    };
    let en = equidistributed_energy(n, p) / n as f64;
    let value = if branch.at_base_point() {
        en
    } else {
        equidistributed_energy(2 * n, p) / (2 * n) as f64 - en
    };
    Ok(PlanarEnergyReport {
        n,
        p,
        direct: riesz_energy(&equidistributed(n)?, p),
        closed: riesz_energy_closed(n, p).ok(),
        stolarsky_max: value,
        branch,
        averaging_bound: n as f64 * mu_tilde(p),
    })
}

/// Maximum of Ũ^p(ω_n*, ·) over the grid e^{2πij/(n g)}, j = 0..n g, and the
/// maximizing index. Distances are formed from exact index differences; by
/// rotational symmetry only one period of g + 1 grid points is scanned.
pub fn equidistributed_grid_max(n: usize, p: Exponent, per_point: usize) -> (f64, usize) {
    let total = (n * per_point) as u64;
    let value = |j: u64| -> f64 {
        (0..n as u64)
            .map(|k| {
                let r = (j + total - k * per_point as u64) % total;
                if r == 0 {
                    0.0
                } else {
                    let m = r.min(total - r);
                    p.pow_abs(2.0 * (PI * m as f64 / total as f64).sin())
                }
            })
            .sum()
    };
    let vals: Vec<f64> = (0..=per_point as u64).into_par_iter().map(value).collect();
    let mut best = 0;
    for (j, v) in vals.iter().enumerate() {
        if *v > vals[best] {
            best = j;
        }
    }
    (vals[best], best)
}

/// max over a uniform grid of `points` angles of Ũ^p(ω, ·), with its angle.
pub fn t_grid_max(config: &PlanarConfig, p: Exponent, points: usize) -> (f64, f64) {
    let vals: Vec<f64> = (0..points)
        .into_par_iter()
        .map(|j| t_potential(config, p, TAU * j as f64 / points as f64))
        .collect();
    let mut best = 0;
    for (j, v) in vals.iter().enumerate() {
        if *v > vals[best] {
            best = j;
        }
    }
    (vals[best], TAU * best as f64 / points as f64)
}

/// M^p_n(S¹) for 0 < p <= 1: lines spaced π/n apart, evaluated at the best
/// direction.
pub fn prop5_value(n: usize, p: Exponent) -> Result<f64> {
    if n == 0 {
        return invalid("n must be positive");
    }
    if p.get() > 1.0 {
        return Err(Error::InvalidExponent(p.get()));
    }
    let nf = n as f64;
    let shift = if n.is_multiple_of(2) {
        PI / (2.0 * nf)
    } else {
        0.0
    };
    Ok((1..=n)
        .map(|k| p.pow_abs((k as f64 * PI / nf - shift).cos()))
        .sum())
}

/// Half the spread of the deviations of the sorted doubled angles from an
/// arithmetic progression with step 2π/n; zero exactly for lines spaced π/n
/// apart.
pub fn equidistribution_residual(line_angles: &[f64]) -> f64 {
    let n = line_angles.len();
    let mut doubled: Vec<f64> = line_angles.iter().map(|a| wrap(2.0 * a)).collect();
    doubled.sort_by(f64::total_cmp);
    let step = TAU / n as f64;
    let base = doubled[0];
    let devs: Vec<f64> = doubled
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let d = b - base - step * i as f64;
            d - TAU * (d / TAU).round()
        })
        .collect();
    let hi = devs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = devs.iter().copied().fold(f64::INFINITY, f64::min);
    0.5 * (hi - lo)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub p: f64,
    /// p is an even integer in 2..=2n-2, where every averaging-optimal
    /// configuration ties; not scanned.
    pub excluded: bool,
    /// M̃^p(ω_n*) / 2^p, the polarization of equally spaced lines.
    pub equidistributed_value: f64,
    pub best_lower: Option<f64>,
    pub best_upper: Option<f64>,
    /// best_upper - equidistributed_value
    pub gap: Option<f64>,
    pub residual: Option<f64>,
    pub best_angles: Option<Vec<f64>>,
    pub consistent: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub n: usize,
    pub restarts: usize,
    pub seed: u64,
    pub heuristic: bool,
    pub entries: Vec<ScanEntry>,
}

pub const SCAN_VALUE_TOL: f64 = 1e-6;
pub const SCAN_RESIDUAL_TOL: f64 = 1e-4;

pub fn is_excluded_exponent(n: usize, p: f64) -> bool {
    p.fract() == 0.0 && p >= 2.0 && p <= 2.0 * n as f64 - 2.0 && (p as u64).is_multiple_of(2)
}

/// Minimize M^p over n lines in the plane from seeded random starts, for each
/// p, and compare with equally spaced lines.
pub fn conjecture2_scan(
    n: usize,
    p_grid: &[f64],
    restarts: usize,
    seed: u64,
) -> Result<ScanReport> {
    if n == 0 || restarts == 0 {
        return invalid("n and restarts must be positive");
    }
    let entries = p_grid
        .par_iter()
        .enumerate()
        .map(|(index, &pf)| {
            let p = Exponent::new(pf)?;
            let equi = stolarsky_max(n, p)?.stolarsky_max / 2f64.powf(pf);
            let mut entry = ScanEntry {
                p: pf,
                excluded: is_excluded_exponent(n, pf),
                equidistributed_value: equi,
                best_lower: None,
                best_upper: None,
                gap: None,
                residual: None,
                best_angles: None,
                consistent: None,
            };
            if entry.excluded {
                return Ok(entry);
            }
            let opts = PlanarSearchOptions {
                restarts,
                seed: crate::rng::derive_seed(seed, index as u64),
                ..PlanarSearchOptions::default()
            };
            let best = minimize_planar(n, p, &opts)?;
            let residual = equidistribution_residual(&best.angles);
            let upper = best.certificate.upper;
            entry.best_lower = Some(best.certificate.lower);
            entry.best_upper = Some(upper);
            entry.gap = Some(upper - equi);
            entry.residual = Some(residual);
            entry.consistent =
                Some(upper >= equi - SCAN_VALUE_TOL && residual <= SCAN_RESIDUAL_TOL);
            entry.best_angles = Some(best.angles);
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanReport {
        n,
        restarts,
        seed,
        heuristic: true,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::potential;
    use crate::rng;

    fn exp(p: f64) -> Exponent {
        Exponent::new(p).unwrap()
    }

    #[test]
    fn planar_config_round_trip() {
        let mut r = rng::stream(4, 0);
        for _ in 0..50 {
            let v = rng::unit_vector(&mut r, 2);
            let c = Configuration::new(2, vec![v.clone()]).unwrap();
            let back = PlanarConfig::from_configuration(&c)
                .unwrap()
                .to_configuration();
            for k in 0..2 {
                assert!((back.vector(0)[k] - v[k]).abs() <= 1e-15);
            }
        }
        let c = PlanarConfig::new(vec![3.0, -1.0, 7.0]).unwrap();
        assert!(c.angles().windows(2).all(|w| w[0] <= w[1]));
        assert!(c.angles().iter().all(|a| (0.0..TAU).contains(a)));
    }

    #[test]
    fn squared_map_examples() {
        let c = PlanarConfig::new(vec![0.0]).unwrap();
        let (m, v) = squared_map(&c, 0.0);
        assert!((chord(v, m.angles()[0]) - 2.0).abs() < 1e-15);
        let (m, v) = squared_map(&c, PI / 2.0);
        assert!(chord(v, m.angles()[0]) < 1e-15);

        let mut r = rng::stream(8, 0);
        for _ in 0..100 {
            let angles: Vec<f64> = (0..5)
                .map(|_| rng::unit_vector(&mut r, 2)[0] * 10.0)
                .collect();
            let c = PlanarConfig::new(angles).unwrap();
            let phi = rng::unit_vector(&mut r, 2)[1] * 3.0;
            let (m, vv) = squared_map(&c, phi);
            let mut mapped = m.angles().to_vec();
            mapped.sort_by(f64::total_cmp);
            let mut want: Vec<f64> = c
                .angles()
                .iter()
                .map(|a| 2.0 * (phi - a).cos().abs())
                .collect();
            let mut got: Vec<f64> = mapped.iter().map(|b| chord(vv, *b)).collect();
            want.sort_by(f64::total_cmp);
            got.sort_by(f64::total_cmp);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn equidistributed_examples() {
        assert_eq!(equidistributed(2).unwrap().angles(), &[0.0, PI]);
        assert_eq!(
            equidistributed(4).unwrap().angles(),
            &[0.0, PI / 2.0, PI, 1.5 * PI]
        );
        let c = equidistributed(3).unwrap().to_configuration();
        let m = crate::frames::low_dim_isotropy_check(&c)
            .unwrap()
            .planar_moment
            .unwrap();
        assert!(m[0].hypot(m[1]) < 1e-15);
    }

    #[test]
    fn energy_examples() {
        assert!((riesz_energy(&equidistributed(2).unwrap(), exp(1.0)) - 4.0).abs() < 1e-15);
        assert!((riesz_energy(&equidistributed(4).unwrap(), exp(2.0)) - 32.0).abs() < 1e-13);
        assert_eq!(riesz_energy(&equidistributed(1).unwrap(), exp(1.7)), 0.0);
        assert_eq!(riesz_energy_closed(4, exp(2.0)).unwrap(), 32.0);
        assert!((riesz_energy_closed(2, exp(1.0)).unwrap() - 4.0).abs() < 1e-15);
        assert!((riesz_energy_closed(3, exp(1.0)).unwrap() - 6.0 * 3f64.sqrt()).abs() < 1e-13);
        let direct = riesz_energy(&equidistributed(5).unwrap(), exp(3.0));
        assert!((riesz_energy_closed(5, exp(3.0)).unwrap() - direct).abs() < 1e-10 * direct);
        assert!(riesz_energy_closed(3, exp(6.0)).is_err());
        assert!(riesz_energy_closed(3, exp(1.5)).is_err());
    }

    #[test]
    fn stolarsky_examples() {
        let r = stolarsky_max(2, exp(2.0)).unwrap();
        assert!((r.stolarsky_max - 4.0).abs() < 1e-14);
        assert_eq!(r.branch, StolarskyBranch::BelowTwoNHalfOdd);
        let r = stolarsky_max(3, exp(1.0)).unwrap();
        assert!((r.stolarsky_max - 4.0).abs() < 1e-13);
        assert_eq!(r.branch, StolarskyBranch::BelowTwoNHalfEven);
        let r = stolarsky_max(2, exp(1.0)).unwrap();
        assert!((r.stolarsky_max - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!((r.stolarsky_max - 2.0 * prop5_value(2, exp(1.0)).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn prop5_examples() {
        assert!((prop5_value(3, exp(1.0)).unwrap() - 2.0).abs() < 1e-15);
        assert!((prop5_value(2, exp(1.0)).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        for p in [0.1, 0.5, 1.0] {
            assert!((prop5_value(1, exp(p)).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!(prop5_value(3, exp(1.5)).is_err());
    }

    #[test]
    fn prop5_is_the_s1_potential_of_spaced_lines() {
        for n in 1..=7 {
            let lines: Vec<f64> = (0..n).map(|k| PI * k as f64 / n as f64).collect();
            let c = Configuration::from_angles(&lines).unwrap();
            let cert = crate::certify::certified_max(&c, exp(0.5), 1e-6).unwrap();
            let v = prop5_value(n, exp(0.5)).unwrap();
            assert!(cert.contains(v, 1e-12), "n={n}");
        }
    }

    #[test]
    fn maximizer_location_for_spaced_lines() {
        for n in 2..=7 {
            for p in [0.25, 0.5, 1.0] {
                // On T the maximum sits midway between roots of unity.
                let (_, j) = equidistributed_grid_max(n, exp(p), 1000);
                assert_eq!(j, 500, "n={n} p={p}");
                // On S¹: along a line for odd n, between two lines for even n.
                let lines: Vec<f64> = (0..n).map(|k| PI * k as f64 / n as f64).collect();
                let c = Configuration::from_angles(&lines).unwrap();
                let g = 200 * n;
                let best = (0..g)
                    .map(|j| {
                        let phi = PI * j as f64 / g as f64;
                        (potential(&c, &[phi.cos(), phi.sin()], exp(p)).unwrap(), j)
                    })
                    .fold((f64::NEG_INFINITY, 0), |a, b| {
                        if b.0 > a.0 + 1e-12 {
                            b
                        } else {
                            a
                        }
                    });
                let offset = best.1 % 200;
                assert_eq!(offset, if n % 2 == 1 { 0 } else { 100 }, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn residual_of_spaced_and_perturbed_lines() {
        let lines: Vec<f64> = (0..5).map(|k| 0.3 + PI * k as f64 / 5.0).collect();
        assert!(equidistribution_residual(&lines) < 1e-15);
        let flipped: Vec<f64> = lines
            .iter()
            .enumerate()
            .map(|(i, a)| if i % 2 == 0 { a + PI } else { *a })
            .collect();
        assert!(equidistribution_residual(&flipped) < 1e-14);
        let mut bent = lines.clone();
        bent[2] += 1e-3;
        let r = equidistribution_residual(&bent);
        assert!((r - 1e-3).abs() < 1e-12, "{r}");
    }

    #[test]
    fn excluded_exponents() {
        assert!(is_excluded_exponent(4, 6.0));
        assert!(!is_excluded_exponent(4, 8.0));
        assert!(!is_excluded_exponent(4, 3.0));
        assert!(!is_excluded_exponent(1, 2.0));
    }
}
