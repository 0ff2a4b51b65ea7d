//! The acceptance suite: ten numbered criteria run in-process against the
//! library, producing a deterministic JSON report.
//!
//! Instances are drawn from streams derived from one seed, parallel loops
//! collect in index order, and wall times are kept out of the serialized form,
//! so the report bytes depend only on the seed.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{mu, mu_tilde, onb_copies_max, theorem1_bounds};
use crate::certify::certified_max;
use crate::config::{Configuration, Exponent};
use crate::error::Result;
use crate::frames::{frame_potential, isotropy_report, polarization_p2, synthesize_untf};
use crate::parallel::with_workers;
use crate::planar::{
    equidistributed, equidistributed_grid_max, prop5_value, riesz_energy, riesz_energy_closed,
    stolarsky_max,
};
use crate::rng;
use crate::search::{minimize_polarization, random_configuration, SearchOptions, StructuredStarts};
use crate::signsum::{
    conjecture1_harness, max_sign_sum_exact, max_sign_sum_local, prop3_crosscheck,
    simplex_union_onb,
};

/// Failure messages kept per criterion; the count is always exact.
const MAX_LISTED: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub checks: usize,
    pub failure_count: usize,
    pub failures: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
    /// Budget for this criterion at desk scale, seconds.
    pub time_limit_s: f64,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl CriterionReport {
    pub fn within_time(&self) -> bool {
        self.elapsed.as_secs_f64() < self.time_limit_s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub version: String,
    pub passed: bool,
    pub criteria: Vec<CriterionReport>,
}

struct Tally {
    checks: usize,
    failures: Vec<String>,
    failure_count: usize,
    metrics: BTreeMap<String, f64>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            checks: 0,
            failures: Vec::new(),
            failure_count: 0,
            metrics: BTreeMap::new(),
        }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failure_count += 1;
            if self.failures.len() < MAX_LISTED {
                self.failures.push(msg());
            }
        }
    }

    fn max(&mut self, key: &str, v: f64) {
        let e = self
            .metrics
            .entry(key.to_string())
            .or_insert(f64::NEG_INFINITY);
        *e = e.max(v);
    }

    fn min(&mut self, key: &str, v: f64) {
        let e = self.metrics.entry(key.to_string()).or_insert(f64::INFINITY);
        *e = e.min(v);
    }

    fn set(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.to_string(), v);
    }

    fn finish(self, id: u8, name: &str, time_limit_s: f64, start: Instant) -> CriterionReport {
        CriterionReport {
            id,
            name: name.to_string(),
            passed: self.failure_count == 0,
            checks: self.checks,
            failure_count: self.failure_count,
            failures: self.failures,
            metrics: self.metrics,
            time_limit_s,
            elapsed: start.elapsed(),
        }
    }
}

pub const CRITERIA: [(u8, &str, f64); 10] = [
    (1, "tight frames attain n/d for p = 2", 10.0),
    (2, "max signed sum equals the l1 polarization", 60.0),
    (3, "closed forms of the planar distance energy", 5.0),
    (4, "maxima of the equally spaced distance potential", 30.0),
    (5, "planar l^p polarization for p <= 1", 300.0),
    (
        6,
        "lower bound n mu and the basis-copies upper bound",
        300.0,
    ),
    (7, "frame potential lower bound", 5.0),
    (8, "max signed sum of d + 1 vectors", 600.0),
    (9, "Bang local search against enumeration", 120.0),
    (10, "determinism across worker counts", 3600.0),
];

fn exp(p: f64) -> Exponent {
    Exponent::new(p).expect("suite exponents are positive")
}

/// Stream for instance `index` of criterion `id`.
fn instance_rng(seed: u64, id: u8, index: u64) -> rand_chacha::ChaCha8Rng {
    let base = rng::derive_seed(seed, rng::tag::VERIFY);
    rng::stream(rng::derive_seed(base, id as u64), index)
}

fn instance_seed(seed: u64, id: u8, index: u64) -> u64 {
    instance_rng(seed, id, index).random()
}

/// Criteria 1 to 9.
pub fn run_criterion(id: u8, seed: u64) -> Result<CriterionReport> {
    let start = Instant::now();
    let (_, name, limit) = CRITERIA[(id - 1) as usize];
    let tally = match id {
        1 => criterion1(seed)?,
        2 => criterion2(seed)?,
        3 => criterion3()?,
        4 => criterion4()?,
        5 => criterion5(seed)?,
        6 => criterion6(seed)?,
        7 => criterion7(seed)?,
        8 => criterion8(seed)?,
        9 => criterion9(seed)?,
        _ => return crate::error::invalid(format!("no criterion {id} in 1..=9")),
    };
    Ok(tally.finish(id, name, limit, start))
}

/// Criteria 1 to 9 on the current pool.
pub fn run_suite(seed: u64) -> Result<VerifyReport> {
    let criteria = (1..=9)
        .map(|id| run_criterion(id, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport {
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    })
}

pub fn report_json(report: &VerifyReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// Criterion 10: the suite JSON from pools of each worker count, compared
/// byte for byte. Returns the report from the first pool with criterion 10
/// appended.
pub fn run_with_determinism(seed: u64, workers: &[usize]) -> Result<VerifyReport> {
    let start = Instant::now();
    let mut runs = Vec::with_capacity(workers.len());
    for &w in workers {
        runs.push(with_workers(w, || run_suite(seed))??);
    }
    let texts: Vec<String> = runs.iter().map(report_json).collect();
    let mut tally = Tally::new();
    for (w, text) in workers.iter().zip(&texts).skip(1) {
        tally.check(*text == texts[0], || {
            format!("JSON from {w} workers differs from {} workers", workers[0])
        });
    }
    tally.set("runs", workers.len() as f64);
    tally.set("json_bytes", texts[0].len() as f64);
    let (_, name, limit) = CRITERIA[9];
    let mut report = runs.swap_remove(0);
    report.criteria.push(tally.finish(10, name, limit, start));
    report.passed = report.criteria.iter().all(|c| c.passed);
    Ok(report)
}

fn criterion1(seed: u64) -> Result<Tally> {
    let cases: Vec<(usize, usize, u64)> = (0..50)
        .map(|i| {
            let mut r = instance_rng(seed, 1, i);
            let d = r.random_range(2..=6usize);
            let n = r.random_range(d..=24usize);
            (n, d, r.random())
        })
        .collect();
    let results = cases
        .par_iter()
        .map(|&(n, d, s)| {
            let c = synthesize_untf(n, d, s)?;
            let (value, _) = polarization_p2(&c);
            let cert = certified_max(&c, exp(2.0), 1e-3)?;
            Ok((value, cert))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Tally::new();
    for (&(n, d, _), (value, cert)) in cases.iter().zip(&results) {
        let target = n as f64 / d as f64;
        t.max("max_eigen_error", (value - target).abs());
        t.max("max_enclosure_width", cert.width());
        t.check((value - target).abs() <= 1e-8, || {
            format!("n={n} d={d}: λmax={value} vs {target}")
        });
        t.check(cert.contains(target, 1e-8), || {
            format!(
                "n={n} d={d}: [{}, {}] misses {target}",
                cert.lower, cert.upper
            )
        });
    }
    Ok(t)
}

fn criterion2(seed: u64) -> Result<Tally> {
    let cases: Vec<Configuration> = (0..200)
        .map(|i| {
            let mut r = instance_rng(seed, 2, i);
            let n = r.random_range(1..=12usize);
            let d = r.random_range(1..=4usize);
            random_configuration(n, d, r.random())
        })
        .collect::<Result<_>>()?;
    let checks = cases
        .par_iter()
        .map(|c| prop3_crosscheck(c, 1e-3))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Tally::new();
    for (c, k) in cases.iter().zip(&checks) {
        t.max("max_enclosure_width", k.enclosure.width());
        // Both sides are computed values of one real number; allow for rounding.
        let rounding = 1e-12 * k.sign_norm.max(1.0);
        t.check(k.enclosure.contains(k.sign_norm, rounding), || {
            format!(
                "n={} d={}: sign norm {} outside [{}, {}]",
                c.len(),
                c.dim(),
                k.sign_norm,
                k.enclosure.lower,
                k.enclosure.upper
            )
        });
    }
    Ok(t)
}

fn criterion3() -> Result<Tally> {
    let mut t = Tally::new();
    for n in 2..=32usize {
        let config = equidistributed(n)?;
        for p in 1..=(2 * n - 1).min(12) {
            let p = exp(p as f64);
            let closed = riesz_energy_closed(n, p)?;
            let direct = riesz_energy(&config, p);
            let rel = ((closed - direct) / direct).abs();
            t.max("max_relative_error", rel);
            t.check(rel <= 1e-9, || {
                format!("n={n} p={}: closed {closed} direct {direct}", p.get())
            });
        }
    }
    let e42 = riesz_energy_closed(4, exp(2.0))?;
    let e21 = riesz_energy_closed(2, exp(1.0))?;
    t.set("E_4^2", e42);
    t.set("E_2^1", e21);
    t.check(e42 == 32.0, || format!("E_4^2 = {e42}"));
    t.check(e21 == 4.0, || format!("E_2^1 = {e21}"));
    Ok(t)
}

fn criterion4() -> Result<Tally> {
    let mut t = Tally::new();
    for n in 2..=8usize {
        let nf = n as f64;
        for pf in [0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 2.0 * nf, 2.0 * nf + 1.0] {
            let p = exp(pf);
            let closed = stolarsky_max(n, p)?.stolarsky_max;
            let (grid, _) = equidistributed_grid_max(n, p, 100_000);
            t.max("max_abs_error", (closed - grid).abs());
            t.check((closed - grid).abs() <= 1e-7, || {
                format!("n={n} p={pf}: closed {closed} grid {grid}")
            });
        }
    }
    Ok(t)
}

fn criterion5(seed: u64) -> Result<Tally> {
    let mut cases = Vec::new();
    for n in 1..=8usize {
        for pf in [0.25, 0.5, 0.75, 1.0] {
            cases.push((n, pf));
        }
    }
    let searches = cases
        .par_iter()
        .enumerate()
        .map(|(i, &(n, pf))| {
            let opts = SearchOptions {
                restarts: 1,
                net_delta: 1e-6,
                outer_steps: 50,
                seed: instance_seed(seed, 5, i as u64),
                ..SearchOptions::default()
            };
            minimize_polarization(n, 2, exp(pf), &opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Tally::new();
    for (&(n, pf), s) in cases.iter().zip(&searches) {
        let p = exp(pf);
        let v = prop5_value(n, p)?;
        let st = stolarsky_max(n, p)?.stolarsky_max;
        let scaled = 2f64.powf(pf) * v;
        t.max("max_identity_error", (scaled - st).abs());
        t.check((scaled - st).abs() <= 1e-9, || {
            format!("n={n} p={pf}: 2^p M = {scaled}, stolarsky {st}")
        });
        let excess = s.certificate.upper - v;
        t.max(
            "max_search_excess_over_modulus",
            excess - s.certificate.modulus,
        );
        t.check(excess <= s.certificate.modulus, || {
            format!(
                "n={n} p={pf}: search upper {} exceeds {v} by more than {}",
                s.certificate.upper, s.certificate.modulus
            )
        });
    }
    Ok(t)
}

fn criterion6(seed: u64) -> Result<Tally> {
    let mut cases = Vec::new();
    for d in 2..=5usize {
        for n in d..=4 * d {
            for pf in [0.5, 1.0, 2.0, 3.0] {
                cases.push((n, d, pf));
            }
        }
    }
    let results = cases
        .par_iter()
        .enumerate()
        .map(|(i, &(n, d, pf))| {
            let p = exp(pf);
            let opts = SearchOptions {
                restarts: 1,
                net_delta: 2e-2,
                outer_steps: 25,
                seed: instance_seed(seed, 6, i as u64),
                structured: StructuredStarts::ALL,
                ..SearchOptions::default()
            };
            let search = minimize_polarization(n, d, p, &opts)?;
            let bounds = theorem1_bounds(n, d, p)?;
            let onb = certified_max(&bounds.construction, p, 2e-3)?;
            Ok((search, bounds, onb))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Tally::new();
    for (&(n, d, pf), (search, bounds, onb)) in cases.iter().zip(&results) {
        let floor = n as f64 * mu(d, exp(pf));
        t.min("min_lower_minus_n_mu", search.certificate.lower - floor);
        t.check(search.certificate.lower >= floor - 1e-9, || {
            format!(
                "n={n} d={d} p={pf}: certified lower {} below n mu {floor}",
                search.certificate.lower
            )
        });
        let formula = onb_copies_max(n, d, exp(pf));
        t.max("max_formula_mismatch", (bounds.upper - formula).abs());
        t.max("max_onb_lower_gap", (formula - onb.lower).abs());
        t.check(
            onb.contains(formula, 1e-9) && (onb.lower - formula).abs() <= 1e-9,
            || {
                format!(
                    "n={n} d={d} p={pf}: basis copies [{}, {}] vs formula {formula}",
                    onb.lower, onb.upper
                )
            },
        );
    }
    for k in 1..=100 {
        let pf = 0.05 * k as f64;
        let lhs = 2f64.powf(pf) * mu(2, exp(pf));
        let rhs = mu_tilde(exp(pf));
        t.max("max_mu_tilde_error", (lhs - rhs).abs());
        t.check((lhs - rhs).abs() <= 1e-12, || {
            format!("p={pf}: 2^p mu = {lhs}, mu_tilde = {rhs}")
        });
    }
    Ok(t)
}

fn criterion7(seed: u64) -> Result<Tally> {
    // A third random, a third tight frames, a third perturbed tight frames.
    let cases = (0..500u64)
        .into_par_iter()
        .map(|i| {
            let mut r = instance_rng(seed, 7, i);
            let d = r.random_range(2..=5usize);
            let n = r.random_range(d..=3 * d);
            let c = match i % 3 {
                0 => random_configuration(n, d, r.random())?,
                1 => synthesize_untf(n, d, r.random())?,
                _ => {
                    let base = synthesize_untf(n, d, r.random())?;
                    let vectors = base
                        .iter()
                        .map(|u| {
                            let noise = rng::unit_vector(&mut r, d);
                            u.iter().zip(&noise).map(|(a, b)| a + 1e-2 * b).collect()
                        })
                        .collect();
                    Configuration::normalized(d, vectors)?
                }
            };
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Tally::new();
    let mut planar = 0;
    for c in &cases {
        let (n, d) = (c.len() as f64, c.dim() as f64);
        let floor = n * n / d;
        let fp = frame_potential(c);
        let rep = isotropy_report(c, 1e-8);
        t.min("min_fp_excess", fp - floor);
        t.check(fp >= floor - 1e-10, || {
            format!("n={n} d={d}: FP {fp} < {floor}")
        });
        let equal = (fp - floor).abs() <= 1e-8;
        t.check(equal == rep.is_isotropic, || {
            format!(
                "n={n} d={d}: FP excess {} but residual {}",
                fp - floor,
                rep.residual
            )
        });
        if c.dim() == 2 {
            planar += 1;
            let rep = isotropy_report(c, 1e-9);
            let [re, im] = rep.planar_moment.expect("d = 2");
            let moment_small = re.hypot(im) <= 1e-9;
            t.check(moment_small == (rep.residual <= 1e-9), || {
                format!(
                    "n={n}: |moment| {} vs residual {}",
                    re.hypot(im),
                    rep.residual
                )
            });
        }
    }
    // Equally spaced lines at random rotations are exactly isotropic.
    for i in 0..50u64 {
        let mut r = instance_rng(seed, 7, 1000 + i);
        let n = r.random_range(2..=12usize);
        let phase: f64 = r.random::<f64>() * PI;
        let angles: Vec<f64> = (0..n).map(|k| phase + PI * k as f64 / n as f64).collect();
        let rep = isotropy_report(&Configuration::from_angles(&angles)?, 1e-9);
        let [re, im] = rep.planar_moment.expect("d = 2");
        planar += 1;
        t.check(
            (re.hypot(im) <= 1e-9) == (rep.residual <= 1e-9) && rep.is_isotropic,
            || {
                format!(
                    "spaced n={n}: |moment| {} residual {}",
                    re.hypot(im),
                    rep.residual
                )
            },
        );
    }
    t.set("planar_instances", planar as f64);
    Ok(t)
}

fn criterion8(seed: u64) -> Result<Tally> {
    let mut t = Tally::new();
    for d in 2..=8usize {
        let rep = conjecture1_harness(d, 1000, instance_seed(seed, 8, d as u64))?;
        let sharp = ((d + 2) as f64).sqrt();
        t.min("min_trial_minus_sharp", rep.min_over_trials - sharp);
        t.check(rep.violations == 0, || {
            format!(
                "d={d}: {} violations, min {}",
                rep.violations, rep.min_over_trials
            )
        });
        let norm = max_sign_sum_exact(&simplex_union_onb(d)?)?.norm;
        t.max("max_construction_error", (norm - sharp).abs());
        t.check((norm - sharp).abs() <= 1e-9, || {
            format!("d={d}: construction norm {norm} vs {sharp}")
        });
    }
    Ok(t)
}

fn criterion9(seed: u64) -> Result<Tally> {
    let cases: Vec<(Configuration, u64)> = (0..200)
        .map(|i| {
            let mut r = instance_rng(seed, 9, i);
            let n = r.random_range(1..=14usize);
            let d = r.random_range(1..=5usize);
            Ok((random_configuration(n, d, r.random())?, r.random()))
        })
        .collect::<Result<_>>()?;
    let results = cases
        .par_iter()
        .map(|(c, s)| Ok((max_sign_sum_local(c, *s), max_sign_sum_exact(c)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Tally::new();
    let mut matches = 0;
    let mut gaps = Vec::new();
    for (i, (local, exact)) in results.iter().enumerate() {
        t.min("min_bang_margin", local.bang_margin);
        t.check(local.bang_margin >= 1.0 - 1e-10, || {
            format!("instance {i}: margin {}", local.bang_margin)
        });
        let gap = exact.norm - local.norm;
        t.check(gap >= -1e-12, || {
            format!(
                "instance {i}: local {} above exact {}",
                local.norm, exact.norm
            )
        });
        if gap.abs() <= 1e-12 {
            matches += 1;
        } else {
            gaps.push(gap);
        }
    }
    let rate = matches as f64 / results.len() as f64;
    t.set("match_rate", rate);
    t.set("mismatches", gaps.len() as f64);
    t.set("max_gap", gaps.iter().copied().fold(0.0, f64::max));
    t.check(rate >= 0.95, || {
        format!(
            "local search matched enumeration in {matches} of {}",
            results.len()
        )
    });
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_criteria_pass() {
        for id in [3, 4, 7] {
            let r = run_criterion(id, 1).unwrap();
            assert!(r.passed, "{r:?}");
            assert!(r.checks > 0);
        }
    }

    #[test]
    fn report_has_no_timing() {
        let r = run_criterion(3, 0).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert!(!json.contains("elapsed"));
    }

    #[test]
    fn unknown_criterion() {
        assert!(run_criterion(10, 0).is_err());
    }
}
