use polarlab_core::asymptotics::{mu, mu_tilde, theorem1_bounds};
use polarlab_core::certify::certified_max;
use polarlab_core::frames::{
    frame_operator, frame_potential, isotropy_report, polarization_p2, synthesize_untf,
};
use polarlab_core::linalg::jacobi_eigen;
use polarlab_core::planar::{stolarsky_max, PlanarConfig};
use polarlab_core::rng;
use polarlab_core::search::{minimize_polarization, random_configuration, SearchOptions};
use polarlab_core::signsum::{max_sign_sum_exact, max_sign_sum_local, signed_sum};
use polarlab_core::{potential, Configuration, Exponent};
use proptest::prelude::*;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn exponent() -> impl Strategy<Value = Exponent> {
    prop_oneof![Just(1.0), Just(2.0), 0.3f64..4.0].prop_map(|p| Exponent::new(p).unwrap())
}

fn config(
    max_n: usize,
    dims: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Configuration> {
    (1..=max_n, dims, any::<u64>()).prop_map(|(n, d, s)| random_configuration(n, d, s).unwrap())
}

/// Orthogonal matrix from Gram-Schmidt on Gaussian-direction rows.
fn random_orthogonal(d: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, 0);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    while rows.len() < d {
        let mut v = rng::unit_vector(&mut r, d);
        for q in &rows {
            let c = dot(&v, q);
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-3 {
            rows.push(v.iter().map(|x| x / norm).collect());
        }
    }
    rows.concat()
}

/// Every point of a uniform angle grid in d = 2, or of a latitude-longitude
/// grid in d = 3, with spacing at most `h`.
fn dense_grid(d: usize, h: f64) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => {
            let m = (std::f64::consts::TAU / h).ceil() as usize;
            (0..m)
                .map(|j| {
                    let t = std::f64::consts::TAU * j as f64 / m as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        }
        3 => {
            let rows = (std::f64::consts::PI / h).ceil() as usize;
            let mut pts = Vec::new();
            for i in 0..=rows {
                let th = std::f64::consts::PI * i as f64 / rows as f64;
                let m = ((std::f64::consts::TAU * th.sin()) / h).ceil().max(1.0) as usize;
                for j in 0..m {
                    let ph = std::f64::consts::TAU * j as f64 / m as f64;
                    pts.push(vec![th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
                }
            }
            pts
        }
        _ => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rotation_invariance(c in config(8, 2..=4), p in exponent(), seed in any::<u64>()) {
        let q = random_orthogonal(c.dim(), seed);
        let a = certified_max(&c, p, 1e-2).unwrap();
        let b = certified_max(&c.transformed(&q).unwrap(), p, 1e-2).unwrap();
        let slack = 2.0 * a.modulus;
        prop_assert!(a.lower <= b.upper + slack && b.lower <= a.upper + slack, "{a:?} {b:?}");
    }

    #[test]
    fn appending_a_vector(c in config(7, 2..=4), p in exponent(), seed in any::<u64>()) {
        let before = certified_max(&c, p, 1e-2).unwrap();
        let mut bigger = c.clone();
        bigger.push(&rng::unit_vector(&mut rng::stream(seed, 0), c.dim())).unwrap();
        let after = certified_max(&bigger, p, 1e-2).unwrap();
        // At the old witness the new potential has only gained a term.
        prop_assert!(potential(&bigger, &before.witness, p).unwrap() >= before.lower);
        prop_assert!(after.upper >= before.lower);
        prop_assert!(after.lower >= before.lower - after.modulus, "{before:?} {after:?}");
    }

    #[test]
    fn certificate_width(c in config(10, 1..=5), p in exponent()) {
        let cert = certified_max(&c, p, 2e-2).unwrap();
        prop_assert!(cert.lower <= cert.upper);
        prop_assert!(cert.width() <= 2.0 * cert.modulus);
        prop_assert_eq!(potential(&c, &cert.witness, p).unwrap(), cert.lower);
    }

    #[test]
    fn basis_potential_is_one(d in 1usize..8, seed in any::<u64>()) {
        let basis = Configuration::orthonormal_basis(d).unwrap();
        let two = Exponent::new(2.0).unwrap();
        let mut r = rng::stream(seed, 0);
        for _ in 0..1000 {
            let v = rng::unit_vector(&mut r, d);
            prop_assert!((potential(&basis, &v, two).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn duplication_identity(p in 1e-3f64..=50.0) {
        let p = Exponent::new(p).unwrap();
        let lhs = 2f64.powf(p.get()) * mu(2, p);
        let rhs = mu_tilde(p);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs, "{lhs} {rhs}");
    }

    #[test]
    fn eigenvalue_matches_certificate(c in config(10, 1..=4)) {
        let (value, witness) = polarization_p2(&c);
        let cert = certified_max(&c, Exponent::new(2.0).unwrap(), 1e-3).unwrap();
        prop_assert!(cert.contains(value, 1e-12 * value.max(1.0)), "{value} {cert:?}");
        prop_assert!((dot(&witness, &witness) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frame_potential_floor_and_trace(c in config(16, 1..=6)) {
        let (n, d) = (c.len() as f64, c.dim() as f64);
        prop_assert!(frame_potential(&c) >= n * n / d - 1e-10);
        let a = frame_operator(&c);
        let eig = jacobi_eigen(&a.entries, c.dim());
        prop_assert!((eig.values.iter().sum::<f64>() - n).abs() <= 1e-9);
    }

    #[test]
    fn planar_moment_equivalence(c in config(12, 2..=2)) {
        let rep = isotropy_report(&c, 1e-9);
        let [re, im] = rep.planar_moment.unwrap();
        prop_assert_eq!(re.hypot(im) <= 1e-9, rep.residual <= 1e-9);
    }

    #[test]
    fn flip_identity(c in config(12, 1..=5), seed in any::<u64>()) {
        let mut r = rng::stream(seed, 0);
        let signs: Vec<i8> = (0..c.len()).map(|_| rng::sign(&mut r)).collect();
        let z = signed_sum(&c, &signs);
        for k in 0..c.len() {
            let mut flipped = signs.clone();
            flipped[k] = -flipped[k];
            let w = signed_sum(&c, &flipped);
            let lhs = dot(&w, &w) - dot(&z, &z);
            let rhs = 4.0 * (1.0 - signs[k] as f64 * dot(c.vector(k), &z));
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + dot(&z, &z)), "{lhs} {rhs}");
        }
    }

    #[test]
    fn sign_sums(c in config(14, 1..=5), seed in any::<u64>()) {
        let exact = max_sign_sum_exact(&c).unwrap();
        let local = max_sign_sum_local(&c, seed);
        prop_assert!(exact.norm >= (c.len() as f64).sqrt() - 1e-12);
        prop_assert!(local.norm <= exact.norm + 1e-12);
        prop_assert!(local.bang_margin >= 1.0 - 1e-10);
    }

    #[test]
    fn stolarsky_above_average(n in 1usize..40, p in 0.05f64..30.0) {
        let p = Exponent::new(p).unwrap();
        let r = stolarsky_max(n, p).unwrap();
        prop_assert!(r.stolarsky_max >= n as f64 * mu_tilde(p) * (1.0 - 1e-12), "{r:?}");
    }

    #[test]
    fn synthesis_is_reproducible(d in 1usize..5, extra in 0usize..5, seed in any::<u64>()) {
        let a = synthesize_untf(d + extra, d, seed).unwrap();
        let b = synthesize_untf(d + extra, d, seed).unwrap();
        prop_assert_eq!(a.coords(), b.coords());
        prop_assert!(isotropy_report(&a, 1e-8).is_isotropic);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// A dense grid maximum never escapes the enclosure.
    #[test]
    fn enclosure_soundness(c in config(8, 1..=3), p in exponent()) {
        let delta = 0.05;
        let cert = certified_max(&c, p, delta).unwrap();
        let grid = dense_grid(c.dim(), delta / 10.0)
            .iter()
            .map(|v| potential(&c, v, p).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        let rounding = 1e-12 * grid.max(1.0);
        prop_assert!(grid <= cert.upper + rounding, "grid {grid} {cert:?}");
        // The grid is within its own modulus of the true maximum.
        let grid_modulus = polarlab_core::certify::modulus(c.len(), p, delta / 10.0);
        prop_assert!(cert.lower <= grid + grid_modulus + rounding, "grid {grid} {cert:?}");
    }

    /// 2^p times the line enclosure contains the distance-sum maximum on the
    /// circle.
    #[test]
    fn squaring_consistency(n in 1usize..8, seed in any::<u64>(), p in exponent()) {
        let mut r = rng::stream(seed, 0);
        let angles: Vec<f64> = (0..n).map(|_| rng::unit_vector(&mut r, 2)).map(|v| v[1].atan2(v[0])).collect();
        let lines = PlanarConfig::new(angles).unwrap();
        let cert = certified_max(&lines.to_configuration(), p, 1e-3).unwrap();
        let (squared, _) = polarlab_core::planar::squared_map(&lines, 0.0);
        let points = 20_000;
        let (t_max, _) = polarlab_core::planar::t_grid_max(&squared, p, points);
        let scale = 2f64.powf(p.get());
        // Chord spacing of the grid on T.
        let h = std::f64::consts::TAU / points as f64;
        let grid_allowance = polarlab_core::certify::modulus(n, p, h) * scale + 1e-12 * t_max;
        prop_assert!(t_max <= scale * cert.upper + 1e-12 * t_max);
        prop_assert!(t_max >= scale * cert.lower - grid_allowance, "{t_max} {cert:?}");
    }
}

/// For fixed ω the mean of the potential over uniform v is n μ.
#[test]
fn monte_carlo_mean() {
    for (n, d, p) in [(5, 3, 1.0), (12, 4, 0.5), (3, 7, 3.0), (20, 2, 2.0)] {
        let p = Exponent::new(p).unwrap();
        let c = random_configuration(n, d, 99).unwrap();
        let mut r = rng::stream(100, d as u64);
        let draws = 100_000;
        let xs: Vec<f64> = (0..draws)
            .map(|_| potential(&c, &rng::unit_vector(&mut r, d), p).unwrap())
            .collect();
        let mean = xs.iter().sum::<f64>() / draws as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let se = (var / draws as f64).sqrt();
        let want = n as f64 * mu(d, p);
        assert!(
            (mean - want).abs() <= 4.0 * se,
            "n={n} d={d}: {mean} vs {want} (se {se})"
        );
    }
}

/// Tail fractions of f(v) over random ω stay under 2 exp(-2t²/n).
#[test]
fn hoeffding_envelope() {
    let (n, d) = (2000, 10);
    let p = Exponent::new(1.0).unwrap();
    let v = {
        let mut v = vec![0.0; d];
        v[0] = 1.0;
        v
    };
    let centre = n as f64 * mu(d, p);
    let trials = 1000;
    let devs: Vec<f64> = (0..trials)
        .map(|t| {
            (potential(&random_configuration(n, d, 7_000 + t).unwrap(), &v, p).unwrap() - centre)
                .abs()
        })
        .collect();
    for t in [5.0, 10.0, 20.0, 30.0, 40.0] {
        let frac = devs.iter().filter(|&&x| x > t).count() as f64 / trials as f64;
        let envelope = 2.0 * (-2.0 * t * t / n as f64).exp();
        assert!(frac <= envelope, "t={t}: {frac} > {envelope}");
    }
}

/// Exact max signed sums of search-produced configurations sit between
/// n μ_{d,1} and the basis-copies bound.
#[test]
fn signed_sum_sandwich() {
    let one = Exponent::new(1.0).unwrap();
    for d in 2..=4 {
        for n in d..=4 * d {
            let opts = SearchOptions {
                restarts: 1,
                outer_steps: 25,
                net_delta: 2e-2,
                seed: n as u64,
                ..SearchOptions::default()
            };
            let r = minimize_polarization(n, d, one, &opts).unwrap();
            let norm = max_sign_sum_exact(&r.best).unwrap().norm;
            let bounds = theorem1_bounds(n, d, one).unwrap();
            assert!(
                norm >= bounds.lower - 1e-9,
                "n={n} d={d}: {norm} < {}",
                bounds.lower
            );
            // The search ranks by certified upper bound, so its pick may sit
            // above the basis copies by at most the modulus.
            let slack = r.certificate.modulus;
            assert!(
                norm <= bounds.upper + slack,
                "n={n} d={d}: {norm} > {}",
                bounds.upper
            );
            assert!(norm <= r.certificate.upper + 1e-12);
        }
    }
}

/// E_n^p / n² against μ̃_p: the fitted constant C in C n^{-min(p, 1)} is
/// printed, not asserted.
#[test]
fn energy_constant_fit() {
    use polarlab_core::planar::equidistributed_energy;
    for p in [0.5, 1.0, 1.5, 3.0] {
        let p = Exponent::new(p).unwrap();
        let rate = p.get().min(1.0);
        let c = (2..=256usize)
            .map(|n| {
                let nf = n as f64;
                (equidistributed_energy(n, p) / (nf * nf) - mu_tilde(p)).abs() * nf.powf(rate)
            })
            .fold(0.0, f64::max);
        assert!(c.is_finite());
        println!("p={}: fitted C = {c:.6}", p.get());
    }
}
