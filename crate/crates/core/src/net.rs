//! δ-nets on S^{d-1} with certified covering radius.
//!
//! Two generators are provided:
//!
//! * [`NetKind::Spherical`]: for d = 2 an equal-angle grid; for d ≥ 3 a grid in
//!   the polar angle θ with a net on S^{d-2} (scaled by sin θ) in each band.
//!   Points are `(cos θ, sin θ · w)`, and for two such points
//!   `|v - v'|² = 4 sin²((θ-θ')/2) + sin θ sin θ' |w - w'|²`, which is what
//!   the per-band radius accounting uses.
//! * [`NetKind::CubeFaces`]: an `m^{d-1}` grid on each of the 2d faces of the
//!   cube, centrally projected. The covering radius is measured exactly from
//!   the cell vertices.
//!
//! Both report the radius they actually achieve, which is never above the
//! requested `delta`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config::{dot, normalize};
use crate::error::{invalid, Error, Result};

/// Default cap on the number of net points.
pub const DEFAULT_NET_BUDGET: usize = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetKind {
    Spherical,
    CubeFaces,
}

impl std::str::FromStr for NetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spherical" => Ok(NetKind::Spherical),
            "cube-faces" => Ok(NetKind::CubeFaces),
            other => invalid(format!("unknown net kind {other:?}")),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereNet {
    pub dim: usize,
    /// Requested covering radius.
    pub delta: f64,
    /// Certified covering radius, `<= delta`.
    pub covering_radius: f64,
    pub construction: NetKind,
    /// `delta * count^(1/(d-1))`, so that `count <= (constant/delta)^(d-1)`.
    pub constant: Option<f64>,
    points: Vec<f64>,
}

impl SphereNet {
    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[f64] {
        &self.points
    }
}

pub fn sphere_net(dim: usize, delta: f64, kind: NetKind) -> Result<SphereNet> {
    sphere_net_with_budget(dim, delta, kind, DEFAULT_NET_BUDGET)
}

pub fn sphere_net_with_budget(
    dim: usize,
    delta: f64,
    kind: NetKind,
    budget: usize,
) -> Result<SphereNet> {
    if dim == 0 {
        return invalid("dimension must be at least 1");
    }
    if !(delta > 0.0 && delta < 2.0) {
        return invalid(format!("delta must lie in (0, 2), got {delta}"));
    }
    let count = match kind {
        NetKind::Spherical => spherical_plan(dim, delta, true, budget as f64).0,
        NetKind::CubeFaces => {
            if dim == 1 {
                2.0
            } else {
                let m = cube_resolution(dim, delta, budget)?;
                2.0 * dim as f64 * (m as f64).powi(dim as i32 - 1)
            }
        }
    };
    if count > budget as f64 {
        return Err(Error::Budget(format!(
            "a {kind:?} net on S^{} with delta {delta} needs {count:.3e} points (budget {budget})",
            dim - 1
        )));
    }
    let (points, radius) = match kind {
        NetKind::Spherical => spherical_build(dim, delta, true),
        NetKind::CubeFaces => cube_build(dim, delta, budget)?,
    };
    let n = points.len() / dim;
    let constant = (dim >= 2).then(|| delta * (n as f64).powf(1.0 / (dim as f64 - 1.0)));
    Ok(SphereNet {
        dim,
        delta,
        covering_radius: radius,
        construction: kind,
        constant,
        points,
    })
}

/// Number of circle points for a requested radius. The top-level grid keeps
/// the angular gap at most `2 asin(r/2)`; inner grids only need the covering
/// chord `2 sin(π/2m)` to stay below `r`.
fn circle_count(r: f64, top: bool) -> usize {
    if r >= 2.0 {
        return if top { 2 } else { 1 };
    }
    let half = (r / 2.0).asin();
    let m = if top { PI / half } else { PI / (2.0 * half) };
    (m.ceil() as usize).max(if top { 2 } else { 1 })
}

fn circle_radius(m: usize) -> f64 {
    2.0 * (PI / (2.0 * m as f64)).sin()
}

/// Polar grid size for the recursive construction: `2 sin(h/4) <= r/√2`.
fn polar_intervals(r: f64) -> usize {
    let x = (r / (2.0 * 2f64.sqrt())).min(1.0);
    ((PI / (4.0 * x.asin())).ceil() as usize).max(1)
}

fn band_target(r: f64, s: f64, h: f64) -> f64 {
    r / (2.0 * s * (s + h / 2.0).min(1.0)).sqrt()
}

fn band_radius(s: f64, h: f64, sub: f64) -> f64 {
    let polar = 2.0 * (h / 4.0).sin();
    (polar * polar + s * (s + h / 2.0).min(1.0) * sub * sub).sqrt()
}

fn polar_sin(j: usize, k: usize) -> f64 {
    if j == 0 || j == k {
        0.0
    } else {
        (j as f64 * PI / k as f64).sin()
    }
}

/// (point count, achieved radius) without materializing points.
/// Point count and covering radius of `spherical_build`, without building.
/// Stops with an infinite count once the count exceeds `cap`.
fn spherical_plan(dim: usize, r: f64, top: bool, cap: f64) -> (f64, f64) {
    match dim {
        1 => (2.0, 0.0),
        2 => {
            let m = circle_count(r, top);
            (m as f64, circle_radius(m))
        }
        _ if r >= 2.0 && !top => (1.0, 2.0),
        _ => {
            let k = polar_intervals(r);
            let h = PI / k as f64;
            let mut count = 0.0;
            let mut radius: f64 = 0.0;
            for j in 0..=k {
                let s = polar_sin(j, k);
                if s == 0.0 {
                    count += 1.0;
                    radius = radius.max(2.0 * (h / 4.0).sin());
                } else {
                    let (c, sub) =
                        spherical_plan(dim - 1, band_target(r, s, h), false, cap - count);
                    count += c;
                    if count > cap {
                        return (f64::INFINITY, radius);
                    }
                    radius = radius.max(band_radius(s, h, sub));
                }
            }
            (count, radius)
        }
    }
}

fn spherical_build(dim: usize, r: f64, top: bool) -> (Vec<f64>, f64) {
    match dim {
        1 => (vec![1.0, -1.0], 0.0),
        2 => {
            let m = circle_count(r, top);
            let pts = (0..m)
                .flat_map(|k| {
                    let a = 2.0 * PI * k as f64 / m as f64;
                    [a.cos(), a.sin()]
                })
                .collect();
            (pts, circle_radius(m))
        }
        _ if r >= 2.0 && !top => {
            let mut p = vec![0.0; dim];
            p[0] = 1.0;
            (p, 2.0)
        }
        _ => {
            let k = polar_intervals(r);
            let h = PI / k as f64;
            let mut pts = Vec::new();
            let mut radius: f64 = 0.0;
            for j in 0..=k {
                let theta = j as f64 * PI / k as f64;
                let s = polar_sin(j, k);
                let c = if j == 0 {
                    1.0
                } else if j == k {
                    -1.0
                } else {
                    theta.cos()
                };
                if s == 0.0 {
                    pts.push(c);
                    pts.extend(std::iter::repeat_n(0.0, dim - 1));
                    radius = radius.max(2.0 * (h / 4.0).sin());
                } else {
                    let (sub, sub_r) = spherical_build(dim - 1, band_target(r, s, h), false);
                    for w in sub.chunks_exact(dim - 1) {
                        let start = pts.len();
                        pts.push(c);
                        pts.extend(w.iter().map(|x| s * x));
                        normalize(&mut pts[start..]);
                    }
                    radius = radius.max(band_radius(s, h, sub_r));
                }
            }
            (pts, radius)
        }
    }
}

/// Largest number of coordinates a face cell can carry (so d <= 13).
pub(crate) const MAX_CELL_DIM: usize = 13;

/// An axis-aligned box on one face of the cube `[-1, 1]^d`, standing for its
/// central projection onto the sphere.
#[derive(Clone, Debug)]
pub(crate) struct FaceCell {
    pub dim: usize,
    pub axis: usize,
    pub sign: f64,
    pub lo: [f64; MAX_CELL_DIM],
    pub hi: [f64; MAX_CELL_DIM],
}

impl FaceCell {
    pub fn faces(dim: usize) -> Vec<FaceCell> {
        assert!((2..=MAX_CELL_DIM).contains(&dim));
        let mut out = Vec::with_capacity(2 * dim);
        for axis in 0..dim {
            for sign in [1.0, -1.0] {
                let mut lo = [0.0; MAX_CELL_DIM];
                let mut hi = [0.0; MAX_CELL_DIM];
                lo[..dim - 1].fill(-1.0);
                hi[..dim - 1].fill(1.0);
                out.push(FaceCell {
                    dim,
                    axis,
                    sign,
                    lo,
                    hi,
                });
            }
        }
        out
    }

    /// Embed face coordinates `t` (length d-1) as a cube-surface point.
    fn embed(&self, t: &[f64], out: &mut [f64]) {
        let mut k = 0;
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            if i == self.axis {
                *o = self.sign;
            } else {
                *o = t[k];
                k += 1;
            }
        }
    }

    /// Unit direction through the box center.
    pub fn center(&self, out: &mut [f64]) {
        let m = self.dim - 1;
        let mut t = [0.0; MAX_CELL_DIM];
        for i in 0..m {
            t[i] = 0.5 * (self.lo[i] + self.hi[i]);
        }
        self.embed(&t[..m], out);
        normalize(&mut out[..self.dim]);
    }

    /// Largest angle between `center` and the projection of any point of the
    /// box. The set of directions within a fixed angle (< π/2) of `center`
    /// is a convex cone, so the maximum is attained at a vertex.
    pub fn angular_radius(&self, center: &[f64]) -> f64 {
        let m = self.dim - 1;
        let mut t = [0.0; MAX_CELL_DIM];
        let mut y = [0.0; MAX_CELL_DIM];
        let mut worst: f64 = 0.0;
        for mask in 0u32..(1u32 << m) {
            for (i, ti) in t.iter_mut().enumerate().take(m) {
                *ti = if mask >> i & 1 == 1 {
                    self.hi[i]
                } else {
                    self.lo[i]
                };
            }
            self.embed(&t[..m], &mut y);
            let y = &y[..self.dim];
            let along = dot(center, y);
            let perp = y
                .iter()
                .zip(center)
                .map(|(a, c)| (a - along * c).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(perp.atan2(along));
        }
        worst
    }

    /// Bisect along the widest side (lowest index on ties).
    pub fn split(&self) -> [FaceCell; 2] {
        let m = self.dim - 1;
        let mut k = 0;
        for i in 1..m {
            if self.hi[i] - self.lo[i] > self.hi[k] - self.lo[k] {
                k = i;
            }
        }
        let mid = 0.5 * (self.lo[k] + self.hi[k]);
        let mut a = self.clone();
        let mut b = self.clone();
        a.hi[k] = mid;
        b.lo[k] = mid;
        [a, b]
    }
}

fn cube_cells(dim: usize, m: usize) -> impl Iterator<Item = FaceCell> {
    let per_face = m.pow(dim as u32 - 1);
    FaceCell::faces(dim).into_iter().flat_map(move |face| {
        (0..per_face).map(move |idx| {
            let mut cell = face.clone();
            let mut rest = idx;
            for i in 0..dim - 1 {
                let k = rest % m;
                rest /= m;
                let w = 2.0 / m as f64;
                cell.lo[i] = -1.0 + k as f64 * w;
                cell.hi[i] = if k + 1 == m {
                    1.0
                } else {
                    -1.0 + (k + 1) as f64 * w
                };
            }
            cell
        })
    })
}

fn chord(angle: f64) -> f64 {
    2.0 * (angle / 2.0).sin()
}

/// Covering radius of the m-grid; every face is congruent, so one suffices.
fn cube_radius(dim: usize, m: usize) -> f64 {
    let mut c = [0.0; MAX_CELL_DIM];
    cube_cells(dim, m)
        .take(m.pow(dim as u32 - 1))
        .map(|cell| {
            cell.center(&mut c);
            chord(cell.angular_radius(&c[..dim]))
        })
        .fold(0.0, f64::max)
}

fn cube_resolution(dim: usize, delta: f64, budget: usize) -> Result<usize> {
    if dim > MAX_CELL_DIM {
        return invalid(format!("cube-face nets support d <= {MAX_CELL_DIM}"));
    }
    let mut m = 1usize;
    loop {
        let count = 2.0 * dim as f64 * (m as f64).powi(dim as i32 - 1);
        if count > budget as f64 {
            return Err(Error::Budget(format!(
                "a cube-face net on S^{} with delta {delta} needs more than {budget} points",
                dim - 1
            )));
        }
        let r = cube_radius(dim, m);
        if r <= delta {
            return Ok(m);
        }
        m = ((m as f64 * r / delta).ceil() as usize).max(m + 1);
    }
}

fn cube_build(dim: usize, delta: f64, budget: usize) -> Result<(Vec<f64>, f64)> {
    if dim == 1 {
        return Ok((vec![1.0, -1.0], 0.0));
    }
    let m = cube_resolution(dim, delta, budget)?;
    let mut pts = Vec::with_capacity(2 * dim * m.pow(dim as u32 - 1) * dim);
    let mut c = [0.0; MAX_CELL_DIM];
    for cell in cube_cells(dim, m) {
        cell.center(&mut c);
        pts.extend_from_slice(&c[..dim]);
    }
    Ok((pts, cube_radius(dim, m)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    /// Monte Carlo covering audit: distance from random probes to the net.
    fn audit(net: &SphereNet, probes: usize, seed: u64) -> f64 {
        let mut r = rng::stream(seed, 0);
        let mut worst: f64 = 0.0;
        for _ in 0..probes {
            let x = rng::unit_vector(&mut r, net.dim);
            let best = net
                .points()
                .map(|p| 2.0 - 2.0 * dot(p, &x))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best.max(0.0).sqrt());
        }
        worst
    }

    #[test]
    fn zero_sphere_net_is_both_signs() {
        for delta in [0.01, 1.0, 1.99] {
            let net = sphere_net(1, delta, NetKind::Spherical).unwrap();
            assert_eq!(net.flat(), &[1.0, -1.0]);
        }
    }

    #[test]
    fn circle_net_gap_bound() {
        for delta in [1.5, 0.3, 0.05, 0.001] {
            let net = sphere_net(2, delta, NetKind::Spherical).unwrap();
            let m = net.len();
            let gap = 2.0 * PI / m as f64;
            assert!(gap <= 2.0 * (delta / 2.0).asin() + 1e-15);
            assert!(net.covering_radius <= delta);
            for (k, p) in net.points().enumerate() {
                let a = 2.0 * PI * k as f64 / m as f64;
                assert!((p[0] - a.cos()).abs() < 1e-15 && (p[1] - a.sin()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn spherical_net_on_s2_passes_covering_audit() {
        let net = sphere_net(3, 0.2, NetKind::Spherical).unwrap();
        assert!(net.covering_radius <= 0.2);
        let worst = audit(&net, 100_000, 11);
        assert!(
            worst <= net.covering_radius,
            "{worst} > {}",
            net.covering_radius
        );
        for p in net.points() {
            assert!((dot(p, p) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn higher_dimensional_nets_pass_audit() {
        for (d, delta) in [(4, 0.5), (5, 0.9)] {
            for kind in [NetKind::Spherical, NetKind::CubeFaces] {
                let net = sphere_net(d, delta, kind).unwrap();
                assert!(net.covering_radius <= delta);
                let worst = audit(&net, 20_000, d as u64);
                assert!(worst <= net.covering_radius, "{kind:?} d={d}: {worst}");
            }
        }
    }

    #[test]
    fn cube_net_audit_on_s2() {
        let net = sphere_net(3, 0.15, NetKind::CubeFaces).unwrap();
        assert!(audit(&net, 50_000, 5) <= net.covering_radius);
    }

    #[test]
    fn nets_are_deterministic() {
        let a = sphere_net(4, 0.4, NetKind::Spherical).unwrap();
        let b = sphere_net(4, 0.4, NetKind::Spherical).unwrap();
        assert_eq!(a.flat(), b.flat());
    }

    #[test]
    fn rejects_bad_delta_and_budget() {
        assert!(sphere_net(3, 0.0, NetKind::Spherical).is_err());
        assert!(sphere_net(3, 2.0, NetKind::Spherical).is_err());
        assert!(matches!(
            sphere_net(8, 1e-3, NetKind::Spherical),
            Err(Error::Budget(_))
        ));
        assert!(matches!(
            sphere_net_with_budget(3, 0.01, NetKind::CubeFaces, 1000),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn point_count_respects_reported_constant() {
        let net = sphere_net(3, 0.1, NetKind::Spherical).unwrap();
        let c = net.constant.unwrap();
        assert!((net.len() as f64) <= (c / 0.1).powi(2) * (1.0 + 1e-12));
    }
}
