//! Unit-vector configurations and the ℓp-potential.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Allowed deviation of a stored vector's norm from 1.
pub const UNIT_TOL: f64 = 1e-12;

/// A positive exponent `p`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Exponent(f64);

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p > 0.0 {
            Ok(Exponent(p))
        } else {
            Err(Error::InvalidExponent(p))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `|x|^p`, with exact fast paths for p = 1 and p = 2.
    #[inline]
    pub fn pow_abs(self, x: f64) -> f64 {
        let a = x.abs();
        if self.0 == 2.0 {
            a * a
        } else if self.0 == 1.0 {
            a
        } else {
            a.powf(self.0)
        }
    }
}

impl TryFrom<f64> for Exponent {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        Exponent::new(p)
    }
}

impl From<Exponent> for f64 {
    fn from(p: Exponent) -> f64 {
        p.0
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// A multiset of `n` unit vectors in R^d, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfiguration", into = "RawConfiguration")]
pub struct Configuration {
    dim: usize,
    coords: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawConfiguration {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl TryFrom<RawConfiguration> for Configuration {
    type Error = Error;
    fn try_from(raw: RawConfiguration) -> Result<Self> {
        Configuration::new(raw.dim, raw.vectors)
    }
}

impl From<Configuration> for RawConfiguration {
    fn from(c: Configuration) -> Self {
        RawConfiguration {
            dim: c.dim,
            vectors: c.iter().map(<[f64]>::to_vec).collect(),
        }
    }
}

impl Configuration {
    /// Build from explicit vectors, each of which must already be a unit vector.
    pub fn new(dim: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        if vectors.is_empty() {
            return invalid("a configuration needs at least one vector");
        }
        let mut coords = Vec::with_capacity(dim * vectors.len());
        for (index, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            check_unit(index, v)?;
            coords.extend_from_slice(v);
        }
        Ok(Configuration { dim, coords })
    }

    /// Build from arbitrary nonzero vectors, normalizing each one.
    pub fn normalized(dim: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        let vectors = vectors
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                let n = norm(&v);
                if !(n > 0.0 && n.is_finite()) {
                    return invalid(format!("vector {i} cannot be normalized"));
                }
                Ok(v.into_iter().map(|x| x / n).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Configuration::new(dim, vectors)
    }

    pub(crate) fn from_flat_unchecked(dim: usize, coords: Vec<f64>) -> Self {
        debug_assert!(dim > 0 && !coords.is_empty() && coords.len().is_multiple_of(dim));
        Configuration { dim, coords }
    }

    /// The standard basis e_1, ..., e_d.
    pub fn orthonormal_basis(dim: usize) -> Result<Self> {
        Configuration::onb_copies(dim, dim)
    }

    /// e_{i mod d} for i = 0..n: ⌈n/d⌉ copies of the standard basis, the last
    /// one truncated.
    pub fn onb_copies(n: usize, dim: usize) -> Result<Self> {
        if n == 0 || dim == 0 {
            return invalid("n and d must be positive");
        }
        let mut coords = vec![0.0; n * dim];
        for i in 0..n {
            coords[i * dim + i % dim] = 1.0;
        }
        Ok(Configuration { dim, coords })
    }

    /// Planar configuration (cos α, sin α) for each angle.
    pub fn from_angles(angles: &[f64]) -> Result<Self> {
        if angles.is_empty() {
            return invalid("a configuration needs at least one vector");
        }
        let coords = angles.iter().flat_map(|a| [a.cos(), a.sin()]).collect();
        Ok(Configuration { dim: 2, coords })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// `n < d`: allowed, but outside the range the polarization bounds cover.
    pub fn is_underdetermined(&self) -> bool {
        self.len() < self.dim
    }

    #[inline]
    pub fn vector(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Replace vector `i`; `v` must be a unit vector of the right dimension.
    pub fn set_vector(&mut self, i: usize, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        check_unit(i, v)?;
        self.coords[i * self.dim..(i + 1) * self.dim].copy_from_slice(v);
        Ok(())
    }

    /// Append a unit vector.
    pub fn push(&mut self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        check_unit(self.len(), v)?;
        self.coords.extend_from_slice(v);
        Ok(())
    }

    /// Apply a d×d matrix (row-major) to every vector, renormalizing the
    /// result. Meant for orthogonal maps.
    pub fn transformed(&self, matrix: &[f64]) -> Result<Self> {
        let d = self.dim;
        if matrix.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: matrix.len(),
            });
        }
        let vectors = self
            .iter()
            .map(|u| {
                (0..d)
                    .map(|r| dot(&matrix[r * d..(r + 1) * d], u))
                    .collect()
            })
            .collect();
        Configuration::normalized(d, vectors)
    }
}

fn check_unit(index: usize, v: &[f64]) -> Result<()> {
    let n = norm(v);
    if (n - 1.0).abs() > UNIT_TOL || !n.is_finite() {
        return Err(Error::NotUnit {
            index,
            norm: n,
            tol: UNIT_TOL,
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Normalize in place; returns the original norm.
pub(crate) fn normalize(a: &mut [f64]) -> f64 {
    let n = norm(a);
    if n > 0.0 {
        a.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Check that `v` is a unit vector in R^dim.
pub fn check_direction(dim: usize, v: &[f64]) -> Result<()> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: v.len(),
        });
    }
    check_unit(0, v)
}

/// U^p(ω, v) = Σ_i |⟨v, u_i⟩|^p, summed in index order.
pub fn potential(config: &Configuration, v: &[f64], p: Exponent) -> Result<f64> {
    check_direction(config.dim(), v)?;
    Ok(potential_unchecked(config, v, p))
}

#[inline]
pub(crate) fn potential_unchecked(config: &Configuration, v: &[f64], p: Exponent) -> f64 {
    config.iter().map(|u| p.pow_abs(dot(v, u))).sum()
}
