//! Target manifolds with closed-form exponential and logarithm maps.
//!
//! Three backends are provided: Euclidean space, the flat torus `R^n / Z^n`,
//! and the unit round sphere `S^2` (points stored as unit 3-vectors).
//!
//! Besides the typed API ([`AmbientPoint`], [`TangentVec`]) the space exposes
//! slice-level kernels used by the curve and chart code. Those work on
//! *lifted* coordinates: on the torus a point is any representative in `R^n`
//! and `exp` does not reduce modulo the lattice, so a curve can be carried as
//! a continuous lift.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|p| = 1` for sphere points.
pub const SPHERE_NORM_TOL: f64 = 1e-12;
/// Antipodal threshold used by the sphere logarithm.
pub const ANTIPODAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmbientSpace {
    Euclidean { dim: usize },
    FlatTorus { dim: usize },
    /// Unit sphere in `R^3`; `dim` is always 2.
    Sphere2 { dim: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmbientPoint {
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentVec {
    pub base: AmbientPoint,
    pub comp: Vec<f64>,
}

impl AmbientPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }
}

impl TangentVec {
    pub fn new(base: AmbientPoint, comp: Vec<f64>) -> Self {
        Self { base, comp }
    }

    pub fn norm(&self) -> f64 {
        norm(&self.comp)
    }
}

impl AmbientSpace {
    pub fn euclidean(dim: usize) -> Self {
        AmbientSpace::Euclidean { dim }
    }

    pub fn flat_torus(dim: usize) -> Self {
        AmbientSpace::FlatTorus { dim }
    }

    pub fn sphere2() -> Self {
        AmbientSpace::Sphere2 { dim: 2 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AmbientSpace::Euclidean { dim } | AmbientSpace::FlatTorus { dim } if dim < 2 => Err(
                Error::InvalidAmbient(format!("dimension {dim} is below 2")),
            ),
            AmbientSpace::Sphere2 { dim } if dim != 2 => Err(Error::InvalidAmbient(format!(
                "sphere2 has dimension 2, got {dim}"
            ))),
            _ => Ok(()),
        }
    }

    /// Manifold dimension `n`.
    pub fn dim(&self) -> usize {
        match *self {
            AmbientSpace::Euclidean { dim } | AmbientSpace::FlatTorus { dim } => dim,
            AmbientSpace::Sphere2 { .. } => 2,
        }
    }

    /// Length of a coordinate vector (3 for the sphere, `n` otherwise).
    pub fn coord_len(&self) -> usize {
        match *self {
            AmbientSpace::Sphere2 { .. } => 3,
            _ => self.dim(),
        }
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, AmbientSpace::FlatTorus { .. })
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self, AmbientSpace::Sphere2 { .. })
    }

    pub fn is_plane(&self) -> bool {
        matches!(self, AmbientSpace::Euclidean { dim: 2 })
    }

    /// Builds a point, reducing torus coordinates to `[0,1)^n` and checking the
    /// sphere constraint.
    pub fn point(&self, coords: Vec<f64>) -> Result<AmbientPoint> {
        if coords.len() != self.coord_len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coordinates, got {}",
                self.coord_len(),
                coords.len()
            )));
        }
        match self {
            AmbientSpace::FlatTorus { .. } => Ok(AmbientPoint::new(reduce_torus(&coords))),
            AmbientSpace::Sphere2 { .. } => {
                let n = norm(&coords);
                if (n - 1.0).abs() > SPHERE_NORM_TOL {
                    return Err(Error::InvalidAmbient(format!(
                        "sphere point has norm {n}"
                    )));
                }
                Ok(AmbientPoint::new(coords))
            }
            AmbientSpace::Euclidean { .. } => Ok(AmbientPoint::new(coords)),
        }
    }

    /// Builds a tangent vector; on the sphere the normal component must vanish.
    pub fn tangent(&self, base: &AmbientPoint, comp: Vec<f64>) -> Result<TangentVec> {
        if comp.len() != self.coord_len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} components, got {}",
                self.coord_len(),
                comp.len()
            )));
        }
        if self.is_sphere() && dot(&base.coords, &comp).abs() > 1e-10 {
            return Err(Error::InvalidAmbient(
                "sphere tangent vector is not orthogonal to its base point".into(),
            ));
        }
        Ok(TangentVec::new(base.clone(), comp))
    }

    pub fn metric_inner(&self, v: &TangentVec, w: &TangentVec) -> Result<f64> {
        if !self.same_point(&v.base.coords, &w.base.coords) {
            return Err(Error::BaseMismatch);
        }
        Ok(dot(&v.comp, &w.comp))
    }

    pub fn exp_map(&self, v: &TangentVec) -> AmbientPoint {
        let mut out = vec![0.0; self.coord_len()];
        self.exp_raw(&v.base.coords, &v.comp, &mut out);
        if self.is_torus() {
            out = reduce_torus(&out);
        }
        AmbientPoint::new(out)
    }

    pub fn log_map(&self, p: &AmbientPoint, q: &AmbientPoint) -> Result<TangentVec> {
        let mut out = vec![0.0; self.coord_len()];
        self.log_raw(&p.coords, &q.coords, &mut out)?;
        Ok(TangentVec::new(p.clone(), out))
    }

    pub fn injectivity_radius(&self, _p: &AmbientPoint) -> f64 {
        self.injectivity_radius_const()
    }

    /// All three backends are homogeneous, so the radius does not depend on the point.
    pub fn injectivity_radius_const(&self) -> f64 {
        match self {
            AmbientSpace::Euclidean { .. } => f64::INFINITY,
            AmbientSpace::FlatTorus { .. } => 0.5,
            AmbientSpace::Sphere2 { .. } => PI,
        }
    }

    pub fn distance(&self, p: &AmbientPoint, q: &AmbientPoint) -> f64 {
        self.dist_raw(&p.coords, &q.coords)
    }

    // ---------------------------------------------------------------------
    // slice kernels (lifted coordinates)

    /// Exponential map without torus reduction.
    pub fn exp_raw(&self, p: &[f64], v: &[f64], out: &mut [f64]) {
        match self {
            AmbientSpace::Euclidean { .. } | AmbientSpace::FlatTorus { .. } => {
                for k in 0..p.len() {
                    out[k] = p[k] + v[k];
                }
            }
            AmbientSpace::Sphere2 { .. } => {
                let r = norm(v);
                let (c, s) = (r.cos(), sinc(r));
                for k in 0..3 {
                    out[k] = c * p[k] + s * v[k];
                }
                let n = norm(out);
                for x in out.iter_mut() {
                    *x /= n;
                }
            }
        }
    }

    /// Logarithm map. On the torus the shortest lattice representative of
    /// `q - p` is returned, ties resolving to `+1/2`.
    pub fn log_raw(&self, p: &[f64], q: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            AmbientSpace::Euclidean { .. } => {
                for k in 0..p.len() {
                    out[k] = q[k] - p[k];
                }
                Ok(())
            }
            AmbientSpace::FlatTorus { .. } => {
                for k in 0..p.len() {
                    out[k] = shortest_rep(q[k] - p[k]);
                }
                Ok(())
            }
            AmbientSpace::Sphere2 { .. } => {
                let c = dot(p, q);
                let mut v = [0.0; 3];
                for k in 0..3 {
                    v[k] = q[k] - c * p[k];
                }
                let s = norm(&v);
                let angle = s.atan2(c);
                if PI - angle < ANTIPODAL_TOL {
                    return Err(Error::CutLocus { distance: angle });
                }
                let scale = if s > 1e-300 { angle / s } else { 1.0 };
                for k in 0..3 {
                    out[k] = scale * v[k];
                }
                Ok(())
            }
        }
    }

    /// Geodesic distance between (possibly lifted) coordinates.
    pub fn dist_raw(&self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            AmbientSpace::Euclidean { .. } => {
                p.iter().zip(q).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
            }
            AmbientSpace::FlatTorus { .. } => p
                .iter()
                .zip(q)
                .map(|(a, b)| shortest_rep(b - a).powi(2))
                .sum::<f64>()
                .sqrt(),
            AmbientSpace::Sphere2 { .. } => {
                let c = dot(p, q);
                let cr = cross3(p, q);
                norm(&cr).atan2(c)
            }
        }
    }

    /// Removes the normal component on the sphere; identity elsewhere.
    pub fn project_tangent_raw(&self, p: &[f64], v: &mut [f64]) {
        if self.is_sphere() {
            let pn2 = dot(p, p);
            let c = dot(p, v) / pn2;
            for k in 0..3 {
                v[k] -= c * p[k];
            }
        }
    }

    fn same_point(&self, p: &[f64], q: &[f64]) -> bool {
        p.len() == q.len() && self.dist_raw(p, q) <= 1e-12
    }
}

/// Shortest representative of a coordinate difference in `(-1/2, 1/2]`.
pub fn shortest_rep(d: f64) -> f64 {
    d - (d - 0.5).ceil()
}

pub fn reduce_torus(coords: &[f64]) -> Vec<f64> {
    coords
        .iter()
        .map(|&x| {
            let r = x - x.floor();
            if r >= 1.0 {
                0.0
            } else {
                r
            }
        })
        .collect()
}

fn sinc(r: f64) -> f64 {
    if r < 1e-8 {
        1.0 - r * r / 6.0
    } else {
        r.sin() / r
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn cross3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
