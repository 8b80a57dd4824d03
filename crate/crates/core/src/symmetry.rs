//! Isometry-group action on curves and the orbit map in quotient charts.
//!
//! Only the connected component of the identity is represented: rigid
//! motions of `R^n`, translations of the flat torus and rotations of the
//! sphere. Infinitesimal generators ([`Killing`] fields) give the orbit
//! directions `project_normal(K o x)` in a chart; their rank and kernel
//! measure the orbit dimension and the (infinitesimal) stabilizer.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::ambient::AmbientSpace;
use crate::charts::{chart_invert, project_comps, Chart, NormalSection};
use crate::curve::Embedding;
use crate::error::{Error, Result};

/// `p -> R p + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    pub space: AmbientSpace,
    pub rotation: DMatrix<f64>,
    pub translation: Vec<f64>,
}

impl Isometry {
    pub fn new(space: AmbientSpace, rotation: DMatrix<f64>, translation: Vec<f64>) -> Result<Self> {
        let d = space.coord_len();
        if rotation.nrows() != d || rotation.ncols() != d || translation.len() != d {
            return Err(Error::ShapeMismatch(format!("isometry of a {d}-dimensional coordinate space")));
        }
        let gram = rotation.transpose() * &rotation - DMatrix::identity(d, d);
        if gram.abs().max() > 1e-10 || (rotation.determinant() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidAmbient("rotation is not in SO(n)".into()));
        }
        if space.is_torus() && (&rotation - DMatrix::identity(d, d)).abs().max() > 0.0 {
            return Err(Error::InvalidAmbient("torus isometries are translations".into()));
        }
        if space.is_sphere() && translation.iter().any(|v| *v != 0.0) {
            return Err(Error::InvalidAmbient("sphere isometries are rotations".into()));
        }
        Ok(Self {
            space,
            rotation,
            translation,
        })
    }

    pub fn identity(space: AmbientSpace) -> Self {
        let d = space.coord_len();
        Self {
            space,
            rotation: DMatrix::identity(d, d),
            translation: vec![0.0; d],
        }
    }

    pub fn translation(space: AmbientSpace, t: Vec<f64>) -> Result<Self> {
        let d = space.coord_len();
        Self::new(space, DMatrix::identity(d, d), t)
    }

    /// Planar rotation by `angle` about `center`.
    pub fn rotation2(angle: f64, center: [f64; 2]) -> Self {
        let (s, c) = angle.sin_cos();
        let r = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let t = vec![
            center[0] - (c * center[0] - s * center[1]),
            center[1] - (s * center[0] + c * center[1]),
        ];
        Self {
            space: AmbientSpace::euclidean(2),
            rotation: r,
            translation: t,
        }
    }

    /// Rotation by `angle` about the line through the origin along `axis`
    /// (for `R^3` or the sphere).
    pub fn rotation3(space: AmbientSpace, axis: [f64; 3], angle: f64) -> Result<Self> {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if n == 0.0 || space.coord_len() != 3 || space.is_torus() {
            return Err(Error::InvalidAmbient("rotation about an axis needs R^3 or the sphere".into()));
        }
        let k = skew([axis[0] / n, axis[1] / n, axis[2] / n]);
        let r = (k * angle).exp();
        Self::new(space, r, vec![0.0; 3])
    }

    /// `self o other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        let t = &self.rotation * nalgebra::DVector::from_column_slice(&other.translation);
        Isometry {
            space: self.space,
            rotation: &self.rotation * &other.rotation,
            translation: t.iter().zip(&self.translation).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn apply_point(&self, p: &[f64]) -> Vec<f64> {
        let d = p.len();
        (0..d)
            .map(|i| (0..d).map(|j| self.rotation[(i, j)] * p[j]).sum::<f64>() + self.translation[i])
            .collect()
    }
}

fn skew(w: [f64; 3]) -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0])
}

/// `psi o x`, node by node (torus curves keep their lift and winding).
pub fn apply_isometry(psi: &Isometry, x: &Embedding) -> Result<Embedding> {
    if psi.space != x.space() {
        return Err(Error::ShapeMismatch("isometry and curve live in different spaces".into()));
    }
    Ok(x.map_coords(|p| psi.apply_point(p)))
}

/// An infinitesimal isometry.
#[derive(Debug, Clone, PartialEq)]
pub enum Killing {
    Translation(Vec<f64>),
    /// `p -> A (p - center)` with `A` skew-symmetric.
    Rotation { generator: DMatrix<f64>, center: Vec<f64> },
}

impl Killing {
    pub fn eval(&self, p: &[f64]) -> Vec<f64> {
        match self {
            Killing::Translation(v) => v.clone(),
            Killing::Rotation { generator, center } => {
                let d = p.len();
                (0..d)
                    .map(|i| (0..d).map(|j| generator[(i, j)] * (p[j] - center[j])).sum())
                    .collect()
            }
        }
    }

    /// The one-parameter group `exp(t K)`.
    pub fn flow(&self, space: AmbientSpace, t: f64) -> Isometry {
        match self {
            Killing::Translation(v) => Isometry {
                space,
                rotation: DMatrix::identity(v.len(), v.len()),
                translation: v.iter().map(|x| x * t).collect(),
            },
            Killing::Rotation { generator, center } => {
                let r = (generator * t).exp();
                let rc = &r * nalgebra::DVector::from_column_slice(center);
                Isometry {
                    space,
                    rotation: r,
                    translation: center.iter().zip(rc.iter()).map(|(c, v)| c - v).collect(),
                }
            }
        }
    }
}

/// A basis of the Lie algebra of the identity component of `Iso(N, g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KillingBasis {
    pub space: AmbientSpace,
    pub fields: Vec<Killing>,
}

impl KillingBasis {
    /// Translations followed by rotations (rotations about `center` in flat
    /// space, the origin by default).
    pub fn standard(space: AmbientSpace, center: Option<&[f64]>) -> Result<Self> {
        let d = space.coord_len();
        let unit = |k: usize| {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            e
        };
        let rotations = |c: Vec<f64>| -> Vec<Killing> {
            let mut out = Vec::new();
            for i in 0..d {
                for j in i + 1..d {
                    let mut a = DMatrix::zeros(d, d);
                    a[(j, i)] = 1.0;
                    a[(i, j)] = -1.0;
                    out.push(Killing::Rotation {
                        generator: a,
                        center: c.clone(),
                    });
                }
            }
            out
        };
        let fields = match space {
            AmbientSpace::FlatTorus { .. } => (0..d).map(|k| Killing::Translation(unit(k))).collect(),
            AmbientSpace::Sphere2 { .. } => rotations(vec![0.0; 3]),
            AmbientSpace::Euclidean { .. } => {
                let c = center.map_or(vec![0.0; d], <[f64]>::to_vec);
                if c.len() != d {
                    return Err(Error::ShapeMismatch(format!("rotation center needs {d} coordinates")));
                }
                let mut f: Vec<Killing> = (0..d).map(|k| Killing::Translation(unit(k))).collect();
                f.extend(rotations(c));
                f
            }
        };
        Ok(Self { space, fields })
    }

    pub fn dim(&self) -> usize {
        self.fields.len()
    }

    /// Rank of the fields evaluated jointly on the given points.
    pub fn rank_on(&self, pts: &[Vec<f64>]) -> usize {
        let d = self.space.coord_len();
        let m = DMatrix::from_fn(pts.len() * d, self.dim(), |r, a| self.fields[a].eval(&pts[r / d])[r % d]);
        numerical_rank(&m.singular_values().iter().copied().collect::<Vec<_>>())
    }
}

/// Number of singular values above `1e-8` times the largest.
fn numerical_rank(sv: &[f64]) -> usize {
    let top = sv.iter().fold(0.0f64, |m, v| m.max(*v));
    sv.iter().filter(|v| **v > 1e-8 * top).count()
}

/// Normal projections of the Killing fields along the chart center.
pub fn orbit_fields(c: &Chart, basis: &KillingBasis) -> Vec<NormalSection> {
    let d = c.center.dim();
    basis
        .fields
        .iter()
        .map(|k| {
            let mut comps = Vec::with_capacity(c.len() * d);
            for i in 0..c.len() {
                comps.extend(k.eval(c.center.coord(i)));
            }
            project_comps(c, &comps)
        })
        .collect()
}

/// Differential of the orbit map at the identity in chart coordinates, with
/// rows scaled by `sqrt(w_i)` so singular values measure `L^2(ds)` norms.
pub fn orbit_differential(c: &Chart, basis: &KillingBasis) -> DMatrix<f64> {
    let cols = orbit_fields(c, basis);
    let r = c.rank();
    let w = c.weights();
    DMatrix::from_fn(c.len() * r, basis.dim(), |row, a| cols[a].coeff[row] * w[row / r].sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitReport {
    #[serde(rename = "dim_G")]
    pub dim_g: usize,
    pub rank: usize,
    pub stabilizer_dim: usize,
    pub singular_values: Vec<f64>,
}

pub fn orbit_rank(c: &Chart, basis: &KillingBasis) -> OrbitReport {
    let mut sv: Vec<f64> = orbit_differential(c, basis).singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let rank = numerical_rank(&sv);
    OrbitReport {
        dim_g: basis.dim(),
        rank,
        stabilizer_dim: basis.dim() - rank,
        singular_values: sv,
    }
}

/// Sup norm (of the interpolant) of the chart coordinates `u(t)` of `psi(t) o center`,
/// on `steps + 1` equispaced times in `[0, t_max]`.
pub fn action_continuity_probe(
    c: &Chart,
    psi: impl Fn(f64) -> Isometry,
    t_max: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    (0..=steps)
        .map(|j| {
            let t = if steps == 0 { 0.0 } else { t_max * j as f64 / steps as f64 };
            let y = apply_isometry(&psi(t), &c.center)?;
            Ok(chart_invert(c, &y)?.section.interpolated_sup_norm())
        })
        .collect()
}
