//! Closed curves `S^1 -> N` sampled on a uniform grid.
//!
//! An [`Embedding`] stores `P` samples of a band-limited closed curve. Torus
//! curves are stored as a continuous lift to `R^n` together with their winding
//! vector, so the lift satisfies `x(theta + 2 pi) = x(theta) + winding`. All
//! differentiation and interpolation acts on the periodic part of the lift.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ambient::{cross3, dot, norm, reduce_torus, shortest_rep, AmbientPoint, AmbientSpace, TangentVec};
use crate::charts::reach;
use crate::error::{Error, Result};
use crate::spectral::{spectral, Interp};

pub const TWO_PI: f64 = 2.0 * PI;

/// Speed threshold below which a sample counts as singular.
pub const MIN_SPEED: f64 = 1e-8;

/// The source circle, discretized by `P` equispaced nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridCircle {
    p: usize,
}

impl GridCircle {
    pub fn new(p: usize) -> Result<Self> {
        if p < 16 || p % 2 != 0 {
            return Err(Error::InvalidGrid(p));
        }
        Ok(Self { p })
    }

    pub fn len(&self) -> usize {
        self.p
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node spacing `2 pi / P`.
    pub fn h(&self) -> f64 {
        TWO_PI / self.p as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.h() * i as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.p).map(|i| self.node(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    space: AmbientSpace,
    grid: GridCircle,
    /// Row-major `P x coord_len`; continuous lift on the torus.
    coords: Vec<f64>,
    /// Torus winding vector; empty for other spaces.
    winding: Vec<i64>,
}

impl Embedding {
    /// Builds a curve from raw coordinates. Sphere samples are renormalized;
    /// torus samples are interpreted as a continuous lift with the given winding.
    pub fn from_flat(space: AmbientSpace, coords: Vec<f64>, winding: Vec<i64>) -> Result<Self> {
        space.validate()?;
        let d = space.coord_len();
        if coords.len() % d != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{} values is not a multiple of {d}",
                coords.len()
            )));
        }
        let grid = GridCircle::new(coords.len() / d)?;
        if space.is_torus() {
            if winding.len() != d {
                return Err(Error::ShapeMismatch(format!(
                    "torus curve needs a winding vector of length {d}"
                )));
            }
        } else if !winding.is_empty() {
            return Err(Error::ShapeMismatch("winding is only meaningful on the torus".into()));
        }
        let mut coords = coords;
        if space.is_sphere() {
            for c in coords.chunks_mut(3) {
                let n = norm(c);
                if n < 1e-12 {
                    return Err(Error::InvalidAmbient("zero vector as sphere point".into()));
                }
                c.iter_mut().for_each(|v| *v /= n);
            }
        }
        Ok(Self {
            space,
            grid,
            coords,
            winding,
        })
    }

    /// Samples `f` at the grid nodes. On the torus `f` must return a continuous
    /// lift; the winding is read off from `f(2 pi) - f(0)`.
    pub fn from_fn(space: AmbientSpace, p: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let grid = GridCircle::new(p)?;
        let mut coords = Vec::with_capacity(p * space.coord_len());
        for i in 0..p {
            coords.extend(f(grid.node(i)));
        }
        let winding = if space.is_torus() {
            let a = f(0.0);
            let b = f(TWO_PI);
            a.iter().zip(&b).map(|(x, y)| (y - x).round() as i64).collect()
        } else {
            Vec::new()
        };
        Self::from_flat(space, coords, winding)
    }

    /// Torus curve from reduced samples: unwraps consecutive nodes along
    /// shortest representatives and checks the closure against `winding`.
    pub fn from_torus_points(space: AmbientSpace, pts: &[Vec<f64>], winding: Vec<i64>) -> Result<Self> {
        let d = space.coord_len();
        let mut lift: Vec<f64> = Vec::with_capacity(pts.len() * d);
        for (i, p) in pts.iter().enumerate() {
            if p.len() != d {
                return Err(Error::ShapeMismatch(format!("point {i} has {} coordinates", p.len())));
            }
            if i == 0 {
                lift.extend_from_slice(p);
            } else {
                for k in 0..d {
                    let prev = lift[(i - 1) * d + k];
                    lift.push(prev + shortest_rep(p[k] - prev));
                }
            }
        }
        if let Some(last) = pts.len().checked_sub(1) {
            for k in 0..d.min(winding.len()) {
                let end = lift[last * d + k];
                let closed = end + shortest_rep(lift[k] - end);
                let w = closed - lift[k];
                if (w - winding[k] as f64).abs() > 1e-9 {
                    return Err(Error::ShapeMismatch(format!(
                        "torus samples close up with winding {w:.3} in coordinate {k}, expected {}",
                        winding[k]
                    )));
                }
            }
        }
        Self::from_flat(space, lift, winding)
    }

    pub fn space(&self) -> AmbientSpace {
        self.space
    }

    pub fn grid(&self) -> GridCircle {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.space.coord_len()
    }

    pub fn winding(&self) -> &[i64] {
        &self.winding
    }

    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    /// Lifted coordinates of node `i`.
    pub fn coord(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    /// Node `i` as a point of `N` (torus coordinates reduced).
    pub fn point(&self, i: usize) -> AmbientPoint {
        let c = self.coord(i);
        if self.space.is_torus() {
            AmbientPoint::new(reduce_torus(c))
        } else {
            AmbientPoint::new(c.to_vec())
        }
    }

    pub fn points(&self) -> Vec<AmbientPoint> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Per-coordinate linear drift `winding / 2 pi` of the lift.
    pub fn slope(&self) -> Vec<f64> {
        if self.space.is_torus() {
            self.winding.iter().map(|&w| w as f64 / TWO_PI).collect()
        } else {
            vec![0.0; self.dim()]
        }
    }

    /// Periodic part of coordinate `k` (the lift minus its linear drift).
    pub fn periodic_component(&self, k: usize) -> Vec<f64> {
        let d = self.dim();
        let slope = self.slope()[k];
        (0..self.len())
            .map(|i| self.coords[i * d + k] - slope * self.grid.node(i))
            .collect()
    }

    fn assemble(&self, comps: &[Vec<f64>]) -> Vec<f64> {
        let d = self.dim();
        let p = self.len();
        let mut out = vec![0.0; p * d];
        for (k, c) in comps.iter().enumerate() {
            for i in 0..p {
                out[i * d + k] = c[i];
            }
        }
        out
    }

    /// Spectral first derivative of the coordinates (ambient `R^d`, not projected).
    pub fn velocity_raw(&self) -> Vec<f64> {
        let sp = spectral(self.len());
        let slope = self.slope();
        let comps: Vec<Vec<f64>> = (0..self.dim())
            .map(|k| {
                let mut d = sp.derivative(&self.periodic_component(k));
                d.iter_mut().for_each(|v| *v += slope[k]);
                d
            })
            .collect();
        self.assemble(&comps)
    }

    /// Spectral second derivative of the coordinates (ambient `R^d`).
    pub fn acceleration_raw(&self) -> Vec<f64> {
        let sp = spectral(self.len());
        let comps: Vec<Vec<f64>> = (0..self.dim())
            .map(|k| sp.second_derivative(&self.periodic_component(k)))
            .collect();
        self.assemble(&comps)
    }

    /// Tangent velocity at the nodes (projected to `T_pS^2` on the sphere).
    pub fn velocity(&self) -> Vec<f64> {
        let mut v = self.velocity_raw();
        if self.space.is_sphere() {
            let d = self.dim();
            for i in 0..self.len() {
                let p = self.coord(i).to_vec();
                self.space.project_tangent_raw(&p, &mut v[i * d..(i + 1) * d]);
            }
        }
        v
    }

    pub fn speeds(&self) -> Vec<f64> {
        self.velocity().chunks(self.dim()).map(norm).collect()
    }

    pub fn min_speed(&self) -> f64 {
        self.speeds().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Curvature magnitude at the nodes: Euclidean curvature on flat spaces,
    /// geodesic curvature on the sphere.
    pub fn curvature(&self) -> Vec<f64> {
        let a = self.velocity_raw();
        let b = self.acceleration_raw();
        let d = self.dim();
        (0..self.len())
            .map(|i| {
                let ai = &a[i * d..(i + 1) * d];
                let bi = &b[i * d..(i + 1) * d];
                if self.space.is_sphere() {
                    let y = self.coord(i);
                    let ay = dot(ai, y);
                    let v2 = dot(ai, ai) - ay * ay;
                    let det = dot(y, &cross3(ai, bi));
                    det.abs() / v2.powf(1.5)
                } else {
                    let s2 = dot(ai, ai);
                    let ab = dot(ai, bi);
                    let q = (s2 * dot(bi, bi) - ab * ab).max(0.0);
                    q.sqrt() / s2.powf(1.5)
                }
            })
            .collect()
    }

    /// Signed curvature of a planar curve (`+1` on the counterclockwise unit circle).
    pub fn signed_curvature(&self) -> Result<Vec<f64>> {
        if !self.space.is_plane() {
            return Err(Error::UnsupportedAmbient("signed curvature needs the plane".into()));
        }
        let a = self.velocity_raw();
        let b = self.acceleration_raw();
        Ok((0..self.len())
            .map(|i| {
                let (a0, a1) = (a[2 * i], a[2 * i + 1]);
                let (b0, b1) = (b[2 * i], b[2 * i + 1]);
                (a0 * b1 - a1 * b0) / (a0 * a0 + a1 * a1).powf(1.5)
            })
            .collect())
    }

    pub fn interp(&self) -> CurveInterp {
        CurveInterp {
            comps: (0..self.dim()).map(|k| Interp::new(&self.periodic_component(k))).collect(),
            slope: self.slope(),
        }
    }

    /// Same samples traversed in the opposite direction: node `i` of the
    /// result is node `-i mod P`.
    pub fn reversed(&self) -> Embedding {
        let d = self.dim();
        let p = self.len();
        let mut coords = Vec::with_capacity(p * d);
        for i in 0..p {
            let j = (p - i) % p;
            for k in 0..d {
                let mut v = self.coords[j * d + k];
                if j != 0 && self.space.is_torus() {
                    v -= self.winding[k] as f64;
                }
                coords.push(v);
            }
        }
        let winding = self.winding.iter().map(|w| -w).collect();
        Embedding {
            space: self.space,
            grid: self.grid,
            coords,
            winding,
        }
    }

    /// Replaces the coordinates, keeping space, grid and winding.
    pub(crate) fn with_coords(&self, coords: Vec<f64>) -> Embedding {
        debug_assert_eq!(coords.len(), self.coords.len());
        let mut out = Embedding {
            space: self.space,
            grid: self.grid,
            coords,
            winding: self.winding.clone(),
        };
        if out.space.is_sphere() {
            for c in out.coords.chunks_mut(3) {
                let n = norm(c);
                c.iter_mut().for_each(|v| *v /= n);
            }
        }
        out
    }

    /// Keeps Fourier modes `|k| <= kmax` of the periodic part (sphere samples
    /// are renormalized afterwards).
    pub fn truncated(&self, kmax: usize) -> Embedding {
        let sp = spectral(self.len());
        let slope = self.slope();
        let comps: Vec<Vec<f64>> = (0..self.dim())
            .map(|k| {
                let mut c = sp.truncate(&self.periodic_component(k), kmax);
                for (i, v) in c.iter_mut().enumerate() {
                    *v += slope[k] * self.grid.node(i);
                }
                c
            })
            .collect();
        self.with_coords(self.assemble(&comps))
    }

    /// Applies `f` to every node's (lifted) coordinates.
    pub(crate) fn map_coords(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Embedding {
        let coords: Vec<f64> = self.coords.chunks(self.dim()).flat_map(f).collect();
        self.with_coords(coords)
    }
}

/// Band-limited interpolant of a closed curve (lifted coordinates).
#[derive(Debug, Clone)]
pub struct CurveInterp {
    comps: Vec<Interp>,
    slope: Vec<f64>,
}

impl CurveInterp {
    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn eval(&self, s: f64) -> Vec<f64> {
        self.comps
            .iter()
            .zip(&self.slope)
            .map(|(c, m)| c.eval(s) + m * s)
            .collect()
    }

    /// Position, velocity and acceleration at `s`.
    pub fn eval_all(&self, s: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let (mut x, mut v, mut a) = (Vec::with_capacity(d), Vec::with_capacity(d), Vec::with_capacity(d));
        for (c, m) in self.comps.iter().zip(&self.slope) {
            let (x0, x1, x2) = c.eval_all(s);
            x.push(x0 + m * s);
            v.push(x1 + m);
            a.push(x2);
        }
        (x, v, a)
    }
}

/// A section of the pull-back bundle `x*(TN)`: one tangent vector per node.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionField {
    pub base: Embedding,
    /// Row-major `P x coord_len` components.
    pub comps: Vec<f64>,
}

impl SectionField {
    pub fn new(base: &Embedding, comps: Vec<f64>) -> Result<Self> {
        if comps.len() != base.flat().len() {
            return Err(Error::ShapeMismatch(format!(
                "section has {} components, base curve {}",
                comps.len(),
                base.flat().len()
            )));
        }
        Ok(Self {
            base: base.clone(),
            comps,
        })
    }

    pub fn zeros(base: &Embedding) -> Self {
        Self {
            base: base.clone(),
            comps: vec![0.0; base.flat().len()],
        }
    }

    pub fn vec(&self, i: usize) -> &[f64] {
        let d = self.base.dim();
        &self.comps[i * d..(i + 1) * d]
    }

    pub fn tangent(&self, i: usize) -> TangentVec {
        TangentVec::new(self.base.point(i), self.vec(i).to_vec())
    }

    pub fn sup_norm(&self) -> f64 {
        self.comps
            .chunks(self.base.dim())
            .map(norm)
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, r: f64) -> SectionField {
        SectionField {
            base: self.base.clone(),
            comps: self.comps.iter().map(|v| v * r).collect(),
        }
    }
}

/// Spectral derivative `x'` as a section along `x`.
pub fn derivative(x: &Embedding) -> SectionField {
    SectionField {
        base: x.clone(),
        comps: x.velocity(),
    }
}

/// Arclength quadrature weights `|x'(theta_i)| 2 pi / P`.
pub fn quadrature_weights(x: &Embedding) -> Vec<f64> {
    let h = x.grid().h();
    x.speeds().into_iter().map(|s| s * h).collect()
}

/// Immersion test plus discrete injectivity (positive self-separation).
pub fn is_embedding(x: &Embedding) -> bool {
    x.min_speed() > MIN_SPEED && reach::separation(x) > MIN_SPEED
}

/// Lift of an orientation-preserving circle diffeomorphism, sampled at the
/// nodes of a grid: `s_i = phi(theta_i)` with `phi(theta + 2 pi) = phi(theta) + 2 pi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reparam {
    pub lift: Vec<f64>,
}

impl Reparam {
    pub fn new(lift: Vec<f64>) -> Result<Self> {
        GridCircle::new(lift.len())?;
        let r = Self { lift };
        r.check()?;
        Ok(r)
    }

    pub fn identity(p: usize) -> Self {
        let h = TWO_PI / p as f64;
        Self {
            lift: (0..p).map(|i| h * i as f64).collect(),
        }
    }

    pub fn from_fn(p: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = TWO_PI / p as f64;
        Self::new((0..p).map(|i| f(h * i as f64)).collect())
    }

    pub fn len(&self) -> usize {
        self.lift.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lift.is_empty()
    }

    fn check(&self) -> Result<()> {
        let p = self.lift.len();
        for i in 0..p {
            let next = if i + 1 < p { self.lift[i + 1] } else { self.lift[0] + TWO_PI };
            let step = next - self.lift[i];
            if !(step > 0.0) {
                return Err(Error::InvalidReparam(format!("not increasing at node {i}")));
            }
        }
        Ok(())
    }

    fn displacement(&self) -> Vec<f64> {
        let h = TWO_PI / self.len() as f64;
        self.lift.iter().enumerate().map(|(i, s)| s - h * i as f64).collect()
    }

    pub fn interp(&self) -> Interp {
        Interp::new(&self.displacement())
    }

    /// Interpolated value `phi(theta)` at any real `theta`.
    pub fn eval(&self, theta: f64) -> f64 {
        theta + self.interp().eval(theta)
    }

    /// Spectral derivative of the lift at the nodes.
    pub fn slopes(&self) -> Vec<f64> {
        spectral(self.len())
            .derivative(&self.displacement())
            .into_iter()
            .map(|d| 1.0 + d)
            .collect()
    }

    pub fn min_slope(&self) -> f64 {
        self.slopes().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `max_i |phi(theta_i) - theta_i|`.
    pub fn max_shift(&self) -> f64 {
        self.displacement().iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    /// `self o other`, sampled on the grid of `other`.
    pub fn compose(&self, other: &Reparam) -> Reparam {
        let ip = self.interp();
        Reparam {
            lift: other.lift.iter().map(|&s| s + ip.eval(s)).collect(),
        }
    }

    /// Inverse diffeomorphism sampled on a grid of `p` nodes.
    pub fn inverse(&self, p: usize) -> Result<Reparam> {
        let ip = self.interp();
        let h = TWO_PI / p as f64;
        let mut lift = Vec::with_capacity(p);
        for i in 0..p {
            let target = h * i as f64;
            let mut s = match i {
                0 => -ip.eval(0.0),
                _ => {
                    let prev: f64 = lift[i - 1];
                    prev + h / (1.0 + ip.eval_all(prev).1)
                }
            };
            let mut ok = false;
            for _ in 0..60 {
                let (v, d1, _) = ip.eval_all(s);
                let f = s + v - target;
                let fp = 1.0 + d1;
                if fp <= 0.0 {
                    break;
                }
                let step = f / fp;
                s -= step;
                if step.abs() < 1e-15 * (1.0 + s.abs()) {
                    ok = true;
                    break;
                }
            }
            if !ok {
                let (v, _, _) = ip.eval_all(s);
                if (s + v - target).abs() > 1e-11 {
                    return Err(Error::InvalidReparam(format!("inversion failed at node {i}")));
                }
            }
            lift.push(s);
        }
        Reparam::new(lift)
    }
}

/// Samples of `x o phi`, by trigonometric interpolation of the coordinates.
pub fn resample(x: &Embedding, phi: &Reparam) -> Result<Embedding> {
    phi.check()?;
    let ip = x.interp();
    let d = x.dim();
    let mut coords = Vec::with_capacity(phi.len() * d);
    for &s in &phi.lift {
        coords.extend(ip.eval(s));
    }
    Embedding::from_flat(x.space(), coords, x.winding().to_vec())
}

/// Random orientation-preserving diffeomorphism
/// `theta + sum_{k<=4} a_k sin(k theta + phi_k)` with `sum k |a_k| = 1.6 amplitude`,
/// so the slope stays above `1 - 1.6 amplitude > 0.2`.
pub fn make_diffeo(seed: u64, amplitude: f64, p: usize) -> Result<Reparam> {
    if !(0.0..0.5).contains(&amplitude) {
        return Err(Error::InvalidReparam(format!("amplitude {amplitude} outside [0, 0.5)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<(f64, f64)> = (1..=4)
        .map(|_| (rng.gen_range(0.1..1.0), rng.gen_range(0.0..TWO_PI)))
        .collect();
    let total: f64 = raw.iter().enumerate().map(|(k, (a, _))| (k + 1) as f64 * a).sum();
    let scale = 1.6 * amplitude / total;
    Reparam::from_fn(p, |t| {
        t + raw
            .iter()
            .enumerate()
            .map(|(k, (a, ph))| scale * a * ((k + 1) as f64 * t + ph).sin())
            .sum::<f64>()
    })
}

/// Symmetric Hausdorff distance between the images of two curves, measured
/// with the ambient geodesic distance between densely interpolated samples
/// and refined by continuous projection onto the other curve.
pub fn image_distance(x: &Embedding, y: &Embedding) -> Result<f64> {
    if x.space() != y.space() {
        return Err(Error::ShapeMismatch("curves live in different spaces".into()));
    }
    let a = DenseCurve::new(x);
    let b = DenseCurve::new(y);
    Ok(a.directed_distance(&b).max(b.directed_distance(&a)))
}

const DENSE_FACTOR: usize = 4;

/// A curve with its interpolant and a dense set of samples used for seeding
/// nearest-point searches.
pub(crate) struct DenseCurve {
    pub space: AmbientSpace,
    pub interp: CurveInterp,
    pub params: Vec<f64>,
    pub pts: Vec<Vec<f64>>,
}

impl DenseCurve {
    pub fn new(x: &Embedding) -> Self {
        let m = x.len() * DENSE_FACTOR;
        let interp = x.interp();
        let params: Vec<f64> = (0..m).map(|j| TWO_PI * j as f64 / m as f64).collect();
        let pts = params
            .iter()
            .map(|&s| normalize_if_sphere(x.space(), interp.eval(s)))
            .collect();
        Self {
            space: x.space(),
            interp,
            params,
            pts,
        }
    }

    fn directed_distance(&self, other: &DenseCurve) -> f64 {
        self.pts
            .iter()
            .map(|q| other.distance_to(q).0)
            .fold(0.0, f64::max)
    }

    /// Geodesic distance from `q` to the image, and the minimizing parameter.
    pub fn distance_to(&self, q: &[f64]) -> (f64, f64) {
        let (mut best, mut best_j) = (f64::INFINITY, 0);
        for (j, p) in self.pts.iter().enumerate() {
            let d = self.space.dist_raw(p, q);
            if d < best {
                best = d;
                best_j = j;
            }
        }
        let spacing = self.params[1] - self.params[0];
        let s = self.refine(q, self.params[best_j], spacing);
        let c = normalize_if_sphere(self.space, self.interp.eval(s));
        let d = self.space.dist_raw(&c, q);
        if d <= best {
            (d, s)
        } else {
            (best, self.params[best_j])
        }
    }

    /// Minimizes `|C(s) - q|^2` near `s0` (Newton on the derivative, bracketed).
    fn refine(&self, q: &[f64], s0: f64, spacing: f64) -> f64 {
        let c0 = self.interp.eval(s0);
        // move q to the lattice translate nearest to C(s0)
        let target: Vec<f64> = if self.space.is_torus() {
            c0.iter().zip(q).map(|(c, v)| c + shortest_rep(v - c)).collect()
        } else {
            q.to_vec()
        };
        let (lo, hi) = (s0 - spacing, s0 + spacing);
        let obj = |s: f64| -> (f64, f64, f64) {
            let (c, v, a) = self.interp.eval_all(s);
            let mut f1 = 0.0;
            let mut f2 = 0.0;
            let mut f0 = 0.0;
            for k in 0..c.len() {
                let r = c[k] - target[k];
                f0 += r * r;
                f1 += r * v[k];
                f2 += v[k] * v[k] + r * a[k];
            }
            (f0, f1, f2)
        };
        let mut s = s0;
        for _ in 0..40 {
            let (_, f1, f2) = obj(s);
            if f2 <= 0.0 {
                break;
            }
            let next = (s - f1 / f2).clamp(lo, hi);
            if (next - s).abs() < 1e-15 {
                s = next;
                break;
            }
            s = next;
        }
        // golden-section fallback if Newton left us worse than the seed
        if obj(s).0 > obj(s0).0 {
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let (mut a, mut b) = (lo, hi);
            for _ in 0..80 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if obj(c).0 < obj(d).0 {
                    b = d;
                } else {
                    a = c;
                }
            }
            s = 0.5 * (a + b);
        }
        s
    }
}

pub(crate) fn normalize_if_sphere(space: AmbientSpace, mut v: Vec<f64>) -> Vec<f64> {
    if space.is_sphere() {
        let n = norm(&v);
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}
