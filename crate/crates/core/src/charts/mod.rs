//! Charts on the space of unparameterized embeddings.
//!
//! A [`Chart`] is centered at a smooth embedding `x` and parameterizes nearby
//! curves by sections `u` of the normal bundle: `y(theta) = exp_{x(theta)} u(theta)`.
//! The full chart does the same with arbitrary sections of `x*(TN)`.
//! Inverting the normal chart means projecting a curve onto the normal fibers
//! of the center, which also recovers the reparameterization relating the two
//! curves.

pub mod frame;
pub mod reach;

use std::f64::consts::PI;

use crate::ambient::{dot, norm, shortest_rep, AmbientSpace};
use crate::curve::{
    is_embedding, normalize_if_sphere, quadrature_weights, CurveInterp, DenseCurve, Embedding, Reparam,
    SectionField, TWO_PI,
};
use crate::error::{Error, Result};
use crate::spectral::Interp;

pub use frame::NormalFrame;
pub use reach::{reach_estimate, separation};

/// Newton iteration cap for the per-node fiber projection.
const NEWTON_MAX_ITER: usize = 50;
/// Residual tolerance of the fiber equation.
const NEWTON_TOL: f64 = 1e-12;

/// Frame coefficients of a section of the normal bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalSection {
    pub rank: usize,
    /// `P x rank`, row-major.
    pub coeff: Vec<f64>,
}

impl NormalSection {
    pub fn zeros(p: usize, rank: usize) -> Self {
        Self {
            rank,
            coeff: vec![0.0; p * rank],
        }
    }

    pub fn constant(p: usize, value: &[f64]) -> Self {
        Self {
            rank: value.len(),
            coeff: (0..p).flat_map(|_| value.iter().copied()).collect(),
        }
    }

    pub fn from_fn(p: usize, rank: usize, f: impl Fn(f64) -> Vec<f64>) -> Self {
        let h = TWO_PI / p as f64;
        Self {
            rank,
            coeff: (0..p).flat_map(|i| f(h * i as f64)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.coeff.len() / self.rank
    }

    pub fn is_empty(&self) -> bool {
        self.coeff.is_empty()
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.coeff[i * self.rank..(i + 1) * self.rank]
    }

    pub fn sup_norm(&self) -> f64 {
        self.coeff.chunks(self.rank).map(norm).fold(0.0, f64::max)
    }

    /// Sup norm of the band-limited interpolant: scan at 8x oversampling,
    /// then Newton on `|u|^2` from the best sample.
    pub fn interpolated_sup_norm(&self) -> f64 {
        let ip = self.interp();
        let sq = |s: f64| {
            ip.iter().fold((0.0, 0.0, 0.0), |(g, g1, g2), f| {
                let (v, d1, d2) = f.eval_all(s);
                (g + v * v, g1 + 2.0 * v * d1, g2 + 2.0 * (d1 * d1 + v * d2))
            })
        };
        let n = 8 * self.len().max(1);
        let ds = TWO_PI / n as f64;
        let mut s = (0..n)
            .map(|j| j as f64 * ds)
            .max_by(|a, b| sq(*a).0.total_cmp(&sq(*b).0))
            .unwrap_or(0.0);
        let mut best = sq(s).0;
        for _ in 0..20 {
            let (_, g1, g2) = sq(s);
            if g2 >= 0.0 {
                break;
            }
            let step = (-g1 / g2).clamp(-ds, ds);
            let v = sq(s + step).0;
            if v <= best {
                break;
            }
            best = v;
            s += step;
            if step.abs() < 1e-14 {
                break;
            }
        }
        best.sqrt().max(self.sup_norm())
    }

    /// `sqrt(sum_i |u_i|^2 w_i)`.
    pub fn l2_norm(&self, weights: &[f64]) -> f64 {
        self.l2_inner(self, weights).sqrt()
    }

    pub fn l2_inner(&self, other: &NormalSection, weights: &[f64]) -> f64 {
        self.coeff
            .chunks(self.rank)
            .zip(other.coeff.chunks(self.rank))
            .zip(weights)
            .map(|((a, b), w)| dot(a, b) * w)
            .sum()
    }

    pub fn axpy(&self, alpha: f64, other: &NormalSection) -> NormalSection {
        NormalSection {
            rank: self.rank,
            coeff: self
                .coeff
                .iter()
                .zip(&other.coeff)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        }
    }

    pub fn scaled(&self, alpha: f64) -> NormalSection {
        NormalSection {
            rank: self.rank,
            coeff: self.coeff.iter().map(|a| a * alpha).collect(),
        }
    }

    pub fn max_diff(&self, other: &NormalSection) -> f64 {
        self.coeff
            .chunks(self.rank)
            .zip(other.coeff.chunks(self.rank))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Band-limited interpolants of the coefficient functions.
    pub fn interp(&self) -> Vec<Interp> {
        (0..self.rank)
            .map(|a| {
                let c: Vec<f64> = self.coeff.chunks(self.rank).map(|row| row[a]).collect();
                Interp::new(&c)
            })
            .collect()
    }
}

/// A normal-bundle chart centered at a smooth embedding.
#[derive(Debug, Clone)]
pub struct Chart {
    pub center: Embedding,
    pub frame: NormalFrame,
    pub rho: f64,
    tangents: Vec<f64>,
    weights: Vec<f64>,
    interp: CurveInterp,
}

/// Result of projecting a curve onto the fibers of a chart.
#[derive(Debug, Clone)]
pub struct Inversion {
    pub section: NormalSection,
    /// `sigma(theta_i)`: parameter of the inverted curve on the fiber over node `i`.
    pub reparam: Reparam,
    /// The inverted curve had the opposite orientation; `reparam` refers to
    /// its reversal [`Embedding::reversed`].
    pub reversed: bool,
}

impl Chart {
    pub fn space(&self) -> AmbientSpace {
        self.center.space()
    }

    pub fn len(&self) -> usize {
        self.center.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rank(&self) -> usize {
        self.frame.rank
    }

    /// Arclength quadrature weights of the center.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Unit tangent at node `i`.
    pub fn unit_tangent(&self, i: usize) -> &[f64] {
        let d = self.center.dim();
        &self.tangents[i * d..(i + 1) * d]
    }

    pub fn zero_section(&self) -> NormalSection {
        NormalSection::zeros(self.len(), self.rank())
    }

    /// Ambient vector field `sum_a u^a nu^a` along the center.
    pub fn section_field(&self, u: &NormalSection) -> SectionField {
        let d = self.center.dim();
        let mut comps = vec![0.0; self.len() * d];
        for i in 0..self.len() {
            let ui = u.at(i);
            for (a, ua) in ui.iter().enumerate() {
                let nu = self.frame.nu(i, a);
                for k in 0..d {
                    comps[i * d + k] += ua * nu[k];
                }
            }
        }
        SectionField {
            base: self.center.clone(),
            comps,
        }
    }

    /// Center point (lifted / normalized) at an arbitrary parameter.
    pub fn center_at(&self, s: f64) -> Vec<f64> {
        normalize_if_sphere(self.space(), self.interp.eval(s))
    }

    /// Normal frame at an arbitrary parameter, consistent with the node frame.
    pub fn frame_at(&self, s: f64) -> Vec<Vec<f64>> {
        let (pos, vel, _) = self.interp.eval_all(s);
        let space = self.space();
        let p = normalize_if_sphere(space, pos);
        let mut t = vel;
        space.project_tangent_raw(&p, &mut t);
        let tn = norm(&t);
        t.iter_mut().for_each(|v| *v /= tn);
        if space.is_sphere() {
            return vec![crate::ambient::cross3(&t, &p).to_vec()];
        }
        match self.rank() {
            1 => vec![vec![t[1], -t[0]]],
            _ => {
                let d = self.center.dim();
                let mut r: Vec<f64> = (0..d)
                    .map(|k| {
                        let c: Vec<f64> = (0..self.len()).map(|i| self.frame.nu(i, 0)[k]).collect();
                        Interp::new(&c).eval(s)
                    })
                    .collect();
                let pr = dot(&r, &t);
                for k in 0..d {
                    r[k] -= pr * t[k];
                }
                let rn = norm(&r);
                r.iter_mut().for_each(|v| *v /= rn);
                let b = crate::ambient::cross3(&t, &r).to_vec();
                vec![r, b]
            }
        }
    }
}

/// Builds the chart centered at `x` (frame and validity radius).
pub fn make_chart(x: &Embedding) -> Result<Chart> {
    let min_speed = x.min_speed();
    let sep = separation(x);
    if !(min_speed > crate::curve::MIN_SPEED && sep > crate::curve::MIN_SPEED) {
        return Err(Error::NotEmbedding {
            min_speed,
            separation: sep,
        });
    }
    let frame = NormalFrame::build(x)?;
    let rho = reach_estimate(x);
    let v = x.velocity();
    let d = x.dim();
    let mut tangents = v.clone();
    for c in tangents.chunks_mut(d) {
        let n = norm(c);
        c.iter_mut().for_each(|t| *t /= n);
    }
    Ok(Chart {
        weights: quadrature_weights(x),
        interp: x.interp(),
        center: x.clone(),
        frame,
        rho,
        tangents,
    })
}

/// Pointwise exponential of a section of `x*(TN)` along the chart center.
pub fn full_chart_apply(c: &Chart, w: &SectionField) -> Result<Embedding> {
    if w.base.flat() != c.center.flat() {
        return Err(Error::BaseMismatch);
    }
    let norm_w = w.sup_norm();
    if norm_w >= c.rho {
        return Err(Error::OutsideDomain { norm: norm_w, rho: c.rho });
    }
    Ok(apply_field(c, &w.comps))
}

pub(crate) fn apply_field(c: &Chart, comps: &[f64]) -> Embedding {
    let d = c.center.dim();
    let space = c.space();
    let mut out = vec![0.0; comps.len()];
    for i in 0..c.len() {
        space.exp_raw(
            c.center.coord(i),
            &comps[i * d..(i + 1) * d],
            &mut out[i * d..(i + 1) * d],
        );
    }
    c.center.with_coords(out)
}

/// The curve `exp_x(u)` represented by a normal section.
pub fn chart_apply(c: &Chart, u: &NormalSection) -> Result<Embedding> {
    let n = u.sup_norm();
    if n >= c.rho {
        return Err(Error::OutsideDomain { norm: n, rho: c.rho });
    }
    if u.len() != c.len() || u.rank != c.rank() {
        return Err(Error::ShapeMismatch("section does not match the chart grid".into()));
    }
    Ok(apply_field(c, &c.section_field(u).comps))
}

/// Orthogonal projection of a section of `x*(TN)` onto the normal bundle.
pub fn project_normal(c: &Chart, v: &SectionField) -> Result<NormalSection> {
    if v.base.flat() != c.center.flat() {
        return Err(Error::BaseMismatch);
    }
    Ok(project_comps(c, &v.comps))
}

pub(crate) fn project_comps(c: &Chart, comps: &[f64]) -> NormalSection {
    let d = c.center.dim();
    let r = c.rank();
    let mut coeff = Vec::with_capacity(c.len() * r);
    for i in 0..c.len() {
        let vi = &comps[i * d..(i + 1) * d];
        for a in 0..r {
            coeff.push(dot(vi, c.frame.nu(i, a)));
        }
    }
    NormalSection { rank: r, coeff }
}

/// Fiber equation for node `i`: the tangential component of `log(x_i, Y(s))`
/// (up to a positive factor on the sphere), together with its `s`-derivative
/// and the geodesic distance `d(x_i, Y(s))`.
struct FiberProblem<'a> {
    chart: &'a Chart,
    y: &'a CurveInterp,
}

impl FiberProblem<'_> {
    fn eval(&self, i: usize, s: f64) -> (f64, f64, f64) {
        let space = self.chart.space();
        let x = self.chart.center.coord(i);
        let t = self.chart.unit_tangent(i);
        let (pos, vel, _) = self.y.eval_all(s);
        let dy = dot(&vel, t);
        match space {
            AmbientSpace::Sphere2 { .. } => {
                let q = normalize_if_sphere(space, pos.clone());
                (dot(&pos, t), dy, space.dist_raw(x, &q))
            }
            AmbientSpace::FlatTorus { .. } => {
                let r: Vec<f64> = pos.iter().zip(x).map(|(a, b)| shortest_rep(a - b)).collect();
                (dot(&r, t), dy, norm(&r))
            }
            AmbientSpace::Euclidean { .. } => {
                let r: Vec<f64> = pos.iter().zip(x).map(|(a, b)| a - b).collect();
                (dot(&r, t), dy, norm(&r))
            }
        }
    }

    /// Safeguarded Newton inside `[lo, hi]` where `g(lo) g(hi) <= 0`.
    fn bracketed(&self, i: usize, mut lo: f64, mut hi: f64) -> Option<f64> {
        let (glo, _, _) = self.eval(i, lo);
        let (ghi, _, _) = self.eval(i, hi);
        if glo == 0.0 {
            return Some(lo);
        }
        if ghi == 0.0 {
            return Some(hi);
        }
        if glo * ghi > 0.0 {
            return None;
        }
        let increasing = glo < 0.0;
        let mut s = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (g, dg, _) = self.eval(i, s);
            if g.abs() < NEWTON_TOL {
                return Some(s);
            }
            if (g < 0.0) == increasing {
                lo = s;
            } else {
                hi = s;
            }
            let newton = s - g / dg;
            s = if dg != 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-15 {
                return Some(s);
            }
        }
        Some(s)
    }

    /// Plain Newton from `s0`; `None` when it stalls or leaves `[lo, hi]`.
    fn newton(&self, i: usize, s0: f64, lo: f64, hi: f64) -> Option<f64> {
        let mut s = s0;
        for _ in 0..NEWTON_MAX_ITER {
            let (g, dg, _) = self.eval(i, s);
            if g.abs() < NEWTON_TOL {
                return Some(s);
            }
            if dg == 0.0 || !dg.is_finite() {
                return None;
            }
            s -= g / dg;
            if !(s > lo && s < hi) {
                return None;
            }
        }
        let (g, _, _) = self.eval(i, s);
        (g.abs() < 1e3 * NEWTON_TOL).then_some(s)
    }

    /// Roots of the fiber equation on a uniform scan of `[a, a + span]`,
    /// returned with their distances, nearest first.
    fn scan(&self, i: usize, a: f64, span: f64, samples: usize) -> Vec<(f64, f64)> {
        let step = span / samples as f64;
        let mut prev = self.eval(i, a);
        let mut roots = Vec::new();
        for j in 1..=samples {
            let s = a + step * j as f64;
            let cur = self.eval(i, s);
            if prev.0 * cur.0 <= 0.0 && prev.2.min(cur.2) < self.chart.rho * 1.5 {
                if let Some(r) = self.bracketed(i, s - step, s) {
                    let d = self.eval(i, r).2;
                    roots.push((r, d));
                }
            }
            prev = cur;
        }
        roots.sort_by(|u, v| u.1.total_cmp(&v.1));
        roots
    }
}

/// One-sided Hausdorff distance from the image of `y` to the image of the center.
fn tube_distance(c: &Chart, y: &Embedding) -> f64 {
    let dense_center = DenseCurve::new(&c.center);
    let dense_y = DenseCurve::new(y);
    dense_y
        .pts
        .iter()
        .map(|q| dense_center.distance_to(q).0)
        .fold(0.0, f64::max)
}

/// Projects `y` onto the normal fibers of the chart: the section whose image is
/// `[y]` together with the parameter of `y` met by each fiber.
pub fn chart_invert(c: &Chart, y: &Embedding) -> Result<Inversion> {
    if y.space() != c.space() {
        return Err(Error::ShapeMismatch("curve and chart live in different spaces".into()));
    }
    if !is_embedding(y) {
        return Err(Error::NotEmbedding {
            min_speed: y.min_speed(),
            separation: separation(y),
        });
    }
    let dist = tube_distance(c, y);
    if dist >= c.rho {
        return Err(Error::OutsideTube { distance: dist, rho: c.rho });
    }
    let interp = y.interp();
    let fiber = FiberProblem { chart: c, y: &interp };

    // node 0: coarse global search over 4P samples
    let roots0 = fiber.scan(0, -PI, TWO_PI, 4 * y.len());
    let (s0, _) = *roots0.first().ok_or(Error::ProjectionFailed(0))?;
    let (_, dy0, _) = fiber.eval(0, s0);
    if dy0 < 0.0 {
        let mut inv = chart_invert(c, &y.reversed())?;
        inv.reversed = true;
        return Ok(inv);
    }

    let p = c.len();
    let h = TWO_PI / p as f64;
    let mut lift = Vec::with_capacity(p);
    lift.push(s0);
    for i in 1..p {
        let prev = lift[i - 1];
        let guess = prev + h;
        let window = PI;
        let accept = |s: f64| s > prev && s < prev + window && fiber.eval(i, s).2 < c.rho;
        let s = match fiber.newton(i, guess, prev, prev + window) {
            Some(s) if accept(s) => s,
            _ => {
                let roots = fiber.scan(i, prev, window, 2 * y.len());
                let first = roots
                    .iter()
                    .filter(|(s, d)| *s > prev && *d < c.rho)
                    .map(|(s, _)| *s)
                    .fold(f64::INFINITY, f64::min);
                if !first.is_finite() {
                    return Err(Error::ProjectionFailed(i));
                }
                first
            }
        };
        if s <= prev {
            return Err(Error::NonMonotone(i));
        }
        lift.push(s);
    }
    if lift[p - 1] >= lift[0] + TWO_PI {
        return Err(Error::NonMonotone(p - 1));
    }

    let space = c.space();
    let d = c.center.dim();
    let mut coeff = Vec::with_capacity(p * c.rank());
    let mut v = vec![0.0; d];
    for (i, &s) in lift.iter().enumerate() {
        let q = normalize_if_sphere(space, interp.eval(s));
        space.log_raw(c.center.coord(i), &q, &mut v)?;
        let n = norm(&v);
        if n >= c.rho {
            return Err(Error::OutsideTube { distance: n, rho: c.rho });
        }
        for a in 0..c.rank() {
            coeff.push(dot(&v, c.frame.nu(i, a)));
        }
    }
    Ok(Inversion {
        section: NormalSection { rank: c.rank(), coeff },
        reparam: Reparam::new(lift)?,
        reversed: false,
    })
}

/// Change of charts: coordinates in `c2` of the class with coordinates `u` in
/// `c1`, and the base adjustment `h` (node `i` of `c1` lies on the `c2` fiber
/// over `h(theta_i)`).
pub fn transition(c1: &Chart, c2: &Chart, u: &NormalSection) -> Result<(NormalSection, Reparam)> {
    let y = chart_apply(c1, u)?;
    let inv = chart_invert(c2, &y)?;
    if inv.reversed {
        return Err(Error::InvalidReparam("charts have opposite orientations".into()));
    }
    let h = inv.reparam.inverse(c1.len())?;
    Ok((inv.section, h))
}

/// Pointwise check of `u' o h = zeta o u` with `zeta = exp_2^{-1} o exp_1`:
/// for every node of `c1` the point `exp_1(u(theta_i))` is mapped back into `c2`
/// directly at the fiber `h(theta_i)`. Returns the largest deviation, counting
/// both the mismatch of normal coefficients and any tangential component.
pub fn transition_residual(
    c1: &Chart,
    c2: &Chart,
    u: &NormalSection,
    u2: &NormalSection,
    h: &Reparam,
) -> Result<f64> {
    let space = c1.space();
    let d = c1.center.dim();
    let field = c1.section_field(u);
    let u2_interp = u2.interp();
    let mut y = vec![0.0; d];
    let mut v = vec![0.0; d];
    let mut worst: f64 = 0.0;
    for i in 0..c1.len() {
        space.exp_raw(c1.center.coord(i), field.vec(i), &mut y);
        let t = h.lift[i];
        let base = c2.center_at(t);
        space.log_raw(&base, &y, &mut v)?;
        let frame = c2.frame_at(t);
        let mut normal2 = 0.0;
        let mut err2 = 0.0;
        for (a, nu) in frame.iter().enumerate() {
            let z = dot(&v, nu);
            normal2 += z * z;
            let e = u2_interp[a].eval(t) - z;
            err2 += e * e;
        }
        let tangential = (dot(&v, &v) - normal2).max(0.0);
        worst = worst.max((err2 + tangential).sqrt());
    }
    Ok(worst)
}
