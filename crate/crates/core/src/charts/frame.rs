//! Orthonormal frames of the normal bundle of a closed curve.

use crate::ambient::{cross3, dot, norm};
use crate::curve::Embedding;
use crate::error::{Error, Result};

/// Per-node orthonormal basis of `x'(theta_i)^perp` (inside `T_pN`).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFrame {
    /// Number of frame vectors per node (`n - 1`).
    pub rank: usize,
    /// Coordinate length of each vector.
    pub dim: usize,
    /// `P x rank x dim`, row-major.
    pub vecs: Vec<f64>,
}

impl NormalFrame {
    pub fn nu(&self, i: usize, a: usize) -> &[f64] {
        let off = (i * self.rank + a) * self.dim;
        &self.vecs[off..off + self.dim]
    }

    pub fn len(&self) -> usize {
        self.vecs.len() / (self.rank * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.vecs.is_empty()
    }

    /// Builds the frame: a quarter turn of the unit tangent in 2D (outward on
    /// counterclockwise planar curves), `t x p` on the sphere, and a
    /// holonomy-corrected rotation-minimizing frame in 3D.
    pub fn build(x: &Embedding) -> Result<Self> {
        let v = x.velocity();
        let d = x.dim();
        let p = x.len();
        let mut t = vec![0.0; p * d];
        for i in 0..p {
            let vi = &v[i * d..(i + 1) * d];
            let s = norm(vi);
            if s <= 1e-12 {
                return Err(Error::DegenerateFrame(i));
            }
            for k in 0..d {
                t[i * d + k] = vi[k] / s;
            }
        }
        let space = x.space();
        if space.is_sphere() {
            let mut vecs = Vec::with_capacity(p * 3);
            for i in 0..p {
                vecs.extend(cross3(&t[3 * i..3 * i + 3], x.coord(i)));
            }
            return Ok(Self { rank: 1, dim: 3, vecs });
        }
        match space.dim() {
            2 => {
                let mut vecs = Vec::with_capacity(p * 2);
                for i in 0..p {
                    vecs.push(t[2 * i + 1]);
                    vecs.push(-t[2 * i]);
                }
                Ok(Self { rank: 1, dim: 2, vecs })
            }
            3 => rotation_minimizing(x, &t),
            n => Err(Error::UnsupportedAmbient(format!(
                "normal frames are implemented for ambient dimension 2 and 3, got {n}"
            ))),
        }
    }
}

fn reflect(v: &[f64; 3], axis: &[f64; 3], c: f64) -> [f64; 3] {
    let f = 2.0 * dot(axis, v) / c;
    [v[0] - f * axis[0], v[1] - f * axis[1], v[2] - f * axis[2]]
}

fn rotate_about(v: &[f64; 3], axis: &[f64], angle: f64) -> [f64; 3] {
    let (s, c) = angle.sin_cos();
    let w = cross3(axis, v);
    [c * v[0] + s * w[0], c * v[1] + s * w[1], c * v[2] + s * w[2]]
}

/// Double-reflection transport of a normal vector around the loop, with the
/// closing rotation spread evenly over the nodes so the frame is periodic.
fn rotation_minimizing(x: &Embedding, t: &[f64]) -> Result<NormalFrame> {
    let p = x.len();
    let tv = |i: usize| -> [f64; 3] { [t[3 * i], t[3 * i + 1], t[3 * i + 2]] };
    let winding: Vec<f64> = if x.space().is_torus() {
        x.winding().iter().map(|&w| w as f64).collect()
    } else {
        vec![0.0; 3]
    };
    let pos = |i: usize| -> [f64; 3] {
        let (j, turn) = if i == p { (0, 1.0) } else { (i, 0.0) };
        let c = x.coord(j);
        [c[0] + turn * winding[0], c[1] + turn * winding[1], c[2] + turn * winding[2]]
    };

    let t0 = tv(0);
    let axis = (0..3)
        .min_by(|&a, &b| t0[a].abs().total_cmp(&t0[b].abs()))
        .unwrap_or(0);
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    let proj = dot(&e, &t0);
    let mut r = [e[0] - proj * t0[0], e[1] - proj * t0[1], e[2] - proj * t0[2]];
    let rn = norm(&r);
    r.iter_mut().for_each(|v| *v /= rn);

    let mut rs: Vec<[f64; 3]> = Vec::with_capacity(p + 1);
    rs.push(r);
    for i in 0..p {
        let (xa, xb) = (pos(i), pos(i + 1));
        let ta = tv(i);
        let tb = tv((i + 1) % p);
        let v1 = [xb[0] - xa[0], xb[1] - xa[1], xb[2] - xa[2]];
        let c1 = dot(&v1, &v1);
        if c1 <= 1e-300 {
            return Err(Error::DegenerateFrame(i));
        }
        let rl = reflect(&rs[i], &v1, c1);
        let tl = reflect(&ta, &v1, c1);
        let v2 = [tb[0] - tl[0], tb[1] - tl[1], tb[2] - tl[2]];
        let c2 = dot(&v2, &v2);
        let next = if c2 <= 1e-300 { rl } else { reflect(&rl, &v2, c2) };
        rs.push(next);
    }
    let w0 = cross3(&t0, &rs[0]);
    let closure = dot(&w0, &rs[p]).atan2(dot(&rs[0], &rs[p]));

    let mut vecs = Vec::with_capacity(p * 6);
    for (i, ri) in rs.iter().take(p).enumerate() {
        let ti = tv(i);
        let mut r = rotate_about(ri, &ti, -closure * i as f64 / p as f64);
        let proj = dot(&r, &ti);
        for k in 0..3 {
            r[k] -= proj * ti[k];
        }
        let n = norm(&r);
        if n < 1e-12 {
            return Err(Error::DegenerateFrame(i));
        }
        r.iter_mut().for_each(|v| *v /= n);
        let b = cross3(&ti, &r);
        vecs.extend_from_slice(&r);
        vecs.extend_from_slice(&b);
    }
    Ok(NormalFrame { rank: 2, dim: 3, vecs })
}
