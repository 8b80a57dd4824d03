//! Tube-radius estimate for the normal exponential map of a closed curve.
//!
//! The radius combines three limits:
//! - focal distance from curvature: `1/kappa` in flat spaces, `arccot(kappa_g)` on the sphere;
//! - half the shortest self-approach chord (`separation`), i.e. the shortest
//!   doubly critical chord between two distinct parts of the curve, including
//!   chords that close up through a lattice translate on the torus;
//! - the injectivity radius of the ambient space.

use crate::ambient::{dot, AmbientSpace};
use crate::curve::{normalize_if_sphere, CurveInterp, Embedding};

pub const CURVATURE_FACTOR: f64 = 0.9;
pub const SEPARATION_FACTOR: f64 = 0.45;
pub const INJECTIVITY_FACTOR: f64 = 0.9;

/// Number of discrete candidates refined by continuous minimization.
const REFINED_CANDIDATES: usize = 8;

/// Distance along the normal geodesic at which neighbouring fibers first meet.
pub fn focal_distance(x: &Embedding) -> f64 {
    let kmax = x.curvature().into_iter().fold(0.0, f64::max);
    if x.space().is_sphere() {
        1f64.atan2(kmax)
    } else if kmax > 0.0 {
        1.0 / kmax
    } else {
        f64::INFINITY
    }
}

/// `rho = min(0.9 focal, 0.45 separation, 0.9 inj)`; zero for self-intersecting curves
/// (separation below the embedding threshold).
pub fn reach_estimate(x: &Embedding) -> f64 {
    let sep = separation(x);
    if sep <= crate::curve::MIN_SPEED {
        return 0.0;
    }
    let inj = x.space().injectivity_radius_const();
    (CURVATURE_FACTOR * focal_distance(x))
        .min(SEPARATION_FACTOR * sep)
        .min(INJECTIVITY_FACTOR * inj)
}

struct Lifted<'a> {
    x: &'a Embedding,
    p: isize,
    winding: Vec<f64>,
}

impl Lifted<'_> {
    /// Lifted node `idx` (any integer): `x(idx mod P) + floor(idx/P) winding`.
    fn at(&self, idx: isize, out: &mut [f64]) {
        let turns = idx.div_euclid(self.p);
        let i = idx.rem_euclid(self.p) as usize;
        let c = self.x.coord(i);
        for k in 0..c.len() {
            out[k] = c[k] + turns as f64 * self.winding.get(k).copied().unwrap_or(0.0);
        }
    }
}

/// Length of the shortest doubly critical self-chord (`+inf` if none).
///
/// A node pair `(i, j)` together with a lattice shift `m` (torus only) is a
/// candidate when its chord length is a discrete local minimum in both `i`
/// and `j`; the trivial pairs describing the same curve point are excluded and
/// act as zero-valued neighbours, so near-diagonal pairs never qualify. The
/// best candidates are then refined on the band-limited interpolant.
pub fn separation(x: &Embedding) -> f64 {
    let space = x.space();
    let p = x.len() as isize;
    let d = x.dim();
    let winding: Vec<f64> = x.winding().iter().map(|&w| w as f64).collect();
    let lifted = Lifted {
        x,
        p,
        winding: winding.clone(),
    };
    let shifts = lattice_shifts(x);

    let mut a = vec![0.0; d];
    let mut b = vec![0.0; d];
    let mut chord = |i: isize, j: isize, m: &[f64]| -> f64 {
        let same_node = i.rem_euclid(p) == j.rem_euclid(p);
        let turns = (j.div_euclid(p) - i.div_euclid(p)) as f64;
        if same_node && (0..d).all(|k| m[k] + turns * winding.get(k).copied().unwrap_or(0.0) == 0.0) {
            return 0.0;
        }
        lifted.at(i, &mut a);
        lifted.at(j, &mut b);
        for k in 0..d {
            b[k] += m[k];
        }
        ambient_distance(space, &a, &b)
    };

    let mut cands: Vec<(f64, isize, isize, usize)> = Vec::new();
    for (mi, m) in shifts.iter().enumerate() {
        let trivial_shift = m.iter().all(|v| *v == 0.0);
        for i in 0..p {
            for j in 0..p {
                if trivial_shift && i == j {
                    continue;
                }
                let c = chord(i, j, m);
                if c == 0.0 {
                    // genuine coincidence of distinct nodes
                    cands.push((0.0, i, j, mi));
                    continue;
                }
                if chord(i, j - 1, m) < c || chord(i, j + 1, m) < c {
                    continue;
                }
                if chord(i - 1, j, m) < c || chord(i + 1, j, m) < c {
                    continue;
                }
                cands.push((c, i, j, mi));
            }
        }
    }
    if cands.is_empty() {
        return f64::INFINITY;
    }
    cands.sort_by(|u, v| u.0.total_cmp(&v.0));
    let interp = x.interp();
    let h = x.grid().h();
    let mut best = cands[0].0;
    for &(c, i, j, mi) in cands.iter().take(REFINED_CANDIDATES) {
        if c == 0.0 {
            return 0.0;
        }
        let refined = refine_chord(space, &interp, h * i as f64, h * j as f64, &shifts[mi], h);
        best = best.min(refined.min(c));
    }
    best
}

fn ambient_distance(space: AmbientSpace, a: &[f64], b: &[f64]) -> f64 {
    match space {
        // lifted chords are measured in the cover
        AmbientSpace::FlatTorus { .. } => {
            a.iter().zip(b).map(|(u, v)| (v - u) * (v - u)).sum::<f64>().sqrt()
        }
        _ => space.dist_raw(a, b),
    }
}

/// Lattice translates that can produce chords shorter than the torus injectivity diameter.
fn lattice_shifts(x: &Embedding) -> Vec<Vec<f64>> {
    let d = x.dim();
    if !x.space().is_torus() {
        return vec![vec![0.0; d]];
    }
    let bounds: Vec<i64> = (0..d)
        .map(|k| {
            let (lo, hi) = (0..x.len())
                .map(|i| x.coord(i)[k])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
            (hi - lo).ceil() as i64 + 1
        })
        .collect();
    let mut out = vec![Vec::new()];
    for b in bounds {
        let mut next = Vec::new();
        for prefix in &out {
            for m in -b..=b {
                let mut v: Vec<f64> = prefix.clone();
                v.push(m as f64);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Continuous minimization of `|C(t) + m - C(s)|` near `(s0, t0)` by damped
/// 2D Newton; returns the chord length (geodesic on the sphere).
fn refine_chord(space: AmbientSpace, c: &CurveInterp, s0: f64, t0: f64, m: &[f64], h: f64) -> f64 {
    let eval = |s: f64, t: f64| {
        let (xs, vs, as_) = c.eval_all(s);
        let (xt, vt, at) = c.eval_all(t);
        let r: Vec<f64> = (0..xs.len()).map(|k| xt[k] + m[k] - xs[k]).collect();
        (r, vs, as_, vt, at)
    };
    let measure = |s: f64, t: f64| {
        let a = normalize_if_sphere(space, c.eval(s));
        let b: Vec<f64> = c.eval(t).iter().zip(m).map(|(v, mk)| v + mk).collect();
        ambient_distance(space, &a, &normalize_if_sphere(space, b))
    };
    let (mut s, mut t) = (s0, t0);
    let f0 = measure(s, t);
    for _ in 0..30 {
        let (r, vs, as_, vt, at) = eval(s, t);
        let gs = -2.0 * dot(&r, &vs);
        let gt = 2.0 * dot(&r, &vt);
        let hss = 2.0 * (dot(&vs, &vs) - dot(&r, &as_));
        let htt = 2.0 * (dot(&vt, &vt) + dot(&r, &at));
        let hst = -2.0 * dot(&vs, &vt);
        let det = hss * htt - hst * hst;
        if !(det > 0.0 && hss > 0.0) {
            break;
        }
        let ds = (htt * gs - hst * gt) / det;
        let dt = (hss * gt - hst * gs) / det;
        s -= ds.clamp(-h, h);
        t -= dt.clamp(-h, h);
        if (s - s0).abs() > 3.0 * h || (t - t0).abs() > 3.0 * h {
            return f0;
        }
        if ds.abs() + dt.abs() < 1e-14 {
            break;
        }
    }
    measure(s, t).min(f0)
}
