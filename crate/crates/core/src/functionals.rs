//! Parameterization-invariant functionals of closed curves and their first
//! and second variations, both along the curve and in normal-bundle charts.
//!
//! Every functional is a quadrature `sum_i e(y_i, y'_i, y''_i) 2 pi / P` of a
//! node density built from positions and spectral derivatives. Its gradient
//! with respect to the node coordinates follows from the chain rule through
//! the (antisymmetric) first and (symmetric) second derivative operators:
//! `dF/dy = e_y - D e_a + D2 e_b`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::ambient::{cross3, dot, norm, AmbientSpace};
use crate::charts::{apply_field, Chart, NormalSection};
use crate::curve::{Embedding, SectionField};
use crate::error::{Error, Result};
use crate::spectral::spectral;

/// Step of the central difference behind [`first_variation`].
pub const FIRST_VARIATION_STEP: f64 = 1e-5;
/// Step of the central difference behind the Hessians.
pub const HESSIAN_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Term {
    Length,
    SignedArea,
    BendingEnergy,
}

impl Term {
    fn name(self) -> &'static str {
        match self {
            Term::Length => "length",
            Term::SignedArea => "area",
            Term::BendingEnergy => "bend",
        }
    }
}

/// A finite linear combination of [`Term`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    pub terms: Vec<(Term, f64)>,
}

impl Functional {
    pub fn new(terms: Vec<(Term, f64)>) -> Self {
        Self { terms }
    }

    pub fn length() -> Self {
        Self::new(vec![(Term::Length, 1.0)])
    }

    pub fn signed_area() -> Self {
        Self::new(vec![(Term::SignedArea, 1.0)])
    }

    pub fn bending_energy() -> Self {
        Self::new(vec![(Term::BendingEnergy, 1.0)])
    }

    /// `Length - c * SignedArea`, critical exactly at planar curves with curvature `c`.
    pub fn isoperimetric(c: f64) -> Self {
        Self::new(vec![(Term::Length, 1.0), (Term::SignedArea, -c)])
    }

    pub fn check_space(&self, space: AmbientSpace) -> Result<()> {
        for (term, coef) in &self.terms {
            if !coef.is_finite() {
                return Err(Error::Parse(format!("coefficient {coef} of {} is not finite", term.name())));
            }
            if *term == Term::SignedArea && !space.is_plane() {
                return Err(Error::UnsupportedAmbient(
                    "signed area is only defined for planar curves".into(),
                ));
            }
        }
        Ok(())
    }
}

impl FromStr for Functional {
    type Err = Error;

    /// Parses `term(±coef*term)*`, e.g. `length-1.0*area` or `2*bend+length`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse(format!("functional {s:?}: {msg}"));
        if s.is_empty() {
            return Err(bad("empty"));
        }
        let mut terms = Vec::new();
        let mut rest = s;
        while !rest.is_empty() {
            let mut sign = 1.0;
            if let Some(r) = rest.strip_prefix('+') {
                rest = r;
            } else if let Some(r) = rest.strip_prefix('-') {
                sign = -1.0;
                rest = r;
            } else if !terms.is_empty() {
                return Err(bad("expected '+' or '-' between terms"));
            }
            let end = rest[1.min(rest.len())..]
                .find(['+', '-'])
                .map_or(rest.len(), |k| k + 1);
            // an exponent sign belongs to the coefficient
            let end = extend_exponent(rest, end);
            let token = &rest[..end];
            rest = &rest[end..];
            let (coef, name) = match token.split_once('*') {
                Some((c, n)) => (c.parse::<f64>().map_err(|_| bad(&format!("bad coefficient {c:?}")))?, n),
                None => (1.0, token),
            };
            let term = match name {
                "length" => Term::Length,
                "area" => Term::SignedArea,
                "bend" => Term::BendingEnergy,
                other => return Err(bad(&format!("unknown term {other:?}"))),
            };
            if !coef.is_finite() {
                return Err(bad("coefficient is not finite"));
            }
            terms.push((term, sign * coef));
        }
        Ok(Functional { terms })
    }
}

fn extend_exponent(s: &str, mut end: usize) -> usize {
    let bytes = s.as_bytes();
    while end < bytes.len() && end > 0 && matches!(bytes[end - 1], b'e' | b'E') {
        let digits_before = s[..end - 1].chars().last().is_some_and(|c| c.is_ascii_digit() || c == '.');
        if !digits_before {
            break;
        }
        end += 1;
        while end < bytes.len() && !matches!(bytes[end], b'+' | b'-') {
            end += 1;
        }
    }
    end
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (term, coef)) in self.terms.iter().enumerate() {
            let sign = if *coef < 0.0 { "-" } else if k > 0 { "+" } else { "" };
            let mag = coef.abs();
            if mag == 1.0 {
                write!(f, "{sign}{}", term.name())?;
            } else {
                write!(f, "{sign}{mag:?}*{}", term.name())?;
            }
        }
        Ok(())
    }
}

/// Partial derivatives of one node density.
struct NodeGrad<'a> {
    y: &'a mut [f64],
    a: &'a mut [f64],
    b: &'a mut [f64],
}

/// Adds `coef *` the partials of the node density of `term` and returns its value.
fn node_density(
    term: Term,
    space: AmbientSpace,
    coef: f64,
    y: &[f64],
    a: &[f64],
    b: &[f64],
    g: Option<&mut NodeGrad<'_>>,
) -> f64 {
    let d = y.len();
    match (term, space.is_sphere()) {
        (Term::Length, false) => {
            let s = norm(a);
            if let Some(g) = g {
                for k in 0..d {
                    g.a[k] += coef * a[k] / s;
                }
            }
            s
        }
        (Term::Length, true) => {
            let ay = dot(a, y);
            let s = (dot(a, a) - ay * ay).sqrt();
            if let Some(g) = g {
                for k in 0..d {
                    g.y[k] -= coef * ay * a[k] / s;
                    g.a[k] += coef * (a[k] - ay * y[k]) / s;
                }
            }
            s
        }
        (Term::SignedArea, _) => {
            if let Some(g) = g {
                g.y[0] += coef * 0.5 * a[1];
                g.y[1] -= coef * 0.5 * a[0];
                g.a[0] -= coef * 0.5 * y[1];
                g.a[1] += coef * 0.5 * y[0];
            }
            0.5 * (y[0] * a[1] - y[1] * a[0])
        }
        (Term::BendingEnergy, false) => {
            let s2 = dot(a, a);
            let ab = dot(a, b);
            let bb = dot(b, b);
            let q = s2 * bb - ab * ab;
            let inv = s2.powf(-2.5);
            if let Some(g) = g {
                for k in 0..d {
                    let qa = 2.0 * bb * a[k] - 2.0 * ab * b[k];
                    let qb = 2.0 * s2 * b[k] - 2.0 * ab * a[k];
                    g.a[k] += coef * (inv * qa - 5.0 * q * inv / s2 * a[k]);
                    g.b[k] += coef * inv * qb;
                }
            }
            q * inv
        }
        (Term::BendingEnergy, true) => {
            let axb = cross3(a, b);
            let t = dot(y, &axb);
            let ay = dot(a, y);
            let v = dot(a, a) - ay * ay;
            let inv = v.powf(-2.5);
            let n = t * t;
            if let Some(g) = g {
                let bxy = cross3(b, y);
                let yxa = cross3(y, a);
                for k in 0..3 {
                    g.y[k] += coef * (2.0 * t * axb[k] * inv + 5.0 * n * inv / v * ay * a[k]);
                    g.a[k] += coef * (2.0 * t * bxy[k] * inv - 5.0 * n * inv / v * (a[k] - ay * y[k]));
                    g.b[k] += coef * 2.0 * t * yxa[k] * inv;
                }
            }
            n * inv
        }
    }
}

/// Value and (optionally) `dF/dy` of the functional at a curve.
fn value_and_gradient(f: &Functional, x: &Embedding, want_grad: bool) -> Result<(f64, Option<Vec<f64>>)> {
    let space = x.space();
    f.check_space(space)?;
    let d = x.dim();
    let p = x.len();
    let h = x.grid().h();
    let a = x.velocity_raw();
    let b = x.acceleration_raw();
    let mut gy = vec![0.0; p * d];
    let mut ga = vec![0.0; p * d];
    let mut gb = vec![0.0; p * d];
    let mut total = 0.0;
    for (term, coef) in &f.terms {
        let mut partial = 0.0;
        for i in 0..p {
            let r = i * d..(i + 1) * d;
            let mut ng = NodeGrad {
                y: &mut gy[r.clone()],
                a: &mut ga[r.clone()],
                b: &mut gb[r.clone()],
            };
            let g = if want_grad { Some(&mut ng) } else { None };
            partial += node_density(*term, space, *coef, x.coord(i), &a[r.clone()], &b[r], g);
        }
        total += coef * partial * h;
    }
    if !want_grad {
        return Ok((total, None));
    }
    let sp = spectral(p);
    let mut grad = vec![0.0; p * d];
    for k in 0..d {
        let col = |m: &[f64]| -> Vec<f64> { (0..p).map(|i| m[i * d + k]).collect() };
        let da = sp.derivative(&col(&ga));
        let d2b = sp.second_derivative(&col(&gb));
        for i in 0..p {
            grad[i * d + k] = (gy[i * d + k] - da[i] + d2b[i]) * h;
        }
    }
    Ok((total, Some(grad)))
}

/// Value of the functional at a curve.
pub fn evaluate(f: &Functional, x: &Embedding) -> Result<f64> {
    Ok(value_and_gradient(f, x, false)?.0)
}

/// Derivative of `F` with respect to the node coordinates (`P x d`, row-major).
pub fn coordinate_gradient(f: &Functional, x: &Embedding) -> Result<Vec<f64>> {
    Ok(value_and_gradient(f, x, true)?.1.unwrap_or_default())
}

/// Pointwise exponential of a field along `x`, without a chart.
fn exp_along(x: &Embedding, comps: &[f64]) -> Embedding {
    let d = x.dim();
    let space = x.space();
    let mut out = vec![0.0; comps.len()];
    for i in 0..x.len() {
        space.exp_raw(x.coord(i), &comps[i * d..(i + 1) * d], &mut out[i * d..(i + 1) * d]);
    }
    x.with_coords(out)
}

/// `dF_x[V]` by a Richardson-extrapolated central difference along `exp_x(r V)`.
pub fn first_variation(f: &Functional, x: &Embedding, v: &SectionField) -> Result<f64> {
    if v.base.flat() != x.flat() {
        return Err(Error::BaseMismatch);
    }
    let r = FIRST_VARIATION_STEP / v.sup_norm().max(1.0);
    let along = |t: f64| -> Result<f64> {
        let comps: Vec<f64> = v.comps.iter().map(|c| c * t).collect();
        evaluate(f, &exp_along(x, &comps))
    };
    let central = |t: f64| -> Result<f64> { Ok((along(t)? - along(-t)?) / (2.0 * t)) };
    let coarse = central(r)?;
    let fine = central(0.5 * r)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Differential of `exp_p` at `w` applied to `delta`.
fn dexp(space: AmbientSpace, p: &[f64], w: &[f64], delta: &[f64], out: &mut [f64]) {
    if !space.is_sphere() {
        out.copy_from_slice(delta);
        return;
    }
    let r = norm(w);
    if r < 1e-12 {
        out.copy_from_slice(delta);
        return;
    }
    let e: Vec<f64> = w.iter().map(|v| v / r).collect();
    let ed = dot(&e, delta);
    let (s, c) = r.sin_cos();
    for k in 0..3 {
        out[k] = (-s * p[k] + c * e[k]) * ed + s / r * (delta[k] - ed * e[k]);
    }
}

/// `d f~ / d u` in frame coefficients (the plain coefficient gradient).
fn chart_coeff_gradient(f: &Functional, c: &Chart, u: &NormalSection) -> Result<Vec<f64>> {
    let field = c.section_field(u);
    let y = apply_field(c, &field.comps);
    let g = coordinate_gradient(f, &y)?;
    let d = c.center.dim();
    let space = c.space();
    let mut out = Vec::with_capacity(c.len() * c.rank());
    let mut jv = vec![0.0; d];
    for i in 0..c.len() {
        for a in 0..c.rank() {
            dexp(space, c.center.coord(i), field.vec(i), c.frame.nu(i, a), &mut jv);
            out.push(dot(&g[i * d..(i + 1) * d], &jv));
        }
    }
    Ok(out)
}

fn check_domain(c: &Chart, u: &NormalSection) -> Result<()> {
    let n = u.sup_norm();
    if n >= c.rho {
        return Err(Error::OutsideDomain { norm: n, rho: c.rho });
    }
    Ok(())
}

/// `L^2(ds)` gradient of `u -> F(chart_apply(c, u))`, weighted by the
/// arclength weights of the chart center.
pub fn gradient_in_chart(f: &Functional, c: &Chart, u: &NormalSection) -> Result<NormalSection> {
    check_domain(c, u)?;
    let r = c.rank();
    let mut coeff = chart_coeff_gradient(f, c, u)?;
    for (i, row) in coeff.chunks_mut(r).enumerate() {
        row.iter_mut().for_each(|v| *v /= c.weights()[i]);
    }
    Ok(NormalSection { rank: r, coeff })
}

/// `L^2(ds)` norm of a chart gradient.
pub fn gradient_norm(c: &Chart, g: &NormalSection) -> f64 {
    g.l2_norm(c.weights())
}

pub fn is_critical(f: &Functional, c: &Chart, u: &NormalSection, tol: f64) -> Result<bool> {
    Ok(gradient_norm(c, &gradient_in_chart(f, c, u)?) <= tol)
}

/// A second variation together with its diagonal mass matrix.
#[derive(Debug, Clone)]
pub struct Hessian {
    /// Symmetrized matrix of second derivatives; coordinates are node-major
    /// with `per_node` entries per node.
    pub q: DMatrix<f64>,
    /// Diagonal of the mass matrix (arclength weight of each coordinate's node).
    pub mass: Vec<f64>,
    pub per_node: usize,
    /// `max |Q - Q^T|` before symmetrization.
    pub asymmetry: f64,
}

/// Orthonormal real Fourier basis of node sequences without the Nyquist
/// mode, one block per coordinate (`P m x (P-1) m`).
pub fn band_limited_basis(p: usize, m: usize) -> DMatrix<f64> {
    let h = std::f64::consts::TAU / p as f64;
    let c0 = 1.0 / (p as f64).sqrt();
    let c1 = (2.0 / p as f64).sqrt();
    let mut b = DMatrix::zeros(p * m, (p - 1) * m);
    for i in 0..p {
        let t = h * i as f64;
        for a in 0..m {
            b[(i * m + a, a)] = c0;
            for k in 1..p / 2 {
                let (s, c) = (k as f64 * t).sin_cos();
                b[(i * m + a, (2 * k - 1) * m + a)] = c1 * c;
                b[(i * m + a, 2 * k * m + a)] = c1 * s;
            }
        }
    }
    b
}

impl Hessian {
    /// Generalized eigenpairs of `(Q, M)` on band-limited sections, eigenvalues
    /// ascending; eigenvectors are `M`-orthonormal columns in node coordinates.
    ///
    /// The alternating mode `(-1)^i` is excluded: the spectral first derivative
    /// vanishes on it, so it would contribute a spurious eigenvalue.
    pub fn generalized_eigen(&self) -> (Vec<f64>, DMatrix<f64>) {
        let p = self.mass.len() / self.per_node;
        let b = band_limited_basis(p, self.per_node);
        let qb = b.transpose() * &self.q * &b;
        let mb = b.transpose() * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.mass.clone())) * &b;
        let n = mb.nrows();
        let l = mb.cholesky().expect("mass matrix is positive definite").l();
        let linv = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .expect("triangular factor is invertible");
        let a = &linv * qb * linv.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let z = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        (values, b * linv.transpose() * z)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.generalized_eigen().0
    }

    /// Generalized eigenpairs of `(Q, M)` over all node values, including the
    /// alternating mode.
    pub fn generalized_eigen_all(&self) -> (Vec<f64>, DMatrix<f64>) {
        let n = self.mass.len();
        let s: Vec<f64> = self.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        let a = DMatrix::from_fn(n, n, |i, j| s[i] * self.q[(i, j)] * s[j]);
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(n, n, |i, j| s[i] * eig.eigenvectors[(i, order[j])]);
        (values, vectors)
    }

    pub fn max_abs(&self) -> f64 {
        self.q.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Columns of the derivative of `grad` at `x0` by Richardson-extrapolated
/// central differences, assembled into a symmetrized matrix.
fn fd_hessian(
    per_node: usize,
    grad: impl Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    x0: &[f64],
    mass: Vec<f64>,
) -> Result<Hessian> {
    let n = x0.len();
    let cols: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let central = |e: f64| -> Result<Vec<f64>> {
                let mut xp = x0.to_vec();
                let mut xm = x0.to_vec();
                xp[j] += e;
                xm[j] -= e;
                let gp = grad(&xp)?;
                let gm = grad(&xm)?;
                Ok(gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * e)).collect())
            };
            let coarse = central(HESSIAN_STEP)?;
            let fine = central(0.5 * HESSIAN_STEP)?;
            Ok(fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect())
        })
        .collect();
    let mut q = DMatrix::zeros(n, n);
    for (j, col) in cols.into_iter().enumerate() {
        for (i, v) in col?.into_iter().enumerate() {
            q[(i, j)] = v;
        }
    }
    let asymmetry = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (q[(i, j)] - q[(j, i)]).abs())
        .fold(0.0, f64::max);
    let q = (&q + q.transpose()) * 0.5;
    Ok(Hessian {
        q,
        mass,
        per_node,
        asymmetry,
    })
}

fn node_mass(c: &Chart, per_node: usize) -> Vec<f64> {
    c.weights()
        .iter()
        .flat_map(|w| std::iter::repeat(*w).take(per_node))
        .collect()
}

/// Second variation of `u -> F(chart_apply(c, u))` at `u` in frame coefficients.
pub fn hessian_at(f: &Functional, c: &Chart, u: &NormalSection) -> Result<Hessian> {
    check_domain(c, u)?;
    let r = c.rank();
    let grad = |v: &[f64]| {
        let s = NormalSection { rank: r, coeff: v.to_vec() };
        chart_coeff_gradient(f, c, &s)
    };
    fd_hessian(r, grad, &u.coeff, node_mass(c, r))
}

/// Second variation in the quotient chart at the center.
pub fn hessian_in_chart(f: &Functional, c: &Chart) -> Result<Hessian> {
    hessian_at(f, c, &c.zero_section())
}

/// Orthonormal basis of `T_{x_i}N` used for full sections: the coordinate
/// axes in flat spaces, `(tangent, normal)` on the sphere.
pub fn ambient_basis(c: &Chart, i: usize) -> Vec<Vec<f64>> {
    if c.space().is_sphere() {
        vec![c.unit_tangent(i).to_vec(), c.frame.nu(i, 0).to_vec()]
    } else {
        let d = c.center.dim();
        (0..d)
            .map(|k| {
                let mut e = vec![0.0; d];
                e[k] = 1.0;
                e
            })
            .collect()
    }
}

/// Number of basis vectors per node in [`ambient_basis`].
pub fn ambient_rank(c: &Chart) -> usize {
    c.space().dim()
}

/// Second variation over all sections of `x*(TN)` at the center, in the
/// per-node [`ambient_basis`].
pub fn hessian_full(f: &Functional, c: &Chart) -> Result<Hessian> {
    let m = ambient_rank(c);
    let d = c.center.dim();
    let bases: Vec<Vec<Vec<f64>>> = (0..c.len()).map(|i| ambient_basis(c, i)).collect();
    let space = c.space();
    let grad = |v: &[f64]| -> Result<Vec<f64>> {
        let mut comps = vec![0.0; c.len() * d];
        for i in 0..c.len() {
            for (a, e) in bases[i].iter().enumerate() {
                for k in 0..d {
                    comps[i * d + k] += v[i * m + a] * e[k];
                }
            }
        }
        let y = apply_field(c, &comps);
        let g = coordinate_gradient(f, &y)?;
        let mut jv = vec![0.0; d];
        let mut out = Vec::with_capacity(c.len() * m);
        for i in 0..c.len() {
            for e in &bases[i] {
                dexp(space, c.center.coord(i), &comps[i * d..(i + 1) * d], e, &mut jv);
                out.push(dot(&g[i * d..(i + 1) * d], &jv));
            }
        }
        Ok(out)
    };
    fd_hessian(m, grad, &vec![0.0; c.len() * m], node_mass(c, m))
}

/// Embedding of frame coefficients into [`ambient_basis`] coefficients
/// (`P m x P (n-1)`).
pub fn restriction_matrix(c: &Chart) -> DMatrix<f64> {
    let m = ambient_rank(c);
    let r = c.rank();
    let mut out = DMatrix::zeros(c.len() * m, c.len() * r);
    for i in 0..c.len() {
        let basis = ambient_basis(c, i);
        for a in 0..r {
            for (b, e) in basis.iter().enumerate() {
                out[(i * m + b, i * r + a)] = dot(e, c.frame.nu(i, a));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::make_chart;
    use crate::curve::{derivative, make_diffeo, resample};
    use crate::generators::{circle, ellipse, great_circle, torus_geodesic};
    use std::f64::consts::PI;

    #[test]
    fn parse_and_print() {
        let f: Functional = "length-1.0*area".parse().unwrap();
        assert_eq!(f.terms, vec![(Term::Length, 1.0), (Term::SignedArea, -1.0)]);
        let g: Functional = "2.5*bend+length-1e-3*area".parse().unwrap();
        assert_eq!(
            g.terms,
            vec![(Term::BendingEnergy, 2.5), (Term::Length, 1.0), (Term::SignedArea, -1e-3)]
        );
        assert_eq!(g.to_string().parse::<Functional>().unwrap(), g);
        for bad in ["", "lenght", "length*area", "length area", "x*length", "length+"] {
            assert!(bad.parse::<Functional>().is_err(), "{bad}");
        }
    }

    #[test]
    fn values_on_circles() {
        let x = circle(64, 1.0, [0.0, 0.0]);
        assert!((evaluate(&Functional::length(), &x).unwrap() - 2.0 * PI).abs() < 1e-10);
        assert!((evaluate(&Functional::signed_area(), &x).unwrap() - PI).abs() < 1e-10);
        for r in [0.5, 1.0, 2.0] {
            let e = evaluate(&Functional::bending_energy(), &circle(64, r, [0.3, -0.2])).unwrap();
            // midpoint rule on kappa^2 |x'| = (1/r^2) r over [0, 2 pi]
            let oracle: f64 = (0..1000).map(|_| 1.0 / r * 2.0 * PI / 1000.0).sum();
            assert!((e - 2.0 * PI / r).abs() < 1e-8);
            assert!((e - oracle).abs() < 1e-8);
        }
    }

    #[test]
    fn signed_area_needs_the_plane() {
        assert!(matches!(
            evaluate(&Functional::signed_area(), &great_circle(32)),
            Err(Error::UnsupportedAmbient(_))
        ));
    }

    #[test]
    fn first_variation_examples() {
        let x = circle(128, 1.0, [0.0, 0.0]);
        let outward = SectionField::new(&x, x.flat().to_vec()).unwrap();
        let dl = first_variation(&Functional::length(), &x, &outward).unwrap();
        assert!((dl - 2.0 * PI).abs() < 1e-6);
        let da = first_variation(&Functional::signed_area(), &x, &outward).unwrap();
        assert!((da - 2.0 * PI).abs() < 1e-6);
        let e = ellipse(128, 1.5, 1.0);
        let tangential = derivative(&e);
        for f in [Functional::length(), Functional::signed_area(), Functional::bending_energy()] {
            assert!(first_variation(&f, &e, &tangential).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn gradient_examples() {
        let c = make_chart(&circle(64, 1.0, [0.0, 0.0])).unwrap();
        let g = gradient_in_chart(&Functional::isoperimetric(1.0), &c, &c.zero_section()).unwrap();
        assert!(g.sup_norm() < 1e-8);
        let g = gradient_in_chart(&Functional::length(), &c, &c.zero_section()).unwrap();
        assert!(g.max_diff(&NormalSection::constant(64, &[1.0])) < 1e-6);
        assert!(is_critical(&Functional::isoperimetric(1.0), &c, &c.zero_section(), 1e-6).unwrap());
        assert!(!is_critical(&Functional::length(), &c, &c.zero_section(), 1e-6).unwrap());
        assert!((gradient_norm(&c, &g) - (2.0 * PI).sqrt()).abs() < 1e-6);

        let t = make_chart(&torus_geodesic(64, 0.0, 0.0)).unwrap();
        let g = gradient_in_chart(&Functional::length(), &t, &t.zero_section()).unwrap();
        assert!(g.sup_norm() < 1e-10);
    }

    #[test]
    fn gradient_matches_first_variation() {
        let cases = [
            (ellipse(64, 1.4, 1.0), Functional::new(vec![(Term::Length, 1.0), (Term::SignedArea, -0.3), (Term::BendingEnergy, 0.2)])),
            (torus_geodesic(64, 0.2, 0.05), Functional::new(vec![(Term::Length, 1.0), (Term::BendingEnergy, 1e-3)])),
            (
                Embedding::from_fn(AmbientSpace::sphere2(), 64, |t| {
                    let z = 0.3 + 0.1 * (2.0 * t).cos();
                    let r = (1.0 - z * z).sqrt();
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .unwrap(),
                Functional::new(vec![(Term::Length, 1.0), (Term::BendingEnergy, 0.5)]),
            ),
        ];
        for (x, f) in cases {
            let c = make_chart(&x).unwrap();
            let u = NormalSection::from_fn(64, 1, |t| vec![0.02 * (2.0 * t).cos() + 0.01 * t.sin()]);
            let g = gradient_in_chart(&f, &c, &u).unwrap();
            let dir = NormalSection::from_fn(64, 1, |t| vec![(3.0 * t + 0.4).sin() + 0.5]);
            // derivative of F(exp_x(u + s dir)) at s = 0 by Richardson differences
            let f_at = |s: f64| evaluate(&f, &crate::charts::chart_apply(&c, &u.axpy(s, &dir)).unwrap()).unwrap();
            let cd = |e: f64| (f_at(e) - f_at(-e)) / (2.0 * e);
            let oracle = (4.0 * cd(5e-6) - cd(1e-5)) / 3.0;
            let analytic = g.l2_inner(&dir, c.weights());
            assert!((analytic - oracle).abs() < 1e-6 * (1.0 + oracle.abs()), "{analytic} {oracle}");
        }
    }

    #[test]
    fn reparameterization_invariance() {
        let x = Embedding::from_fn(AmbientSpace::euclidean(2), 256, |t| {
            let r = 1.0 + 0.2 * (3.0 * t).cos() + 0.05 * (5.0 * t + 1.0).sin();
            vec![r * t.cos(), r * t.sin()]
        })
        .unwrap();
        let y = resample(&x, &make_diffeo(11, 0.3, 256).unwrap()).unwrap();
        for f in [Functional::length(), Functional::signed_area(), Functional::bending_energy()] {
            let a = evaluate(&f, &x).unwrap();
            let b = evaluate(&f, &y).unwrap();
            assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn spectra_of_closed_geodesics() {
        let c = make_chart(&great_circle(64)).unwrap();
        let h = hessian_in_chart(&Functional::length(), &c).unwrap();
        assert!(h.asymmetry < 1e-6);
        let ev = h.eigenvalues();
        for (got, want) in ev.iter().zip([-1.0, 0.0, 0.0, 3.0, 3.0]) {
            assert!((got - want).abs() < 1e-3, "{ev:?}");
        }
        let c = make_chart(&torus_geodesic(64, 0.0, 0.0)).unwrap();
        let ev = hessian_in_chart(&Functional::length(), &c).unwrap().eigenvalues();
        let k = 4.0 * PI * PI;
        for (got, want) in ev.iter().zip([0.0, k, k]) {
            assert!((got - want).abs() < 1e-3, "{ev:?}");
        }
    }

    #[test]
    fn full_hessian_restricts_to_chart_hessian() {
        for (x, f) in [
            (circle(32, 1.0, [0.0, 0.0]), Functional::isoperimetric(1.0)),
            (great_circle(32), Functional::length()),
            (torus_geodesic(32, 0.0, 0.0), Functional::length()),
        ] {
            let c = make_chart(&x).unwrap();
            let q = hessian_in_chart(&f, &c).unwrap();
            let full = hessian_full(&f, &c).unwrap();
            assert!(full.asymmetry < 1e-6);
            let r = restriction_matrix(&c);
            let restricted = r.transpose() * &full.q * &r;
            let diff = (restricted - &q.q).abs().max();
            assert!(diff <= 1e-6 * q.max_abs(), "{diff}");
        }
    }
}
