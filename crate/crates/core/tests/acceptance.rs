//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{eval_trig, length, planar_curvature, Rng};
use embcharts::charts::{
    chart_apply, chart_invert, full_chart_apply, make_chart, project_normal, transition, transition_residual,
};
use embcharts::curve::{image_distance, make_diffeo, resample};
use embcharts::functionals::{
    evaluate, gradient_in_chart, gradient_norm, hessian_full, hessian_in_chart, is_critical, restriction_matrix,
    Functional, Term,
};
use embcharts::generators::{circle, ellipse, great_circle, perturbed_circle, random_modes, torus_curve, torus_geodesic};
use embcharts::solver::{minimize, spectrum, SolveOptions};
use embcharts::symmetry::{action_continuity_probe, orbit_fields, orbit_rank, Isometry, KillingBasis};
use embcharts::{AmbientSpace, Chart, Embedding, NormalSection, SectionField};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn sphere_curve(p: usize, f: impl Fn(f64) -> [f64; 3]) -> Embedding {
    Embedding::from_fn(AmbientSpace::sphere2(), p, |t| {
        let v = f(t);
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        v.iter().map(|c| c / n).collect()
    })
    .unwrap()
}

fn latitude(p: usize, z: f64) -> Embedding {
    let r = (1.0 - z * z).sqrt();
    sphere_curve(p, |t| [r * t.cos(), r * t.sin(), z])
}

fn space_curve(p: usize) -> Embedding {
    Embedding::from_fn(AmbientSpace::euclidean(3), p, |t| vec![t.cos(), t.sin(), 0.3 * (2.0 * t).sin()]).unwrap()
}

fn chart_centers() -> Vec<Embedding> {
    vec![
        circle(64, 1.0, [0.0, 0.0]),
        ellipse(64, 1.5, 1.0),
        great_circle(64),
        latitude(64, 0.6),
        torus_geodesic(64, 0.25, 0.0),
        torus_geodesic(64, 0.0, 0.05),
        space_curve(64),
    ]
}

/// Random band-limited section with sup norm `size`.
fn random_section(c: &Chart, rng: &mut Rng, kmax: usize, size: f64) -> NormalSection {
    let polys: Vec<_> = (0..c.rank()).map(|_| rng.trig_poly(kmax, 1.0)).collect();
    let u = NormalSection::from_fn(c.len(), c.rank(), |t| polys.iter().map(|q| eval_trig(q, t)).collect());
    u.scaled(size / u.sup_norm())
}

/// Random smooth ambient field along the chart center, tangent to the sphere
/// when needed, with sup norm `L / 2 pi` (the mean parameter speed).
fn random_field(c: &Chart, rng: &mut Rng) -> SectionField {
    let d = c.center.dim();
    let polys: Vec<_> = (0..d).map(|_| rng.trig_poly(3, 1.0)).collect();
    let mut comps = Vec::with_capacity(c.len() * d);
    for i in 0..c.len() {
        let t = 2.0 * PI * i as f64 / c.len() as f64;
        let mut v: Vec<f64> = polys.iter().map(|q| eval_trig(q, t)).collect();
        if c.space().is_sphere() {
            let p = c.center.coord(i);
            let vp: f64 = v.iter().zip(p).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(p).for_each(|(a, b)| *a -= vp * b);
        }
        comps.extend(v);
    }
    let field = SectionField::new(&c.center, comps).unwrap();
    let n = field.sup_norm();
    field.scaled(length(&c.center) / (2.0 * PI * n))
}

fn invariance() -> Check {
    let mut worst: f64 = 0.0;
    let fs = [Functional::length(), Functional::signed_area(), Functional::bending_energy()];
    for seed in 0..20u64 {
        let mut rng = Rng::new(100 + seed);
        let poly = rng.trig_poly(6, 0.3);
        let x = Embedding::from_fn(AmbientSpace::euclidean(2), 256, |t| {
            let r = 1.0 + eval_trig(&poly, t);
            vec![r * t.cos(), r * t.sin()]
        })
        .unwrap();
        let y = ok(resample(&x, &ok(make_diffeo(seed, 0.3, 256))?))?;
        for f in &fs {
            let a = ok(evaluate(f, &x))?;
            let b = ok(evaluate(f, &y))?;
            worst = worst.max((a - b).abs() / a.abs());
        }
    }
    ensure!(worst <= 1e-8, "max relative change {worst:.3e}");
    Ok(format!("max relative change {worst:.2e} over 20 curves x 3 functionals"))
}

fn round_trips() -> Check {
    let centers = chart_centers();
    let mut rng = Rng::new(7);
    let mut worst_section: f64 = 0.0;
    for j in 0..20 {
        let c = ok(make_chart(&centers[j % centers.len()]))?;
        let size = c.rho * rng.uniform(0.05, 0.49);
        let u = random_section(&c, &mut rng, 4, size);
        let inv = ok(chart_invert(&c, &ok(chart_apply(&c, &u))?))?;
        worst_section = worst_section.max(inv.section.max_diff(&u));
    }
    ensure!(worst_section <= 1e-8, "section round trip error {worst_section:.3e}");
    let mut worst_image: f64 = 0.0;
    for j in 0..20u64 {
        let c = ok(make_chart(&centers[j as usize % centers.len()]))?;
        let size = c.rho * rng.uniform(0.05, 0.49);
        let u = random_section(&c, &mut rng, 4, size);
        let y = ok(resample(&ok(chart_apply(&c, &u))?, &ok(make_diffeo(j, 0.3, c.len()))?))?;
        let rebuilt = ok(chart_apply(&c, &ok(chart_invert(&c, &y))?.section))?;
        worst_image = worst_image.max(ok(image_distance(&rebuilt, &y))?);
    }
    ensure!(worst_image <= 1e-6, "image reconstruction error {worst_image:.3e}");
    Ok(format!("section error {worst_section:.2e}, image error {worst_image:.2e}"))
}

fn transitions() -> Check {
    let mut rng = Rng::new(11);
    let (mut worst_res, mut worst_direct, mut worst_double): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for j in 0..10 {
        let jf = (j % 5) as f64;
        let x1 = if j < 5 {
            circle(64, 1.0 + 0.1 * jf, [0.1 * jf, -0.05 * jf])
        } else {
            ellipse(64, 1.2 + 0.1 * jf, 0.8 + 0.05 * jf)
        };
        let c1 = ok(make_chart(&x1))?;
        let w = random_section(&c1, &mut rng, 3, 0.05 * c1.rho);
        let x2 = ok(resample(&ok(chart_apply(&c1, &w))?, &ok(make_diffeo(j as u64, 0.2, 64))?))?;
        let c2 = ok(make_chart(&x2))?;
        let u = random_section(&c1, &mut rng, 4, 0.2 * c1.rho);
        let (u2, h) = ok(transition(&c1, &c2, &u))?;
        worst_res = worst_res.max(ok(transition_residual(&c1, &c2, &u, &u2, &h))?);
        // direct planar check: x1 + u nu1 at node i equals x2 + u2 nu2 at h(theta_i)
        let u2i = u2.interp();
        for i in 0..64 {
            let nu1 = c1.frame.nu(i, 0);
            let t = h.lift[i];
            let base = c2.center_at(t);
            let nu2 = &c2.frame_at(t)[0];
            let s = u2i[0].eval(t);
            for k in 0..2 {
                let a = c1.center.coord(i)[k] + u.at(i)[0] * nu1[k];
                let b = base[k] + s * nu2[k];
                worst_direct = worst_direct.max((a - b).abs());
            }
        }
        let (back, _) = ok(transition(&c2, &c1, &u2))?;
        worst_double = worst_double.max(back.max_diff(&u));
    }
    ensure!(worst_res <= 1e-6 && worst_direct <= 1e-6, "residual {worst_res:.3e} / {worst_direct:.3e}");
    ensure!(worst_double <= 1e-6, "double transition error {worst_double:.3e}");
    Ok(format!(
        "residual {worst_res:.2e} (direct {worst_direct:.2e}), double transition {worst_double:.2e}"
    ))
}

fn chart_derivative() -> Check {
    let centers = [
        circle(64, 1.0, [0.0, 0.0]),
        ellipse(64, 1.5, 1.0),
        great_circle(64),
        torus_geodesic(64, 0.1, 0.05),
        space_curve(64),
    ];
    let mut rng = Rng::new(23);
    let (mut worst_err, mut worst_order) = (0.0f64, f64::INFINITY);
    for j in 0..10 {
        let c = ok(make_chart(&centers[j % centers.len()]))?;
        let v = random_field(&c, &mut rng);
        let norm_v = v.sup_norm();
        let target = ok(project_normal(&c, &v))?;
        let quotient = |r: f64| -> Result<NormalSection, String> {
            let plus = ok(chart_invert(&c, &ok(full_chart_apply(&c, &v.scaled(r)))?))?.section;
            let minus = ok(chart_invert(&c, &ok(full_chart_apply(&c, &v.scaled(-r)))?))?.section;
            Ok(plus.axpy(-1.0, &minus).scaled(0.5 / r))
        };
        let e1 = quotient(2.5e-3)?.max_diff(&target);
        let e2 = quotient(1.25e-3)?.max_diff(&target);
        let order = (e1 / e2).log2();
        ensure!(e1 <= 1e-4 * norm_v, "field {j}: error {e1:.3e} at r = 2.5e-3");
        ensure!(order >= 1.0, "field {j}: observed order {order:.2}");
        worst_err = worst_err.max(e1 / norm_v);
        worst_order = worst_order.min(order);
    }
    Ok(format!("max error {worst_err:.2e}*|V| at r = 2.5e-3, min observed order {worst_order:.2}"))
}

fn criticality() -> Check {
    let la = |c: f64| Functional::new(vec![(Term::Length, 1.0), (Term::SignedArea, -c)]);
    let bend_len = Functional::new(vec![(Term::BendingEnergy, 1.0), (Term::Length, 1.0)]);
    let tilted = sphere_curve(64, |t| [t.cos(), t.sin(), 0.05 * (2.0 * t).sin()]);
    let cases: Vec<(&str, Functional, Embedding, Embedding, bool)> = vec![
        ("unit circle, L-A", la(1.0), circle(64, 1.0, [0.0, 0.0]), ellipse(64, 1.05, 0.97), true),
        ("great circle, L", Functional::length(), great_circle(64), tilted.clone(), true),
        ("torus geodesic, L", Functional::length(), torus_geodesic(64, 0.0, 0.0), torus_geodesic(64, 0.02, 0.03), true),
        ("radius-2 circle, L-A/2", la(0.5), circle(64, 2.0, [0.0, 0.0]), ellipse(64, 2.1, 1.9), true),
        ("unit circle, B+L", bend_len.clone(), circle(64, 1.0, [0.0, 0.0]), ellipse(64, 1.03, 0.98), true),
        ("ellipse, L-A", la(1.0), ellipse(64, 1.3, 0.8), circle(64, 1.05, [0.0, 0.0]), false),
        ("latitude circle, L", Functional::length(), latitude(64, 0.5), great_circle(64), false),
        ("wiggly torus curve, L", Functional::length(), torus_geodesic(64, 0.0, 0.08), torus_geodesic(64, 0.02, 0.0), false),
        ("unit circle, L", Functional::length(), circle(64, 1.0, [0.0, 0.0]), ellipse(64, 1.05, 0.97), false),
        ("ellipse, B+L", bend_len, ellipse(64, 1.2, 1.0), circle(64, 1.1, [0.0, 0.0]), false),
    ];
    let tol = 1e-6;
    for (name, f, x, other, expected) in &cases {
        let c1 = ok(make_chart(x))?;
        let c2 = ok(make_chart(other))?;
        let u2 = ok(chart_invert(&c2, x))?.section;
        ensure!(u2.sup_norm() > 1e-3, "{name}: second chart is not distinct");
        let a = ok(is_critical(f, &c1, &c1.zero_section(), tol))?;
        let b = ok(is_critical(f, &c2, &u2, tol))?;
        ensure!(a == b && a == *expected, "{name}: chart 1 says {a}, chart 2 says {b}, expected {expected}");
    }
    Ok("5 critical and 5 non-critical classes agree across charts".into())
}

fn critical_circles() -> Check {
    let f = Functional::isoperimetric(1.0);
    let c = ok(make_chart(&circle(64, 1.0, [0.0, 0.0])))?;
    let g = gradient_norm(&c, &ok(gradient_in_chart(&f, &c, &c.zero_section()))?);
    ensure!(g <= 1e-8, "gradient at the unit circle {g:.3e}");
    let x0 = perturbed_circle(64, 1.0, &[(2, 0.06, 0.3), (3, 0.04, 1.1)]);
    let opts = SolveOptions {
        newton: true,
        grad_tol: 1e-10,
        ..SolveOptions::default()
    };
    let (c, u, trace) = ok(minimize(&f, &x0, &opts))?;
    ensure!(trace.converged, "Newton did not converge");
    let kappa = planar_curvature(&ok(chart_apply(&c, &u))?);
    let dev = kappa.iter().map(|k| (k - 1.0).abs()).fold(0.0, f64::max);
    ensure!(dev <= 1e-6, "curvature deviation {dev:.3e}");
    Ok(format!(
        "gradient {g:.2e}; Newton in {} iterations, max |kappa - 1| = {dev:.2e}",
        trace.records.len() - 1
    ))
}

fn torus_geodesics() -> Check {
    let f = Functional::length();
    let opts = SolveOptions {
        grad_tol: 1e-5,
        ..SolveOptions::default()
    };
    let mut worst: f64 = 0.0;
    for seed in 0..5u64 {
        let x0 = torus_curve(64, 0.1 * seed as f64, &random_modes(seed, 0.15, 5));
        let (c, u, trace) = ok(minimize(&f, &x0, &opts))?;
        ensure!(trace.converged, "seed {seed}: no convergence");
        let monotone = trace.records.windows(2).all(|w| w[1].f <= w[0].f);
        ensure!(monotone, "seed {seed}: trace is not monotone");
        let x = ok(chart_apply(&c, &u))?;
        ensure!(x.winding() == [1, 0], "seed {seed}: winding changed to {:?}", x.winding());
        worst = worst.max((length(&x) - 1.0).abs());
    }
    ensure!(worst <= 1e-5, "length error {worst:.3e}");
    Ok(format!("5 seeds, max |length - 1| = {worst:.2e}, traces monotone"))
}

fn spectra() -> Check {
    let f = Functional::length();
    let gc = ok(spectrum(&f, &ok(make_chart(&great_circle(64)))?, 5))?;
    let want = [-1.0, 0.0, 0.0, 3.0, 3.0];
    let e1 = gc.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure!(e1 <= 1e-3, "great circle spectrum {gc:?}");
    let index = gc.iter().filter(|v| **v < -1e-3).count();
    let nullity = gc.iter().filter(|v| v.abs() <= 1e-3).count();
    ensure!(index == 1 && nullity == 2, "index {index}, nullity {nullity}");
    let tg = ok(spectrum(&f, &ok(make_chart(&torus_geodesic(64, 0.0, 0.0)))?, 3))?;
    let four_pi2 = 4.0 * PI * PI;
    let want = [0.0, four_pi2, four_pi2];
    let e2 = tg.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure!(e2 <= 1e-2, "torus geodesic spectrum {tg:?}");
    Ok(format!("great circle error {e1:.2e} (index 1, nullity 2), torus geodesic error {e2:.2e}"))
}

fn critical_points() -> Vec<(&'static str, Functional, Embedding)> {
    vec![
        ("great circle", Functional::length(), great_circle(64)),
        ("torus geodesic", Functional::length(), torus_geodesic(64, 0.0, 0.0)),
        ("unit circle", Functional::isoperimetric(1.0), circle(64, 1.0, [0.0, 0.0])),
    ]
}

fn restriction() -> Check {
    let mut worst: f64 = 0.0;
    for (name, f, x) in critical_points() {
        let c = ok(make_chart(&x))?;
        let q = ok(hessian_in_chart(&f, &c))?;
        let full = ok(hessian_full(&f, &c))?;
        let r = restriction_matrix(&c);
        let diff = (r.transpose() * &full.q * &r - &q.q).abs().max() / q.max_abs();
        ensure!(diff <= 1e-6, "{name}: relative difference {diff:.3e}");
        worst = worst.max(diff);
    }
    Ok(format!("max relative difference {worst:.2e}"))
}

fn orbits() -> Check {
    let mut worst: f64 = 0.0;
    let expected = [(3, 2, 1), (2, 1, 1), (3, 2, 1)];
    for ((name, f, x), want) in critical_points().into_iter().zip(expected) {
        let c = ok(make_chart(&x))?;
        let basis = ok(KillingBasis::standard(c.space(), None))?;
        let rep = orbit_rank(&c, &basis);
        let got = (rep.dim_g, rep.rank, rep.stabilizer_dim);
        ensure!(got == want, "{name}: (dim G, rank, stabilizer) = {got:?}, expected {want:?}");
        let q = ok(hessian_in_chart(&f, &c))?;
        for v in orbit_fields(&c, &basis) {
            let qv = &q.q * nalgebra::DVector::from_column_slice(&v.coeff);
            let rel = qv.amax() / (q.max_abs() * v.sup_norm().max(1.0));
            ensure!(rel <= 1e-6, "{name}: orbit column not in the Hessian kernel ({rel:.3e})");
            worst = worst.max(rel);
        }
    }
    Ok(format!("ranks 2/1/2 with stabilizers 1/1/1, max |Q k|/|Q| = {worst:.2e}"))
}

fn continuity() -> Check {
    let c = ok(make_chart(&circle(64, 1.0, [0.0, 0.0])))?;
    let mut worst_shift: f64 = 0.0;
    for dir in [[1.0, 0.0], [0.0, 1.0], [0.6, -0.8]] {
        let vals = ok(action_continuity_probe(
            &c,
            |t| Isometry::translation(c.space(), vec![t * dir[0], t * dir[1]]).unwrap(),
            0.3,
            30,
        ))?;
        for (j, v) in vals.iter().enumerate() {
            worst_shift = worst_shift.max((v - 0.01 * j as f64).abs());
        }
    }
    ensure!(worst_shift <= 1e-6, "translation probe error {worst_shift:.3e}");
    let mut worst_stab: f64 = 0.0;
    let spin = ok(action_continuity_probe(&c, |t| Isometry::rotation2(t, [0.0, 0.0]), 2.0 * PI, 40))?;
    let gc = ok(make_chart(&great_circle(64)))?;
    let axis = ok(action_continuity_probe(
        &gc,
        |t| Isometry::rotation3(AmbientSpace::sphere2(), [0.0, 0.0, 1.0], t).unwrap(),
        2.0 * PI,
        40,
    ))?;
    let tc = ok(make_chart(&torus_geodesic(64, 0.3, 0.0)))?;
    let slide = ok(action_continuity_probe(
        &tc,
        |t| Isometry::translation(AmbientSpace::flat_torus(2), vec![t, 0.0]).unwrap(),
        1.0,
        40,
    ))?;
    for v in spin.iter().chain(&axis).chain(&slide) {
        worst_stab = worst_stab.max(*v);
    }
    ensure!(worst_stab <= 1e-8, "stabilizer path displacement {worst_stab:.3e}");
    Ok(format!("translation error {worst_shift:.2e}, stabilizer displacement {worst_stab:.2e}"))
}

fn main() {
    let checks: [(&str, fn() -> Check); 11] = [
        ("invariance under reparameterization", invariance),
        ("chart round trips", round_trips),
        ("transition formula", transitions),
        ("derivative of chart coordinates", chart_derivative),
        ("criticality is chart-independent", criticality),
        ("critical circles", critical_circles),
        ("flat-torus geodesics", torus_geodesics),
        ("second-variation spectra", spectra),
        ("restriction of the full Hessian", restriction),
        ("orbit ranks", orbits),
        ("action continuity probe", continuity),
    ];
    let mut failures = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2}. {name}: {detail} ({secs:.2}s)", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2}. {name}: {detail} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", checks.len() - failures, checks.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
