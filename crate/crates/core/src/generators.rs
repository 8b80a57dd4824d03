//! Analytic test curves used by the CLI `--make` flag and the test suites.

use crate::ambient::AmbientSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curve::{Embedding, TWO_PI};

/// Counterclockwise circle of radius `r` about `center` in the plane.
pub fn circle(p: usize, r: f64, center: [f64; 2]) -> Embedding {
    Embedding::from_fn(AmbientSpace::euclidean(2), p, |t| {
        vec![center[0] + r * t.cos(), center[1] + r * t.sin()]
    })
    .expect("valid grid")
}

/// Counterclockwise ellipse with semi-axes `a` (x) and `b` (y).
pub fn ellipse(p: usize, a: f64, b: f64) -> Embedding {
    Embedding::from_fn(AmbientSpace::euclidean(2), p, |t| vec![a * t.cos(), b * t.sin()]).expect("valid grid")
}

/// Lemniscate of Gerono, a figure eight crossing itself at the origin.
pub fn lemniscate(p: usize) -> Embedding {
    Embedding::from_fn(AmbientSpace::euclidean(2), p, |t| vec![t.cos(), t.sin() * t.cos()]).expect("valid grid")
}

/// Unit-speed equator of the unit sphere.
pub fn great_circle(p: usize) -> Embedding {
    Embedding::from_fn(AmbientSpace::sphere2(), p, |t| vec![t.cos(), t.sin(), 0.0]).expect("valid grid")
}

/// Closed curve in the (1,0) winding class of the unit 2-torus at height
/// `offset`, with a transverse `wiggle * sin(2 theta)`.
pub fn torus_geodesic(p: usize, offset: f64, wiggle: f64) -> Embedding {
    Embedding::from_fn(AmbientSpace::flat_torus(2), p, |t| {
        vec![t / TWO_PI, offset + wiggle * (2.0 * t).sin()]
    })
    .expect("valid grid")
}

/// Band-limited perturbation of a circle: radius `r (1 + sum_k c_k cos(k t + phi_k))`.
pub fn perturbed_circle(p: usize, r: f64, modes: &[(usize, f64, f64)]) -> Embedding {
    Embedding::from_fn(AmbientSpace::euclidean(2), p, |t| {
        let rho = r * (1.0 + modes.iter().map(|&(k, c, ph)| c * (k as f64 * t + ph).cos()).sum::<f64>());
        vec![rho * t.cos(), rho * t.sin()]
    })
    .expect("valid grid")
}

/// Curve in the (1,0) class of the unit 2-torus with height
/// `offset + sum_k c_k cos(k t + phi_k)`.
pub fn torus_curve(p: usize, offset: f64, modes: &[(usize, f64, f64)]) -> Embedding {
    Embedding::from_fn(AmbientSpace::flat_torus(2), p, |t| {
        let h = modes.iter().map(|&(k, c, ph)| c * (k as f64 * t + ph).cos()).sum::<f64>();
        vec![t / TWO_PI, offset + h]
    })
    .expect("valid grid")
}

/// Seeded Fourier modes `k = 2..=kmax` with amplitudes summing to at most
/// `amplitude` and uniform phases.
pub fn random_modes(seed: u64, amplitude: f64, kmax: usize) -> Vec<(usize, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = kmax.saturating_sub(1).max(1) as f64;
    (2..=kmax)
        .map(|k| (k, amplitude / n * rng.gen_range(-1.0..=1.0), rng.gen_range(0.0..TWO_PI)))
        .collect()
}
