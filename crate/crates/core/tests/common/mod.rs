//! Reference computations for integration tests, written independently of
//! the library's FFT-based operators (direct O(P^2) Fourier sums).

#![allow(dead_code)]

use std::f64::consts::PI;

use embcharts::Embedding;

/// Derivative of periodic samples on the uniform grid by a direct Fourier
/// sum, with the Nyquist mode dropped.
pub fn dft_derivative(v: &[f64]) -> Vec<f64> {
    let p = v.len();
    let h = 2.0 * PI / p as f64;
    let mut out = vec![0.0; p];
    for k in 1..(p + 1) / 2 {
        let (mut a, mut b) = (0.0, 0.0);
        for (j, x) in v.iter().enumerate() {
            let (s, c) = (k as f64 * h * j as f64).sin_cos();
            a += x * c;
            b += x * s;
        }
        a *= 2.0 / p as f64;
        b *= 2.0 / p as f64;
        let kf = k as f64;
        for (i, o) in out.iter_mut().enumerate() {
            let (s, c) = (kf * h * i as f64).sin_cos();
            *o += kf * (b * c - a * s);
        }
    }
    out
}

/// Velocity of each node as ambient vectors (torus curves are differentiated
/// through their lift: periodic part plus constant winding slope).
pub fn velocities(x: &Embedding) -> Vec<Vec<f64>> {
    let p = x.len();
    let d = x.dim();
    let mut cols = Vec::with_capacity(d);
    for k in 0..d {
        let slope = x.winding().get(k).copied().unwrap_or(0) as f64;
        let periodic: Vec<f64> = (0..p)
            .map(|i| x.coord(i)[k] - slope * i as f64 / p as f64)
            .collect();
        cols.push(
            dft_derivative(&periodic)
                .into_iter()
                .map(|v| v + slope / (2.0 * PI))
                .collect::<Vec<_>>(),
        );
    }
    (0..p).map(|i| (0..d).map(|k| cols[k][i]).collect()).collect()
}

pub fn length(x: &Embedding) -> f64 {
    let h = 2.0 * PI / x.len() as f64;
    velocities(x)
        .iter()
        .map(|v| v.iter().map(|c| c * c).sum::<f64>().sqrt())
        .sum::<f64>()
        * h
}

/// Signed curvature of a planar curve.
pub fn planar_curvature(x: &Embedding) -> Vec<f64> {
    let xs: Vec<f64> = (0..x.len()).map(|i| x.coord(i)[0]).collect();
    let ys: Vec<f64> = (0..x.len()).map(|i| x.coord(i)[1]).collect();
    let (x1, y1) = (dft_derivative(&xs), dft_derivative(&ys));
    let (x2, y2) = (dft_derivative(&x1), dft_derivative(&y1));
    (0..x.len())
        .map(|i| (x1[i] * y2[i] - y1[i] * x2[i]) / (x1[i] * x1[i] + y1[i] * y1[i]).powf(1.5))
        .collect()
}

/// Small deterministic generator for test data (SplitMix64).
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD1B5_4A32_D192_ED03)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Random trigonometric polynomial `sum_{k<=kmax} a_k cos(k t) + b_k sin(k t)`
    /// with sup bound `scale`.
    pub fn trig_poly(&mut self, kmax: usize, scale: f64) -> Vec<(usize, f64, f64)> {
        let n = 2.0 * (kmax + 1) as f64;
        (0..=kmax)
            .map(|k| (k, scale / n * self.uniform(-1.0, 1.0), scale / n * self.uniform(-1.0, 1.0)))
            .collect()
    }
}

pub fn eval_trig(poly: &[(usize, f64, f64)], t: f64) -> f64 {
    poly.iter()
        .map(|&(k, a, b)| {
            let (s, c) = (k as f64 * t).sin_cos();
            a * c + b * s
        })
        .sum()
}
