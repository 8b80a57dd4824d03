//! Trigonometric (Fourier) differentiation, truncation and interpolation of
//! periodic samples on the uniform grid `theta_i = 2 pi i / P`.
//!
//! For even `P` the Nyquist mode is treated symmetrically: the interpolant
//! carries it as `c cos(P s / 2)`, so the first-derivative operator drops it
//! (its derivative vanishes at the nodes) while the second-derivative operator
//! keeps it. With this convention the first-derivative matrix is antisymmetric
//! and the second-derivative matrix is symmetric.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

thread_local! {
    static CACHE: RefCell<HashMap<usize, Rc<Spectral>>> = RefCell::new(HashMap::new());
}

/// Returns the (per-thread cached) transform for grid size `n`.
pub fn spectral(n: usize) -> Rc<Spectral> {
    CACHE.with(|c| {
        c.borrow_mut()
            .entry(n)
            .or_insert_with(|| Rc::new(Spectral::new(n)))
            .clone()
    })
}

/// Signed wavenumber of FFT bin `j`.
fn wavenumber(j: usize, n: usize) -> f64 {
    if j <= n / 2 {
        j as f64
    } else {
        j as f64 - n as f64
    }
}

impl Spectral {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized forward DFT.
    pub fn fft(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse DFT including the `1/n` normalization; returns real parts.
    pub fn ifft_real(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.inverse.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * s).collect()
    }

    fn apply_multiplier(&self, x: &[f64], mult: impl Fn(f64, bool) -> Complex64) -> Vec<f64> {
        let n = self.n;
        let mut c = self.fft(x);
        for (j, cj) in c.iter_mut().enumerate() {
            let nyquist = n % 2 == 0 && j == n / 2;
            *cj *= mult(wavenumber(j, n), nyquist);
        }
        self.ifft_real(c)
    }

    pub fn derivative(&self, x: &[f64]) -> Vec<f64> {
        self.apply_multiplier(x, |k, nyq| {
            if nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k)
            }
        })
    }

    pub fn second_derivative(&self, x: &[f64]) -> Vec<f64> {
        self.apply_multiplier(x, |k, _| Complex64::new(-k * k, 0.0))
    }

    /// Keeps only modes with `|k| <= kmax` (the Nyquist mode counts as `n/2`).
    pub fn truncate(&self, x: &[f64], kmax: usize) -> Vec<f64> {
        let kmax = kmax as f64;
        self.apply_multiplier(x, |k, _| {
            if k.abs() <= kmax {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Antiderivative of the zero-mean part, fixed by value 0 at node 0;
    /// returns `(antiderivative, mean)`.
    pub fn integrate(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let n = self.n;
        let mut c = self.fft(x);
        let mean = c[0].re / n as f64;
        c[0] = Complex64::new(0.0, 0.0);
        for (j, cj) in c.iter_mut().enumerate().skip(1) {
            let k = wavenumber(j, n);
            if n % 2 == 0 && j == n / 2 {
                *cj = Complex64::new(0.0, 0.0);
            } else {
                *cj /= Complex64::new(0.0, k);
            }
        }
        let mut f = self.ifft_real(c);
        let f0 = f[0];
        for v in f.iter_mut() {
            *v -= f0;
        }
        (f, mean)
    }
}

/// Band-limited interpolant of one periodic coordinate.
#[derive(Debug, Clone)]
pub struct Interp {
    /// `c_k` for `k = 0..n/2`, scaled so that the value is `Re sum c_k e^{iks}`
    /// plus the Nyquist cosine.
    coeffs: Vec<Complex64>,
    nyquist: f64,
    half: usize,
}

impl Interp {
    pub fn new(samples: &[f64]) -> Self {
        let n = samples.len();
        let sp = spectral(n);
        let c = sp.fft(samples);
        let scale = 1.0 / n as f64;
        let half = n / 2;
        let even = n % 2 == 0;
        let top = if even { half } else { half + 1 };
        let mut coeffs = Vec::with_capacity(top);
        for (k, ck) in c.iter().enumerate().take(top) {
            let f = if k == 0 { scale } else { 2.0 * scale };
            coeffs.push(ck * f);
        }
        let nyquist = if even { c[half].re * scale } else { 0.0 };
        Self {
            coeffs,
            nyquist,
            half: if even { half } else { 0 },
        }
    }

    /// Value, first and second derivative at `s`.
    pub fn eval_all(&self, s: f64) -> (f64, f64, f64) {
        let e = Complex64::new(s.cos(), s.sin());
        let mut z = Complex64::new(1.0, 0.0);
        let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for (k, ck) in self.coeffs.iter().enumerate() {
            let t = ck * z;
            let kf = k as f64;
            v += t.re;
            d1 -= kf * t.im;
            d2 -= kf * kf * t.re;
            z *= e;
        }
        if self.half > 0 {
            let m = self.half as f64;
            let (sn, cs) = (m * s).sin_cos();
            v += self.nyquist * cs;
            d1 -= m * self.nyquist * sn;
            d2 -= m * m * self.nyquist * cs;
        }
        (v, d1, d2)
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.eval_all(s).0
    }
}
