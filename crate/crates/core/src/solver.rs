//! Critical points of invariant functionals in quotient charts.
//!
//! Iterates on a normal section `u` of the current chart. When `u` grows past
//! a fraction of the chart radius, the chart is re-centered at the current
//! curve (resampled by arclength and Fourier-truncated) and `u` is recomputed
//! by inversion, so every chart center stays smooth.

use std::fmt::Write as _;

use crate::charts::{chart_apply, chart_invert, make_chart, Chart, NormalSection};
use crate::curve::{resample, Embedding, Reparam};
use crate::error::{Error, Result};
use crate::functionals::{evaluate, gradient_in_chart, gradient_norm, hessian_at, hessian_in_chart, Functional};
use crate::spectral::spectral;

/// Smallest accepted line-search step.
const MIN_STEP: f64 = 1e-12;
/// Eigenvalues below this fraction of the largest magnitude are treated as kernel.
const KERNEL_RTOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Tolerance on the `L^2(ds)` gradient norm.
    pub grad_tol: f64,
    pub recenter_fraction: f64,
    pub armijo_c: f64,
    pub step0: f64,
    pub newton: bool,
    /// Smooth the descent direction with the `H^1` multiplier `1 / (1 + k^2)`.
    pub precondition: bool,
    /// Fourier cutoff used when re-centering; `None` means `P/4`.
    pub trunc_freq: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            grad_tol: 1e-8,
            recenter_fraction: 0.5,
            armijo_c: 1e-4,
            step0: 1.0,
            newton: false,
            precondition: true,
            trunc_freq: None,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        let ok = self.grad_tol > 0.0
            && self.recenter_fraction > 0.0
            && self.recenter_fraction < 1.0
            && self.armijo_c > 0.0
            && self.step0 > 0.0
            && self.trunc_freq != Some(0);
        if ok {
            Ok(())
        } else {
            Err(Error::Parse(format!("invalid solver options {self:?}")))
        }
    }

    fn trunc(&self, p: usize) -> usize {
        self.trunc_freq.unwrap_or(p / 4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub f: f64,
    pub grad_norm: f64,
    /// Step accepted in the previous iteration (0 on the first record).
    pub step: f64,
    /// The chart was re-centered before this record.
    pub recenter: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
    pub converged: bool,
}

impl SolveTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,f,grad_norm,step,recenter\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{:.17e},{:.17e},{:.17e},{}",
                r.iter, r.f, r.grad_norm, r.step, r.recenter as u8
            );
        }
        out
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// `f` never increases between consecutive records.
    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].f <= w[0].f)
    }
}

/// Same image, parameterized proportionally to arclength.
pub fn arclength_resample(x: &Embedding) -> Result<Embedding> {
    let p = x.len();
    let (anti, mean) = spectral(p).integrate(&x.speeds());
    let h = x.grid().h();
    let sigma = Reparam::new((0..p).map(|i| h * i as f64 + anti[i] / mean).collect())?;
    resample(x, &sigma.inverse(p)?)
}

/// New chart centered at the smoothed curve `chart_apply(c, u)`, together with
/// the coordinates of that curve in the new chart.
pub fn recenter(c: &Chart, u: &NormalSection, trunc_freq: usize) -> Result<(Chart, NormalSection)> {
    let y = chart_apply(c, u)?;
    let center = arclength_resample(&y)?.truncated(trunc_freq);
    let chart = make_chart(&center)?;
    let inv = chart_invert(&chart, &y)?;
    Ok((chart, inv.section))
}

struct State<'a> {
    f: &'a Functional,
    chart: Chart,
    u: NormalSection,
}

impl State<'_> {
    fn value(&self, u: &NormalSection) -> Result<f64> {
        evaluate(self.f, &chart_apply(&self.chart, u)?)
    }
}

/// Descent direction: `-g`, or the `H^1`-smoothed coefficient gradient
/// rescaled by the mean weight, which keeps the admissible step independent
/// of the grid size.
fn descent_direction(c: &Chart, g: &NormalSection, precondition: bool) -> NormalSection {
    if !precondition {
        return g.scaled(-1.0);
    }
    let p = c.len();
    let r = g.rank;
    let w = c.weights();
    let wbar = w.iter().sum::<f64>() / p as f64;
    let sp = spectral(p);
    let mut coeff = vec![0.0; p * r];
    for a in 0..r {
        let lg: Vec<f64> = (0..p).map(|i| g.coeff[i * r + a] * w[i] / wbar).collect();
        let mut spec = sp.fft(&lg);
        for (j, z) in spec.iter_mut().enumerate() {
            let k = j.min(p - j) as f64;
            *z /= 1.0 + k * k;
        }
        for (i, v) in sp.ifft_real(spec).into_iter().enumerate() {
            coeff[i * r + a] = -v;
        }
    }
    NormalSection { rank: r, coeff }
}

/// Armijo backtracking along `d`; returns the accepted step and new point.
fn armijo(
    s: &State<'_>,
    f0: f64,
    g: &NormalSection,
    d: &NormalSection,
    alpha0: f64,
    opts: &SolveOptions,
    iter: usize,
) -> Result<(f64, NormalSection)> {
    let slope = g.l2_inner(d, s.chart.weights());
    let mut alpha = alpha0;
    while alpha >= MIN_STEP {
        let trial = s.u.axpy(alpha, d);
        if trial.sup_norm() < s.chart.rho {
            if let Ok(ft) = s.value(&trial) {
                if ft <= f0 + opts.armijo_c * alpha * slope {
                    return Ok((alpha, trial));
                }
            }
        }
        alpha *= 0.5;
    }
    Err(Error::LineSearchFailed(iter))
}

/// Newton direction `-Q^+ M g` with near-kernel eigenvalues (isometry orbits)
/// dropped.
fn newton_direction(f: &Functional, c: &Chart, u: &NormalSection, g: &NormalSection) -> Result<NormalSection> {
    let h = hessian_at(f, c, u)?;
    let (values, vectors) = h.generalized_eigen_all();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::SingularSystem);
    }
    let mg: Vec<f64> = g.coeff.iter().zip(&h.mass).map(|(gi, m)| gi * m).collect();
    let mut delta = vec![0.0; mg.len()];
    for (j, &lam) in values.iter().enumerate() {
        if lam.abs() <= KERNEL_RTOL * scale {
            continue;
        }
        let v = vectors.column(j);
        let proj: f64 = v.iter().zip(&mg).map(|(a, b)| a * b).sum();
        for (d, vi) in delta.iter_mut().zip(v.iter()) {
            *d -= proj / lam * vi;
        }
    }
    Ok(NormalSection { rank: u.rank, coeff: delta })
}

/// One damped Newton step: halves the step until the gradient norm drops.
fn newton_step(s: &State<'_>, g: &NormalSection, gn: f64, iter: usize) -> Result<(f64, NormalSection)> {
    let delta = newton_direction(s.f, &s.chart, &s.u, g)?;
    let mut alpha = 1.0;
    while alpha >= 1.0 / 1024.0 {
        let trial = s.u.axpy(alpha, &delta);
        if trial.sup_norm() < s.chart.rho {
            if let Ok(gt) = gradient_in_chart(s.f, &s.chart, &trial) {
                if gradient_norm(&s.chart, &gt) < gn {
                    return Ok((alpha, trial));
                }
            }
        }
        alpha *= 0.5;
    }
    Err(Error::LineSearchFailed(iter))
}

/// Searches a critical point of `f` starting from the class of `x0`.
///
/// Plain mode is gradient descent with Armijo backtracking on the negative
/// `L^2(ds)` gradient, smoothed by an `H^1` multiplier unless
/// `opts.precondition` is off. With `opts.newton` the steps are damped Newton steps
/// on the gradient norm, which also reaches saddle points.
pub fn minimize(f: &Functional, x0: &Embedding, opts: &SolveOptions) -> Result<(Chart, NormalSection, SolveTrace)> {
    opts.validate()?;
    f.check_space(x0.space())?;
    let chart = make_chart(x0)?;
    let u = chart.zero_section();
    let mut s = State { f, chart, u };
    let mut trace = SolveTrace::default();
    let mut step = 0.0;
    let mut recentered = false;
    let mut alpha = opts.step0;
    for iter in 0..=opts.max_iter {
        let g = gradient_in_chart(f, &s.chart, &s.u)?;
        let gn = gradient_norm(&s.chart, &g);
        let fv = s.value(&s.u)?;
        trace.records.push(TraceRecord {
            iter,
            f: fv,
            grad_norm: gn,
            step,
            recenter: recentered,
        });
        if gn <= opts.grad_tol {
            trace.converged = true;
            break;
        }
        if iter == opts.max_iter {
            break;
        }
        if opts.newton {
            let (a, next) = newton_step(&s, &g, gn, iter)?;
            step = a;
            s.u = next;
        } else {
            let d = descent_direction(&s.chart, &g, opts.precondition);
            let (a, next) = armijo(&s, fv, &g, &d, alpha, opts, iter)?;
            step = a;
            alpha = (2.0 * a).min(opts.step0.max(a));
            s.u = next;
        }
        recentered = false;
        if s.u.sup_norm() > opts.recenter_fraction * s.chart.rho {
            let trunc = opts.trunc(s.chart.len());
            let (c, u) = recenter(&s.chart, &s.u, trunc).map_err(|e| match e {
                Error::NotEmbedding { .. } | Error::DegenerateFrame(_) => Error::ChartBreakdown(iter),
                other => other,
            })?;
            s.chart = c;
            s.u = u;
            recentered = true;
        }
    }
    Ok((s.chart, s.u, trace))
}

/// Damped Newton iterations in a fixed chart until the gradient norm is at
/// most `opts.grad_tol` or `opts.max_iter` steps were taken.
pub fn newton_refine(f: &Functional, c: &Chart, u: &NormalSection, opts: &SolveOptions) -> Result<NormalSection> {
    opts.validate()?;
    let mut s = State {
        f,
        chart: c.clone(),
        u: u.clone(),
    };
    for iter in 0..opts.max_iter {
        let g = gradient_in_chart(f, &s.chart, &s.u)?;
        let gn = gradient_norm(&s.chart, &g);
        if gn <= opts.grad_tol {
            break;
        }
        s.u = newton_step(&s, &g, gn, iter)?.1;
    }
    Ok(s.u)
}

/// The `k` smallest generalized eigenvalues of the second variation at the
/// chart center (fewer if the chart has fewer band-limited modes).
pub fn spectrum(f: &Functional, c: &Chart, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut ev = hessian_in_chart(f, c)?.eigenvalues();
    ev.truncate(k);
    Ok(ev)
}
