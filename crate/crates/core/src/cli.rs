//! Command-line front end.
//!
//! Every command reads one or two curves (from a curve file or a built-in
//! generator), writes its report to `--output` or stdout, and maps failures
//! to exit codes: 2 for unreadable input, 3 for non-embeddings, 4 for curves
//! outside the chart tube, 5 when the solver hits its iteration limit and 1
//! for anything else.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::ambient::AmbientSpace;
use crate::charts::{chart_apply, chart_invert, make_chart, reach_estimate, separation};
use crate::curve::{image_distance, is_embedding, Embedding};
use crate::error::Error;
use crate::functionals::{evaluate, Functional};
use crate::generators;
use crate::io::{read_curve, write_curve};
use crate::solver::{minimize, spectrum, SolveOptions};
use crate::symmetry::{orbit_rank, KillingBasis};

const DEFAULT_GRID: usize = 64;

#[derive(Debug, Parser)]
#[command(name = "embcharts", version, about = "Quotient charts for closed curves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a curve is an embedding and report its reach.
    Validate(CurveArgs),
    /// Express a curve in the chart of a center curve and reconstruct it.
    Roundtrip(RoundtripArgs),
    /// Minimize a functional from a starting curve; writes the trace as CSV.
    Minimize(MinimizeArgs),
    /// Lowest generalized Hessian eigenvalues at a curve.
    Spectrum(SpectrumArgs),
    /// Rank of the isometry-orbit map at a curve.
    Orbit(CurveArgs),
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Curve file.
    #[arg(long, conflicts_with = "make")]
    pub curve: Option<PathBuf>,
    /// Built-in curve, `NAME[:key=value,...]`.
    #[arg(long)]
    pub make: Option<String>,
    /// Required ambient space as JSON, e.g. `{"kind":"euclidean","dim":2}`.
    #[arg(long)]
    pub ambient: Option<String>,
    /// Number of grid nodes for built-in curves.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Seed for randomized built-in curves.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RoundtripArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    /// Center curve file.
    #[arg(long, conflicts_with = "center_make")]
    pub center: Option<PathBuf>,
    /// Built-in center curve.
    #[arg(long)]
    pub center_make: Option<String>,
}

#[derive(Debug, Args)]
pub struct MinimizeArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    #[arg(long, default_value = "length")]
    pub functional: String,
    /// Gradient-norm tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Use damped Newton steps instead of gradient descent.
    #[arg(long)]
    pub newton: bool,
    /// Write the final curve to this file.
    #[arg(long)]
    pub save_curve: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    #[arg(long, default_value = "length")]
    pub functional: String,
    /// Number of eigenvalues.
    #[arg(short, long, default_value_t = 5)]
    pub k: usize,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::InvalidGrid(_) | Error::InvalidAmbient(_) | Error::ShapeMismatch(_) => 2,
            Error::NotEmbedding { .. } => 3,
            Error::OutsideTube { .. } | Error::OutsideDomain { .. } => 4,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure {
        code: 1,
        message: e.to_string(),
    }
}

pub fn run(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Validate(a) => cmd_validate(&a),
        Command::Roundtrip(a) => cmd_roundtrip(&a),
        Command::Minimize(a) => cmd_minimize(&a),
        Command::Spectrum(a) => cmd_spectrum(&a),
        Command::Orbit(a) => cmd_orbit(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Parses `NAME[:key=value,...]` and builds the curve on `p` nodes.
pub fn make_curve(spec: &str, p: usize, seed: u64) -> Result<Embedding, Error> {
    crate::curve::GridCircle::new(p)?;
    let (name, params) = spec.split_once(':').unwrap_or((spec, ""));
    let mut kv = Vec::new();
    for item in params.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value in '{item}'")))?;
        let v: f64 = v.parse().map_err(|_| Error::Parse(format!("bad number in '{item}'")))?;
        kv.push((k.to_string(), v));
    }
    let allowed: &[&str] = match name {
        "circle" => &["r", "cx", "cy"],
        "ellipse" => &["a", "b"],
        "lemniscate" | "great-circle" => &[],
        "perturbed-circle" => &["r", "amp", "kmax"],
        "torus-geodesic" => &["offset", "wiggle", "amp", "kmax"],
        _ => return Err(Error::Parse(format!("unknown curve '{name}'"))),
    };
    if let Some((k, _)) = kv.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        return Err(Error::Parse(format!("'{name}' has no parameter '{k}'")));
    }
    let get = |key: &str, default: f64| kv.iter().rev().find(|(k, _)| k == key).map_or(default, |(_, v)| *v);
    let kmax = get("kmax", 5.0);
    if !(kmax >= 2.0 && kmax.fract() == 0.0 && kmax < (p / 2) as f64) {
        return Err(Error::Parse(format!("kmax must be an integer in [2, {})", p / 2)));
    }
    let kmax = kmax as usize;
    Ok(match name {
        "circle" => generators::circle(p, get("r", 1.0), [get("cx", 0.0), get("cy", 0.0)]),
        "ellipse" => generators::ellipse(p, get("a", 1.5), get("b", 1.0)),
        "lemniscate" => generators::lemniscate(p),
        "great-circle" => generators::great_circle(p),
        "perturbed-circle" => {
            generators::perturbed_circle(p, get("r", 1.0), &generators::random_modes(seed, get("amp", 0.1), kmax))
        }
        _ => {
            let mut modes = generators::random_modes(seed, get("amp", 0.0), kmax);
            modes.push((2, get("wiggle", 0.0), -std::f64::consts::FRAC_PI_2));
            generators::torus_curve(p, get("offset", 0.0), &modes)
        }
    })
}

fn load(path: &Option<PathBuf>, make: &Option<String>, a: &CurveArgs) -> Result<Embedding, Error> {
    let x = match (path, make) {
        (Some(path), _) => {
            let x = read_curve(path)?;
            if a.grid.is_some_and(|p| p != x.len()) {
                return Err(Error::Parse(format!("{} has {} nodes, not {}", path.display(), x.len(), a.grid.unwrap())));
            }
            x
        }
        (None, Some(spec)) => make_curve(spec, a.grid.unwrap_or(DEFAULT_GRID), a.seed)?,
        (None, None) => return Err(Error::Parse("a curve is required (--curve or --make)".into())),
    };
    if let Some(json) = &a.ambient {
        let space: AmbientSpace = serde_json::from_str(json).map_err(|e| Error::Parse(format!("--ambient: {e}")))?;
        space.validate()?;
        if space != x.space() {
            return Err(Error::Parse(format!("curve lives in {:?}, not {space:?}", x.space())));
        }
    }
    Ok(x)
}

fn load_curve(a: &CurveArgs) -> Result<Embedding, Error> {
    load(&a.curve, &a.make, a)
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, text).map_err(io_failure),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("report serializes") + "\n"
}

#[derive(Serialize)]
struct ValidateReport {
    embedding: bool,
    min_speed: f64,
    separation: f64,
    reach: f64,
}

pub fn cmd_validate(a: &CurveArgs) -> Result<(), Failure> {
    let x = load_curve(a)?;
    let report = ValidateReport {
        embedding: is_embedding(&x),
        min_speed: x.min_speed(),
        separation: separation(&x),
        reach: reach_estimate(&x),
    };
    emit(&a.output, &to_json(&report))?;
    if report.embedding {
        Ok(())
    } else {
        Err(Error::NotEmbedding {
            min_speed: report.min_speed,
            separation: report.separation,
        }
        .into())
    }
}

#[derive(Serialize)]
struct RoundtripReport {
    rho: f64,
    section_sup_norm: f64,
    reversed: bool,
    reparam_min_slope: f64,
    reparam_max_slope: f64,
    reparam_max_shift: f64,
    image_distance: f64,
}

/// Tolerance on the reconstruction distance for a successful round trip.
pub const ROUNDTRIP_TOL: f64 = 1e-6;

pub fn cmd_roundtrip(a: &RoundtripArgs) -> Result<(), Failure> {
    let center = load(&a.center, &a.center_make, &a.curve)?;
    let y = load_curve(&a.curve)?;
    let c = make_chart(&center)?;
    let inv = chart_invert(&c, &y)?;
    let rebuilt = chart_apply(&c, &inv.section)?;
    let slopes = inv.reparam.slopes();
    let report = RoundtripReport {
        rho: c.rho,
        section_sup_norm: inv.section.sup_norm(),
        reversed: inv.reversed,
        reparam_min_slope: slopes.iter().copied().fold(f64::INFINITY, f64::min),
        reparam_max_slope: slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        reparam_max_shift: inv.reparam.max_shift(),
        image_distance: image_distance(&rebuilt, &y)?,
    };
    emit(&a.curve.output, &to_json(&report))?;
    if report.image_distance <= ROUNDTRIP_TOL {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: format!("reconstruction is {:.3e} away from the input", report.image_distance),
        })
    }
}

fn parse_functional(s: &str) -> Result<Functional, Error> {
    s.parse()
}

pub fn cmd_minimize(a: &MinimizeArgs) -> Result<(), Failure> {
    let f = parse_functional(&a.functional)?;
    let x0 = load_curve(&a.curve)?;
    if !(a.tol > 0.0) {
        return Err(Error::Parse("--tol must be positive".into()).into());
    }
    let opts = SolveOptions {
        max_iter: a.max_iter,
        grad_tol: a.tol,
        newton: a.newton,
        ..SolveOptions::default()
    };
    let (c, u, trace) = minimize(&f, &x0, &opts)?;
    emit(&a.curve.output, &trace.to_csv())?;
    let x = chart_apply(&c, &u)?;
    if let Some(path) = &a.save_curve {
        write_curve(path, &x).map_err(io_failure)?;
    }
    let last = trace.last().expect("trace has an initial record");
    eprintln!(
        "{} after {} iterations: f = {:.12}, gradient norm = {:.3e}",
        if trace.converged { "converged" } else { "stopped" },
        last.iter,
        evaluate(&f, &x)?,
        last.grad_norm
    );
    if trace.converged {
        Ok(())
    } else {
        Err(Failure {
            code: 5,
            message: format!("no convergence within {} iterations", a.max_iter),
        })
    }
}

pub fn cmd_spectrum(a: &SpectrumArgs) -> Result<(), Failure> {
    let f = parse_functional(&a.functional)?;
    let x = load_curve(&a.curve)?;
    let c = make_chart(&x)?;
    let eig = spectrum(&f, &c, a.k)?;
    let mut csv = String::from("index,eigenvalue\n");
    for (i, v) in eig.iter().enumerate() {
        csv.push_str(&format!("{i},{v:.17e}\n"));
    }
    emit(&a.curve.output, &csv)
}

pub fn cmd_orbit(a: &CurveArgs) -> Result<(), Failure> {
    let x = load_curve(a)?;
    let c = make_chart(&x)?;
    let basis = KillingBasis::standard(x.space(), None)?;
    emit(&a.output, &to_json(&orbit_rank(&c, &basis)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_specs() {
        let x = make_curve("circle:r=2,cx=1", 32, 0).unwrap();
        assert!((x.coord(0)[0] - 3.0).abs() < 1e-15);
        assert_eq!(make_curve("great-circle", 16, 0).unwrap().space(), AmbientSpace::sphere2());
        let a = make_curve("torus-geodesic:amp=0.1", 32, 7).unwrap();
        let b = make_curve("torus-geodesic:amp=0.1", 32, 7).unwrap();
        let c = make_curve("torus-geodesic:amp=0.1", 32, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.winding(), &[1, 0]);
        for bad in ["square", "circle:r", "circle:r=x", "ellipse:r=1", "perturbed-circle:kmax=2.5"] {
            assert!(matches!(make_curve(bad, 32, 0), Err(Error::Parse(_))), "{bad}");
        }
        assert!(make_curve("circle", 15, 0).is_err());
    }

    #[test]
    fn wiggle_matches_generator() {
        let a = make_curve("torus-geodesic:offset=0.2,wiggle=0.05", 32, 3).unwrap();
        let b = generators::torus_geodesic(32, 0.2, 0.05);
        assert!(a.flat().iter().zip(b.flat()).all(|(p, q)| (p - q).abs() < 1e-15));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::from(Error::Parse("x".into())).code, 2);
        assert_eq!(Failure::from(Error::InvalidGrid(3)).code, 2);
        let ne = Error::NotEmbedding {
            min_speed: 0.0,
            separation: 0.0,
        };
        assert_eq!(Failure::from(ne).code, 3);
        let ot = Error::OutsideTube {
            distance: 1.0,
            rho: 0.5,
        };
        assert_eq!(Failure::from(ot).code, 4);
        assert_eq!(Failure::from(Error::SingularSystem).code, 1);
    }
}
