use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use clap::Args;
use serde::Serialize;
use serde_json::json;

use regenline::analysis::{
    self, ber_curve as core_ber_curve, fit_coefficient_law, BerSeries, SweepReport,
    PHOTON_NUMBER_AMPLIFIER_BER, REFERENCE_INTERCEPT, REFERENCE_INTERCEPT_ERR, REFERENCE_SLOPE,
    REFERENCE_SLOPE_ERR,
};
use regenline::regen::default_dim;
use regenline::wigner;
use regenline::{
    coherent_number_distribution, iterate_chain, optimal_config, output_components, ChainConfig,
    Complex64,
};

use crate::config::ConfigFile;
use crate::error::CliError;
use crate::output::{emit, sci, Format, RunManifest};
use crate::{init_threads, Common};

const COMMON_KEYS: [&str; 4] = ["threads", "format", "out", "allow-truncation-risk"];

/// Acceptance band for the fitted law intercept.
const INTERCEPT_RANGE: (f64, f64) = (-0.50, -0.38);
/// Acceptance band for the fitted law slope.
const SLOPE_RANGE: (f64, f64) = (-0.0366, -0.0346);

fn keys(extra: &[&'static str]) -> Vec<&'static str> {
    COMMON_KEYS.iter().chain(extra).copied().collect()
}

/// `lo,hi` pair of integers or reals.
#[derive(Debug, Clone, Copy)]
pub struct Pair<T>(pub T, pub T);

impl<T: FromStr> FromStr for Pair<T> {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(',').ok_or_else(|| format!("expected lo,hi, got '{s}'"))?;
        let parse = |x: &str| x.trim().parse::<T>().map_err(|_| format!("bad number '{x}'"));
        Ok(Pair(parse(a)?, parse(b)?))
    }
}

/// Comma-separated list of reals.
#[derive(Debug, Clone)]
pub struct List(pub Vec<f64>);

impl FromStr for List {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad number '{x}'")))
            .collect::<Result<_, _>>()
            .map(List)
    }
}

/// `N` or `NxM` grid points.
#[derive(Debug, Clone, Copy)]
pub struct GridSize(pub usize, pub usize);

impl FromStr for GridSize {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |x: &str| x.trim().parse::<usize>().map_err(|_| format!("bad grid size '{s}'"));
        match s.split_once(['x', 'X']) {
            Some((a, b)) => Ok(GridSize(parse(a)?, parse(b)?)),
            None => {
                let n = parse(s)?;
                Ok(GridSize(n, n))
            }
        }
    }
}

fn require_beta(beta: Option<f64>) -> Result<f64, CliError> {
    let beta = beta.ok_or_else(|| CliError::Usage("--beta is required".into()))?;
    if !(beta.is_finite() && beta != 0.0) {
        return Err(CliError::Usage(format!("--beta must be finite and non-zero, got {beta}")));
    }
    Ok(beta)
}

fn require_eta(eta: f64) -> Result<f64, CliError> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(CliError::Usage(format!("--eta must lie in (0, 1], got {eta}")));
    }
    Ok(eta)
}

fn require_window(w: Pair<usize>, n_max: usize) -> Result<(usize, usize), CliError> {
    if w.0 == 0 || w.0 >= w.1 || w.1 > n_max {
        return Err(CliError::Usage(format!(
            "--window {},{} must satisfy 1 <= lo < hi <= n-max ({n_max})",
            w.0, w.1
        )));
    }
    Ok((w.0, w.1))
}

fn truncation_guard(flags: &[usize], allow: bool, what: &str) -> Result<(), CliError> {
    if flags.is_empty() || allow {
        return Ok(());
    }
    Err(CliError::Truncation(format!(
        "{what}: deficit exceeds 1% of the BER at N = {:?}; raise --dim or pass --allow-truncation-risk",
        flags
    )))
}

#[derive(Args, Debug)]
pub struct BerCurveArgs {
    #[command(flatten)]
    common: Common,
    /// Real input amplitude β.
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Number of repeaters.
    #[arg(long)]
    n_max: Option<usize>,
    /// Photon-number truncation (default grows with |β|²).
    #[arg(long)]
    dim: Option<usize>,
    /// Segment transmissivity.
    #[arg(long)]
    eta: Option<f64>,
}

pub fn ber_curve(a: BerCurveArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(a.common.config.as_deref(), &keys(&["beta", "n-max", "dim", "eta"]))?;
    init_threads(cfg.resolve(a.common.threads, "threads")?)?;
    let format = cfg.resolve_or(a.common.format, "format", Format::Csv)?;
    let out = cfg.resolve(a.common.out.clone(), "out")?;
    let allow = cfg.flag_set(a.common.allow_truncation_risk, "allow-truncation-risk")?;
    let beta = require_beta(cfg.resolve(a.beta, "beta")?)?;
    let n_max = cfg.resolve_or(a.n_max, "n-max", 100)?;
    if n_max == 0 {
        return Err(CliError::Usage("--n-max must be at least 1".into()));
    }
    let eta = require_eta(cfg.resolve_or(a.eta, "eta", 0.5)?)?;
    let dim = cfg.resolve(a.dim, "dim")?;

    let start = Instant::now();
    let series = core_ber_curve(Complex64::new(beta, 0.0), n_max, dim, eta)?;
    truncation_guard(&series.truncation_flags, allow, "ber-curve")?;

    let mut m = RunManifest::new("ber-curve");
    m.param("beta", beta)
        .param("n-max", n_max)
        .param("eta", eta)
        .param("format", format.name())
        .param("truncation-flags", &series.truncation_flags);
    m.truncation_dim = Some(series.dim);
    m.max_deficit = Some(series.max_deficit());

    let body = match format {
        Format::Csv => ber_csv(&m, &series),
        Format::Json => {
            let v = json!({ "manifest": &m, "points": &series.points });
            serde_json::to_string_pretty(&v)? + "\n"
        }
    };
    emit(out.as_deref(), &body, &m, start.elapsed())
}

fn ber_csv(m: &RunManifest, series: &BerSeries) -> String {
    let mut s = m.header_line();
    s.push_str("N,ber,deficit\n");
    for p in &series.points {
        let _ = writeln!(s, "{},{},{}", p.n, sci(p.ber), sci(p.deficit));
    }
    s
}

#[derive(Args, Debug)]
pub struct SweepFitArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated real input amplitudes (at least four).
    #[arg(long)]
    betas: Option<List>,
    #[arg(long)]
    n_max: Option<usize>,
    /// Repeater range `lo,hi` used for the linear-regime fit.
    #[arg(long)]
    window: Option<Pair<usize>>,
    #[arg(long)]
    eta: Option<f64>,
    /// Fixed truncation for every level (default grows with |β|²).
    #[arg(long)]
    dim: Option<usize>,
    /// Fit an exactly log-linear synthetic law instead of simulating.
    #[arg(long)]
    self_test: bool,
}

#[derive(Serialize)]
struct SweepRow {
    beta: f64,
    coefficient: f64,
    log10_coefficient: f64,
    law_residual: f64,
    max_relative_residual: f64,
    window: (usize, usize),
    n_max: usize,
    ber_at_n_max: f64,
    deficit_at_n_max: f64,
    truncation_dim: usize,
    truncation_flags: Vec<usize>,
}

pub fn sweep_fit(a: SweepFitArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(
        a.common.config.as_deref(),
        &keys(&["betas", "n-max", "window", "eta", "dim", "self-test"]),
    )?;
    init_threads(cfg.resolve(a.common.threads, "threads")?)?;
    let format = cfg.resolve_or(a.common.format, "format", Format::Json)?;
    let out = cfg.resolve(a.common.out.clone(), "out")?;
    let allow = cfg.flag_set(a.common.allow_truncation_risk, "allow-truncation-risk")?;
    let betas = cfg
        .resolve(a.betas, "betas")?
        .map(|l| l.0)
        .unwrap_or_else(|| (17..=22).map(f64::from).collect());
    if betas.len() < 4 {
        return Err(CliError::Usage(format!(
            "--betas needs at least 4 levels to fit the law, got {}",
            betas.len()
        )));
    }
    if let Some(b) = betas.iter().find(|b| !(b.is_finite() && **b != 0.0)) {
        return Err(CliError::Usage(format!("input levels must be finite and non-zero, got {b}")));
    }
    if cfg.flag_set(a.self_test, "self-test")? {
        return sweep_self_test(&betas, out.as_deref());
    }
    let n_max = cfg.resolve_or(a.n_max, "n-max", 200)?;
    if n_max == 0 {
        return Err(CliError::Usage("--n-max must be at least 1".into()));
    }
    let window = require_window(
        cfg.resolve_or(a.window, "window", Pair(analysis::DEFAULT_WINDOW.0, analysis::DEFAULT_WINDOW.1))?,
        n_max,
    )?;
    let eta = require_eta(cfg.resolve_or(a.eta, "eta", 0.5)?)?;
    let dim = cfg.resolve(a.dim, "dim")?;

    let start = Instant::now();
    let report = analysis::sweep_fit(&betas, n_max, window, eta, dim)?;
    let flagged: Vec<usize> = report
        .entries
        .iter()
        .flat_map(|e| e.truncation_flags.iter().copied())
        .collect();
    truncation_guard(&flagged, allow, "sweep-fit")?;

    let rows = sweep_rows(&report, n_max, dim);
    let mut m = RunManifest::new("sweep-fit");
    m.param("betas", &betas)
        .param("n-max", n_max)
        .param("window", window)
        .param("eta", eta)
        .param("format", format.name());
    m.truncation_dim = rows.iter().map(|r| r.truncation_dim).max();
    m.max_deficit = Some(rows.iter().map(|r| r.deficit_at_n_max).fold(0.0, f64::max));

    let law = &report.law;
    let body = match format {
        Format::Json => {
            let v = json!({
                "manifest": &m,
                "entries": &rows,
                "law": { "intercept": law.intercept, "slope": law.slope },
                "reference": reference_block(law.intercept, law.slope),
            });
            serde_json::to_string_pretty(&v)? + "\n"
        }
        Format::Csv => {
            let mut s = m.header_line();
            let _ = writeln!(s, "# law intercept={} slope={}", sci(law.intercept), sci(law.slope));
            s.push_str("beta,coefficient,log10_coefficient,law_residual,ber_at_n_max,deficit_at_n_max\n");
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    sci(r.beta),
                    sci(r.coefficient),
                    sci(r.log10_coefficient),
                    sci(r.law_residual),
                    sci(r.ber_at_n_max),
                    sci(r.deficit_at_n_max)
                );
            }
            s
        }
    };
    emit(out.as_deref(), &body, &m, start.elapsed())
}

fn sweep_rows(report: &SweepReport, n_max: usize, dim: Option<usize>) -> Vec<SweepRow> {
    report
        .entries
        .iter()
        .zip(&report.law.residuals)
        .map(|(e, &res)| SweepRow {
            beta: e.beta,
            coefficient: e.fit.coefficient,
            log10_coefficient: e.fit.coefficient.log10(),
            law_residual: res,
            max_relative_residual: e.fit.max_relative_residual,
            window: e.fit.window,
            n_max,
            ber_at_n_max: e.final_point.ber,
            deficit_at_n_max: e.final_point.deficit,
            truncation_dim: dim.unwrap_or_else(|| default_dim(e.beta * e.beta)),
            truncation_flags: e.truncation_flags.clone(),
        })
        .collect()
}

fn reference_block(a: f64, b: f64) -> serde_json::Value {
    let inside = |x: f64, (lo, hi): (f64, f64)| x >= lo && x <= hi;
    json!({
        "intercept": REFERENCE_INTERCEPT,
        "intercept_err": REFERENCE_INTERCEPT_ERR,
        "slope": REFERENCE_SLOPE,
        "slope_err": REFERENCE_SLOPE_ERR,
        "intercept_range": INTERCEPT_RANGE,
        "slope_range": SLOPE_RANGE,
        "intercept_within_range": inside(a, INTERCEPT_RANGE),
        "slope_within_range": inside(b, SLOPE_RANGE),
        "photon_number_amplifier_ber": PHOTON_NUMBER_AMPLIFIER_BER,
    })
}

/// Feed `C = 10^(a + b|β|²)` with the reference law through the fitter.
fn sweep_self_test(betas: &[f64], out: Option<&std::path::Path>) -> Result<(), CliError> {
    let start = Instant::now();
    let pairs: Vec<(f64, f64)> = betas
        .iter()
        .map(|b| {
            let x = b * b;
            (x, 10f64.powf(REFERENCE_INTERCEPT + REFERENCE_SLOPE * x))
        })
        .collect();
    let law = fit_coefficient_law(&pairs)?;
    let da = (law.intercept - REFERENCE_INTERCEPT).abs();
    let db = (law.slope - REFERENCE_SLOPE).abs();
    let passed = da <= 1e-12 && db <= 1e-12;

    let mut m = RunManifest::new("sweep-fit --self-test");
    m.param("betas", betas);
    let v = json!({
        "manifest": &m,
        "injected": { "intercept": REFERENCE_INTERCEPT, "slope": REFERENCE_SLOPE },
        "recovered": { "intercept": law.intercept, "slope": law.slope },
        "abs_error": { "intercept": da, "slope": db },
        "tolerance": 1e-12,
        "passed": passed,
    });
    emit(out, &(serde_json::to_string_pretty(&v)? + "\n"), &m, start.elapsed())?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "law fit did not recover the injected coefficients (|da| = {da:e}, |db| = {db:e})"
        )))
    }
}

#[derive(Args, Debug)]
pub struct WignerArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Show the state emitted by this repeater.
    #[arg(long)]
    steps: Option<usize>,
    /// Grid points, `N` or `NxM` (re x im).
    #[arg(long)]
    grid: Option<GridSize>,
    #[arg(long, allow_hyphen_values = true)]
    re_range: Option<Pair<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    im_range: Option<Pair<f64>>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
}

pub fn wigner(a: WignerArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(
        a.common.config.as_deref(),
        &keys(&["beta", "steps", "grid", "re-range", "im-range", "eta", "dim"]),
    )?;
    init_threads(cfg.resolve(a.common.threads, "threads")?)?;
    let format = cfg.resolve_or(a.common.format, "format", Format::Csv)?;
    let out = cfg.resolve(a.common.out.clone(), "out")?;
    let allow = cfg.flag_set(a.common.allow_truncation_risk, "allow-truncation-risk")?;
    let beta = require_beta(cfg.resolve(a.beta, "beta")?)?;
    let steps = cfg.resolve_or(a.steps, "steps", 1)?;
    if steps == 0 {
        return Err(CliError::Usage("--steps must be at least 1".into()));
    }
    let GridSize(re_points, im_points) = cfg.resolve_or(a.grid, "grid", GridSize(161, 161))?;
    let eta = require_eta(cfg.resolve_or(a.eta, "eta", 0.5)?)?;
    let beta_c = Complex64::new(beta, 0.0);
    let dim = cfg.resolve_or(a.dim, "dim", default_dim(beta * beta))?;

    let start = Instant::now();
    let (input, flags) = if steps == 1 {
        (coherent_number_distribution(beta * beta, dim)?, Vec::new())
    } else {
        let chain = ChainConfig::uniform(beta_c, eta, steps - 1, Some(dim))?;
        let res = iterate_chain(&chain)?;
        (res.final_distribution, res.truncation_flags)
    };
    truncation_guard(&flags, allow, "wigner")?;
    let mix = output_components(&input, &optimal_config(beta_c, 1.0)?);

    let mut spec = wigner::default_grid_spec(&mix, re_points.max(wigner::MIN_RESOLUTION))?;
    spec.re_points = re_points;
    spec.im_points = im_points;
    if let Some(Pair(lo, hi)) = cfg.resolve(a.re_range, "re-range")? {
        spec.re_range = (lo, hi);
    }
    if let Some(Pair(lo, hi)) = cfg.resolve(a.im_range, "im-range")? {
        spec.im_range = (lo, hi);
    }
    spec.validate()?;
    let grid = wigner::wigner_of_mixture(&mix, &spec)?;

    let mut m = RunManifest::new("wigner");
    m.param("beta", beta)
        .param("steps", steps)
        .param("eta", eta)
        .param("grid", (re_points, im_points))
        .param("re-range", spec.re_range)
        .param("im-range", spec.im_range)
        .param("convention", wigner::CONVENTION)
        .param("integral", grid.integral())
        .param("min-value", grid.min_value())
        .param("format", format.name());
    m.truncation_dim = Some(dim);
    m.max_deficit = Some(mix.deficit);

    let body = match format {
        Format::Csv => {
            let mut s = m.header_line();
            s.push_str("re,im,w\n");
            for (x, y, w) in grid.triples() {
                let _ = writeln!(s, "{},{},{}", sci(x), sci(y), sci(w));
            }
            s
        }
        Format::Json => {
            let v = json!({
                "manifest": &m,
                "re_axis": &grid.re_axis,
                "im_axis": &grid.im_axis,
                "values": &grid.values,
            });
            serde_json::to_string(&v)? + "\n"
        }
    };
    emit(out.as_deref(), &body, &m, start.elapsed())
}
