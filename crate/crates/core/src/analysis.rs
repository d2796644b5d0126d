//! BER curves, fits of the linear regime `B = C(β)·N` and of the coefficient
//! law `log₁₀ C = a + b|β|²`, and dephasing statistics of one regenerator
//! pass.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::fock::{apply_kernel, coherent_number_distribution, PhotonNumberDistribution};
use crate::par;
use crate::regen::{
    composite_step_kernel, default_dim, iterate_chain, optimal_config, output_components,
    ChainConfig, ComponentMixture,
};

/// Default fit window for the linear regime.
pub const DEFAULT_WINDOW: (usize, usize) = (50, 200);

/// Reference coefficient law, `log₁₀ C = −0.44 − 0.0356·|β|²`.
pub const REFERENCE_INTERCEPT: f64 = -0.44;
pub const REFERENCE_INTERCEPT_ERR: f64 = 0.02;
pub const REFERENCE_SLOPE: f64 = -0.0356;
pub const REFERENCE_SLOPE_ERR: f64 = 0.0001;

/// BER of a line of ideal photon-number amplifiers at gain 2. A fixed
/// comparison value; not computed here.
pub const PHOTON_NUMBER_AMPLIFIER_BER: f64 = 3.4e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BerPoint {
    pub n: usize,
    pub ber: f64,
    pub deficit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerSeries {
    pub beta_level: Complex64,
    pub eta: f64,
    pub dim: usize,
    pub points: Vec<BerPoint>,
    /// Points whose deficit exceeded the allowed fraction of the BER.
    pub truncation_flags: Vec<usize>,
}

impl BerSeries {
    pub fn ber_at(&self, n: usize) -> Option<f64> {
        self.points.iter().find(|p| p.n == n).map(|p| p.ber)
    }

    pub fn max_deficit(&self) -> f64 {
        self.points.iter().map(|p| p.deficit).fold(0.0, f64::max)
    }
}

/// BER after `N = 1..=n_max` repeaters at the optimal working point.
pub fn ber_curve(beta: Complex64, n_max: usize, dim: Option<usize>, eta: f64) -> Result<BerSeries> {
    if n_max == 0 {
        return Err(domain("n_max must be at least 1"));
    }
    let chain = ChainConfig::uniform(beta, eta, n_max, dim)?;
    let res = iterate_chain(&chain)?;
    let points = res
        .ber_series
        .iter()
        .zip(&res.deficit_series)
        .enumerate()
        .map(|(k, (&ber, &deficit))| BerPoint {
            n: k + 1,
            ber,
            deficit,
        })
        .collect();
    Ok(BerSeries {
        beta_level: beta,
        eta,
        dim: chain.dim,
        points,
        truncation_flags: res.truncation_flags,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub coefficient: f64,
    pub window: (usize, usize),
    pub max_relative_residual: f64,
}

/// Relative least squares through the origin over `window` (inclusive):
/// minimizes `Σ (B(N) − C·N)² / (C·N)²`, which gives
/// `C = Σ r² / Σ r` with `r = B(N)/N`.
pub fn fit_linear_regime(series: &BerSeries, window: (usize, usize)) -> Result<LinearFit> {
    let (lo, hi) = window;
    if lo == 0 || lo > hi {
        return Err(Error::Fit(format!("invalid window ({lo}, {hi})")));
    }
    let pts: Vec<&BerPoint> = series
        .points
        .iter()
        .filter(|p| p.n >= lo && p.n <= hi)
        .collect();
    if pts.len() != hi - lo + 1 {
        return Err(Error::Fit(format!(
            "window ({lo}, {hi}) is not covered by the series"
        )));
    }
    if pts.iter().any(|p| !(p.ber > 0.0)) {
        return Err(Error::Fit("zero BER inside the fit window".into()));
    }
    if pts.windows(2).any(|w| w[1].ber < w[0].ber) {
        return Err(Error::Fit("BER is not monotone inside the fit window".into()));
    }
    let ratios: Vec<f64> = pts.iter().map(|p| p.ber / p.n as f64).collect();
    let s1 = crate::sum::sum(ratios.iter().copied());
    let s2 = crate::sum::sum(ratios.iter().map(|r| r * r));
    let coefficient = s2 / s1;
    let max_relative_residual = ratios
        .iter()
        .map(|r| (r / coefficient - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(LinearFit {
        coefficient,
        window,
        max_relative_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientLawFit {
    pub intercept: f64,
    /// Per unit `|β|²`.
    pub slope: f64,
    /// `log₁₀ C − (a + b|β|²)` per input pair.
    pub residuals: Vec<f64>,
}

/// Ordinary least squares of `log₁₀ C` against `|β|²`.
pub fn fit_coefficient_law(pairs: &[(f64, f64)]) -> Result<CoefficientLawFit> {
    if pairs.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 (|beta|^2, C) pairs, got {}",
            pairs.len()
        )));
    }
    if pairs.iter().any(|(_, c)| !(*c > 0.0 && c.is_finite())) {
        return Err(Error::Fit("coefficients must be positive".into()));
    }
    let mut xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    if xs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Fit("|beta|^2 values must be distinct".into()));
    }
    let n = pairs.len() as f64;
    let x_mean = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.log10()).collect();
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxy: f64 = pairs
        .iter()
        .zip(&ys)
        .map(|(p, y)| (p.0 - x_mean) * (y - y_mean))
        .sum();
    let sxx: f64 = pairs.iter().map(|p| (p.0 - x_mean).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let residuals = pairs
        .iter()
        .zip(&ys)
        .map(|(p, y)| y - (intercept + slope * p.0))
        .collect();
    Ok(CoefficientLawFit {
        intercept,
        slope,
        residuals,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub beta: f64,
    pub fit: LinearFit,
    /// BER and deficit at the last step.
    pub final_point: BerPoint,
    pub truncation_flags: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    pub law: CoefficientLawFit,
}

/// BER curves for several real input amplitudes (run in parallel), a
/// linear-regime fit per curve, and the coefficient law across them.
pub fn sweep_fit(
    betas: &[f64],
    n_max: usize,
    window: (usize, usize),
    eta: f64,
    dim: Option<usize>,
) -> Result<SweepReport> {
    if betas.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 input amplitudes, got {}",
            betas.len()
        )));
    }
    let entries: Vec<Result<SweepEntry>> = par::map_slice(betas, |&beta| {
        let series = ber_curve(Complex64::new(beta, 0.0), n_max, dim, eta)?;
        let fit = fit_linear_regime(&series, window)?;
        Ok(SweepEntry {
            beta,
            fit,
            final_point: *series.points.last().expect("n_max >= 1"),
            truncation_flags: series.truncation_flags,
        })
    });
    let entries = entries.into_iter().collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(f64, f64)> = entries
        .iter()
        .map(|e| (e.beta * e.beta, e.fit.coefficient))
        .collect();
    let law = fit_coefficient_law(&pairs)?;
    Ok(SweepReport { entries, law })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DephasingStats {
    /// `Δ² = π²/(4|β|²)`, radians².
    pub delta_sq: f64,
    /// `|α|² e^{−Δ²}`.
    pub predicted_mean_photons: f64,
    /// `1/|α|² + Δ²`, radians².
    pub predicted_phase_variance: f64,
}

/// Gaussian-dephasing approximation of a regenerator output.
pub fn dephasing_stats(beta: Complex64, ll_mean: f64) -> Result<DephasingStats> {
    let beta_sq = beta.norm_sqr();
    if !(beta_sq > 0.0) {
        return Err(domain("input level must be non-zero"));
    }
    if !(ll_mean > 0.0) {
        return Err(domain("local-laser mean photon number must be positive"));
    }
    let delta_sq = PI * PI / (4.0 * beta_sq);
    Ok(DephasingStats {
        delta_sq,
        predicted_mean_photons: ll_mean * (-delta_sq).exp(),
        predicted_phase_variance: 1.0 / ll_mean + delta_sq,
    })
}

/// Weighted variance of the component phases about their circular mean.
/// Components with zero amplitude carry no phase and are skipped.
pub fn component_phase_variance(mix: &ComponentMixture) -> Result<f64> {
    let phased: Vec<(f64, f64)> = mix
        .components
        .iter()
        .filter(|(w, a)| *w > 0.0 && a.norm_sqr() > 0.0)
        .map(|(w, a)| (*w, a.arg()))
        .collect();
    if phased.is_empty() {
        return Err(domain("mixture has no component with a defined phase"));
    }
    let total = crate::sum::sum(phased.iter().map(|p| p.0));
    let sx = crate::sum::sum(phased.iter().map(|(w, t)| w * t.cos()));
    let sy = crate::sum::sum(phased.iter().map(|(w, t)| w * t.sin()));
    let center = sy.atan2(sx);
    let wrap = |d: f64| (d + PI).rem_euclid(2.0 * PI) - PI;
    let var = crate::sum::sum(phased.iter().map(|(w, t)| w * wrap(t - center).powi(2)));
    Ok(var / total)
}

/// Number distribution after one repeater + loss step on `|β⟩`.
pub fn one_step_distribution(beta: Complex64, dim: Option<usize>) -> Result<PhotonNumberDistribution> {
    let dim = dim.unwrap_or_else(|| default_dim(beta.norm_sqr()));
    let input = coherent_number_distribution(beta.norm_sqr(), dim)?;
    let kernel = composite_step_kernel(beta, 1.0, dim)?;
    apply_kernel(&kernel, &input)
}

/// Coherent-component mixture emitted by the first repeater for input `|β⟩`
/// (after loss, i.e. with local-laser amplitude `−iβ`).
pub fn one_step_mixture(beta: Complex64, dim: Option<usize>) -> Result<ComponentMixture> {
    let dim = dim.unwrap_or_else(|| default_dim(beta.norm_sqr()));
    let input = coherent_number_distribution(beta.norm_sqr(), dim)?;
    let cfg = optimal_config(beta, 1.0)?;
    Ok(output_components(&input, &cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(c: f64, n_max: usize) -> BerSeries {
        BerSeries {
            beta_level: Complex64::new(1.0, 0.0),
            eta: 1.0,
            dim: 1,
            points: (1..=n_max)
                .map(|n| BerPoint {
                    n,
                    ber: c * n as f64,
                    deficit: 0.0,
                })
                .collect(),
            truncation_flags: vec![],
        }
    }

    #[test]
    fn linear_fit_on_exact_line() {
        let fit = fit_linear_regime(&synthetic(3e-15, 200), (50, 200)).unwrap();
        assert!((fit.coefficient / 3e-15 - 1.0).abs() < 1e-15);
        assert!(fit.max_relative_residual < 1e-14);
    }

    #[test]
    fn linear_fit_single_point_window() {
        let mut s = synthetic(1e-10, 10);
        s.points[6].ber = 5e-9;
        s.points[7].ber = 5e-9;
        s.points[8].ber = 5e-9;
        s.points[9].ber = 5e-9;
        let fit = fit_linear_regime(&s, (7, 7)).unwrap();
        assert_eq!(fit.coefficient, 5e-9 / 7.0);
        assert_eq!(fit.max_relative_residual, 0.0);
    }

    #[test]
    fn linear_fit_errors() {
        let s = synthetic(1e-10, 10);
        assert!(fit_linear_regime(&s, (5, 11)).is_err());
        assert!(fit_linear_regime(&s, (0, 3)).is_err());
        assert!(fit_linear_regime(&s, (6, 5)).is_err());
        let mut z = s.clone();
        z.points[4].ber = 0.0;
        assert!(fit_linear_regime(&z, (3, 8)).is_err());
        let mut dip = s;
        dip.points[4].ber = 1e-12;
        assert!(fit_linear_regime(&dip, (3, 8)).is_err());
    }

    #[test]
    fn coefficient_law_round_trip() {
        let pairs: Vec<(f64, f64)> = (17..=22)
            .map(|b| {
                let x = (b * b) as f64;
                (x, 10f64.powf(-0.44 - 0.0356 * x))
            })
            .collect();
        let fit = fit_coefficient_law(&pairs).unwrap();
        assert!((fit.intercept + 0.44).abs() < 1e-12);
        assert!((fit.slope + 0.0356).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn coefficient_law_errors() {
        let three = [(1.0, 0.1), (2.0, 0.01), (3.0, 0.001)];
        assert!(fit_coefficient_law(&three).is_err());
        let dup = [(1.0, 0.1), (1.0, 0.01), (3.0, 0.001), (4.0, 1e-4)];
        assert!(fit_coefficient_law(&dup).is_err());
        let neg = [(1.0, 0.1), (2.0, -0.01), (3.0, 0.001), (4.0, 1e-4)];
        assert!(fit_coefficient_law(&neg).is_err());
    }

    #[test]
    fn dephasing_examples() {
        let s = dephasing_stats(Complex64::new(20.0, 0.0), 400.0).unwrap();
        assert!((s.delta_sq - PI * PI / 1600.0).abs() < 1e-18);
        assert!((s.delta_sq - 6.1685e-3).abs() < 1e-7);
        assert!((s.predicted_mean_photons - 397.54).abs() < 0.01);
        assert!((s.predicted_phase_variance - 8.6685e-3).abs() < 1e-7);
        assert!(s.predicted_mean_photons <= 400.0);
        assert!(dephasing_stats(Complex64::new(0.0, 0.0), 400.0).is_err());
    }

    #[test]
    fn phase_variance_definition() {
        let one = ComponentMixture {
            components: vec![(1.0, Complex64::from_polar(3.0, 1.2))],
            deficit: 0.0,
        };
        assert_eq!(component_phase_variance(&one).unwrap(), 0.0);

        let theta = 0.01;
        let two = ComponentMixture {
            components: vec![
                (0.5, Complex64::from_polar(2.0, theta)),
                (0.5, Complex64::from_polar(2.0, -theta)),
            ],
            deficit: 0.0,
        };
        assert!((component_phase_variance(&two).unwrap() - 1e-4).abs() < 1e-8);

        // straddling the branch cut at ±π
        let cut = ComponentMixture {
            components: vec![
                (0.5, Complex64::from_polar(1.0, PI - theta)),
                (0.5, Complex64::from_polar(1.0, -PI + theta)),
            ],
            deficit: 0.0,
        };
        assert!((component_phase_variance(&cut).unwrap() - 1e-4).abs() < 1e-8);

        let vac = ComponentMixture {
            components: vec![(1.0, Complex64::new(0.0, 0.0))],
            deficit: 0.0,
        };
        assert!(component_phase_variance(&vac).is_err());
    }

    #[test]
    fn ber_curve_rejects_zero_length() {
        assert!(ber_curve(Complex64::new(3.0, 0.0), 0, None, 1.0).is_err());
    }
}
