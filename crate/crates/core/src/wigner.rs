//! Wigner functions of coherent-state mixtures on a rectangular grid.
//!
//! Convention ("coh-plane-2pi"): coordinates are the complex coherent
//! amplitude `z`, `∫ W d²z = 1`, and a coherent state `|γ⟩` has
//! `W(z) = (2/π)·exp(−2|z − γ|²)`, i.e. a Gaussian of standard deviation ½
//! per axis peaking at `2/π`.

use std::f64::consts::{FRAC_2_PI, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::par;
use crate::regen::ComponentMixture;

pub const CONVENTION: &str = "coh-plane-2pi";

/// Per-axis standard deviation of a coherent state in this convention.
pub const COHERENT_SIGMA: f64 = 0.5;

/// Minimum grid points per axis.
pub const MIN_RESOLUTION: usize = 16;

/// Components lighter than this fraction of the heaviest one are not drawn.
const WEIGHT_CUTOFF: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    pub re_points: usize,
    pub im_points: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.re_points < MIN_RESOLUTION || self.im_points < MIN_RESOLUTION {
            return Err(domain(format!(
                "grid needs at least {MIN_RESOLUTION} points per axis"
            )));
        }
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(self.re_range) || !ok(self.im_range) {
            return Err(domain("grid ranges must be finite with lo < hi"));
        }
        Ok(())
    }
}

/// Components that survive the weight cutoff.
fn kept_components(mix: &ComponentMixture) -> Vec<(f64, Complex64)> {
    let max_w = mix.components.iter().map(|c| c.0).fold(0.0, f64::max);
    mix.components
        .iter()
        .copied()
        .filter(|(w, _)| *w > 0.0 && *w >= WEIGHT_CUTOFF * max_w)
        .collect()
}

/// Window of weighted mean ± 6·(weighted std + ½) per axis.
pub fn default_grid_spec(mix: &ComponentMixture, resolution: usize) -> Result<GridSpec> {
    let comps = kept_components(mix);
    if comps.is_empty() {
        return Err(domain("empty mixture"));
    }
    let total: f64 = comps.iter().map(|c| c.0).sum();
    let mean_re = comps.iter().map(|(w, z)| w * z.re).sum::<f64>() / total;
    let mean_im = comps.iter().map(|(w, z)| w * z.im).sum::<f64>() / total;
    let var_re = comps.iter().map(|(w, z)| w * (z.re - mean_re).powi(2)).sum::<f64>() / total;
    let var_im = comps.iter().map(|(w, z)| w * (z.im - mean_im).powi(2)).sum::<f64>() / total;
    let half_re = 6.0 * (var_re.sqrt() + COHERENT_SIGMA);
    let half_im = 6.0 * (var_im.sqrt() + COHERENT_SIGMA);
    let spec = GridSpec {
        re_range: (mean_re - half_re, mean_re + half_re),
        im_range: (mean_im - half_im, mean_im + half_im),
        re_points: resolution,
        im_points: resolution,
    };
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSpaceGrid {
    pub re_axis: Vec<f64>,
    pub im_axis: Vec<f64>,
    /// Row-major, one row per `im_axis` entry.
    pub values: Vec<f64>,
}

impl PhaseSpaceGrid {
    pub fn value(&self, i_re: usize, i_im: usize) -> f64 {
        self.values[i_im * self.re_axis.len() + i_re]
    }

    pub fn cell_area(&self) -> f64 {
        let step = |axis: &[f64]| (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
        step(&self.re_axis) * step(&self.im_axis)
    }

    /// Riemann sum `Σ W · cell area`.
    pub fn integral(&self) -> f64 {
        crate::sum::sum(self.values.iter().copied()) * self.cell_area()
    }

    /// `(∫ Re z·W, ∫ Im z·W)` by the same Riemann sum.
    pub fn first_moment(&self) -> (f64, f64) {
        let nre = self.re_axis.len();
        let area = self.cell_area();
        let re = crate::sum::sum(
            self.values
                .iter()
                .enumerate()
                .map(|(i, w)| w * self.re_axis[i % nre]),
        );
        let im = crate::sum::sum(
            self.values
                .iter()
                .enumerate()
                .map(|(i, w)| w * self.im_axis[i / nre]),
        );
        (re * area, im * area)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `(re, im, w)` triples, im-major.
    pub fn triples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let nre = self.re_axis.len();
        self.values
            .iter()
            .enumerate()
            .map(move |(i, w)| (self.re_axis[i % nre], self.im_axis[i / nre], *w))
    }
}

fn linspace((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}

#[inline]
fn eval(comps: &[(f64, Complex64)], z: Complex64) -> f64 {
    let mut acc = crate::sum::NeumaierSum::new();
    for (w, g) in comps {
        acc.add(w * (-2.0 * (z - g).norm_sqr()).exp());
    }
    FRAC_2_PI * acc.total()
}

/// `W(z)` of the mixture at a single point.
pub fn wigner_at(mix: &ComponentMixture, z: Complex64) -> f64 {
    eval(&kept_components(mix), z)
}

/// Evaluate `W(z) = Σ_j w_j (2/π) exp(−2|z − γ_j|²)` on the grid.
pub fn wigner_of_mixture(mix: &ComponentMixture, spec: &GridSpec) -> Result<PhaseSpaceGrid> {
    spec.validate()?;
    let comps = kept_components(mix);
    if comps.is_empty() {
        return Err(domain("empty mixture"));
    }
    let re_axis = linspace(spec.re_range, spec.re_points);
    let im_axis = linspace(spec.im_range, spec.im_points);
    let rows = par::map_range(im_axis.len(), |i| {
        re_axis
            .iter()
            .map(|&x| eval(&comps, Complex64::new(x, im_axis[i])))
            .collect::<Vec<f64>>()
    });
    Ok(PhaseSpaceGrid {
        re_axis,
        im_axis,
        values: rows.concat(),
    })
}

/// Radius maximizing `W` along the ray at angle `phase`, searched in
/// `[r_lo, r_hi]` by golden section. Assumes a single maximum in range.
pub fn ridge_radius(mix: &ComponentMixture, phase: f64, r_lo: f64, r_hi: f64) -> f64 {
    let comps = kept_components(mix);
    let f = |r: f64| eval(&comps, Complex64::from_polar(r, phase));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (r_lo, r_hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-9 * (1.0 + b.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Ridge of the Wigner function: `(phase offset, ridge radius)` for each
/// offset from `center_phase`.
pub fn ridge_profile(
    mix: &ComponentMixture,
    center_phase: f64,
    offsets: &[f64],
    r_lo: f64,
    r_hi: f64,
) -> Vec<(f64, f64)> {
    offsets
        .iter()
        .map(|&o| (o, ridge_radius(mix, center_phase + o, r_lo, r_hi)))
        .collect()
}

/// Peak value of a single coherent state in this convention.
pub fn coherent_peak() -> f64 {
    2.0 / PI
}
