//! Photon-number distributions and column-stochastic transition kernels.
//!
//! A [`PhotonNumberDistribution`] is a probability vector over `n = 0..D`
//! plus a `deficit`: the probability mass known to lie outside the window
//! (truncation tail and flushed underflow). The deficit is never
//! renormalized away; it bounds the error of every stored probability.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::par;
use crate::special::{ln_binomial, ln_poisson};
use crate::sum::{self, NeumaierSum};

/// Tolerance on `Σ probs + deficit − 1`.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Log-probabilities below this are stored as exact zeros.
pub(crate) const LN_UNDERFLOW: f64 = -708.396_418_532_264_1; // ln(f64::MIN_POSITIVE)

/// Relative size at which a tail term no longer moves the tail sum.
const TAIL_EPS: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhotonNumberDistribution {
    probs: Vec<f64>,
    deficit: f64,
}

impl PhotonNumberDistribution {
    /// Validating constructor.
    pub fn new(probs: Vec<f64>, deficit: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty probability vector".into()));
        }
        if let Some((n, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && **p >= 0.0))
        {
            return Err(Error::InvalidDistribution(format!("probs[{n}] = {p}")));
        }
        if !(deficit.is_finite() && deficit >= 0.0) {
            return Err(Error::InvalidDistribution(format!("deficit = {deficit}")));
        }
        let mass = sum::sum(probs.iter().copied()) + deficit;
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "total mass {mass} is not 1"
            )));
        }
        Ok(Self { probs, deficit })
    }

    pub(crate) fn from_parts_unchecked(probs: Vec<f64>, deficit: f64) -> Self {
        Self { probs, deficit }
    }

    pub fn vacuum(dim: usize) -> Self {
        Self::delta(0, dim)
    }

    /// All mass on photon number `n`. Panics if `n >= dim`.
    pub fn delta(n: usize, dim: usize) -> Self {
        assert!(n < dim, "photon number {n} outside window of size {dim}");
        let mut probs = vec![0.0; dim];
        probs[n] = 1.0;
        Self { probs, deficit: 0.0 }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    /// Vacuum probability; with a one-photon threshold this is the BER of a
    /// transmitted one.
    pub fn vacuum_probability(&self) -> f64 {
        self.probs[0]
    }

    /// `Σ probs + deficit`.
    pub fn total_mass(&self) -> f64 {
        sum::sum(self.probs.iter().copied()) + self.deficit
    }

    pub fn mean(&self) -> f64 {
        sum::sum(self.probs.iter().enumerate().map(|(n, p)| n as f64 * p))
    }
}

/// Dense transition matrix `K[m][n] = P(out = m | in = n)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    column_deficits: Vec<f64>,
}

impl TransitionKernel {
    /// Assemble from columns; every column must have length `rows`.
    pub fn from_columns(rows: usize, columns: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let cols = columns.len();
        let mut entries = vec![0.0; rows * cols];
        let mut column_deficits = Vec::with_capacity(cols);
        for (n, (col, def)) in columns.into_iter().enumerate() {
            if col.len() != rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    found: col.len(),
                });
            }
            if col.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || !(def >= 0.0) {
                return Err(Error::InvalidDistribution(format!(
                    "kernel column {n} has a negative or non-finite entry"
                )));
            }
            for (m, v) in col.into_iter().enumerate() {
                entries[m * cols + n] = v;
            }
            column_deficits.push(def);
        }
        Ok(Self {
            rows,
            cols,
            entries,
            column_deficits,
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for n in 0..dim {
            entries[n * dim + n] = 1.0;
        }
        Self {
            rows: dim,
            cols: dim,
            entries,
            column_deficits: vec![0.0; dim],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.entries[m * self.cols + n]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.entries[m * self.cols..(m + 1) * self.cols]
    }

    pub fn column(&self, n: usize) -> Vec<f64> {
        (0..self.rows).map(|m| self.get(m, n)).collect()
    }

    pub fn column_deficits(&self) -> &[f64] {
        &self.column_deficits
    }

    /// Largest `|Σ_m K[m][n] + column_deficits[n] − 1|` over columns.
    pub fn max_stochasticity_error(&self) -> f64 {
        (0..self.cols)
            .map(|n| {
                let mut acc = NeumaierSum::new();
                for m in 0..self.rows {
                    acc.add(self.get(m, n));
                }
                acc.add(self.column_deficits[n]);
                (acc.total() - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest entrywise difference; `None` if shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> Option<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return None;
        }
        Some(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    /// Kernel of "apply `self`, then `after`".
    pub fn then(&self, after: &TransitionKernel) -> Result<TransitionKernel> {
        compose(after, self)
    }

    /// Drop output rows `m >= rows`, charging their mass to the column deficits.
    pub fn truncate_rows(&self, rows: usize) -> TransitionKernel {
        if rows >= self.rows {
            return self.clone();
        }
        let cols = self.cols;
        let column_deficits = (0..cols)
            .map(|n| {
                let mut acc = NeumaierSum::new();
                acc.add(self.column_deficits[n]);
                for m in rows..self.rows {
                    acc.add(self.get(m, n));
                }
                acc.total()
            })
            .collect();
        TransitionKernel {
            rows,
            cols,
            entries: self.entries[..rows * cols].to_vec(),
            column_deficits,
        }
    }
}

/// `ln P(X = m)` for `X ~ Poisson(mu)`.
///
/// Equal to `m·ln(mu) − mu − lnΓ(m+1)`, evaluated in a cancellation-free
/// form. `mu = 0` gives `0` at `m = 0` and `−∞` elsewhere.
pub fn poisson_log_pmf(m: i64, mu: f64) -> Result<f64> {
    if m < 0 {
        return Err(domain(format!("photon number must be non-negative, got {m}")));
    }
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(domain(format!("Poisson mean must be finite and >= 0, got {mu}")));
    }
    Ok(ln_poisson(m as u64, mu))
}

/// Poisson(`mu`) truncated to `dim` entries with exact tail accounting.
///
/// Returns the probability column and the mass not stored in it (upper tail
/// plus anything flushed to zero on underflow).
pub(crate) fn poisson_column(mu: f64, dim: usize) -> (Vec<f64>, f64) {
    let mut col = vec![0.0; dim];
    let mut lost = NeumaierSum::new();
    for (m, slot) in col.iter_mut().enumerate() {
        let lp = ln_poisson(m as u64, mu);
        if lp < LN_UNDERFLOW {
            lost.add(lp.exp());
        } else {
            *slot = lp.exp();
        }
    }
    lost.add(poisson_upper_tail(mu, dim as u64));
    (col, lost.total())
}

/// `P(X >= start)` for `X ~ Poisson(mu)`, summed term by term in log domain.
fn poisson_upper_tail(mu: f64, start: u64) -> f64 {
    if mu == 0.0 {
        return if start == 0 { 1.0 } else { 0.0 };
    }
    let mut acc = NeumaierSum::new();
    let mut m = start;
    loop {
        let term = ln_poisson(m, mu).exp();
        acc.add(term);
        // past the mode terms only shrink, by at least a factor mu/(m+1)
        if (m as f64) > mu && (term <= TAIL_EPS * acc.total() || term == 0.0) {
            break;
        }
        m += 1;
    }
    acc.total()
}

/// Number statistics of a coherent state with the given mean photon number.
pub fn coherent_number_distribution(mean_photons: f64, dim: usize) -> Result<PhotonNumberDistribution> {
    if dim == 0 {
        return Err(domain("dimension must be at least 1"));
    }
    if !(mean_photons.is_finite() && mean_photons >= 0.0) {
        return Err(domain(format!(
            "mean photon number must be finite and >= 0, got {mean_photons}"
        )));
    }
    let (probs, deficit) = poisson_column(mean_photons, dim);
    Ok(PhotonNumberDistribution::from_parts_unchecked(probs, deficit))
}

/// Pure-loss channel in the number basis: binomial thinning with
/// transmissivity `eta`.
pub fn thinning_kernel(eta: f64, dim: usize) -> Result<TransitionKernel> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(domain(format!("transmissivity must lie in [0, 1], got {eta}")));
    }
    if dim == 0 {
        return Err(domain("dimension must be at least 1"));
    }
    if eta == 1.0 {
        return Ok(TransitionKernel::identity(dim));
    }
    let q = 1.0 - eta;
    let columns = par::map_range(dim, |n| {
        let mut col = vec![0.0; dim];
        let mut lost = NeumaierSum::new();
        for (m, slot) in col.iter_mut().enumerate().take(n + 1) {
            let lp = ln_binomial(m as u64, n as u64, eta, q);
            if lp < LN_UNDERFLOW {
                lost.add(lp.exp());
            } else {
                *slot = lp.exp();
            }
        }
        (col, lost.total())
    });
    TransitionKernel::from_columns(dim, columns)
}

/// One chain step: `out[m] = Σ_n K[m][n]·p[n]` in ascending `n`.
pub fn apply_kernel(kernel: &TransitionKernel, p: &PhotonNumberDistribution) -> Result<PhotonNumberDistribution> {
    if kernel.cols != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.cols,
            found: p.dim(),
        });
    }
    let probs = par::map_range(kernel.rows, |m| sum::dot(kernel.row(m), &p.probs));
    let mut deficit = NeumaierSum::new();
    deficit.add(p.deficit);
    for (d, pn) in kernel.column_deficits.iter().zip(&p.probs) {
        deficit.add(d * pn);
    }
    Ok(PhotonNumberDistribution::from_parts_unchecked(
        probs,
        deficit.total(),
    ))
}

/// Matrix product `after · before` with deficit propagation.
pub fn compose(after: &TransitionKernel, before: &TransitionKernel) -> Result<TransitionKernel> {
    compose_truncated(after, before, after.rows)
}

/// First `rows` rows of `after ∘ before`. Mass that `after` sends beyond
/// `rows` is summed from the dropped entries and charged to the deficits.
pub fn compose_truncated(after: &TransitionKernel, before: &TransitionKernel, rows: usize) -> Result<TransitionKernel> {
    if after.cols != before.rows {
        return Err(Error::DimensionMismatch {
            expected: after.cols,
            found: before.rows,
        });
    }
    let rows = rows.min(after.rows);
    let inner = before.rows;
    let dropped: Vec<f64> = par::map_range(inner, |j| {
        let mut acc = NeumaierSum::new();
        acc.add(after.column_deficits[j]);
        for m in rows..after.rows {
            acc.add(after.get(m, j));
        }
        acc.total()
    });
    let row_support: Vec<(usize, usize)> = (0..rows).map(|m| support(after.row(m))).collect();
    let columns = par::map_range(before.cols, |n| {
        let b: Vec<f64> = (0..inner).map(|j| before.get(j, n)).collect();
        let (lo, hi) = support(&b);
        let col: Vec<f64> = row_support
            .iter()
            .enumerate()
            .map(|(m, &(rlo, rhi))| {
                let (a, z) = (lo.max(rlo), hi.min(rhi));
                if a < z {
                    sum::dot(&after.row(m)[a..z], &b[a..z])
                } else {
                    0.0
                }
            })
            .collect();
        let mut def = NeumaierSum::new();
        def.add(before.column_deficits[n]);
        for j in lo..hi {
            def.add(dropped[j] * b[j]);
        }
        (col, def.total())
    });
    TransitionKernel::from_columns(rows, columns)
}

/// Half-open range of the nonzero entries.
fn support(v: &[f64]) -> (usize, usize) {
    let lo = v.iter().position(|&x| x != 0.0).unwrap_or(v.len());
    let hi = v.iter().rposition(|&x| x != 0.0).map_or(lo, |i| i + 1);
    (lo, hi)
}
