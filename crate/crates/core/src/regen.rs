//! Loop-mirror regenerator as a stochastic kernel on photon-number
//! distributions, and the repeater chain built from it.
//!
//! For an input with number statistics `p[n]` the regenerator emits the
//! mixture `Σ_n p[n] |α e^{inχ/2} sin(nχ/2)⟩⟨…|`. Only the diagonal of the
//! input enters, and coherent components have Poisson number statistics, so
//! column `n` of the kernel is Poisson with mean `|α|² sin²(nχ/2)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::fock::{
    apply_kernel, coherent_number_distribution, compose_truncated, poisson_column, thinning_kernel,
    PhotonNumberDistribution, TransitionKernel, LN_UNDERFLOW,
};
use crate::par;

/// Default fraction of the current BER the truncation deficit may reach
/// before a chain step is flagged.
pub const DEFAULT_TRUNCATION_FRACTION: f64 = 1e-2;

/// Kerr coupling and local-laser amplitude of one regenerator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegeneratorConfig {
    /// Cross-phase shift per signal photon, radians.
    pub kerr_coupling: f64,
    /// Local-laser coherent amplitude.
    pub ll_amplitude: Complex64,
}

impl RegeneratorConfig {
    pub fn new(kerr_coupling: f64, ll_amplitude: Complex64) -> Result<Self> {
        if !(kerr_coupling.is_finite() && kerr_coupling > 0.0) {
            return Err(domain(format!(
                "Kerr coupling must be positive, got {kerr_coupling}"
            )));
        }
        if !(ll_amplitude.re.is_finite() && ll_amplitude.im.is_finite()) {
            return Err(domain("local-laser amplitude must be finite"));
        }
        Ok(Self {
            kerr_coupling,
            ll_amplitude,
        })
    }

    /// Local-laser mean photon number `|α|²`.
    pub fn pump_mean(&self) -> f64 {
        self.ll_amplitude.norm_sqr()
    }
}

/// Mean photon number of the output component for `n` input photons.
pub fn regen_mean(n: u64, chi: f64, pump_mean: f64) -> f64 {
    let s = (n as f64 * chi / 2.0).sin();
    pump_mean * s * s
}

/// Smallest `m > mean` whose Chernoff bound on `P(X ≥ m)`, `X ~
/// Poisson(mean)`, lies below the smallest normal `f64`.
pub fn poisson_underflow_window(mean: f64) -> usize {
    if !(mean > 0.0) {
        return 1;
    }
    // ln P(X ≥ x·mean) ≤ −mean·(x ln x − x + 1)
    let rate = |x: f64| mean * (x * x.ln() - x + 1.0);
    let target = -LN_UNDERFLOW;
    let (mut lo, mut hi) = (1.0, 2.0);
    while rate(hi) < target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if rate(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (hi * mean).ceil() as usize + 1
}

/// Default truncation for a chain at input level `|β|²`.
///
/// The window covers photon numbers up to `2|β|²` (where `sin²(nχ/2)` returns
/// to zero and the regenerator again emits near-vacuum) plus a 12σ margin.
pub fn default_dim(beta_sq: f64) -> usize {
    (2.0 * beta_sq + 12.0 * beta_sq.sqrt()).ceil() as usize + 64
}

/// Regenerator kernel, `dim_out × dim_in`.
pub fn build_regen_kernel(cfg: &RegeneratorConfig, dim_in: usize, dim_out: usize) -> Result<TransitionKernel> {
    if dim_in == 0 || dim_out == 0 {
        return Err(domain("kernel dimensions must be at least 1"));
    }
    let chi = cfg.kerr_coupling;
    let pump = cfg.pump_mean();
    let columns = par::map_range(dim_in, |n| poisson_column(regen_mean(n as u64, chi, pump), dim_out));
    TransitionKernel::from_columns(dim_out, columns)
}

/// Working point that switches a signal of amplitude `beta` fully and
/// restores it after a following loss `1 − eta`.
pub fn optimal_config(beta: Complex64, eta_next: f64) -> Result<RegeneratorConfig> {
    let beta_sq = beta.norm_sqr();
    if !(beta_sq > 0.0 && beta_sq.is_finite()) {
        return Err(domain("input level must be non-zero: no switching value exists"));
    }
    if !(eta_next > 0.0 && eta_next <= 1.0) {
        return Err(domain(format!(
            "transmissivity must lie in (0, 1], got {eta_next}"
        )));
    }
    let alpha = -Complex64::i() * beta / eta_next.sqrt();
    RegeneratorConfig::new(PI / beta_sq, alpha)
}

/// Regenerator at the optimal working point followed by loss `1 − eta`.
///
/// The regenerator output is held in a window that reaches the underflow
/// tail of Poisson(`|α|² = |β|²/eta`) before thinning; rows beyond `dim`
/// are then charged to the column deficits.
pub fn composite_step_kernel(beta: Complex64, eta: f64, dim: usize) -> Result<TransitionKernel> {
    let cfg = optimal_config(beta, eta)?;
    if dim == 0 {
        return Err(domain("dimension must be at least 1"));
    }
    if eta == 1.0 {
        return build_regen_kernel(&cfg, dim, dim);
    }
    let mid = dim.max(poisson_underflow_window(cfg.pump_mean()));
    let regen = build_regen_kernel(&cfg, dim, mid)?;
    let loss = thinning_kernel(eta, mid)?;
    compose_truncated(&loss, &regen, dim)
}

/// Line of `N` regenerator + loss segments.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    /// Signal amplitude at every repeater input.
    pub input_amplitude: Complex64,
    /// Transmissivity of the loss segment after each repeater.
    pub segment_transmissivities: Vec<f64>,
    pub dim: usize,
    /// Flag steps whose deficit exceeds this fraction of the BER.
    pub truncation_fraction: f64,
}

impl ChainConfig {
    /// `n_repeaters` identical segments; `dim = None` picks [`default_dim`].
    pub fn uniform(beta: Complex64, eta: f64, n_repeaters: usize, dim: Option<usize>) -> Result<Self> {
        let cfg = Self {
            input_amplitude: beta,
            segment_transmissivities: vec![eta; n_repeaters],
            dim: dim.unwrap_or_else(|| default_dim(beta.norm_sqr())),
            truncation_fraction: DEFAULT_TRUNCATION_FRACTION,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n_repeaters(&self) -> usize {
        self.segment_transmissivities.len()
    }

    /// Peak amplitude `γ_n = β/√η_n` launched into each segment.
    pub fn launch_amplitudes(&self) -> Vec<Complex64> {
        self.segment_transmissivities
            .iter()
            .map(|eta| self.input_amplitude / eta.sqrt())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let beta_sq = self.input_amplitude.norm_sqr();
        if !(beta_sq > 0.0 && beta_sq.is_finite()) {
            return Err(domain("input level must be non-zero: no switching value exists"));
        }
        if self.segment_transmissivities.is_empty() {
            return Err(domain("a chain needs at least one repeater"));
        }
        if let Some(eta) = self
            .segment_transmissivities
            .iter()
            .find(|eta| !(**eta > 0.0 && **eta <= 1.0))
        {
            return Err(domain(format!("transmissivity must lie in (0, 1], got {eta}")));
        }
        let min_dim = beta_sq + 8.0 * beta_sq.sqrt();
        if (self.dim as f64) <= min_dim {
            return Err(domain(format!(
                "truncation {} too small for |beta|^2 = {beta_sq}: need more than {min_dim:.1}",
                self.dim
            )));
        }
        if !(self.truncation_fraction >= 0.0) {
            return Err(domain("truncation fraction must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainResult {
    /// Vacuum probability of the input state.
    pub initial_ber: f64,
    /// `B(k)` for `k = 1..=N`.
    pub ber_series: Vec<f64>,
    /// Truncation deficit after each step; bounds the error of `B(k)`.
    pub deficit_series: Vec<f64>,
    pub final_distribution: PhotonNumberDistribution,
    /// Steps `k` (1-based) where the deficit exceeded the configured
    /// fraction of `B(k)`.
    pub truncation_flags: Vec<usize>,
}

impl ChainResult {
    pub fn truncation_risk(&self) -> bool {
        !self.truncation_flags.is_empty()
    }

    pub fn max_deficit(&self) -> f64 {
        self.deficit_series.iter().copied().fold(0.0, f64::max)
    }
}

/// Run the chain on the coherent input `|β⟩`.
pub fn iterate_chain(chain: &ChainConfig) -> Result<ChainResult> {
    chain.validate()?;
    let input = coherent_number_distribution(chain.input_amplitude.norm_sqr(), chain.dim)?;
    iterate_chain_from(chain, input)
}

/// Run the chain on an arbitrary input distribution.
pub fn iterate_chain_from(chain: &ChainConfig, input: PhotonNumberDistribution) -> Result<ChainResult> {
    chain.validate()?;
    if input.dim() != chain.dim {
        return Err(Error::DimensionMismatch {
            expected: chain.dim,
            found: input.dim(),
        });
    }
    // one kernel per distinct transmissivity
    let mut kernels: Vec<(f64, TransitionKernel)> = Vec::new();
    for &eta in &chain.segment_transmissivities {
        if !kernels.iter().any(|(e, _)| *e == eta) {
            kernels.push((eta, composite_step_kernel(chain.input_amplitude, eta, chain.dim)?));
        }
    }

    let n = chain.n_repeaters();
    let initial_ber = input.vacuum_probability();
    let mut ber_series = Vec::with_capacity(n);
    let mut deficit_series = Vec::with_capacity(n);
    let mut truncation_flags = Vec::new();
    let mut p = input;
    for (k, eta) in chain.segment_transmissivities.iter().enumerate() {
        let kernel = &kernels.iter().find(|(e, _)| e == eta).expect("kernel cached").1;
        p = apply_kernel(kernel, &p)?;
        let ber = p.vacuum_probability();
        if p.deficit() > chain.truncation_fraction * ber {
            truncation_flags.push(k + 1);
        }
        ber_series.push(ber);
        deficit_series.push(p.deficit());
    }
    Ok(ChainResult {
        initial_ber,
        ber_series,
        deficit_series,
        final_distribution: p,
        truncation_flags,
    })
}

/// Weighted coherent components of a regenerator output state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComponentMixture {
    pub components: Vec<(f64, Complex64)>,
    pub deficit: f64,
}

impl ComponentMixture {
    pub fn total_weight(&self) -> f64 {
        crate::sum::sum(self.components.iter().map(|(w, _)| *w))
    }

    /// Weighted mean amplitude (normalized by the stored weight).
    pub fn mean_amplitude(&self) -> Complex64 {
        let total = self.total_weight();
        let re = crate::sum::sum(self.components.iter().map(|(w, a)| w * a.re));
        let im = crate::sum::sum(self.components.iter().map(|(w, a)| w * a.im));
        Complex64::new(re / total, im / total)
    }
}

/// Amplitude `α e^{inχ/2} sin(nχ/2)` of the component fed by `n` photons.
pub fn component_amplitude(n: u64, cfg: &RegeneratorConfig) -> Complex64 {
    let half = n as f64 * cfg.kerr_coupling / 2.0;
    cfg.ll_amplitude * Complex64::from_polar(1.0, half) * half.sin()
}

/// Coherent-state decomposition of the regenerator output for input
/// statistics `p_in`. Zero-weight photon numbers are skipped.
pub fn output_components(p_in: &PhotonNumberDistribution, cfg: &RegeneratorConfig) -> ComponentMixture {
    let components = p_in
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(n, w)| (*w, component_amplitude(n as u64, cfg)))
        .collect();
    ComponentMixture {
        components,
        deficit: p_in.deficit(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::coherent_number_distribution;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn underflow_window_reaches_the_flushed_tail() {
        for mean in [0.5, 4.0, 400.0, 800.0, 2000.0] {
            let m = poisson_underflow_window(mean);
            assert!(m as f64 > mean);
            let lp = crate::fock::poisson_log_pmf(m as i64, mean).unwrap();
            assert!(lp < LN_UNDERFLOW, "mean {mean}: m {m}, ln p {lp}");
        }
        assert_eq!(poisson_underflow_window(0.0), 1);
    }

    #[test]
    fn half_transmission_step_is_not_flagged_at_default_dim() {
        let chain = ChainConfig::uniform(c(20.0, 0.0), 0.5, 3, None).unwrap();
        let res = iterate_chain(&chain).unwrap();
        assert!(res.truncation_flags.is_empty(), "{:?}", res.deficit_series);
    }

    #[test]
    fn regen_mean_examples() {
        assert_eq!(regen_mean(0, 0.3, 400.0), 0.0);
        assert!((regen_mean(400, PI / 400.0, 400.0) - 400.0).abs() < 1e-12);
        assert!((regen_mean(200, PI / 400.0, 400.0) - 200.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_config_examples() {
        let cfg = optimal_config(c(20.0, 0.0), 1.0).unwrap();
        assert!((cfg.kerr_coupling - PI / 400.0).abs() < 1e-18);
        assert!((cfg.ll_amplitude - c(0.0, -20.0)).norm() < 1e-14);

        let cfg = optimal_config(c(20.0, 0.0), 0.5).unwrap();
        assert!((cfg.pump_mean() - 800.0).abs() < 1e-9);

        let cfg = optimal_config(c(2.0, 0.0), 1.0).unwrap();
        assert!((cfg.ll_amplitude - c(0.0, -2.0)).norm() < 1e-15);

        assert!(optimal_config(c(0.0, 0.0), 1.0).is_err());
        assert!(optimal_config(c(1.0, 0.0), 0.0).is_err());
        assert!(optimal_config(c(1.0, 0.0), 1.2).is_err());
    }

    #[test]
    fn regen_kernel_fixed_points() {
        let cfg = optimal_config(c(3.0, 0.0), 1.0).unwrap();
        let k = build_regen_kernel(&cfg, 40, 40).unwrap();
        assert_eq!(k.get(0, 0), 1.0);
        assert!((1..40).all(|m| k.get(m, 0) == 0.0));
        assert_eq!(k.column_deficits()[0], 0.0);

        // full switching at n = |β|²: output is the local laser's Poisson(9)
        let col = k.column(9);
        let expect = coherent_number_distribution(9.0, 40).unwrap();
        for (a, b) in col.iter().zip(expect.probs()) {
            assert!((a - b).abs() < 1e-16);
        }
        assert!(k.max_stochasticity_error() < 1e-13);
    }

    #[test]
    fn composite_at_unit_transmissivity_is_the_regenerator() {
        let beta = c(2.0, 0.0);
        let k = composite_step_kernel(beta, 1.0, 30).unwrap();
        let r = build_regen_kernel(&RegeneratorConfig::new(PI / 4.0, c(2.0, 0.0)).unwrap(), 30, 30).unwrap();
        assert_eq!(k, r);
    }

    #[test]
    fn composite_vacuum_column() {
        for eta in [0.2, 0.5, 0.9] {
            let k = composite_step_kernel(c(2.0, 0.0), eta, 40).unwrap();
            assert_eq!(k.get(0, 0), 1.0);
            assert!((1..40).all(|m| k.get(m, 0) == 0.0));
        }
    }

    #[test]
    fn chain_config_validation() {
        assert!(ChainConfig::uniform(c(0.0, 0.0), 1.0, 3, None).is_err());
        assert!(ChainConfig::uniform(c(2.0, 0.0), 1.0, 0, None).is_err());
        assert!(ChainConfig::uniform(c(2.0, 0.0), 1.0, 3, Some(20)).is_err());
        assert!(ChainConfig::uniform(c(2.0, 0.0), 1.0, 3, Some(21)).is_ok());
        let chain = ChainConfig::uniform(c(2.0, 0.0), 0.25, 3, None).unwrap();
        assert!((chain.launch_amplitudes()[0] - c(4.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn vacuum_input_stays_vacuum() {
        let chain = ChainConfig::uniform(c(4.0, 0.0), 0.5, 10, None).unwrap();
        let res = iterate_chain_from(&chain, PhotonNumberDistribution::vacuum(chain.dim)).unwrap();
        assert!(res.ber_series.iter().all(|b| *b == 1.0));
        assert!(!res.truncation_risk());
    }

    #[test]
    fn chain_input_ber_and_lower_bound() {
        let beta = c(3.0, 0.0);
        let chain = ChainConfig::uniform(beta, 0.7, 5, None).unwrap();
        let res = iterate_chain(&chain).unwrap();
        let e = (-9.0f64).exp();
        assert!(((res.initial_ber - e) / e).abs() < 1e-10);
        assert!(res.ber_series[0] >= e);
        for w in res.ber_series.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn under_truncated_chain_is_flagged() {
        let mut chain = ChainConfig::uniform(c(20.0, 0.0), 1.0, 3, Some(600)).unwrap();
        chain.truncation_fraction = 1e-2;
        let res = iterate_chain(&chain).unwrap();
        assert!(res.truncation_risk());
        assert_eq!(res.truncation_flags[0], 1);
    }

    #[test]
    fn output_components_examples() {
        let cfg = RegeneratorConfig::new(PI / 4.0, c(0.0, -2.0)).unwrap();
        let mix = output_components(&PhotonNumberDistribution::delta(3, 10), &cfg);
        assert_eq!(mix.components.len(), 1);
        let (w, a) = mix.components[0];
        assert_eq!(w, 1.0);
        let half = 3.0 * PI / 8.0;
        let expect = c(0.0, -2.0) * Complex64::from_polar(1.0, half) * half.sin();
        assert!((a - expect).norm() < 1e-15);

        let mix = output_components(&PhotonNumberDistribution::vacuum(10), &cfg);
        assert_eq!(mix.components, vec![(1.0, c(0.0, 0.0))]);

        let p = coherent_number_distribution(4.0, 40).unwrap();
        let mix = output_components(&p, &cfg);
        for (n, (w, _)) in mix.components.iter().enumerate() {
            assert_eq!(*w, p.probs()[n]);
        }
    }
}
