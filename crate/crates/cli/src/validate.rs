//! Self-checks of the photon-number model against the density-matrix oracle.

use std::time::Instant;

use clap::Args;
use serde::Serialize;
use serde_json::json;

use regenline::analysis::{dephasing_stats, one_step_distribution};
use regenline::oracle::{diagonal, loss_channel_density, regen_map_density, DensityMatrix, MAX_ORACLE_DIM};
use regenline::{
    apply_kernel, build_regen_kernel, composite_step_kernel, optimal_config, thinning_kernel,
    Complex64, PhotonNumberDistribution,
};

use crate::config::ConfigFile;
use crate::error::CliError;
use crate::output::{emit, RunManifest};
use crate::{init_threads, Common};

const DEFAULT_SEED: u64 = 20_240_601;
/// Small input level so the oracle fits in a few dozen Fock states.
const ORACLE_BETA: f64 = 2.0;
const ORACLE_ETA: f64 = 0.6;
/// Large level for the dephasing check, run on the kernel model only.
const DEPHASING_BETA: f64 = 20.0;

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    /// Fock truncation for the oracle comparisons.
    #[arg(long)]
    dim: Option<usize>,
    /// Seed for the random test states.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
    passed: bool,
    detail: String,
}

fn check(name: &'static str, value: f64, tolerance: f64, detail: String) -> Check {
    Check {
        name,
        value,
        tolerance,
        passed: value <= tolerance,
        detail,
    }
}

fn max_diff(a: &PhotonNumberDistribution, b: &PhotonNumberDistribution) -> f64 {
    a.probs()
        .iter()
        .zip(b.probs())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn run(a: ValidateArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(
        a.common.config.as_deref(),
        &["threads", "format", "out", "dim", "seed"],
    )?;
    init_threads(cfg.resolve(a.common.threads, "threads")?)?;
    let out = cfg.resolve(a.common.out.clone(), "out")?;
    let dim = cfg.resolve_or(a.dim, "dim", 40)?;
    let seed = cfg.resolve_or(a.seed, "seed", DEFAULT_SEED)?;
    if !(2..=MAX_ORACLE_DIM).contains(&dim) {
        return Err(CliError::Usage(format!("--dim must lie in 2..={MAX_ORACLE_DIM}, got {dim}")));
    }

    let start = Instant::now();
    let checks = checks(dim, seed)?;
    let all_passed = checks.iter().all(|c| c.passed);

    let mut m = RunManifest::new("validate");
    m.param("dim", dim).param("seed", seed);
    m.truncation_dim = Some(dim);
    let v = json!({ "manifest": &m, "checks": &checks, "all_passed": all_passed });
    emit(out.as_deref(), &(serde_json::to_string_pretty(&v)? + "\n"), &m, start.elapsed())?;

    if all_passed {
        Ok(())
    } else {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        Err(CliError::Validation(failed.join(", ")))
    }
}

fn checks(dim: usize, seed: u64) -> Result<Vec<Check>, CliError> {
    let beta = Complex64::new(ORACLE_BETA, 0.0);
    let rho = DensityMatrix::random(dim, seed)?;
    let p_in = diagonal(&rho)?;
    let mut out = Vec::new();

    // regenerator alone: full state vs. number-basis kernel
    let regen = optimal_config(beta, 1.0)?;
    let rho_regen = regen_map_density(&rho, regen.kerr_coupling, regen.ll_amplitude);
    let via_kernel = apply_kernel(&build_regen_kernel(&regen, dim, dim)?, &p_in)?;
    out.push(check(
        "oracle-equivalence",
        max_diff(&diagonal(&rho_regen)?, &via_kernel),
        1e-12,
        format!("max |diag(rho') - K p| over {dim} Fock states"),
    ));

    let lost = 1.0 - rho_regen.trace();
    out.push(check(
        "oracle-truncation",
        lost,
        1e-8,
        format!("trace lost by the oracle at dim {dim}: {lost:.3e}"),
    ));

    let step = optimal_config(beta, ORACLE_ETA)?;
    let rho_step = loss_channel_density(
        &regen_map_density(&rho, step.kerr_coupling, step.ll_amplitude),
        ORACLE_ETA,
    )?;
    let composite = apply_kernel(&composite_step_kernel(beta, ORACLE_ETA, dim)?, &p_in)?;
    out.push(check(
        "loss-regen-composition",
        max_diff(&diagonal(&rho_step)?, &composite),
        1e-10,
        format!("loss({ORACLE_ETA}) after regenerator vs composite kernel"),
    ));

    let k_lo = composite_step_kernel(beta, 0.3, dim)?;
    let k_hi = composite_step_kernel(beta, 1.0, dim)?;
    out.push(check(
        "eta-invariance",
        k_lo.max_abs_diff(&k_hi).unwrap_or(f64::INFINITY),
        1e-10,
        "composite kernel at eta 0.3 vs 1.0".into(),
    ));

    let thinned = diagonal(&loss_channel_density(&rho, ORACLE_ETA)?)?;
    let binomial = apply_kernel(&thinning_kernel(ORACLE_ETA, dim)?, &p_in)?;
    out.push(check(
        "thinning-law",
        max_diff(&thinned, &binomial),
        1e-12,
        format!("loss channel diagonal vs binomial thinning at eta {ORACLE_ETA}"),
    ));

    let big = Complex64::new(DEPHASING_BETA, 0.0);
    let q = one_step_distribution(big, None)?;
    let stats = dephasing_stats(big, DEPHASING_BETA * DEPHASING_BETA)?;
    let dev = (q.mean() - stats.predicted_mean_photons).abs();
    out.push(check(
        "dephasing-mean",
        dev,
        0.05,
        format!(
            "one-step mean {:.5} vs |a|^2 exp(-pi^2/(4|b|^2)) = {:.5} at |b| = {DEPHASING_BETA}",
            q.mean(),
            stats.predicted_mean_photons
        ),
    ));
    Ok(out)
}
