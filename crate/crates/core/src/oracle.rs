//! Brute-force density-matrix versions of the regenerator and loss channels.
//!
//! Everything here works on full truncated-Fock density matrices and is only
//! meant for small dimensions (`D <= 64`). It shares no numerics with the
//! kernel path: factorials come from a local log table, coherent states are
//! built coefficient by coefficient and the loss channel uses explicit Kraus
//! operators.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Error, Result};
use crate::fock::PhotonNumberDistribution;

/// Largest dimension the oracle accepts.
pub const MAX_ORACLE_DIM: usize = 64;

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_ORACLE_DIM {
        return Err(domain(format!(
            "oracle dimension must be in 1..={MAX_ORACLE_DIM}, got {dim}"
        )));
    }
    Ok(())
}

/// `ln k!` for `k < len`, by running sums of logarithms.
fn ln_factorials(len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..len {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureStateVector {
    coeffs: Vec<Complex64>,
}

impl PureStateVector {
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `⟨ψ|n̂|ψ⟩`.
    pub fn number_expectation(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum()
    }
}

/// Truncated Fock expansion of the coherent state `|γ⟩`.
pub fn coherent_state_vector(gamma: Complex64, dim: usize) -> PureStateVector {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); dim];
    if dim == 0 {
        return PureStateVector { coeffs };
    }
    let r2 = gamma.norm_sqr();
    if r2 == 0.0 {
        coeffs[0] = Complex64::new(1.0, 0.0);
        return PureStateVector { coeffs };
    }
    let ln_r = r2.sqrt().ln();
    let phase = gamma.arg();
    let lf = ln_factorials(dim);
    for (k, c) in coeffs.iter_mut().enumerate() {
        let kf = k as f64;
        let ln_mag = -0.5 * r2 + kf * ln_r - 0.5 * lf[k];
        *c = Complex64::from_polar(ln_mag.exp(), kf * phase);
    }
    PureStateVector { coeffs }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn from_matrix(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        check_dim(entries.nrows())?;
        Ok(Self { entries })
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(psi: &PureStateVector) -> Self {
        let v = nalgebra::DVector::from_column_slice(psi.coeffs());
        Self {
            entries: &v * v.adjoint(),
        }
    }

    /// `|n⟩⟨n|` in dimension `dim`.
    pub fn fock(n: usize, dim: usize) -> Self {
        let mut entries = DMatrix::zeros(dim, dim);
        entries[(n, n)] = Complex64::new(1.0, 0.0);
        Self { entries }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0),
        }
    }

    /// Normalized `G G†` with `G` a complex Gaussian matrix drawn from a
    /// ChaCha8 stream seeded with `seed`.
    pub fn random(dim: usize, seed: u64) -> Result<Self> {
        check_dim(dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(dim, dim, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        });
        let rho = &g * g.adjoint();
        let tr = rho.trace();
        Ok(Self { entries: rho / tr })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.entries[(m, n)]
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// Largest `|ρ − ρ†|` entry.
    pub fn hermiticity_error(&self) -> f64 {
        let d = &self.entries - self.entries.adjoint();
        d.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn overlap(&self, psi: &PureStateVector) -> f64 {
        let v = nalgebra::DVector::from_column_slice(psi.coeffs());
        (v.adjoint() * &self.entries * &v)[(0, 0)].re
    }
}

/// Regenerator map on a density matrix: `Σ_n ⟨n|ρ|n⟩ |c_n⟩⟨c_n|` with
/// `c_n = α e^{inχ/2} sin(nχ/2)`.
pub fn regen_map_density(rho: &DensityMatrix, chi: f64, alpha: Complex64) -> DensityMatrix {
    let dim = rho.dim();
    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    for n in 0..dim {
        let w = rho.get(n, n).re;
        if w == 0.0 {
            continue;
        }
        let half = n as f64 * chi / 2.0;
        let amp = alpha * Complex64::from_polar(1.0, half) * half.sin();
        let c = coherent_state_vector(amp, dim);
        for a in 0..dim {
            let ca = c.coeffs[a] * w;
            for b in 0..dim {
                out[(a, b)] += ca * c.coeffs[b].conj();
            }
        }
    }
    DensityMatrix { entries: out }
}

/// Pure-loss channel `Σ_k A_k ρ A_k†` with
/// `⟨n−k|A_k|n⟩ = √C(n,k) · η^{(n−k)/2} · (1−η)^{k/2}`.
pub fn loss_channel_density(rho: &DensityMatrix, eta: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(domain(format!("transmissivity must lie in [0, 1], got {eta}")));
    }
    let dim = rho.dim();
    let lf = ln_factorials(dim);
    // amp[n][k] = ⟨n−k|A_k|n⟩
    let amp = |n: usize, k: usize| -> f64 {
        let binom = (lf[n] - lf[k] - lf[n - k]).exp();
        (binom * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32)).sqrt()
    };
    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    for k in 0..dim {
        for a in 0..dim - k {
            let la = amp(a + k, k);
            if la == 0.0 {
                continue;
            }
            for b in 0..dim - k {
                let lb = amp(b + k, k);
                out[(a, b)] += rho.get(a + k, b + k) * (la * lb);
            }
        }
    }
    Ok(DensityMatrix { entries: out })
}

/// Photon-number statistics `⟨n|ρ|n⟩`; the missing trace becomes the
/// deficit.
pub fn diagonal(rho: &DensityMatrix) -> Result<PhotonNumberDistribution> {
    let mut probs = Vec::with_capacity(rho.dim());
    for n in 0..rho.dim() {
        let z = rho.get(n, n);
        if z.im.abs() > 1e-10 {
            return Err(Error::Consistency(format!(
                "diagonal entry {n} has imaginary part {}",
                z.im
            )));
        }
        if z.re < -1e-14 {
            return Err(Error::Consistency(format!(
                "diagonal entry {n} is negative: {}",
                z.re
            )));
        }
        probs.push(z.re.max(0.0));
    }
    let deficit = (1.0 - rho.trace()).max(0.0);
    Ok(PhotonNumberDistribution::from_parts_unchecked(probs, deficit))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn coherent_vector_examples() {
        let v = coherent_state_vector(c(0.0, 0.0), 5);
        assert_eq!(v.coeffs()[0], c(1.0, 0.0));
        assert!(v.coeffs()[1..].iter().all(|z| *z == c(0.0, 0.0)));

        let v = coherent_state_vector(c(2.0, 0.0), 40);
        assert!((v.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((v.number_expectation() - 4.0).abs() < 1e-10);

        // phase accumulates as k·arg γ
        let v = coherent_state_vector(c(0.0, 1.0), 4);
        let e = (-0.5f64).exp();
        assert!((v.coeffs()[2] - c(-e / 2f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn regen_map_reads_only_the_diagonal() {
        let rho = DensityMatrix::random(12, 7).unwrap();
        let mut dephased = rho.matrix().clone();
        for a in 0..12 {
            for b in 0..12 {
                if a != b {
                    dephased[(a, b)] = c(0.0, 0.0);
                }
            }
        }
        let dephased = DensityMatrix::from_matrix(dephased).unwrap();
        let alpha = c(0.0, -1.5);
        let x = regen_map_density(&rho, 0.7, alpha);
        let y = regen_map_density(&dephased, 0.7, alpha);
        assert_eq!(x, y);
    }

    #[test]
    fn regen_map_keeps_vacuum() {
        let out = regen_map_density(&DensityMatrix::fock(0, 10), 0.5, c(0.0, -2.0));
        assert_eq!(out, DensityMatrix::fock(0, 10));
    }

    #[test]
    fn regen_map_trace_on_coherent_input() {
        let rho = DensityMatrix::from_pure(&coherent_state_vector(c(2.0, 0.0), 40));
        let out = regen_map_density(&rho, std::f64::consts::PI / 4.0, c(0.0, -2.0));
        assert!((out.trace() - 1.0).abs() < 1e-8);
        assert!(out.hermiticity_error() < 1e-12);
        assert!(out.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn loss_identity_and_coherent_rescaling() {
        let rho = DensityMatrix::random(10, 3).unwrap();
        let out = loss_channel_density(&rho, 1.0).unwrap();
        for a in 0..10 {
            for b in 0..10 {
                assert!((out.get(a, b) - rho.get(a, b)).norm() < 1e-15);
            }
        }

        let gamma = c(2.0, 0.0);
        let rho = DensityMatrix::from_pure(&coherent_state_vector(gamma, 40));
        let out = loss_channel_density(&rho, 0.5).unwrap();
        let target = coherent_state_vector(gamma * 0.5f64.sqrt(), 40);
        assert!(1.0 - out.overlap(&target) < 1e-10);
        assert!((out.trace() - 1.0).abs() < 1e-12);
        assert!(out.min_eigenvalue() > -1e-10);

        assert!(loss_channel_density(&rho, 1.1).is_err());
    }

    #[test]
    fn loss_at_zero_transmissivity_empties_the_mode() {
        let rho = DensityMatrix::random(8, 11).unwrap();
        let out = loss_channel_density(&rho, 0.0).unwrap();
        assert!((out.get(0, 0).re - 1.0).abs() < 1e-14);
        assert!((out.trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_examples() {
        let p = diagonal(&DensityMatrix::fock(0, 6)).unwrap();
        assert_eq!(p, PhotonNumberDistribution::vacuum(6));

        let p = diagonal(&DensityMatrix::maximally_mixed(4)).unwrap();
        assert_eq!(p.probs(), &[0.25; 4]);

        let rho = DensityMatrix::from_pure(&coherent_state_vector(c(2.0, 0.0), 40));
        let p = diagonal(&rho).unwrap();
        let lf = ln_factorials(40);
        for (n, pn) in p.probs().iter().enumerate() {
            let expect = (-4.0 + n as f64 * 4f64.ln() - lf[n]).exp();
            assert!((pn - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_rejects_complex_diagonal() {
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 0)] = c(1.0, 1e-6);
        let rho = DensityMatrix::from_matrix(m).unwrap();
        assert!(matches!(diagonal(&rho), Err(Error::Consistency(_))));
    }

    #[test]
    fn random_states_are_valid_and_seeded() {
        let a = DensityMatrix::random(16, 42).unwrap();
        let b = DensityMatrix::random(16, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, DensityMatrix::random(16, 43).unwrap());
        assert!((a.trace() - 1.0).abs() < 1e-12);
        assert!(a.hermiticity_error() < 1e-12);
        assert!(a.min_eigenvalue() > -1e-10);
        assert!(DensityMatrix::random(65, 1).is_err());
    }
}
