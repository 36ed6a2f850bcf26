//! Lyapunov exponents from the spectrum: `L(E) = ∫ log|E - E'| dN(E')`
//! against the empirical eigenvalue measure of one truncation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lyapunov::{le_estimate, CocycleSpec, LeEstimate};
use crate::rng::{self, domain};
use crate::spectra::{log_abs_det, Potential, TridiagonalOperator};
use crate::stats::Estimate;
use crate::words::MarkovSpec;

/// Eigenvalues closer than this to `E` are left out of the sum.
pub const SINGULAR_DISTANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThoulessValue {
    pub value: f64,
    /// Eigenvalues within [`SINGULAR_DISTANCE`] of `E`.
    pub skipped: usize,
    /// Each skipped term is at most `ln SINGULAR_DISTANCE`, so the full sum
    /// is at most `value + correction`.
    pub correction: f64,
}

/// `(1/dim) Σ log|E - E_j|` over the given eigenvalues.
pub fn thouless_le(energy: f64, eigenvalues: &[f64]) -> Result<ThoulessValue> {
    if eigenvalues.is_empty() {
        return Err(Error::param("eigenvalues", "must be non-empty"));
    }
    let dim = eigenvalues.len() as f64;
    let mut skipped = 0;
    let mut acc = 0.0;
    for &x in eigenvalues {
        let d = (energy - x).abs();
        if d < SINGULAR_DISTANCE {
            skipped += 1;
        } else {
            acc += d.ln();
        }
    }
    Ok(ThoulessValue {
        value: acc / dim,
        skipped,
        correction: skipped as f64 * SINGULAR_DISTANCE.ln() / dim,
    })
}

/// Same sum without eigenvalues: `Σ log|E - E_j| = log|det(T - E)|`,
/// read off the LDLᵀ pivots in `O(dim)`.
pub fn thouless_le_det(op: &TridiagonalOperator, energy: f64) -> f64 {
    log_abs_det(op, energy) / op.dim() as f64
}

/// Eigenvalues `2cos(πk/(n+1))` of the free truncation of size `n`.
pub fn free_eigenvalues(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| 2.0 * (std::f64::consts::PI * k as f64 / (n + 1) as f64).cos())
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyRow {
    pub energy: f64,
    pub thouless: Estimate,
    pub le: LeEstimate,
    pub discrepancy: f64,
}

#[derive(Clone, Debug)]
pub struct ConsistencyProbe {
    pub dim: usize,
    pub replicas: usize,
    pub le_steps: u64,
    pub seed: u64,
}

/// Compares the spectral formula on `replicas` truncations of size `dim`
/// with the transfer-matrix estimate, energy by energy. Energies must lie at
/// least 0.5 outside the Gershgorin hull of the potential.
pub fn ids_vs_le_consistency(
    chain: &MarkovSpec,
    potential: &Potential,
    energies: &[f64],
    probe: &ConsistencyProbe,
) -> Result<Vec<ConsistencyRow>> {
    if probe.dim < 1000 {
        return Err(Error::param("dim", "must be at least 1000"));
    }
    if probe.replicas == 0 {
        return Err(Error::param("replicas", "must be positive"));
    }
    let vmin = potential.0.iter().copied().fold(f64::INFINITY, f64::min);
    let vmax = potential.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for &e in energies {
        if e > vmin - 2.5 && e < vmax + 2.5 {
            return Err(Error::param("E", format!("{e} lies within 0.5 of the spectral hull")));
        }
    }
    let sampler = chain.sampler();
    let per_replica: Vec<Vec<f64>> = rng::map_indexed(probe.replicas, |r| {
        let mut g = rng::stream(probe.seed, domain::THOULESS, r as u64);
        let mut word = Vec::with_capacity(probe.dim);
        sampler.fill(probe.dim, &mut g, &mut word);
        let op = TridiagonalOperator::from_diag(word.iter().map(|&s| potential.at(s)).collect());
        energies.iter().map(|&e| thouless_le_det(&op, e)).collect()
    });
    energies
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let xs: Vec<f64> = per_replica.iter().map(|row| row[i]).collect();
            let thouless = Estimate::from_samples(&xs);
            let spec = CocycleSpec::schrodinger_with(chain.clone(), potential, e);
            let le = le_estimate(&spec, probe.le_steps, probe.replicas, probe.seed)?;
            Ok(ConsistencyRow {
                energy: e,
                thouless,
                le,
                discrepancy: (thouless.value - le.value).abs(),
            })
        })
        .collect()
}
