//! Dirichlet truncations of the discrete Schrödinger operator
//! `[Hψ]_n = -(ψ_{n+1} + ψ_{n-1}) + v_n ψ_n` and eigenvalue counting.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, domain};
use crate::stats::Estimate;
use crate::words::{MarkovSpec, Symbol};

/// Symmetric tridiagonal matrix with the given diagonal and off-diagonal `-1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalOperator {
    diag: Vec<f64>,
}

/// Potential value per symbol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential(pub [f64; 4]);

impl Potential {
    /// `v(0) = 0`, `v(a) = v(c) = -e`, `v(b) = -1/e`.
    pub fn model() -> Self {
        Potential(Symbol::ALL.map(Symbol::potential))
    }

    pub fn free() -> Self {
        Potential([0.0; 4])
    }

    pub fn at(&self, s: Symbol) -> f64 {
        self.0[s.index()]
    }
}

impl TridiagonalOperator {
    pub fn from_diag(diag: Vec<f64>) -> Self {
        TridiagonalOperator { diag }
    }

    pub fn free(dim: usize) -> Self {
        TridiagonalOperator {
            diag: vec![0.0; dim],
        }
    }

    /// Truncation to sites `0..=n` of the operator with the model potential.
    pub fn from_word(w: &[Symbol], n: usize) -> Result<Self> {
        Self::with_potential(w, n, &Potential::model())
    }

    pub fn with_potential(w: &[Symbol], n: usize, v: &Potential) -> Result<Self> {
        if w.len() < n + 1 {
            return Err(Error::WordTooShort {
                needed: n + 1,
                got: w.len(),
            });
        }
        Ok(TridiagonalOperator {
            diag: w[..=n].iter().map(|&s| v.at(s)).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Interval `[min diag - 2, max diag + 2]` containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let lo = self.diag.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo - 2.0, hi + 2.0)
    }

    pub fn apply(&self, psi: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(psi.len(), n, "vector length must equal the dimension");
        (0..n)
            .map(|j| {
                let left = if j > 0 { psi[j - 1] } else { 0.0 };
                let right = if j + 1 < n { psi[j + 1] } else { 0.0 };
                self.diag[j] * psi[j] - left - right
            })
            .collect()
    }

    /// Two-column CSV `index,diag`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "diag"])?;
        for (j, d) in self.diag.iter().enumerate() {
            w.write_record([j.to_string(), d.to_string()])?;
        }
        w.flush().map_err(|e| Error::Export(e.to_string()))
    }
}

/// Smallest pivot magnitude. Smaller pivots become `+PIVMIN`, which acts as
/// an infinitesimal downward shift of `x` and keeps the count strict when `x`
/// is itself an eigenvalue.
pub const PIVMIN: f64 = f64::MIN_POSITIVE;

/// Calls `f` on each LDLᵀ pivot of `T - x`.
#[inline]
fn pivots<F: FnMut(f64)>(diag: &[f64], x: f64, mut f: F) {
    let mut prev = 1.0;
    let mut first = true;
    for &a in diag {
        let mut d = if first { a - x } else { a - x - 1.0 / prev };
        first = false;
        if d.abs() < PIVMIN {
            d = PIVMIN;
        }
        f(d);
        prev = d;
    }
}

/// Number of eigenvalues strictly below `x` (negative pivots of `T - x`).
pub fn negatives_below(diag: &[f64], x: f64) -> usize {
    let mut count = 0;
    pivots(diag, x, |d| count += usize::from(d < 0.0));
    count
}

/// `ln |det(T - x)| = Σ ln |d_k|`.
pub fn log_abs_det(op: &TridiagonalOperator, x: f64) -> f64 {
    let mut acc = 0.0;
    pivots(&op.diag, x, |d| acc += d.abs().ln());
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Window {
    /// `(-∞, x)`
    Below(f64),
    /// `(α, β]`
    HalfOpen(f64, f64),
    /// `[α, β]`
    Closed(f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralCount {
    pub window: Window,
    pub count: usize,
    pub dim: usize,
}

impl SpectralCount {
    pub fn fraction(&self) -> f64 {
        self.count as f64 / self.dim as f64
    }
}

pub fn count_below(op: &TridiagonalOperator, x: f64) -> SpectralCount {
    SpectralCount {
        window: Window::Below(x),
        count: negatives_below(&op.diag, x),
        dim: op.dim(),
    }
}

/// Eigenvalues in `(α, β]`.
pub fn count_in(op: &TridiagonalOperator, alpha: f64, beta: f64) -> Result<SpectralCount> {
    check_interval(alpha, beta)?;
    let count = negatives_below(&op.diag, beta.next_up()) - negatives_below(&op.diag, alpha.next_up());
    Ok(SpectralCount {
        window: Window::HalfOpen(alpha, beta),
        count,
        dim: op.dim(),
    })
}

/// Eigenvalues in `[α, β]`.
pub fn count_in_closed(op: &TridiagonalOperator, alpha: f64, beta: f64) -> Result<SpectralCount> {
    check_interval(alpha, beta)?;
    let count = negatives_below(&op.diag, beta.next_up()) - negatives_below(&op.diag, alpha);
    Ok(SpectralCount {
        window: Window::Closed(alpha, beta),
        count,
        dim: op.dim(),
    })
}

fn check_interval(alpha: f64, beta: f64) -> Result<()> {
    if alpha.is_nan() || beta.is_nan() || alpha > beta {
        return Err(Error::param("interval", format!("need α ≤ β, got [{alpha}, {beta}]")));
    }
    Ok(())
}

/// All eigenvalues in increasing order, each bisected on the counting
/// function down to adjacent floats. Intended for small dimensions.
pub fn eigenvalues(op: &TridiagonalOperator) -> Vec<f64> {
    let (lo0, hi0) = op.gershgorin();
    (0..op.dim())
        .map(|k| {
            // smallest x with more than k eigenvalues ≤ x
            let (mut lo, mut hi) = (lo0 - 1.0, hi0 + 1.0);
            loop {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break hi;
                }
                if negatives_below(&op.diag, mid.next_up()) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        })
        .collect()
}

/// `N(E)` estimated as the mean of `count_below(E)/dim` over `replicas`
/// truncations of independent stationary words.
pub fn ids_estimate(
    spec: &MarkovSpec,
    potential: &Potential,
    energy: f64,
    dim: usize,
    replicas: usize,
    seed: u64,
) -> Result<Estimate> {
    Ok(ids_curve(spec, potential, &[energy], dim, replicas, seed)?.remove(0))
}

/// [`ids_estimate`] at several energies, reusing each replica's operator so
/// that every replica's curve is monotone.
pub fn ids_curve(
    spec: &MarkovSpec,
    potential: &Potential,
    energies: &[f64],
    dim: usize,
    replicas: usize,
    seed: u64,
) -> Result<Vec<Estimate>> {
    if dim < 100 {
        return Err(Error::param("dim", "must be at least 100"));
    }
    if replicas == 0 {
        return Err(Error::param("replicas", "must be positive"));
    }
    let per_replica = replica_fractions(spec, potential, energies, dim, replicas, seed);
    Ok((0..energies.len())
        .map(|e| {
            let xs: Vec<f64> = per_replica.iter().map(|r| r[e]).collect();
            Estimate::from_samples(&xs)
        })
        .collect())
}

/// `count_below(E)/dim` per replica and energy.
pub fn replica_fractions(
    spec: &MarkovSpec,
    potential: &Potential,
    energies: &[f64],
    dim: usize,
    replicas: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let sampler = spec.sampler();
    rng::map_indexed(replicas, |r| {
        let mut g = rng::stream(seed, domain::IDS, r as u64);
        let mut word = Vec::new();
        sampler.fill(dim, &mut g, &mut word);
        let diag: Vec<f64> = word.iter().map(|&s| potential.at(s)).collect();
        energies
            .iter()
            .map(|&e| negatives_below(&diag, e) as f64 / dim as f64)
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::{sample_stationary, Word};
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::{E, PI};

    fn dense(op: &TridiagonalOperator) -> DMatrix<f64> {
        let n = op.dim();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                op.diag()[i]
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn truncation_shapes() {
        let w: Word = "0abc".parse().unwrap();
        let op = TridiagonalOperator::from_word(&w, 3).unwrap();
        assert_eq!(op.diag(), &[0.0, -E, -1.0 / E, -E]);
        assert_eq!(op.dim(), 4);
        assert!(matches!(
            TridiagonalOperator::from_word(&w, 4),
            Err(Error::WordTooShort { needed: 5, got: 4 })
        ));
        let zeros: Word = "0000".parse().unwrap();
        assert_eq!(TridiagonalOperator::from_word(&zeros, 2).unwrap(), TridiagonalOperator::free(3));
    }

    #[test]
    fn free_counts() {
        let op = TridiagonalOperator::free(5);
        assert_eq!(count_below(&op, 0.0).count, 2);
        let exact: Vec<f64> = (1..=5).map(|k| -2.0 * (k as f64 * PI / 6.0).cos()).collect();
        let mut sorted = exact.clone();
        sorted.sort_by(f64::total_cmp);
        for (a, b) in eigenvalues(&op).iter().zip(&sorted) {
            assert!((a - b).abs() < 1e-13);
        }
        // 0 is an eigenvalue of the free operator in odd dimension
        assert_eq!(count_in(&op, -1e-9, 1e-9).unwrap().count, 1);
        assert_eq!(count_in_closed(&op, -1e-9, 1e-9).unwrap().count, 1);
        assert_eq!(count_in(&op, 0.5, 1.5).unwrap().count, 1);
        assert_eq!(count_in(&op, -2.0, 2.0).unwrap().count, 5);
        assert!(count_in(&op, 1.0, 0.0).is_err());
    }

    #[test]
    fn gershgorin_bounds() {
        let mut r = rng::stream(2, 0, 0);
        let w = sample_stationary(&MarkovSpec::model(), 300, &mut r);
        let op = TridiagonalOperator::from_word(&w, 299).unwrap();
        let (lo, hi) = op.gershgorin();
        assert_eq!(count_below(&op, hi + 1e-9).count, op.dim());
        assert_eq!(count_below(&op, lo).count, 0);
        assert!(lo >= -E - 2.0 && hi <= 2.0);
    }

    #[test]
    fn dense_oracle_counts() {
        let spec = MarkovSpec::model();
        let mut r = rng::stream(99, 0, 0);
        for _ in 0..200 {
            let dim = r.random_range(1..=50);
            let w = sample_stationary(&spec, dim, &mut r);
            let op = TridiagonalOperator::from_word(&w, dim - 1).unwrap();
            let eig = dense(&op).symmetric_eigenvalues();
            for _ in 0..10 {
                let x = r.random_range(-E - 2.5..2.5);
                if eig.iter().any(|l| (l - x).abs() < 1e-9) {
                    continue;
                }
                let expect = eig.iter().filter(|&&l| l < x).count();
                assert_eq!(count_below(&op, x).count, expect);
            }
        }
    }

    #[test]
    fn bisection_matches_dense() {
        let mut r = rng::stream(4, 0, 0);
        let w = sample_stationary(&MarkovSpec::model(), 40, &mut r);
        let op = TridiagonalOperator::from_word(&w, 39).unwrap();
        let mut eig: Vec<f64> = dense(&op).symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        for (a, b) in eigenvalues(&op).iter().zip(&eig) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn log_det_matches_dense() {
        let op = TridiagonalOperator::from_diag(vec![0.3, -1.2, 2.0, 0.0, -0.5]);
        let x = 0.17;
        let shifted = dense(&op) - DMatrix::identity(5, 5) * x;
        assert!((log_abs_det(&op, x) - shifted.determinant().abs().ln()).abs() < 1e-12);
    }

    #[test]
    fn partition_sums_to_dim() {
        let mut r = rng::stream(8, 0, 0);
        let w = sample_stationary(&MarkovSpec::model(), 500, &mut r);
        let op = TridiagonalOperator::from_word(&w, 499).unwrap();
        let (lo, hi) = (-E - 2.0, E + 2.0);
        let cuts: Vec<f64> = (0..=37).map(|k| lo + (hi - lo) * k as f64 / 37.0).collect();
        let total: usize = cuts
            .windows(2)
            .map(|c| count_in(&op, c[0], c[1]).unwrap().count)
            .sum();
        assert_eq!(total + count_below(&op, lo.next_up()).count, op.dim());
    }

    #[test]
    fn splitting_changes_counts_by_at_most_two() {
        // H on 2d sites is the direct sum of its halves plus a rank-2 coupling
        let mut r = rng::stream(12, 0, 0);
        let w = sample_stationary(&MarkovSpec::model(), 800, &mut r);
        let whole = TridiagonalOperator::from_word(&w, 799).unwrap();
        let left = TridiagonalOperator::from_word(&w[..400], 399).unwrap();
        let right = TridiagonalOperator::from_word(&w[400..], 399).unwrap();
        for k in 0..=50 {
            let x = -5.0 + 0.15 * k as f64;
            let a = count_below(&whole, x).count as i64;
            let b = (count_below(&left, x).count + count_below(&right, x).count) as i64;
            assert!((a - b).abs() <= 2);
        }
    }

    #[test]
    fn free_ids() {
        let op = TridiagonalOperator::free(10_000);
        assert_eq!(count_below(&op, 0.0).fraction(), 0.5);
        for e in [-1.5, -0.3, 1.0, 1.9] {
            let n: f64 = (-e / 2.0f64).acos() / PI;
            assert!((count_below(&op, e).fraction() - n).abs() <= 2e-4);
        }
        let twice = TridiagonalOperator::free(20_000);
        for e in [-1.0, 0.5] {
            let d = count_below(&op, e).fraction() - count_below(&twice, e).fraction();
            assert!(d.abs() <= 4.0 / 10_000.0);
        }
    }

    #[test]
    fn ids_limits_and_monotonicity() {
        let spec = MarkovSpec::model();
        let energies = [-10.0, -2.0, -1.0, 0.0, 1.0, 10.0];
        let rows = replica_fractions(&spec, &Potential::model(), &energies, 400, 8, 3);
        for row in &rows {
            assert_eq!(row[0], 0.0);
            assert_eq!(row[5], 1.0);
            assert!(row.windows(2).all(|p| p[0] <= p[1]));
        }
        let est = ids_estimate(&spec, &Potential::free(), 0.0, 1000, 4, 1).unwrap();
        assert_eq!(est.value, 0.5);
        assert!(ids_estimate(&spec, &Potential::free(), 0.0, 50, 4, 1).is_err());
    }

    #[test]
    fn csv_export() {
        let mut buf = Vec::new();
        TridiagonalOperator::from_diag(vec![0.0, -1.5]).write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "index,diag\n0,0\n1,-1.5\n");
    }

    proptest! {
        #[test]
        fn counts_are_monotone(diag in prop::collection::vec(-4.0f64..4.0, 1..60), a in -7.0f64..7.0, b in -7.0f64..7.0) {
            let op = TridiagonalOperator::from_diag(diag);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let c_lo = count_below(&op, lo).count;
            let c_hi = count_below(&op, hi).count;
            prop_assert!(c_lo <= c_hi && c_hi <= op.dim());
            prop_assert_eq!(count_in(&op, lo, hi).unwrap().count + count_below(&op, lo.next_up()).count,
                count_below(&op, hi.next_up()).count);
        }
    }
}
