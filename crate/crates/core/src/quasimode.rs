//! Quasi-eigenfunctions at `E = 0`, Temple counting, and the block
//! experiment bounding the spectral mass near zero from below.

use std::io::Write;
use std::ops::Range;

use serde::Serialize;

use crate::combinatorics::{event_cl, BlockEvent, EventMode};
use crate::error::{Error, Result};
use crate::rng::{self, domain};
use crate::sl2::Klass;
use crate::spectra::{count_in_closed, TridiagonalOperator};
use crate::words::{fast_form, MarkovSpec, Symbol};

/// Finitely supported vector `ψ` with `‖Hψ‖ ≤ residual` and `‖ψ‖ ≥ norm_lb`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuasiMode {
    /// Index of `values[0]` in the ambient operator.
    pub start: usize,
    pub values: Vec<f64>,
    pub residual: f64,
    pub norm_lb: f64,
    pub k1: i64,
    pub k2: i64,
}

impl QuasiMode {
    pub fn support(&self) -> Range<usize> {
        self.start..self.start + self.values.len()
    }

    pub fn norm(&self) -> f64 {
        scaled_norm(self.values.iter().copied())
    }

    /// Upper bound on `‖Hψ‖/‖ψ‖`.
    pub fn certified_ratio(&self) -> f64 {
        self.residual / self.norm_lb
    }

    pub fn shifted(mut self, offset: usize) -> Self {
        self.start += offset;
        self
    }

    /// `‖(H - e0)ψ‖` over the support and its two neighbours, reading the
    /// potential from `op` (sites outside `op` are dropped).
    pub fn residual_in(&self, op: &TridiagonalOperator, e0: f64) -> f64 {
        let diag = op.diag();
        let lo = self.start.saturating_sub(1);
        let hi = (self.start + self.values.len() + 1).min(diag.len());
        let at = |j: usize| -> f64 {
            j.checked_sub(self.start)
                .and_then(|k| self.values.get(k))
                .copied()
                .unwrap_or(0.0)
        };
        scaled_norm((lo..hi).map(|j| {
            let left = if j > 0 { at(j - 1) } else { 0.0 };
            (diag[j] - e0) * at(j) - left - at(j + 1)
        }))
    }
}

/// Euclidean norm without intermediate overflow.
fn scaled_norm<I: Iterator<Item = f64> + Clone>(xs: I) -> f64 {
    let scale = xs.clone().fold(0.0, |m: f64, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * xs.map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

/// Diagonal product form with positive exponent, or the reason it is not.
fn positive_diagonal(half: &[Symbol], side: &str) -> Result<i64> {
    let form = fast_form(half).ok_or_else(|| Error::NotAdmissible(crate::words::render(half)))?;
    if form.klass != Klass::Diagonal || form.kappa < 1 {
        return Err(Error::Quasimode(format!(
            "{side} half must be ±diag(e^k, e^-k) with k ≥ 1, got {:?} class with κ = {}",
            form.klass, form.kappa
        )));
    }
    Ok(form.kappa)
}

/// Quasimode of the admissible word `w₁ 0 w₂` where `w₁ = w[..q]`.
///
/// Both halves must have products `±diag(e^{k}, e^{-k})` with `k ≥ 1`. The
/// vector starts from `(ψ₀, ψ₋₁) = (e^{-k₁}, 0)`, reaches `|ψ_q| = 1`, and
/// ends at `(ψ_{n+1}, ψ_n) = (0, ±e^{-k₂})`; its only nonzero residuals sit
/// just outside the support.
pub fn build_quasimode(w: &[Symbol], q: usize) -> Result<QuasiMode> {
    if q >= w.len() || w[q] != Symbol::Zero {
        return Err(Error::Quasimode(format!("no middle 0 at index {q}")));
    }
    let k1 = positive_diagonal(&w[..q], "left")?;
    let k2 = positive_diagonal(&w[q + 1..], "right")?;
    // At letter boundaries (ψ_j, ψ_{j-1}) = sign · e^t · e_first-or-second,
    // tracked exactly: C maps e₁ → e₂ → -e₁, D scales e₁ by e and e₂ by 1/e.
    let (mut first, mut negative, mut t) = (true, false, -k1);
    let lead = |first: bool, negative: bool, t: i64| -> (f64, f64) {
        let mag = (t as f64).exp();
        let v = if negative { -mag } else { mag };
        if first {
            (v, 0.0)
        } else {
            (0.0, v)
        }
    };
    let mut values = Vec::with_capacity(w.len());
    let mut j = 0;
    while j < w.len() {
        let (cur, prev) = lead(first, negative, t);
        values.push(cur);
        if w[j] == Symbol::Zero {
            negative ^= !first;
            first = !first;
            j += 1;
        } else {
            // an `abc` block; admissibility was checked above
            let next = w[j].potential() * cur - prev;
            values.push(next);
            values.push(w[j + 1].potential() * next - cur);
            t += if first { 1 } else { -1 };
            j += 3;
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Quasimode("ψ overflows f64".into()));
    }
    if (first, t) != (false, -k2) {
        return Err(Error::Quasimode("terminal state is not (0, ±e^-k₂)".into()));
    }
    let residual = (((-2 * k1) as f64).exp() + ((-2 * k2) as f64).exp()).sqrt();
    Ok(QuasiMode {
        start: 0,
        values,
        residual,
        norm_lb: 1.0,
        k1,
        k2,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Rejection {
    /// Support out of the operator's range.
    OutOfRange,
    /// Fewer than two free sites between this support and an admitted one.
    Overlap { with: usize },
    /// Recomputed `‖(H - E₀)ψ‖/‖ψ‖` exceeds `ε`.
    Residual { ratio: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct TempleCount {
    pub admitted: usize,
    pub epsilon: f64,
    /// Largest recomputed ratio among admitted modes.
    pub max_ratio: f64,
    pub rejected: Vec<(usize, Rejection)>,
}

/// Lower bound on the number of eigenvalues of `op` in `[e0 - ε, e0 + ε]`.
///
/// Modes are admitted in order of their start index. An admitted mode has a
/// recomputed residual ratio at most `ε` and at least two free sites to the
/// previous admitted support, so that `ψ_i ⟂ ψ_j`, `ψ_i ⟂ Hψ_j` and
/// `Hψ_i ⟂ Hψ_j`.
pub fn temple_count(op: &TridiagonalOperator, modes: &[QuasiMode], e0: f64, eps: f64) -> TempleCount {
    let mut order: Vec<usize> = (0..modes.len()).collect();
    order.sort_by_key(|&i| modes[i].start);
    let mut rejected = Vec::new();
    let mut last: Option<(usize, usize)> = None;
    let mut admitted = 0;
    let mut max_ratio: f64 = 0.0;
    for i in order {
        let mode = &modes[i];
        if mode.values.is_empty() || mode.support().end > op.dim() {
            rejected.push((i, Rejection::OutOfRange));
            continue;
        }
        if let Some((j, end)) = last {
            if mode.start < end + 2 {
                rejected.push((i, Rejection::Overlap { with: j }));
                continue;
            }
        }
        let ratio = mode.residual_in(op, e0) / mode.norm();
        if !(ratio <= eps) {
            rejected.push((i, Rejection::Residual { ratio }));
            continue;
        }
        max_ratio = max_ratio.max(ratio);
        admitted += 1;
        last = Some((i, mode.support().end));
    }
    TempleCount {
        admitted,
        epsilon: eps,
        max_ratio,
        rejected,
    }
}

/// `m` consecutive blocks of length `2l + 3` covering `[0, L)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BlockLayout {
    pub l: usize,
    pub m: usize,
}

impl BlockLayout {
    pub fn new(l: usize, m: usize) -> Result<Self> {
        if l == 0 || m == 0 {
            return Err(Error::param("l, m", "must be positive"));
        }
        Ok(BlockLayout { l, m })
    }

    pub fn block_len(&self) -> usize {
        2 * self.l + 3
    }

    /// `L = m(2l + 3)`.
    pub fn total_len(&self) -> usize {
        self.m * self.block_len()
    }

    /// Block `j` (from 0).
    pub fn block(&self, j: usize) -> Range<usize> {
        let s = j * self.block_len();
        s..s + self.block_len()
    }

    /// Block `j` without its two endpoints; length `2l + 1`.
    pub fn inner(&self, j: usize) -> Range<usize> {
        let b = self.block(j);
        b.start + 1..b.end - 1
    }

    pub fn event(&self) -> BlockEvent {
        BlockEvent::inner(self.l)
    }
}

/// Indices of blocks whose inner part lies in the inner block event.
pub fn good_blocks(w: &[Symbol], layout: &BlockLayout) -> Result<Vec<usize>> {
    if w.len() < layout.total_len() {
        return Err(Error::WordTooShort {
            needed: layout.total_len(),
            got: w.len(),
        });
    }
    let ev = layout.event();
    Ok((0..layout.m)
        .filter(|&j| ev.contains_concat(&w[layout.inner(j)]))
        .collect())
}

/// `n_{l,m}(w)`, the number of good blocks.
pub fn count_good_blocks(w: &[Symbol], layout: &BlockLayout) -> Result<usize> {
    good_blocks(w, layout).map(|g| g.len())
}

/// Quasimodes of every good block, placed on the inner blocks.
pub fn block_quasimodes(w: &[Symbol], layout: &BlockLayout) -> Result<Vec<QuasiMode>> {
    good_blocks(w, layout)?
        .into_iter()
        .map(|j| {
            let r = layout.inner(j);
            build_quasimode(&w[r.clone()], layout.l).map(|m| m.shifted(r.start))
        })
        .collect()
}

/// `√2 e^{-K_l}` with the real threshold `K_l = √(l/3)/10`.
pub fn epsilon_l(l: usize) -> f64 {
    2f64.sqrt() * (-BlockEvent::inner(l).k_l()).exp()
}

/// Largest supported truncation length.
pub const MAX_GAP_LEN: usize = 10_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct GapReplica {
    pub n_lm: usize,
    pub count: usize,
    pub temple: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapRecord {
    pub l: usize,
    pub k_l: f64,
    pub epsilon: f64,
    pub len: usize,
    pub m: usize,
    pub replicas: usize,
    pub n_lm_mean: f64,
    pub count_mean: f64,
    /// Mean of `count / L`.
    pub gap_estimate: f64,
    /// Probability that a window of length `2l + 1` is a good block.
    pub p_cl_hat: f64,
    /// `p_cl_hat / (2l + 3)`.
    pub lower_bound: f64,
    /// Replicas with `count < n_{l,m}`.
    pub violations: usize,
    /// Replicas whose Temple count exceeds the eigenvalue count.
    pub temple_violations: usize,
    /// Good blocks whose quasimode could not be built.
    pub construction_failures: usize,
    pub per_replica: Vec<GapReplica>,
}

impl GapRecord {
    pub const CSV_HEADER: [&'static str; 11] = [
        "l",
        "K_l",
        "epsilon",
        "L",
        "m",
        "replicas",
        "n_lm_mean",
        "count_mean",
        "gap_estimate",
        "p_Cl_hat",
        "lower_bound",
    ];

    pub fn csv_row(&self) -> [String; 11] {
        [
            self.l.to_string(),
            self.k_l.to_string(),
            self.epsilon.to_string(),
            self.len.to_string(),
            self.m.to_string(),
            self.replicas.to_string(),
            self.n_lm_mean.to_string(),
            self.count_mean.to_string(),
            self.gap_estimate.to_string(),
            self.p_cl_hat.to_string(),
            self.lower_bound.to_string(),
        ]
    }

    /// Per-replica table `l,replica,n_lm,count,temple`.
    pub fn write_replicas_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["l", "replica", "n_lm", "count", "temple"])?;
        for (r, rep) in self.per_replica.iter().enumerate() {
            w.write_record([
                self.l.to_string(),
                r.to_string(),
                rep.n_lm.to_string(),
                rep.count.to_string(),
                rep.temple.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Export(e.to_string()))
    }
}

pub fn write_gap_csv<W: Write>(records: &[GapRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GapRecord::CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_row())?;
    }
    w.flush().map_err(|e| Error::Export(e.to_string()))
}

/// Samples `replicas` stationary words of length `L = m(2l + 3)` and, on
/// each, compares the eigenvalue count of `H^{(L)}` in `[-ε_l, ε_l]` with the
/// number of good blocks and with the Temple count of their quasimodes.
pub fn gap_experiment(l: usize, m: usize, replicas: usize, seed: u64) -> Result<GapRecord> {
    if l < 27 {
        return Err(Error::param("l", "must be at least 27"));
    }
    if replicas == 0 {
        return Err(Error::param("replicas", "must be positive"));
    }
    let layout = BlockLayout::new(l, m)?;
    let len = layout.total_len();
    if len > MAX_GAP_LEN {
        return Err(Error::param("m", format!("L = m(2l+3) = {len} exceeds {MAX_GAP_LEN}")));
    }
    let eps = epsilon_l(l);
    let sampler = MarkovSpec::model().sampler();
    let results = rng::map_indexed(replicas, |r| -> Result<(GapReplica, usize)> {
        let mut g = rng::stream(seed, domain::GAP, r as u64);
        let mut w = Vec::with_capacity(len);
        sampler.fill(len, &mut g, &mut w);
        let op = TridiagonalOperator::from_word(&w, len - 1)?;
        let good = good_blocks(&w, &layout)?;
        let mut modes = Vec::with_capacity(good.len());
        let mut failures = 0;
        for &j in &good {
            let range = layout.inner(j);
            match build_quasimode(&w[range.clone()], l) {
                Ok(mode) => modes.push(mode.shifted(range.start)),
                Err(_) => failures += 1,
            }
        }
        let temple = temple_count(&op, &modes, 0.0, eps).admitted;
        let count = count_in_closed(&op, -eps, eps)?.count;
        Ok((
            GapReplica {
                n_lm: good.len(),
                count,
                temple,
            },
            failures,
        ))
    });
    let mut per_replica = Vec::with_capacity(replicas);
    let mut construction_failures = 0;
    for res in results {
        let (rep, f) = res?;
        construction_failures += f;
        per_replica.push(rep);
    }
    let mean = |f: &dyn Fn(&GapReplica) -> f64| per_replica.iter().map(f).sum::<f64>() / replicas as f64;
    let n_lm_mean = mean(&|r| r.n_lm as f64);
    let count_mean = mean(&|r| r.count as f64);
    let p_cl_hat = event_cl(&layout.event(), &MarkovSpec::model(), EventMode::ClosedForm)?.value;
    Ok(GapRecord {
        l,
        k_l: layout.event().k_l(),
        epsilon: eps,
        len,
        m,
        replicas,
        n_lm_mean,
        count_mean,
        gap_estimate: count_mean / len as f64,
        p_cl_hat,
        lower_bound: p_cl_hat / layout.block_len() as f64,
        violations: per_replica.iter().filter(|r| r.count < r.n_lm).count(),
        temple_violations: per_replica.iter().filter(|r| r.temple > r.count).count(),
        construction_failures,
        per_replica,
    })
}

/// Largest `m` with `m(2l + 3) ≤ max_len`.
pub fn blocks_within(l: usize, max_len: usize) -> usize {
    max_len / (2 * l + 3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sl2::{FastForm, Letter};
    use crate::spectra::eigenvalues;
    use crate::words::{from_letters, sample_stationary};
    use rand::Rng;

    fn word(letters: &[Letter]) -> Vec<Symbol> {
        from_letters(letters).0
    }

    /// `D^k` padded with `CC` pairs (`CC = -I`), so the product stays diagonal.
    fn half(k: usize, pairs: usize) -> Vec<Symbol> {
        let mut letters = vec![Letter::D; k];
        for _ in 0..pairs {
            letters.extend([Letter::C, Letter::C]);
        }
        word(&letters)
    }

    fn concat(w1: &[Symbol], w2: &[Symbol]) -> Vec<Symbol> {
        let mut w = w1.to_vec();
        w.push(Symbol::Zero);
        w.extend_from_slice(w2);
        w
    }

    #[test]
    fn endpoint_states() {
        let w1 = half(2, 1);
        let w2 = half(3, 0);
        let w = concat(&w1, &w2);
        let mode = build_quasimode(&w, w1.len()).unwrap();
        let q = w1.len();
        // (ψ_q, ψ_{q-1}) = ±(1, 0)
        assert!((mode.values[q].abs() - 1.0).abs() < 1e-14);
        assert!(mode.values[q - 1].abs() < 1e-14);
        let n = w.len() - 1;
        assert!((mode.values[n].abs() - (-3f64).exp()).abs() < 1e-14);
        let next = w[n].potential() * mode.values[n] - mode.values[n - 1];
        assert!(next.abs() < 1e-14);
        assert!(mode.norm() >= 1.0);
        let r = mode.residual;
        assert!((r - ((-4f64).exp() + (-6f64).exp()).sqrt()).abs() < 1e-15);
        let both = build_quasimode(&concat(&half(2, 0), &half(2, 2)), 6).unwrap();
        assert!((both.residual - 2f64.sqrt() * (-2f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_halves() {
        let w = concat(&word(&[Letter::C, Letter::D]), &half(1, 0));
        assert!(build_quasimode(&w, 4).is_err());
        let w = concat(&half(0, 1), &half(1, 0));
        assert!(build_quasimode(&w, 2).is_err());
        let w = concat(&half(1, 0), &half(1, 0));
        assert!(build_quasimode(&w, 2).is_err());
        assert!(build_quasimode(&w, 3).is_ok());
        assert!(build_quasimode(&[Symbol::A, Symbol::Zero], 1).is_err());
    }

    #[test]
    fn residual_matches_dense_product_on_random_instances() {
        let mut g = rng::stream(1, domain::GAP, 1 << 20);
        for _ in 0..100 {
            let w1 = random_half(&mut g);
            let w2 = random_half(&mut g);
            let w = concat(&w1, &w2);
            let mode = build_quasimode(&w, w1.len()).unwrap();
            // embed in a longer operator with random surroundings
            let pad: usize = g.random_range(1..6);
            let mut full: Vec<Symbol> = (0..pad).map(|_| Symbol::from_index(g.random_range(0..4))).collect();
            full.extend_from_slice(&w);
            full.extend((0..pad).map(|_| Symbol::from_index(g.random_range(0..4))));
            let op = TridiagonalOperator::from_word(&full, full.len() - 1).unwrap();
            let mut psi = vec![0.0; full.len()];
            psi[pad..pad + w.len()].copy_from_slice(&mode.values);
            let h = op.apply(&psi);
            let dense = h.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((dense - mode.residual).abs() < 1e-12, "{dense} vs {}", mode.residual);
            let local = mode.clone().shifted(pad).residual_in(&op, 0.0);
            assert!((local - dense).abs() < 1e-14);
            assert!(dense / mode.norm() <= mode.certified_ratio() + 1e-15);
        }
    }

    /// Random half word with a positive diagonal product.
    fn random_half<R: Rng>(g: &mut R) -> Vec<Symbol> {
        loop {
            let len: usize = g.random_range(1..14);
            let letters: Vec<Letter> = (0..len)
                .map(|_| if g.random::<bool>() { Letter::D } else { Letter::C })
                .collect();
            let f = FastForm::classify(&letters);
            if f.klass == Klass::Diagonal && f.kappa >= 1 {
                return word(&letters);
            }
        }
    }

    #[test]
    fn exact_eigenvector_is_counted() {
        let op = TridiagonalOperator::from_diag((0..12).map(|j| (j as f64 * 0.37).sin()).collect());
        let dense = nalgebra::DMatrix::from_fn(12, 12, |i, j| {
            if i == j {
                op.diag()[i]
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let eig = dense.symmetric_eigen();
        let v: Vec<f64> = eig.eigenvectors.column(4).iter().copied().collect();
        let lambda = eig.eigenvalues[4];
        let mode = QuasiMode {
            start: 0,
            values: v,
            residual: 1e-12,
            norm_lb: 1.0,
            k1: 0,
            k2: 0,
        };
        let t = temple_count(&op, &[mode], lambda, 1e-10);
        assert_eq!(t.admitted, 1);
        assert!(count_in_closed(&op, lambda - 1e-10, lambda + 1e-10).unwrap().count >= 1);
    }

    #[test]
    fn temple_never_exceeds_sturm() {
        let mut g = rng::stream(2, domain::GAP, 1 << 21);
        for _ in 0..500 {
            let mut full = Vec::new();
            let mut modes = Vec::new();
            let blocks: usize = g.random_range(1..5);
            for _ in 0..blocks {
                let gap: usize = g.random_range(0..4);
                full.extend((0..gap).map(|_| Symbol::Zero));
                let w1 = random_half(&mut g);
                let w = concat(&w1, &random_half(&mut g));
                let start = full.len();
                modes.push(build_quasimode(&w, w1.len()).unwrap().shifted(start));
                full.extend_from_slice(&w);
            }
            full.extend((0..g.random_range(0..4)).map(|_| Symbol::Zero));
            let op = TridiagonalOperator::from_word(&full, full.len() - 1).unwrap();
            let eps = modes.iter().map(|m| m.certified_ratio()).fold(0.0, f64::max) * (1.0 + 1e-9);
            let t = temple_count(&op, &modes, 0.0, eps);
            let sturm = count_in_closed(&op, -eps, eps).unwrap().count;
            assert!(t.admitted <= sturm, "{} > {sturm}", t.admitted);
            assert!(t.admitted >= 1);
            // the admitted modes also bound the dense spectrum
            let near = eigenvalues(&op).iter().filter(|x| x.abs() <= eps).count();
            assert!(t.admitted <= near + 1);
        }
    }

    #[test]
    fn shifted_copies_are_all_counted() {
        let w1 = half(2, 1);
        let w = concat(&w1, &half(2, 0));
        let base = build_quasimode(&w, w1.len()).unwrap();
        let period = w.len() + 2;
        let k = 6;
        let mut full = Vec::new();
        for _ in 0..k {
            full.extend_from_slice(&w);
            full.extend([Symbol::Zero, Symbol::Zero]);
        }
        let modes: Vec<QuasiMode> = (0..k).map(|j| base.clone().shifted(j * period)).collect();
        let op = TridiagonalOperator::from_word(&full, full.len() - 1).unwrap();
        let eps = base.certified_ratio();
        let t = temple_count(&op, &modes, 0.0, eps);
        assert_eq!(t.admitted, k);
        assert!(count_in_closed(&op, -eps, eps).unwrap().count >= k);
        // adjacent copies with one free site violate the separation rule
        let tight: Vec<QuasiMode> = (0..2).map(|j| base.clone().shifted(j * (w.len() + 1))).collect();
        let t = temple_count(&op, &tight, 0.0, eps);
        assert_eq!(t.admitted, 1);
        assert!(matches!(t.rejected[0].1, Rejection::Overlap { .. }));
    }

    #[test]
    fn layout_partitions() {
        let lay = BlockLayout::new(5, 4).unwrap();
        assert_eq!(lay.total_len(), 52);
        let mut next = 0;
        for j in 0..lay.m {
            let b = lay.block(j);
            assert_eq!(b.start, next);
            assert_eq!(b.len(), 13);
            let i = lay.inner(j);
            assert_eq!((i.start, i.end), (b.start + 1, b.end - 1));
            next = b.end;
        }
        assert_eq!(next, lay.total_len());
        // 1-based closed form [2(j-1)l + 3(j-1), 2jl + 3j - 1]
        for j in 1..=4usize {
            let b = lay.block(j - 1);
            assert_eq!((b.start, b.end - 1), (2 * (j - 1) * 5 + 3 * (j - 1), 2 * j * 5 + 3 * j - 1));
        }
    }

    #[test]
    fn hand_built_good_block() {
        // l = 300: halves of length 300 with κ ≥ 1
        let l = 300;
        let lay = BlockLayout::new(l, 3).unwrap();
        let mut w = vec![Symbol::Zero; lay.total_len()];
        let h = half(2, 147);
        assert_eq!(h.len(), l);
        let inner = concat(&h, &h);
        let r = lay.inner(0);
        w[r].copy_from_slice(&inner);
        assert_eq!(count_good_blocks(&w, &lay).unwrap(), 1);
        let modes = block_quasimodes(&w, &lay).unwrap();
        assert_eq!(modes[0].start, 1);
        assert!(count_good_blocks(&w[..10], &lay).is_err());
    }

    #[test]
    fn good_block_rate_matches_event_probability() {
        let l = 48;
        let m = 10_000;
        let lay = BlockLayout::new(l, m).unwrap();
        let mut g = rng::stream(3, domain::GAP, 1 << 22);
        let w = sample_stationary(&MarkovSpec::model(), lay.total_len(), &mut g);
        let good = good_blocks(&w, &lay).unwrap();
        let p = event_cl(&lay.event(), &MarkovSpec::model(), EventMode::ClosedFormExact)
            .unwrap()
            .value;
        let sigma = (p * (1.0 - p) / m as f64).sqrt();
        let rate = good.len() as f64 / m as f64;
        assert!((rate - p).abs() <= 3.0 * sigma, "{rate} vs {p}");
        // every flagged block admits a quasimode
        for j in good {
            let r = lay.inner(j);
            assert!(build_quasimode(&w[r], l).is_ok());
        }
    }

    #[test]
    fn epsilon_and_small_experiment() {
        assert!((epsilon_l(300) - 2f64.sqrt() / std::f64::consts::E).abs() < 1e-15);
        let rec = gap_experiment(48, 200, 4, 5).unwrap();
        assert_eq!(rec.violations, 0);
        assert_eq!(rec.temple_violations, 0);
        assert_eq!(rec.construction_failures, 0);
        for rep in &rec.per_replica {
            assert!(rep.temple == rep.n_lm && rep.count >= rep.n_lm);
        }
        assert!(rec.gap_estimate >= rec.lower_bound);
        let again = gap_experiment(48, 200, 4, 5).unwrap();
        assert_eq!(again.csv_row(), rec.csv_row());
        assert!(gap_experiment(10, 10, 1, 0).is_err());
        assert!(gap_experiment(300, 20_000, 1, 0).is_err());
        let mut buf = Vec::new();
        write_gap_csv(&[rec], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("l,K_l,epsilon,L,m,"));
    }
}
