use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::normal::normal_cdf;
use super::pascal::{closed_form, PascalTable};
use super::{binomial, ratio, to_f64, ThresholdRule};
use crate::error::{Error, Result};
use crate::sl2::{FastForm, Klass, Letter};

/// Largest `n` accepted by [`en_by_enumeration`].
pub const ENUMERATION_CAP: usize = 26;

/// `P(diagonal class and κ ≥ threshold)` over uniform `{C, D}ⁿ`, read off a
/// Pascal table of depth at least `n`.
pub fn event_probability_en(
    table: &PascalTable,
    n: usize,
    rule: ThresholdRule,
) -> Result<BigRational> {
    if n == 0 || n > table.depth() {
        return Err(Error::param(
            "n",
            format!("must lie in 1..={}", table.depth()),
        ));
    }
    let t = rule.min_kappa(n as u64);
    let count: BigUint = (t..=n as i64).map(|i| table.a_plus(n, i)).sum();
    Ok(ratio(count, BigUint::one() << n))
}

/// Same probability from the binomial closed forms (no table needed).
pub fn event_probability_en_binomial(n: usize, rule: ThresholdRule) -> BigRational {
    let t = rule.min_kappa(n as u64);
    let count: BigUint = (t..=n as i64)
        .filter(|i| (n as i64 + i) % 2 == 0)
        .map(|i| closed_form(n, i))
        .sum();
    ratio(count, BigUint::one() << n)
}

/// Same probability by walking all `2ⁿ` words.
pub fn en_by_enumeration(n: usize, rule: ThresholdRule) -> Result<BigRational> {
    if n > ENUMERATION_CAP {
        return Err(Error::SizeCap {
            n,
            cap: ENUMERATION_CAP,
        });
    }
    fn walk(form: FastForm, left: usize, t: i64, hits: &mut u64) {
        if left == 0 {
            if form.klass == Klass::Diagonal && form.kappa >= t {
                *hits += 1;
            }
            return;
        }
        for letter in [Letter::C, Letter::D] {
            let mut next = form;
            next.push(letter);
            walk(next, left - 1, t, hits);
        }
    }
    let mut hits = 0;
    walk(FastForm::IDENTITY, n, rule.min_kappa(n as u64), &mut hits);
    Ok(ratio(BigUint::from(hits), BigUint::one() << n))
}

/// The displayed two-case binomial sum, normalized by `2^{n-1}`:
/// the sum runs over `i ≥ v/2 + ⌊(n-1)/2⌋` for even `n` and over
/// `i ≥ v/2 + ⌊n/2⌋ - 1/2` for odd `n`, where `v` is the rule's threshold.
pub fn en_displayed_formula(n: usize, rule: ThresholdRule) -> BigRational {
    if n == 0 {
        return BigRational::zero();
    }
    let n64 = n as i64;
    // d = 2i - 2·offset must satisfy d ≥ v; offset carries the half shift.
    let shifted = |i: i64| -> i64 {
        if n.is_multiple_of(2) {
            2 * i - 2 * ((n64 - 1) / 2)
        } else {
            2 * i - 2 * (n64 / 2) + 1
        }
    };
    let target = rule.num_sq as i128 * n as i128;
    let mut sum = BigUint::zero();
    for i in 0..n as u64 {
        let d = shifted(i as i64) as i128;
        if d >= 0 && rule.den_sq as i128 * d * d >= target {
            sum += binomial(n as u64 - 1, i);
        }
    }
    ratio(sum, BigUint::one() << (n - 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Normalization {
    /// The limit equals `1 − F(threshold factor)`.
    Full,
    /// The limit equals half of it.
    Half,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnRow {
    pub n: usize,
    /// Ground truth from the table.
    pub exact: f64,
    /// The displayed sum with its `2^{n-1}` normalization.
    pub displayed: f64,
    /// The displayed sum renormalized by `2ⁿ`.
    pub displayed_2n: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnConvergence {
    pub rows: Vec<EnRow>,
    pub tail_from: usize,
    pub tail_mean: f64,
    pub tail_min: f64,
    pub tail_max: f64,
    pub full_constant: f64,
    pub half_constant: f64,
    pub verdict: Normalization,
}

/// Tabulates `P(E_n)` for `n = 1..=n_max` and decides which constant the
/// tail (last quarter, at least the last 10 rows) is closest to.
pub fn en_convergence(n_max: usize) -> Result<EnConvergence> {
    if n_max < 8 {
        return Err(Error::param("n_max", "must be at least 8"));
    }
    let rule = ThresholdRule::WALK;
    let table = super::pascal_table(n_max)?;
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let exact = to_f64(&event_probability_en(&table, n, rule)?);
        let displayed = to_f64(&en_displayed_formula(n, rule));
        rows.push(EnRow {
            n,
            exact,
            displayed,
            displayed_2n: displayed / 2.0,
        });
    }
    let tail_from = n_max - (n_max / 4).max(10) + 1;
    let tail: Vec<f64> = rows[tail_from - 1..].iter().map(|r| r.exact).collect();
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let full_constant = 1.0 - normal_cdf(rule.value(1));
    let half_constant = full_constant / 2.0;
    let verdict = if (tail_mean - half_constant).abs() < (tail_mean - full_constant).abs() {
        Normalization::Half
    } else {
        Normalization::Full
    };
    Ok(EnConvergence {
        tail_from,
        tail_mean,
        tail_min: tail.iter().copied().fold(f64::INFINITY, f64::min),
        tail_max: tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        rows,
        full_constant,
        half_constant,
        verdict,
    })
}
