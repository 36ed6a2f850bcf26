//! Exact combinatorics of the sign/exponent walk and the events built on it.

mod blocks;
mod events;
mod narayana;
mod normal;
mod pascal;

pub use blocks::{
    block_decomposition, event_bl, event_cl, BlockEvent, DecompositionTerm, EventMode,
    EventProbability,
};
pub use events::{
    en_by_enumeration, en_convergence, en_displayed_formula, event_probability_en,
    event_probability_en_binomial, EnConvergence, EnRow, Normalization,
};
pub use narayana::{
    admissible_probability, narayana_counts, pisot_lambda, pisot_ratio, CountSequences,
    UniformAllowable,
};
pub use normal::{berry_esseen_gap, default_grid, normal_cdf, tn_cdf_exact, BERRY_ESSEEN_C};
pub use pascal::{closed_form, pascal_table, PascalTable};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Lower bound `κ ≥ √(num_sq · x / den_sq)` on the exponent, kept in squared
/// integer form so that the comparison is exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub num_sq: u64,
    pub den_sq: u64,
}

impl ThresholdRule {
    /// `κ ≥ √n / 10`.
    pub const WALK: ThresholdRule = ThresholdRule { num_sq: 1, den_sq: 100 };
    /// `κ ≥ √(l/3) / 10`.
    pub const BLOCK: ThresholdRule = ThresholdRule { num_sq: 1, den_sq: 300 };

    /// Real threshold `√(num_sq · x / den_sq)`.
    pub fn value(&self, x: u64) -> f64 {
        (self.num_sq as f64 * x as f64 / self.den_sq as f64).sqrt()
    }

    /// Smallest integer `κ ≥ 0` that passes, i.e. `⌈value(x)⌉`.
    pub fn min_kappa(&self, x: u64) -> i64 {
        let target = self.num_sq as u128 * x as u128;
        let mut k = self.value(x).floor() as u128;
        while k > 0 && self.den_sq as u128 * (k - 1) * (k - 1) >= target {
            k -= 1;
        }
        while (self.den_sq as u128) * k * k < target {
            k += 1;
        }
        k as i64
    }

    pub fn accepts(&self, kappa: i64, x: u64) -> bool {
        kappa >= self.min_kappa(x)
    }
}

pub(crate) fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    num_integer::binomial(BigUint::from(n), BigUint::from(k.min(n - k)))
}

/// Number of multisets of size `n` from `bins` kinds.
pub(crate) fn multichoose(bins: u64, n: u64) -> BigUint {
    match (bins, n) {
        (_, 0) => BigUint::one(),
        (0, _) => BigUint::zero(),
        _ => binomial(n + bins - 1, n),
    }
}

pub(crate) fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(num.into(), den.into())
}

pub(crate) fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `ln n!` for `n` in `0..len`.
pub(crate) fn ln_factorials(len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut acc = 0.0;
    out.push(0.0);
    for n in 1..len {
        acc += (n as f64).ln();
        out.push(acc);
    }
    out
}
