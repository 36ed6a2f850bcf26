use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use super::{binomial, ratio, to_f64};
use crate::error::{Error, Result};
use crate::words::{Symbol, Word};

/// Admissible counts `a(n)` and allowable counts `b(n)` for `n = 0..=n_max`.
/// `b(0) = 1` counts the empty word.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CountSequences {
    pub a_seq: Vec<BigUint>,
    pub b_seq: Vec<BigUint>,
}

pub fn narayana_counts(n_max: usize) -> CountSequences {
    let mut a: Vec<BigUint> = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let next = if n < 3 {
            BigUint::one()
        } else {
            &a[n - 1] + &a[n - 3]
        };
        a.push(next);
    }
    let mut b: Vec<BigUint> = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let next = match n {
            0 => BigUint::one(),
            1 => BigUint::from(4u32),
            2 => BigUint::from(6u32),
            3 => BigUint::from(9u32),
            _ => &b[n - 1] + &b[n - 3],
        };
        b.push(next);
    }
    CountSequences { a_seq: a, b_seq: b }
}

/// Real root `λ ≈ 1.46557` of `x³ = x² + 1`, by Newton from `x = 1.5`.
pub fn pisot_lambda() -> f64 {
    let mut x: f64 = 1.5;
    for _ in 0..50 {
        let step = (x * x * x - x * x - 1.0) / (3.0 * x * x - 2.0 * x);
        x -= step;
        if step.abs() < 1e-17 {
            break;
        }
    }
    x
}

/// `a(n)/b(n)`, the share of admissible words among allowable ones.
pub fn pisot_ratio(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let c = narayana_counts(n);
    Ok(to_f64(&ratio(c.a_seq[n].clone(), c.b_seq[n].clone())))
}

/// Stationary probability that the first `n` symbols form an admissible word
/// under the model chain: `Σ_k C(n-2k, k) 2^{-(n-2k+1)}`, summing over the
/// number `k` of `abc` blocks.
pub fn admissible_probability(n: usize) -> BigRational {
    if n == 0 {
        return BigRational::one();
    }
    let mut num = BigUint::zero();
    for k in 0..=n / 3 {
        let letters = (n - 2 * k) as u64;
        // weight 2^{-(letters+1)} over the common denominator 2^{n+1}
        num += binomial(letters, k as u64) << (2 * k);
    }
    ratio(num, BigUint::one() << (n + 1))
}

/// Sampler drawing allowable words of a fixed length uniformly.
#[derive(Clone, Debug)]
pub struct UniformAllowable {
    len: usize,
    // paths[r][s]: allowable words of length r starting at s
    paths: Vec<[f64; 4]>,
}

impl UniformAllowable {
    pub fn new(len: usize) -> Self {
        let mut paths = vec![[0.0; 4], [1.0; 4]];
        for r in 2..=len.max(1) {
            let prev = paths[r - 1];
            let row = Symbol::ALL.map(|s| s.successors().iter().map(|t| prev[t.index()]).sum());
            paths.push(row);
        }
        UniformAllowable { len, paths }
    }

    fn pick<R: Rng + ?Sized>(choices: &[Symbol], weights: &[f64; 4], rng: &mut R) -> Symbol {
        let total: f64 = choices.iter().map(|s| weights[s.index()]).sum();
        let mut u = rng.random::<f64>() * total;
        for &s in choices {
            u -= weights[s.index()];
            if u < 0.0 {
                return s;
            }
        }
        *choices.last().expect("non-empty choices")
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Word {
        let mut out = Vec::with_capacity(self.len);
        if self.len == 0 {
            return Word(out);
        }
        let mut s = Self::pick(&Symbol::ALL, &self.paths[self.len], rng);
        out.push(s);
        for r in (1..self.len).rev() {
            s = Self::pick(s.successors(), &self.paths[r], rng);
            out.push(s);
        }
        Word(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::words::{enumerate_words, is_admissible, MarkovSpec, WordKind};

    #[test]
    fn sequences() {
        let c = narayana_counts(40 + 4);
        let a: Vec<u64> = c.a_seq[..=8].iter().map(|x| x.try_into().unwrap()).collect();
        assert_eq!(a, [1, 1, 1, 2, 3, 4, 6, 9, 13]);
        assert_eq!(c.b_seq[3], BigUint::from(9u32));
        for n in 1..=40 {
            assert_eq!(c.b_seq[n], c.a_seq[n + 4]);
        }
    }

    #[test]
    fn sequences_count_words() {
        let c = narayana_counts(18);
        for n in 1..=18 {
            let b = enumerate_words(n, WordKind::Allowable).unwrap().len();
            let a = enumerate_words(n, WordKind::Admissible).unwrap().len();
            assert_eq!(c.b_seq[n], BigUint::from(b));
            assert_eq!(c.a_seq[n], BigUint::from(a));
        }
    }

    #[test]
    fn lambda_and_limit() {
        let l = pisot_lambda();
        assert!((l * l * l - l * l - 1.0).abs() <= 1e-14);
        assert!((l - 1.46557).abs() < 1e-5);
        let r = pisot_ratio(100).unwrap();
        assert!((r - l.powi(-4)).abs() < 1e-6);
        assert!((r - 0.216757).abs() < 1e-5);
        assert!(pisot_ratio(0).is_err());
    }

    #[test]
    fn admissible_probability_matches_cylinder_sum() {
        let spec = MarkovSpec::model();
        for n in 1..=15 {
            let mut total = BigRational::zero();
            for w in enumerate_words(n, WordKind::Admissible).unwrap() {
                total += spec.cylinder_probability_exact(&w);
            }
            assert_eq!(total, admissible_probability(n), "n = {n}");
        }
        // under the chain the share is not a(n)/b(n)
        let six = to_f64(&admissible_probability(6));
        assert!((six - 33.0 / 128.0).abs() < 1e-15);
        assert!((pisot_ratio(6).unwrap() - 6.0 / 28.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_sampler_hits_ratio() {
        for n in [6usize, 9, 12] {
            let sampler = UniformAllowable::new(n);
            let mut r = rng::stream(17, 0, n as u64);
            let draws = 100_000;
            let hits = (0..draws)
                .filter(|_| {
                    let w = sampler.sample(&mut r);
                    assert!(crate::words::is_allowable(&w));
                    is_admissible(&w)
                })
                .count();
            let p = pisot_ratio(n).unwrap();
            let sigma = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((hits as f64 / draws as f64 - p).abs() < 3.0 * sigma, "n = {n}");
        }
    }
}
