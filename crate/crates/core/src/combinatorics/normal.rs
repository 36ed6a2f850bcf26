use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{binomial, ratio, to_f64};

/// Uniform Berry–Esseen constant (Shevtsova 2011). For a symmetric Bernoulli
/// summand `ρ/σ³ = 1`, so the bound reads `gap(n) ≤ C / √n`.
pub const BERRY_ESSEEN_C: f64 = 0.4748;

/// Standard normal CDF, `F(u) = (1 + erf(u/√2)) / 2`.
///
/// For `|u/√2| < 3` the erf Taylor series in its all-positive form
/// `erf x = 2/√π · e^{-x²} Σ 2ⁿ x^{2n+1} / (2n+1)!!` is summed until the terms
/// stop contributing; beyond that the Laplace continued fraction for `erfc`
/// is evaluated bottom-up at fixed depth. Both branches are accurate to a few
/// ulps of `1`, far inside `1e-12` absolute.
pub fn normal_cdf(u: f64) -> f64 {
    if u.is_nan() {
        return f64::NAN;
    }
    let x = u * FRAC_1_SQRT_2;
    if x.abs() < 3.0 {
        0.5 * (1.0 + erf_series(x))
    } else if x > 0.0 {
        1.0 - 0.5 * erfc_cf(x)
    } else {
        0.5 * erfc_cf(-x)
    }
}

fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term.abs() <= sum.abs() * 1e-17 {
            break;
        }
    }
    2.0 / PI.sqrt() * (-x2).exp() * sum
}

/// `erfc x = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …))))`, `x ≥ 3`.
fn erfc_cf(x: f64) -> f64 {
    if x > 27.0 {
        return 0.0;
    }
    let mut tail = x;
    for k in (1..=80).rev() {
        tail = x + (k as f64 / 2.0) / tail;
    }
    (-x * x).exp() / PI.sqrt() / tail
}

/// Exact `P(T_n ≤ u)` for `T_n = (2 S_n - n)/√n`, `S_n ~ Bin(n, 1/2)`.
pub fn tn_cdf_exact(n: u64, u: f64) -> BigRational {
    if u.is_nan() {
        return BigRational::zero();
    }
    let bound = n as f64 / 2.0 + u * (n as f64).sqrt() / 2.0;
    if bound < 0.0 {
        return BigRational::zero();
    }
    if bound >= n as f64 {
        return BigRational::one();
    }
    let top = bound.floor() as u64;
    let mut num = BigUint::zero();
    for i in 0..=top {
        num += binomial(n, i);
    }
    ratio(num, BigUint::one() << n)
}

/// `sup_{u ∈ grid} |P(T_n ≤ u) − F(u)|` with the binomial side exact.
pub fn berry_esseen_gap(n: u64, grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&u| (to_f64(&tn_cdf_exact(n, u)) - normal_cdf(u)).abs())
        .fold(0.0, f64::max)
}

/// `u` from -4 to 4 in steps of 0.01.
pub fn default_grid() -> Vec<f64> {
    (-400..=400).map(|k| k as f64 / 100.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson on `[0, |u|]` of the density, 20000 panels.
    fn quadrature_cdf(u: f64) -> f64 {
        let density = |x: f64| (-x * x / 2.0).exp() / (2.0 * PI).sqrt();
        let panels = 20_000;
        let h = u.abs() / panels as f64;
        let mut s = density(0.0) + density(u.abs());
        for k in 1..panels {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * density(k as f64 * h);
        }
        let half = s * h / 3.0;
        if u >= 0.0 {
            0.5 + half
        } else {
            0.5 - half
        }
    }

    #[test]
    fn cdf_reference_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(0.1) - 0.539827837277029).abs() < 1e-13);
        assert!((1.0 - normal_cdf(0.1) - 0.460172).abs() < 5e-7);
        assert!((normal_cdf(-5.0) - 2.866515718791939e-7).abs() < 1e-19);
        assert!((normal_cdf(1.96) - 0.9750021048517795).abs() < 1e-13);
        assert_eq!(normal_cdf(60.0), 1.0);
        assert_eq!(normal_cdf(-60.0), 0.0);
    }

    #[test]
    fn cdf_matches_quadrature() {
        for k in -80..=80 {
            let u = k as f64 * 0.1;
            assert!((normal_cdf(u) - quadrature_cdf(u)).abs() < 1e-12, "u = {u}");
        }
    }

    #[test]
    fn branches_agree_at_the_switch() {
        let u = 3.0 * std::f64::consts::SQRT_2;
        let left = 0.5 * (1.0 + erf_series(3.0 - 1e-12));
        let right = 1.0 - 0.5 * erfc_cf(3.0);
        assert!((left - right).abs() < 1e-14);
        assert!((normal_cdf(u) + normal_cdf(-u) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tn_cdf_total_mass() {
        assert_eq!(tn_cdf_exact(10, f64::INFINITY), BigRational::one());
        assert_eq!(tn_cdf_exact(10, 1e9), BigRational::one());
        assert_eq!(tn_cdf_exact(10, -1e9), BigRational::zero());
        // P(S_4 ≤ 2) = 11/16
        assert_eq!(
            tn_cdf_exact(4, 0.0),
            BigRational::new(11.into(), 16.into())
        );
    }

    #[test]
    fn berry_esseen_bound() {
        let grid = default_grid();
        let gaps: Vec<f64> = [4u64, 9, 16, 25, 36]
            .iter()
            .map(|&n| berry_esseen_gap(n, &grid))
            .collect();
        for (&n, g) in [4u64, 9, 16, 25, 36].iter().zip(&gaps) {
            assert!(g * (n as f64).sqrt() <= BERRY_ESSEEN_C, "n = {n}: {g}");
        }
        assert!(gaps[4] < gaps[0]);
    }
}
