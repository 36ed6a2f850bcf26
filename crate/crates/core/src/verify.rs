//! Self-contained invariant suite: every check compares two independent
//! routes to the same quantity, or a computed value with a closed form.

use std::time::Instant;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use serde::Serialize;

use crate::combinatorics::{
    closed_form, en_by_enumeration, en_convergence, event_bl, event_cl, event_probability_en,
    event_probability_en_binomial, narayana_counts, pascal_table, pisot_ratio, BlockEvent, EventMode,
    Normalization, ThresholdRule,
};
use crate::lyapunov::{
    induced_le, bernoulli_conjugate_le, le_estimate, lipschitz_check, CocycleSpec, LipschitzProbe,
};
use crate::modulus::{fit_breakdown, in_family_control, reference_families, FitConfig, Verdict};
use crate::quasimode::{build_quasimode, gap_experiment, temple_count};
use crate::rng::{self, domain};
use crate::sl2::{classify_word, float_product, FastForm, Klass, Letter, Mat2};
use crate::spectra::{count_in_closed, eigenvalues, negatives_below, TridiagonalOperator};
use crate::thouless::{free_eigenvalues, thouless_le};
use crate::words::{enumerate_words, from_letters, visit_words, MarkovSpec, Symbol, WordKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Scale {
    /// Reduced sizes, a few seconds in a release build.
    Quick,
    Full,
}

impl Scale {
    fn pick<T>(self, quick: T, full: T) -> T {
        match self {
            Scale::Quick => quick,
            Scale::Full => full,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

pub const SUITES: [&str; 8] = [
    "sl2_algebra",
    "markov_words",
    "walk_combinatorics",
    "schrodinger_spectra",
    "lyapunov_engine",
    "quasimode_counter",
    "thouless",
    "modulus",
];

type CheckFn = fn(Scale, u64) -> (bool, String);

fn registry() -> Vec<(&'static str, &'static str, CheckFn)> {
    vec![
        ("sl2_algebra", "forms_match_float_products", forms_match_float_products),
        ("markov_words", "counts_match_enumeration", counts_match_enumeration),
        ("markov_words", "cylinders_sum_to_one", cylinders_sum_to_one),
        ("walk_combinatorics", "pascal_rows_and_closed_forms", pascal_rows_and_closed_forms),
        ("walk_combinatorics", "en_three_routes", en_three_routes),
        ("walk_combinatorics", "en_normalization_half", en_normalization_half),
        ("walk_combinatorics", "block_events_two_routes", block_events_two_routes),
        ("schrodinger_spectra", "sturm_matches_bisection_and_free", sturm_checks),
        ("lyapunov_engine", "kifer_and_free_exponents", kifer_and_free_exponents),
        ("lyapunov_engine", "induced_return_law", induced_return_law),
        ("lyapunov_engine", "lipschitz_bound", lipschitz_bound),
        ("quasimode_counter", "residuals_and_temple", residuals_and_temple),
        ("quasimode_counter", "per_replica_counting", per_replica_counting),
        ("thouless", "free_closed_form", thouless_free),
        ("modulus", "controls_and_breakdown", modulus_controls),
    ]
}

/// Runs the checks of the named suites (all when `only` is empty), in order.
pub fn run(scale: Scale, seed: u64, only: &[String]) -> Vec<Check> {
    registry()
        .into_iter()
        .filter(|(suite, _, _)| only.is_empty() || only.iter().any(|s| s == suite))
        .map(|(suite, name, f)| {
            let t = Instant::now();
            let (passed, detail) = f(scale, seed);
            Check {
                suite,
                name,
                passed,
                detail,
                seconds: t.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

fn forms_match_float_products(scale: Scale, _: u64) -> (bool, String) {
    let n = scale.pick(12, 16);
    let mut worst: f64 = 0.0;
    let mut parity_failures = 0;
    for bits in 0u32..1 << n {
        let letters: Vec<Letter> = (0..n)
            .map(|b| if bits >> b & 1 == 1 { Letter::D } else { Letter::C })
            .collect();
        let form = classify_word(&letters);
        let m = float_product(&letters);
        let r = form.realize();
        worst = worst.max(m.sub(&r).max_abs() / r.max_abs());
        let k = form.kappa_i64().unwrap_or(0);
        if form.is_diagonal() != ((n as i64 + k) % 2 == 0) {
            parity_failures += 1;
        }
    }
    (
        worst <= 1e-9 && parity_failures == 0,
        format!("n = {n}: max relative error {worst:.2e}, parity failures {parity_failures}"),
    )
}

fn counts_match_enumeration(scale: Scale, _: u64) -> (bool, String) {
    let n_max = scale.pick(12, 18);
    let c = narayana_counts(n_max + 44);
    let mut ok = true;
    for n in 1..=n_max {
        ok &= c.b_seq[n] == BigUint::from(enumerate_words(n, WordKind::Allowable).map_or(0, |w| w.len()));
        ok &= c.a_seq[n] == BigUint::from(enumerate_words(n, WordKind::Admissible).map_or(0, |w| w.len()));
    }
    ok &= (1..=40).all(|n| c.b_seq[n] == c.a_seq[n + 4]);
    let ratio = pisot_ratio(100).unwrap_or(f64::NAN);
    ok &= (ratio - 0.216757).abs() <= 1e-5;
    (ok, format!("n ≤ {n_max} enumerated; a(100)/b(100) = {ratio:.6}"))
}

fn cylinders_sum_to_one(_: Scale, _: u64) -> (bool, String) {
    let spec = MarkovSpec::model();
    let mut worst: f64 = 0.0;
    for n in 1..=12 {
        let mut total = 0.0;
        visit_words(n, WordKind::Allowable, |w| total += spec.cylinder_probability(w));
        worst = worst.max((total - 1.0).abs());
    }
    (worst < 1e-12, format!("max |Σ P(cylinder) - 1| = {worst:.1e} over n ≤ 12"))
}

fn pascal_rows_and_closed_forms(_: Scale, _: u64) -> (bool, String) {
    let Ok(t) = pascal_table(20) else {
        return (false, "table construction failed".into());
    };
    let expected: [&[u64]; 5] = [
        &[1, 1],
        &[1, 1, 1, 1],
        &[1, 1, 2, 2, 1, 1],
        &[1, 1, 3, 3, 3, 3, 1, 1],
        &[1, 1, 4, 4, 6, 6, 4, 4, 1, 1],
    ];
    let mut ok = true;
    for (i, row) in expected.iter().enumerate() {
        let got: Vec<u64> = t.row(i + 1).iter().map(|(_, x)| x.to_u64().unwrap_or(u64::MAX)).collect();
        ok &= got == *row;
    }
    for n in 1..=20usize {
        ok &= t.row_sum(n) == BigUint::one() << n;
        ok &= t.row(n).iter().all(|(i, a)| *a == closed_form(n, *i));
    }
    (ok, "rows 1-5, closed forms and row sums for n ≤ 20".into())
}

fn en_three_routes(scale: Scale, _: u64) -> (bool, String) {
    let n_max = scale.pick(18, 24);
    let Ok(t) = pascal_table(n_max) else {
        return (false, "table construction failed".into());
    };
    let rule = ThresholdRule::WALK;
    let ok = (1..=n_max).all(|n| {
        let a = event_probability_en(&t, n, rule).ok();
        a.is_some() && a == en_by_enumeration(n, rule).ok() && a == Some(event_probability_en_binomial(n, rule))
    });
    (ok, format!("table, enumeration and binomials agree for n ≤ {n_max}"))
}

fn en_normalization_half(scale: Scale, _: u64) -> (bool, String) {
    match en_convergence(scale.pick(200, 400)) {
        Ok(c) => (
            c.verdict == Normalization::Half && c.tail_min > 0.0,
            format!(
                "tail mean {:.4} over n ≥ {}; full {:.6}, half {:.6}",
                c.tail_mean, c.tail_from, c.full_constant, c.half_constant
            ),
        ),
        Err(e) => (false, e.to_string()),
    }
}

fn block_events_two_routes(scale: Scale, _: u64) -> (bool, String) {
    let spec = MarkovSpec::model();
    let mut ok = true;
    let ls: &[usize] = scale.pick(&[3, 8, 14], &[3, 8, 14, 20]);
    for &l in ls {
        for ev in [BlockEvent::standard(l), BlockEvent::inner(l)] {
            let by_enum = event_bl(&ev, &spec, EventMode::Enumeration).ok().and_then(|p| p.exact);
            let by_form = event_bl(&ev, &spec, EventMode::ClosedFormExact).ok().and_then(|p| p.exact);
            ok &= by_enum.is_some() && by_enum == by_form;
            let c_enum = event_cl(&ev, &spec, EventMode::Enumeration).ok().and_then(|p| p.exact);
            ok &= c_enum.is_some() && c_enum == by_form.map(|b| &b * &b);
        }
    }
    (ok, format!("P(B), P(C) enumeration = closed form, P(C) = P(B)² for l in {ls:?}"))
}

fn sturm_checks(scale: Scale, seed: u64) -> (bool, String) {
    let mut g = rng::stream(seed, domain::IDS, 1 << 30);
    let instances = scale.pick(50, 200);
    let mut mismatches = 0;
    for _ in 0..instances {
        let dim: usize = g.random_range(1..=50);
        let op = TridiagonalOperator::from_diag((0..dim).map(|_| g.random_range(-4.0..4.0)).collect());
        let dense = nalgebra::DMatrix::from_fn(dim, dim, |i, j| match i.abs_diff(j) {
            0 => op.diag()[i],
            1 => -1.0,
            _ => 0.0,
        });
        let mut eig: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        let bis = eigenvalues(&op);
        for _ in 0..8 {
            let x: f64 = g.random_range(-7.0..7.0);
            if eig.iter().any(|e| (e - x).abs() < 1e-9) {
                continue;
            }
            let dense_count = eig.iter().filter(|&&e| e < x).count();
            if negatives_below(op.diag(), x) != dense_count || bis.iter().filter(|&&e| e < x).count() != dense_count {
                mismatches += 1;
            }
        }
    }
    let dim = scale.pick(2_000, 10_000);
    let free = TridiagonalOperator::free(dim);
    let n0 = negatives_below(free.diag(), 0.0) as f64 / dim as f64;
    let ok = mismatches == 0 && (n0 - 0.5).abs() <= 1e-3;
    (ok, format!("{instances} dense comparisons, {mismatches} mismatches; free N(0) = {n0}"))
}

fn kifer_and_free_exponents(scale: Scale, seed: u64) -> (bool, String) {
    let n = scale.pick(100_000, 1_000_000);
    let reps = scale.pick(8, 32);
    let run = || -> crate::Result<(f64, f64, f64)> {
        let fair = le_estimate(&CocycleSpec::kifer(0.5)?, n, reps, seed)?.value;
        let degenerate = le_estimate(&CocycleSpec::kifer(0.0)?, 10_000, 2, seed)?.value;
        let free = le_estimate(&CocycleSpec::free(3.0), n, 2, seed)?.value;
        Ok((fair, degenerate, free))
    };
    match run() {
        Ok((fair, degenerate, free)) => {
            let tol = scale.pick(1e-2, 5e-3);
            let ok = fair.abs() <= tol && (degenerate - 1.0).abs() <= 1e-12 && (free - 1.5f64.acosh()).abs() <= 1e-3;
            (ok, format!("fair {fair:.2e}, p = 0 gives {degenerate}, free E=3 {free:.5}"))
        }
        Err(e) => (false, e.to_string()),
    }
}

fn induced_return_law(scale: Scale, seed: u64) -> (bool, String) {
    let n = scale.pick(50_000, 200_000);
    let reps = scale.pick(8, 16);
    let mut detail = Vec::new();
    let mut ok = true;
    for e in [0.5, 1.0] {
        match (induced_le(e, n, reps, seed), bernoulli_conjugate_le(e, n, reps, seed)) {
            (Ok(ind), Ok(conj)) => {
                let t = ind.mean_return_time.value;
                let s1 = ind.induced.std_error.hypot(conj.std_error);
                let s2 = ind.induced.std_error.hypot(2.0 * ind.base.std_error);
                ok &= (t - 2.0).abs() < 0.01
                    && (ind.induced.value - conj.value).abs() <= 3.0 * s1
                    && (ind.induced.value - 2.0 * ind.base.value).abs() <= 3.0 * s2;
                detail.push(format!(
                    "E={e}: return time {t:.4}, induced {:.4}, conjugate {:.4}, 2·base {:.4}",
                    ind.induced.value,
                    conj.value,
                    2.0 * ind.base.value
                ));
            }
            (a, b) => {
                ok = false;
                detail.push(format!("{:?} {:?}", a.err(), b.err()));
            }
        }
    }
    (ok, detail.join("; "))
}

fn lipschitz_bound(scale: Scale, seed: u64) -> (bool, String) {
    let probe = LipschitzProbe {
        epsilons: vec![1e-1, 1e-2, 1e-3],
        trials: scale.pick(5, 20),
        n_steps: scale.pick(10_000, 50_000),
        replicas: 2,
        seed,
    };
    let mut ok = true;
    let mut detail = Vec::new();
    for rotations in [
        vec![Mat2::rotation(1.0), Mat2::rotation(2f64.sqrt())],
        vec![Mat2::rotation(0.3), Mat2::rotation(2.0), Mat2::rotation(-1.1)],
    ] {
        match lipschitz_check(&rotations, &probe) {
            Ok(rep) => {
                ok &= rep.violations() == 0;
                detail.push(format!("max L/ε {:.4e}, violations {}", rep.max_ratio(), rep.violations()));
            }
            Err(e) => {
                ok = false;
                detail.push(e.to_string());
            }
        }
    }
    (ok, detail.join("; "))
}

fn random_half<R: Rng>(g: &mut R, max_letters: usize) -> Vec<Symbol> {
    loop {
        let len = g.random_range(1..=max_letters);
        let letters: Vec<Letter> = (0..len)
            .map(|_| if g.random::<bool>() { Letter::D } else { Letter::C })
            .collect();
        let f = FastForm::classify(&letters);
        if f.klass == Klass::Diagonal && f.kappa >= 1 {
            return from_letters(&letters).0;
        }
    }
}

fn residuals_and_temple(scale: Scale, seed: u64) -> (bool, String) {
    let mut g = rng::stream(seed, domain::GAP, 1 << 30);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let w1 = random_half(&mut g, 14);
        let mut w = w1.clone();
        w.push(Symbol::Zero);
        w.extend(random_half(&mut g, 14));
        let Ok(mode) = build_quasimode(&w, w1.len()) else {
            return (false, "construction failed on a valid word".into());
        };
        let mut padded = vec![Symbol::Zero];
        padded.extend_from_slice(&w);
        padded.push(Symbol::Zero);
        let op = TridiagonalOperator::from_word(&padded, padded.len() - 1).expect("length matches");
        let mut psi = vec![0.0; padded.len()];
        psi[1..1 + w.len()].copy_from_slice(&mode.values);
        let dense: f64 = op.apply(&psi).iter().map(|x| x * x).sum::<f64>().sqrt();
        let local = mode.clone().shifted(1).residual_in(&op, 0.0);
        worst = worst.max((dense - mode.residual).abs()).max((local - dense).abs());
    }
    let mut violations = 0;
    let instances = scale.pick(100, 500);
    for _ in 0..instances {
        let mut full = Vec::new();
        let mut modes = Vec::new();
        for _ in 0..g.random_range(1..5) {
            full.extend((0..g.random_range(0..4)).map(|_| Symbol::Zero));
            let w1 = random_half(&mut g, 10);
            let mut w = w1.clone();
            w.push(Symbol::Zero);
            w.extend(random_half(&mut g, 10));
            if let Ok(m) = build_quasimode(&w, w1.len()) {
                modes.push(m.shifted(full.len()));
            }
            full.extend_from_slice(&w);
        }
        let op = TridiagonalOperator::from_word(&full, full.len() - 1).expect("length matches");
        let eps = modes.iter().map(|m| m.certified_ratio()).fold(0.0, f64::max) * (1.0 + 1e-9);
        let t = temple_count(&op, &modes, 0.0, eps);
        let sturm = count_in_closed(&op, -eps, eps).map(|c| c.count).unwrap_or(0);
        if t.admitted > sturm {
            violations += 1;
        }
    }
    (
        worst <= 1e-12 && violations == 0,
        format!("max |certified - recomputed| {worst:.1e}; {violations} Temple violations in {instances}"),
    )
}

fn per_replica_counting(scale: Scale, seed: u64) -> (bool, String) {
    let (l, m, reps) = scale.pick((300, 200, 4), (300, 2000, 16));
    match gap_experiment(l, m, reps, seed) {
        Ok(r) => (
            r.violations == 0 && r.temple_violations == 0 && r.construction_failures == 0,
            format!(
                "l = {l}, m = {m}: n_lm {:.2}, count {:.1}, violations {}",
                r.n_lm_mean, r.count_mean, r.violations
            ),
        ),
        Err(e) => (false, e.to_string()),
    }
}

fn thouless_free(scale: Scale, _: u64) -> (bool, String) {
    let eig = free_eigenvalues(scale.pick(2_000, 10_000));
    let mut worst: f64 = 0.0;
    for e in [2.5f64, 3.0, 4.0] {
        let exact = ((e + (e * e - 4.0).sqrt()) / 2.0).ln();
        match thouless_le(e, &eig) {
            Ok(v) => worst = worst.max((v.value - exact).abs()),
            Err(_) => worst = f64::INFINITY,
        }
    }
    (worst <= 5e-3, format!("max discrepancy {worst:.2e} at E in {{2.5, 3, 4}}"))
}

fn modulus_controls(_: Scale, _: u64) -> (bool, String) {
    let grid = [300usize, 1200, 2700, 10800, 43200, 97200];
    let mut ok = true;
    for fam in reference_families() {
        let verdict = in_family_control(fam, &grid).and_then(|s| fit_breakdown(&s, fam, FitConfig::default()));
        ok &= matches!(verdict, Ok(ref r) if r.verdict == Verdict::Bounded);
    }
    (ok, "in-family control series give bounded C for every family".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_is_green() {
        let checks = run(Scale::Quick, 1, &[]);
        assert_eq!(checks.len(), registry().len());
        for c in &checks {
            assert!(c.passed, "{} / {}: {}", c.suite, c.name, c.detail);
            assert!(SUITES.contains(&c.suite));
        }
        let only = run(Scale::Quick, 1, &["thouless".to_string()]);
        assert_eq!(only.len(), 1);
    }
}
