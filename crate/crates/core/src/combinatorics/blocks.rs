use std::f64::consts::LN_2;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::{ln_factorials, multichoose, ratio, to_f64, ThresholdRule};
use crate::error::{Error, Result};
use crate::rng::{self, domain};
use crate::sl2::Klass;
use crate::stats::Estimate;
use crate::words::{fast_form, visit_words, MarkovSpec, Symbol, WordKind};

/// Block event at scale `l`: an admissible word of length `half_len` whose
/// product is `± diag(e^κ, e^-κ)` with `κ ≥ √(l/3)/10` (rule-dependent).
/// Its concatenated form is `w₁ 0 w₂` with both halves in the event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BlockEvent {
    pub l: usize,
    pub half_len: usize,
    pub rule: ThresholdRule,
}

impl BlockEvent {
    /// Halves of length `l + 1`, concatenation of length `2l + 3`.
    pub fn standard(l: usize) -> Self {
        BlockEvent {
            l,
            half_len: l + 1,
            rule: ThresholdRule::BLOCK,
        }
    }

    /// Halves of length `l`, so that `w₁ 0 w₂` fills an inner block of
    /// length `2l + 1`.
    pub fn inner(l: usize) -> Self {
        BlockEvent {
            l,
            half_len: l,
            rule: ThresholdRule::BLOCK,
        }
    }

    pub fn min_kappa(&self) -> i64 {
        self.rule.min_kappa(self.l as u64)
    }

    /// The real threshold `K_l`.
    pub fn k_l(&self) -> f64 {
        self.rule.value(self.l as u64)
    }

    pub fn concat_len(&self) -> usize {
        2 * self.half_len + 1
    }

    pub fn contains_half(&self, w: &[Symbol]) -> bool {
        w.len() == self.half_len
            && matches!(fast_form(w), Some(f) if f.klass == Klass::Diagonal && f.kappa >= self.min_kappa())
    }

    pub fn contains_concat(&self, w: &[Symbol]) -> bool {
        let h = self.half_len;
        w.len() == self.concat_len()
            && w[h] == Symbol::Zero
            && self.contains_half(&w[..h])
            && self.contains_half(&w[h + 1..])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventMode {
    /// Exact sum of cylinder measures over enumerated words; any chain.
    Enumeration,
    /// Exact rational from the multiset counting formula; model chain only.
    ClosedFormExact,
    /// Floating-point counting formula with pruning; model chain only.
    ClosedForm,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct EventProbability {
    pub value: f64,
    pub std_error: f64,
    pub exact: Option<BigRational>,
}

impl EventProbability {
    fn exact(r: BigRational) -> Self {
        EventProbability {
            value: to_f64(&r),
            std_error: 0.0,
            exact: Some(r),
        }
    }

    fn float(value: f64) -> Self {
        EventProbability {
            value,
            std_error: 0.0,
            exact: None,
        }
    }

    pub fn as_estimate(&self, samples: usize) -> Estimate {
        Estimate {
            value: self.value,
            std_error: self.std_error,
            samples,
        }
    }
}

/// Largest half length for [`EventMode::Enumeration`].
pub const ENUMERATION_HALF_CAP: usize = 30;
/// Largest half length for [`EventMode::ClosedFormExact`].
pub const EXACT_HALF_CAP: usize = 400;

/// `P(first half_len symbols lie in the event)` under `spec`.
pub fn event_bl(ev: &BlockEvent, spec: &MarkovSpec, mode: EventMode) -> Result<EventProbability> {
    match mode {
        EventMode::Enumeration => {
            check_cap(ev.half_len, ENUMERATION_HALF_CAP)?;
            let mut total = BigRational::zero();
            visit_words(ev.half_len, WordKind::Admissible, |w| {
                if ev.contains_half(w) {
                    total += spec.cylinder_probability_exact(w);
                }
            });
            Ok(EventProbability::exact(total))
        }
        EventMode::ClosedFormExact => {
            require_model(spec)?;
            check_cap(ev.half_len, EXACT_HALF_CAP)?;
            Ok(EventProbability::exact(closed_form_exact(ev)))
        }
        EventMode::ClosedForm => {
            require_model(spec)?;
            Ok(EventProbability::float(
                block_decomposition(ev).iter().map(|t| t.weight * t.conditional).sum(),
            ))
        }
        EventMode::MonteCarlo { samples, seed } => {
            Ok(monte_carlo(spec, ev.half_len, samples, seed, 0, |w| ev.contains_half(w)))
        }
    }
}

/// `P(first 2·half_len + 1 symbols read w₁ 0 w₂ with both halves in the
/// event)` under `spec`.
///
/// Enumeration factorizes the cylinder sum through the Markov property at the
/// middle `0`, which holds for every chain; the product of half sums equals
/// `P(B)²` only when the transitions into and out of `0` match the
/// stationary weights, as they do for the model chain. The closed-form modes
/// use that identity directly.
pub fn event_cl(ev: &BlockEvent, spec: &MarkovSpec, mode: EventMode) -> Result<EventProbability> {
    match mode {
        EventMode::Enumeration => {
            check_cap(ev.half_len, ENUMERATION_HALF_CAP)?;
            let exact = |x: f64| BigRational::from_float(x).expect("finite probability");
            let mut left = BigRational::zero();
            let mut right = BigRational::zero();
            visit_words(ev.half_len, WordKind::Admissible, |w| {
                if !ev.contains_half(w) {
                    return;
                }
                let cyl = spec.cylinder_probability_exact(w);
                let last = *w.last().expect("non-empty half");
                left += cyl.clone() * exact(spec.transition(last, Symbol::Zero));
                let start = exact(spec.stationary()[w[0].index()]);
                if !start.is_zero() {
                    right += cyl / start * exact(spec.transition(Symbol::Zero, w[0]));
                }
            });
            Ok(EventProbability::exact(left * right))
        }
        EventMode::ClosedFormExact | EventMode::ClosedForm => {
            let half = event_bl(ev, spec, mode)?;
            Ok(match half.exact {
                Some(r) => EventProbability::exact(r.clone() * r),
                None => EventProbability::float(half.value * half.value),
            })
        }
        EventMode::MonteCarlo { samples, seed } => {
            Ok(monte_carlo(spec, ev.concat_len(), samples, seed, 1, |w| ev.contains_concat(w)))
        }
    }
}

fn check_cap(half_len: usize, cap: usize) -> Result<()> {
    if half_len > cap {
        Err(Error::SizeCap { n: half_len, cap })
    } else {
        Ok(())
    }
}

fn require_model(spec: &MarkovSpec) -> Result<()> {
    if *spec == MarkovSpec::model() {
        Ok(())
    } else {
        Err(Error::param(
            "mode",
            "closed forms hold for the model chain only; use enumeration or Monte Carlo",
        ))
    }
}

const MC_CHUNKS: usize = 16;

fn monte_carlo<F>(spec: &MarkovSpec, len: usize, samples: u64, seed: u64, kind: u64, hit: F) -> EventProbability
where
    F: Fn(&[Symbol]) -> bool + Sync,
{
    let sampler = spec.sampler();
    let hits: u64 = rng::map_indexed(MC_CHUNKS, |chunk| {
        let share = samples / MC_CHUNKS as u64 + u64::from((chunk as u64) < samples % MC_CHUNKS as u64);
        let mut r = rng::stream(seed, domain::EVENTS, kind << 20 | chunk as u64);
        let mut buf = Vec::with_capacity(len);
        let mut count = 0u64;
        for _ in 0..share {
            sampler.fill(len, &mut r, &mut buf);
            if hit(&buf) {
                count += 1;
            }
        }
        count
    })
    .into_iter()
    .sum();
    let e = Estimate::proportion(hits, samples);
    EventProbability {
        value: e.value,
        std_error: e.std_error,
        exact: None,
    }
}

/// Splits an admissible half of length `h = z + 3k` (`z` zeros, `k` blocks,
/// `z` even for a diagonal product). Reading from the right, the zeros cut
/// the blocks into `z + 1` bins; blocks in even bins add one to `κ`, blocks
/// in odd bins subtract one, so with `x` blocks in the `z/2 + 1` even bins,
/// `κ = 2x − k` and the number of such words is
/// `multichoose(z/2 + 1, x) · multichoose(z/2, k − x)`. Each has measure
/// `2^{-(z+k+1)}` under the model chain.
fn closed_form_exact(ev: &BlockEvent) -> BigRational {
    let h = ev.half_len;
    let t = ev.min_kappa();
    let mut num = BigUint::zero();
    for k in 0..=h / 3 {
        let z = h - 3 * k;
        if z % 2 == 1 {
            continue;
        }
        let (even, odd) = ((z / 2 + 1) as u64, (z / 2) as u64);
        let mut count = BigUint::zero();
        for x in 0..=k as u64 {
            if 2 * x as i64 - k as i64 >= t {
                count += multichoose(even, x) * multichoose(odd, k as u64 - x);
            }
        }
        // 2^{-(z+k+1)} = 4^k / 2^{h+1}
        num += count << (2 * k);
    }
    ratio(num, BigUint::one() << (h + 1))
}

/// One term of the law of total probability over the number of letters.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecompositionTerm {
    /// Number of `abc` blocks.
    pub blocks: usize,
    /// Number of letters `N = zeros + blocks`.
    pub letters: usize,
    /// `P(admissible with this many blocks)`.
    pub weight: f64,
    /// `P(event | admissible with this many blocks)`.
    pub conditional: f64,
}

/// Decomposition of the half-event probability over block counts with even
/// zero count, for the model chain. Block counts whose total weight is below
/// `e^-60` times the largest are dropped.
pub fn block_decomposition(ev: &BlockEvent) -> Vec<DecompositionTerm> {
    let h = ev.half_len;
    let t = ev.min_kappa();
    let lf = ln_factorials(h + 3);
    let ln_choose = |n: usize, k: usize| lf[n] - lf[k] - lf[n - k];
    let ln_mc = |bins: usize, n: usize| -> f64 {
        match (bins, n) {
            (_, 0) => 0.0,
            (0, _) => f64::NEG_INFINITY,
            _ => ln_choose(n + bins - 1, n),
        }
    };
    let candidates: Vec<(usize, usize, f64)> = (0..=h / 3)
        .filter(|k| (h - 3 * k).is_multiple_of(2))
        .map(|k| {
            let letters = h - 2 * k;
            let ln_w = -((letters + 1) as f64) * LN_2 + ln_choose(letters, k);
            (k, letters, ln_w)
        })
        .collect();
    let top = candidates.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
    let mut out = Vec::new();
    for (k, letters, ln_w) in candidates {
        if ln_w < top - 60.0 {
            continue;
        }
        let z = h - 3 * k;
        let (even, odd) = (z / 2 + 1, z / 2);
        let ln_total = ln_choose(letters, k);
        let x_lo = ((k as i64 + t + 1).div_euclid(2)).max(0) as usize;
        let mut conditional = 0.0;
        if x_lo <= k {
            let term = |x: usize| (ln_mc(even, x) + ln_mc(odd, k - x) - ln_total).exp();
            let guess = (k as f64 * even as f64 / (even + odd) as f64).round() as usize;
            let start = guess.clamp(x_lo, k);
            let mut peak = 0.0f64;
            for x in start..=k {
                let v = term(x);
                conditional += v;
                peak = peak.max(v);
                if v < peak * 1e-18 {
                    break;
                }
            }
            for x in (x_lo..start).rev() {
                let v = term(x);
                conditional += v;
                peak = peak.max(v);
                if v < peak * 1e-18 {
                    break;
                }
            }
        }
        out.push(DecompositionTerm {
            blocks: k,
            letters,
            weight: ln_w.exp(),
            conditional: conditional.min(1.0),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::{sample_stationary, Word};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn membership() {
        let ev = BlockEvent::standard(2);
        // half length 3, threshold ⌈√(2/300)⌉ = 1
        assert!(ev.contains_half(&"abc".parse::<Word>().unwrap()));
        assert!(!ev.contains_half(&"000".parse::<Word>().unwrap()));
        assert!(!ev.contains_half(&"0ab".parse::<Word>().unwrap()));
        assert!(ev.contains_concat(&"abc0abc".parse::<Word>().unwrap()));
        assert!(!ev.contains_concat(&"abcabc0".parse::<Word>().unwrap()));
        assert_eq!(BlockEvent::standard(300).min_kappa(), 1);
        assert_eq!(BlockEvent::inner(300).concat_len(), 601);
    }

    #[test]
    fn closed_form_matches_enumeration() {
        let spec = MarkovSpec::model();
        for l in [1usize, 2, 5, 9, 14, 20, 24] {
            for ev in [BlockEvent::standard(l), BlockEvent::inner(l)] {
                let e = event_bl(&ev, &spec, EventMode::Enumeration).unwrap();
                let c = event_bl(&ev, &spec, EventMode::ClosedFormExact).unwrap();
                assert_eq!(e.exact, c.exact, "{ev:?}");
                let f = event_bl(&ev, &spec, EventMode::ClosedForm).unwrap();
                assert!(close(f.value, e.value, 1e-13), "{ev:?}: {} vs {}", f.value, e.value);
            }
        }
    }

    #[test]
    fn tighter_threshold_enumeration() {
        let spec = MarkovSpec::model();
        let ev = BlockEvent {
            l: 12,
            half_len: 16,
            rule: ThresholdRule { num_sq: 1, den_sq: 3 },
        };
        assert_eq!(ev.min_kappa(), 2);
        let e = event_bl(&ev, &spec, EventMode::Enumeration).unwrap();
        let c = event_bl(&ev, &spec, EventMode::ClosedFormExact).unwrap();
        assert_eq!(e.exact, c.exact);
    }

    #[test]
    fn square_identity_exact() {
        let spec = MarkovSpec::model();
        for l in [2usize, 6, 11, 17, 24] {
            let ev = BlockEvent::standard(l);
            let b = event_bl(&ev, &spec, EventMode::Enumeration).unwrap().exact.unwrap();
            let c = event_cl(&ev, &spec, EventMode::Enumeration).unwrap().exact.unwrap();
            assert_eq!(c, b.clone() * b.clone(), "l = {l}");
            assert!(c <= b);
        }
    }

    #[test]
    fn concat_enumeration_matches_direct_sum() {
        // independent of the factorization: sum over all words of length 2h+1
        let spec = MarkovSpec::model();
        let ev = BlockEvent::inner(6);
        let mut direct = BigRational::zero();
        visit_words(ev.concat_len(), WordKind::Admissible, |w| {
            if ev.contains_concat(w) {
                direct += spec.cylinder_probability_exact(w);
            }
        });
        let c = event_cl(&ev, &spec, EventMode::Enumeration).unwrap();
        assert_eq!(c.exact.unwrap(), direct);
    }

    #[test]
    fn positive_from_27_on() {
        let spec = MarkovSpec::model();
        for l in [27usize, 40, 60, 120, 300] {
            let p = event_bl(&BlockEvent::standard(l), &spec, EventMode::ClosedForm).unwrap();
            assert!(p.value > 0.0);
        }
    }

    #[test]
    fn closed_form_float_matches_exact_at_moderate_length() {
        let spec = MarkovSpec::model();
        for l in [60usize, 150, 300] {
            let ev = BlockEvent::standard(l);
            let a = event_bl(&ev, &spec, EventMode::ClosedFormExact).unwrap();
            let b = event_bl(&ev, &spec, EventMode::ClosedForm).unwrap();
            assert!(close(a.value, b.value, 1e-12 * a.value.max(1e-300)), "l = {l}");
        }
    }

    #[test]
    fn decomposition_weights_sum_to_admissible_share() {
        let ev = BlockEvent::standard(200);
        let terms = block_decomposition(&ev);
        let diag_share: f64 = terms.iter().map(|t| t.weight).sum();
        // admissible with even zero count: roughly half the admissible mass
        let adm = to_f64(&super::super::admissible_probability(ev.half_len));
        assert!(diag_share < adm && diag_share > 0.3 * adm);
        assert!(terms.iter().all(|t| (0.0..=1.0).contains(&t.conditional)));
    }

    #[test]
    fn monte_carlo_agrees_with_closed_form() {
        let spec = MarkovSpec::model();
        let ev = BlockEvent::standard(60);
        let exact = event_bl(&ev, &spec, EventMode::ClosedForm).unwrap().value;
        let mc = event_bl(&ev, &spec, EventMode::MonteCarlo { samples: 200_000, seed: 9 }).unwrap();
        assert!((mc.value - exact).abs() < 3.0 * mc.std_error, "{} vs {exact}", mc.value);
    }

    #[test]
    fn model_only_modes_reject_other_chains() {
        let h = 0.5;
        let ev = BlockEvent::standard(5);
        let p = [[0.25, 0.0, 0.0, h], [0.75, 0.0, 0.0, h], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]];
        // P q = q forces q = (2, 3, 3, 3) / 11
        let spec = MarkovSpec::new(p, [2.0 / 11.0, 3.0 / 11.0, 3.0 / 11.0, 3.0 / 11.0]).unwrap();
        assert!(event_bl(&ev, &spec, EventMode::ClosedForm).is_err());
        let b = event_bl(&ev, &spec, EventMode::Enumeration).unwrap();
        let c = event_cl(&ev, &spec, EventMode::Enumeration).unwrap();
        assert!(c.value <= b.value);
        let mut r = crate::rng::stream(1, 0, 0);
        let word = sample_stationary(&spec, 50, &mut r);
        assert!(crate::words::is_allowable(&word));
    }
}
