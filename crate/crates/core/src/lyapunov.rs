//! Lyapunov exponents of `SL(2, ℝ)` cocycles over Bernoulli and Markov shifts.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::{self, domain, StreamRng};
use crate::spectra::Potential;
use crate::sl2::{energy_pair, kifer_pair, transfer_matrix, FastForm, Letter, Mat2};
use crate::stats::{CompensatedSum, Estimate};
use crate::words::{ChainSampler, MarkovSpec, Symbol};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Base {
    /// i.i.d. symbols with these probabilities.
    Bernoulli(Vec<f64>),
    Markov(MarkovSpec),
}

/// A cocycle: one generator per base symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocycleSpec {
    pub base: Base,
    pub generators: Vec<Mat2>,
    pub energy: Option<f64>,
}

impl CocycleSpec {
    pub fn new(base: Base, generators: Vec<Mat2>, energy: Option<f64>) -> Result<Self> {
        let spec = CocycleSpec {
            base,
            generators,
            energy,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let symbols = match &self.base {
            Base::Bernoulli(p) => {
                if p.iter().any(|&x| !(x >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidCocycle("probabilities must sum to 1".into()));
                }
                p.len()
            }
            Base::Markov(_) => 4,
        };
        if self.generators.len() != symbols {
            return Err(Error::InvalidCocycle(format!(
                "{} generators for {symbols} symbols",
                self.generators.len()
            )));
        }
        for (j, g) in self.generators.iter().enumerate() {
            if (g.det() - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidCocycle(format!("generator {j} has det {}", g.det())));
            }
        }
        Ok(())
    }

    /// `(C, D)` with probabilities `(p, 1 - p)`.
    pub fn kifer(p: f64) -> Result<Self> {
        let (c, d) = kifer_pair();
        Self::new(Base::Bernoulli(vec![p, 1.0 - p]), vec![c, d], None)
    }

    /// Schrödinger cocycle of the model potential over the model chain.
    pub fn schrodinger(energy: f64) -> Self {
        Self::schrodinger_with(MarkovSpec::model(), &Potential::model(), energy)
    }

    /// Schrödinger cocycle of any per-symbol potential over a chain.
    pub fn schrodinger_with(chain: MarkovSpec, potential: &Potential, energy: f64) -> Self {
        let generators = Symbol::ALL
            .iter()
            .map(|&s| transfer_matrix(potential.at(s), energy))
            .collect();
        Self::new(Base::Markov(chain), generators, Some(energy))
            .expect("transfer matrices are unimodular")
    }

    /// Bernoulli `(C(E), D(E); 1/2, 1/2)`, conjugate to the return-map cocycle.
    pub fn conjugate(energy: f64) -> Self {
        let (c, d) = energy_pair(energy);
        // D(E) is a product of three unimodular factors; the closed form
        // drifts from det 1 by rounding only.
        Self::new(Base::Bernoulli(vec![0.5, 0.5]), vec![c, d], Some(energy))
            .expect("closed-form pair is unimodular")
    }

    /// Constant cocycle of the free operator.
    pub fn free(energy: f64) -> Self {
        Self::new(Base::Bernoulli(vec![1.0]), vec![transfer_matrix(0.0, energy)], Some(energy))
            .expect("transfer matrix is unimodular")
    }

    /// Equal-weight Bernoulli cocycle over the given generators.
    pub fn uniform(generators: Vec<Mat2>) -> Result<Self> {
        let k = generators.len();
        if k == 0 {
            return Err(Error::InvalidCocycle("no generators".into()));
        }
        Self::new(Base::Bernoulli(vec![1.0 / k as f64; k]), generators, None)
    }

    /// Every generator multiplied by `-1`.
    pub fn negated(&self) -> Self {
        CocycleSpec {
            generators: self.generators.iter().map(|g| -*g).collect(),
            ..self.clone()
        }
    }

    /// First 16 hex digits of the SHA-256 of the JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("spec serializes");
        let digest = Sha256::digest(&json);
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    fn source(&self) -> Source {
        match &self.base {
            Base::Bernoulli(p) => {
                let mut acc = 0.0;
                Source::Bernoulli(
                    p.iter()
                        .map(|x| {
                            acc += x;
                            acc
                        })
                        .collect(),
                )
            }
            Base::Markov(m) => Source::Markov(m.sampler()),
        }
    }
}

enum Source {
    Bernoulli(Vec<f64>),
    Markov(ChainSampler),
}

/// Symbol stream of one replica.
struct Orbit<'a> {
    source: &'a Source,
    state: Option<Symbol>,
}

impl<'a> Orbit<'a> {
    fn new(source: &'a Source) -> Self {
        Orbit { source, state: None }
    }

    #[inline]
    fn next(&mut self, rng: &mut StreamRng) -> usize {
        match self.source {
            Source::Bernoulli(cum) => {
                let u: f64 = rng.random();
                cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
            }
            Source::Markov(sampler) => {
                let s = match self.state {
                    None => sampler.initial(rng),
                    Some(prev) => sampler.next(prev, rng),
                };
                self.state = Some(s);
                s.index()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeEstimate {
    /// Nats per step.
    pub value: f64,
    pub std_error: f64,
    pub n_steps: u64,
    pub replicas: usize,
}

impl LeEstimate {
    fn from_replicas(values: &[f64], n_steps: u64) -> Self {
        let e = Estimate::from_samples(values);
        LeEstimate {
            value: e.value,
            std_error: e.std_error,
            n_steps,
            replicas: values.len(),
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            value: self.value,
            std_error: self.std_error,
            samples: self.replicas,
        }
    }
}

/// Unnormalized steps discarded before accumulation.
fn burn_in(n_steps: u64) -> u64 {
    (n_steps / 10).min(1000)
}

fn random_direction(rng: &mut StreamRng) -> [f64; 2] {
    let theta = rng.random::<f64>() * PI;
    [theta.cos(), theta.sin()]
}

/// Applies `a` to the unit vector `v`, renormalizes, and returns the log of
/// the stretch.
#[inline]
fn stretch(a: &Mat2, v: &mut [f64; 2]) -> f64 {
    let w = a.apply(*v);
    let norm = w[0].hypot(w[1]);
    *v = [w[0] / norm, w[1] / norm];
    norm.ln()
}

fn check_steps(n_steps: u64, replicas: usize) -> Result<()> {
    if n_steps < 1000 {
        return Err(Error::param("n_steps", "must be at least 1000"));
    }
    if replicas == 0 {
        return Err(Error::param("replicas", "must be positive"));
    }
    Ok(())
}

/// Renormalized-vector estimate `(1/n) Σ log ‖A(x_k) u_k‖` per replica, with a
/// random initial direction and a short burn-in; mean and standard error over
/// replicas.
pub fn le_estimate(spec: &CocycleSpec, n_steps: u64, replicas: usize, seed: u64) -> Result<LeEstimate> {
    le_estimate_in(spec, n_steps, replicas, seed, domain::LYAPUNOV, 0)
}

fn le_estimate_in(
    spec: &CocycleSpec,
    n_steps: u64,
    replicas: usize,
    seed: u64,
    dom: u64,
    key: u64,
) -> Result<LeEstimate> {
    check_steps(n_steps, replicas)?;
    let source = spec.source();
    let values = rng::map_indexed(replicas, |r| {
        let mut g = rng::substream(seed, dom, r as u64, key);
        let mut orbit = Orbit::new(&source);
        let mut v = random_direction(&mut g);
        for _ in 0..burn_in(n_steps) {
            stretch(&spec.generators[orbit.next(&mut g)], &mut v);
        }
        let mut sum = CompensatedSum::default();
        for _ in 0..n_steps {
            sum.add(stretch(&spec.generators[orbit.next(&mut g)], &mut v));
        }
        sum.value() / n_steps as f64
    });
    Ok(LeEstimate::from_replicas(&values, n_steps))
}

/// `(1/n) E[log ‖A⁽ⁿ⁾‖]` from the operator norm of the product itself,
/// rescaled as it grows.
pub fn mean_log_norm(spec: &CocycleSpec, n_steps: u64, replicas: usize, seed: u64) -> Result<Estimate> {
    if n_steps == 0 || replicas == 0 {
        return Err(Error::param("n_steps", "steps and replicas must be positive"));
    }
    let source = spec.source();
    let values = rng::map_indexed(replicas, |r| {
        let mut g = rng::substream(seed, domain::LYAPUNOV, r as u64, 1 << 20);
        let mut orbit = Orbit::new(&source);
        let mut m = Mat2::IDENTITY;
        let mut log_scale = 0.0;
        for _ in 0..n_steps {
            m = spec.generators[orbit.next(&mut g)] * m;
            let s = m.max_abs();
            if s > 1e100 {
                m = m.scale(1.0 / s);
                log_scale += s.ln();
            }
        }
        (log_scale + m.op_norm().ln()) / n_steps as f64
    });
    Ok(Estimate::from_samples(&values))
}

/// Exact walk of the `(C, D; 1/2, 1/2)` product: the norm of the product is
/// `e^{|κ|}`, so `|κ_n|/n` is the finite-`n` exponent with no rounding.
pub fn le_exact_kifer(n_steps: u64, replicas: usize, seed: u64) -> Result<LeEstimate> {
    if n_steps == 0 || replicas == 0 {
        return Err(Error::param("n_steps", "steps and replicas must be positive"));
    }
    let values = rng::map_indexed(replicas, |r| {
        let form = kifer_walk(n_steps, &mut rng::stream(seed, domain::KIFER_WALK, r as u64));
        form.kappa.unsigned_abs() as f64 / n_steps as f64
    });
    Ok(LeEstimate::from_replicas(&values, n_steps))
}

/// Form of the product of `n` i.i.d. fair letters.
pub fn kifer_walk<R: Rng + ?Sized>(n: u64, rng: &mut R) -> FastForm {
    let mut form = FastForm::IDENTITY;
    let mut left = n;
    while left > 0 {
        let take = left.min(64);
        let bits: u64 = rng.random();
        for b in 0..take {
            form.push(if bits >> b & 1 == 1 { Letter::D } else { Letter::C });
        }
        left -= take;
    }
    form
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InducedReport {
    pub energy: f64,
    /// Exponent of the return-map cocycle, per return.
    pub induced: LeEstimate,
    /// Exponent of the base Schrödinger cocycle, per step.
    pub base: LeEstimate,
    /// `induced / base` with first-order error propagation.
    pub ratio: Estimate,
    /// Base steps per return.
    pub mean_return_time: Estimate,
}

/// Return map to `{x₀ ∈ {0, a}}`: consumes base symbols (transfer matrices
/// included) until the next `0` or `a`, for `n_steps` returns per replica.
/// The base exponent comes from an independent [`le_estimate`] run.
pub fn induced_le(energy: f64, n_steps: u64, replicas: usize, seed: u64) -> Result<InducedReport> {
    check_steps(n_steps, replicas)?;
    let base_spec = CocycleSpec::schrodinger(energy);
    let sampler = MarkovSpec::model().sampler();
    let gens = &base_spec.generators;
    let per_replica = rng::map_indexed(replicas, |r| {
        let mut g = rng::stream(seed, domain::INDUCED, r as u64);
        // start inside the return set
        let mut s = loop {
            let s = sampler.initial(&mut g);
            if matches!(s, Symbol::Zero | Symbol::A) {
                break s;
            }
        };
        let mut v = random_direction(&mut g);
        let one_return = |v: &mut [f64; 2], s: &mut Symbol, g: &mut StreamRng| -> (f64, u64) {
            let mut m = Mat2::IDENTITY;
            let mut steps = 0;
            loop {
                m = gens[s.index()] * m;
                steps += 1;
                *s = sampler.next(*s, g);
                if matches!(*s, Symbol::Zero | Symbol::A) {
                    break;
                }
            }
            (stretch(&m, v), steps)
        };
        for _ in 0..burn_in(n_steps) {
            one_return(&mut v, &mut s, &mut g);
        }
        let mut sum = CompensatedSum::default();
        let mut steps = 0u64;
        for _ in 0..n_steps {
            let (log, k) = one_return(&mut v, &mut s, &mut g);
            sum.add(log);
            steps += k;
        }
        (sum.value() / n_steps as f64, steps as f64 / n_steps as f64)
    });
    let logs: Vec<f64> = per_replica.iter().map(|p| p.0).collect();
    let times: Vec<f64> = per_replica.iter().map(|p| p.1).collect();
    let induced = LeEstimate::from_replicas(&logs, n_steps);
    let base = le_estimate_in(&base_spec, n_steps, replicas, seed, domain::INDUCED, 1)?;
    let value = induced.value / base.value;
    let rel = ((induced.std_error / induced.value).powi(2) + (base.std_error / base.value).powi(2)).sqrt();
    Ok(InducedReport {
        energy,
        induced,
        base,
        ratio: Estimate {
            value,
            std_error: value.abs() * rel,
            samples: replicas,
        },
        mean_return_time: Estimate::from_samples(&times),
    })
}

/// Exponent of the Bernoulli pair `(C(E), D(E); 1/2, 1/2)`.
pub fn bernoulli_conjugate_le(energy: f64, n_steps: u64, replicas: usize, seed: u64) -> Result<LeEstimate> {
    le_estimate_in(&CocycleSpec::conjugate(energy), n_steps, replicas, seed, domain::CONJUGATE, 0)
}

/// `exp(M)` for traceless `M`: `cosh(s) I + sinh(s)/s M` with `s² = -det M`.
pub fn expm_traceless(m: &Mat2) -> Mat2 {
    let s2 = -m.det();
    let (c, k) = if s2 > 1e-16 {
        let s = s2.sqrt();
        (s.cosh(), s.sinh() / s)
    } else if s2 < -1e-16 {
        let s = (-s2).sqrt();
        (s.cos(), s.sin() / s)
    } else {
        (1.0 + s2 / 2.0, 1.0 + s2 / 6.0)
    };
    Mat2::new(c + k * m.a11, k * m.a12, k * m.a21, c + k * m.a22)
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzRow {
    pub epsilon: f64,
    pub trials: usize,
    /// Largest `L̂(B)/ε` over the trials.
    pub max_ratio: f64,
    pub mean_le: f64,
    pub max_le: f64,
    /// Trials with `L̂(B) > C·ε + 3σ`.
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzReport {
    /// `C` in `L(B) ≤ C ‖A − B‖∞`; `1` for orthogonal generators.
    pub constant: f64,
    pub base_le: LeEstimate,
    pub rows: Vec<LipschitzRow>,
}

impl LipschitzReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().map(|r| r.violations).sum()
    }

    /// Largest `L̂(B)/ε` over the whole grid.
    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.max_ratio).fold(0.0, f64::max)
    }
}

/// Settings for [`lipschitz_check`].
#[derive(Clone, Debug)]
pub struct LipschitzProbe {
    pub epsilons: Vec<f64>,
    pub trials: usize,
    pub n_steps: u64,
    pub replicas: usize,
    pub seed: u64,
}

/// Perturbs orthogonal generators `A_j` to `B_j = A_j exp(t X_j)` with random
/// traceless unit-norm `X_j` and `t` chosen so that `max_j ‖A_j − B_j‖ = ε`,
/// then checks `L̂(B) ≤ ε + 3σ`.
pub fn lipschitz_check(rotations: &[Mat2], probe: &LipschitzProbe) -> Result<LipschitzReport> {
    for (j, a) in rotations.iter().enumerate() {
        if !(a.transpose() * *a).approx_eq(&Mat2::IDENTITY, 1e-10) || (a.det() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidCocycle(format!("generator {j} is not a rotation")));
        }
    }
    let base = CocycleSpec::uniform(rotations.to_vec())?;
    let base_le = le_estimate_in(&base, probe.n_steps, probe.replicas, probe.seed, domain::LIPSCHITZ, 0)?;
    let mut rows = Vec::with_capacity(probe.epsilons.len());
    for (ei, &eps) in probe.epsilons.iter().enumerate() {
        if !(eps > 0.0) {
            return Err(Error::param("epsilon", "must be positive"));
        }
        let mut ratios = Vec::with_capacity(probe.trials);
        let mut les = Vec::with_capacity(probe.trials);
        let mut violations = 0;
        for trial in 0..probe.trials {
            let tag = 1 + ((ei as u64) << 20 | trial as u64);
            let mut g = rng::substream(probe.seed, domain::LIPSCHITZ, u32::MAX as u64, tag);
            let dirs: Vec<Mat2> = rotations.iter().map(|_| random_traceless(&mut g)).collect();
            let t = calibrate(&dirs, eps);
            let perturbed: Vec<Mat2> = rotations
                .iter()
                .zip(&dirs)
                .map(|(a, x)| *a * expm_traceless(&x.scale(t)))
                .collect();
            let dist = rotations
                .iter()
                .zip(&perturbed)
                .map(|(a, b)| a.sub(b).op_norm())
                .fold(0.0, f64::max);
            let spec = CocycleSpec::uniform(perturbed)?;
            let le = le_estimate_in(&spec, probe.n_steps, probe.replicas, probe.seed, domain::LIPSCHITZ, tag)?;
            if le.value > dist + 3.0 * le.std_error {
                violations += 1;
            }
            ratios.push(le.value / dist);
            les.push(le.value);
        }
        rows.push(LipschitzRow {
            epsilon: eps,
            trials: probe.trials,
            max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_le: les.iter().sum::<f64>() / les.len().max(1) as f64,
            max_le: les.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            violations,
        });
    }
    Ok(LipschitzReport {
        constant: 1.0,
        base_le,
        rows,
    })
}

fn random_traceless(g: &mut StreamRng) -> Mat2 {
    let a: f64 = g.random_range(-1.0..1.0);
    let b: f64 = g.random_range(-1.0..1.0);
    let c: f64 = g.random_range(-1.0..1.0);
    let x = Mat2::new(a, b, c, -a);
    x.scale(1.0 / x.op_norm())
}

/// `t` with `max_j ‖I − exp(t X_j)‖ = ε`, by bisection.
fn calibrate(dirs: &[Mat2], eps: f64) -> f64 {
    let dist = |t: f64| {
        dirs.iter()
            .map(|x| Mat2::IDENTITY.sub(&expm_traceless(&x.scale(t))).op_norm())
            .fold(0.0, f64::max)
    };
    let mut hi = eps;
    while dist(hi) < eps {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dist(mid) < eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// JSON record of one estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeRecord {
    pub spec_hash: String,
    #[serde(rename = "E")]
    pub energy: Option<f64>,
    pub n: u64,
    pub replicas: usize,
    pub value: f64,
    pub std_error: f64,
}

impl LeRecord {
    pub fn new(spec: &CocycleSpec, est: &LeEstimate) -> Self {
        LeRecord {
            spec_hash: spec.hash(),
            energy: spec.energy,
            n: est.n_steps,
            replicas: est.replicas,
            value: est.value,
            std_error: est.std_error,
        }
    }
}
