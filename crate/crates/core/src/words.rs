//! The four-letter alphabet `{0, a, b, c}`, its Markov chain, and words.
//!
//! Transition graph: `0 → {0, a}`, `a → b`, `b → c`, `c → {0, a}`.
//!
//! **Convention:** transition matrices are *column*-stochastic,
//! `p[i][j] = P(next = i | previous = j)`, so each column sums to one and the
//! stationary vector satisfies `P q = q`.

use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sl2::{classify_word, transfer_matrix, FastForm, Letter, Mat2, ProductForm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Symbol {
    Zero = 0,
    A = 1,
    B = 2,
    C = 3,
}

impl Symbol {
    pub const ALL: [Symbol; 4] = [Symbol::Zero, Symbol::A, Symbol::B, Symbol::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Symbol {
        Symbol::ALL[i]
    }

    pub fn as_char(self) -> char {
        match self {
            Symbol::Zero => '0',
            Symbol::A => 'a',
            Symbol::B => 'b',
            Symbol::C => 'c',
        }
    }

    pub fn from_char(ch: char) -> Result<Symbol> {
        match ch {
            '0' => Ok(Symbol::Zero),
            'a' => Ok(Symbol::A),
            'b' => Ok(Symbol::B),
            'c' => Ok(Symbol::C),
            other => Err(Error::InvalidSymbol(other)),
        }
    }

    /// Potential `v(0) = 0`, `v(a) = v(c) = -e`, `v(b) = -1/e`.
    pub fn potential(self) -> f64 {
        match self {
            Symbol::Zero => 0.0,
            Symbol::A | Symbol::C => -E,
            Symbol::B => -E.recip(),
        }
    }

    /// Whether `self → next` is an edge of the transition graph.
    pub fn allows(self, next: Symbol) -> bool {
        matches!(
            (self, next),
            (Symbol::Zero, Symbol::Zero)
                | (Symbol::Zero, Symbol::A)
                | (Symbol::A, Symbol::B)
                | (Symbol::B, Symbol::C)
                | (Symbol::C, Symbol::Zero)
                | (Symbol::C, Symbol::A)
        )
    }

    pub fn successors(self) -> &'static [Symbol] {
        match self {
            Symbol::Zero | Symbol::C => &[Symbol::Zero, Symbol::A],
            Symbol::A => &[Symbol::B],
            Symbol::B => &[Symbol::C],
        }
    }
}

/// A finite word, serialized as an ASCII string over `{0,a,b,c}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for Word {
    type Target = [Symbol];

    fn deref(&self) -> &[Symbol] {
        &self.0
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Word> {
        s.chars().map(Symbol::from_char).collect::<Result<_>>().map(Word)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", s.as_char())?;
        }
        Ok(())
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Word, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn render(symbols: &[Symbol]) -> String {
    symbols.iter().map(|s| s.as_char()).collect()
}

/// True iff consecutive symbols follow graph edges. Words of length ≤ 1 are
/// always allowable.
pub fn is_allowable(w: &[Symbol]) -> bool {
    w.windows(2).all(|p| p[0].allows(p[1]))
}

/// True iff `w` is a concatenation of `0` letters and complete `abc` blocks.
pub fn is_admissible(w: &[Symbol]) -> bool {
    let mut i = 0;
    while i < w.len() {
        match w[i] {
            Symbol::Zero => i += 1,
            Symbol::A if w.get(i + 1) == Some(&Symbol::B) && w.get(i + 2) == Some(&Symbol::C) => {
                i += 3
            }
            _ => return false,
        }
    }
    true
}

/// Splits an admissible word into its `C` (`0`) and `D` (`abc`) letters.
pub fn to_letters(w: &[Symbol]) -> Result<Vec<Letter>> {
    let mut letters = Vec::with_capacity(w.len());
    let mut i = 0;
    while i < w.len() {
        match w[i] {
            Symbol::Zero => {
                letters.push(Letter::C);
                i += 1;
            }
            Symbol::A if w.get(i + 1) == Some(&Symbol::B) && w.get(i + 2) == Some(&Symbol::C) => {
                letters.push(Letter::D);
                i += 3;
            }
            _ => return Err(Error::NotAdmissible(render(w))),
        }
    }
    Ok(letters)
}

/// Inverse of [`to_letters`].
pub fn from_letters(letters: &[Letter]) -> Word {
    let mut out = Vec::with_capacity(3 * letters.len());
    for l in letters {
        match l {
            Letter::C => out.push(Symbol::Zero),
            Letter::D => out.extend([Symbol::A, Symbol::B, Symbol::C]),
        }
    }
    Word(out)
}

/// Right-to-left product of the transfer matrices `[[v(w_j) - E, -1], [1, 0]]`.
pub fn word_to_product(w: &[Symbol], energy: f64) -> Mat2 {
    w.iter().fold(Mat2::IDENTITY, |acc, s| {
        transfer_matrix(s.potential(), energy) * acc
    })
}

/// Exact form of the `E = 0` product of an admissible word.
pub fn word_to_form(w: &[Symbol]) -> Result<ProductForm> {
    Ok(classify_word(&to_letters(w)?))
}

/// Machine-width form of an admissible word, or `None` if it is not
/// admissible. Allocation-free counterpart of [`word_to_form`].
pub fn fast_form(w: &[Symbol]) -> Option<FastForm> {
    let mut form = FastForm::IDENTITY;
    let mut i = w.len();
    while i > 0 {
        match w[i - 1] {
            Symbol::Zero => {
                form.push(Letter::C);
                i -= 1;
            }
            Symbol::C if i >= 3 && w[i - 2] == Symbol::B && w[i - 3] == Symbol::A => {
                form.push(Letter::D);
                i -= 3;
            }
            _ => return None,
        }
    }
    Some(form)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WordKind {
    Allowable,
    Admissible,
}

impl WordKind {
    /// Largest length accepted by [`enumerate_words`].
    pub fn cap(self) -> usize {
        match self {
            WordKind::Allowable => 30,
            WordKind::Admissible => 60,
        }
    }
}

/// Calls `f` on every word of length `n` of the given kind, depth-first
/// over graph edges (no rejected candidates are generated).
pub fn visit_words<F: FnMut(&[Symbol])>(n: usize, kind: WordKind, mut f: F) {
    let mut buf = Vec::with_capacity(n);
    match kind {
        WordKind::Allowable => {
            if n == 0 {
                f(&buf);
                return;
            }
            for s in Symbol::ALL {
                buf.push(s);
                visit_allowable(n, &mut buf, &mut f);
                buf.pop();
            }
        }
        WordKind::Admissible => visit_admissible(n, &mut buf, &mut f),
    }
}

fn visit_allowable<F: FnMut(&[Symbol])>(n: usize, buf: &mut Vec<Symbol>, f: &mut F) {
    if buf.len() == n {
        f(buf);
        return;
    }
    let last = *buf.last().expect("non-empty prefix");
    for &s in last.successors() {
        buf.push(s);
        visit_allowable(n, buf, f);
        buf.pop();
    }
}

fn visit_admissible<F: FnMut(&[Symbol])>(n: usize, buf: &mut Vec<Symbol>, f: &mut F) {
    if buf.len() == n {
        f(buf);
        return;
    }
    buf.push(Symbol::Zero);
    visit_admissible(n, buf, f);
    buf.pop();
    if buf.len() + 3 <= n {
        buf.extend([Symbol::A, Symbol::B, Symbol::C]);
        visit_admissible(n, buf, f);
        buf.truncate(buf.len() - 3);
    }
}

/// All words of length `n` of the given kind, without duplicates.
pub fn enumerate_words(n: usize, kind: WordKind) -> Result<Vec<Word>> {
    if n > kind.cap() {
        return Err(Error::SizeCap { n, cap: kind.cap() });
    }
    let mut out = Vec::new();
    visit_words(n, kind, |w| out.push(Word(w.to_vec())));
    Ok(out)
}

/// A Markov chain on the four symbols: column-stochastic `p` and a
/// stationary probability vector `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovSpec {
    p: [[f64; 4]; 4],
    q: [f64; 4],
}

impl MarkovSpec {
    pub const TOL: f64 = 1e-12;

    pub fn new(p: [[f64; 4]; 4], q: [f64; 4]) -> Result<Self> {
        for j in 0..4 {
            let mut col = 0.0;
            for (i, row) in p.iter().enumerate() {
                if !(row[j] >= 0.0) {
                    return Err(Error::InvalidMarkov(format!("p[{i}][{j}] = {} is negative", row[j])));
                }
                col += row[j];
            }
            if (col - 1.0).abs() > Self::TOL {
                return Err(Error::InvalidMarkov(format!("column {j} sums to {col}")));
            }
        }
        if q.iter().any(|&x| !(x >= 0.0)) || (q.iter().sum::<f64>() - 1.0).abs() > Self::TOL {
            return Err(Error::InvalidMarkov("q is not a probability vector".into()));
        }
        for (i, row) in p.iter().enumerate() {
            let pq: f64 = row.iter().zip(&q).map(|(a, b)| a * b).sum();
            if (pq - q[i]).abs() > Self::TOL {
                return Err(Error::InvalidMarkov(format!("(P q)[{i}] = {pq} != q[{i}] = {}", q[i])));
            }
        }
        Ok(MarkovSpec { p, q })
    }

    /// The chain of the model: every branching edge has probability 1/2,
    /// `a → b` and `b → c` are certain, and `q` is uniform.
    pub fn model() -> Self {
        let h = 0.5;
        MarkovSpec::new(
            [
                [h, 0.0, 0.0, h],
                [h, 0.0, 0.0, h],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
            ],
            [0.25; 4],
        )
        .expect("model chain is valid")
    }

    pub fn matrix(&self) -> &[[f64; 4]; 4] {
        &self.p
    }

    pub fn stationary(&self) -> &[f64; 4] {
        &self.q
    }

    /// `P(next = to | previous = from)`.
    pub fn transition(&self, from: Symbol, to: Symbol) -> f64 {
        self.p[to.index()][from.index()]
    }

    /// Smallest `k ≤ max_power` with `P^k > 0` entrywise, if any.
    pub fn primitivity_index(&self, max_power: usize) -> Option<usize> {
        let mut pow = self.p;
        for k in 1..=max_power {
            if pow.iter().flatten().all(|&x| x > 0.0) {
                return Some(k);
            }
            let mut next = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    next[i][j] = (0..4).map(|m| pow[i][m] * self.p[m][j]).sum();
                }
            }
            pow = next;
        }
        None
    }

    /// Stationary measure of the cylinder `[w_0 … w_{n-1}]`.
    pub fn cylinder_probability(&self, w: &[Symbol]) -> f64 {
        match w.first() {
            None => 1.0,
            Some(first) => w
                .windows(2)
                .fold(self.q[first.index()], |acc, t| acc * self.transition(t[0], t[1])),
        }
    }

    /// [`cylinder_probability`](Self::cylinder_probability) in exact rational
    /// arithmetic (entries are converted from `f64` exactly).
    pub fn cylinder_probability_exact(&self, w: &[Symbol]) -> BigRational {
        let exact = |x: f64| BigRational::from_float(x).expect("finite probability");
        match w.first() {
            None => BigRational::one(),
            Some(first) => {
                let mut acc = exact(self.q[first.index()]);
                for t in w.windows(2) {
                    if acc.is_zero() {
                        break;
                    }
                    acc *= exact(self.transition(t[0], t[1]));
                }
                acc
            }
        }
    }

    pub fn sampler(&self) -> ChainSampler {
        ChainSampler::new(self)
    }
}

impl Default for MarkovSpec {
    fn default() -> Self {
        MarkovSpec::model()
    }
}

/// Precomputed cumulative tables for drawing stationary paths.
#[derive(Clone, Debug)]
pub struct ChainSampler {
    initial: [f64; 4],
    columns: [[f64; 4]; 4],
}

fn draw(cum: &[f64; 4], u: f64) -> Symbol {
    for (i, &c) in cum.iter().enumerate() {
        if u < c {
            return Symbol::from_index(i);
        }
    }
    // u landed in the rounding slack above the last positive mass
    let last = (0..4).rev().find(|&i| i == 0 || cum[i] > cum[i - 1]).unwrap_or(3);
    Symbol::from_index(last)
}

fn cumulative(v: [f64; 4]) -> [f64; 4] {
    let mut acc = 0.0;
    v.map(|x| {
        acc += x;
        acc
    })
}

impl ChainSampler {
    pub fn new(spec: &MarkovSpec) -> Self {
        let mut columns = [[0.0; 4]; 4];
        for (j, col) in columns.iter_mut().enumerate() {
            *col = cumulative([spec.p[0][j], spec.p[1][j], spec.p[2][j], spec.p[3][j]]);
        }
        ChainSampler {
            initial: cumulative(spec.q),
            columns,
        }
    }

    pub fn initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Symbol {
        draw(&self.initial, rng.random())
    }

    pub fn next<R: Rng + ?Sized>(&self, prev: Symbol, rng: &mut R) -> Symbol {
        draw(&self.columns[prev.index()], rng.random())
    }

    /// Replaces the contents of `out` with a stationary path of length `n`.
    pub fn fill<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, out: &mut Vec<Symbol>) {
        out.clear();
        out.reserve(n);
        if n == 0 {
            return;
        }
        let mut s = self.initial(rng);
        out.push(s);
        for _ in 1..n {
            s = self.next(s, rng);
            out.push(s);
        }
    }
}

/// Stationary path of length `n`: `w_0 ~ q`, `w_k ~ column w_{k-1}` of `P`.
pub fn sample_stationary<R: Rng + ?Sized>(spec: &MarkovSpec, n: usize, rng: &mut R) -> Word {
    let mut out = Vec::new();
    spec.sampler().fill(n, rng, &mut out);
    Word(out)
}
