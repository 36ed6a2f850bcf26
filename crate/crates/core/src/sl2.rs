//! 2×2 unimodular matrices, the rotation/hyperbolic pair `(C, D)`, its
//! energy deformation `(C(E), D(E))`, and an exact symbolic calculus for
//! products of `C` and `D`.
//!
//! Every product of `C` and `D` is `±diag(e^κ, e^-κ)` or
//! `±[[0, -e^κ], [e^-κ, 0]]` for an integer `κ`. [`ProductForm`] tracks
//! that triple exactly, so arbitrarily long products can be classified
//! without floating-point growth.

use std::f64::consts::E;
use std::fmt;
use std::ops::{Mul, Neg};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// A real 2×2 matrix `[[a11, a12], [a21, a22]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);
    pub const ZERO: Mat2 = Mat2::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    pub const fn diag(d1: f64, d2: f64) -> Self {
        Mat2::new(d1, 0.0, 0.0, d2)
    }

    /// Counter-clockwise rotation by `theta` radians.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn transpose(&self) -> Self {
        Mat2::new(self.a11, self.a21, self.a12, self.a22)
    }

    /// Inverse; panics in debug builds on a singular matrix.
    pub fn inverse(&self) -> Self {
        let d = self.det();
        debug_assert!(d != 0.0, "singular matrix");
        Mat2::new(self.a22 / d, -self.a12 / d, -self.a21 / d, self.a11 / d)
    }

    pub fn scale(&self, s: f64) -> Self {
        Mat2::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    pub fn sub(&self, other: &Mat2) -> Self {
        Mat2::new(
            self.a11 - other.a11,
            self.a12 - other.a12,
            self.a21 - other.a21,
            self.a22 - other.a22,
        )
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.a11 * v[0] + self.a12 * v[1],
            self.a21 * v[0] + self.a22 * v[1],
        ]
    }

    pub fn max_abs(&self) -> f64 {
        self.a11
            .abs()
            .max(self.a12.abs())
            .max(self.a21.abs())
            .max(self.a22.abs())
    }

    /// Spectral (operator 2-) norm, i.e. the largest singular value.
    pub fn op_norm(&self) -> f64 {
        let p = (self.a11 + self.a22).hypot(self.a12 - self.a21);
        let q = (self.a11 - self.a22).hypot(self.a12 + self.a21);
        0.5 * (p + q)
    }

    /// Largest modulus of an eigenvalue.
    pub fn spectral_radius(&self) -> f64 {
        let t = self.trace();
        let disc = t * t - 4.0 * self.det();
        if disc >= 0.0 {
            let r = disc.sqrt();
            (0.5 * (t + r)).abs().max((0.5 * (t - r)).abs())
        } else {
            self.det().abs().sqrt()
        }
    }

    /// Entrywise comparison with tolerance `rel_tol` scaled by the largest
    /// entry magnitude of either matrix (and by at least one).
    pub fn approx_eq(&self, other: &Mat2, rel_tol: f64) -> bool {
        let scale = self.max_abs().max(other.max_abs()).max(1.0);
        self.sub(other).max_abs() <= rel_tol * scale
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, r: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * r.a11 + self.a12 * r.a21,
            self.a11 * r.a12 + self.a12 * r.a22,
            self.a21 * r.a11 + self.a22 * r.a21,
            self.a21 * r.a12 + self.a22 * r.a22,
        )
    }
}

impl Neg for Mat2 {
    type Output = Mat2;

    fn neg(self) -> Mat2 {
        self.scale(-1.0)
    }
}

/// The rotation `C = [[0, -1], [1, 0]]` and the hyperbolic `D = diag(e, 1/e)`.
pub fn kifer_pair() -> (Mat2, Mat2) {
    (Mat2::new(0.0, -1.0, 1.0, 0.0), Mat2::diag(E, E.recip()))
}

/// Schrödinger transfer matrix `[[v - E, -1], [1, 0]]`.
pub fn transfer_matrix(v: f64, energy: f64) -> Mat2 {
    Mat2::new(v - energy, -1.0, 1.0, 0.0)
}

/// `(C(E), D(E))`, where `D(E)` is the transfer matrix of one `abc` block.
///
/// Uses the closed form
/// `D(E) = [[e - E p(E), -E q(E)], [E q(E), 1/e + E]]` with
/// `p(E) = E² + (2e + 1/e) E + e²` and `q(E) = E + e + 1/e`.
pub fn energy_pair(energy: f64) -> (Mat2, Mat2) {
    let c = Mat2::new(-energy, -1.0, 1.0, 0.0);
    let p = energy * energy + (2.0 * E + E.recip()) * energy + E * E;
    let q = energy + E + E.recip();
    let d = Mat2::new(
        E - energy * p,
        -energy * q,
        energy * q,
        E.recip() + energy,
    );
    (c, d)
}

/// Letters of the two-generator alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Letter {
    C,
    D,
}

impl Letter {
    pub fn matrix(self) -> Mat2 {
        let (c, d) = kifer_pair();
        match self {
            Letter::C => c,
            Letter::D => d,
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::C => f.write_str("C"),
            Letter::D => f.write_str("D"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Diagonal (`η = +`) or antidiagonal (`η = -`) shape of a product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Klass {
    Diagonal,
    Antidiagonal,
}

/// Exact description of a `{C, D}` product.
///
/// Realizes `sign · diag(e^κ, e^-κ)` when `klass` is diagonal and
/// `sign · [[0, -e^κ], [e^-κ, 0]]` otherwise. `kappa` is unbounded; the
/// floating-point [`realize`](ProductForm::realize) overflows once
/// `|κ|` exceeds roughly 700.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProductForm {
    pub sign: Sign,
    pub klass: Klass,
    pub kappa: BigInt,
}

impl ProductForm {
    pub fn identity() -> Self {
        ProductForm {
            sign: Sign::Plus,
            klass: Klass::Diagonal,
            kappa: BigInt::zero(),
        }
    }

    /// Multiplies the realized matrix on the right by `letter`, in place.
    ///
    /// On the class/κ pair this is: diagonal + D raises κ, antidiagonal + D
    /// lowers κ, and C swaps the class leaving κ fixed. The sign flips only
    /// when C meets an antidiagonal product (`[[0,-1],[1,0]]² = -I`).
    pub fn push(&mut self, letter: Letter) {
        match (self.klass, letter) {
            (Klass::Diagonal, Letter::D) => self.kappa += 1,
            (Klass::Antidiagonal, Letter::D) => self.kappa -= 1,
            (Klass::Diagonal, Letter::C) => self.klass = Klass::Antidiagonal,
            (Klass::Antidiagonal, Letter::C) => {
                self.klass = Klass::Diagonal;
                self.sign = self.sign.flip();
            }
        }
    }

    pub fn kappa_i64(&self) -> Option<i64> {
        self.kappa.to_i64()
    }

    pub fn is_diagonal(&self) -> bool {
        self.klass == Klass::Diagonal
    }

    /// Floating-point matrix realized by this form.
    pub fn realize(&self) -> Mat2 {
        let k = self.kappa.to_f64().unwrap_or(if self.kappa.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        });
        let s = self.sign.as_f64();
        let (up, down) = (k.exp(), (-k).exp());
        match self.klass {
            Klass::Diagonal => Mat2::diag(s * up, s * down),
            Klass::Antidiagonal => Mat2::new(0.0, -s * up, s * down, 0.0),
        }
    }
}

impl Default for ProductForm {
    fn default() -> Self {
        ProductForm::identity()
    }
}

/// Returns `state · letter` as a new form. See [`ProductForm::push`].
pub fn step_form(state: &ProductForm, letter: Letter) -> ProductForm {
    let mut next = state.clone();
    next.push(letter);
    next
}

/// Classifies the product `A_{n-1} ⋯ A_1 A_0` of the letters
/// `(A_0, …, A_{n-1})`, read in time order.
///
/// The result is a right-multiplication fold of [`step_form`] taken from the
/// last letter backwards; the empty word gives the identity.
pub fn classify_word(letters: &[Letter]) -> ProductForm {
    let mut form = ProductForm::identity();
    for &letter in letters.iter().rev() {
        form.push(letter);
    }
    form
}

/// [`ProductForm`] with a machine-width exponent, for hot loops over words
/// short enough that `|κ| < 2^63`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FastForm {
    pub sign: Sign,
    pub klass: Klass,
    pub kappa: i64,
}

impl FastForm {
    pub const IDENTITY: FastForm = FastForm {
        sign: Sign::Plus,
        klass: Klass::Diagonal,
        kappa: 0,
    };

    #[inline]
    pub fn push(&mut self, letter: Letter) {
        match (self.klass, letter) {
            (Klass::Diagonal, Letter::D) => self.kappa += 1,
            (Klass::Antidiagonal, Letter::D) => self.kappa -= 1,
            (Klass::Diagonal, Letter::C) => self.klass = Klass::Antidiagonal,
            (Klass::Antidiagonal, Letter::C) => {
                self.klass = Klass::Diagonal;
                self.sign = self.sign.flip();
            }
        }
    }

    /// Same fold as [`classify_word`].
    pub fn classify(letters: &[Letter]) -> FastForm {
        let mut form = FastForm::IDENTITY;
        for &letter in letters.iter().rev() {
            form.push(letter);
        }
        form
    }
}

impl From<FastForm> for ProductForm {
    fn from(f: FastForm) -> ProductForm {
        ProductForm {
            sign: f.sign,
            klass: f.klass,
            kappa: BigInt::from(f.kappa),
        }
    }
}

/// Floating-point product `A_{n-1} ⋯ A_0` of the letters.
pub fn float_product(letters: &[Letter]) -> Mat2 {
    letters
        .iter()
        .fold(Mat2::IDENTITY, |acc, l| l.matrix() * acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn form(sign: Sign, klass: Klass, kappa: i64) -> ProductForm {
        ProductForm {
            sign,
            klass,
            kappa: BigInt::from(kappa),
        }
    }

    #[test]
    fn pair_identities() {
        let (c, d) = kifer_pair();
        assert_eq!(c * c, -Mat2::IDENTITY);
        assert!((c * d * c).approx_eq(&(-d.inverse()), 1e-15));
        assert_eq!(c.det(), 1.0);
        assert!((d.det() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rotation_powers() {
        let (c, _) = kifer_pair();
        let mut p = Mat2::IDENTITY;
        for n in 1..=16 {
            p = c * p;
            if n % 2 == 0 {
                assert!(p == Mat2::IDENTITY || p == -Mat2::IDENTITY);
            } else {
                assert!(p == c || p == -c);
            }
        }
    }

    #[test]
    fn classify_small_words() {
        use Letter::*;
        assert_eq!(classify_word(&[D]), form(Sign::Plus, Klass::Diagonal, 1));
        assert_eq!(
            classify_word(&[C]),
            form(Sign::Plus, Klass::Antidiagonal, 0)
        );
        assert_eq!(classify_word(&[C, C]), form(Sign::Minus, Klass::Diagonal, 0));
        assert_eq!(classify_word(&[C, C]).realize(), -Mat2::IDENTITY);
        assert_eq!(classify_word(&[]), ProductForm::identity());
    }

    #[test]
    fn fast_form_matches_exact_form() {
        use Letter::*;
        let mut word = Vec::new();
        for code in 0u32..(1 << 12) {
            word.clear();
            word.extend((0..12).map(|b| if code >> b & 1 == 1 { D } else { C }));
            assert_eq!(ProductForm::from(FastForm::classify(&word)), classify_word(&word));
        }
    }

    #[test]
    fn step_rules() {
        use Letter::*;
        let s = step_form(&form(Sign::Plus, Klass::Diagonal, 3), D);
        assert_eq!((s.klass, s.kappa_i64()), (Klass::Diagonal, Some(4)));
        let s = step_form(&form(Sign::Plus, Klass::Antidiagonal, 3), D);
        assert_eq!((s.klass, s.kappa_i64()), (Klass::Antidiagonal, Some(2)));
        let s = step_form(&form(Sign::Plus, Klass::Diagonal, 0), C);
        assert_eq!((s.klass, s.kappa_i64()), (Klass::Antidiagonal, Some(0)));
        let s = step_form(&form(Sign::Minus, Klass::Antidiagonal, -5), C);
        assert_eq!(s, form(Sign::Plus, Klass::Diagonal, -5));
    }

    #[test]
    fn step_agrees_with_right_multiplication() {
        for sign in [Sign::Plus, Sign::Minus] {
            for klass in [Klass::Diagonal, Klass::Antidiagonal] {
                for k in -3..=3 {
                    for letter in [Letter::C, Letter::D] {
                        let f = form(sign, klass, k);
                        let want = f.realize() * letter.matrix();
                        assert!(step_form(&f, letter).realize().approx_eq(&want, 1e-14));
                    }
                }
            }
        }
    }

    #[test]
    fn energy_pair_at_zero() {
        let (c0, d0) = energy_pair(0.0);
        let (c, d) = kifer_pair();
        assert_eq!(c0, c);
        assert_eq!(d0, d);
    }

    #[test]
    fn energy_pair_matches_triple_product() {
        for &en in &[-2.5, -0.3, 0.0, 0.7, 1.0, 4.0] {
            let outer = transfer_matrix(-E, en);
            let inner = transfer_matrix(-E.recip(), en);
            let triple = outer * inner * outer;
            let (c, d) = energy_pair(en);
            assert!(d.approx_eq(&triple, 1e-10), "E = {en}");
            assert_eq!(c, transfer_matrix(0.0, en));
            assert!((d.det() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn transfer_matrix_cases() {
        let (c, _) = kifer_pair();
        assert_eq!(transfer_matrix(0.0, 0.0), c);
        assert_eq!(transfer_matrix(-E, 0.0), Mat2::new(-E, -1.0, 1.0, 0.0));
        assert_eq!(transfer_matrix(3.7, -1.2).det(), 1.0);
    }

    #[test]
    fn norms() {
        assert!((Mat2::rotation(0.4).op_norm() - 1.0).abs() < 1e-15);
        assert!((Mat2::diag(3.0, 0.5).op_norm() - 3.0).abs() < 1e-15);
        let m = Mat2::new(1.0, 2.0, 3.0, 4.0);
        // largest singular value of [[1,2],[3,4]]
        assert!((m.op_norm() - 5.464985704219043).abs() < 1e-12);
        assert!((Mat2::new(-3.0, -1.0, 1.0, 0.0).spectral_radius() - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
    }
}
