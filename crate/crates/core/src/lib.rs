//! Random Schrödinger cocycles over a four-symbol Markov shift.

pub mod combinatorics;
pub mod error;
pub mod lyapunov;
pub mod modulus;
pub mod quasimode;
pub mod rng;
pub mod sl2;
pub mod spectra;
pub mod stats;
pub mod thouless;
#[cfg(feature = "verify")]
pub mod verify;
pub mod words;

pub use error::{Error, Result};
