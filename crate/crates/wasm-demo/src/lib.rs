//! Browser bindings: three curves computed by `kifer-core`, returned as
//! flat `Float64Array`s for a canvas front end.

use kifer_core::combinatorics::en_convergence;
use kifer_core::lyapunov::{le_estimate, CocycleSpec};
use kifer_core::spectra::{ids_curve as core_ids_curve, Potential};
use kifer_core::words::MarkovSpec;
use kifer_core::{Error, Result};
use wasm_bindgen::prelude::*;

/// Largest inputs accepted from the page; the demo runs on the UI thread.
pub const MAX_DIM: usize = 20_000;
pub const MAX_POINTS: usize = 400;
pub const MAX_STEPS: u32 = 1_000_000;
pub const MAX_EVENT_N: usize = 400;

fn check(name: &'static str, value: usize, lo: usize, hi: usize) -> Result<()> {
    if value < lo || value > hi {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("must lie in {lo}..={hi}, got {value}"),
        });
    }
    Ok(())
}

/// `points` evenly spaced energies from `e_min` to `e_max` inclusive.
pub fn grid(e_min: f64, e_max: f64, points: usize) -> Result<Vec<f64>> {
    check("points", points, 2, MAX_POINTS)?;
    if !(e_min < e_max) {
        return Err(Error::InvalidParameter {
            name: "e_min",
            reason: "must be below e_max".into(),
        });
    }
    let step = (e_max - e_min) / (points - 1) as f64;
    Ok((0..points).map(|k| e_min + step * k as f64).collect())
}

/// Mean `N(E)` over `replicas` truncations, one value per grid energy.
pub fn ids_values(dim: usize, replicas: usize, seed: u32, e_min: f64, e_max: f64, points: usize, free: bool) -> Result<Vec<f64>> {
    check("dim", dim, 100, MAX_DIM)?;
    check("replicas", replicas, 1, 16)?;
    let energies = grid(e_min, e_max, points)?;
    let potential = if free { Potential::free() } else { Potential::model() };
    let curve = core_ids_curve(&MarkovSpec::model(), &potential, &energies, dim, replicas, seed as u64)?;
    Ok(curve.iter().map(|e| e.value).collect())
}

/// `L(E)` of the model cocycle (or the free one), one value per energy.
pub fn lyapunov_values(e_min: f64, e_max: f64, points: usize, steps: u32, seed: u32, free: bool) -> Result<Vec<f64>> {
    check("steps", steps as usize, 1000, MAX_STEPS as usize)?;
    grid(e_min, e_max, points)?
        .into_iter()
        .map(|e| {
            let spec = if free { CocycleSpec::free(e) } else { CocycleSpec::schrodinger(e) };
            Ok(le_estimate(&spec, steps as u64, 1, seed as u64)?.value)
        })
        .collect()
}

/// `P(E_n)` for `n = 1..=n_max`, followed by the two candidate limits
/// `1 - F(0.1)` and its half.
pub fn event_values(n_max: usize) -> Result<Vec<f64>> {
    check("n_max", n_max, 8, MAX_EVENT_N)?;
    let c = en_convergence(n_max)?;
    let mut out: Vec<f64> = c.rows.iter().map(|r| r.exact).collect();
    out.push(c.full_constant);
    out.push(c.half_constant);
    Ok(out)
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn ids_curve(dim: usize, replicas: usize, seed: u32, e_min: f64, e_max: f64, points: usize, free: bool) -> std::result::Result<Vec<f64>, JsError> {
    ids_values(dim, replicas, seed, e_min, e_max, points, free).map_err(js)
}

#[wasm_bindgen]
pub fn lyapunov_curve(e_min: f64, e_max: f64, points: usize, steps: u32, seed: u32, free: bool) -> std::result::Result<Vec<f64>, JsError> {
    lyapunov_values(e_min, e_max, points, steps, seed, free).map_err(js)
}

#[wasm_bindgen]
pub fn event_series(n_max: usize) -> std::result::Result<Vec<f64>, JsError> {
    event_values(n_max).map_err(js)
}
