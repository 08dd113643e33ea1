//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every entry point takes plain numbers and returns a JSON string, so the
//! page needs no generated TypeScript types.

use emfactor::bloch::{compute_bands, BlochPath, DEFAULT_MEMORY_CAP};
use emfactor::field::random::bandlimited_state;
use emfactor::field::{BlochMomentum, Grid, Spectral};
use emfactor::medium::Medium;
use emfactor::operators::Ops;
use emfactor::resolvent::{r0_norm_decay_check, ComplexMomentumRay};
use emfactor::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

type Out = Result<String, String>;

fn to_js<T: Serialize>(v: &T) -> Out {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn err(e: emfactor::Error) -> String {
    e.to_string()
}

fn js(r: Out) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[derive(Serialize)]
struct BandsOut {
    k: Vec<f64>,
    /// One row per k-point, values inside the window.
    values: Vec<Vec<f64>>,
    window: f64,
    hermitian_defect: f64,
}

/// Bands along Γ→X at N=4 for a preset and amplitude.
#[wasm_bindgen]
pub fn bands(preset: &str, amplitude: f64, samples: usize, window: f64) -> Result<String, JsError> {
    js(bands_json(preset, amplitude, samples, window))
}

pub fn bands_json(preset: &str, amplitude: f64, samples: usize, window: f64) -> Out {
    let m = Medium::preset(preset, Some(amplitude)).map_err(err)?;
    m.validate().map_err(err)?;
    let c = m.coefficients(&Spectral, &m.grid([4; 3]).map_err(err)?).map_err(err)?;
    let path = BlochPath::gamma_x(samples.clamp(2, 33)).map_err(err)?;
    let t = compute_bands(&c, &path, window, DEFAULT_MEMORY_CAP).map_err(err)?;
    to_js(&BandsOut {
        k: t.samples.iter().map(|s| s.k[0]).collect(),
        values: t.samples.iter().map(|s| s.values.clone()).collect(),
        window,
        hermitian_defect: t.max_hermitian_defect(),
    })
}

#[derive(Serialize)]
struct ResidualRow {
    n: usize,
    /// Products evaluated on the grid itself.
    aliased: f64,
    /// Products evaluated on the doubled grid.
    dealiased: f64,
}

/// Relative residual of the main factorization identity for one random
/// state, for each `N` in `ns`.
#[wasm_bindgen]
pub fn eq7_residuals(preset: &str, amplitude: f64, ns: Vec<usize>, seed: u64) -> Result<String, JsError> {
    js(eq7_residuals_json(preset, amplitude, &ns, seed))
}

pub fn eq7_residuals_json(preset: &str, amplitude: f64, ns: &[usize], seed: u64) -> Out {
    let m = Medium::preset(preset, Some(amplitude)).map_err(err)?;
    m.validate().map_err(err)?;
    let k = BlochMomentum([0.25, 0.1, -0.15]);
    let residual = |grid: Grid, u: &emfactor::field::State8| -> Result<f64, String> {
        let c = m.coefficients(&Spectral, &grid).map_err(err)?;
        let u = u.resample(&grid).map_err(err)?;
        let (l, r) = Ops::new(&Spectral, &c, k).eq7_sides(&u);
        let d = c.weighted_norm(&(&l - &r)).map_err(err)?;
        Ok(d / c.weighted_norm(&l).map_err(err)?.max(c.weighted_norm(&r).map_err(err)?).max(1e-300))
    };
    let rows = ns
        .iter()
        .copied()
        .filter(|n| (4..=16).contains(n) && n % 2 == 0)
        .map(|n| {
            let grid = m.grid([n; 3]).map_err(err)?;
            let u = bandlimited_state(grid, n / 2 - 1, &mut ChaCha8Rng::seed_from_u64(seed));
            Ok(ResidualRow { n, aliased: residual(grid, &u)?, dealiased: residual(grid.refined(2), &u)? })
        })
        .collect::<Result<Vec<_>, String>>()?;
    to_js(&rows)
}

/// `τ·‖R₀‖` along `k = (k₁ + iτ, 0, 0)` on a 64³ mode set.
#[wasm_bindgen]
pub fn r0_decay(k1: f64, shift: f64, taus: Vec<f64>) -> Result<String, JsError> {
    js(r0_decay_json(k1, shift, taus))
}

pub fn r0_decay_json(k1: f64, shift: f64, taus: Vec<f64>) -> Out {
    let ray = ComplexMomentumRay::new([k1, 0.0, 0.0], 0, taus).map_err(err)?;
    let grid = Grid::new([64; 3], [2.0 * std::f64::consts::PI; 3], (1, 1)).map_err(err)?;
    to_js(&r0_norm_decay_check(&ray, 1.0, C64::new(shift, 0.0), &grid).map_err(err)?)
}
