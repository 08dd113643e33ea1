use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::fields::{ScalarField, State8, VectorField};
use super::grid::Grid;

/// Complex Gaussian Fourier coefficients on modes with `|n|_∞ ≤ bandlimit`,
/// drawn in slot order.
pub fn bandlimited_scalar<R: Rng + ?Sized>(grid: Grid, bandlimit: usize, rng: &mut R) -> ScalarField {
    let b = bandlimit as i64;
    let spec = (0..grid.len())
        .map(|idx| {
            let m = grid.modes_of(idx);
            if m.iter().all(|x| x.abs() <= b) {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C64::new(re, im)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    ScalarField::from_spectrum(grid, spec).expect("sizes agree")
}

pub fn bandlimited_vector<R: Rng + ?Sized>(grid: Grid, bandlimit: usize, rng: &mut R) -> VectorField {
    VectorField::from_parts(std::array::from_fn(|_| bandlimited_scalar(grid, bandlimit, rng)))
}

/// Random bandlimited state with unit ℓ² sample norm.
pub fn bandlimited_state<R: Rng + ?Sized>(grid: Grid, bandlimit: usize, rng: &mut R) -> State8 {
    let s = State8::from_components(std::array::from_fn(|_| bandlimited_scalar(grid, bandlimit, rng)));
    let n = s.l2_norm();
    if n > 0.0 {
        s.scale(C64::new(1.0 / n, 0.0))
    } else {
        s
    }
}
