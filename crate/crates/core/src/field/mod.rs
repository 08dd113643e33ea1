//! Periodic fields, spectral calculus and the weighted divergence-free
//! projector.

pub mod calculus;
pub mod fft;
pub mod fields;
pub mod grid;
pub mod pointwise;
pub mod projector;
pub mod random;

pub use calculus::{differentiate, AnyField, BlochMomentum, Calculus, DiffKind, FiniteDifference4, Spectral};
pub use fields::{ScalarField, State8, Tensor3, VectorField};
pub use grid::Grid;
pub use projector::{project_div_free, project_state, weighted_inner, PoissonOptions};

#[cfg(test)]
pub(crate) mod testing {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::random::{bandlimited_scalar, bandlimited_vector};
    use super::{Grid, ScalarField, VectorField};

    pub fn random_scalar(g: Grid, bandlimit: usize, seed: u64) -> ScalarField {
        bandlimited_scalar(g, bandlimit, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn random_vector(g: Grid, bandlimit: usize, seed: u64) -> VectorField {
        bandlimited_vector(g, bandlimit, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn rel_diff(a: &ScalarField, b: &ScalarField) -> f64 {
        (a - b).norm_sqr().sqrt() / a.norm_sqr().sqrt().max(b.norm_sqr().sqrt()).max(1e-300)
    }
}
