use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::calculus::{BlochMomentum, Calculus};
use super::fft;
use super::fields::{ScalarField, State8, VectorField};
use super::grid::Grid;
use crate::error::{Error, Result};
use crate::linalg::{pcg, SolveStats};

/// Weighted inner product of two states with weights `(ε,ε,ε,μ,μ,μ,ε,μ)`,
/// conjugate-linear in `u`. Trapezoid quadrature times cell volume.
pub fn weighted_inner(u: &State8, w: &State8, eps: &ScalarField, mu: &ScalarField) -> Result<C64> {
    let g = *u.grid();
    w.grid().check_same(&g)?;
    eps.grid().check_same(&g)?;
    mu.grid().check_same(&g)?;
    let (a, b) = (u.components(), w.components());
    let mut acc = C64::new(0.0, 0.0);
    for (c, (x, y)) in a.iter().zip(b.iter()).enumerate() {
        let weight = if matches!(c, 0..=2 | 6) { eps } else { mu };
        acc += x
            .data()
            .iter()
            .zip(y.data())
            .zip(weight.data())
            .map(|((p, q), r)| p.conj() * q * r.re)
            .sum::<C64>();
    }
    Ok(acc * g.volume() / g.len() as f64)
}

/// Weighted ℓ² inner product of two vector fields, `Σ weight · ū·w`, without
/// the volume factor.
pub fn weighted_vector_dot(u: &VectorField, w: &VectorField, weight: &ScalarField) -> C64 {
    (0..3)
        .map(|a| {
            u.c[a]
                .data()
                .iter()
                .zip(w.c[a].data())
                .zip(weight.data())
                .map(|((p, q), r)| p.conj() * q * r.re)
                .sum::<C64>()
        })
        .sum()
}

/// Settings for the weighted Poisson solve behind the projector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonOptions {
    pub tolerance: f64,
    /// Iteration cap; `None` means `10 · (points)`.
    pub max_iterations: Option<usize>,
    /// Minimum admissible weight sample.
    pub weight_floor: f64,
}

impl Default for PoissonOptions {
    fn default() -> Self {
        Self { tolerance: 1e-12, max_iterations: None, weight_floor: 1e-6 }
    }
}

/// Projection of `v` onto `{div(weight · u) = 0}` orthogonally in the
/// weighted product: `v − ∇p` with `div(weight ∇p) = div(weight v)`.
pub fn project_div_free(
    calc: &dyn Calculus,
    v: &VectorField,
    weight: &ScalarField,
    k: &BlochMomentum,
    opts: &PoissonOptions,
) -> Result<(VectorField, SolveStats)> {
    let g = *v.grid();
    weight.grid().check_same(&g)?;
    let min = weight.min_real();
    if !(min > opts.weight_floor) || weight.max_imag() > 1e-12 * weight.max_abs() {
        return Err(Error::NonPositive { what: "projector weight".into(), min, floor: opts.weight_floor });
    }
    let to_field = |x: &[C64]| ScalarField::from_samples(g, x.to_vec()).expect("sizes agree");
    // Hermitian positive form A p = -div(w ∇p).
    let apply = |p: &[C64]| -> Vec<C64> {
        let gp = calc.grad(&to_field(p), k).times(weight);
        calc.div(&gp, k).scale_real(-1.0).into_data()
    };
    let wbar = weight.mean().re;
    let precond = inverse_laplacian(g, *k, wbar);
    let wv = v.times(weight);
    let b = calc.div(&wv, k).scale_real(-1.0);
    let b = precond.remove_null(b.data());
    // Right-hand sides at roundoff level relative to |ξ|max ‖w v‖ carry
    // components outside the range of a finite-difference Laplacian.
    let xi_max = (0..3)
        .map(|a| (g.reciprocal(a) * (g.n()[a] as f64 / 2.0 + k.0[a].abs())).powi(2))
        .sum::<f64>()
        .sqrt();
    let atol = 1e-14 * xi_max * wv.norm_sqr().sqrt();
    let cap = opts.max_iterations.unwrap_or(10 * g.len());
    let (p, stats) = pcg(apply, |r| precond.apply(r), &b, opts.tolerance, atol, cap)?;
    let p = precond.remove_null(&p);
    let gp = calc.grad(&to_field(&p), k);
    Ok((v - &gp, stats))
}

/// Applies [`project_div_free`] to the E block with weight ε and the H block
/// with weight μ; scalar channels are zeroed.
pub fn project_state(
    calc: &dyn Calculus,
    u: &State8,
    eps: &ScalarField,
    mu: &ScalarField,
    k: &BlochMomentum,
    opts: &PoissonOptions,
) -> Result<State8> {
    let g = *u.grid();
    let (e, _) = project_div_free(calc, &u.e, eps, k, opts)?;
    let (h, _) = project_div_free(calc, &u.h, mu, k, opts)?;
    Ok(State8 { e, h, phi: ScalarField::zeros(g), psi: ScalarField::zeros(g) })
}

/// `(w̄ |ξ|²)^{-1}` with the `ξ = 0` modes removed (mean-zero gauge).
struct InverseLaplacian {
    grid: Grid,
    inv: Vec<f64>,
}

fn inverse_laplacian(grid: Grid, k: BlochMomentum, wbar: f64) -> InverseLaplacian {
    let inv = (0..grid.len())
        .map(|idx| {
            let i = grid.unravel(idx);
            let xi2: f64 = (0..3).map(|a| grid.wavenumber(a, i[a], k.0[a]).powi(2)).sum();
            if xi2 < 1e-20 {
                0.0
            } else {
                1.0 / (wbar * xi2)
            }
        })
        .collect();
    InverseLaplacian { grid, inv }
}

impl InverseLaplacian {
    fn apply(&self, r: &[C64]) -> Vec<C64> {
        let mut s = r.to_vec();
        fft::forward(&self.grid, &mut s);
        s.iter_mut().zip(&self.inv).for_each(|(x, m)| *x *= m);
        fft::inverse(&self.grid, &mut s);
        s
    }

    fn remove_null(&self, r: &[C64]) -> Vec<C64> {
        if self.inv.iter().all(|&m| m != 0.0) {
            return r.to_vec();
        }
        let mut s = r.to_vec();
        fft::forward(&self.grid, &mut s);
        s.iter_mut().zip(&self.inv).for_each(|(x, m)| {
            if *m == 0.0 {
                *x = C64::new(0.0, 0.0);
            }
        });
        fft::inverse(&self.grid, &mut s);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::calculus::Spectral;
    use crate::field::random::{bandlimited_scalar, bandlimited_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn weight(g: Grid) -> ScalarField {
        ScalarField::from_real_fn(g, |x| 1.0 + 0.3 * x[0].cos() * x[1].sin() + 0.2 * (x[2] + 0.4).cos())
    }

    #[test]
    fn constant_field_volume() {
        let g = Grid::cubic(4).unwrap();
        let one = ScalarField::constant(g, C64::new(1.0, 0.0));
        let mut u = State8::zeros(g);
        u.e.c[0] = one.clone();
        let ip = weighted_inner(&u, &u, &one, &one).unwrap();
        assert!((ip.re - (2.0 * std::f64::consts::PI).powi(3)).abs() < 1e-10 && ip.im.abs() < 1e-14);
    }

    #[test]
    fn single_gradient_mode_is_removed() {
        let g = Grid::cubic(8).unwrap();
        let one = ScalarField::constant(g, C64::new(1.0, 0.0));
        let mut v = VectorField::zeros(g);
        v.c[0] = ScalarField::from_fn(g, |x| C64::from_polar(1.0, x[0]));
        let (p, _) = project_div_free(&Spectral, &v, &one, &BlochMomentum::ZERO, &PoissonOptions::default()).unwrap();
        assert!(p.c.iter().all(|c| c.max_abs() < 1e-12));
    }

    #[test]
    fn projector_properties() {
        let g = Grid::cubic(8).unwrap();
        let w = weight(g);
        let k = BlochMomentum([0.2, -0.1, 0.05]);
        let opts = PoissonOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = bandlimited_vector(g, 2, &mut rng);
        let u = bandlimited_vector(g, 2, &mut rng);
        let (pv, _) = project_div_free(&Spectral, &v, &w, &k, &opts).unwrap();
        let (ppv, _) = project_div_free(&Spectral, &pv, &w, &k, &opts).unwrap();
        let scale = pv.norm_sqr().sqrt();
        assert!((&ppv - &pv).norm_sqr().sqrt() <= 1e-11 * scale);
        let div = Spectral.div(&pv.times(&w), &k);
        assert!(div.norm_sqr().sqrt() <= 1e-10 * scale);
        let q = bandlimited_scalar(g, 3, &mut rng);
        let grad_q = Spectral.grad(&q, &k);
        let ip = weighted_vector_dot(&grad_q, &pv, &w).norm();
        assert!(ip <= 1e-10 * scale * grad_q.norm_sqr().sqrt());
        let (pu, _) = project_div_free(&Spectral, &u, &w, &k, &opts).unwrap();
        let lhs = weighted_vector_dot(&pu, &v, &w);
        let rhs = weighted_vector_dot(&u, &pv, &w);
        assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0));
    }

    #[test]
    fn degenerate_weight_rejected() {
        let g = Grid::cubic(4).unwrap();
        let w = ScalarField::constant(g, C64::new(1e-9, 0.0));
        let v = VectorField::zeros(g);
        assert!(project_div_free(&Spectral, &v, &w, &BlochMomentum::ZERO, &PoissonOptions::default()).is_err());
    }
}
