use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::fields::{ScalarField, VectorField};
use crate::error::{Error, Result};

/// Floor below which `sqrt` / `reciprocal` refuse their input.
pub const POSITIVITY_FLOOR: f64 = 1e-12;

/// Product evaluated on the grid enlarged by its dealias factor and truncated
/// back, so quadratic aliasing is removed.
pub fn multiply(a: &ScalarField, b: &ScalarField) -> Result<ScalarField> {
    a.check_grid(b)?;
    let g = *a.grid();
    let p = g.padded();
    let prod = &a.resample(&p)? * &b.resample(&p)?;
    prod.resample(&g)
}

pub fn add(a: &ScalarField, b: &ScalarField) -> Result<ScalarField> {
    a.check_grid(b)?;
    Ok(a + b)
}

pub fn scale(a: &ScalarField, s: C64) -> ScalarField {
    a.scale(s)
}

fn check_positive(f: &ScalarField, what: &str) -> Result<()> {
    let min = f.min_real();
    let imag_ok = f.data().iter().all(|z| z.im.abs() <= 1e-12 * z.re.abs().max(1.0));
    if !(min > POSITIVITY_FLOOR) || !imag_ok {
        return Err(Error::NonPositive { what: what.to_string(), min, floor: POSITIVITY_FLOOR });
    }
    Ok(())
}

/// Sample-wise square root of a positive real field.
pub fn sqrt(f: &ScalarField) -> Result<ScalarField> {
    check_positive(f, "sqrt input")?;
    Ok(f.map(|z| C64::new(z.re.sqrt(), 0.0)))
}

/// Sample-wise reciprocal of a positive real field.
pub fn reciprocal(f: &ScalarField) -> Result<ScalarField> {
    check_positive(f, "reciprocal input")?;
    Ok(f.map(|z| C64::new(1.0 / z.re, 0.0)))
}

/// Dealiased cross product.
pub fn cross(a: &VectorField, b: &VectorField) -> Result<VectorField> {
    a.grid().check_same(b.grid())?;
    let m = |i: usize, j: usize| multiply(&a.c[i], &b.c[j]);
    VectorField::new([&m(1, 2)? - &m(2, 1)?, &m(2, 0)? - &m(0, 2)?, &m(0, 1)? - &m(1, 0)?])
}

/// Sample-wise cross product.
pub fn cross_collocated(a: &VectorField, b: &VectorField) -> VectorField {
    let m = |i: usize, j: usize| &a.c[i] * &b.c[j];
    VectorField::from_parts([&m(1, 2) - &m(2, 1), &m(2, 0) - &m(0, 2), &m(0, 1) - &m(1, 0)])
}

/// Sample-wise bilinear dot product (no conjugation).
pub fn dot_collocated(a: &VectorField, b: &VectorField) -> ScalarField {
    let mut acc = &a.c[0] * &b.c[0];
    acc.add_assign(&(&a.c[1] * &b.c[1]));
    acc.add_assign(&(&a.c[2] * &b.c[2]));
    acc
}

/// Named pointwise operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointwiseOp {
    Multiply,
    Add,
    Scale,
    Sqrt,
    Reciprocal,
    Cross,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::grid::Grid;

    #[test]
    fn cross_of_unit_vectors() {
        let g = Grid::cubic(4).unwrap();
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let e1 = VectorField::constant(g, [one, zero, zero]);
        let e2 = VectorField::constant(g, [zero, one, zero]);
        let e3 = cross(&e1, &e2).unwrap();
        assert!((e3.c[2].mean() - one).norm() < 1e-15);
        assert!(e3.c[0].max_abs() < 1e-15 && e3.c[1].max_abs() < 1e-15);
    }

    #[test]
    fn reciprocal_of_two() {
        let g = Grid::cubic(4).unwrap();
        let r = reciprocal(&ScalarField::constant(g, C64::new(2.0, 0.0))).unwrap();
        assert!(r.data().iter().all(|z| (z - 0.5).norm() < 1e-16));
        assert!(sqrt(&ScalarField::constant(g, C64::new(-1.0, 0.0))).is_err());
        assert!(reciprocal(&ScalarField::zeros(g)).is_err());
    }

    #[test]
    fn dealiased_square_of_sine() {
        let g = Grid::cubic(8).unwrap();
        let s = ScalarField::from_real_fn(g, |x| x[0].sin());
        let sq = multiply(&s, &s).unwrap();
        for (idx, c) in sq.spectrum().iter().enumerate() {
            let m = g.modes_of(idx);
            if m.iter().any(|x| x.abs() > 2) {
                assert!(c.norm() < 1e-15);
            }
        }
        let exact = ScalarField::from_real_fn(g, |x| x[0].sin().powi(2));
        assert!((&sq - &exact).max_abs() < 1e-14);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let a = ScalarField::zeros(Grid::cubic(4).unwrap());
        let b = ScalarField::zeros(Grid::cubic(6).unwrap());
        assert!(matches!(multiply(&a, &b), Err(Error::GridMismatch { .. })));
    }
}
