use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::fft;
use super::fields::{ScalarField, Tensor3, VectorField};
use super::grid::Grid;
use crate::error::{Error, Result};

const I: C64 = C64::new(0.0, 1.0);

/// Bloch quasi-momentum in units of the reciprocal cell: a state is the
/// periodic representative `p` of `e^{i k·x} p(x)` with `k_a` scaled by
/// `2π / L_a`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochMomentum(pub [f64; 3]);

impl BlochMomentum {
    pub const ZERO: Self = Self([0.0; 3]);

    pub fn new(k: [f64; 3]) -> Result<Self> {
        if k.iter().all(|x| x.is_finite()) {
            Ok(Self(k))
        } else {
            Err(Error::InvalidInput(format!("non-finite Bloch momentum {k:?}")))
        }
    }

    /// Physical wavevector offset `(2π/L_a) k_a`.
    pub fn physical(&self, grid: &Grid) -> [f64; 3] {
        [0, 1, 2].map(|a| grid.reciprocal(a) * self.0[a])
    }
}

/// Derivative backend. Every operator in the crate is written against this
/// trait so that the same expression can be evaluated spectrally and with the
/// finite-difference oracle.
pub trait Calculus: Sync + Send {
    fn name(&self) -> &'static str;

    /// Bloch-shifted partial derivative `(∂_a + i k_a) f` of a state component.
    fn partial(&self, f: &ScalarField, axis: usize, k: &BlochMomentum) -> ScalarField;

    /// Derivative of a real periodic coefficient field.
    fn coefficient_partial(&self, f: &ScalarField, axis: usize) -> ScalarField;

    fn grad(&self, f: &ScalarField, k: &BlochMomentum) -> VectorField {
        VectorField::from_parts(std::array::from_fn(|a| self.partial(f, a, k)))
    }

    fn div(&self, v: &VectorField, k: &BlochMomentum) -> ScalarField {
        let mut acc = self.partial(&v.c[0], 0, k);
        acc.add_assign(&self.partial(&v.c[1], 1, k));
        acc.add_assign(&self.partial(&v.c[2], 2, k));
        acc
    }

    fn curl(&self, v: &VectorField, k: &BlochMomentum) -> VectorField {
        let d = |i: usize, a: usize| self.partial(&v.c[i], a, k);
        VectorField::from_parts([&d(2, 1) - &d(1, 2), &d(0, 2) - &d(2, 0), &d(1, 0) - &d(0, 1)])
    }

    fn laplacian(&self, f: &ScalarField, k: &BlochMomentum) -> ScalarField {
        let mut acc = ScalarField::zeros(*f.grid());
        for a in 0..3 {
            acc.add_assign(&self.partial(&self.partial(f, a, k), a, k));
        }
        acc
    }

    fn vector_laplacian(&self, v: &VectorField, k: &BlochMomentum) -> VectorField {
        v.map(|c| self.laplacian(c, k))
    }

    /// `Jac(v)_{ij} = ∂_j v_i`.
    fn jacobian(&self, v: &VectorField, k: &BlochMomentum) -> Tensor3 {
        Tensor3 { m: std::array::from_fn(|i| std::array::from_fn(|j| self.partial(&v.c[i], j, k))) }
    }

    fn coefficient_grad(&self, f: &ScalarField) -> VectorField {
        VectorField::from_parts(std::array::from_fn(|a| self.coefficient_partial(f, a)))
    }

    fn coefficient_div(&self, v: &VectorField) -> ScalarField {
        let mut acc = self.coefficient_partial(&v.c[0], 0);
        acc.add_assign(&self.coefficient_partial(&v.c[1], 1));
        acc.add_assign(&self.coefficient_partial(&v.c[2], 2));
        acc
    }

    fn coefficient_jacobian(&self, v: &VectorField) -> Tensor3 {
        Tensor3 { m: std::array::from_fn(|i| std::array::from_fn(|j| self.coefficient_partial(&v.c[i], j))) }
    }
}

/// Fourier-multiplier derivatives, exact on the grid's trigonometric
/// polynomials.
#[derive(Debug, Clone, Copy, Default)]
pub struct Spectral;

fn wavenumbers(grid: &Grid, k: &BlochMomentum) -> [Vec<f64>; 3] {
    std::array::from_fn(|a| (0..grid.n()[a]).map(|i| grid.wavenumber(a, i, k.0[a])).collect())
}

fn with_multiplier(grid: &Grid, spec: &[C64], m: impl Fn([usize; 3]) -> C64) -> ScalarField {
    let n = grid.n();
    let mut out = Vec::with_capacity(spec.len());
    for i0 in 0..n[0] {
        for i1 in 0..n[1] {
            for i2 in 0..n[2] {
                out.push(spec[out.len()] * m([i0, i1, i2]));
            }
        }
    }
    fft::inverse(grid, &mut out);
    ScalarField::from_samples(*grid, out).expect("sizes agree")
}

impl Calculus for Spectral {
    fn name(&self) -> &'static str {
        "spectral"
    }

    fn partial(&self, f: &ScalarField, axis: usize, k: &BlochMomentum) -> ScalarField {
        let g = f.grid();
        let xi = wavenumbers(g, k);
        with_multiplier(g, &f.spectrum(), |i| I * xi[axis][i[axis]])
    }

    fn coefficient_partial(&self, f: &ScalarField, axis: usize) -> ScalarField {
        let g = f.grid();
        let nyq = g.n()[axis] / 2;
        let xi = wavenumbers(g, &BlochMomentum::ZERO);
        with_multiplier(g, &f.spectrum(), |i| if i[axis] == nyq { C64::new(0.0, 0.0) } else { I * xi[axis][i[axis]] })
    }

    fn grad(&self, f: &ScalarField, k: &BlochMomentum) -> VectorField {
        let g = f.grid();
        let xi = wavenumbers(g, k);
        let s = f.spectrum();
        VectorField::from_parts(std::array::from_fn(|a| with_multiplier(g, &s, |i| I * xi[a][i[a]])))
    }

    fn div(&self, v: &VectorField, k: &BlochMomentum) -> ScalarField {
        let g = v.grid();
        let xi = wavenumbers(g, k);
        let s = v.c.each_ref().map(|c| c.spectrum());
        let n = g.n();
        let mut acc = vec![C64::new(0.0, 0.0); g.len()];
        let mut idx = 0;
        for i0 in 0..n[0] {
            for i1 in 0..n[1] {
                for i2 in 0..n[2] {
                    acc[idx] = I * (xi[0][i0] * s[0][idx] + xi[1][i1] * s[1][idx] + xi[2][i2] * s[2][idx]);
                    idx += 1;
                }
            }
        }
        fft::inverse(g, &mut acc);
        ScalarField::from_samples(*g, acc).expect("sizes agree")
    }

    fn curl(&self, v: &VectorField, k: &BlochMomentum) -> VectorField {
        let g = v.grid();
        let xi = wavenumbers(g, k);
        let s = v.c.each_ref().map(|c| c.spectrum());
        let n = g.n();
        let mut out: [Vec<C64>; 3] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); g.len()]);
        let mut idx = 0;
        for i0 in 0..n[0] {
            for i1 in 0..n[1] {
                for i2 in 0..n[2] {
                    let (x0, x1, x2) = (xi[0][i0], xi[1][i1], xi[2][i2]);
                    out[0][idx] = I * (x1 * s[2][idx] - x2 * s[1][idx]);
                    out[1][idx] = I * (x2 * s[0][idx] - x0 * s[2][idx]);
                    out[2][idx] = I * (x0 * s[1][idx] - x1 * s[0][idx]);
                    idx += 1;
                }
            }
        }
        VectorField::from_parts(out.map(|mut d| {
            fft::inverse(g, &mut d);
            ScalarField::from_samples(*g, d).expect("sizes agree")
        }))
    }

    fn laplacian(&self, f: &ScalarField, k: &BlochMomentum) -> ScalarField {
        let g = f.grid();
        let xi = wavenumbers(g, k);
        with_multiplier(g, &f.spectrum(), |i| {
            C64::new(-(xi[0][i[0]].powi(2) + xi[1][i[1]].powi(2) + xi[2][i[2]].powi(2)), 0.0)
        })
    }
}

/// Fourth-order centered differences with Bloch phases,
/// `Σ_s c_s e^{i k s h} p(x + s h) / h`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FiniteDifference4;

const FD4: [(i64, f64); 4] = [(-2, 1.0 / 12.0), (-1, -2.0 / 3.0), (1, 2.0 / 3.0), (2, -1.0 / 12.0)];

fn fd_partial(f: &ScalarField, axis: usize, kphys: f64) -> ScalarField {
    let g = *f.grid();
    let n = g.n();
    let h = g.spacing(axis);
    let w: Vec<(i64, C64)> = FD4.iter().map(|&(s, c)| (s, C64::from_polar(c / h, kphys * s as f64 * h))).collect();
    let d = f.data();
    let len = n[axis];
    let stride: usize = n[axis + 1..].iter().product();
    let mut out = vec![C64::new(0.0, 0.0); d.len()];
    for outer in (0..d.len()).step_by(len * stride) {
        for inner in 0..stride {
            let base = outer + inner;
            for i in 0..len {
                let mut acc = C64::new(0.0, 0.0);
                for &(s, c) in &w {
                    let j = (i as i64 + s).rem_euclid(len as i64) as usize;
                    acc += c * d[base + j * stride];
                }
                out[base + i * stride] = acc;
            }
        }
    }
    ScalarField::from_samples(g, out).expect("sizes agree")
}

impl Calculus for FiniteDifference4 {
    fn name(&self) -> &'static str {
        "fd4"
    }

    fn partial(&self, f: &ScalarField, axis: usize, k: &BlochMomentum) -> ScalarField {
        fd_partial(f, axis, k.physical(f.grid())[axis])
    }

    fn coefficient_partial(&self, f: &ScalarField, axis: usize) -> ScalarField {
        fd_partial(f, axis, 0.0)
    }
}

/// Differential operator kinds accepted by [`differentiate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffKind {
    Grad,
    Div,
    Curl,
    Laplacian,
}

/// Scalar or vector input/output of [`differentiate`].
#[derive(Debug, Clone, PartialEq)]
pub enum AnyField {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl AnyField {
    fn rank(&self) -> &'static str {
        match self {
            AnyField::Scalar(_) => "scalar",
            AnyField::Vector(_) => "vector",
        }
    }

    pub fn into_scalar(self) -> Option<ScalarField> {
        match self {
            AnyField::Scalar(s) => Some(s),
            AnyField::Vector(_) => None,
        }
    }

    pub fn into_vector(self) -> Option<VectorField> {
        match self {
            AnyField::Vector(v) => Some(v),
            AnyField::Scalar(_) => None,
        }
    }
}

/// Spectral derivative with rank checking.
pub fn differentiate(f: &AnyField, kind: DiffKind, k: &BlochMomentum) -> Result<AnyField> {
    let calc = Spectral;
    let rank_err = || Err(Error::RankMismatch { op: kind_name(kind), rank: f.rank() });
    match (kind, f) {
        (DiffKind::Grad, AnyField::Scalar(s)) => Ok(AnyField::Vector(calc.grad(s, k))),
        (DiffKind::Laplacian, AnyField::Scalar(s)) => Ok(AnyField::Scalar(calc.laplacian(s, k))),
        (DiffKind::Laplacian, AnyField::Vector(v)) => {
            VectorField::new(v.c.clone())?;
            Ok(AnyField::Vector(calc.vector_laplacian(v, k)))
        }
        (DiffKind::Div, AnyField::Vector(v)) => {
            VectorField::new(v.c.clone())?;
            Ok(AnyField::Scalar(calc.div(v, k)))
        }
        (DiffKind::Curl, AnyField::Vector(v)) => {
            VectorField::new(v.c.clone())?;
            Ok(AnyField::Vector(calc.curl(v, k)))
        }
        _ => rank_err(),
    }
}

fn kind_name(kind: DiffKind) -> &'static str {
    match kind {
        DiffKind::Grad => "grad",
        DiffKind::Div => "div",
        DiffKind::Curl => "curl",
        DiffKind::Laplacian => "laplacian",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::testing::{random_scalar, random_vector, rel_diff};

    fn g(n: usize) -> Grid {
        Grid::cubic(n).unwrap()
    }

    #[test]
    fn grad_of_sine() {
        let f = ScalarField::from_real_fn(g(8), |x| x[0].sin());
        let d = differentiate(&AnyField::Scalar(f), DiffKind::Grad, &BlochMomentum::ZERO)
            .unwrap()
            .into_vector()
            .unwrap();
        let want = ScalarField::from_real_fn(g(8), |x| x[0].cos());
        assert!((&d.c[0] - &want).max_abs() < 1e-13);
        assert!(d.c[1].max_abs() < 1e-13 && d.c[2].max_abs() < 1e-13);
    }

    #[test]
    fn rank_mismatch_is_reported() {
        let f = AnyField::Scalar(ScalarField::zeros(g(4)));
        assert!(matches!(
            differentiate(&f, DiffKind::Curl, &BlochMomentum::ZERO),
            Err(Error::RankMismatch { op: "curl", .. })
        ));
        let v = AnyField::Vector(VectorField::zeros(g(4)));
        assert!(differentiate(&v, DiffKind::Grad, &BlochMomentum::ZERO).is_err());
    }

    #[test]
    fn structural_zeros_with_bloch_shift() {
        let k = BlochMomentum([0.31, -0.2, 0.45]);
        let u = random_scalar(g(12), 4, 1);
        let v = random_vector(g(12), 4, 2);
        let cg = Spectral.curl(&Spectral.grad(&u, &k), &k);
        assert!(cg.c.iter().all(|c| c.max_abs() < 1e-12 * u.max_abs().max(1.0) * 64.0));
        let dc = Spectral.div(&Spectral.curl(&v, &k), &k);
        let scale = Spectral.curl(&v, &k).norm_sqr().sqrt();
        assert!(dc.norm_sqr().sqrt() <= 1e-12 * scale);
    }

    #[test]
    fn spectral_matches_default_composition() {
        let k = BlochMomentum([0.1, 0.2, -0.3]);
        let v = random_vector(g(8), 2, 3);
        let fast = Spectral.curl(&v, &k);
        let d = |i: usize, a: usize| Spectral.partial(&v.c[i], a, &k);
        let slow = [&d(2, 1) - &d(1, 2), &d(0, 2) - &d(2, 0), &d(1, 0) - &d(0, 1)];
        for a in 0..3 {
            assert!(rel_diff(&fast.c[a], &slow[a]) < 1e-13);
        }
        let lap = Spectral.laplacian(&v.c[0], &k);
        let lap2 = Spectral.div(&Spectral.grad(&v.c[0], &k), &k);
        assert!(rel_diff(&lap, &lap2) < 1e-13);
    }

    #[test]
    fn fd_oracle_converges_at_fourth_order() {
        let k = BlochMomentum([0.25, 0.0, 0.1]);
        let coarse = g(16);
        let u = random_scalar(g(8), 2, 9);
        let mut errs = Vec::new();
        for grid in [coarse, coarse.refined(2)] {
            let uf = u.resample(&grid).unwrap();
            let exact = Spectral.partial(&uf, 0, &k);
            let fd = FiniteDifference4.partial(&uf, 0, &k);
            errs.push(rel_diff(&fd, &exact));
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 3.5, "observed order {order}, errors {errs:?}");
    }

    #[test]
    fn coefficient_derivative_stays_real() {
        let f = ScalarField::from_real_fn(g(6), |x| (3.0 * x[0]).cos() + x[1].sin());
        let d = Spectral.coefficient_partial(&f, 0);
        assert!(d.max_imag() < 1e-14);
    }
}
