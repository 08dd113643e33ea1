use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use super::fft;
use super::grid::Grid;
use crate::error::{Error, Result};

/// Complex samples of a scalar function on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    data: Vec<C64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, data: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    pub fn constant(grid: Grid, value: C64) -> Self {
        Self { grid, data: vec![value; grid.len()] }
    }

    pub fn from_samples(grid: Grid, data: Vec<C64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} samples, got {}",
                grid.len(),
                data.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn from_real(grid: Grid, data: &[f64]) -> Result<Self> {
        Self::from_samples(grid, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Samples a function of the physical coordinates.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> C64) -> Self {
        let data = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self { grid, data }
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        Self::from_fn(grid, |x| C64::new(f(x), 0.0))
    }

    /// Builds a field from normalized Fourier coefficients `f = Σ c_n e^{i n·x}`.
    pub fn from_spectrum(grid: Grid, mut spec: Vec<C64>) -> Result<Self> {
        if spec.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                spec.len()
            )));
        }
        fft::inverse(&grid, &mut spec);
        Ok(Self { grid, data: spec })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    /// Normalized Fourier coefficients.
    pub fn spectrum(&self) -> Vec<C64> {
        let mut s = self.data.clone();
        fft::forward(&self.grid, &mut s);
        s
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self { grid: self.grid, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        debug_assert_eq!(self.data.len(), other.data.len());
        Self {
            grid: self.grid,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|x| x * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|x| x * s)
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn axpy(&mut self, s: C64, other: &Self) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Sum of squared moduli of the samples.
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn min_real(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |m, z| m.min(z.re))
    }

    /// Mean value over the cell.
    pub fn mean(&self) -> C64 {
        self.data.iter().sum::<C64>() / self.data.len() as f64
    }

    /// Spectral interpolation onto another resolution of the same cell.
    ///
    /// Modes present on both grids are copied; the rest are zero-filled or
    /// dropped.
    pub fn resample(&self, target: &Grid) -> Result<Self> {
        if !self.grid.same_cell(target) {
            return Err(Error::GridMismatch { left: self.grid.n(), right: target.n() });
        }
        if self.grid.n() == target.n() {
            return Ok(Self { grid: *target, data: self.data.clone() });
        }
        let src = self.spectrum();
        let mut dst = vec![C64::new(0.0, 0.0); target.len()];
        let sn = self.grid.n();
        for i0 in 0..sn[0] {
            let Some(j0) = target.slot(0, self.grid.mode(0, i0)) else { continue };
            for i1 in 0..sn[1] {
                let Some(j1) = target.slot(1, self.grid.mode(1, i1)) else { continue };
                for i2 in 0..sn[2] {
                    let Some(j2) = target.slot(2, self.grid.mode(2, i2)) else { continue };
                    dst[target.index([j0, j1, j2])] = src[self.grid.index([i0, i1, i2])];
                }
            }
        }
        Self::from_spectrum(*target, dst)
    }

    pub(crate) fn check_grid(&self, other: &Self) -> Result<()> {
        self.grid.check_same(&other.grid)
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: Self) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: Self) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.map(|a| -a)
    }
}

/// Collocated (sample-wise) product.
impl Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: Self) -> ScalarField {
        self.zip_map(rhs, |a, b| a * b)
    }
}

/// Three scalar components on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub c: [ScalarField; 3],
}

impl VectorField {
    pub fn new(c: [ScalarField; 3]) -> Result<Self> {
        c[0].check_grid(&c[1])?;
        c[0].check_grid(&c[2])?;
        Ok(Self { c })
    }

    pub(crate) fn from_parts(c: [ScalarField; 3]) -> Self {
        Self { c }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { c: std::array::from_fn(|_| ScalarField::zeros(grid)) }
    }

    pub fn constant(grid: Grid, v: [C64; 3]) -> Self {
        Self { c: v.map(|x| ScalarField::constant(grid, x)) }
    }

    pub fn grid(&self) -> &Grid {
        self.c[0].grid()
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self { c: [f(&self.c[0]), f(&self.c[1]), f(&self.c[2])] }
    }

    pub fn zip_map(&self, o: &Self, f: impl Fn(&ScalarField, &ScalarField) -> ScalarField) -> Self {
        Self { c: [f(&self.c[0], &o.c[0]), f(&self.c[1], &o.c[1]), f(&self.c[2], &o.c[2])] }
    }

    /// Multiplies every component by a scalar field (collocated).
    pub fn times(&self, s: &ScalarField) -> Self {
        self.map(|x| x * s)
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|x| x.scale(s))
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|x| x.scale_real(s))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c.iter().map(ScalarField::norm_sqr).sum()
    }

    pub fn resample(&self, target: &Grid) -> Result<Self> {
        Ok(Self {
            c: [self.c[0].resample(target)?, self.c[1].resample(target)?, self.c[2].resample(target)?],
        })
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: Self) -> VectorField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: Self) -> VectorField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Neg for &VectorField {
    type Output = VectorField;
    fn neg(self) -> VectorField {
        self.map(|a| -a)
    }
}

/// 3×3 matrix of scalar fields, `m[i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub m: [[ScalarField; 3]; 3],
}

impl Tensor3 {
    /// Matrix-vector product, collocated.
    pub fn apply(&self, v: &VectorField) -> VectorField {
        VectorField::from_parts(std::array::from_fn(|i| {
            let mut acc = &self.m[i][0] * &v.c[0];
            acc.add_assign(&(&self.m[i][1] * &v.c[1]));
            acc.add_assign(&(&self.m[i][2] * &v.c[2]));
            acc
        }))
    }

    pub fn transpose(&self) -> Self {
        Self { m: std::array::from_fn(|i| std::array::from_fn(|j| self.m[j][i].clone())) }
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0, |a, f| a.max(f.max_abs()))
    }
}

/// The 3+3+1+1 block state `(E, H, φ, ψ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct State8 {
    pub e: VectorField,
    pub h: VectorField,
    pub phi: ScalarField,
    pub psi: ScalarField,
}

impl State8 {
    pub fn new(e: VectorField, h: VectorField, phi: ScalarField, psi: ScalarField) -> Result<Self> {
        let g = *e.grid();
        h.grid().check_same(&g)?;
        phi.grid().check_same(&g)?;
        psi.grid().check_same(&g)?;
        Ok(Self { e, h, phi, psi })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            e: VectorField::zeros(grid),
            h: VectorField::zeros(grid),
            phi: ScalarField::zeros(grid),
            psi: ScalarField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.e.grid()
    }

    /// Components in the order `Ex, Ey, Ez, Hx, Hy, Hz, φ, ψ`.
    pub fn components(&self) -> [&ScalarField; 8] {
        [
            &self.e.c[0], &self.e.c[1], &self.e.c[2], &self.h.c[0], &self.h.c[1], &self.h.c[2], &self.phi,
            &self.psi,
        ]
    }

    pub fn components_mut(&mut self) -> [&mut ScalarField; 8] {
        let [e0, e1, e2] = &mut self.e.c;
        let [h0, h1, h2] = &mut self.h.c;
        [e0, e1, e2, h0, h1, h2, &mut self.phi, &mut self.psi]
    }

    pub fn from_components(c: [ScalarField; 8]) -> Self {
        let [e0, e1, e2, h0, h1, h2, phi, psi] = c;
        Self {
            e: VectorField::from_parts([e0, e1, e2]),
            h: VectorField::from_parts([h0, h1, h2]),
            phi,
            psi,
        }
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self::from_components(self.components().map(f))
    }

    pub fn zip_map(&self, o: &Self, f: impl Fn(&ScalarField, &ScalarField) -> ScalarField) -> Self {
        let a = self.components();
        let b = o.components();
        Self::from_components(std::array::from_fn(|i| f(a[i], b[i])))
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|x| x.scale(s))
    }

    /// Multiplies every component by a scalar field (collocated).
    pub fn times(&self, s: &ScalarField) -> Self {
        self.map(|x| x * s)
    }

    pub fn axpy(&mut self, s: C64, other: &Self) {
        for (a, b) in self.components_mut().into_iter().zip(other.components()) {
            a.axpy(s, b);
        }
    }

    /// Unweighted discrete ℓ² norm of the samples.
    pub fn l2_norm(&self) -> f64 {
        self.components().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.components().iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }

    /// Flat component-major vector of length `8 * grid.len()`.
    pub fn to_flat(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(8 * self.grid().len());
        for c in self.components() {
            out.extend_from_slice(c.data());
        }
        out
    }

    pub fn from_flat(grid: Grid, flat: &[C64]) -> Result<Self> {
        let n = grid.len();
        if flat.len() != 8 * n {
            return Err(Error::InvalidInput(format!("expected {} entries, got {}", 8 * n, flat.len())));
        }
        Ok(Self::from_components(std::array::from_fn(|i| ScalarField {
            grid,
            data: flat[i * n..(i + 1) * n].to_vec(),
        })))
    }

    pub fn resample(&self, target: &Grid) -> Result<Self> {
        let c = self.components();
        let mut out = Vec::with_capacity(8);
        for f in c {
            out.push(f.resample(target)?);
        }
        Ok(Self::from_components(out.try_into().expect("eight components")))
    }

    /// Only the `(E, H)` blocks, scalars zeroed.
    pub fn eh_part(&self) -> Self {
        let g = *self.grid();
        Self { e: self.e.clone(), h: self.h.clone(), phi: ScalarField::zeros(g), psi: ScalarField::zeros(g) }
    }
}

impl Add for &State8 {
    type Output = State8;
    fn add(self, rhs: Self) -> State8 {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &State8 {
    type Output = State8;
    fn sub(self, rhs: Self) -> State8 {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Neg for &State8 {
    type Output = State8;
    fn neg(self) -> State8 {
        self.map(|a| -a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_roundtrip() {
        let g = Grid::cubic(4).unwrap();
        let flat: Vec<C64> = (0..8 * g.len()).map(|i| C64::new(i as f64, -(i as f64))).collect();
        let s = State8::from_flat(g, &flat).unwrap();
        assert_eq!(s.to_flat(), flat);
        assert_eq!(s.psi.data()[0], flat[7 * g.len()]);
    }

    #[test]
    fn resample_preserves_bandlimited_function() {
        let g = Grid::cubic(8).unwrap();
        let f = ScalarField::from_real_fn(g, |x| x[0].sin() + (2.0 * x[1] - x[2]).cos());
        let fine = f.resample(&g.refined(2)).unwrap();
        let exact = ScalarField::from_real_fn(g.refined(2), |x| x[0].sin() + (2.0 * x[1] - x[2]).cos());
        assert!((&fine - &exact).max_abs() < 1e-13);
        let back = fine.resample(&g).unwrap();
        assert!((&back - &f).max_abs() < 1e-13);
    }
}
