use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform sampling of a periodic box.
///
/// Samples sit at `x_a = i * L_a / n_a`; the Fourier mode of index `i` is the
/// integer `m = i` for `i < n_a / 2` and `m = i - n_a` otherwise, so the
/// Nyquist slot carries `m = -n_a / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: [usize; 3],
    lengths: [f64; 3],
    dealias: (u32, u32),
}

impl Grid {
    pub const DEFAULT_DEALIAS: (u32, u32) = (3, 2);

    /// Cubic grid on the `(0, 2π)^3` cell.
    pub fn cubic(n: usize) -> Result<Self> {
        Self::new([n, n, n], [2.0 * PI; 3], Self::DEFAULT_DEALIAS)
    }

    pub fn new(n: [usize; 3], lengths: [f64; 3], dealias: (u32, u32)) -> Result<Self> {
        for (axis, &na) in n.iter().enumerate() {
            if na < 4 || na % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: point count {na} must be even and at least 4"
                )));
            }
        }
        for (axis, &l) in lengths.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("axis {axis}: cell length {l} must be positive")));
            }
        }
        let (num, den) = dealias;
        if den == 0 || num < den {
            return Err(Error::InvalidGrid(format!("dealias factor {num}/{den} must be a ratio >= 1")));
        }
        Ok(Self { n, lengths, dealias })
    }

    pub fn with_dealias(self, num: u32, den: u32) -> Result<Self> {
        Self::new(self.n, self.lengths, (num, den))
    }

    pub fn with_lengths(self, lengths: [f64; 3]) -> Result<Self> {
        Self::new(self.n, lengths, self.dealias)
    }

    pub fn n(&self) -> [usize; 3] {
        self.n
    }

    pub fn lengths(&self) -> [f64; 3] {
        self.lengths
    }

    pub fn dealias(&self) -> (u32, u32) {
        self.dealias
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Smallest per-axis point count.
    pub fn min_points(&self) -> usize {
        *self.n.iter().min().unwrap()
    }

    /// Largest admissible trial bandlimit, `floor(min n / 3)`.
    pub fn max_bandlimit(&self) -> usize {
        self.min_points() / 3
    }

    /// Grid enlarged by the dealias factor (rounded up to even counts).
    pub fn padded(&self) -> Grid {
        let (num, den) = self.dealias;
        self.resized(|na| {
            let m = (na * num as usize).div_ceil(den as usize);
            m + m % 2
        })
    }

    /// Grid enlarged by a rational factor, same cell.
    pub fn oversampled(&self, num: u32, den: u32) -> Grid {
        self.resized(|na| {
            let m = (na * num as usize).div_ceil(den.max(1) as usize);
            (m + m % 2).max(na)
        })
    }

    /// Grid refined by an integer factor, same cell.
    pub fn refined(&self, factor: usize) -> Grid {
        self.resized(|na| na * factor.max(1))
    }

    fn resized(&self, f: impl Fn(usize) -> usize) -> Grid {
        Grid {
            n: [f(self.n[0]), f(self.n[1]), f(self.n[2])],
            lengths: self.lengths,
            dealias: self.dealias,
        }
    }

    /// Same cell geometry (lengths), resolution may differ.
    pub fn same_cell(&self, other: &Grid) -> bool {
        self.lengths
            .iter()
            .zip(other.lengths.iter())
            .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0))
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self.n == other.n && self.same_cell(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch { left: self.n, right: other.n })
        }
    }

    #[inline]
    pub fn index(&self, i: [usize; 3]) -> usize {
        (i[0] * self.n[1] + i[1]) * self.n[2] + i[2]
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let i2 = idx % self.n[2];
        let rest = idx / self.n[2];
        [rest / self.n[1], rest % self.n[1], i2]
    }

    /// Integer Fourier mode of slot `i` along `axis`.
    #[inline]
    pub fn mode(&self, axis: usize, i: usize) -> i64 {
        let n = self.n[axis];
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Slot of integer mode `m` along `axis`, if it is represented.
    pub fn slot(&self, axis: usize, m: i64) -> Option<usize> {
        let n = self.n[axis] as i64;
        if m >= -(n / 2) && m < n / 2 {
            Some(m.rem_euclid(n) as usize)
        } else {
            None
        }
    }

    pub fn modes_of(&self, idx: usize) -> [i64; 3] {
        let i = self.unravel(idx);
        [self.mode(0, i[0]), self.mode(1, i[1]), self.mode(2, i[2])]
    }

    /// Physical coordinates of sample `idx`.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let i = self.unravel(idx);
        [0, 1, 2].map(|a| i[a] as f64 * self.lengths[a] / self.n[a] as f64)
    }

    /// Reciprocal-lattice scale `2π / L_a`.
    #[inline]
    pub fn reciprocal(&self, axis: usize) -> f64 {
        2.0 * PI / self.lengths[axis]
    }

    /// Wavevector component `(2π/L_a)(m + k_a)` for slot `i`.
    #[inline]
    pub fn wavenumber(&self, axis: usize, i: usize, k: f64) -> f64 {
        self.reciprocal(axis) * (self.mode(axis, i) as f64 + k)
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.n[axis] as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_tiny_counts() {
        assert!(Grid::new([5, 8, 8], [1.0; 3], (3, 2)).is_err());
        assert!(Grid::new([2, 8, 8], [1.0; 3], (3, 2)).is_err());
        assert!(Grid::new([8, 8, 8], [0.0, 1.0, 1.0], (3, 2)).is_err());
        assert!(Grid::new([8, 8, 8], [1.0; 3], (1, 2)).is_err());
    }

    #[test]
    fn fft_mode_convention() {
        let g = Grid::cubic(6).unwrap();
        let modes: Vec<i64> = (0..6).map(|i| g.mode(0, i)).collect();
        assert_eq!(modes, vec![0, 1, 2, -3, -2, -1]);
        assert_eq!(g.slot(0, -3), Some(3));
        assert_eq!(g.slot(0, 3), None);
    }

    #[test]
    fn padding_rounds_to_even() {
        let g = Grid::cubic(6).unwrap();
        assert_eq!(g.padded().n(), [10, 10, 10]);
        assert_eq!(Grid::cubic(16).unwrap().padded().n(), [24, 24, 24]);
        assert_eq!(Grid::cubic(16).unwrap().oversampled(2, 1).n(), [32, 32, 32]);
    }

    #[test]
    fn index_roundtrip() {
        let g = Grid::new([4, 6, 8], [1.0, 2.0, 3.0], (3, 2)).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.index(g.unravel(idx)), idx);
        }
    }
}
