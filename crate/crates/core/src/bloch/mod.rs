//! Fiber operators `𝓜(k)` on the periodic cell: dense assembly, band
//! tables, the constant-coefficient symbol and spectral diagnostics.

mod diagnostics;

use std::fmt::Write as _;

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{BlochMomentum, Grid, Spectral, State8};
use crate::linalg::{densify, hermitian_eigenvalues, hermitian_part};
use crate::operators::{CoefficientSet, Ops};
use crate::par;

pub use diagnostics::{
    compare_band_tables, eigenpair_consistency, eq13_singularity_crosscheck, nonconstancy_report, BandConvergence,
    BandVariation, EigenpairCheck, NonconstancyReport, SingularityProbe,
};

/// Largest admissible dense dimension `8 N₁N₂N₃` by default.
pub const DEFAULT_MEMORY_CAP: usize = 6144;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochPath {
    pub points: Vec<[f64; 3]>,
    /// `(sample index, label)` for named points.
    pub labels: Vec<(usize, String)>,
}

impl BlochPath {
    pub fn new(points: Vec<[f64; 3]>, labels: Vec<(usize, String)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("empty k-path".into()));
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite k-path entry".into()));
        }
        if labels.iter().any(|(i, _)| *i >= points.len()) {
            return Err(Error::InvalidInput("k-path label index out of range".into()));
        }
        Ok(Self { points, labels })
    }

    /// `samples` equally spaced points from `from` to `to`, both included.
    pub fn line(from: [f64; 3], to: [f64; 3], samples: usize) -> Result<Self> {
        let points = match samples {
            0 => Vec::new(),
            1 => vec![from],
            s => (0..s)
                .map(|i| {
                    let t = i as f64 / (s - 1) as f64;
                    [0, 1, 2].map(|a| from[a] + t * (to[a] - from[a]))
                })
                .collect(),
        };
        Self::new(points, Vec::new())
    }

    /// `Γ = 0` to `X = (½, 0, 0)`.
    pub fn gamma_x(samples: usize) -> Result<Self> {
        let mut p = Self::line([0.0; 3], [0.5, 0.0, 0.0], samples)?;
        p.labels = vec![(0, "G".into())];
        if samples > 1 {
            p.labels.push((samples - 1, "X".into()));
        }
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Dense `W^{1/2} 𝓜(k) W^{-1/2}` with `W = diag(ε,ε,ε,μ,μ,μ,ε,μ)`,
/// Hermitian in the plain Euclidean product.
pub struct FiberMatrix {
    pub k: BlochMomentum,
    pub matrix: Mat<C64>,
    /// Max entrywise `|A − A^H|` before symmetrization.
    pub hermitian_defect: f64,
}

fn check_cap(grid: &Grid, cap: usize) -> Result<usize> {
    let dim = 8 * grid.len();
    if dim > cap {
        return Err(Error::MemoryCap { size: dim, cap });
    }
    Ok(dim)
}

pub fn assemble_fiber(c: &CoefficientSet, k: BlochMomentum, cap: usize) -> Result<FiberMatrix> {
    let grid = *c.grid();
    let dim = check_cap(&grid, cap)?;
    let w = c.flat_weights();
    let (wh, wmh): (Vec<f64>, Vec<f64>) = w.iter().map(|x| (x.sqrt(), 1.0 / x.sqrt())).unzip();
    let ops = Ops::new(&Spectral, c, k);
    let raw = densify(dim, |x| {
        let y: Vec<C64> = x.iter().zip(&wmh).map(|(a, s)| a * s).collect();
        let u = State8::from_flat(grid, &y).expect("sizes agree");
        let mut out = ops.m_ext(&u).to_flat();
        out.iter_mut().zip(&wh).for_each(|(a, s)| *a *= s);
        out
    });
    let (hermitian_defect, matrix) = hermitian_part(&raw);
    Ok(FiberMatrix { k, matrix, hermitian_defect })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSample {
    pub k: [f64; 3],
    pub label: Option<String>,
    /// Position of the first in-window value in the full ascending spectrum.
    pub first_index: usize,
    /// Ascending eigenvalues with `|λ| ≤ window`.
    pub values: Vec<f64>,
    pub hermitian_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandTable {
    pub n: [usize; 3],
    pub window: f64,
    pub dimension: usize,
    pub coefficient_fingerprint: String,
    pub samples: Vec<BandSample>,
}

/// `2/√(ε₀μ₀)`.
pub fn default_window(c: &CoefficientSet) -> f64 {
    2.0 / c.eps0_mu0().sqrt()
}

fn band_sample(c: &CoefficientSet, k: [f64; 3], label: Option<String>, window: f64, cap: usize) -> Result<BandSample> {
    let f = assemble_fiber(c, BlochMomentum(k), cap)?;
    let all = hermitian_eigenvalues(&f.matrix)?;
    let first_index = all.iter().position(|&x| x >= -window).unwrap_or(all.len());
    let values = all[first_index..].iter().copied().take_while(|&x| x <= window).collect();
    Ok(BandSample { k, label, first_index, values, hermitian_defect: f.hermitian_defect })
}

/// Dense eigensolve per path point. Jobs run in parallel only while each
/// matrix stays small, since faer parallelizes large factorizations itself.
pub fn compute_bands(c: &CoefficientSet, path: &BlochPath, window: f64, cap: usize) -> Result<BandTable> {
    let dim = check_cap(c.grid(), cap)?;
    let label = |i: usize| path.labels.iter().find(|(j, _)| *j == i).map(|(_, l)| l.clone());
    let job = |i: usize| band_sample(c, path.points[i], label(i), window, cap);
    let samples: Vec<Result<BandSample>> = if dim <= 2048 {
        par::map_range(path.len(), job)
    } else {
        (0..path.len()).map(job).collect()
    };
    Ok(BandTable {
        n: c.grid().n(),
        window,
        dimension: dim,
        coefficient_fingerprint: c.fingerprint(),
        samples: samples.into_iter().collect::<Result<_>>()?,
    })
}

impl BandTable {
    /// `k_index,k1,k2,k3,band,lambda`; `band` is the position in the full
    /// ascending spectrum.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k_index,k1,k2,k3,band,lambda\n");
        for (i, smp) in self.samples.iter().enumerate() {
            for (j, v) in smp.values.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{i},{:.16e},{:.16e},{:.16e},{},{v:.16e}",
                    smp.k[0],
                    smp.k[1],
                    smp.k[2],
                    smp.first_index + j
                );
            }
        }
        s
    }

    pub fn max_hermitian_defect(&self) -> f64 {
        self.samples.iter().map(|s| s.hermitian_defect).fold(0.0, f64::max)
    }
}

/// `{±|n+k|/√(ε₀μ₀) : |n|_∞ ≤ cutoff}`, each value four times, ascending.
pub fn free_symbol_bands(eps0: f64, mu0: f64, k: [f64; 3], cutoff: usize) -> Vec<f64> {
    let c = cutoff as i64;
    let modes = (-c..=c).flat_map(|a| (-c..=c).flat_map(move |b| (-c..=c).map(move |d| [a, b, d])));
    free_values(eps0 * mu0, k, modes)
}

/// Free bands over exactly the Fourier modes carried by `grid`.
pub fn free_grid_bands(grid: &Grid, eps0: f64, mu0: f64, k: [f64; 3]) -> Vec<f64> {
    free_values(eps0 * mu0, k, (0..grid.len()).map(|idx| grid.modes_of(idx)))
}

fn free_values(epsmu: f64, k: [f64; 3], modes: impl Iterator<Item = [i64; 3]>) -> Vec<f64> {
    let s = epsmu.sqrt();
    let mut out: Vec<f64> = modes
        .flat_map(|n| {
            let r = (0..3).map(|a| (n[a] as f64 + k[a]).powi(2)).sum::<f64>().sqrt() / s;
            [r, r, r, r, -r, -r, -r, -r]
        })
        .collect();
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

/// Constant-coefficient symbol of `𝓜` at `ξ` (derivatives replaced by `iξ`),
/// acting on `(E, H, φ, ψ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolMatrix {
    pub eps: f64,
    pub mu: f64,
    pub xi: [f64; 3],
    pub m: [[C64; 8]; 8],
}

impl SymbolMatrix {
    pub fn new(eps: f64, mu: f64, xi: [f64; 3]) -> Self {
        let mut m = [[C64::new(0.0, 0.0); 8]; 8];
        let r = |x: f64| C64::new(x, 0.0);
        // ξ × v as a matrix: rows a, columns b.
        let cross = [[0.0, -xi[2], xi[1]], [xi[2], 0.0, -xi[0]], [-xi[1], xi[0], 0.0]];
        for a in 0..3 {
            for b in 0..3 {
                m[a][3 + b] = r(-cross[a][b] / eps);
                m[3 + a][b] = r(cross[a][b] / mu);
            }
            m[a][7] = r(-xi[a] / eps);
            m[3 + a][6] = r(-xi[a] / mu);
            m[6][3 + a] = r(-xi[a] / eps);
            m[7][a] = r(-xi[a] / mu);
        }
        Self { eps, mu, xi, m }
    }

    pub fn squared(&self) -> [[C64; 8]; 8] {
        let mut out = [[C64::new(0.0, 0.0); 8]; 8];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (0..8).map(|l| self.m[i][l] * self.m[l][j]).sum();
            }
        }
        out
    }

    /// Max entrywise deviation of the square from `|ξ|²/(εμ) Id`.
    pub fn square_defect(&self) -> f64 {
        let s = self.xi.iter().map(|x| x * x).sum::<f64>() / (self.eps * self.mu);
        let sq = self.squared();
        let mut d: f64 = 0.0;
        for (i, row) in sq.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                let want = if i == j { s } else { 0.0 };
                d = d.max((x - want).norm());
            }
        }
        d
    }

    /// Eigenvalues of the weighted symmetrization, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let w = [self.eps, self.eps, self.eps, self.mu, self.mu, self.mu, self.eps, self.mu];
        let a = Mat::from_fn(8, 8, |i, j| self.m[i][j] * (w[i] / w[j]).sqrt());
        hermitian_eigenvalues(&a)
    }
}

#[cfg(test)]
mod tests;
