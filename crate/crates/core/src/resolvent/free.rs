//! The free multiplier `((k+n)·(k+n) − ε₀μ₀ζ)^{-1}` with complex momentum.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, State8};

/// Guard on `|denominator|` below which the multiplier is treated as singular.
pub const SINGULAR_GUARD: f64 = 1e-12;

/// Complex Bloch momentum in reciprocal-cell units.
pub type ComplexMomentum = [C64; 3];

pub fn real_momentum(k: [f64; 3]) -> ComplexMomentum {
    k.map(|x| C64::new(x, 0.0))
}

/// Bilinear square `(k+n)·(k+n)` in physical units, no conjugation.
fn symbol(grid: &Grid, k: &ComplexMomentum, n: [i64; 3]) -> C64 {
    (0..3).map(|a| (grid.reciprocal(a) * (k[a] + n[a] as f64)).powi(2)).sum()
}

/// `R₀ = (−Δ(k) − ε₀μ₀ζ)^{-1}` on the modes of a grid, applied to every
/// component of a state.
#[derive(Debug, Clone)]
pub struct FreeResolvent {
    grid: Grid,
    k: ComplexMomentum,
    shift: C64,
    multiplier: Vec<C64>,
}

impl FreeResolvent {
    /// `shift` is the full product `ε₀μ₀ζ`.
    pub fn new(grid: Grid, k: ComplexMomentum, shift: C64) -> Result<Self> {
        let mut multiplier = Vec::with_capacity(grid.len());
        for idx in 0..grid.len() {
            let n = grid.modes_of(idx);
            let d = symbol(&grid, &k, n) - shift;
            if d.norm() <= SINGULAR_GUARD {
                return Err(Error::SingularMultiplier { mode: n, value: d.norm() });
            }
            multiplier.push(d.inv());
        }
        Ok(Self { grid, k, shift, multiplier })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn momentum(&self) -> ComplexMomentum {
        self.k
    }

    pub fn shift(&self) -> C64 {
        self.shift
    }

    /// Largest multiplier modulus over the retained modes.
    pub fn sup_norm(&self) -> f64 {
        self.multiplier.iter().map(|m| m.norm()).fold(0.0, f64::max)
    }

    pub fn apply_scalar(&self, f: &ScalarField) -> ScalarField {
        let spec = f.spectrum().iter().zip(&self.multiplier).map(|(a, m)| a * m).collect();
        ScalarField::from_spectrum(self.grid, spec).expect("sizes agree")
    }

    pub fn apply(&self, u: &State8) -> Result<State8> {
        u.grid().check_same(&self.grid)?;
        Ok(u.map(|f| self.apply_scalar(f)))
    }
}

/// `R₀(k, λ)u` with the multiplier `((k+n)·(k+n) − ε₀μ₀λ)^{-1}`.
pub fn r0_apply(eps0_mu0: f64, k: ComplexMomentum, lambda: C64, u: &State8) -> Result<State8> {
    FreeResolvent::new(*u.grid(), k, eps0_mu0 * lambda)?.apply(u)
}

/// `k(τ) = k̃ + iτ e_axis`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMomentumRay {
    pub base: [f64; 3],
    #[serde(default)]
    pub axis: usize,
    pub taus: Vec<f64>,
}

impl ComplexMomentumRay {
    pub fn new(base: [f64; 3], axis: usize, taus: Vec<f64>) -> Result<Self> {
        let r = Self { base, axis, taus };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.axis > 2 {
            return Err(Error::InvalidInput(format!("ray axis {} out of range", self.axis)));
        }
        if self.taus.is_empty() || self.taus.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::InvalidInput("ray samples must be positive and finite".into()));
        }
        if self.taus.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("ray samples must increase".into()));
        }
        if self.base.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite ray base".into()));
        }
        Ok(())
    }

    pub fn at(&self, tau: f64) -> ComplexMomentum {
        let mut k = real_momentum(self.base);
        k[self.axis] += C64::new(0.0, tau);
        k
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub tau: f64,
    pub norm: f64,
    pub tau_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub shift: [f64; 2],
    pub grid: [usize; 3],
    pub rows: Vec<DecayRow>,
    /// `max τ·norm / min τ·norm`.
    pub spread: f64,
    /// `sup τ·norm ≤ 2 min` over the three largest τ.
    pub bounded: bool,
    pub warnings: Vec<String>,
}

/// Multiplier sup-norm along a complex-momentum ray. Only the mode set of
/// `grid` is used; no fields are allocated.
pub fn r0_norm_decay_check(ray: &ComplexMomentumRay, eps0_mu0: f64, lambda: C64, grid: &Grid) -> Result<DecayReport> {
    ray.validate()?;
    let shift = eps0_mu0 * lambda;
    let n = grid.n();
    let modes: [Vec<i64>; 3] = std::array::from_fn(|a| (0..n[a]).map(|i| grid.mode(a, i)).collect());
    let mut warnings = Vec::new();
    let tau_max = ray.taus.last().copied().unwrap_or(0.0);
    for a in (0..3).filter(|&a| a != ray.axis) {
        let reach = grid.reciprocal(a) * (n[a] / 2) as f64;
        if reach < tau_max {
            warnings.push(format!("axis {a} reaches |ξ| = {reach:.3} < τ_max = {tau_max}; the norm is truncated"));
        }
    }
    let rows: Vec<DecayRow> = crate::par::map_slice(&ray.taus, |_, &tau| {
        let k = ray.at(tau);
        let term = |a: usize, m: i64| (grid.reciprocal(a) * (k[a] + m as f64)).powi(2);
        let t: [Vec<C64>; 3] = std::array::from_fn(|a| modes[a].iter().map(|&m| term(a, m)).collect());
        let mut best = f64::INFINITY;
        for x in &t[0] {
            for y in &t[1] {
                for z in &t[2] {
                    best = best.min((x + y + z - shift).norm());
                }
            }
        }
        let norm = 1.0 / best;
        DecayRow { tau, norm, tau_norm: tau * norm }
    });
    let vals: Vec<f64> = rows.iter().map(|r| r.tau_norm).collect();
    let max = vals.iter().copied().fold(0.0, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let tail = vals.iter().rev().take(3).copied().fold(f64::INFINITY, f64::min);
    Ok(DecayReport {
        shift: [shift.re, shift.im],
        grid: n,
        spread: max / min,
        bounded: max.is_finite() && max <= 2.0 * tail,
        rows,
        warnings,
    })
}

/// Which power of `λ₀` enters the lattice condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaPower {
    #[default]
    Linear,
    Squared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeCondition {
    pub satisfied: bool,
    pub min_distance: f64,
    pub worst_mode: [i64; 3],
    pub margin: f64,
    pub power: LambdaPower,
}

/// `min_{|n|_∞ ≤ cutoff} |(k₀+n)² − ε₀μ₀λ₀^p|` in reciprocal-cell units.
pub fn lattice_condition(
    k0: ComplexMomentum,
    lambda0: C64,
    eps0: f64,
    mu0: f64,
    cutoff: usize,
    power: LambdaPower,
    margin: f64,
) -> LatticeCondition {
    let target = eps0 * mu0 * if power == LambdaPower::Squared { lambda0 * lambda0 } else { lambda0 };
    let c = cutoff as i64;
    let mut best = (f64::INFINITY, [0i64; 3]);
    for a in -c..=c {
        for b in -c..=c {
            for d in -c..=c {
                let n = [a, b, d];
                let s: C64 = (0..3).map(|i| (k0[i] + n[i] as f64).powi(2)).sum();
                let dist = (s - target).norm();
                // Ties go to the shorter lattice vector.
                let shorter = n.iter().map(|x| x * x).sum::<i64>() < best.1.iter().map(|x| x * x).sum::<i64>();
                if dist < best.0 || (dist == best.0 && shorter) {
                    best = (dist, n);
                }
            }
        }
    }
    LatticeCondition { satisfied: best.0 > margin, min_distance: best.0, worst_mode: best.1, margin, power }
}
