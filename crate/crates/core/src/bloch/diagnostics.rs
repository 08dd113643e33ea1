use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{assemble_fiber, check_cap, BandTable};
use crate::error::{Error, Result};
use crate::field::{BlochMomentum, Spectral, State8};
use crate::linalg::{densify, hermitian_eigen, singular_values};
use crate::operators::{CoefficientSet, Ops};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandVariation {
    pub band: usize,
    pub min: f64,
    pub max: f64,
    pub variation: f64,
    pub flat: bool,
}

/// Variation of each sorted band across the samples. Only bands inside the
/// window at every sample are assessed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonconstancyReport {
    pub delta: f64,
    pub samples: usize,
    pub bands: Vec<BandVariation>,
    pub flagged: Vec<usize>,
    pub verdict: String,
}

pub fn nonconstancy_report(bt: &BandTable, delta: f64) -> Result<NonconstancyReport> {
    if bt.samples.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: bt.samples.len() });
    }
    let lo = bt.samples.iter().map(|s| s.first_index).max().unwrap_or(0);
    let hi = bt.samples.iter().map(|s| s.first_index + s.values.len()).min().unwrap_or(0);
    let bands: Vec<BandVariation> = (lo..hi)
        .map(|band| {
            let vals = bt.samples.iter().map(|s| s.values[band - s.first_index]);
            let (min, max) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            let variation = max - min;
            BandVariation { band, min, max, variation, flat: variation < delta }
        })
        .collect();
    let flagged: Vec<usize> = bands.iter().filter(|b| b.flat).map(|b| b.band).collect();
    let verdict = if flagged.is_empty() {
        format!("evidence only: none of {} sorted bands is flat at δ = {delta:e}", bands.len())
    } else {
        format!("evidence only: {} of {} sorted bands vary by less than δ = {delta:e}", flagged.len(), bands.len())
    };
    Ok(NonconstancyReport { delta, samples: bt.samples.len(), bands, flagged, verdict })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityProbe {
    pub lambda: [f64; 2],
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// `σ_min / σ_max`.
    pub scaled: f64,
}

/// Smallest singular value of the dense `−Δ₈ + 𝓥 − εμ𝓙⁻¹(λ𝓐+λ²)𝓙 + 𝓕`
/// for each `λ`.
pub fn eq13_singularity_crosscheck(c: &CoefficientSet, k: BlochMomentum, lambdas: &[C64], cap: usize) -> Result<Vec<SingularityProbe>> {
    let grid = *c.grid();
    let dim = check_cap(&grid, cap)?;
    let ops = Ops::new(&Spectral, c, k);
    lambdas
        .iter()
        .map(|&lam| {
            let m = densify(dim, |x| {
                let u = State8::from_flat(grid, x).expect("sizes agree");
                ops.eq13_rhs(&u, lam).to_flat()
            });
            let s = singular_values(&m)?;
            let (sigma_max, sigma_min) = (s[0], *s.last().expect("nonempty"));
            Ok(SingularityProbe { lambda: [lam.re, lam.im], sigma_min, sigma_max, scaled: sigma_min / sigma_max.max(1e-300) })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenpairCheck {
    pub lambda: f64,
    /// `‖S(λ)𝓙⁻¹v‖ / ((‖Δ₈𝓙⁻¹v‖ + (1 + λ²)‖𝓙⁻¹v‖)`, `v` the eigenvector.
    pub relative: f64,
}

/// Applies the λ-shifted right-hand side to `𝓙⁻¹v` for the eigenpairs with
/// the `count` smallest `|λ|`.
pub fn eigenpair_consistency(c: &CoefficientSet, k: BlochMomentum, count: usize, cap: usize) -> Result<Vec<EigenpairCheck>> {
    let grid = *c.grid();
    let f = assemble_fiber(c, k, cap)?;
    let (vals, vecs) = hermitian_eigen(&f.matrix)?;
    let w = c.flat_weights();
    let ops = Ops::new(&Spectral, c, k);
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].abs().total_cmp(&vals[b].abs()));
    order
        .into_iter()
        .take(count)
        .map(|j| {
            let v: Vec<C64> = (0..vals.len()).map(|i| vecs[(i, j)] / w[i].sqrt()).collect();
            let u = ops.j_inv(&State8::from_flat(grid, &v)?);
            let lam = C64::new(vals[j], 0.0);
            let r = ops.eq13_rhs(&u, lam).l2_norm();
            let scale = ops.delta8(&u).l2_norm() + (1.0 + vals[j] * vals[j]) * u.l2_norm();
            Ok(EigenpairCheck { lambda: vals[j], relative: r / scale })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandConvergence {
    /// Per sample, max `|λ_coarse − λ_fine|` over the aligned interior values.
    pub per_sample: Vec<f64>,
    pub max_deviation: f64,
    pub compared_values: usize,
}

/// Aligns the coarse values with `|λ| < window − margin` against the fine
/// table by the index shift that minimizes the largest deviation.
pub fn compare_band_tables(coarse: &BandTable, fine: &BandTable, margin: f64) -> Result<BandConvergence> {
    if coarse.samples.len() != fine.samples.len() {
        return Err(Error::InvalidInput("band tables sample different k-points".into()));
    }
    let limit = coarse.window - margin;
    let mut per_sample = Vec::new();
    let mut compared = 0;
    for (a, b) in coarse.samples.iter().zip(&fine.samples) {
        if a.k.iter().zip(&b.k).any(|(x, y)| (x - y).abs() > 1e-12) {
            return Err(Error::InvalidInput("band tables sample different k-points".into()));
        }
        let inner: Vec<f64> = a.values.iter().copied().filter(|v| v.abs() < limit).collect();
        if inner.is_empty() {
            per_sample.push(0.0);
            continue;
        }
        let len = inner.len();
        let best = (0..b.values.len().saturating_sub(len - 1))
            .map(|off| (0..len).map(|i| (inner[i] - b.values[off + i]).abs()).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min);
        compared += len;
        per_sample.push(best);
    }
    let max_deviation = per_sample.iter().copied().fold(0.0, f64::max);
    Ok(BandConvergence { per_sample, max_deviation, compared_values: compared })
}
