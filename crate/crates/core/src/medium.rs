//! Analytic coefficient profiles and named presets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{Calculus, Grid, ScalarField};
use crate::operators::CoefficientSet;

/// One cosine term `amp · cos(n·x̂ + phase)` with `x̂_a = 2π x_a / L_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub n: [i32; 3],
    pub amp: f64,
    #[serde(default)]
    pub phase: f64,
}

impl TrigTerm {
    pub fn new(n: [i32; 3], amp: f64, phase: f64) -> Self {
        Self { n, amp, phase }
    }

    fn eval(&self, xh: [f64; 3]) -> f64 {
        let arg: f64 = (0..3).map(|a| self.n[a] as f64 * xh[a]).sum::<f64>() + self.phase;
        self.amp * arg.cos()
    }
}

/// Smooth periodic scalar profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    /// `mean + Σ terms`.
    Trig { mean: f64, terms: Vec<TrigTerm> },
    /// `scale · exp(Σ terms)`.
    ExpTrig { scale: f64, terms: Vec<TrigTerm> },
    /// `background + amplitude · exp(−d²/(2 width²))` with the periodic
    /// distance `d_a = (L_a/π) sin(π (x_a − c_a) / L_a)`.
    Bump { background: f64, amplitude: f64, center: [f64; 3], width: f64 },
}

impl Profile {
    pub fn eval(&self, x: [f64; 3], lengths: [f64; 3]) -> f64 {
        let xh = [0, 1, 2].map(|a| 2.0 * PI * x[a] / lengths[a]);
        match self {
            Profile::Constant { value } => *value,
            Profile::Trig { mean, terms } => mean + terms.iter().map(|t| t.eval(xh)).sum::<f64>(),
            Profile::ExpTrig { scale, terms } => scale * terms.iter().map(|t| t.eval(xh)).sum::<f64>().exp(),
            Profile::Bump { background, amplitude, center, width } => {
                let d2: f64 = (0..3)
                    .map(|a| {
                        let l = lengths[a];
                        (l / PI * (PI * (x[a] - center[a]) / l).sin()).powi(2)
                    })
                    .sum();
                background + amplitude * (-d2 / (2.0 * width * width)).exp()
            }
        }
    }

    pub fn sample(&self, grid: &Grid) -> ScalarField {
        let l = grid.lengths();
        ScalarField::from_real_fn(*grid, |x| self.eval(x, l))
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Profile::Constant { .. } => true,
            Profile::Trig { terms, .. } | Profile::ExpTrig { terms, .. } => terms.iter().all(|t| t.amp == 0.0),
            Profile::Bump { amplitude, .. } => *amplitude == 0.0,
        }
    }
}

/// Coefficient pair with its asymptotic constants and positivity floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    pub eps: Profile,
    pub mu: Profile,
    pub eps0: f64,
    pub mu0: f64,
    pub c0: f64,
    pub lengths: [f64; 3],
    /// Set when `εμ` is constant by construction.
    #[serde(default)]
    pub constant_product: bool,
    /// Zero-padding ratio used for dealiased pointwise products on grids of
    /// this cell.
    #[serde(default = "default_dealias")]
    pub dealias: (u32, u32),
}

fn default_dealias() -> (u32, u32) {
    Grid::DEFAULT_DEALIAS
}

pub const DEFAULT_C0: f64 = 0.1;
pub const PRESETS: [&str; 5] = ["constant", "periodic-mild", "periodic-strong", "const-product", "supercell-bump"];

fn axis_terms(amp: f64, phases: [f64; 3]) -> Vec<TrigTerm> {
    (0..3)
        .map(|a| {
            let mut n = [0; 3];
            n[a] = 1;
            TrigTerm::new(n, amp / 3.0, phases[a])
        })
        .collect()
}

impl Medium {
    pub fn constant(eps: f64, mu: f64) -> Self {
        Self {
            eps: Profile::Constant { value: eps },
            mu: Profile::Constant { value: mu },
            eps0: eps,
            mu0: mu,
            c0: DEFAULT_C0,
            lengths: [2.0 * PI; 3],
            constant_product: true,
            dealias: Grid::DEFAULT_DEALIAS,
        }
    }

    /// Three axis-aligned modes in each coefficient around 1:
    /// `ε = 1 + (a/3)(cos x₁ + cos x₂ + cos x₃)`,
    /// `μ = 1 + (a/3)(sin x₁ + cos(x₂ + ½) + sin x₃)`.
    pub fn periodic(amp: f64) -> Self {
        let h = -PI / 2.0;
        Self {
            eps: Profile::Trig { mean: 1.0, terms: axis_terms(amp, [0.0, 0.0, 0.0]) },
            mu: Profile::Trig { mean: 1.0, terms: axis_terms(amp, [h, 0.5, h]) },
            eps0: 1.0,
            mu0: 1.0,
            c0: DEFAULT_C0,
            lengths: [2.0 * PI; 3],
            constant_product: amp == 0.0,
            dealias: Grid::DEFAULT_DEALIAS,
        }
    }

    /// `ε = e^{g}`, `μ = e^{−g}` so that `εμ ≡ 1`.
    pub fn const_product(amp: f64) -> Self {
        let terms = vec![
            TrigTerm::new([1, 0, 0], amp / 3.0, 0.0),
            TrigTerm::new([0, 1, 0], amp / 3.0, 0.3),
            TrigTerm::new([0, 0, 1], amp / 3.0, -PI / 2.0),
        ];
        let neg = terms.iter().map(|t| TrigTerm::new(t.n, -t.amp, t.phase)).collect();
        Self {
            eps: Profile::ExpTrig { scale: 1.0, terms },
            mu: Profile::ExpTrig { scale: 1.0, terms: neg },
            eps0: 1.0,
            mu0: 1.0,
            c0: DEFAULT_C0,
            lengths: [2.0 * PI; 3],
            constant_product: true,
            dealias: Grid::DEFAULT_DEALIAS,
        }
    }

    /// Localized bump in a cell elongated 4× along the first axis.
    pub fn supercell_bump(amp: f64) -> Self {
        let lengths = [8.0 * PI, 2.0 * PI, 2.0 * PI];
        let center = [4.0 * PI, PI, PI];
        Self {
            eps: Profile::Bump { background: 1.0, amplitude: amp, center, width: 1.5 },
            mu: Profile::Bump { background: 1.0, amplitude: 0.5 * amp, center, width: 2.0 },
            eps0: 1.0,
            mu0: 1.0,
            c0: DEFAULT_C0,
            lengths,
            constant_product: amp == 0.0,
            dealias: Grid::DEFAULT_DEALIAS,
        }
    }

    /// Named preset; `amplitude` overrides the preset's default strength.
    pub fn preset(name: &str, amplitude: Option<f64>) -> Result<Self> {
        let m = match name {
            "constant" => Self::constant(1.0, 1.0),
            "periodic-mild" => Self::periodic(amplitude.unwrap_or(0.3)),
            "periodic-strong" => Self::periodic(amplitude.unwrap_or(0.8)),
            "const-product" => Self::const_product(amplitude.unwrap_or(0.3)),
            "supercell-bump" => Self::supercell_bump(amplitude.unwrap_or(0.5)),
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown preset `{other}` (available: {})",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(m)
    }

    pub fn grid(&self, n: [usize; 3]) -> Result<Grid> {
        Grid::new(n, self.lengths, self.dealias)
    }

    pub fn is_constant(&self) -> bool {
        self.eps.is_constant() && self.mu.is_constant()
    }

    /// Checks the positivity floor on a 32³ sampling of the cell and the
    /// asymptotic constants.
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [("eps0", self.eps0), ("mu0", self.mu0), ("c0", self.c0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::NonPositive { what: what.into(), min: v, floor: 0.0 });
            }
        }
        let probe = Grid::new([32; 3], self.lengths, Grid::DEFAULT_DEALIAS)?;
        self.check_floor(&probe)
    }

    fn check_floor(&self, grid: &Grid) -> Result<()> {
        for (what, p) in [("eps", &self.eps), ("mu", &self.mu)] {
            let min = p.sample(grid).min_real();
            if !(min >= self.c0) {
                return Err(Error::NonPositive { what: what.into(), min, floor: self.c0 });
            }
        }
        Ok(())
    }

    /// Samples the profiles on `grid` and derives every coefficient field.
    pub fn coefficients(&self, calc: &dyn Calculus, grid: &Grid) -> Result<CoefficientSet> {
        if !grid.same_cell(&self.grid(grid.n())?) {
            return Err(Error::InvalidGrid(format!(
                "grid cell {:?} differs from medium cell {:?}",
                grid.lengths(),
                self.lengths
            )));
        }
        self.check_floor(grid)?;
        CoefficientSet::derive(calc, self.eps.sample(grid), self.mu.sample(grid), self.eps0, self.mu0, self.c0)
    }

    /// Stable hex digest of the medium definition.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("{self:?}").as_bytes());
        hex_digest(&h.finalize()[..8])
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for p in PRESETS {
            Medium::preset(p, None).unwrap().validate().unwrap();
        }
        assert!(Medium::preset("nope", None).is_err());
    }

    #[test]
    fn floor_violation_detected() {
        assert!(matches!(Medium::periodic(2.95).validate(), Err(Error::NonPositive { .. })));
    }

    #[test]
    fn const_product_is_constant() {
        let m = Medium::const_product(0.4);
        let l = m.lengths;
        for x in [[0.1, 2.0, 3.0], [1.0, -1.0, 5.0]] {
            assert!((m.eps.eval(x, l) * m.mu.eval(x, l) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn mild_preset_matches_closed_form() {
        let m = Medium::periodic(0.3);
        let x: [f64; 3] = [0.4, 1.3, 2.2];
        let e = 1.0 + 0.1 * (x[0].cos() + x[1].cos() + x[2].cos());
        let u = 1.0 + 0.1 * (x[0].sin() + (x[1] + 0.5).cos() + x[2].sin());
        assert!((m.eps.eval(x, m.lengths) - e).abs() < 1e-15);
        assert!((m.mu.eval(x, m.lengths) - u).abs() < 1e-15);
    }
}
