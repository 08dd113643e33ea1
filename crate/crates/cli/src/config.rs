//! Run configuration: TOML or JSON on disk, defaults for everything.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use emfactor::bloch::{BlochPath, DEFAULT_MEMORY_CAP};
use emfactor::identities::{IdentityId, OracleConfig, SuiteConfig};
use emfactor::medium::{Medium, Profile};
use emfactor::resolvent::{ComplexMomentumRay, ResolventLabConfig, ResolventOptions, ResolventTolerances};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n: [usize; 3],
    /// Overrides the cell of the medium.
    pub lengths: Option<[f64; 3]>,
    pub dealias: [u32; 2],
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: [16; 3], lengths: None, dealias: [3, 2] }
    }
}

/// Either a named preset or explicit profiles for `ε` and `μ`.
pub const DEFAULT_PRESET: &str = "periodic-mild";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct MediumSpec {
    pub preset: Option<String>,
    pub amplitude: Option<f64>,
    pub eps: Option<Profile>,
    pub mu: Option<Profile>,
    pub eps0: Option<f64>,
    pub mu0: Option<f64>,
    pub c0: Option<f64>,
    /// Declares `εμ` constant for explicit profiles.
    pub constant_product: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSpec {
    pub seed: u64,
    pub count: usize,
    pub bandlimit: usize,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self { seed: 42, count: 20, bandlimit: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    pub ks: Vec<[f64; 3]>,
    pub lambdas: Vec<[f64; 2]>,
    pub identities: Option<Vec<IdentityId>>,
    pub composition_dealias: usize,
    pub oracle: OracleConfig,
    pub poisson_tolerance: f64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        let s = SuiteConfig::default();
        Self {
            ks: s.ks,
            lambdas: s.lambdas,
            identities: None,
            composition_dealias: s.composition_dealias,
            oracle: s.oracle,
            poisson_tolerance: s.poisson_tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSpec {
    GammaX { samples: usize },
    Line { from: [f64; 3], to: [f64; 3], samples: usize },
    Points { points: Vec<[f64; 3]>, #[serde(default)] labels: Vec<(usize, String)> },
}

impl PathSpec {
    pub fn build(&self) -> emfactor::Result<BlochPath> {
        match self {
            PathSpec::GammaX { samples } => BlochPath::gamma_x(*samples),
            PathSpec::Line { from, to, samples } => BlochPath::line(*from, *to, *samples),
            PathSpec::Points { points, labels } => BlochPath::new(points.clone(), labels.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandsSpec {
    pub n: [usize; 3],
    pub path: PathSpec,
    /// Defaults to `2/√(ε₀μ₀)`.
    pub window: Option<f64>,
    /// Flatness threshold of the nonconstancy report.
    pub delta: f64,
    /// Finer grid for a self-convergence comparison.
    pub compare_n: Option<[usize; 3]>,
    pub compare_margin: f64,
    pub compare_tolerance: f64,
    /// Bound on the deviation from the free bands when the medium is constant.
    pub oracle_tolerance: f64,
    pub hermitian_tolerance: f64,
}

impl Default for BandsSpec {
    fn default() -> Self {
        Self {
            n: [6; 3],
            path: PathSpec::GammaX { samples: 17 },
            window: None,
            delta: 1e-4,
            compare_n: None,
            compare_margin: 0.0,
            compare_tolerance: 1e-3,
            oracle_tolerance: 1e-12,
            hermitian_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolventSpec {
    pub n: [usize; 3],
    pub ks: Vec<[f64; 3]>,
    pub lambdas: Vec<[f64; 2]>,
    pub trials: usize,
    pub seed: u64,
    pub bandlimit: usize,
    pub solver: ResolventOptions,
    pub tolerances: ResolventTolerances,
    pub sigma_probe_cap: usize,
    pub ray: ComplexMomentumRay,
    pub ray_shift: f64,
    pub ray_grid: [usize; 3],
    pub condition_cutoff: usize,
    pub condition_margin: f64,
}

impl Default for ResolventSpec {
    fn default() -> Self {
        let d = ResolventLabConfig::default();
        Self {
            n: [6; 3],
            ks: d.ks,
            lambdas: d.lambdas,
            trials: d.trials,
            seed: d.seed,
            bandlimit: d.bandlimit,
            solver: d.solver,
            tolerances: d.tolerances,
            sigma_probe_cap: d.sigma_probe_cap,
            ray: d.ray,
            ray_shift: d.ray_shift,
            ray_grid: d.ray_grid,
            condition_cutoff: d.condition_cutoff,
            condition_margin: d.condition_margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub preset: String,
    #[serde(default)]
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub entries: Vec<SweepEntry>,
    pub commands: Vec<String>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        let entries = [0.0, 0.1, 0.3]
            .into_iter()
            .map(|a| SweepEntry { preset: "periodic-mild".into(), amplitude: Some(a) })
            .collect();
        Self { entries, commands: vec!["bands".into(), "verify".into()] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub medium: MediumSpec,
    pub ensemble: EnsembleSpec,
    pub tolerances: BTreeMap<IdentityId, f64>,
    pub verify: VerifySpec,
    pub bands: BandsSpec,
    pub resolvent: ResolventSpec,
    pub sweep: SweepSpec,
    pub memory_cap: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let cfg: Self = if is_json {
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        cfg.medium()?;
        Ok(cfg)
    }

    pub fn memory_cap(&self) -> usize {
        self.memory_cap.unwrap_or(DEFAULT_MEMORY_CAP)
    }

    /// Builds and validates the medium, including the positivity floor.
    pub fn medium(&self) -> Result<Medium, CliError> {
        let s = &self.medium;
        let mut m = match (&s.preset, &s.eps, &s.mu) {
            (None, None, None) => Medium::preset(DEFAULT_PRESET, s.amplitude)?,
            (Some(p), None, None) => Medium::preset(p, s.amplitude)?,
            (None, Some(eps), Some(mu)) => {
                let mut m = Medium::constant(1.0, 1.0);
                m.eps = eps.clone();
                m.mu = mu.clone();
                m.constant_product = s.constant_product.unwrap_or(eps.is_constant() && mu.is_constant());
                m
            }
            _ => return Err(CliError::Config("medium: give either `preset` or both `eps` and `mu`".into())),
        };
        if let Some(v) = s.eps0 {
            m.eps0 = v;
        }
        if let Some(v) = s.mu0 {
            m.mu0 = v;
        }
        if let Some(v) = s.c0 {
            m.c0 = v;
        }
        if let Some(l) = self.grid.lengths {
            m.lengths = l;
        }
        m.dealias = (self.grid.dealias[0], self.grid.dealias[1]);
        m.grid(self.grid.n)?;
        m.validate()?;
        Ok(m)
    }

    pub fn suite(&self) -> SuiteConfig {
        let v = &self.verify;
        SuiteConfig {
            grids: vec![self.grid.n],
            seed: self.ensemble.seed,
            count: self.ensemble.count,
            bandlimit: self.ensemble.bandlimit,
            ks: v.ks.clone(),
            lambdas: v.lambdas.clone(),
            tolerances: self.tolerances.clone(),
            identities: v.identities.clone(),
            composition_dealias: v.composition_dealias,
            oracle: v.oracle.clone(),
            poisson_tolerance: v.poisson_tolerance,
        }
    }

    pub fn resolvent_lab(&self) -> ResolventLabConfig {
        let r = &self.resolvent;
        ResolventLabConfig {
            ks: r.ks.clone(),
            lambdas: r.lambdas.clone(),
            trials: r.trials,
            seed: r.seed,
            bandlimit: r.bandlimit,
            solver: r.solver,
            tolerances: r.tolerances,
            dense_cap: self.memory_cap(),
            sigma_probe_cap: r.sigma_probe_cap,
            ray: r.ray.clone(),
            ray_shift: r.ray_shift,
            ray_grid: r.ray_grid,
            condition_cutoff: r.condition_cutoff,
            condition_margin: r.condition_margin,
        }
    }

    /// Dense spectral commands refuse grids whose fiber exceeds the cap.
    pub fn check_dense(&self, n: [usize; 3]) -> Result<(), CliError> {
        let dim = 8 * n.iter().product::<usize>();
        if dim > self.memory_cap() {
            return Err(emfactor::Error::MemoryCap { size: dim, cap: self.memory_cap() }.into());
        }
        Ok(())
    }

    /// The part of the configuration a command's output depends on.
    pub fn cache_key(&self, command: &str) -> Result<serde_json::Value, CliError> {
        let medium = serde_json::to_value(self.medium()?).map_err(|e| CliError::Config(e.to_string()))?;
        let section = match command {
            "verify" => serde_json::to_value((&self.grid, &self.ensemble, &self.tolerances, &self.verify)),
            "bands" => serde_json::to_value((&self.bands, self.memory_cap())),
            "resolvent" => serde_json::to_value((&self.resolvent, self.memory_cap())),
            "sweep" => serde_json::to_value((&self.grid, &self.ensemble, &self.tolerances, &self.verify, &self.bands, &self.sweep)),
            other => return Err(CliError::Config(format!("unknown command `{other}`"))),
        }
        .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(serde_json::json!({
            "command": command,
            "format": crate::FORMAT_VERSION,
            "medium": medium,
            "settings": section,
        }))
    }
}
