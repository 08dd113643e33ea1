//! Randomized residual checks of the factorization identities and the
//! calculus rules behind them, with a fourth-order finite-difference oracle.
//!
//! Composition identities are evaluated on a working grid that oversamples
//! the trial grid, with coefficients resampled from the analytic profile.
//! Projector and self-adjointness checks stay on the trial grid, where the
//! discrete statements hold exactly.

mod checks;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use num_complex::Complex64 as C64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::random::{bandlimited_scalar, bandlimited_state, bandlimited_vector};
use crate::field::{BlochMomentum, Calculus, FiniteDifference4, Grid, PoissonOptions, ScalarField, Spectral, State8, VectorField};
use crate::medium::Medium;
use crate::operators::CoefficientSet;
use crate::par;
use checks::{Env, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IdentityId {
    Eq7,
    Eq13,
    CommutatorEq37,
    CompressionPart,
    Lemma1Eq15,
    Lemma1Eq20,
    MsquaredEq22,
    AmEq21,
    DEq19,
    FProductEq27,
    CurlProductEq24,
    CurlCrossEq251,
    HodgeDelta3,
    SelfAdjointMext,
    ConstEpsmuDegeneration,
    GeneralizedExt,
}

impl IdentityId {
    pub const ALL: [IdentityId; 16] = [
        Self::Eq7,
        Self::Eq13,
        Self::CommutatorEq37,
        Self::CompressionPart,
        Self::Lemma1Eq15,
        Self::Lemma1Eq20,
        Self::MsquaredEq22,
        Self::AmEq21,
        Self::DEq19,
        Self::FProductEq27,
        Self::CurlProductEq24,
        Self::CurlCrossEq251,
        Self::HodgeDelta3,
        Self::SelfAdjointMext,
        Self::ConstEpsmuDegeneration,
        Self::GeneralizedExt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Eq7 => "EQ7",
            Self::Eq13 => "EQ13",
            Self::CommutatorEq37 => "COMMUTATOR_EQ37",
            Self::CompressionPart => "COMPRESSION_PART",
            Self::Lemma1Eq15 => "LEMMA1_EQ15",
            Self::Lemma1Eq20 => "LEMMA1_EQ20",
            Self::MsquaredEq22 => "MSQUARED_EQ22",
            Self::AmEq21 => "AM_EQ21",
            Self::DEq19 => "D_EQ19",
            Self::FProductEq27 => "F_PRODUCT_EQ27",
            Self::CurlProductEq24 => "CURL_PRODUCT_EQ24",
            Self::CurlCrossEq251 => "CURL_CROSS_EQ251",
            Self::HodgeDelta3 => "HODGE_DELTA3",
            Self::SelfAdjointMext => "SELF_ADJOINT_MEXT",
            Self::ConstEpsmuDegeneration => "CONST_EPSMU_DEGENERATION",
            Self::GeneralizedExt => "GENERALIZED_EXT",
        }
    }

    pub fn needs_lambda(self) -> bool {
        self == Self::Eq13
    }

    /// Checks that run on the trial grid rather than the working grid.
    pub fn on_trial_grid(self) -> bool {
        matches!(self, Self::CommutatorEq37 | Self::CompressionPart | Self::SelfAdjointMext)
    }

    pub fn uses_projector(self) -> bool {
        matches!(self, Self::CommutatorEq37 | Self::CompressionPart)
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            Self::HodgeDelta3 | Self::CurlProductEq24 | Self::CurlCrossEq251 | Self::ConstEpsmuDegeneration => 1e-12,
            Self::DEq19 | Self::FProductEq27 | Self::SelfAdjointMext => 1e-10,
            Self::CommutatorEq37 | Self::CompressionPart => 1e-9,
            _ => 1e-8,
        }
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IdentityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        Self::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::InvalidInput(format!("unknown identity `{t}`")))
    }
}

/// Random inputs for one trial. `scalar` and `aux_vector` serve as periodic
/// factors; `smooth` holds real fields with unit sup norm and bandlimit 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub index: usize,
    pub state: State8,
    pub partner: State8,
    pub scalar: ScalarField,
    pub vector: VectorField,
    pub aux_vector: VectorField,
    pub smooth: [ScalarField; 3],
}

impl Trial {
    fn draw(grid: Grid, bandlimit: usize, seed: u64, index: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let state = bandlimited_state(grid, bandlimit, &mut rng);
        let partner = bandlimited_state(grid, bandlimit, &mut rng);
        let scalar = bandlimited_scalar(grid, bandlimit, &mut rng);
        let vector = bandlimited_vector(grid, bandlimit, &mut rng);
        let aux_vector = bandlimited_vector(grid, bandlimit, &mut rng);
        let smooth = std::array::from_fn(|_| {
            let f = bandlimited_scalar(grid, 1, &mut rng).map(|z| C64::new(z.re, 0.0));
            f.scale_real(1.0 / f.max_abs().max(1e-300))
        });
        Self { index, state, partner, scalar, vector, aux_vector, smooth }
    }

    /// Spectral interpolation of every field onto `grid`.
    pub fn lift(&self, grid: &Grid) -> Result<Self> {
        Ok(Self {
            index: self.index,
            state: self.state.resample(grid)?,
            partner: self.partner.resample(grid)?,
            scalar: self.scalar.resample(grid)?,
            vector: self.vector.resample(grid)?,
            aux_vector: self.aux_vector.resample(grid)?,
            smooth: [self.smooth[0].resample(grid)?, self.smooth[1].resample(grid)?, self.smooth[2].resample(grid)?],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialEnsemble {
    pub seed: u64,
    pub count: usize,
    pub bandlimit: usize,
    pub grid: Grid,
    pub trials: Vec<Trial>,
}

/// Deterministic ensemble: trial `i` draws from stream `i` of a ChaCha8
/// generator seeded with `seed`.
pub fn make_trial_ensemble(grid: Grid, seed: u64, count: usize, bandlimit: usize) -> Result<TrialEnsemble> {
    let max = grid.max_bandlimit();
    if bandlimit > max {
        return Err(Error::BandlimitTooLarge { bandlimit, max });
    }
    let trials = par::map_range(count, |i| Trial::draw(grid, bandlimit, seed, i));
    Ok(TrialEnsemble { seed, count, bandlimit, grid, trials })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct OracleConfig {
    pub enabled: bool,
    /// Fraction of trials recomputed with finite differences (at least one).
    pub fraction: f64,
    /// Refinement factors of the trial grid for composition identities.
    pub levels: [usize; 2],
    /// Refinement factors for the projector and self-adjointness checks.
    pub trial_grid_levels: [usize; 2],
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { enabled: true, fraction: 0.1, levels: [2, 4], trial_grid_levels: [1, 2] }
    }
}

/// Finite-difference recomputation on two refined grids.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OracleSummary {
    pub trials: Vec<usize>,
    pub grids: [[usize; 3]; 2],
    /// Max identity residual with all derivatives taken by finite differences.
    pub fd_residual: [f64; 2],
    /// Max relative distance between the spectral and finite-difference
    /// evaluations of the left-hand side.
    pub spectral_vs_fd: [f64; 2],
    /// `log₂` of the error ratio between levels divided by `log₂` of the
    /// refinement ratio; absent when both levels sit at the floor.
    pub observed_order: Option<f64>,
    /// Both measures shrink by at least 8× between levels or sit below 1e-9.
    pub consistent: bool,
}

const ORACLE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResidualReport {
    pub identity: IdentityId,
    pub k: [f64; 3],
    /// `[re, im]` when the identity takes a spectral parameter.
    pub lambda: Option<[f64; 2]>,
    pub grid: [usize; 3],
    pub working_grid: [usize; 3],
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub skipped: bool,
    pub warnings: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
    pub oracle: Option<OracleSummary>,
    pub coefficient_fingerprint: String,
}

/// Coefficients and trials shared by every check of one run.
pub struct CheckContext {
    medium: Option<Medium>,
    base: CoefficientSet,
    work: CoefficientSet,
    ensemble: TrialEnsemble,
    lifted: Vec<Trial>,
    pub poisson: PoissonOptions,
    pub oracle: OracleConfig,
    /// Finite-difference coefficients per refined grid, built on first use.
    oracle_cache: Mutex<Vec<(Grid, Arc<CoefficientSet>)>>,
    /// Oracle trials lifted to refined grids, keyed by grid and trial index.
    oracle_trials: Mutex<Vec<(Grid, usize, Arc<Trial>)>>,
}

impl CheckContext {
    /// `composition_dealias` is the oversampling factor of the working grid.
    pub fn from_medium(medium: &Medium, ensemble: TrialEnsemble, composition_dealias: usize) -> Result<Self> {
        medium.validate()?;
        let base = medium.coefficients(&Spectral, &ensemble.grid)?;
        let work_grid = ensemble.grid.refined(composition_dealias.max(1));
        let work = medium.coefficients(&Spectral, &work_grid)?;
        Self::assemble(Some(medium.clone()), base, work, ensemble)
    }

    /// Without an analytic profile, the working coefficients are spectral
    /// interpolants of the sampled ones.
    pub fn from_coefficients(base: CoefficientSet, ensemble: TrialEnsemble, composition_dealias: usize) -> Result<Self> {
        base.grid().check_same(&ensemble.grid)?;
        let work = resample_coefficients(&Spectral, &base, &ensemble.grid.refined(composition_dealias.max(1)))?;
        Self::assemble(None, base, work, ensemble)
    }

    fn assemble(medium: Option<Medium>, base: CoefficientSet, work: CoefficientSet, ensemble: TrialEnsemble) -> Result<Self> {
        let g = *work.grid();
        let lifted = if g == ensemble.grid {
            ensemble.trials.clone()
        } else {
            par::map_slice(&ensemble.trials, |_, t| t.lift(&g)).into_iter().collect::<Result<_>>()?
        };
        Ok(Self {
            medium,
            base,
            work,
            ensemble,
            lifted,
            poisson: PoissonOptions::default(),
            oracle: OracleConfig::default(),
            oracle_cache: Mutex::new(Vec::new()),
            oracle_trials: Mutex::new(Vec::new()),
        })
    }

    pub fn ensemble(&self) -> &TrialEnsemble {
        &self.ensemble
    }

    pub fn base(&self) -> &CoefficientSet {
        &self.base
    }

    pub fn working(&self) -> &CoefficientSet {
        &self.work
    }

    fn setting(&self, id: IdentityId) -> (&CoefficientSet, &[Trial]) {
        if id.on_trial_grid() {
            (&self.base, &self.ensemble.trials)
        } else {
            (&self.work, &self.lifted)
        }
    }

    fn constant_product(&self) -> bool {
        let d = &self.base.epsmu;
        let mean = d.mean().re;
        d.data().iter().all(|z| (z.re - mean).abs() <= 1e-12 * mean.abs())
    }

    /// Coefficients on `grid` with the finite-difference backend.
    fn oracle_coefficients(&self, grid: &Grid) -> Result<Arc<CoefficientSet>> {
        let mut cache = self.oracle_cache.lock().expect("no panic while held");
        if let Some((_, c)) = cache.iter().find(|(g, _)| g == grid) {
            return Ok(Arc::clone(c));
        }
        let c = Arc::new(match &self.medium {
            Some(m) => m.coefficients(&FiniteDifference4, grid)?,
            None => resample_coefficients(&FiniteDifference4, &self.base, grid)?,
        });
        cache.push((*grid, Arc::clone(&c)));
        Ok(c)
    }

    fn oracle_trial(&self, grid: &Grid, i: usize) -> Result<Arc<Trial>> {
        let hit = |v: &Vec<(Grid, usize, Arc<Trial>)>| v.iter().find(|(g, j, _)| g == grid && *j == i).map(|(_, _, t)| Arc::clone(t));
        if let Some(t) = hit(&self.oracle_trials.lock().expect("no panic while held")) {
            return Ok(t);
        }
        // Lifting runs outside the lock; a concurrent duplicate is harmless.
        let t = Arc::new(self.ensemble.trials[i].lift(grid)?);
        let mut cache = self.oracle_trials.lock().expect("no panic while held");
        if let Some(existing) = hit(&cache) {
            return Ok(existing);
        }
        cache.push((*grid, i, Arc::clone(&t)));
        Ok(t)
    }
}

fn resample_coefficients(calc: &dyn Calculus, c: &CoefficientSet, grid: &Grid) -> Result<CoefficientSet> {
    let real = |f: &ScalarField| -> Result<ScalarField> { Ok(f.resample(grid)?.map(|z| C64::new(z.re, 0.0))) };
    CoefficientSet::derive(calc, real(&c.eps)?, real(&c.mu)?, c.eps0, c.mu0, c.c0)
}

/// Evaluates one identity on every trial of the context.
pub fn run_check(ctx: &CheckContext, id: IdentityId, tol: f64, k: BlochMomentum, lambda: Option<C64>) -> Result<ResidualReport> {
    match (id.needs_lambda(), lambda) {
        (true, None) => return Err(Error::MissingSpectralParameter(id.name())),
        (false, Some(_)) => return Err(Error::UnexpectedSpectralParameter(id.name())),
        _ => {}
    }
    let (c, trials) = ctx.setting(id);
    let mut report = ResidualReport {
        identity: id,
        k: k.0,
        lambda: lambda.map(|l| [l.re, l.im]),
        grid: ctx.ensemble.grid.n(),
        working_grid: c.grid().n(),
        residuals: Vec::new(),
        max_residual: 0.0,
        tolerance: tol,
        pass: true,
        skipped: false,
        warnings: Vec::new(),
        metrics: BTreeMap::new(),
        oracle: None,
        coefficient_fingerprint: ctx.base.fingerprint(),
    };
    if id == IdentityId::ConstEpsmuDegeneration && !ctx.constant_product() {
        report.skipped = true;
        report.warnings.push("εμ is not constant; degeneration check skipped".into());
        return Ok(report);
    }
    if trials.is_empty() {
        report.warnings.push("empty ensemble; pass is vacuous".into());
        return Ok(report);
    }
    let env = Env { calc: &Spectral, c, k, poisson: ctx.poisson };
    let outcomes: Vec<Result<(f64, Outcome)>> = par::map_slice(trials, |_, t| {
        let o = env.evaluate(id, t, lambda)?;
        Ok((o.residual(c)?, o))
    });
    let mut spectral = Vec::with_capacity(trials.len());
    for r in outcomes {
        let (res, o) = r?;
        report.residuals.push(res);
        spectral.push(o);
    }
    report.max_residual = report.residuals.iter().copied().fold(0.0, f64::max);
    report.pass = report.max_residual <= tol && report.residuals.iter().all(|r| r.is_finite());

    if id == IdentityId::Eq7 && ctx.constant_product() {
        let m = trials.iter().map(|t| env.eq7_without_f(&t.state)).collect::<Result<Vec<_>>>()?;
        report.metrics.insert("max_residual_without_f".into(), m.into_iter().fold(0.0, f64::max));
    }
    if id == IdentityId::GeneralizedExt {
        let d = par::map_slice(trials, |_, t| env.standard_extension_deviation(&t.state));
        let d = d.into_iter().collect::<Result<Vec<_>>>()?;
        report.metrics.insert("standard_choice_deviation".into(), d.into_iter().fold(0.0, f64::max));
    }
    if ctx.oracle.enabled {
        report.oracle = Some(run_oracle(ctx, id, k, lambda, &spectral)?);
    }
    Ok(report)
}

fn outcome_distance(a: &Outcome, b: &Outcome, c: &CoefficientSet) -> Result<f64> {
    Ok(match (a, b) {
        (Outcome::Sides { lhs: x, .. }, Outcome::Sides { lhs: y, .. }) => {
            Outcome::Sides { lhs: x.clone(), rhs: y.clone() }.residual(c)?
        }
        (Outcome::Scalars { a: x, scale, .. }, Outcome::Scalars { a: y, .. }) => (x - y).norm() / scale.max(1e-300),
        (Outcome::Vanishing { value: x }, Outcome::Vanishing { value: y }) => (x - y).abs(),
        _ => f64::NAN,
    })
}

fn resample_outcome(o: &Outcome, grid: &Grid) -> Result<Outcome> {
    Ok(match o {
        Outcome::Sides { lhs, rhs } => Outcome::Sides { lhs: lhs.resample(grid)?, rhs: rhs.resample(grid)? },
        Outcome::Scalars { a, b, scale } => Outcome::Scalars { a: *a, b: *b, scale: *scale },
        Outcome::Vanishing { value } => Outcome::Vanishing { value: *value },
    })
}

fn run_oracle(ctx: &CheckContext, id: IdentityId, k: BlochMomentum, lambda: Option<C64>, spectral: &[Outcome]) -> Result<OracleSummary> {
    let count = spectral.len();
    let picks = ((ctx.oracle.fraction * count as f64).ceil() as usize).clamp(1, count);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.ensemble.seed ^ 0x6f72_6163_6c65);
    let mut chosen = sample(&mut rng, count, picks).into_vec();
    chosen.sort_unstable();

    let levels = if id.on_trial_grid() { ctx.oracle.trial_grid_levels } else { ctx.oracle.levels };
    let mut fd_residual = [0.0; 2];
    let mut spectral_vs_fd = [0.0; 2];
    let mut grids = [[0; 3]; 2];
    for (l, &factor) in levels.iter().enumerate() {
        let grid = ctx.ensemble.grid.refined(factor.max(1));
        grids[l] = grid.n();
        let c = ctx.oracle_coefficients(&grid)?;
        let env = Env { calc: &FiniteDifference4, c: &c, k, poisson: ctx.poisson };
        let results = par::map_slice(&chosen, |_, &i| -> Result<(f64, f64)> {
            let t = ctx.oracle_trial(&grid, i)?;
            let o = env.evaluate(id, &t, lambda)?;
            let reference = resample_outcome(&spectral[i], &grid)?;
            Ok((o.residual(&c)?, outcome_distance(&reference, &o, &c)?))
        });
        for r in results {
            let (res, dist) = r?;
            fd_residual[l] = f64::max(fd_residual[l], res);
            spectral_vs_fd[l] = f64::max(spectral_vs_fd[l], dist);
        }
    }
    let ratio = (levels[1] as f64 / levels[0] as f64).log2();
    let observed_order = (spectral_vs_fd[0] > ORACLE_FLOOR && spectral_vs_fd[1] > 0.0)
        .then(|| (spectral_vs_fd[0] / spectral_vs_fd[1]).log2() / ratio);
    let shrinks = |v: [f64; 2]| v[1] <= (v[0] / 8.0).max(ORACLE_FLOOR);
    Ok(OracleSummary {
        trials: chosen,
        grids,
        fd_residual,
        spectral_vs_fd,
        observed_order,
        consistent: shrinks(fd_residual) && shrinks(spectral_vs_fd),
    })
}

/// Inputs of a full suite run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SuiteConfig {
    pub grids: Vec<[usize; 3]>,
    pub seed: u64,
    pub count: usize,
    pub bandlimit: usize,
    pub ks: Vec<[f64; 3]>,
    /// `[re, im]` pairs.
    pub lambdas: Vec<[f64; 2]>,
    pub tolerances: BTreeMap<IdentityId, f64>,
    pub identities: Option<Vec<IdentityId>>,
    pub composition_dealias: usize,
    pub oracle: OracleConfig,
    pub poisson_tolerance: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            grids: vec![[16; 3]],
            seed: 42,
            count: 20,
            bandlimit: 5,
            ks: vec![[0.0; 3], [0.25, 0.1, -0.15]],
            lambdas: vec![[0.0, 0.0], [0.7, 0.3], [-0.4, 0.6]],
            tolerances: BTreeMap::new(),
            identities: None,
            composition_dealias: 2,
            oracle: OracleConfig::default(),
            poisson_tolerance: PoissonOptions::default().tolerance,
        }
    }
}

impl SuiteConfig {
    pub fn tolerance(&self, id: IdentityId) -> f64 {
        self.tolerances.get(&id).copied().unwrap_or_else(|| id.default_tolerance())
    }

    pub fn selected(&self) -> Vec<IdentityId> {
        match &self.identities {
            Some(v) => IdentityId::ALL.into_iter().filter(|id| v.contains(id)).collect(),
            None => IdentityId::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SuiteReport {
    pub reports: Vec<ResidualReport>,
    pub all_pass: bool,
    pub warnings: Vec<String>,
}

/// Runs the selected identities over every grid, momentum and (for the
/// λ-dependent ones) spectral parameter.
pub fn run_suite(medium: &Medium, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut reports = Vec::new();
    let mut warnings = Vec::new();
    for &n in &cfg.grids {
        let grid = medium.grid(n)?;
        let bandlimit = cfg.bandlimit.min(grid.max_bandlimit());
        if bandlimit < cfg.bandlimit {
            warnings.push(format!("bandlimit {} clamped to {} on grid {:?}", cfg.bandlimit, bandlimit, n));
        }
        let ensemble = make_trial_ensemble(grid, cfg.seed, cfg.count, bandlimit)?;
        let mut ctx = CheckContext::from_medium(medium, ensemble, cfg.composition_dealias)?;
        ctx.poisson.tolerance = cfg.poisson_tolerance;
        ctx.oracle = cfg.oracle.clone();
        for id in cfg.selected() {
            for &k in &cfg.ks {
                let k = BlochMomentum(k);
                let lambdas: Vec<Option<C64>> = if id.needs_lambda() {
                    cfg.lambdas.iter().map(|l| Some(C64::new(l[0], l[1]))).collect()
                } else {
                    vec![None]
                };
                for lam in lambdas {
                    reports.push(run_check(&ctx, id, cfg.tolerance(id), k, lam)?);
                }
            }
        }
    }
    let all_pass = reports.iter().all(|r| r.pass);
    Ok(SuiteReport { reports, all_pass, warnings })
}

#[cfg(test)]
mod tests;
