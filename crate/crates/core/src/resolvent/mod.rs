//! Constructive resolvent on a fiber: `Z(k,λ)` from the free multiplier at
//! `λ²`, the composition `R_𝓜 = 𝓙Z(I − 𝓕Z)Q(λ)`, and dense cross-checks.

mod free;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use free::{
    lattice_condition, r0_apply, r0_norm_decay_check, real_momentum, ComplexMomentum, ComplexMomentumRay,
    DecayReport, DecayRow, FreeResolvent, LambdaPower, LatticeCondition, SINGULAR_GUARD,
};

use crate::error::{Error, Result};
use crate::field::random::bandlimited_state;
use crate::field::{BlochMomentum, Spectral, State8};
use crate::linalg::{densify, gmres, SolveStats};
use crate::operators::{CoefficientSet, Ops, SchrodingerForm};

/// `λ` together with `λ²`. `Z` sees the free multiplier at `λ²` while the
/// resolvent of `𝓜` is taken at `λ`; both are kept to make the distinction
/// explicit at every call site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParam {
    pub lambda: C64,
    pub lambda_sq: C64,
}

impl SpectralParam {
    pub fn new(lambda: C64) -> Self {
        Self { lambda, lambda_sq: lambda * lambda }
    }

    /// `ε₀μ₀λ²`, the shift inside `R⁰` used by `Z`.
    pub fn free_shift(&self, eps0_mu0: f64) -> C64 {
        eps0_mu0 * self.lambda_sq
    }

    pub fn on_physical_sheet(&self) -> bool {
        self.lambda.im > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResolventOptions {
    pub tolerance: f64,
    pub max_iter: usize,
    pub restart: usize,
    pub form: SchrodingerForm,
}

impl Default for ResolventOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iter: 500, restart: 100, form: SchrodingerForm::Induced }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HandleTag {
    R0,
    W,
    Z,
    Q,
    RM,
}

type Action<'a> = Box<dyn Fn(&State8) -> Result<State8> + Send + Sync + 'a>;

/// A linear action captured at fixed `(k, λ)` and coefficients.
pub struct OperatorHandle<'a> {
    pub tag: HandleTag,
    pub k: BlochMomentum,
    pub param: SpectralParam,
    action: Action<'a>,
}

impl OperatorHandle<'_> {
    pub fn apply(&self, u: &State8) -> Result<State8> {
        (self.action)(u)
    }

    /// Relative defect of `T(a + s b) = T a + s T b`. The scale is floored at
    /// `‖a + s b‖` so an operator that vanishes (`W` on a constant medium)
    /// does not report roundoff over roundoff.
    pub fn linearity_defect(&self, a: &State8, b: &State8, s: C64) -> Result<f64> {
        let mut ab = a.clone();
        ab.axpy(s, b);
        let lhs = self.apply(&ab)?;
        let mut rhs = self.apply(a)?;
        rhs.axpy(s, &self.apply(b)?);
        let scale = lhs.l2_norm().max(rhs.l2_norm()).max(ab.l2_norm()).max(1e-300);
        Ok((&lhs - &rhs).l2_norm() / scale)
    }
}

/// Resolvent machinery at fixed `(k, λ)`.
pub struct Resolvent<'a> {
    ops: Ops<'a>,
    param: SpectralParam,
    r0: FreeResolvent,
    opts: ResolventOptions,
}

impl<'a> Resolvent<'a> {
    pub fn new(c: &'a CoefficientSet, k: BlochMomentum, lambda: C64, opts: ResolventOptions) -> Result<Self> {
        let param = SpectralParam::new(lambda);
        let r0 = FreeResolvent::new(*c.grid(), real_momentum(k.0), param.free_shift(c.eps0_mu0()))?;
        let ops = Ops::new(&Spectral, c, k).with_form(opts.form);
        Ok(Self { ops, param, r0, opts })
    }

    pub fn param(&self) -> SpectralParam {
        self.param
    }

    pub fn ops(&self) -> &Ops<'a> {
        &self.ops
    }

    /// `R⁰(k, λ²)`.
    pub fn r0(&self, u: &State8) -> Result<State8> {
        self.r0.apply(u)
    }

    pub fn w(&self, u: &State8) -> State8 {
        self.ops.w_lambda(u, self.param.lambda)
    }

    pub fn q(&self, u: &State8) -> State8 {
        self.ops.q_lambda(u, self.param.lambda)
    }

    /// `Z u`: solves `(I + R⁰𝓦)x = R⁰u` by restarted GMRES.
    pub fn z_with_stats(&self, u: &State8) -> Result<(State8, SolveStats)> {
        let grid = *u.grid();
        let b = self.r0(u)?.to_flat();
        let apply = |x: &[C64]| {
            let s = State8::from_flat(grid, x).expect("sizes agree");
            let mut out = self.r0.apply(&self.w(&s)).expect("grids agree");
            out.axpy(C64::new(1.0, 0.0), &s);
            out.to_flat()
        };
        let (x, stats) = gmres(apply, &b, self.opts.tolerance, self.opts.restart, self.opts.max_iter)?;
        Ok((State8::from_flat(grid, &x)?, stats))
    }

    pub fn z(&self, u: &State8) -> Result<State8> {
        self.z_with_stats(u).map(|(x, _)| x)
    }

    /// `𝓙Z(I − 𝓕Z)Q(λ) u`; requires `Im λ > 0`.
    pub fn rm(&self, u: &State8) -> Result<State8> {
        if !self.param.on_physical_sheet() {
            return Err(Error::InvalidInput(format!("R_M needs Im λ > 0, got λ = {}", self.param.lambda)));
        }
        let q = self.q(u);
        let t = &q - &self.ops.f_mat(&self.z(&q)?);
        Ok(self.ops.j(&self.z(&t)?))
    }

    /// `‖𝓕Z𝓕u‖ / ‖u‖`.
    pub fn fzf(&self, u: &State8) -> Result<f64> {
        let f = &self.ops;
        Ok(f.f_mat(&self.z(&f.f_mat(u))?).l2_norm() / u.l2_norm().max(1e-300))
    }

    /// `(𝓜(k) − λ)v`.
    pub fn shifted_m(&self, v: &State8) -> State8 {
        let mut out = self.ops.m_ext(v);
        out.axpy(-self.param.lambda, v);
        out
    }

    pub fn handle(&self, tag: HandleTag) -> OperatorHandle<'_> {
        let action: Action<'_> = match tag {
            HandleTag::R0 => Box::new(move |u| self.r0(u)),
            HandleTag::W => Box::new(move |u| Ok(self.w(u))),
            HandleTag::Z => Box::new(move |u| self.z(u)),
            HandleTag::Q => Box::new(move |u| Ok(self.q(u))),
            HandleTag::RM => Box::new(move |u| self.rm(u)),
        };
        OperatorHandle { tag, k: self.ops.k, param: self.param, action }
    }
}

pub fn z_apply(c: &CoefficientSet, k: BlochMomentum, lambda: C64, u: &State8) -> Result<State8> {
    Resolvent::new(c, k, lambda, ResolventOptions::default())?.z(u)
}

pub fn rm_apply(c: &CoefficientSet, k: BlochMomentum, lambda: C64, u: &State8) -> Result<State8> {
    Resolvent::new(c, k, lambda, ResolventOptions::default())?.rm(u)
}

pub fn fzf_zero_check(c: &CoefficientSet, k: BlochMomentum, lambda: C64, trials: &[State8]) -> Result<f64> {
    let r = Resolvent::new(c, k, lambda, ResolventOptions::default())?;
    trials.iter().map(|u| r.fzf(u)).try_fold(0.0f64, |m, x| x.map(|x| m.max(x)))
}

/// Dense LU of `𝓜(k) − λ` on the fiber, the oracle for [`Resolvent::rm`].
pub struct DenseShiftedM {
    grid: crate::field::Grid,
    lu: faer::linalg::solvers::PartialPivLu<C64>,
}

impl DenseShiftedM {
    pub fn new(c: &CoefficientSet, k: BlochMomentum, lambda: C64, cap: usize) -> Result<Self> {
        let grid = *c.grid();
        let dim = 8 * grid.len();
        if dim > cap {
            return Err(Error::MemoryCap { size: dim, cap });
        }
        let ops = Ops::new(&Spectral, c, k);
        let m = densify(dim, |x| {
            let u = State8::from_flat(grid, x).expect("sizes agree");
            let mut out = ops.m_ext(&u);
            out.axpy(-lambda, &u);
            out.to_flat()
        });
        Ok(Self { grid, lu: m.partial_piv_lu() })
    }

    pub fn solve(&self, u: &State8) -> Result<State8> {
        use faer::linalg::solvers::Solve;
        let b = u.to_flat();
        let rhs = faer::Mat::from_fn(b.len(), 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        let flat: Vec<C64> = (0..b.len()).map(|i| x[(i, 0)]).collect();
        if flat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::LinearAlgebra("singular shifted fiber".into()));
        }
        State8::from_flat(self.grid, &flat)
    }
}

/// One-shot dense solve of `(𝓜(k) − λ)x = u`.
pub fn dense_resolvent_solve(c: &CoefficientSet, k: BlochMomentum, lambda: C64, u: &State8, cap: usize) -> Result<State8> {
    DenseShiftedM::new(c, k, lambda, cap)?.solve(u)
}

fn rel(a: &State8, b: &State8) -> f64 {
    (a - b).l2_norm() / a.l2_norm().max(b.l2_norm()).max(1e-300)
}

/// Smallest singular value of the dense `I + R⁰𝓦(λ)`, scaled by the largest.
pub fn fredholm_sigma_min(r: &Resolvent<'_>, cap: usize) -> Result<f64> {
    let grid = *r.ops().c.grid();
    let dim = 8 * grid.len();
    if dim > cap {
        return Err(Error::MemoryCap { size: dim, cap });
    }
    let m = densify(dim, |x| {
        let s = State8::from_flat(grid, x).expect("sizes agree");
        let mut out = r.r0(&r.w(&s)).expect("grids agree");
        out.axpy(C64::new(1.0, 0.0), &s);
        out.to_flat()
    });
    let sv = crate::linalg::singular_values(&m)?;
    Ok(sv.last().copied().unwrap_or(0.0) / sv[0].max(1e-300))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResolventTolerances {
    pub resolvent: f64,
    pub fzf: f64,
    pub linearity: f64,
}

impl Default for ResolventTolerances {
    fn default() -> Self {
        Self { resolvent: 1e-7, fzf: 1e-10, linearity: 1e-9 }
    }
}

/// Settings of the resolvent experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResolventLabConfig {
    pub ks: Vec<[f64; 3]>,
    /// `[re, im]` pairs.
    pub lambdas: Vec<[f64; 2]>,
    pub trials: usize,
    pub seed: u64,
    pub bandlimit: usize,
    pub solver: ResolventOptions,
    pub tolerances: ResolventTolerances,
    /// Largest dimension for the dense oracle; above it only residuals are
    /// reported.
    pub dense_cap: usize,
    /// Largest dimension for the σ_min probe of `I + R⁰𝓦`.
    pub sigma_probe_cap: usize,
    pub ray: ComplexMomentumRay,
    /// `ε₀μ₀λ` on the ray.
    pub ray_shift: f64,
    pub ray_grid: [usize; 3],
    pub condition_cutoff: usize,
    pub condition_margin: f64,
}

impl Default for ResolventLabConfig {
    fn default() -> Self {
        Self {
            ks: vec![[0.25, 0.1, -0.15]],
            lambdas: vec![[0.6, 0.4]],
            trials: 5,
            seed: 7,
            bandlimit: 2,
            solver: ResolventOptions::default(),
            tolerances: ResolventTolerances::default(),
            dense_cap: crate::bloch::DEFAULT_MEMORY_CAP,
            sigma_probe_cap: 2048,
            ray: ComplexMomentumRay { base: [0.3, 0.0, 0.0], axis: 0, taus: vec![10.0, 20.0, 40.0, 80.0] },
            ray_shift: 0.5,
            ray_grid: [192; 3],
            condition_cutoff: 8,
            condition_margin: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialComparison {
    pub index: usize,
    /// `‖R_𝓜u − x‖/‖x‖` against the dense solve, when it ran.
    pub vs_dense: Option<f64>,
    /// `‖(𝓜 − λ)R_𝓜u − u‖/‖u‖`.
    pub residual: f64,
    /// `R_𝓜((𝓜 − λ)𝓙w)` against `𝓙w`.
    pub factorization_route: f64,
    pub fzf: f64,
    pub gmres_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventPoint {
    pub k: [f64; 3],
    pub lambda: [f64; 2],
    pub lambda_sq: [f64; 2],
    /// Set when the point could not be evaluated (singular multiplier,
    /// non-convergence, off-sheet `λ`).
    pub error: Option<String>,
    pub trials: Vec<TrialComparison>,
    pub max_vs_dense: Option<f64>,
    pub max_residual: f64,
    pub max_factorization_route: f64,
    pub max_fzf: f64,
    pub max_linearity_defect: f64,
    /// Scaled σ_min of `I + R⁰𝓦(λ)`, when the probe ran.
    pub fredholm_sigma_min: Option<f64>,
    pub condition_linear: LatticeCondition,
    pub condition_squared: LatticeCondition,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventLabReport {
    pub grid: [usize; 3],
    pub coefficient_fingerprint: String,
    pub tolerances: ResolventTolerances,
    pub points: Vec<ResolventPoint>,
    pub decay: DecayReport,
    /// Every evaluated point within tolerance and the decay bounded.
    /// Points carrying an `error` are recorded, not counted.
    pub all_pass: bool,
}

fn evaluate_point(c: &CoefficientSet, cfg: &ResolventLabConfig, k: BlochMomentum, lambda: C64, p: &mut ResolventPoint) -> Result<()> {
    let grid = *c.grid();
    let r = Resolvent::new(c, k, lambda, cfg.solver)?;
    let dim = 8 * grid.len();
    if dim <= cfg.sigma_probe_cap {
        p.fredholm_sigma_min = Some(fredholm_sigma_min(&r, cfg.sigma_probe_cap)?);
    }
    let dense = if dim <= cfg.dense_cap { Some(DenseShiftedM::new(c, k, lambda, cfg.dense_cap)?) } else { None };
    let bandlimit = cfg.bandlimit.min(grid.max_bandlimit());
    let draw = |i: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        bandlimited_state(grid, bandlimit, &mut rng)
    };
    for i in 0..cfg.trials {
        let (u, w) = (draw(2 * i), draw(2 * i + 1));
        let x = r.rm(&u)?;
        let (_, stats) = r.z_with_stats(&r.q(&u))?;
        let vs_dense = match &dense {
            Some(d) => {
                let oracle = d.solve(&u)?;
                Some((&x - &oracle).l2_norm() / oracle.l2_norm().max(1e-300))
            }
            None => None,
        };
        let jw = r.ops().j(&w);
        p.trials.push(TrialComparison {
            index: i,
            vs_dense,
            residual: (&r.shifted_m(&x) - &u).l2_norm() / u.l2_norm().max(1e-300),
            factorization_route: rel(&r.rm(&r.shifted_m(&jw))?, &jw),
            fzf: r.fzf(&u)?,
            gmres_iterations: stats.iterations,
        });
    }
    let max = |f: fn(&TrialComparison) -> f64| p.trials.iter().map(f).fold(0.0, f64::max);
    p.max_residual = max(|t| t.residual);
    p.max_factorization_route = max(|t| t.factorization_route);
    p.max_fzf = max(|t| t.fzf);
    p.max_vs_dense = dense.as_ref().map(|_| max(|t| t.vs_dense.unwrap_or(0.0)));
    let (a, b) = (draw(2 * cfg.trials), draw(2 * cfg.trials + 1));
    let s = C64::new(0.7, -0.3);
    for tag in [HandleTag::R0, HandleTag::W, HandleTag::Z, HandleTag::Q, HandleTag::RM] {
        p.max_linearity_defect = p.max_linearity_defect.max(r.handle(tag).linearity_defect(&a, &b, s)?);
    }
    let t = &cfg.tolerances;
    p.pass = p.max_vs_dense.unwrap_or(0.0) <= t.resolvent
        && p.max_residual <= t.resolvent
        && p.max_factorization_route <= t.resolvent
        && p.max_fzf <= t.fzf
        && p.max_linearity_defect <= t.linearity;
    Ok(())
}

/// Runs the resolvent checks at every `(k, λ)` of the config, the decay
/// table along the ray and the lattice condition scans. Independent points
/// are evaluated in parallel.
pub fn run_resolvent_lab(c: &CoefficientSet, cfg: &ResolventLabConfig) -> Result<ResolventLabReport> {
    cfg.ray.validate()?;
    let pairs: Vec<([f64; 3], [f64; 2])> = cfg.ks.iter().flat_map(|&k| cfg.lambdas.iter().map(move |&l| (k, l))).collect();
    for &k in &cfg.ks {
        BlochMomentum::new(k)?;
    }
    let eps0_mu0 = c.eps0_mu0();
    let points = crate::par::map_slice(&pairs, |_, &(k, l)| {
        let lambda = C64::new(l[0], l[1]);
        let cond = |pw| lattice_condition(real_momentum(k), lambda, eps0_mu0, 1.0, cfg.condition_cutoff, pw, cfg.condition_margin);
        let mut p = ResolventPoint {
            k,
            lambda: l,
            lambda_sq: [(lambda * lambda).re, (lambda * lambda).im],
            error: None,
            trials: Vec::new(),
            max_vs_dense: None,
            max_residual: 0.0,
            max_factorization_route: 0.0,
            max_fzf: 0.0,
            max_linearity_defect: 0.0,
            fredholm_sigma_min: None,
            condition_linear: cond(LambdaPower::Linear),
            condition_squared: cond(LambdaPower::Squared),
            pass: false,
        };
        if let Err(e) = evaluate_point(c, cfg, BlochMomentum(k), lambda, &mut p) {
            p.error = Some(e.to_string());
            p.pass = false;
        }
        p
    });
    let ray_grid = crate::field::Grid::new(cfg.ray_grid, c.grid().lengths(), (1, 1))?;
    let decay = r0_norm_decay_check(&cfg.ray, 1.0, C64::new(cfg.ray_shift, 0.0), &ray_grid)?;
    let all_pass = decay.bounded && points.iter().all(|p| p.error.is_some() || p.pass);
    Ok(ResolventLabReport {
        grid: c.grid().n(),
        coefficient_fingerprint: c.fingerprint(),
        tolerances: cfg.tolerances,
        points,
        decay,
        all_pass,
    })
}
