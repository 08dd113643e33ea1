//! Matrix differential expressions acting on `(E, H, φ, ψ)`.
//!
//! Every action is a matrix-free composition of the calculus backend with
//! collocated coefficient products, so the same code runs spectrally and
//! under the finite-difference oracle.

mod coefficients;
mod extension;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use coefficients::CoefficientSet;
pub use extension::{generalized_extension, ExtensionOps, ExtensionParams};

use crate::error::{Error, Result};
use crate::field::pointwise::cross_collocated;
use crate::field::{project_state, BlochMomentum, Calculus, PoissonOptions, ScalarField, State8, VectorField};

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Operator identifiers accepted by [`apply_operator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OperatorId {
    MPhys,
    MExt,
    A,
    J,
    JInv,
    Delta8,
    VMat,
    FMat,
    BlockA,
    BlockB,
    BlockC,
    BlockD,
    QLambda,
    WLambda,
    Pi,
}

impl OperatorId {
    pub const ALL: [OperatorId; 15] = [
        OperatorId::MPhys,
        OperatorId::MExt,
        OperatorId::A,
        OperatorId::J,
        OperatorId::JInv,
        OperatorId::Delta8,
        OperatorId::VMat,
        OperatorId::FMat,
        OperatorId::BlockA,
        OperatorId::BlockB,
        OperatorId::BlockC,
        OperatorId::BlockD,
        OperatorId::QLambda,
        OperatorId::WLambda,
        OperatorId::Pi,
    ];

    pub fn needs_lambda(self) -> bool {
        matches!(self, OperatorId::QLambda | OperatorId::WLambda)
    }

    pub fn name(self) -> &'static str {
        match self {
            OperatorId::MPhys => "M_PHYS",
            OperatorId::MExt => "M_EXT",
            OperatorId::A => "A",
            OperatorId::J => "J",
            OperatorId::JInv => "J_INV",
            OperatorId::Delta8 => "DELTA8",
            OperatorId::VMat => "V_MAT",
            OperatorId::FMat => "F_MAT",
            OperatorId::BlockA => "BLOCK_a",
            OperatorId::BlockB => "BLOCK_b",
            OperatorId::BlockC => "BLOCK_c",
            OperatorId::BlockD => "BLOCK_d",
            OperatorId::QLambda => "Q_LAMBDA",
            OperatorId::WLambda => "W_LAMBDA",
            OperatorId::Pi => "PI",
        }
    }
}

/// How the zeroth-order part of the Schrödinger form is discretized.
///
/// `Pointwise` multiplies by the sampled `𝓥` and `𝓐`. `Induced` defines it as
/// the difference between the discrete factorized product and `−Δ₈ + 𝓕`,
/// which makes the discrete factorization hold exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchrodingerForm {
    #[default]
    Pointwise,
    Induced,
}

/// Operator actions bound to a backend, coefficients and Bloch momentum.
#[derive(Clone, Copy)]
pub struct Ops<'a> {
    pub calc: &'a dyn Calculus,
    pub c: &'a CoefficientSet,
    pub k: BlochMomentum,
    pub poisson: PoissonOptions,
    pub form: SchrodingerForm,
}

impl<'a> Ops<'a> {
    pub fn new(calc: &'a dyn Calculus, c: &'a CoefficientSet, k: BlochMomentum) -> Self {
        Self { calc, c, k, poisson: PoissonOptions::default(), form: SchrodingerForm::Pointwise }
    }

    pub fn with_form(mut self, form: SchrodingerForm) -> Self {
        self.form = form;
        self
    }

    pub fn with_poisson(mut self, p: PoissonOptions) -> Self {
        self.poisson = p;
        self
    }

    fn zero_scalar(&self) -> ScalarField {
        ScalarField::zeros(*self.c.grid())
    }

    fn grad(&self, f: &ScalarField) -> VectorField {
        self.calc.grad(f, &self.k)
    }

    fn div(&self, v: &VectorField) -> ScalarField {
        self.calc.div(v, &self.k)
    }

    fn curl(&self, v: &VectorField) -> VectorField {
        self.calc.curl(v, &self.k)
    }

    fn check(&self, u: &State8) -> Result<()> {
        u.grid().check_same(self.c.grid())
    }

    /// Maxwell operator on the `(E, H)` blocks; scalar outputs are zero.
    pub fn m_phys(&self, u: &State8) -> State8 {
        let c = self.c;
        let e = self.curl(&u.h).times(&c.eps_inv).scale(I);
        let h = self.curl(&u.e).times(&c.mu_inv).scale(-I);
        State8 { e, h, phi: self.zero_scalar(), psi: self.zero_scalar() }
    }

    /// Extended operator `𝓜`.
    pub fn m_ext(&self, u: &State8) -> State8 {
        let c = self.c;
        let e = &self.curl(&u.h).times(&c.eps_inv) + &self.grad(&(&c.eps_inv * &u.psi));
        let h = &self.grad(&(&c.mu_inv * &u.phi)) - &self.curl(&u.e).times(&c.mu_inv);
        let phi = &c.epsmu_inv * &self.div(&u.h.times(&c.mu));
        let psi = &c.epsmu_inv * &self.div(&u.e.times(&c.eps));
        State8 { e: e.scale(I), h: h.scale(I), phi: phi.scale(I), psi: psi.scale(I) }
    }

    /// `𝓐`, zeroth order, built from `z = ∇((εμ)^{-1})`.
    pub fn a(&self, u: &State8) -> State8 {
        let c = self.c;
        let e = &cross_collocated(&c.z, &u.h) + &c.z.times(&u.psi);
        let h = &cross_collocated(&c.z, &u.e) - &c.z.times(&u.phi);
        State8 {
            e: e.times(&c.mu).scale(-I),
            h: h.times(&c.eps).scale(I),
            phi: self.zero_scalar(),
            psi: self.zero_scalar(),
        }
    }

    /// `𝓙 = diag(ε^{-1/2}, μ^{-1/2}, μ^{1/2}, ε^{1/2})`.
    pub fn j(&self, u: &State8) -> State8 {
        let c = self.c;
        State8 { e: u.e.times(&c.eps_mhalf), h: u.h.times(&c.mu_mhalf), phi: &u.phi * &c.mu_half, psi: &u.psi * &c.eps_half }
    }

    pub fn j_inv(&self, u: &State8) -> State8 {
        let c = self.c;
        State8 { e: u.e.times(&c.eps_half), h: u.h.times(&c.mu_half), phi: &u.phi * &c.mu_mhalf, psi: &u.psi * &c.eps_mhalf }
    }

    /// Componentwise Laplacian `Δ₈`.
    pub fn delta8(&self, u: &State8) -> State8 {
        u.map(|f| self.calc.laplacian(f, &self.k))
    }

    /// `𝓥 = diag(V(ε), V(μ), v(μ), v(ε))`.
    pub fn v_mat(&self, u: &State8) -> State8 {
        let c = self.c;
        State8 { e: c.vmat_eps.apply(&u.e), h: c.vmat_mu.apply(&u.h), phi: &c.v_mu * &u.phi, psi: &c.v_eps * &u.psi }
    }

    /// `F(f, g, s) = f^{-1/2} ∇(εμ) × ∇(g^{-1/2} s)`.
    fn f_term(&self, f_mhalf: &ScalarField, g_mhalf: &ScalarField, s: &ScalarField) -> VectorField {
        cross_collocated(&self.c.grad_epsmu, &self.grad(&(g_mhalf * s))).times(f_mhalf)
    }

    /// `𝓕`: `E ← −F(ε, μ, φ)`, `H ← F(μ, ε, ψ)`.
    pub fn f_mat(&self, u: &State8) -> State8 {
        let c = self.c;
        State8 {
            e: -&self.f_term(&c.eps_mhalf, &c.mu_mhalf, &u.phi),
            h: self.f_term(&c.mu_mhalf, &c.eps_mhalf, &u.psi),
            phi: self.zero_scalar(),
            psi: self.zero_scalar(),
        }
    }

    /// `a(f, g) w = −f^{1/2} g ∇×(g^{-1} ∇×(f^{-1/2} w)) + (fg) f^{1/2} ∇(f^{-1} (fg)^{-1} div(f^{1/2} w))`.
    fn a_block(&self, f: Pair<'_>, g: Pair<'_>, w: &VectorField) -> VectorField {
        let c = self.c;
        let t1 = self.curl(&self.curl(&w.times(f.mhalf)).times(g.inv)).times(g.val).times(f.half);
        let inner = &(f.inv * &c.epsmu_inv) * &self.div(&w.times(f.half));
        let t2 = self.grad(&inner).times(&c.epsmu).times(f.half);
        &t2 - &t1
    }

    /// `b(f) s = f^{-1/2} div(f ∇(f^{-1/2} s))`.
    fn b_block(&self, f: Pair<'_>, s: &ScalarField) -> ScalarField {
        &self.div(&self.grad(&(f.mhalf * s)).times(f.val)) * f.mhalf
    }

    /// `c(f) w = εμ (f^{1/2} z × ∇×(f^{-1/2} w) − z f^{-1/2} div(f^{1/2} w))`.
    fn c_block(&self, f: Pair<'_>, w: &VectorField) -> VectorField {
        let c = self.c;
        let t1 = cross_collocated(&c.z, &self.curl(&w.times(f.mhalf))).times(f.half);
        let t2 = c.z.times(&(f.mhalf * &self.div(&w.times(f.half))));
        (&t1 - &t2).times(&c.epsmu)
    }

    /// `d(f) s = (εμ)^{3/2} f^{1/2} z × ∇(f^{-1/2} s)`.
    fn d_block(&self, f: Pair<'_>, s: &ScalarField) -> VectorField {
        let c = self.c;
        let w = c.epsmu.map(|x| C64::new(x.re.powf(1.5), 0.0));
        cross_collocated(&c.z, &self.grad(&(f.mhalf * s))).times(&(&w * f.half))
    }

    fn eps_pair(&self) -> Pair<'_> {
        let c = self.c;
        Pair { val: &c.eps, half: &c.eps_half, mhalf: &c.eps_mhalf, inv: &c.eps_inv }
    }

    fn mu_pair(&self) -> Pair<'_> {
        let c = self.c;
        Pair { val: &c.mu, half: &c.mu_half, mhalf: &c.mu_mhalf, inv: &c.mu_inv }
    }

    /// `(a(ε,μ) E, a(μ,ε) H, 0, 0)`.
    pub fn block_a(&self, u: &State8) -> State8 {
        State8 {
            e: self.a_block(self.eps_pair(), self.mu_pair(), &u.e),
            h: self.a_block(self.mu_pair(), self.eps_pair(), &u.h),
            phi: self.zero_scalar(),
            psi: self.zero_scalar(),
        }
    }

    /// `(0, 0, b(μ) φ, b(ε) ψ)`.
    pub fn block_b(&self, u: &State8) -> State8 {
        State8 {
            e: VectorField::zeros(*self.c.grid()),
            h: VectorField::zeros(*self.c.grid()),
            phi: self.b_block(self.mu_pair(), &u.phi),
            psi: self.b_block(self.eps_pair(), &u.psi),
        }
    }

    /// `(c(ε) E, c(μ) H, 0, 0)`.
    pub fn block_c(&self, u: &State8) -> State8 {
        State8 {
            e: self.c_block(self.eps_pair(), &u.e),
            h: self.c_block(self.mu_pair(), &u.h),
            phi: self.zero_scalar(),
            psi: self.zero_scalar(),
        }
    }

    /// `(d(μ) φ, d(ε) ψ, 0, 0)`.
    pub fn block_d(&self, u: &State8) -> State8 {
        State8 {
            e: self.d_block(self.mu_pair(), &u.phi),
            h: self.d_block(self.eps_pair(), &u.psi),
            phi: self.zero_scalar(),
            psi: self.zero_scalar(),
        }
    }

    /// `−F(g, f, ·)` evaluated with `f = μ` on φ (into E) and `f = ε` on ψ
    /// (into H), the right-hand side matching [`Ops::block_d`].
    pub fn minus_f_swapped(&self, u: &State8) -> State8 {
        let c = self.c;
        State8 {
            e: -&self.f_term(&c.eps_mhalf, &c.mu_mhalf, &u.phi),
            h: -&self.f_term(&c.mu_mhalf, &c.eps_mhalf, &u.psi),
            phi: self.zero_scalar(),
            psi: self.zero_scalar(),
        }
    }

    /// `εμ 𝓙^{-1} w`.
    pub fn epsmu_j_inv(&self, w: &State8) -> State8 {
        self.j_inv(w).times(&self.c.epsmu)
    }

    /// `Q(λ) = εμ 𝓙^{-1}(𝓜 + 𝓐 + λ)`.
    pub fn q_lambda(&self, u: &State8, lambda: C64) -> State8 {
        let mut w = &self.m_ext(u) + &self.a(u);
        w.axpy(lambda, u);
        self.epsmu_j_inv(&w)
    }

    /// `εμ 𝓙^{-1}(λ𝓐 + λ²) 𝓙 u`.
    fn lambda_shift(&self, u: &State8, lambda: C64) -> State8 {
        let ju = self.j(u);
        let mut w = self.a(&ju).scale(lambda);
        w.axpy(lambda * lambda, &ju);
        self.epsmu_j_inv(&w)
    }

    /// `εμ 𝓙^{-1}(𝓜 + 𝓐 + λ)(𝓜 − λ) 𝓙 u`.
    pub fn factorized(&self, u: &State8, lambda: C64) -> State8 {
        let ju = self.j(u);
        let mut w = self.m_ext(&ju);
        w.axpy(-lambda, &ju);
        let mut t = &self.m_ext(&w) + &self.a(&w);
        t.axpy(lambda, &w);
        self.epsmu_j_inv(&t)
    }

    /// `𝓦(λ) u`; with [`SchrodingerForm::Pointwise`] this is
    /// `𝓥u − εμ𝓙^{-1}(λ𝓐 + λ²)𝓙u + ε₀μ₀λ² u`.
    pub fn w_lambda(&self, u: &State8, lambda: C64) -> State8 {
        let shift = self.c.eps0_mu0() * lambda * lambda;
        let mut out = match self.form {
            SchrodingerForm::Pointwise => &self.v_mat(u) - &self.lambda_shift(u, lambda),
            SchrodingerForm::Induced => {
                let s0 = &self.factorized(u, lambda) - &self.f_mat(u);
                &s0 + &self.delta8(u)
            }
        };
        out.axpy(shift, u);
        out
    }

    /// `S(λ) u = −Δ₈u + 𝓦(λ)u − ε₀μ₀λ² u`, the operator inverted by `Z`.
    pub fn schrodinger(&self, u: &State8, lambda: C64) -> State8 {
        match self.form {
            SchrodingerForm::Pointwise => &(&self.v_mat(u) - &self.delta8(u)) - &self.lambda_shift(u, lambda),
            SchrodingerForm::Induced => &self.factorized(u, lambda) - &self.f_mat(u),
        }
    }

    pub fn pi(&self, u: &State8) -> Result<State8> {
        project_state(self.calc, u, &self.c.eps, &self.c.mu, &self.k, &self.poisson)
    }

    /// Both sides of `εμ𝓙^{-1}(𝓜+𝓐)𝓜𝓙 = −Δ₈ + 𝓥 + 𝓕`.
    pub fn eq7_sides(&self, u: &State8) -> (State8, State8) {
        let w = self.m_ext(&self.j(u));
        let lhs = self.epsmu_j_inv(&(&self.m_ext(&w) + &self.a(&w)));
        let rhs = &(&self.v_mat(u) - &self.delta8(u)) + &self.f_mat(u);
        (lhs, rhs)
    }

    /// Both sides of the λ-shifted identity. Uses the same evaluation order
    /// as [`Ops::eq7_sides`] so that `λ = 0` reproduces it bitwise.
    pub fn eq13_sides(&self, u: &State8, lambda: C64) -> (State8, State8) {
        let ju = self.j(u);
        let mut w = self.m_ext(&ju);
        w.axpy(-lambda, &ju);
        let mut t = &self.m_ext(&w) + &self.a(&w);
        t.axpy(lambda, &w);
        let lhs = self.epsmu_j_inv(&t);
        (lhs, self.eq13_rhs(u, lambda))
    }

    /// `(−Δ₈ + 𝓥 − εμ𝓙^{-1}(λ𝓐 + λ²)𝓙 + 𝓕) u`.
    pub fn eq13_rhs(&self, u: &State8, lambda: C64) -> State8 {
        let base = &self.v_mat(u) - &self.delta8(u);
        &(&base - &self.lambda_shift(u, lambda)) + &self.f_mat(u)
    }
}

#[derive(Clone, Copy)]
struct Pair<'a> {
    val: &'a ScalarField,
    half: &'a ScalarField,
    mhalf: &'a ScalarField,
    inv: &'a ScalarField,
}

/// Applies an operator by id; `λ` must be present exactly for the
/// λ-dependent ids.
pub fn apply_operator(ops: &Ops<'_>, id: OperatorId, u: &State8, lambda: Option<C64>) -> Result<State8> {
    ops.check(u)?;
    match (id.needs_lambda(), lambda) {
        (true, None) => return Err(Error::MissingSpectralParameter(id.name())),
        (false, Some(_)) => return Err(Error::UnexpectedSpectralParameter(id.name())),
        _ => {}
    }
    let lam = lambda.unwrap_or(ZERO);
    Ok(match id {
        OperatorId::MPhys => ops.m_phys(u),
        OperatorId::MExt => ops.m_ext(u),
        OperatorId::A => ops.a(u),
        OperatorId::J => ops.j(u),
        OperatorId::JInv => ops.j_inv(u),
        OperatorId::Delta8 => ops.delta8(u),
        OperatorId::VMat => ops.v_mat(u),
        OperatorId::FMat => ops.f_mat(u),
        OperatorId::BlockA => ops.block_a(u),
        OperatorId::BlockB => ops.block_b(u),
        OperatorId::BlockC => ops.block_c(u),
        OperatorId::BlockD => ops.block_d(u),
        OperatorId::QLambda => ops.q_lambda(u, lam),
        OperatorId::WLambda => ops.w_lambda(u, lam),
        OperatorId::Pi => ops.pi(u)?,
    })
}

/// Both sides of the main factorization identity.
pub fn compose_eq7_sides(ops: &Ops<'_>, u: &State8) -> Result<(State8, State8)> {
    ops.check(u)?;
    Ok(ops.eq7_sides(u))
}

/// Both sides of the λ-shifted factorization identity.
pub fn compose_eq13_sides(ops: &Ops<'_>, lambda: C64, u: &State8) -> Result<(State8, State8)> {
    ops.check(u)?;
    Ok(ops.eq13_sides(u, lambda))
}

#[cfg(test)]
mod tests;
