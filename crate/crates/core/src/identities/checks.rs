//! One routine per identity. Each evaluates both sides for a single trial
//! against a [`Calculus`], so the finite-difference oracle reuses it as is.

use num_complex::Complex64 as C64;

use super::{IdentityId, Trial};
use crate::error::{Error, Result};
use crate::field::pointwise::cross_collocated;
use crate::field::{BlochMomentum, Calculus, PoissonOptions, ScalarField, State8, VectorField};
use crate::operators::{CoefficientSet, ExtensionOps, ExtensionParams, Ops};

pub(crate) struct Env<'a> {
    pub calc: &'a dyn Calculus,
    pub c: &'a CoefficientSet,
    pub k: BlochMomentum,
    pub poisson: PoissonOptions,
}

pub(crate) enum Outcome {
    Sides { lhs: State8, rhs: State8 },
    /// Residual is `|a − b| / scale`.
    Scalars { a: C64, b: C64, scale: f64 },
    /// Already normalized quantity that must vanish.
    Vanishing { value: f64 },
}

impl Outcome {
    /// Relative residual; state norms are weighted by `(ε,ε,ε,μ,μ,μ,ε,μ)`.
    pub fn residual(&self, c: &CoefficientSet) -> Result<f64> {
        Ok(match self {
            Outcome::Sides { lhs, rhs } => {
                let d = c.weighted_norm(&(lhs - rhs))?;
                d / c.weighted_norm(lhs)?.max(c.weighted_norm(rhs)?).max(1e-14)
            }
            Outcome::Scalars { a, b, scale } => (a - b).norm() / scale.max(1e-300),
            Outcome::Vanishing { value } => *value,
        })
    }
}

fn from_vectors(e: VectorField, h: VectorField) -> State8 {
    let g = *e.grid();
    State8 { e, h, phi: ScalarField::zeros(g), psi: ScalarField::zeros(g) }
}

fn from_vector(e: VectorField) -> State8 {
    let g = *e.grid();
    from_vectors(e, VectorField::zeros(g))
}

fn from_scalars(phi: ScalarField, psi: ScalarField) -> State8 {
    let g = *phi.grid();
    State8 { e: VectorField::zeros(g), h: VectorField::zeros(g), phi, psi }
}

/// `exp(0.3 g)` for a real seed field `g` with unit sup norm.
pub(crate) fn positive_from(seed: &ScalarField) -> ScalarField {
    seed.map(|z| C64::new((0.3 * z.re).exp(), 0.0))
}

impl Env<'_> {
    fn ops(&self) -> Ops<'_> {
        Ops::new(self.calc, self.c, self.k).with_poisson(self.poisson)
    }

    fn grad(&self, f: &ScalarField) -> VectorField {
        self.calc.grad(f, &self.k)
    }

    fn curl(&self, v: &VectorField) -> VectorField {
        self.calc.curl(v, &self.k)
    }

    fn div(&self, v: &VectorField) -> ScalarField {
        self.calc.div(v, &self.k)
    }

    /// `−f^{-1/2}∇×(f∇×(f^{-1/2}w)) + f^{1/2}∇(f^{-1}div(f^{1/2}w))` against
    /// `Δ₃w − V(f)w`.
    fn lemma_vector(&self, f: Coef<'_>, vmat: &crate::field::Tensor3, w: &VectorField) -> (VectorField, VectorField) {
        let t1 = self.curl(&self.curl(&w.times(f.mhalf)).times(f.val)).times(f.mhalf);
        let t2 = self.grad(&(f.inv * &self.div(&w.times(f.half)))).times(f.half);
        let rhs = &self.calc.vector_laplacian(w, &self.k) - &vmat.apply(w);
        (&t2 - &t1, rhs)
    }

    /// `f^{-1/2}div(f∇(f^{-1/2}s))` against `Δs − v(f)s`.
    fn lemma_scalar(&self, f: Coef<'_>, v: &ScalarField, s: &ScalarField) -> (ScalarField, ScalarField) {
        let lhs = &self.div(&self.grad(&(f.mhalf * s)).times(f.val)) * f.mhalf;
        let rhs = &self.calc.laplacian(s, &self.k) - &(v * s);
        (lhs, rhs)
    }

    /// `f∇(f^{-1})` against `−f^{-1}∇f` with coefficient derivatives.
    fn product_rule(&self, f: &ScalarField) -> Result<(VectorField, VectorField)> {
        let inv = crate::field::pointwise::reciprocal(f)?;
        let lhs = self.calc.coefficient_grad(&inv).times(f);
        let rhs = -&self.calc.coefficient_grad(f).times(&inv);
        Ok((lhs, rhs))
    }

    pub fn evaluate(&self, id: IdentityId, t: &Trial, lambda: Option<C64>) -> Result<Outcome> {
        let c = self.c;
        let ops = self.ops();
        let u = &t.state;
        let sides = |(lhs, rhs): (State8, State8)| Outcome::Sides { lhs, rhs };
        Ok(match id {
            IdentityId::Eq7 => sides(ops.eq7_sides(u)),
            IdentityId::Eq13 => {
                let lam = lambda.ok_or(Error::MissingSpectralParameter("EQ13"))?;
                sides(ops.eq13_sides(u, lam))
            }
            IdentityId::CommutatorEq37 => {
                let lhs = ops.pi(&ops.m_ext(u))?;
                let rhs = ops.m_ext(&ops.pi(u)?);
                sides((lhs, rhs))
            }
            IdentityId::CompressionPart => {
                let pu = ops.pi(u)?;
                sides((ops.pi(&ops.m_ext(&pu))?, ops.pi(&ops.m_phys(&pu))?))
            }
            IdentityId::Lemma1Eq15 => {
                let (le, re) = self.lemma_vector(Coef::eps(c), &c.vmat_eps, &u.e);
                let (lh, rh) = self.lemma_vector(Coef::mu(c), &c.vmat_mu, &u.h);
                sides((from_vectors(le, lh), from_vectors(re, rh)))
            }
            IdentityId::Lemma1Eq20 => {
                let (lp, rp) = self.lemma_scalar(Coef::mu(c), &c.v_mu, &u.phi);
                let (lq, rq) = self.lemma_scalar(Coef::eps(c), &c.v_eps, &u.psi);
                sides((from_scalars(lp, lq), from_scalars(rp, rq)))
            }
            IdentityId::MsquaredEq22 => {
                let lhs = ops.epsmu_j_inv(&ops.m_ext(&ops.m_ext(&ops.j(u))));
                sides((lhs, -&(&ops.block_a(u) + &ops.block_b(u))))
            }
            IdentityId::AmEq21 => {
                let lhs = ops.epsmu_j_inv(&ops.a(&ops.m_ext(&ops.j(u))));
                let d = ops.block_d(u);
                let d = State8 { h: -&d.h, ..d };
                sides((lhs, &d - &ops.block_c(u)))
            }
            IdentityId::DEq19 => sides((ops.block_d(u), ops.minus_f_swapped(u))),
            IdentityId::FProductEq27 => {
                let coef = if t.index.is_multiple_of(2) { &c.eps } else { &c.mu };
                let (l1, r1) = self.product_rule(&positive_from(&t.smooth[0]))?;
                let (l2, r2) = self.product_rule(coef)?;
                sides((from_vectors(l1, l2), from_vectors(r1, r2)))
            }
            IdentityId::CurlProductEq24 => {
                // Periodic factor s, Bloch factor v.
                let (s, v) = (&t.scalar, &t.vector);
                let ds = self.calc.grad(s, &BlochMomentum::ZERO);
                let rhs = &self.curl(v).times(s) + &cross_collocated(&ds, v);
                sides((from_vector(self.curl(&v.times(s))), from_vector(rhs)))
            }
            IdentityId::CurlCrossEq251 => {
                // Periodic s, Bloch w; (s·∇)w = Jac(w)s and (w·∇)s = Jac(s)w.
                let (s, w) = (&t.aux_vector, &t.vector);
                let zero = BlochMomentum::ZERO;
                let lhs = self.curl(&cross_collocated(s, w));
                let mut rhs = &s.times(&self.div(w)) - &w.times(&self.calc.div(s, &zero));
                rhs = &rhs - &self.calc.jacobian(w, &self.k).apply(s);
                rhs = &rhs + &self.calc.jacobian(s, &zero).apply(w);
                sides((from_vector(lhs), from_vector(rhs)))
            }
            IdentityId::HodgeDelta3 => {
                let v = &t.vector;
                let lhs = &self.grad(&self.div(v)) - &self.curl(&self.curl(v));
                sides((from_vector(lhs), from_vector(self.calc.vector_laplacian(v, &self.k))))
            }
            IdentityId::SelfAdjointMext => {
                let (x, y) = (u, &t.partner);
                let (mx, my) = (ops.m_ext(x), ops.m_ext(y));
                let a = c.inner(&mx, y)?;
                let b = c.inner(x, &my)?;
                let scale = (c.weighted_norm(&mx)? * c.weighted_norm(y)?).max(c.weighted_norm(x)? * c.weighted_norm(&my)?);
                Outcome::Scalars { a, b, scale }
            }
            IdentityId::ConstEpsmuDegeneration => {
                let n = c.weighted_norm(u)?.max(1e-300);
                let a = c.weighted_norm(&ops.a(u))? / n;
                let f = c.weighted_norm(&ops.f_mat(u))? / n;
                Outcome::Vanishing { value: a.max(f) }
            }
            IdentityId::GeneralizedExt => {
                let p = ExtensionParams::from_betas(c, positive_from(&t.smooth[1]), positive_from(&t.smooth[2]))?;
                sides(ExtensionOps::new(ops, &p)?.eq7_sides(u))
            }
        })
    }

    /// Relative residual of the main identity with `𝓕` dropped from the
    /// right-hand side.
    pub fn eq7_without_f(&self, u: &State8) -> Result<f64> {
        let ops = self.ops();
        let (lhs, _) = ops.eq7_sides(u);
        let rhs = &ops.v_mat(u) - &ops.delta8(u);
        Outcome::Sides { lhs, rhs }.residual(self.c)
    }

    /// Largest relative deviation of the extension built from the standard
    /// `α, β` from the default `𝓜, 𝓐, 𝓙`.
    pub fn standard_extension_deviation(&self, u: &State8) -> Result<f64> {
        let ops = self.ops();
        let p = ExtensionParams::standard(self.c);
        let x = ExtensionOps::new(ops, &p)?;
        let rel = |a: &State8, b: &State8| (a - b).l2_norm() / a.l2_norm().max(b.l2_norm()).max(1e-300);
        Ok(rel(&x.m(u), &ops.m_ext(u)).max(rel(&x.a(u), &ops.a(u))).max(rel(&x.j(u), &ops.j(u))))
    }
}

#[derive(Clone, Copy)]
struct Coef<'a> {
    val: &'a ScalarField,
    half: &'a ScalarField,
    mhalf: &'a ScalarField,
    inv: &'a ScalarField,
}

impl<'a> Coef<'a> {
    fn eps(c: &'a CoefficientSet) -> Self {
        Self { val: &c.eps, half: &c.eps_half, mhalf: &c.eps_mhalf, inv: &c.eps_inv }
    }

    fn mu(c: &'a CoefficientSet) -> Self {
        Self { val: &c.mu, half: &c.mu_half, mhalf: &c.mu_mhalf, inv: &c.mu_inv }
    }
}
