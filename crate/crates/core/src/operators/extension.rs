//! Extension of the Maxwell operator with free positive weights
//! `α₁, α₂, β₁, β₂` tied to `ε, μ` by `α₁β₁² = ε^{-1}μ^{-2}` and
//! `α₂β₂² = ε^{-2}μ^{-1}`.

use num_complex::Complex64 as C64;
use rand::Rng;

use super::{CoefficientSet, Ops};
use crate::error::{Error, Result};
use crate::field::pointwise::{cross_collocated, reciprocal};
use crate::field::random::bandlimited_scalar;
use crate::field::{ScalarField, State8};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone)]
pub struct ExtensionParams {
    pub alpha1: ScalarField,
    pub alpha2: ScalarField,
    pub beta1: ScalarField,
    pub beta2: ScalarField,
}

pub const CONSTRAINT_TOL: f64 = 1e-10;

impl ExtensionParams {
    /// `α₁ = ε`, `α₂ = μ`, `β₁ = β₂ = (εμ)^{-1}`.
    pub fn standard(c: &CoefficientSet) -> Self {
        Self { alpha1: c.eps.clone(), alpha2: c.mu.clone(), beta1: c.epsmu_inv.clone(), beta2: c.epsmu_inv.clone() }
    }

    /// Solves the constraints for `α` given positive `β₁, β₂`.
    pub fn from_betas(c: &CoefficientSet, beta1: ScalarField, beta2: ScalarField) -> Result<Self> {
        let b1sq_inv = reciprocal(&(&beta1 * &beta1))?;
        let b2sq_inv = reciprocal(&(&beta2 * &beta2))?;
        let alpha1 = &(&c.eps_inv * &(&c.mu_inv * &c.mu_inv)) * &b1sq_inv;
        let alpha2 = &(&(&c.eps_inv * &c.eps_inv) * &c.mu_inv) * &b2sq_inv;
        Ok(Self { alpha1, alpha2, beta1, beta2 })
    }

    /// Random admissible parameters: `β_i = exp(0.3 g_i)` for smooth random
    /// real `g_i` normalized to unit sup norm.
    pub fn random<R: Rng + ?Sized>(c: &CoefficientSet, bandlimit: usize, rng: &mut R) -> Result<Self> {
        let g = *c.grid();
        let mut beta = || {
            let f = bandlimited_scalar(g, bandlimit, rng);
            let f = f.map(|z| C64::new(z.re, 0.0));
            let s = f.max_abs().max(1e-300);
            f.map(|z| C64::new((0.3 * z.re / s).exp(), 0.0))
        };
        let b1 = beta();
        let b2 = beta();
        Self::from_betas(c, b1, b2)
    }

    /// Pointwise relative violation of both constraints.
    pub fn constraint_violation(&self, c: &CoefficientSet) -> f64 {
        let mut worst: f64 = 0.0;
        let d = self.alpha1.data().iter().zip(self.beta1.data()).zip(c.eps.data().iter().zip(c.mu.data()));
        for ((a, b), (e, m)) in d {
            let want = 1.0 / (e.re * m.re * m.re);
            worst = worst.max(((a * b * b).re - want).abs() / want);
        }
        let d = self.alpha2.data().iter().zip(self.beta2.data()).zip(c.eps.data().iter().zip(c.mu.data()));
        for ((a, b), (e, m)) in d {
            let want = 1.0 / (e.re * e.re * m.re);
            worst = worst.max(((a * b * b).re - want).abs() / want);
        }
        worst
    }

    pub fn validate(&self, c: &CoefficientSet) -> Result<()> {
        for (name, f) in [("alpha1", &self.alpha1), ("alpha2", &self.alpha2), ("beta1", &self.beta1), ("beta2", &self.beta2)] {
            f.grid().check_same(c.grid())?;
            let min = f.min_real();
            if !(min > 0.0) {
                return Err(Error::NonPositive { what: name.into(), min, floor: 0.0 });
            }
        }
        let v = self.constraint_violation(c);
        if !(v <= CONSTRAINT_TOL) {
            return Err(Error::ConstraintViolation(format!("relative violation {v:e} exceeds {CONSTRAINT_TOL:e}")));
        }
        Ok(())
    }
}

/// Extended operators for a given choice of `α, β`.
pub struct ExtensionOps<'a> {
    pub ops: Ops<'a>,
    ab1: ScalarField,
    ab2: ScalarField,
    p: &'a ExtensionParams,
    a_phi: ScalarField,
    a_psi: ScalarField,
    j_phi: ScalarField,
    j_psi: ScalarField,
    jinv_phi: ScalarField,
    jinv_psi: ScalarField,
}

impl<'a> ExtensionOps<'a> {
    pub fn new(ops: Ops<'a>, p: &'a ExtensionParams) -> Result<Self> {
        p.validate(ops.c)?;
        let c = ops.c;
        let ab1 = &p.alpha1 * &p.beta1;
        let ab2 = &p.alpha2 * &p.beta2;
        let a_phi = reciprocal(&(&p.beta1 * &c.mu))?;
        let a_psi = reciprocal(&(&p.beta2 * &c.eps))?;
        let j_phi = &reciprocal(&ab1)? * &c.mu_mhalf;
        let j_psi = &reciprocal(&ab2)? * &c.eps_mhalf;
        let jinv_phi = reciprocal(&j_phi)?;
        let jinv_psi = reciprocal(&j_psi)?;
        Ok(Self { ops, ab1, ab2, p, a_phi, a_psi, j_phi, j_psi, jinv_phi, jinv_psi })
    }

    pub fn m(&self, u: &State8) -> State8 {
        let (o, c) = (&self.ops, self.ops.c);
        let e = &o.calc.curl(&u.h, &o.k).times(&c.eps_inv) + &o.calc.grad(&(&self.ab2 * &u.psi), &o.k);
        let h = &o.calc.grad(&(&self.ab1 * &u.phi), &o.k) - &o.calc.curl(&u.e, &o.k).times(&c.mu_inv);
        let phi = &self.p.beta1 * &o.calc.div(&u.h.times(&c.mu), &o.k);
        let psi = &self.p.beta2 * &o.calc.div(&u.e.times(&c.eps), &o.k);
        State8 { e: e.scale(I), h: h.scale(I), phi: phi.scale(I), psi: psi.scale(I) }
    }

    pub fn a(&self, u: &State8) -> State8 {
        let c = self.ops.c;
        let e = &cross_collocated(&c.z, &u.h).times(&c.mu) + &c.z.times(&(&self.a_psi * &u.psi));
        let h = &cross_collocated(&c.z, &u.e).times(&c.eps) - &c.z.times(&(&self.a_phi * &u.phi));
        let g = *c.grid();
        State8 { e: e.scale(-I), h: h.scale(I), phi: ScalarField::zeros(g), psi: ScalarField::zeros(g) }
    }

    pub fn j(&self, u: &State8) -> State8 {
        let c = self.ops.c;
        State8 { e: u.e.times(&c.eps_mhalf), h: u.h.times(&c.mu_mhalf), phi: &u.phi * &self.j_phi, psi: &u.psi * &self.j_psi }
    }

    pub fn j_inv(&self, u: &State8) -> State8 {
        let c = self.ops.c;
        State8 { e: u.e.times(&c.eps_half), h: u.h.times(&c.mu_half), phi: &u.phi * &self.jinv_phi, psi: &u.psi * &self.jinv_psi }
    }

    /// Both sides of the main identity for the extended operators.
    pub fn eq7_sides(&self, u: &State8) -> (State8, State8) {
        let o = &self.ops;
        let w = self.m(&self.j(u));
        let lhs = self.j_inv(&(&self.m(&w) + &self.a(&w))).times(&o.c.epsmu);
        let rhs = &(&o.v_mat(u) - &o.delta8(u)) + &o.f_mat(u);
        (lhs, rhs)
    }
}

/// Both sides of the main identity with the operators built from `p`.
pub fn generalized_extension(ops: &Ops<'_>, p: &ExtensionParams, u: &State8) -> Result<(State8, State8)> {
    u.grid().check_same(ops.c.grid())?;
    let x = ExtensionOps::new(*ops, p)?;
    Ok(x.eq7_sides(u))
}
