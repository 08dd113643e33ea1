use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::field::pointwise::{dot_collocated, reciprocal, sqrt};
use crate::field::{Calculus, Grid, ScalarField, State8, Tensor3, VectorField};

/// `ε`, `μ` and every field derived from them.
///
/// `s(f) = f^{-1/2} ∇ f^{1/2}`, `v(f) = |s|² + div s`,
/// `V(f) = v(f) Id − 2 Jac(s(f))`, `z = ∇((εμ)^{-1})`.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    pub eps: ScalarField,
    pub mu: ScalarField,
    pub eps0: f64,
    pub mu0: f64,
    pub c0: f64,
    pub eps_half: ScalarField,
    pub eps_mhalf: ScalarField,
    pub mu_half: ScalarField,
    pub mu_mhalf: ScalarField,
    pub eps_inv: ScalarField,
    pub mu_inv: ScalarField,
    pub epsmu: ScalarField,
    pub epsmu_inv: ScalarField,
    pub z: VectorField,
    pub grad_epsmu: VectorField,
    pub s_eps: VectorField,
    pub s_mu: VectorField,
    pub v_eps: ScalarField,
    pub v_mu: ScalarField,
    pub vmat_eps: Tensor3,
    pub vmat_mu: Tensor3,
}

fn check_real(f: &ScalarField, what: &str) -> Result<()> {
    if f.max_imag() > 1e-12 * f.max_abs().max(1.0) {
        return Err(Error::InvalidInput(format!("{what} must be real-valued")));
    }
    Ok(())
}

fn s_of(calc: &dyn Calculus, f_half: &ScalarField, f_mhalf: &ScalarField) -> VectorField {
    calc.coefficient_grad(f_half).times(f_mhalf)
}

fn v_and_vmat(calc: &dyn Calculus, s: &VectorField) -> (ScalarField, Tensor3) {
    let v = &dot_collocated(s, s) + &calc.coefficient_div(s);
    let jac = calc.coefficient_jacobian(s);
    let m = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut e = jac.m[i][j].scale_real(-2.0);
            if i == j {
                e.add_assign(&v);
            }
            e
        })
    });
    (v, Tensor3 { m })
}

impl CoefficientSet {
    /// Validates `min ε, min μ ≥ c₀` and computes the derived fields with the
    /// given derivative backend.
    pub fn derive(
        calc: &dyn Calculus,
        eps: ScalarField,
        mu: ScalarField,
        eps0: f64,
        mu0: f64,
        c0: f64,
    ) -> Result<Self> {
        eps.grid().check_same(mu.grid())?;
        check_real(&eps, "eps")?;
        check_real(&mu, "mu")?;
        for (what, f) in [("eps", &eps), ("mu", &mu)] {
            let min = f.min_real();
            if !(min >= c0) {
                return Err(Error::NonPositive { what: what.into(), min, floor: c0 });
            }
        }
        if !(eps0 > 0.0 && mu0 > 0.0) {
            return Err(Error::NonPositive { what: "eps0 * mu0".into(), min: eps0.min(mu0), floor: 0.0 });
        }
        let eps = eps.map(|z| C64::new(z.re, 0.0));
        let mu = mu.map(|z| C64::new(z.re, 0.0));
        let eps_half = sqrt(&eps)?;
        let mu_half = sqrt(&mu)?;
        let eps_mhalf = reciprocal(&eps_half)?;
        let mu_mhalf = reciprocal(&mu_half)?;
        let eps_inv = reciprocal(&eps)?;
        let mu_inv = reciprocal(&mu)?;
        let epsmu = &eps * &mu;
        let epsmu_inv = reciprocal(&epsmu)?;
        let z = calc.coefficient_grad(&epsmu_inv);
        let grad_epsmu = calc.coefficient_grad(&epsmu);
        let s_eps = s_of(calc, &eps_half, &eps_mhalf);
        let s_mu = s_of(calc, &mu_half, &mu_mhalf);
        let (v_eps, vmat_eps) = v_and_vmat(calc, &s_eps);
        let (v_mu, vmat_mu) = v_and_vmat(calc, &s_mu);
        Ok(Self {
            eps,
            mu,
            eps0,
            mu0,
            c0,
            eps_half,
            eps_mhalf,
            mu_half,
            mu_mhalf,
            eps_inv,
            mu_inv,
            epsmu,
            epsmu_inv,
            z,
            grad_epsmu,
            s_eps,
            s_mu,
            v_eps,
            v_mu,
            vmat_eps,
            vmat_mu,
        })
    }

    /// Constant coefficients on `grid`.
    pub fn constant(calc: &dyn Calculus, grid: Grid, eps: f64, mu: f64) -> Result<Self> {
        Self::derive(
            calc,
            ScalarField::constant(grid, C64::new(eps, 0.0)),
            ScalarField::constant(grid, C64::new(mu, 0.0)),
            eps,
            mu,
            eps.min(mu).min(super::super::medium::DEFAULT_C0),
        )
    }

    pub fn grid(&self) -> &Grid {
        self.eps.grid()
    }

    pub fn eps0_mu0(&self) -> f64 {
        self.eps0 * self.mu0
    }

    /// Weighted inner product with weights `(ε,ε,ε,μ,μ,μ,ε,μ)`.
    pub fn inner(&self, u: &State8, w: &State8) -> Result<C64> {
        crate::field::weighted_inner(u, w, &self.eps, &self.mu)
    }

    pub fn weighted_norm(&self, u: &State8) -> Result<f64> {
        Ok(self.inner(u, u)?.re.max(0.0).sqrt())
    }

    /// Short hex digest of the sampled `ε`, `μ` and the constants.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for f in [&self.eps, &self.mu] {
            for z in f.data() {
                h.update(z.re.to_le_bytes());
            }
        }
        for x in [self.eps0, self.mu0, self.c0] {
            h.update(x.to_le_bytes());
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Per-component weights `(ε,ε,ε,μ,μ,μ,ε,μ)` flattened like
    /// [`State8::to_flat`].
    pub fn flat_weights(&self) -> Vec<f64> {
        let e: Vec<f64> = self.eps.data().iter().map(|z| z.re).collect();
        let m: Vec<f64> = self.mu.data().iter().map(|z| z.re).collect();
        let mut out = Vec::with_capacity(8 * e.len());
        for c in 0..8 {
            out.extend_from_slice(if matches!(c, 0..=2 | 6) { &e } else { &m });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Spectral;

    fn g() -> Grid {
        Grid::cubic(16).unwrap()
    }

    #[test]
    fn constant_coefficients_have_no_derived_terms() {
        let c = CoefficientSet::constant(&Spectral, g(), 1.0, 1.0).unwrap();
        assert!(c.s_eps.c.iter().all(|f| f.max_abs() == 0.0));
        assert!(c.v_eps.max_abs() == 0.0 && c.vmat_mu.max_abs() == 0.0);
        assert!(c.z.c.iter().all(|f| f.max_abs() == 0.0));
    }

    #[test]
    fn exponential_profile_closed_form() {
        let a = 0.4;
        let eps = ScalarField::from_real_fn(g(), |x| (2.0 * a * x[0].sin()).exp());
        let mu = ScalarField::constant(g(), C64::new(1.0, 0.0));
        let c = CoefficientSet::derive(&Spectral, eps, mu, 1.0, 1.0, 0.1).unwrap();
        let s_exact = ScalarField::from_real_fn(g(), |x| a * x[0].cos());
        let v_exact = ScalarField::from_real_fn(g(), |x| (a * x[0].cos()).powi(2) - a * x[0].sin());
        assert!((&c.s_eps.c[0] - &s_exact).max_abs() < 1e-10);
        assert!(c.s_eps.c[1].max_abs() < 1e-14);
        assert!((&c.v_eps - &v_exact).max_abs() < 1e-9);
    }

    #[test]
    fn constant_product_kills_z() {
        let eps = ScalarField::from_real_fn(g(), |x| (0.3 * x[1].cos()).exp());
        let mu = ScalarField::from_real_fn(g(), |x| (-0.3 * x[1].cos()).exp());
        let c = CoefficientSet::derive(&Spectral, eps, mu, 1.0, 1.0, 0.1).unwrap();
        assert!(c.z.c.iter().all(|f| f.max_abs() < 1e-14));
        assert!(c.grad_epsmu.c.iter().all(|f| f.max_abs() < 1e-14));
    }

    #[test]
    fn positivity_is_enforced() {
        let eps = ScalarField::from_real_fn(g(), |x| 0.05 + x[0].cos().powi(2));
        let mu = ScalarField::constant(g(), C64::new(1.0, 0.0));
        assert!(matches!(
            CoefficientSet::derive(&Spectral, eps, mu, 1.0, 1.0, 0.1),
            Err(Error::NonPositive { .. })
        ));
    }
}
