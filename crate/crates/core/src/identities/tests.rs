use super::*;

fn mild_context(n: usize, count: usize, bandlimit: usize) -> CheckContext {
    let m = Medium::periodic(0.3);
    let e = make_trial_ensemble(m.grid([n; 3]).unwrap(), 7, count, bandlimit).unwrap();
    let mut ctx = CheckContext::from_medium(&m, e, 2).unwrap();
    ctx.oracle.enabled = false;
    ctx
}

#[test]
fn ensemble_is_deterministic_and_bandlimited() {
    let g = Grid::cubic(12).unwrap();
    let a = make_trial_ensemble(g, 3, 2, 3).unwrap();
    let b = make_trial_ensemble(g, 3, 2, 3).unwrap();
    assert_eq!(a, b);
    for t in &a.trials {
        for f in t.state.components() {
            for (idx, z) in f.spectrum().iter().enumerate() {
                if g.modes_of(idx).iter().any(|m| m.abs() > 3) {
                    assert!(z.norm() < 1e-15);
                }
            }
        }
        assert!((t.state.l2_norm() - 1.0).abs() < 1e-12);
    }
    assert!(matches!(make_trial_ensemble(g, 3, 2, 5), Err(Error::BandlimitTooLarge { .. })));
}

#[test]
fn empty_ensemble_is_vacuous_pass() {
    let ctx = mild_context(8, 0, 2);
    let r = run_check(&ctx, IdentityId::Eq7, 1e-8, BlochMomentum::ZERO, None).unwrap();
    assert!(r.pass && r.residuals.is_empty() && !r.warnings.is_empty());
}

#[test]
fn lambda_contract() {
    let ctx = mild_context(8, 1, 2);
    assert!(run_check(&ctx, IdentityId::Eq13, 1e-8, BlochMomentum::ZERO, None).is_err());
    assert!(run_check(&ctx, IdentityId::Eq7, 1e-8, BlochMomentum::ZERO, Some(C64::new(1.0, 0.0))).is_err());
}

#[test]
fn names_round_trip() {
    for id in IdentityId::ALL {
        assert_eq!(id.name().parse::<IdentityId>().unwrap(), id);
        let j = serde_json::to_string(&id).unwrap();
        assert_eq!(j, format!("\"{}\"", id.name()));
    }
    assert!("EQ99".parse::<IdentityId>().is_err());
}

#[test]
fn constant_coefficients_eq7_at_floor() {
    let m = Medium::constant(1.0, 1.0);
    let e = make_trial_ensemble(m.grid([8; 3]).unwrap(), 1, 3, 2).unwrap();
    let mut ctx = CheckContext::from_medium(&m, e, 2).unwrap();
    ctx.oracle.enabled = false;
    let r = run_check(&ctx, IdentityId::Eq7, 1e-13, BlochMomentum([0.2, 0.0, 0.1]), None).unwrap();
    assert!(r.pass, "{}", r.max_residual);
}

#[test]
fn every_identity_passes_on_small_grid() {
    let ctx = mild_context(12, 2, 3);
    let k = BlochMomentum([0.25, 0.1, -0.15]);
    for id in IdentityId::ALL {
        let lam = id.needs_lambda().then_some(C64::new(0.7, 0.3));
        let r = run_check(&ctx, id, id.default_tolerance(), k, lam).unwrap();
        assert!(r.pass, "{id}: {:e}", r.max_residual);
        if id == IdentityId::ConstEpsmuDegeneration {
            assert!(r.skipped);
        }
    }
}

#[test]
fn wrong_sign_is_caught() {
    // A deliberately broken right-hand side must fail, guarding against a
    // check that compares a quantity with itself.
    let ctx = mild_context(8, 1, 2);
    let c = ctx.working();
    let env = Env { calc: &Spectral, c, k: BlochMomentum::ZERO, poisson: ctx.poisson };
    let t = &ctx.lifted[0];
    let Outcome::Sides { lhs, rhs } = env.evaluate(IdentityId::DEq19, t, None).unwrap() else { panic!() };
    let broken = Outcome::Sides { lhs, rhs: -&rhs };
    assert!(broken.residual(c).unwrap() > 0.5);
}

#[test]
fn oracle_converges_for_eq7() {
    let m = Medium::periodic(0.3);
    let e = make_trial_ensemble(m.grid([8; 3]).unwrap(), 5, 1, 2).unwrap();
    let ctx = CheckContext::from_medium(&m, e, 2).unwrap();
    let r = run_check(&ctx, IdentityId::Eq7, 1e-8, BlochMomentum([0.1, 0.0, 0.0]), None).unwrap();
    let o = r.oracle.unwrap();
    assert!(o.consistent, "{o:?}");
    assert!(o.observed_order.unwrap() > 3.0, "{o:?}");
}

#[test]
fn constant_product_suite_degenerates() {
    let m = Medium::const_product(0.3);
    let cfg = SuiteConfig {
        grids: vec![[8; 3]],
        count: 2,
        bandlimit: 2,
        identities: Some(vec![IdentityId::Eq7, IdentityId::ConstEpsmuDegeneration]),
        oracle: OracleConfig { enabled: false, ..Default::default() },
        ..Default::default()
    };
    let s = run_suite(&m, &cfg).unwrap();
    assert!(s.all_pass);
    for r in &s.reports {
        assert!(!r.skipped);
        if r.identity == IdentityId::Eq7 {
            assert!(r.metrics["max_residual_without_f"] <= 1e-8);
        }
    }
}
