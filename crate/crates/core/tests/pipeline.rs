//! End-to-end use of the public API on small grids.

use emfactor::bloch::{compute_bands, BlochPath, DEFAULT_MEMORY_CAP};
use emfactor::field::{BlochMomentum, Spectral};
use emfactor::identities::{run_suite, IdentityId, OracleConfig, SuiteConfig};
use emfactor::medium::{Medium, PRESETS};
use emfactor::field::random::bandlimited_state;
use emfactor::resolvent::{rm_apply, DenseShiftedM};
use emfactor::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn every_preset_validates_and_derives_coefficients() {
    for name in PRESETS {
        let m = Medium::preset(name, None).unwrap();
        m.validate().unwrap();
        let c = m.coefficients(&Spectral, &m.grid([4; 3]).unwrap()).unwrap();
        assert!(c.eps.min_real() >= m.c0, "{name}");
    }
}

#[test]
fn suite_residuals_shrink_under_refinement() {
    let cfg = SuiteConfig {
        grids: vec![[8; 3], [12; 3]],
        count: 3,
        bandlimit: 3,
        identities: Some(vec![IdentityId::Eq7, IdentityId::Eq13, IdentityId::HodgeDelta3]),
        oracle: OracleConfig { enabled: false, ..Default::default() },
        ..Default::default()
    };
    let r = run_suite(&Medium::periodic(0.3), &cfg).unwrap();
    // Per grid: one EQ13 report per (k, λ) and one of each other identity per k.
    assert_eq!(r.reports.len(), 2 * cfg.ks.len() * (2 + cfg.lambdas.len()));
    let worst = |n: usize, id: IdentityId| {
        r.reports.iter().filter(|x| x.grid == [n; 3] && x.identity == id).map(|x| x.max_residual).fold(0.0, f64::max)
    };
    // The inverse coefficients are not bandlimited, so EQ7 and EQ13 are
    // limited by resolution; the Hodge identity is exact at any N.
    for id in [IdentityId::Eq7, IdentityId::Eq13] {
        assert!(worst(12, id) < 0.1 * worst(8, id), "{id}: {} {}", worst(8, id), worst(12, id));
    }
    assert!(worst(8, IdentityId::HodgeDelta3) < 1e-12);
}

#[test]
fn bands_are_symmetric_and_real_k_hermitian() {
    let m = Medium::periodic(0.3);
    let c = m.coefficients(&Spectral, &m.grid([4; 3]).unwrap()).unwrap();
    let t = compute_bands(&c, &BlochPath::gamma_x(3).unwrap(), 1.5, DEFAULT_MEMORY_CAP).unwrap();
    assert!(t.max_hermitian_defect() < 1e-12);
    for s in &t.samples {
        // The operator anticommutes with the sign flip of (H, φ), so the
        // spectrum is symmetric about zero.
        let mut neg: Vec<f64> = s.values.iter().map(|v| -v).collect();
        neg.sort_by(f64::total_cmp);
        let d = s.values.iter().zip(&neg).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(d < 1e-10, "{d}");
    }
}

#[test]
fn resolvent_agrees_with_dense_solve() {
    let m = Medium::periodic(0.3);
    let c = m.coefficients(&Spectral, &m.grid([4; 3]).unwrap()).unwrap();
    let k = BlochMomentum([0.1, 0.2, 0.0]);
    let lambda = C64::new(-0.3, 0.7);
    let u = bandlimited_state(*c.grid(), 1, &mut ChaCha8Rng::seed_from_u64(3));
    let x = rm_apply(&c, k, lambda, &u).unwrap();
    let y = DenseShiftedM::new(&c, k, lambda, DEFAULT_MEMORY_CAP).unwrap().solve(&u).unwrap();
    assert!((&x - &y).l2_norm() / y.l2_norm() < 1e-7);
}
