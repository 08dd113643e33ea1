use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::field::random::bandlimited_state;
use crate::field::{Grid, Spectral};
use crate::medium::Medium;

fn rel(a: &State8, b: &State8) -> f64 {
    (a - b).l2_norm() / a.l2_norm().max(b.l2_norm()).max(1e-300)
}

fn state(g: Grid, bl: usize, seed: u64) -> State8 {
    bandlimited_state(g, bl, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn j_inverts() {
    let m = Medium::periodic(0.3);
    let g = m.grid([8; 3]).unwrap();
    let c = m.coefficients(&Spectral, &g).unwrap();
    let ops = Ops::new(&Spectral, &c, BlochMomentum::ZERO);
    let u = state(g, 2, 1);
    assert!(rel(&ops.j(&ops.j_inv(&u)), &u) < 1e-13);
}

#[test]
fn lambda_presence_is_checked() {
    let g = Grid::cubic(4).unwrap();
    let c = CoefficientSet::constant(&Spectral, g, 1.0, 1.0).unwrap();
    let ops = Ops::new(&Spectral, &c, BlochMomentum::ZERO);
    let u = State8::zeros(g);
    assert!(matches!(apply_operator(&ops, OperatorId::QLambda, &u, None), Err(Error::MissingSpectralParameter(_))));
    assert!(matches!(
        apply_operator(&ops, OperatorId::MExt, &u, Some(C64::new(1.0, 0.0))),
        Err(Error::UnexpectedSpectralParameter(_))
    ));
    for id in OperatorId::ALL {
        let lam = id.needs_lambda().then_some(C64::new(0.3, 0.1));
        assert!(apply_operator(&ops, id, &u, lam).is_ok(), "{}", id.name());
    }
}

#[test]
fn constant_coefficient_symbol() {
    let g = Grid::cubic(6).unwrap();
    let c = CoefficientSet::constant(&Spectral, g, 1.0, 1.0).unwrap();
    let k = BlochMomentum([0.2, -0.1, 0.3]);
    let ops = Ops::new(&Spectral, &c, k);
    let n = [1.0, -2.0, 0.0];
    let xi = [n[0] + k.0[0], n[1] + k.0[1], n[2] + k.0[2]];
    let amp: [C64; 8] = std::array::from_fn(|i| C64::new(1.0 + i as f64, 0.5 - i as f64));
    let wave = ScalarField::from_fn(g, |x| C64::from_polar(1.0, n[0] * x[0] + n[1] * x[1] + n[2] * x[2]));
    let u = State8::from_components(std::array::from_fn(|i| wave.scale(amp[i])));
    let out = ops.m_ext(&u);
    let (e, h, p, q) = ([amp[0], amp[1], amp[2]], [amp[3], amp[4], amp[5]], amp[6], amp[7]);
    let cross = |a: [f64; 3], b: [C64; 3]| [b[2] * a[1] - b[1] * a[2], b[0] * a[2] - b[2] * a[0], b[1] * a[0] - b[0] * a[1]];
    let (xh, xe) = (cross(xi, h), cross(xi, e));
    // i·(iξ) = −ξ for each first-order entry.
    let want: [C64; 8] = [
        -xh[0] - xi[0] * q,
        -xh[1] - xi[1] * q,
        -xh[2] - xi[2] * q,
        xe[0] - xi[0] * p,
        xe[1] - xi[1] * p,
        xe[2] - xi[2] * p,
        -(xi[0] * h[0] + xi[1] * h[1] + xi[2] * h[2]),
        -(xi[0] * e[0] + xi[1] * e[1] + xi[2] * e[2]),
    ];
    for (comp, w) in out.components().iter().zip(want) {
        let expected = wave.scale(w);
        assert!((*comp - &expected).max_abs() < 1e-12);
    }
}

#[test]
fn constant_product_has_no_a_or_f() {
    let m = Medium::const_product(0.4);
    let g = m.grid([8; 3]).unwrap();
    let c = m.coefficients(&Spectral, &g).unwrap();
    let ops = Ops::new(&Spectral, &c, BlochMomentum([0.1, 0.0, 0.2]));
    let u = state(g, 2, 4);
    assert!(ops.a(&u).max_abs() < 1e-13);
    assert!(ops.f_mat(&u).max_abs() < 1e-13);
}

#[test]
fn eq7_constant_coefficients_is_minus_laplacian() {
    let g = Grid::cubic(8).unwrap();
    let c = CoefficientSet::constant(&Spectral, g, 1.0, 1.0).unwrap();
    let ops = Ops::new(&Spectral, &c, BlochMomentum([0.25, 0.0, 0.0]));
    let u = state(g, 2, 5);
    let (l, r) = ops.eq7_sides(&u);
    let lap = -&ops.delta8(&u);
    assert!(rel(&l, &lap) < 1e-13 && rel(&r, &lap) < 1e-13);
}

#[test]
fn eq13_at_zero_is_eq7_bitwise() {
    let m = Medium::periodic(0.3);
    let g = m.grid([8; 3]).unwrap();
    let c = m.coefficients(&Spectral, &g).unwrap();
    let ops = Ops::new(&Spectral, &c, BlochMomentum([0.1, 0.2, 0.0]));
    let u = state(g, 2, 6);
    let (l7, r7) = ops.eq7_sides(&u);
    let (l13, r13) = ops.eq13_sides(&u, C64::new(0.0, 0.0));
    assert_eq!(l7, l13);
    assert_eq!(r7, r13);
}

#[test]
fn eq13_constant_single_mode() {
    let g = Grid::cubic(6).unwrap();
    let c = CoefficientSet::constant(&Spectral, g, 2.0, 0.5).unwrap();
    let k = BlochMomentum([0.3, 0.0, -0.1]);
    let ops = Ops::new(&Spectral, &c, k);
    let lam = C64::new(0.7, 0.3);
    let n = [1.0, 1.0, -1.0];
    let wave = ScalarField::from_fn(g, |x| C64::from_polar(1.0, n[0] * x[0] + n[1] * x[1] + n[2] * x[2]));
    let u = State8::from_components(std::array::from_fn(|i| wave.scale(C64::new(1.0, i as f64))));
    let xi2: f64 = (0..3).map(|a| (n[a] + k.0[a]).powi(2)).sum();
    let want = u.scale(C64::new(xi2, 0.0) - lam * lam * c.eps0_mu0());
    let (l, r) = ops.eq13_sides(&u, lam);
    assert!(rel(&l, &want) < 1e-12 && rel(&r, &want) < 1e-12);
}

#[test]
fn eq7_holds_on_resolved_grid() {
    let m = Medium::periodic(0.3);
    let g = m.grid([24; 3]).unwrap();
    let c = m.coefficients(&Spectral, &g).unwrap();
    let ops = Ops::new(&Spectral, &c, BlochMomentum([0.3, 0.1, -0.2]));
    let u = state(g, 3, 7);
    let (l, r) = ops.eq7_sides(&u);
    assert!(rel(&l, &r) < 1e-8, "{}", rel(&l, &r));
}

#[test]
fn structural_zero_rows_and_columns() {
    let m = Medium::periodic(0.3);
    let g = m.grid([6; 3]).unwrap();
    let c = m.coefficients(&Spectral, &g).unwrap();
    let ops = Ops::new(&Spectral, &c, BlochMomentum([0.25, 0.0, 0.0]));
    let u = state(g, 2, 8);
    let a = ops.a(&u);
    assert!(a.phi.max_abs() == 0.0 && a.psi.max_abs() == 0.0);
    let f = ops.f_mat(&u.eh_part());
    assert!(f.max_abs() == 0.0);
}

#[test]
fn standard_extension_matches_default_operators() {
    let m = Medium::periodic(0.3);
    let g = m.grid([8; 3]).unwrap();
    let c = m.coefficients(&Spectral, &g).unwrap();
    let ops = Ops::new(&Spectral, &c, BlochMomentum([0.1, 0.0, 0.0]));
    let p = ExtensionParams::standard(&c);
    let x = ExtensionOps::new(ops, &p).unwrap();
    let u = state(g, 2, 9);
    assert!(rel(&x.m(&u), &ops.m_ext(&u)) < 1e-13);
    assert!(rel(&x.a(&u), &ops.a(&u)) < 1e-13);
    assert!(rel(&x.j(&u), &ops.j(&u)) < 1e-13);
}

#[test]
fn extension_constraints_enforced() {
    let m = Medium::periodic(0.3);
    let g = m.grid([6; 3]).unwrap();
    let c = m.coefficients(&Spectral, &g).unwrap();
    let mut p = ExtensionParams::random(&c, 1, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert!(p.validate(&c).is_ok());
    p.alpha1 = p.alpha1.scale_real(1.001);
    assert!(matches!(p.validate(&c), Err(Error::ConstraintViolation(_))));
}
