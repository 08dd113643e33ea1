use super::*;
use crate::medium::Medium;

fn constant(n: usize, eps: f64, mu: f64) -> CoefficientSet {
    CoefficientSet::constant(&Spectral, Grid::cubic(n).unwrap(), eps, mu).unwrap()
}

fn windowed(v: &[f64], w: f64) -> Vec<f64> {
    v.iter().copied().filter(|x| x.abs() <= w).collect()
}

#[test]
fn symbol_squares_to_scaled_identity() {
    let s = SymbolMatrix::new(2.0, 0.5, [0.3, -1.2, 0.7]);
    assert!(s.square_defect() < 1e-14);
}

#[test]
fn symbol_eigenvalues_have_multiplicity_four() {
    let xi = [1.25, 0.0, -1.0];
    let s = SymbolMatrix::new(1.0, 4.0, xi);
    let r = (xi.iter().map(|x| x * x).sum::<f64>() / 4.0).sqrt();
    let e = s.eigenvalues().unwrap();
    for (i, v) in e.iter().enumerate() {
        let want = if i < 4 { -r } else { r };
        assert!((v - want).abs() < 1e-13, "{e:?}");
    }
}

#[test]
fn free_bands_closed_form() {
    let v = free_symbol_bands(1.0, 1.0, [0.0; 3], 1);
    assert_eq!(v.len(), 27 * 8);
    let mut distinct: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let want = [0.0, 1.0, 2f64.sqrt(), 3f64.sqrt()];
    assert_eq!(distinct.len(), 4);
    assert!(distinct.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-14));
    let halved = free_symbol_bands(2.0, 2.0, [0.1, 0.0, 0.0], 1);
    let base = free_symbol_bands(1.0, 1.0, [0.1, 0.0, 0.0], 1);
    assert!(halved.iter().zip(&base).all(|(a, b)| (a - b / 2.0).abs() < 1e-15));
}

#[test]
fn constant_fiber_matches_free_bands() {
    let c = constant(4, 1.0, 1.0);
    let path = BlochPath::gamma_x(3).unwrap();
    let bt = compute_bands(&c, &path, 2.0, DEFAULT_MEMORY_CAP).unwrap();
    for s in &bt.samples {
        let free = windowed(&free_grid_bands(c.grid(), 1.0, 1.0, s.k), 2.0 - 1e-9);
        let got = windowed(&s.values, 2.0 - 1e-9);
        assert_eq!(got.len(), free.len());
        let dev = got.iter().zip(&free).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-12, "{dev}");
    }
    assert!(bt.max_hermitian_defect() < 1e-12);
}

#[test]
fn gamma_has_eightfold_zero() {
    let c = constant(4, 1.0, 1.0);
    let path = BlochPath::new(vec![[0.0; 3]], vec![]).unwrap();
    let bt = compute_bands(&c, &path, 0.5, DEFAULT_MEMORY_CAP).unwrap();
    let v = &bt.samples[0].values;
    assert_eq!(v.len(), 8);
    assert!(v.iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn random_coefficients_fiber_is_hermitian() {
    let m = Medium::periodic(0.3);
    let c = m.coefficients(&Spectral, &m.grid([4; 3]).unwrap()).unwrap();
    let f = assemble_fiber(&c, BlochMomentum([0.2, 0.1, 0.0]), DEFAULT_MEMORY_CAP).unwrap();
    let norm = (0..f.matrix.nrows()).map(|i| f.matrix[(i, i)].norm()).fold(1.0, f64::max);
    assert!(f.hermitian_defect < 1e-10 * norm);
}

#[test]
fn constant_fiber_is_periodic_in_k() {
    // A unit reciprocal shift permutes the lattice; with nonconstant
    // coefficients the truncated mode set changes too, so only the constant
    // case is exact.
    let c = constant(4, 2.0, 0.5);
    let path = BlochPath::new(vec![[0.2, 0.1, 0.0], [1.2, 0.1, 0.0]], vec![]).unwrap();
    let bt = compute_bands(&c, &path, 0.9, DEFAULT_MEMORY_CAP).unwrap();
    let (a, b) = (&bt.samples[0].values, &bt.samples[1].values);
    assert_eq!(a.len(), b.len());
    let dev = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-10, "{dev}");
}

#[test]
fn memory_cap_and_empty_path() {
    let c = constant(8, 1.0, 1.0);
    assert!(matches!(assemble_fiber(&c, BlochMomentum::ZERO, 1000), Err(Error::MemoryCap { .. })));
    assert!(BlochPath::new(vec![], vec![]).is_err());
}

#[test]
fn nonconstancy_on_constant_coefficients() {
    let c = constant(4, 1.0, 1.0);
    let bt = compute_bands(&c, &BlochPath::gamma_x(5).unwrap(), 2.0, DEFAULT_MEMORY_CAP).unwrap();
    let r = nonconstancy_report(&bt, 1e-3).unwrap();
    // The n = 0 bands run from 0 to 0.5 along the path.
    let lowest_positive = r.bands.iter().find(|b| b.min >= -1e-12 && b.max > 0.0).unwrap();
    assert!((lowest_positive.variation - 0.5).abs() < 1e-12);
    let single = BandTable { samples: bt.samples[..1].to_vec(), ..bt.clone() };
    assert!(matches!(nonconstancy_report(&single, 1e-3), Err(Error::InsufficientSamples { .. })));
}

#[test]
fn singularity_probe_constant_coefficients() {
    let c = constant(4, 1.0, 1.0);
    let k = BlochMomentum([0.25, 0.0, 0.0]);
    let lams = [C64::new(0.25, 0.0), C64::new(0.5, 0.0), C64::new(0.25, 0.1)];
    let p = eq13_singularity_crosscheck(&c, k, &lams, DEFAULT_MEMORY_CAP).unwrap();
    assert!(p[0].scaled < 1e-12);
    assert!(p[1].scaled > 1e-3);
    assert!(p[2].sigma_min > p[0].sigma_min);
}

#[test]
fn eigenpair_consistency_improves_with_n() {
    let m = Medium::periodic(0.3);
    let k = BlochMomentum([0.25, 0.0, 0.0]);
    let worst = |n: usize| {
        let c = m.coefficients(&Spectral, &m.grid([n; 3]).unwrap()).unwrap();
        let checks = eigenpair_consistency(&c, k, 5, DEFAULT_MEMORY_CAP).unwrap();
        checks.iter().map(|e| e.relative).fold(0.0, f64::max)
    };
    let (coarse, fine) = (worst(4), worst(6));
    assert!(fine < coarse / 10.0, "{coarse} {fine}");
}

#[test]
fn csv_has_header_and_rows() {
    let c = constant(4, 1.0, 1.0);
    let bt = compute_bands(&c, &BlochPath::gamma_x(2).unwrap(), 1.0, DEFAULT_MEMORY_CAP).unwrap();
    let csv = bt.to_csv();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "k_index,k1,k2,k3,band,lambda");
    assert_eq!(rows.len() - 1, bt.samples.iter().map(|s| s.values.len()).sum::<usize>());
}
