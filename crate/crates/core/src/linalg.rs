//! Matrix-free Krylov solvers and densification helpers on flat complex
//! vectors.

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type Vector = Vec<C64>;

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients for a Hermitian positive (semi)definite
/// operator. `precond` must be Hermitian positive on the range of interest.
pub fn pcg(
    apply: impl Fn(&[C64]) -> Vector,
    precond: impl Fn(&[C64]) -> Vector,
    b: &[C64],
    tol: f64,
    atol: f64,
    max_iter: usize,
) -> Result<(Vector, SolveStats)> {
    let bn = norm(b);
    let mut x = vec![C64::new(0.0, 0.0); b.len()];
    if bn == 0.0 || bn <= atol {
        return Ok((x, SolveStats { iterations: 0, relative_residual: 0.0 }));
    }
    let target = (tol * bn).max(atol);
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for it in 0..max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap.re <= 0.0 {
            return Err(Error::NotConverged { solver: "pcg", iterations: it, residual: rel });
        }
        let alpha = rz / pap;
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        let rn = norm(&r);
        rel = rn / bn;
        if rn <= target {
            return Ok((x, SolveStats { iterations: it + 1, relative_residual: rel }));
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::NotConverged { solver: "pcg", iterations: max_iter, residual: rel })
}

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations, no
/// preconditioner.
pub fn gmres(
    apply: impl Fn(&[C64]) -> Vector,
    b: &[C64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<(Vector, SolveStats)> {
    let n = b.len();
    let bn = norm(b);
    let mut x = vec![C64::new(0.0, 0.0); n];
    if bn == 0.0 {
        return Ok((x, SolveStats { iterations: 0, relative_residual: 0.0 }));
    }
    let restart = restart.max(1);
    let mut total = 0;
    let mut rel = 1.0;
    while total < max_iter {
        let ax = apply(&x);
        let r: Vector = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        rel = beta / bn;
        if rel <= tol {
            return Ok((x, SolveStats { iterations: total, relative_residual: rel }));
        }
        let mut basis: Vec<Vector> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h: Vec<Vec<C64>> = Vec::new();
        let mut cs: Vec<C64> = Vec::new();
        let mut sn: Vec<C64> = Vec::new();
        let mut g = vec![C64::new(beta, 0.0)];
        let mut steps = 0;
        for j in 0..restart {
            if total >= max_iter {
                break;
            }
            total += 1;
            steps = j + 1;
            let mut w = apply(&basis[j]);
            let mut col = vec![C64::new(0.0, 0.0); j + 2];
            for (i, v) in basis.iter().enumerate() {
                col[i] = dot(v, &w);
                axpy(&mut w, -col[i], v);
            }
            // One reorthogonalization pass keeps the basis clean at tight tolerances.
            for (i, v) in basis.iter().enumerate() {
                let c = dot(v, &w);
                col[i] += c;
                axpy(&mut w, -c, v);
            }
            let wn = norm(&w);
            col[j + 1] = C64::new(wn, 0.0);
            for i in 0..j {
                let t = cs[i].conj() * col[i] + sn[i].conj() * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let (a, bb) = (col[j], col[j + 1]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if den == 0.0 { (C64::new(1.0, 0.0), C64::new(0.0, 0.0)) } else { (a / den, bb / den) };
            col[j] = c.conj() * a + s.conj() * bb;
            col[j + 1] = C64::new(0.0, 0.0);
            cs.push(c);
            sn.push(s);
            let gj = g[j];
            g[j] = c.conj() * gj;
            g.push(-s * gj);
            h.push(col);
            rel = g[j + 1].norm() / bn;
            if rel <= tol || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![C64::new(0.0, 0.0); steps];
        for i in (0..steps).rev() {
            let mut acc = g[i];
            for (l, yl) in y.iter().enumerate().skip(i + 1) {
                acc -= h[l][i] * yl;
            }
            y[i] = acc / h[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            axpy(&mut x, *yi, &basis[i]);
        }
        if rel <= tol {
            let ax = apply(&x);
            let r: Vector = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let true_rel = norm(&r) / bn;
            if true_rel <= tol * 10.0 {
                return Ok((x, SolveStats { iterations: total, relative_residual: true_rel }));
            }
        }
    }
    Err(Error::NotConverged { solver: "gmres", iterations: total, residual: rel })
}

/// Builds the dense matrix of a linear map by applying it to unit vectors.
pub fn densify(dim: usize, apply: impl Fn(&[C64]) -> Vector + Sync + Send) -> Mat<C64> {
    const CHUNK: usize = 64;
    let mut m = Mat::zeros(dim, dim);
    for start in (0..dim).step_by(CHUNK) {
        let width = CHUNK.min(dim - start);
        let cols: Vec<Vector> = crate::par::map_range(width, |j| {
            let mut e = vec![C64::new(0.0, 0.0); dim];
            e[start + j] = C64::new(1.0, 0.0);
            apply(&e)
        });
        for (j, col) in cols.iter().enumerate() {
            for (i, x) in col.iter().enumerate() {
                m[(i, start + j)] = *x;
            }
        }
    }
    m
}

pub fn mat_vec(m: &Mat<C64>, v: &[C64]) -> Vector {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum()).collect()
}

/// Solves `m x = b` by partial-pivot LU.
pub fn dense_solve(m: &Mat<C64>, b: &[C64]) -> Result<Vector> {
    use faer::linalg::solvers::Solve;
    if m.nrows() != m.ncols() || m.nrows() != b.len() {
        return Err(Error::LinearAlgebra(format!("shape {}x{} vs rhs {}", m.nrows(), m.ncols(), b.len())));
    }
    let lu = m.partial_piv_lu();
    let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    let x = lu.solve(&rhs);
    let out: Vector = (0..b.len()).map(|i| x[(i, 0)]).collect();
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::LinearAlgebra("singular matrix".into()));
    }
    Ok(out)
}

/// Singular values in descending order.
pub fn singular_values(m: &Mat<C64>) -> Result<Vec<f64>> {
    let mut s = m.singular_values().map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(s)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &Mat<C64>) -> Result<Vec<f64>> {
    let mut e = m
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(e)
}

/// Max entry of `|m - m^H|` and the symmetrized `(m + m^H) / 2`.
/// Ascending eigenvalues with eigenvectors as columns.
pub fn hermitian_eigen(m: &Mat<C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    let evd = m.self_adjoint_eigen(faer::Side::Lower).map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let vals = (0..m.nrows()).map(|i| s[i].re).collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn hermitian_part(m: &Mat<C64>) -> (f64, Mat<C64>) {
    let n = m.nrows();
    let mut defect: f64 = 0.0;
    let h = Mat::from_fn(n, n, |i, j| {
        let a = m[(i, j)];
        let b = m[(j, i)].conj();
        defect = defect.max((a - b).norm());
        (a + b) * 0.5
    });
    (defect, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(v: &[C64]) -> Vector {
        let n = v.len();
        (0..n)
            .map(|i| {
                let mut s = v[i] * 4.0;
                if i > 0 {
                    s -= v[i - 1];
                }
                if i + 1 < n {
                    s -= v[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn pcg_solves_spd_system() {
        let b: Vector = (0..50).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let (x, st) = pcg(tridiag, |r| r.to_vec(), &b, 1e-12, 0.0, 500).unwrap();
        let r: Vector = tridiag(&x).iter().zip(&b).map(|(a, b)| a - b).collect();
        assert!(norm(&r) / norm(&b) < 1e-11, "{st:?}");
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let n = 40;
        let op = |v: &[C64]| -> Vector {
            (0..n)
                .map(|i| {
                    let mut s = v[i] * C64::new(3.0, 0.5);
                    if i + 1 < n {
                        s += v[i + 1] * C64::new(0.0, 1.0);
                    }
                    if i > 1 {
                        s -= v[i - 2] * 0.7;
                    }
                    s
                })
                .collect()
        };
        let b: Vector = (0..n).map(|i| C64::new(1.0 / (1.0 + i as f64), 0.2)).collect();
        let (x, _) = gmres(op, &b, 1e-12, 10, 500).unwrap();
        let r: Vector = op(&x).iter().zip(&b).map(|(a, b)| a - b).collect();
        assert!(norm(&r) / norm(&b) < 1e-11);
        let m = densify(n, op);
        let xd = dense_solve(&m, &b).unwrap();
        let d: Vector = x.iter().zip(&xd).map(|(a, b)| a - b).collect();
        assert!(norm(&d) / norm(&xd) < 1e-10);
    }
}
