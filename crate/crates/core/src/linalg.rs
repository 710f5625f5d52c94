//! Small helpers over faer dense matrices.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};

pub fn mat_from_rows(rows: &[Vec<f64>]) -> Mat<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    Mat::from_fn(n, m, |i, j| rows[i][j])
}

pub fn matvec(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.ncols(), x.len());
    let mut y = vec![0.0; a.nrows()];
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        let col = a.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += col[i] * xj;
        }
    }
    y
}

pub fn matvec_c(a: MatRef<'_, c64>, x: &[c64]) -> Vec<c64> {
    let mut y = vec![c64::new(0.0, 0.0); a.nrows()];
    for j in 0..a.ncols() {
        let xj = x[j];
        let col = a.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += col[i] * xj;
        }
    }
    y
}

/// Factored real matrix, reused across many right-hand sides.
pub struct RealLu {
    lu: PartialPivLu<f64>,
    n: usize,
}

impl RealLu {
    pub fn new(a: &Mat<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Linalg(format!("LU of non-square {}x{} matrix", a.nrows(), a.ncols())));
        }
        let lu = a.partial_piv_lu();
        let u = lu.U();
        let scale = (0..a.nrows()).map(|i| u[(i, i)].abs()).fold(0.0, f64::max);
        let small = (0..a.nrows()).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        if !(small > scale * 1e-15) {
            return Err(Error::Linalg(format!("singular matrix (pivot ratio {:.3e})", small / scale)));
        }
        Ok(Self { lu, n: a.nrows() })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

pub fn solve_real(a: &Mat<f64>, b: &[f64]) -> Result<Vec<f64>> {
    Ok(RealLu::new(a)?.solve(b))
}

/// `log|det A|` and `arg det A` from a partial-pivoting LU.
pub fn log_det(a: MatRef<'_, c64>) -> (f64, f64) {
    let lu = a.partial_piv_lu();
    let u = lu.U();
    let mut logabs = 0.0;
    let mut phase = 0.0;
    for i in 0..a.nrows() {
        let d = u[(i, i)];
        logabs += d.norm().ln();
        phase += d.arg();
    }
    let perm = lu.P();
    let (fwd, _) = perm.arrays();
    if permutation_is_odd(fwd) {
        phase += std::f64::consts::PI;
    }
    (logabs, phase)
}

fn permutation_is_odd(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    let mut transpositions = 0usize;
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = p[j];
            len += 1;
        }
        transpositions += len - 1;
    }
    transpositions % 2 == 1
}

pub fn inverse_c(a: MatRef<'_, c64>) -> Mat<c64> {
    use faer::linalg::solvers::DenseSolveCore;
    a.partial_piv_lu().inverse()
}

/// `||a^-1||_2` by Lanczos on `a^-H a^-1` with full reorthogonalization and
/// one LU factorization. Stops when the largest Ritz value changes by less
/// than `rtol` (relative) or after `max_iter` steps.
pub fn inverse_norm(a: MatRef<'_, c64>, rtol: f64, max_iter: usize) -> Result<f64> {
    let n = a.nrows();
    let lu = a.partial_piv_lu();
    let steps = max_iter.min(n).max(1);
    let apply = |v: &Mat<c64>| lu.solve_adjoint(lu.solve(v));
    let mut q = Mat::<c64>::from_fn(n, 1, |i, _| c64::new(1.0 + (i as f64 * 0.618_034).fract(), 0.5 * (i as f64 * 0.414_214).fract()));
    let nq = q.norm_l2();
    q = Mat::<c64>::from_fn(n, 1, |i, _| q[(i, 0)] / nq);
    let mut basis: Vec<Mat<c64>> = Vec::with_capacity(steps);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut est = 0.0;
    for k in 0..steps {
        let mut w = apply(&q);
        let ak = (0..n).map(|i| (q[(i, 0)].conj() * w[(i, 0)]).re).sum::<f64>();
        basis.push(q.clone());
        alpha.push(ak);
        // two passes of Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let h: c64 = (0..n).map(|i| b[(i, 0)].conj() * w[(i, 0)]).sum();
                w = Mat::<c64>::from_fn(n, 1, |i, _| w[(i, 0)] - h * b[(i, 0)]);
            }
        }
        let m = alpha.len();
        let t = Mat::<f64>::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i == j + 1 || j == i + 1 {
                beta[i.min(j)]
            } else {
                0.0
            }
        });
        let top = sym_eigenvalues(&t)?.into_iter().fold(0.0, f64::max);
        if !top.is_finite() {
            return Err(Error::Linalg("singular matrix in inverse norm estimate".into()));
        }
        let next = top.sqrt();
        let bk = w.norm_l2();
        if (k > 0 && (next - est).abs() <= rtol * next) || bk <= 1e-14 * top {
            return Ok(next);
        }
        est = next;
        beta.push(bk);
        q = Mat::<c64>::from_fn(n, 1, |i, _| w[(i, 0)] / bk);
    }
    Ok(est)
}

pub fn eigenvalues_c(a: MatRef<'_, c64>) -> Result<Vec<c64>> {
    a.eigenvalues().map_err(|e| Error::Linalg(format!("eigenvalue solver failed: {e:?}")))
}

/// Eigenvalues and unit eigenvectors (columns).
pub fn eigen_c(a: MatRef<'_, c64>) -> Result<(Vec<c64>, Mat<c64>)> {
    let e = a.eigen().map_err(|e| Error::Linalg(format!("eigen decomposition failed: {e:?}")))?;
    let lam: Vec<c64> = e.S().column_vector().iter().copied().collect();
    Ok((lam, e.U().to_owned()))
}

pub fn largest_singular_value(a: MatRef<'_, c64>) -> Result<f64> {
    let s = a
        .singular_values()
        .map_err(|e| Error::Linalg(format!("SVD failed: {e:?}")))?;
    Ok(s.iter().copied().fold(0.0, f64::max))
}

pub fn smallest_singular_value(a: MatRef<'_, c64>) -> Result<f64> {
    let s = a
        .singular_values()
        .map_err(|e| Error::Linalg(format!("SVD failed: {e:?}")))?;
    Ok(s.iter().copied().fold(f64::INFINITY, f64::min))
}

pub fn sym_eigenvalues(a: &Mat<f64>) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Linalg(format!("symmetric eigen solver failed: {e:?}")))
}

/// Smallest eigenvalue of the symmetric part of a real 2x2 matrix.
pub fn sym_min_eig2(m: [[f64; 2]; 2]) -> f64 {
    let a = m[0][0];
    let d = m[1][1];
    let b = 0.5 * (m[0][1] + m[1][0]);
    let tr = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    tr - disc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_norm_matches_svd() {
        let a = Mat::<c64>::from_fn(40, 40, |i, j| {
            let d = if i == j { 2.0 + (i as f64 * 0.37).sin() } else { 0.0 };
            c64::new(d + 0.3 * ((i * 7 + j * 3) % 5) as f64 / 5.0, 0.1 * ((i + 2 * j) % 3) as f64)
        });
        let want = 1.0 / smallest_singular_value(a.as_ref()).unwrap();
        let got = inverse_norm(a.as_ref(), 1e-12, 40).unwrap();
        assert!((got / want - 1.0).abs() < 1e-8, "{got} vs {want}");
    }

    #[test]
    fn log_det_matches_product() {
        let a = Mat::<c64>::from_fn(3, 3, |i, j| c64::new((i + 2 * j) as f64 % 3.0 - 1.0, if i == j { 1.0 } else { 0.0 }));
        let (la, ph) = log_det(a.as_ref());
        // cofactor expansion
        let m = |i: usize, j: usize| a[(i, j)];
        let det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
            + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
        let got = c64::from_polar(la.exp(), ph);
        assert!((got - det).norm() < 1e-12 * det.norm().max(1.0));
    }

    #[test]
    fn odd_permutations() {
        assert!(!permutation_is_odd(&[0, 1, 2]));
        assert!(permutation_is_odd(&[1, 0, 2]));
        assert!(!permutation_is_odd(&[1, 2, 0]));
    }

    #[test]
    fn real_lu_solves() {
        let a = Mat::<f64>::from_fn(3, 3, |i, j| if i == j { 4.0 } else { 1.0 });
        let lu = RealLu::new(&a).unwrap();
        let x = lu.solve(&[6.0, 6.0, 6.0]);
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
        assert!(RealLu::new(&Mat::<f64>::zeros(2, 2)).is_err());
    }

    #[test]
    fn sym_min_eig_of_diag() {
        assert_eq!(sym_min_eig2([[2.0, 0.0], [0.0, -1.0]]), -1.0);
    }
}
