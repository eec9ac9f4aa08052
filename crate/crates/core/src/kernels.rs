//! Sequential dense kernels: multiplication, Cholesky, triangular solves,
//! Householder QR, and a one-sided Jacobi SVD.
//!
//! These are reference implementations without blocking or tiling; the
//! experiments run at desk scale (m <= 1e4, n <= 500) where O(mn^2) is fine.
//! The Jacobi SVD works on columns directly rather than the Gram matrix so
//! that tiny singular values (down to 1e-20) are resolved accurately.

use crate::error::{Error, Result};
use crate::mat::Mat;

pub const EPS: f64 = f64::EPSILON;

/// Which side a triangular factor is applied on in [`tri_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// alpha * op(A) * op(B) + beta * C, accumulated in f64.
pub fn gemm(
    a: &Mat,
    trans_a: bool,
    b: &Mat,
    trans_b: bool,
    alpha: f64,
    beta: f64,
    c: Option<&Mat>,
) -> Result<Mat> {
    let (am, ak) = if trans_a {
        (a.cols(), a.rows())
    } else {
        (a.rows(), a.cols())
    };
    let (bk, bn) = if trans_b {
        (b.cols(), b.rows())
    } else {
        (b.rows(), b.cols())
    };
    if ak != bk {
        return Err(Error::DimensionMismatch(format!(
            "gemm: inner dimensions {ak} vs {bk}"
        )));
    }
    let mut out = match c {
        Some(c) => {
            if c.rows() != am || c.cols() != bn {
                return Err(Error::DimensionMismatch(format!(
                    "gemm: C is {}x{}, expected {}x{}",
                    c.rows(),
                    c.cols(),
                    am,
                    bn
                )));
            }
            c.scale(beta)
        }
        None => Mat::zeros(am.max(1), bn),
    };
    if am == 0 || bn == 0 {
        return Ok(out);
    }
    let at = |i: usize, k: usize| if trans_a { a[(k, i)] } else { a[(i, k)] };
    let bt = |k: usize, j: usize| if trans_b { b[(j, k)] } else { b[(k, j)] };
    for j in 0..bn {
        for k in 0..ak {
            let bv = alpha * bt(k, j);
            if bv == 0.0 {
                continue;
            }
            for i in 0..am {
                out[(i, j)] += at(i, k) * bv;
            }
        }
    }
    Ok(out)
}

/// A * B.
pub fn matmul(a: &Mat, b: &Mat) -> Result<Mat> {
    gemm(a, false, b, false, 1.0, 0.0, None)
}

/// A^T * B; the workhorse for block inner products.
pub fn at_mul_b(a: &Mat, b: &Mat) -> Result<Mat> {
    gemm(a, true, b, false, 1.0, 0.0, None)
}

/// Upper Cholesky factor R with R^T R = (A + A^T)/2.
///
/// The input is symmetrized before factoring.  A pivot <= 0 (exact
/// comparison) reports a positive-definiteness failure rather than
/// panicking, so callers can record the failed cell and move on.
pub fn cholesky(a: &Mat) -> Result<Mat> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "cholesky: matrix is {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let mut s = Mat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            s[(i, j)] = 0.5 * (a[(i, j)] + a[(j, i)]);
        }
    }
    let mut r = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= r[(k, j)] * r[(k, j)];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let rjj = d.sqrt();
        r[(j, j)] = rjj;
        for i in (j + 1)..n {
            let mut v = s[(j, i)];
            for k in 0..j {
                v -= r[(k, j)] * r[(k, i)];
            }
            r[(j, i)] = v / rjj;
        }
    }
    Ok(r)
}

/// Solve with a triangular matrix R by substitution.
///
/// Side::Left solves op(R) X = B; Side::Right solves X op(R) = B.
/// R is taken as upper triangular (entries below the diagonal ignored).
pub fn tri_solve(r: &Mat, b: &Mat, side: Side, transpose: bool) -> Result<Mat> {
    let n = r.rows();
    if r.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "tri_solve: R is {}x{}",
            r.rows(),
            r.cols()
        )));
    }
    for i in 0..n {
        if r[(i, i)] == 0.0 {
            return Err(Error::SingularSolve(i));
        }
    }
    match side {
        Side::Left => {
            if b.rows() != n {
                return Err(Error::DimensionMismatch(format!(
                    "tri_solve left: B has {} rows, expected {n}",
                    b.rows()
                )));
            }
            let mut x = b.clone();
            for j in 0..b.cols() {
                if !transpose {
                    // Back substitution: R x = b.
                    for i in (0..n).rev() {
                        let mut v = x[(i, j)];
                        for k in (i + 1)..n {
                            v -= r[(i, k)] * x[(k, j)];
                        }
                        x[(i, j)] = v / r[(i, i)];
                    }
                } else {
                    // Forward substitution: R^T x = b.
                    for i in 0..n {
                        let mut v = x[(i, j)];
                        for k in 0..i {
                            v -= r[(k, i)] * x[(k, j)];
                        }
                        x[(i, j)] = v / r[(i, i)];
                    }
                }
            }
            Ok(x)
        }
        Side::Right => {
            if b.cols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "tri_solve right: B has {} cols, expected {n}",
                    b.cols()
                )));
            }
            let mut x = b.clone();
            for i in 0..b.rows() {
                if !transpose {
                    // x R = b, column by column left to right.
                    for j in 0..n {
                        let mut v = x[(i, j)];
                        for k in 0..j {
                            v -= x[(i, k)] * r[(k, j)];
                        }
                        x[(i, j)] = v / r[(j, j)];
                    }
                } else {
                    // x R^T = b.
                    for j in (0..n).rev() {
                        let mut v = x[(i, j)];
                        for k in (j + 1)..n {
                            v -= x[(i, k)] * r[(j, k)];
                        }
                        x[(i, j)] = v / r[(j, j)];
                    }
                }
            }
            Ok(x)
        }
    }
}

/// Economic Householder QR: X = Q R with Q formed explicitly (rows x cols)
/// and the diagonal of R made nonnegative by sign flips absorbed into Q.
pub fn house_qr(x: &Mat) -> Result<(Mat, Mat)> {
    let m = x.rows();
    let n = x.cols();
    if m < n {
        return Err(Error::DimensionMismatch(format!(
            "house_qr: requires rows >= cols, got {m}x{n}"
        )));
    }
    let mut a = x.clone();
    // Householder vectors stored below the diagonal of `a`; beta factors aside.
    let mut betas = vec![0.0; n];
    for k in 0..n {
        let mut normx = 0.0;
        for i in k..m {
            normx += a[(i, k)] * a[(i, k)];
        }
        normx = normx.sqrt();
        if normx == 0.0 {
            betas[k] = 0.0;
            continue;
        }
        let alpha = if a[(k, k)] >= 0.0 { -normx } else { normx };
        let v0 = a[(k, k)] - alpha;
        let mut vnorm_sq = v0 * v0;
        for i in (k + 1)..m {
            vnorm_sq += a[(i, k)] * a[(i, k)];
        }
        a[(k, k)] = alpha;
        // Normalize so v[k] = 1.
        let beta = if vnorm_sq == 0.0 {
            0.0
        } else {
            2.0 * v0 * v0 / vnorm_sq
        };
        betas[k] = beta;
        for i in (k + 1)..m {
            a[(i, k)] /= v0;
        }
        // Apply reflector to the trailing columns.
        for j in (k + 1)..n {
            let mut dot = a[(k, j)];
            for i in (k + 1)..m {
                dot += a[(i, k)] * a[(i, j)];
            }
            let w = beta * dot;
            a[(k, j)] -= w;
            for i in (k + 1)..m {
                a[(i, j)] -= w * a[(i, k)];
            }
        }
    }
    // Accumulate Q on the economic identity, applying reflectors backwards.
    let mut q = Mat::zeros(m, n);
    for j in 0..n {
        q[(j, j)] = 1.0;
    }
    for k in (0..n).rev() {
        let beta = betas[k];
        if beta == 0.0 {
            continue;
        }
        for j in 0..n {
            let mut dot = q[(k, j)];
            for i in (k + 1)..m {
                dot += a[(i, k)] * q[(i, j)];
            }
            let w = beta * dot;
            q[(k, j)] -= w;
            for i in (k + 1)..m {
                q[(i, j)] -= w * a[(i, k)];
            }
        }
    }
    let mut r = Mat::zeros(n.max(1), n);
    for j in 0..n {
        for i in 0..=j.min(n - 1) {
            r[(i, j)] = a[(i, j)];
        }
    }
    // Normalize R's diagonal to be nonnegative.
    for i in 0..n {
        if r[(i, i)] < 0.0 {
            for j in i..n {
                r[(i, j)] = -r[(i, j)];
            }
            for row in 0..m {
                q[(row, i)] = -q[(row, i)];
            }
        }
    }
    Ok((q, r))
}

const JACOBI_MAX_SWEEPS: usize = 30;

/// Singular values of X (rows >= cols) in descending order, by one-sided
/// Jacobi rotations on the columns.
pub fn jacobi_svd_values(x: &Mat) -> Result<Vec<f64>> {
    let m = x.rows();
    let n = x.cols();
    if m < n {
        return Err(Error::DimensionMismatch(format!(
            "jacobi_svd_values: requires rows >= cols, got {m}x{n}"
        )));
    }
    if n == 0 {
        return Ok(vec![]);
    }
    let mut a = x.clone();
    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut app, mut aqq, mut apq) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let (vp, vq) = (a[(i, p)], a[(i, q)]);
                    app += vp * vp;
                    aqq += vq * vq;
                    apq += vp * vq;
                }
                if apq == 0.0 {
                    continue;
                }
                // Relative criterion keeps tiny singular values accurate;
                // the sqrt(m) factor stops rounding-level cycling on badly
                // scaled inputs.
                if apq.abs() <= (m as f64).sqrt() * EPS * (app * aqq).sqrt() {
                    continue;
                }
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (vp, vq) = (a[(i, p)], a[(i, q)]);
                    a[(i, p)] = c * vp - s * vq;
                    a[(i, q)] = s * vp + c * vq;
                }
                rotated = true;
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence(JACOBI_MAX_SWEEPS));
    }
    let mut values: Vec<f64> = (0..n).map(|j| a.col_norm(j)).collect();
    values.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(values)
}

/// Largest singular value of A.
pub fn two_norm(a: &Mat) -> Result<f64> {
    if a.cols() == 0 {
        return Ok(0.0);
    }
    let work = if a.rows() >= a.cols() {
        a.clone()
    } else {
        a.transpose()
    };
    let values = jacobi_svd_values(&work)?;
    Ok(values.first().copied().unwrap_or(0.0))
}
