//! Stability measurements.

use crate::error::{Error, Result};
use crate::kernels::{self, two_norm};
use crate::mat::Mat;
use crate::muscles::RunStatus;
use serde::Serialize;

/// || I - Q^T Q ||_2, the loss of orthogonality of the computed factor.
pub fn loss_of_orthogonality(q: &Mat) -> Result<f64> {
    let g = kernels::at_mul_b(q, q)?;
    two_norm(&g.sub(&Mat::identity(q.cols()))?)
}

/// || Q R - X ||_2 / || X ||_2.
pub fn relative_residual(q: &Mat, r: &Mat, x: &Mat) -> Result<f64> {
    let xn = two_norm(x)?;
    if xn == 0.0 {
        return Err(Error::UndefinedInput(
            "relative_residual: X has zero norm".into(),
        ));
    }
    let res = kernels::matmul(q, r)?.sub(x)?;
    Ok(two_norm(&res)? / xn)
}

/// || X^T X - R^T R ||_2 / || X ||_2^2.
pub fn relative_cholesky_residual(r: &Mat, x: &Mat) -> Result<f64> {
    let xn = two_norm(x)?;
    if xn == 0.0 {
        return Err(Error::UndefinedInput(
            "relative_cholesky_residual: X has zero norm".into(),
        ));
    }
    let gram = kernels::at_mul_b(x, x)?;
    let rtr = kernels::at_mul_b(r, r)?;
    Ok(two_norm(&gram.sub(&rtr)?)? / (xn * xn))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TriadResiduals {
    /// || T S - I ||_F with S the upper-triangular part of Q^T Q.
    pub res_ts: f64,
    /// || (I - T) R ||_F.
    pub res_tr: f64,
}

/// Frobenius residuals of the correction-factor triad.
pub fn triad_residuals(q: &Mat, r: &Mat, t: &Mat) -> Result<TriadResiduals> {
    let n = q.cols();
    if t.rows() != n || t.cols() != n || r.rows() != n || r.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "triad_residuals: Q has {n} columns, T is {}x{}, R is {}x{}",
            t.rows(),
            t.cols(),
            r.rows(),
            r.cols()
        )));
    }
    let g = kernels::at_mul_b(q, q)?;
    let mut s = Mat::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            s[(i, j)] = g[(i, j)];
        }
    }
    let ts = kernels::matmul(t, &s)?;
    let res_ts = ts.sub(&Mat::identity(n))?.frobenius_norm();
    let imt = Mat::identity(n).sub(t)?;
    let res_tr = kernels::matmul(&imt, r)?.frobenius_norm();
    Ok(TriadResiduals { res_ts, res_tr })
}

/// Ratio of extreme singular values; +infinity when the smallest is exactly 0.
pub fn condition_number(x: &Mat) -> Result<f64> {
    let sv = kernels::jacobi_svd_values(x)?;
    let max = sv[0];
    let min = sv[sv.len() - 1];
    if min == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}

/// || Q Q^T - Qref Qref^T ||_2 without forming m x m products: the
/// difference equals B diag(I,-I) B^T for B = [Q Qref], so its norm is that
/// of R diag(I,-I) R^T with R from a QR of B.
pub fn range_distance(q: &Mat, q_ref: &Mat) -> Result<f64> {
    if q.rows() != q_ref.rows() || q.cols() != q_ref.cols() {
        return Err(Error::DimensionMismatch(format!(
            "range_distance: {}x{} vs {}x{}",
            q.rows(),
            q.cols(),
            q_ref.rows(),
            q_ref.cols()
        )));
    }
    let b = q.hcat(q_ref);
    let (_, r) = kernels::house_qr(&b)?;
    let n = q.cols();
    let mut rs = r.clone();
    for j in n..2 * n {
        for i in 0..rs.rows() {
            rs[(i, j)] = -rs[(i, j)];
        }
    }
    let core = kernels::gemm(&rs, false, &r, true, 1.0, 0.0, None)?;
    two_norm(&core)
}

/// Serialize nonfinite values as the strings "NaN" / "Inf" / "-Inf" so JSON
/// output stays lossless.
pub fn ser_f64<S: serde::Serializer>(v: &f64, ser: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        ser.serialize_f64(*v)
    } else if v.is_nan() {
        ser.serialize_str("NaN")
    } else if *v > 0.0 {
        ser.serialize_str("Inf")
    } else {
        ser.serialize_str("-Inf")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    #[serde(serialize_with = "ser_f64")]
    pub loo: f64,
    #[serde(serialize_with = "ser_f64")]
    pub rel_res: f64,
    #[serde(serialize_with = "ser_f64")]
    pub rel_chol_res: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triad: Option<TriadResiduals>,
    #[serde(serialize_with = "ser_f64")]
    pub kappa: f64,
    pub sync_skeleton: usize,
    pub sync_muscle: usize,
    pub status: RunStatus,
    pub seed: u64,
}

impl StabilityReport {
    /// NaN-filled report for runs that did not produce usable factors.
    pub fn failed(status: RunStatus, kappa: f64, sync_skeleton: usize, sync_muscle: usize, seed: u64) -> Self {
        StabilityReport {
            loo: f64::NAN,
            rel_res: f64::NAN,
            rel_chol_res: f64::NAN,
            triad: None,
            kappa,
            sync_skeleton,
            sync_muscle,
            status,
            seed,
        }
    }
}
