//! Intra-orthogonalization routines ("muscles"): economic QR of one
//! tall-skinny block, with synchronization events logged per tall reduction.

use crate::error::{Error, Result};
use crate::events::{EventLog, Origin};
use crate::kernels::{self, Side, EPS};
use crate::mat::Mat;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MuscleId {
    Cgs,
    CgsP,
    CgsRo,
    CgsIro,
    CgsSro,
    CgsSror,
    CgsIroLs,
    Mgs,
    MgsRo,
    MgsIro,
    MgsSvl,
    MgsLts,
    MgsCwy,
    MgsIcwy,
    HouseQr,
    CholQr,
    CholQrRo,
    ShCholQrRoro,
}

impl MuscleId {
    pub const ALL: [MuscleId; 18] = [
        MuscleId::Cgs,
        MuscleId::CgsP,
        MuscleId::CgsRo,
        MuscleId::CgsIro,
        MuscleId::CgsSro,
        MuscleId::CgsSror,
        MuscleId::CgsIroLs,
        MuscleId::Mgs,
        MuscleId::MgsRo,
        MuscleId::MgsIro,
        MuscleId::MgsSvl,
        MuscleId::MgsLts,
        MuscleId::MgsCwy,
        MuscleId::MgsIcwy,
        MuscleId::HouseQr,
        MuscleId::CholQr,
        MuscleId::CholQrRo,
        MuscleId::ShCholQrRoro,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MuscleId::Cgs => "CGS",
            MuscleId::CgsP => "CGS_P",
            MuscleId::CgsRo => "CGS_RO",
            MuscleId::CgsIro => "CGS_IRO",
            MuscleId::CgsSro => "CGS_SRO",
            MuscleId::CgsSror => "CGS_SROR",
            MuscleId::CgsIroLs => "CGS_IRO_LS",
            MuscleId::Mgs => "MGS",
            MuscleId::MgsRo => "MGS_RO",
            MuscleId::MgsIro => "MGS_IRO",
            MuscleId::MgsSvl => "MGS_SVL",
            MuscleId::MgsLts => "MGS_LTS",
            MuscleId::MgsCwy => "MGS_CWY",
            MuscleId::MgsIcwy => "MGS_ICWY",
            MuscleId::HouseQr => "HouseQR",
            MuscleId::CholQr => "CholQR",
            MuscleId::CholQrRo => "CholQR_RO",
            MuscleId::ShCholQrRoro => "ShCholQR_RORO",
        }
    }

    pub fn parse(name: &str) -> Option<MuscleId> {
        MuscleId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str().eq_ignore_ascii_case(name))
    }

    /// Variants that return a meaningful correction factor T.
    pub fn produces_t(&self) -> bool {
        matches!(
            self,
            MuscleId::MgsSvl | MuscleId::MgsLts | MuscleId::MgsCwy | MuscleId::MgsIcwy
        )
    }
}

impl std::fmt::Display for MuscleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    CholFail,
    NanEncountered,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::CholFail => "chol_fail",
            RunStatus::NanEncountered => "nan_encountered",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MuscleParams {
    pub rpltol: f64,
    /// Escalate the ShCholQR_RORO shift to ||X||_2^2 when the shifted Gram
    /// matrix still fails positive definiteness.
    pub auto_shift: bool,
}

impl Default for MuscleParams {
    fn default() -> Self {
        MuscleParams {
            rpltol: 100.0,
            auto_shift: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QRResult {
    pub q: Mat,
    pub r: Mat,
    /// Correction factor; identity for variants that do not produce one.
    pub t: Mat,
    pub status: RunStatus,
    pub events: EventLog,
}

enum Failure {
    CholFail,
    Nan,
}

type MuscleOut = std::result::Result<(Mat, Mat, Option<Mat>), Failure>;

fn map_chol(err: Error) -> Failure {
    match err {
        Error::NotPositiveDefinite { pivot, .. } if pivot.is_nan() => Failure::Nan,
        _ => Failure::CholFail,
    }
}

/// Economic QR of a tall-skinny block by the requested muscle.
pub fn intra_orthogonalize(
    x: &Mat,
    id: MuscleId,
    params: &MuscleParams,
    rng: &mut Rng,
) -> Result<QRResult> {
    let (m, s) = (x.rows(), x.cols());
    if s < 1 || m < s {
        return Err(Error::DimensionMismatch(format!(
            "intra_orthogonalize: requires m >= s >= 1, got {m}x{s}"
        )));
    }
    if params.rpltol < 0.0 {
        return Err(Error::InvalidParameter("rpltol must be >= 0".into()));
    }
    let mut ev = EventLog::new();
    let out = match id {
        MuscleId::Cgs => cgs(x, &mut ev),
        MuscleId::CgsP => cgs_p(x, &mut ev),
        MuscleId::CgsRo => run_twice(x, &mut ev, cgs),
        MuscleId::CgsIro => cgs_iro(x, &mut ev),
        MuscleId::CgsSro => cgs_sror(x, 0.0, rng, &mut ev),
        MuscleId::CgsSror => cgs_sror(x, params.rpltol, rng, &mut ev),
        MuscleId::CgsIroLs => cgs_iro_ls(x, &mut ev),
        MuscleId::Mgs => mgs(x, &mut ev),
        MuscleId::MgsRo => run_twice(x, &mut ev, mgs),
        MuscleId::MgsIro => mgs_iro(x, &mut ev),
        MuscleId::MgsSvl => mgs_svl_or_lts(x, &mut ev, true),
        MuscleId::MgsLts => mgs_svl_or_lts(x, &mut ev, false),
        MuscleId::MgsCwy => mgs_cwy_or_icwy(x, &mut ev, true),
        MuscleId::MgsIcwy => mgs_cwy_or_icwy(x, &mut ev, false),
        MuscleId::HouseQr => house_qr_muscle(x, &mut ev),
        MuscleId::CholQr => chol_qr(x, &mut ev),
        MuscleId::CholQrRo => chol_qr_ro(x, &mut ev),
        MuscleId::ShCholQrRoro => sh_chol_qr_roro(x, params.auto_shift, &mut ev),
    };
    Ok(assemble(out, s, ev))
}

fn assemble(out: MuscleOut, s: usize, events: EventLog) -> QRResult {
    match out {
        Ok((q, r, t)) => {
            let status = if q.has_nonfinite() || r.has_nonfinite() {
                RunStatus::NanEncountered
            } else {
                RunStatus::Ok
            };
            QRResult {
                q,
                r,
                t: t.unwrap_or_else(|| Mat::identity(s)),
                status,
                events,
            }
        }
        Err(failure) => {
            let status = match failure {
                Failure::CholFail => RunStatus::CholFail,
                Failure::Nan => RunStatus::NanEncountered,
            };
            QRResult {
                q: Mat::zeros(1, 0),
                r: Mat::zeros(s, s),
                t: Mat::identity(s),
                status,
                events,
            }
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Q_{1:k}^T w in one fused pass; one global reduction.
fn proj_coeffs(q: &Mat, k: usize, w: &[f64], ev: &mut EventLog) -> Vec<f64> {
    ev.record(Origin::Muscle);
    (0..k).map(|j| dot(q.col(j), w)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn cgs(x: &Mat, ev: &mut EventLog) -> MuscleOut {
    let (m, s) = (x.rows(), x.cols());
    let mut q = Mat::zeros(m, s);
    let mut r = Mat::zeros(s, s);
    for k in 0..s {
        let mut w = x.col(k).to_vec();
        if k > 0 {
            let coeffs = proj_coeffs(&q, k, &w, ev);
            for (j, c) in coeffs.iter().enumerate() {
                r[(j, k)] = *c;
                axpy(-c, q.col(j), &mut w);
            }
        }
        ev.record(Origin::Muscle); // norm
        let rho = norm(&w);
        r[(k, k)] = rho;
        for (qi, wi) in q.col_mut(k).iter_mut().zip(&w) {
            *qi = wi / rho;
        }
    }
    Ok((q, r, None))
}

/// CGS with the diagonal R entries recovered through the Pythagorean theorem;
/// the inner product and the column norm share one fused reduction.
fn cgs_p(x: &Mat, ev: &mut EventLog) -> MuscleOut {
    let (m, s) = (x.rows(), x.cols());
    let mut q = Mat::zeros(m, s);
    let mut r = Mat::zeros(s, s);
    for k in 0..s {
        let xk = x.col(k);
        ev.record(Origin::Muscle); // fused [Q x]^T x
        let omega = dot(xk, xk);
        let coeffs: Vec<f64> = (0..k).map(|j| dot(q.col(j), xk)).collect();
        let d = omega - coeffs.iter().map(|c| c * c).sum::<f64>();
        if !(d > 0.0) {
            return Err(if d.is_nan() {
                Failure::Nan
            } else {
                Failure::CholFail
            });
        }
        let rho = d.sqrt();
        let mut w = xk.to_vec();
        for (j, c) in coeffs.iter().enumerate() {
            r[(j, k)] = *c;
            axpy(-c, q.col(j), &mut w);
        }
        r[(k, k)] = rho;
        for (qi, wi) in q.col_mut(k).iter_mut().zip(&w) {
            *qi = wi / rho;
        }
    }
    Ok((q, r, None))
}

/// Run a one-pass routine twice and combine the R factors.
fn run_twice(
    x: &Mat,
    ev: &mut EventLog,
    f: fn(&Mat, &mut EventLog) -> MuscleOut,
) -> MuscleOut {
    let (q1, r1, _) = f(x, ev)?;
    let (q, r2, _) = f(&q1, ev)?;
    let r = kernels::matmul(&r2, &r1).map_err(|_| Failure::Nan)?;
    Ok((q, r, None))
}

fn cgs_iro(x: &Mat, ev: &mut EventLog) -> MuscleOut {
    let (m, s) = (x.rows(), x.cols());
    let mut q = Mat::zeros(m, s);
    let mut r = Mat::zeros(s, s);
    for k in 0..s {
        let mut w = x.col(k).to_vec();
        let mut first = vec![0.0; k];
        let mut second = vec![0.0; k];
        let mut rho1 = 1.0;
        if k > 0 {
            let coeffs = proj_coeffs(&q, k, &w, ev);
            for (j, c) in coeffs.iter().enumerate() {
                first[j] = *c;
                axpy(-c, q.col(j), &mut w);
            }
            ev.record(Origin::Muscle);
            rho1 = norm(&w);
            for wi in &mut w {
                *wi /= rho1;
            }
            let coeffs = proj_coeffs(&q, k, &w, ev);
            for (j, c) in coeffs.iter().enumerate() {
                second[j] = *c;
                axpy(-c, q.col(j), &mut w);
            }
        }
        ev.record(Origin::Muscle);
        let rho2 = norm(&w);
        for (j, c) in first.iter().enumerate() {
            r[(j, k)] = c + second[j] * rho1;
        }
        r[(k, k)] = if k > 0 { rho2 * rho1 } else { rho2 };
        for (qi, wi) in q.col_mut(k).iter_mut().zip(&w) {
            *qi = wi / rho2;
        }
    }
    Ok((q, r, None))
}

/// Random vector with entries uniform in (-0.5, 0.5), used for replacement.
pub(crate) fn random_centered(m: usize, rng: &mut Rng) -> Vec<f64> {
    (0..m).map(|_| rng.uniform() - 0.5).collect()
}

/// Output bundle of [`cgs_step_sror`].
#[derive(Debug, Clone)]
pub struct SrorStep {
    pub y: Vec<f64>,
    pub r: Vec<f64>,
    pub rho: f64,
    pub northog: usize,
}

/// One selective-reorthogonalization-with-replacement step.
///
/// `x` is repeatedly projected against the columns of `qprev`; the loop exits
/// once the post-projection norm exceeds half the pre-projection norm.  A
/// candidate whose norm collapses to <= rpltol*nu*eps is replaced by a random
/// vector of norm nu*eps.  An identically zero `x` yields a random unit
/// vector with rho = 0 and r = 0, which passes rank deficiency onto R.
pub fn cgs_step_sror(
    qprev: &Mat,
    x: &[f64],
    nu_in: Option<f64>,
    rpltol: f64,
    rng: &mut Rng,
    ev: &mut EventLog,
) -> SrorStep {
    let m = x.len();
    let nq = qprev.cols();
    let mut r = vec![0.0; nq];
    ev.record(Origin::Muscle);
    let nux = norm(x);
    let mut northog = 0usize;

    if nq == 0 {
        return if nux == 0.0 {
            let mut y = random_centered(m, rng);
            ev.record(Origin::Muscle);
            let n = norm(&y);
            y.iter_mut().for_each(|v| *v /= n);
            SrorStep {
                y,
                r,
                rho: 0.0,
                northog,
            }
        } else {
            SrorStep {
                y: x.iter().map(|v| v / nux).collect(),
                r,
                rho: nux,
                northog,
            }
        };
    }

    let mut nu = nu_in.unwrap_or(nux).max(nux);
    let zeronorm;
    let mut y;
    if nux != 0.0 {
        zeronorm = false;
        y = x.iter().map(|v| v / nux).collect::<Vec<_>>();
        nu /= nux;
    } else {
        zeronorm = true;
        y = random_centered(m, rng);
        ev.record(Origin::Muscle);
        let n = norm(&y);
        y.iter_mut().for_each(|v| *v /= n);
        nu = 1.0;
    }

    let mut nu1 = nu;
    loop {
        northog += 1;
        let coeffs = proj_coeffs(qprev, nq, &y, ev);
        for (j, c) in coeffs.iter().enumerate() {
            r[j] += c;
            axpy(-c, qprev.col(j), &mut y);
        }
        ev.record(Origin::Muscle);
        let nu2 = norm(&y);
        if nu2 > 0.5 * nu1 {
            break;
        }
        if nu2 > rpltol * nu * EPS {
            nu1 = nu2;
        } else {
            // Orthogonalization fault: replace with a tiny random vector.
            nu *= EPS;
            nu1 = nu;
            y = random_centered(m, rng);
            ev.record(Origin::Muscle);
            let n = norm(&y);
            y.iter_mut().for_each(|v| *v *= nu / n);
        }
    }

    if !zeronorm {
        ev.record(Origin::Muscle);
        let mut rho = norm(&y);
        y.iter_mut().for_each(|v| *v /= rho);
        rho *= nux;
        r.iter_mut().for_each(|v| *v *= nux);
        SrorStep {
            y,
            r,
            rho,
            northog,
        }
    } else {
        ev.record(Origin::Muscle);
        let n = norm(&y);
        y.iter_mut().for_each(|v| *v /= n);
        SrorStep {
            y,
            r: vec![0.0; nq],
            rho: 0.0,
            northog,
        }
    }
}

fn cgs_sror(x: &Mat, rpltol: f64, rng: &mut Rng, ev: &mut EventLog) -> MuscleOut {
    let (m, s) = (x.rows(), x.cols());
    let mut q = Mat::zeros(m, s);
    let mut r = Mat::zeros(s, s);
    for k in 0..s {
        let qprev = q.col_range(0, k);
        let step = cgs_step_sror(&qprev, x.col(k), None, rpltol, rng, ev);
        for (j, c) in step.r.iter().enumerate() {
            r[(j, k)] = *c;
        }
        r[(k, k)] = step.rho;
        q.col_mut(k).copy_from_slice(&step.y);
    }
    Ok((q, r, None))
}

/// One-sync CGS with inner reorthogonalization: a single fused reduction per
/// column, with normalization lagged by one iteration, plus one final
/// reduction for the last column.
fn cgs_iro_ls(x: &Mat, ev: &mut EventLog) -> MuscleOut {
    let (m, s) = (x.rows(), x.cols());
    let mut q = Mat::zeros(m, s);
    let mut r = Mat::zeros(s, s);
    let mut u = x.col(0).to_vec();
    for k in 1..s {
        ev.record(Origin::Muscle); // fused [Q_{1:k-2} u]^T [u x_k]
        let (w, z, omega, zeta);
        if k == 1 {
            w = vec![];
            z = vec![];
            omega = dot(&u, &u);
            zeta = dot(&u, x.col(k));
        } else {
            w = (0..k - 1).map(|j| dot(q.col(j), &u)).collect::<Vec<_>>();
            z = (0..k - 1).map(|j| dot(q.col(j), x.col(k))).collect::<Vec<_>>();
            omega = dot(&u, &u);
            zeta = dot(&u, x.col(k));
        }
        let d = omega - dot(&w, &w);
        if !(d > 0.0) {
            return Err(if d.is_nan() {
                Failure::Nan
            } else {
                Failure::CholFail
            });
        }
        let rkk = d.sqrt();
        let rho = zeta - dot(&w, &z);
        r[(k - 1, k - 1)] = rkk;
        r[(k - 1, k)] = rho / rkk;
        if k == 1 {
            for (qi, ui) in q.col_mut(0).iter_mut().zip(&u) {
                *qi = ui / rkk;
            }
        } else {
            // Lagged reorthogonalization correction for column k-1.
            for (j, wj) in w.iter().enumerate() {
                r[(j, k - 1)] += wj;
                r[(j, k)] = z[j];
            }
            let mut v = u.clone();
            for (j, wj) in w.iter().enumerate() {
                axpy(-wj, q.col(j), &mut v);
            }
            for (qi, vi) in q.col_mut(k - 1).iter_mut().zip(&v) {
                *qi = vi / rkk;
            }
        }
        u = x.col(k).to_vec();
        for j in 0..k {
            axpy(-r[(j, k)], q.col(j), &mut u);
        }
    }
    // Final fused reduction to orthogonalize the last column.
    ev.record(Origin::Muscle);
    let w: Vec<f64> = (0..s - 1).map(|j| dot(q.col(j), &u)).collect();
    let omega = dot(&u, &u);
    let d = omega - dot(&w, &w);
    if !(d > 0.0) {
        return Err(if d.is_nan() {
            Failure::Nan
        } else {
            Failure::CholFail
        });
    }
    let rss = d.sqrt();
    for (j, wj) in w.iter().enumerate() {
        r[(j, s - 1)] += wj;
    }
    let mut v = u;
    for (j, wj) in w.iter().enumerate() {
        axpy(-wj, q.col(j), &mut v);
    }
    r[(s - 1, s - 1)] = rss;
    for (qi, vi) in q.col_mut(s - 1).iter_mut().zip(&v) {
        *qi = vi / rss;
    }
    Ok((q, r, None))
}

fn mgs(x: &Mat, ev: &mut EventLog) -> MuscleOut {
    let (m, s) = (x.rows(), x.cols());
    let mut q = Mat::zeros(m, s);
    let mut r = Mat::zeros(s, s);
    for k in 0..s {
        let mut w = x.col(k).to_vec();
        for j in 0..k {
            ev.record(Origin::Muscle);
            let c = dot(q.col(j), &w);
            r[(j, k)] = c;
            axpy(-c, q.col(j), &mut w);
        }
        ev.record(Origin::Muscle);
        let rho = norm(&w);
        r[(k, k)] = rho;
        for (qi, wi) in q.col_mut(k).iter_mut().zip(&w) {
            *qi = wi / rho;
        }
    }
    Ok((q, r, None))
}

fn mgs_iro(x: &Mat, ev: &mut EventLog) -> MuscleOut {
    let (m, s) = (x.rows(), x.cols());
    let mut q = Mat::zeros(m, s);
    let mut r = Mat::zeros(s, s);
    for k in 0..s {
        let mut w = x.col(k).to_vec();
        for _pass in 0..2 {
            for j in 0..k {
                ev.record(Origin::Muscle);
                let c = dot(q.col(j), &w);
                r[(j, k)] += c;
                axpy(-c, q.col(j), &mut w);
            }
        }
        ev.record(Origin::Muscle);
        let rho = norm(&w);
        r[(k, k)] = rho;
        for (qi, wi) in q.col_mut(k).iter_mut().zip(&w) {
            *qi = wi / rho;
        }
    }
    Ok((q, r, None))
}

/// Apply T_{1:k,1:k}^T (svl=true) or T_{1:k,1:k}^{-T} (svl=false, a forward
/// substitution with the unit upper triangular T) to a coefficient vector.
fn apply_t_correction(t: &Mat, k: usize, v: &[f64], svl: bool) -> Vec<f64> {
    if svl {
        let mut out = vec![0.0; k];
        for i in 0..k {
            // (T^T v)_i = sum_{j<=i} T[j,i] v[j]
            let mut acc = 0.0;
            for j in 0..=i {
                acc += t[(j, i)] * v[j];
            }
            out[i] = acc;
        }
        out
    } else {
        // Solve T^T z = v; T^T is unit lower triangular.
        let mut z = vec![0.0; k];
        for i in 0..k {
            let mut acc = v[i];
            for j in 0..i {
                acc -= t[(j, i)] * z[j];
            }
            z[i] = acc;
        }
        z
    }
}

fn mgs_svl_or_lts(x: &Mat, ev: &mut EventLog, svl: bool) -> MuscleOut {
    let (m, s) = (x.rows(), x.cols());
    let mut q = Mat::zeros(m, s);
    let mut r = Mat::zeros(s, s);
    let mut t = Mat::identity(s);
    ev.record(Origin::Muscle);
    let rho = norm(x.col(0));
    r[(0, 0)] = rho;
    for (qi, xi) in q.col_mut(0).iter_mut().zip(x.col(0)) {
        *qi = xi / rho;
    }
    for k in 1..s {
        let mut w = x.col(k).to_vec();
        let raw = proj_coeffs(&q, k, &w, ev);
        let coeffs = apply_t_correction(&t, k, &raw, svl);
        for (j, c) in coeffs.iter().enumerate() {
            r[(j, k)] = *c;
            axpy(-c, q.col(j), &mut w);
        }
        ev.record(Origin::Muscle);
        let rho = norm(&w);
        r[(k, k)] = rho;
        for (qi, wi) in q.col_mut(k).iter_mut().zip(&w) {
            *qi = wi / rho;
        }
        let tq = proj_coeffs(&q, k, q.col(k), ev);
        if svl {
            // T_{1:k,k+1} = -T_{1:k,1:k} (Q^T q_{k+1})
            for i in 0..k {
                let mut acc = 0.0;
                for j in i..k {
                    acc += t[(i, j)] * tq[j];
                }
                t[(i, k)] = -acc;
            }
        } else {
            for i in 0..k {
                t[(i, k)] = tq[i];
            }
        }
    }
    Ok((q, r, Some(t)))
}

fn mgs_cwy_or_icwy(x: &Mat, ev: &mut EventLog, cwy: bool) -> MuscleOut {
    let (m, s) = (x.rows(), x.cols());
    let mut q = Mat::zeros(m, s);
    let mut r = Mat::zeros(s, s);
    let mut t = Mat::identity(s);
    let mut u = x.col(0).to_vec();
    for k in 1..s {
        let w = x.col(k);
        // Single fused reduction: [Q_{1:k-1} u]^T [u w].
        ev.record(Origin::Muscle);
        let tvec: Vec<f64> = (0..k - 1).map(|j| dot(q.col(j), &u)).collect();
        let rvec: Vec<f64> = (0..k - 1).map(|j| dot(q.col(j), w)).collect();
        let rkk_sq = dot(&u, &u);
        let rho = dot(&u, w);
        if !(rkk_sq > 0.0) && rkk_sq != 0.0 {
            return Err(Failure::Nan);
        }
        let rkk = rkk_sq.sqrt();
        if k > 1 {
            if cwy {
                for i in 0..k - 1 {
                    let mut acc = 0.0;
                    for j in i..k - 1 {
                        acc += t[(i, j)] * tvec[j] / rkk;
                    }
                    t[(i, k - 1)] = -acc;
                }
            } else {
                for i in 0..k - 1 {
                    t[(i, k - 1)] = tvec[i] / rkk;
                }
            }
        }
        let mut stacked = rvec;
        stacked.push(rho / rkk);
        let coeffs = apply_t_correction(&t, k, &stacked, cwy);
        for (j, c) in coeffs.iter().enumerate() {
            r[(j, k)] = *c;
        }
        r[(k - 1, k - 1)] = rkk;
        for (qi, ui) in q.col_mut(k - 1).iter_mut().zip(&u) {
            *qi = ui / rkk;
        }
        u = w.to_vec();
        for j in 0..k {
            axpy(-r[(j, k)], q.col(j), &mut u);
        }
    }
    // Explicit norm for the final column, following the listing.
    ev.record(Origin::Muscle);
    let rss = norm(&u);
    r[(s - 1, s - 1)] = rss;
    for (qi, ui) in q.col_mut(s - 1).iter_mut().zip(&u) {
        *qi = ui / rss;
    }
    Ok((q, r, Some(t)))
}

fn house_qr_muscle(x: &Mat, ev: &mut EventLog) -> MuscleOut {
    // Reflector generation and application each take a pass over the tall
    // dimension per column.
    for _ in 0..x.cols() {
        ev.record(Origin::Muscle);
        ev.record(Origin::Muscle);
    }
    let (q, r) = kernels::house_qr(x).map_err(|_| Failure::Nan)?;
    Ok((q, r, None))
}

fn chol_qr(x: &Mat, ev: &mut EventLog) -> MuscleOut {
    ev.record(Origin::Muscle);
    let gram = kernels::at_mul_b(x, x).map_err(|_| Failure::Nan)?;
    let r = kernels::cholesky(&gram).map_err(map_chol)?;
    let q = kernels::tri_solve(&r, x, Side::Right, false).map_err(|_| Failure::Nan)?;
    Ok((q, r, None))
}

fn chol_qr_ro(x: &Mat, ev: &mut EventLog) -> MuscleOut {
    let (q1, r1, _) = chol_qr(x, ev)?;
    let (q, r2, _) = chol_qr(&q1, ev)?;
    let r = kernels::matmul(&r2, &r1).map_err(|_| Failure::Nan)?;
    Ok((q, r, None))
}

fn sh_chol_qr_roro(x: &Mat, auto_shift: bool, ev: &mut EventLog) -> MuscleOut {
    let (m, s) = (x.rows(), x.cols());
    ev.record(Origin::Muscle);
    let gram = kernels::at_mul_b(x, x).map_err(|_| Failure::Nan)?;
    // ||X||_2^2 = ||X^T X||_2, computed locally on the s x s Gram matrix.
    let norm_sq = kernels::two_norm(&gram).map_err(|_| Failure::Nan)?;
    let sigma = 11.0 * ((m * s + s * (s + 1)) as f64) * EPS * norm_sq;
    let shifted = |sig: f64| {
        let mut g = gram.clone();
        for i in 0..s {
            g[(i, i)] += sig;
        }
        g
    };
    let r1 = match kernels::cholesky(&shifted(sigma)) {
        Ok(r) => r,
        Err(e) => {
            if auto_shift {
                kernels::cholesky(&shifted(norm_sq)).map_err(map_chol)?
            } else {
                return Err(map_chol(e));
            }
        }
    };
    let q1 = kernels::tri_solve(&r1, x, Side::Right, false).map_err(|_| Failure::Nan)?;
    let (q, r2, _) = chol_qr_ro(&q1, ev)?;
    let r = kernels::matmul(&r2, &r1).map_err(|_| Failure::Nan)?;
    Ok((q, r, None))
}

/// The shift used by ShCholQR_RORO: 11 (ms + s(s+1)) eps ||X||_2^2.
pub fn sh_chol_shift(m: usize, s: usize, norm_x_2: f64) -> f64 {
    11.0 * ((m * s + s * (s + 1)) as f64) * EPS * norm_x_2 * norm_x_2
}
