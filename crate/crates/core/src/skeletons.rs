//! Block orthogonalization skeletons.
//!
//! A skeleton loops over block vectors left-to-right, orthogonalizing each
//! against the finished part of the basis and delegating the within-block
//! factorization to a muscle.  Inter-block reductions are logged with
//! skeleton origin; reductions inside muscle calls keep muscle origin.

use crate::error::{Error, Result};
use crate::events::{EventLog, Origin};
use crate::kernels::{self, Side, EPS};
use crate::mat::{BlockLayout, Mat};
use crate::muscles::{self, intra_orthogonalize, MuscleId, MuscleParams, RunStatus};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SkeletonId {
    Bcgs,
    BcgsPip,
    BcgsPio,
    BcgsRo,
    BcgsIro,
    BcgsIroLs,
    BcgsSror,
    Bmgs,
    BmgsSvl,
    BmgsLts,
    BmgsCwy,
    BmgsIcwy,
}

impl SkeletonId {
    pub const ALL: [SkeletonId; 12] = [
        SkeletonId::Bcgs,
        SkeletonId::BcgsPip,
        SkeletonId::BcgsPio,
        SkeletonId::BcgsRo,
        SkeletonId::BcgsIro,
        SkeletonId::BcgsIroLs,
        SkeletonId::BcgsSror,
        SkeletonId::Bmgs,
        SkeletonId::BmgsSvl,
        SkeletonId::BmgsLts,
        SkeletonId::BmgsCwy,
        SkeletonId::BmgsIcwy,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SkeletonId::Bcgs => "BCGS",
            SkeletonId::BcgsPip => "BCGS_PIP",
            SkeletonId::BcgsPio => "BCGS_PIO",
            SkeletonId::BcgsRo => "BCGS_RO",
            SkeletonId::BcgsIro => "BCGS_IRO",
            SkeletonId::BcgsIroLs => "BCGS_IRO_LS",
            SkeletonId::BcgsSror => "BCGS_SROR",
            SkeletonId::Bmgs => "BMGS",
            SkeletonId::BmgsSvl => "BMGS_SVL",
            SkeletonId::BmgsLts => "BMGS_LTS",
            SkeletonId::BmgsCwy => "BMGS_CWY",
            SkeletonId::BmgsIcwy => "BMGS_ICWY",
        }
    }

    pub fn parse(name: &str) -> Option<SkeletonId> {
        SkeletonId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str().eq_ignore_ascii_case(name))
    }

    /// Replacement-based selective reorthogonalization only makes sense with
    /// a replacement-based muscle; the low-sync variant brings its own inner
    /// factorization and accepts anything.
    pub fn accepts(&self, musc: MuscleId) -> bool {
        match self {
            SkeletonId::BcgsSror => {
                matches!(musc, MuscleId::CgsSro | MuscleId::CgsSror)
            }
            _ => true,
        }
    }

    /// Whether the muscle choice is ignored (the skeleton has an intrinsic
    /// inner factorization).
    pub fn ignores_muscle(&self) -> bool {
        matches!(self, SkeletonId::BcgsIroLs)
    }
}

impl std::fmt::Display for SkeletonId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct SkeletonOptions {
    /// Use each finished block's correction factor when forming projection
    /// coefficients, i.e. read Qj Tjj instead of Qj.
    pub t_fix: bool,
    /// Intra-orthogonalize the first block twice.
    pub reorth_first_block: bool,
    /// Replacement tolerance for the selective-reorthogonalization variants.
    pub rpltol: f64,
    /// Escalate the shifted Cholesky shift on failure.
    pub auto_shift: bool,
}

impl Default for SkeletonOptions {
    fn default() -> Self {
        SkeletonOptions {
            t_fix: false,
            reorth_first_block: false,
            rpltol: 100.0,
            auto_shift: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlockQRResult {
    pub q: Mat,
    pub r: Mat,
    /// Block correction factor; identity blocks where a variant produces none.
    pub t: Mat,
    pub status: RunStatus,
    pub events: EventLog,
}

enum Abort {
    Hard(Error),
    Fail(RunStatus),
}

impl From<Error> for Abort {
    fn from(e: Error) -> Self {
        Abort::Hard(e)
    }
}

type Step<T = ()> = std::result::Result<T, Abort>;

fn chol_abort(err: Error) -> Abort {
    match err {
        Error::NotPositiveDefinite { pivot, .. } if pivot.is_nan() => {
            Abort::Fail(RunStatus::NanEncountered)
        }
        _ => Abort::Fail(RunStatus::CholFail),
    }
}

struct Ctx<'a> {
    musc: MuscleId,
    params: MuscleParams,
    rng: &'a mut Rng,
}

impl Ctx<'_> {
    fn io(&mut self, x: &Mat, ev: &mut EventLog) -> Step<(Mat, Mat, Mat)> {
        let out = intra_orthogonalize(x, self.musc, &self.params, self.rng)?;
        ev.extend(&out.events);
        if out.status != RunStatus::Ok {
            return Err(Abort::Fail(out.status));
        }
        Ok((out.q, out.r, out.t))
    }

    /// First-block factorization, optionally run twice.
    fn first_io(&mut self, x: &Mat, reorth: bool, ev: &mut EventLog) -> Step<(Mat, Mat, Mat)> {
        let (q1, r1, t1) = self.io(x, ev)?;
        if !reorth {
            return Ok((q1, r1, t1));
        }
        let (q, r2, t) = self.io(&q1, ev)?;
        let r = kernels::matmul(&r2, &r1)?;
        Ok((q, r, t))
    }
}

/// Block QR factorization of X by the requested skeleton-muscle pairing.
pub fn block_orthogonalize(
    x: &Mat,
    layout: BlockLayout,
    skel: SkeletonId,
    musc: MuscleId,
    opts: &SkeletonOptions,
    rng: &mut Rng,
) -> Result<BlockQRResult> {
    let n = layout.n();
    if x.rows() != layout.m || x.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "block_orthogonalize: X is {}x{}, layout expects {}x{}",
            x.rows(),
            x.cols(),
            layout.m,
            n
        )));
    }
    if !skel.accepts(musc) {
        return Err(Error::IncompatiblePairing {
            skeleton: skel.as_str().into(),
            muscle: musc.as_str().into(),
        });
    }
    if opts.t_fix && skel == SkeletonId::Bcgs {
        // A T-corrected classical skeleton would just replicate BMGS_SVL.
        return Err(Error::InvalidParameter(
            "t_fix is not available for BCGS".into(),
        ));
    }
    if opts.rpltol < 0.0 {
        return Err(Error::InvalidParameter("rpltol must be >= 0".into()));
    }

    let mut ev = EventLog::new();
    let mut q = Mat::zeros(layout.m, n);
    let mut r = Mat::zeros(n, n);
    let mut t = Mat::identity(n);
    let mut ctx = Ctx {
        musc,
        params: MuscleParams {
            rpltol: opts.rpltol,
            auto_shift: opts.auto_shift,
        },
        rng,
    };

    let run = match skel {
        SkeletonId::Bcgs => bcgs(x, layout, &mut ctx, opts, &mut ev, &mut q, &mut r),
        SkeletonId::BcgsRo => bcgs_ro(x, layout, &mut ctx, opts, &mut ev, &mut q, &mut r),
        SkeletonId::BcgsIro => bcgs_iro(x, layout, &mut ctx, opts, &mut ev, &mut q, &mut r),
        SkeletonId::BcgsPip => bcgs_pip(x, layout, &mut ctx, opts, &mut ev, &mut q, &mut r),
        SkeletonId::BcgsPio => bcgs_pio(x, layout, &mut ctx, opts, &mut ev, &mut q, &mut r),
        SkeletonId::BcgsIroLs => bcgs_iro_ls(x, layout, &mut ev, &mut q, &mut r),
        SkeletonId::BcgsSror => bcgs_sror_skel(x, layout, &mut ctx, opts, &mut ev, &mut q, &mut r),
        SkeletonId::Bmgs => bmgs(x, layout, &mut ctx, opts, &mut ev, &mut q, &mut r),
        SkeletonId::BmgsSvl => {
            bmgs_svl_lts(x, layout, &mut ctx, opts, true, &mut ev, &mut q, &mut r, &mut t)
        }
        SkeletonId::BmgsLts => {
            bmgs_svl_lts(x, layout, &mut ctx, opts, false, &mut ev, &mut q, &mut r, &mut t)
        }
        SkeletonId::BmgsCwy => {
            bmgs_cwy_icwy(x, layout, &mut ctx, true, &mut ev, &mut q, &mut r, &mut t)
        }
        SkeletonId::BmgsIcwy => {
            bmgs_cwy_icwy(x, layout, &mut ctx, false, &mut ev, &mut q, &mut r, &mut t)
        }
    };

    let status = match run {
        Ok(()) => {
            if q.has_nonfinite() || r.has_nonfinite() {
                RunStatus::NanEncountered
            } else {
                RunStatus::Ok
            }
        }
        Err(Abort::Hard(e)) => return Err(e),
        Err(Abort::Fail(s)) => s,
    };

    Ok(BlockQRResult {
        q,
        r,
        t,
        status,
        events: ev,
    })
}

fn xblk(x: &Mat, k: usize, s: usize) -> Mat {
    x.col_range(k * s, (k + 1) * s)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Apply the per-block diagonal correction to stacked projection
/// coefficients: block j of the output is Tjj^T times block j of v.
fn apply_block_diag_t(tblocks: &[Mat], v: &Mat, s: usize) -> Result<Mat> {
    let mut out = Mat::zeros(v.rows(), v.cols());
    for (j, tjj) in tblocks.iter().enumerate() {
        let vj = v.block(j * s, (j + 1) * s, 0, v.cols());
        let cj = kernels::gemm(tjj, true, &vj, false, 1.0, 0.0, None)?;
        out.set_block(j * s, 0, &cj);
    }
    Ok(out)
}

fn bcgs(
    x: &Mat,
    lay: BlockLayout,
    ctx: &mut Ctx,
    opts: &SkeletonOptions,
    ev: &mut EventLog,
    q: &mut Mat,
    r: &mut Mat,
) -> Step {
    let s = lay.s;
    let (q0, r00, _) = ctx.first_io(&xblk(x, 0, s), opts.reorth_first_block, ev)?;
    q.set_col_range(0, &q0);
    r.set_block(0, 0, &r00);
    for k in 1..lay.p {
        let qpre = q.col_range(0, k * s);
        let xk = xblk(x, k, s);
        ev.record(Origin::Skeleton);
        let c = kernels::at_mul_b(&qpre, &xk)?;
        let w = xk.sub(&kernels::matmul(&qpre, &c)?)?;
        let (qk, rkk, _) = ctx.io(&w, ev)?;
        q.set_col_range(k * s, &qk);
        r.set_block(0, k * s, &c);
        r.set_block(k * s, k * s, &rkk);
    }
    Ok(())
}

fn bcgs_ro(
    x: &Mat,
    lay: BlockLayout,
    ctx: &mut Ctx,
    opts: &SkeletonOptions,
    ev: &mut EventLog,
    q: &mut Mat,
    r: &mut Mat,
) -> Step {
    let n = lay.n();
    let mut q1 = Mat::zeros(lay.m, n);
    let mut r1 = Mat::zeros(n, n);
    bcgs(x, lay, ctx, opts, ev, &mut q1, &mut r1)?;
    let mut r2 = Mat::zeros(n, n);
    bcgs(&q1, lay, ctx, opts, ev, q, &mut r2)?;
    let combined = kernels::matmul(&r2, &r1)?;
    r.set_block(0, 0, &combined);
    Ok(())
}

fn bcgs_iro(
    x: &Mat,
    lay: BlockLayout,
    ctx: &mut Ctx,
    opts: &SkeletonOptions,
    ev: &mut EventLog,
    q: &mut Mat,
    r: &mut Mat,
) -> Step {
    let s = lay.s;
    let (q0, r00, t00) = ctx.first_io(&xblk(x, 0, s), opts.reorth_first_block, ev)?;
    q.set_col_range(0, &q0);
    r.set_block(0, 0, &r00);
    let mut tblocks = vec![t00];
    for k in 1..lay.p {
        let qpre = q.col_range(0, k * s);
        let xk = xblk(x, k, s);
        ev.record(Origin::Skeleton);
        let mut c1 = kernels::at_mul_b(&qpre, &xk)?;
        if opts.t_fix {
            c1 = apply_block_diag_t(&tblocks, &c1, s)?;
        }
        let v = xk.sub(&kernels::matmul(&qpre, &c1)?)?;
        let (v1, rk1, _) = ctx.io(&v, ev)?;
        ev.record(Origin::Skeleton);
        let mut c2 = kernels::at_mul_b(&qpre, &v1)?;
        if opts.t_fix {
            c2 = apply_block_diag_t(&tblocks, &c2, s)?;
        }
        let v2 = v1.sub(&kernels::matmul(&qpre, &c2)?)?;
        let (qk, rk2, tk) = ctx.io(&v2, ev)?;
        // R column combines both passes: C1 + C2 R1; diagonal R2 R1.
        let c = c1.add(&kernels::matmul(&c2, &rk1)?)?;
        let rkk = kernels::matmul(&rk2, &rk1)?;
        q.set_col_range(k * s, &qk);
        r.set_block(0, k * s, &c);
        r.set_block(k * s, k * s, &rkk);
        tblocks.push(tk);
    }
    Ok(())
}

fn bcgs_pip(
    x: &Mat,
    lay: BlockLayout,
    ctx: &mut Ctx,
    opts: &SkeletonOptions,
    ev: &mut EventLog,
    q: &mut Mat,
    r: &mut Mat,
) -> Step {
    let s = lay.s;
    let (q0, r00, _) = ctx.first_io(&xblk(x, 0, s), opts.reorth_first_block, ev)?;
    q.set_col_range(0, &q0);
    r.set_block(0, 0, &r00);
    for k in 1..lay.p {
        let qpre = q.col_range(0, k * s);
        let xk = xblk(x, k, s);
        // Fused [Q Xk]^T Xk in one reduction.
        ev.record(Origin::Skeleton);
        let c = kernels::at_mul_b(&qpre, &xk)?;
        let omega = kernels::at_mul_b(&xk, &xk)?;
        let p_mat = omega.sub(&kernels::at_mul_b(&c, &c)?)?;
        let rkk = kernels::cholesky(&p_mat).map_err(chol_abort)?;
        let w = xk.sub(&kernels::matmul(&qpre, &c)?)?;
        let qk = kernels::tri_solve(&rkk, &w, Side::Right, false)?;
        q.set_col_range(k * s, &qk);
        r.set_block(0, k * s, &c);
        r.set_block(k * s, k * s, &rkk);
    }
    Ok(())
}

fn bcgs_pio(
    x: &Mat,
    lay: BlockLayout,
    ctx: &mut Ctx,
    opts: &SkeletonOptions,
    ev: &mut EventLog,
    q: &mut Mat,
    r: &mut Mat,
) -> Step {
    let s = lay.s;
    let (q0, r00, _) = ctx.first_io(&xblk(x, 0, s), opts.reorth_first_block, ev)?;
    q.set_col_range(0, &q0);
    r.set_block(0, 0, &r00);
    for k in 1..lay.p {
        let ks = k * s;
        let qpre = q.col_range(0, ks);
        let xk = xblk(x, k, s);
        ev.record(Origin::Skeleton);
        let c = kernels::at_mul_b(&qpre, &xk)?;
        // One muscle call on the block-diagonal stack diag(Xk, C); its R
        // carries both triangular factors on the diagonal.  An exactly zero
        // C would hand zero columns to the muscle, so factor Xk alone then.
        let p_mat = if c.frobenius_norm() == 0.0 {
            let (_, r1, _) = ctx.io(&xk, ev)?;
            kernels::at_mul_b(&r1, &r1)?
        } else {
            let mut stack = Mat::zeros(lay.m + ks, 2 * s);
            stack.set_block(0, 0, &xk);
            stack.set_block(lay.m, s, &c);
            let (_, rs, _) = ctx.io(&stack, ev)?;
            let r1 = rs.block(0, s, 0, s);
            let r2 = rs.block(s, 2 * s, s, 2 * s);
            kernels::at_mul_b(&r1, &r1)?.sub(&kernels::at_mul_b(&r2, &r2)?)?
        };
        let rkk = kernels::cholesky(&p_mat).map_err(chol_abort)?;
        let w = xk.sub(&kernels::matmul(&qpre, &c)?)?;
        let qk = kernels::tri_solve(&rkk, &w, Side::Right, false)?;
        q.set_col_range(ks, &qk);
        r.set_block(0, ks, &c);
        r.set_block(ks, ks, &rkk);
    }
    Ok(())
}

/// Low-sync variant with lagged normalization: one fused reduction per
/// iteration plus one to finish, independent of the muscle.
fn bcgs_iro_ls(
    x: &Mat,
    lay: BlockLayout,
    ev: &mut EventLog,
    q: &mut Mat,
    r: &mut Mat,
) -> Step {
    let s = lay.s;
    let p = lay.p;
    let mut u = xblk(x, 0, s);
    for k in 0..p - 1 {
        let ks = k * s;
        let xn = xblk(x, k + 1, s);
        // Fused [Q_{1:k-1} U]^T [U X_{k+1}].
        ev.record(Origin::Skeleton);
        let qpre = q.col_range(0, ks);
        let (w_c, z_c) = if k > 0 {
            (kernels::at_mul_b(&qpre, &u)?, kernels::at_mul_b(&qpre, &xn)?)
        } else {
            (Mat::zeros(1, 0), Mat::zeros(1, 0))
        };
        let omega = kernels::at_mul_b(&u, &u)?;
        let zeta = kernels::at_mul_b(&u, &xn)?;
        let p_mat = if k > 0 {
            omega.sub(&kernels::at_mul_b(&w_c, &w_c)?)?
        } else {
            omega
        };
        let rkk = kernels::cholesky(&p_mat).map_err(chol_abort)?;
        let rho = if k > 0 {
            zeta.sub(&kernels::at_mul_b(&w_c, &z_c)?)?
        } else {
            zeta
        };
        // Apply Rkk^{-T} from the left.
        let rnext = kernels::tri_solve(&rkk, &rho, Side::Left, true)?;
        r.set_block(ks, ks, &rkk);
        r.set_block(ks, (k + 1) * s, &rnext);
        let qk = if k == 0 {
            kernels::tri_solve(&rkk, &u, Side::Right, false)?
        } else {
            // Fold the lagged reorthogonalization into R's column k.
            for j in 0..ks {
                for c in 0..s {
                    r[(j, ks + c)] += w_c[(j, c)];
                    r[(j, (k + 1) * s + c)] = z_c[(j, c)];
                }
            }
            let v = u.sub(&kernels::matmul(&qpre, &w_c)?)?;
            kernels::tri_solve(&rkk, &v, Side::Right, false)?
        };
        q.set_col_range(ks, &qk);
        let qdone = q.col_range(0, (k + 1) * s);
        let rcol = r.block(0, (k + 1) * s, (k + 1) * s, (k + 2) * s);
        u = xn.sub(&kernels::matmul(&qdone, &rcol)?)?;
    }
    // Final fused reduction to close out the last block.
    ev.record(Origin::Skeleton);
    let ks = (p - 1) * s;
    let qpre = q.col_range(0, ks);
    let w_c = if p > 1 {
        kernels::at_mul_b(&qpre, &u)?
    } else {
        Mat::zeros(1, 0)
    };
    let omega = kernels::at_mul_b(&u, &u)?;
    let p_mat = if p > 1 {
        omega.sub(&kernels::at_mul_b(&w_c, &w_c)?)?
    } else {
        omega
    };
    let rpp = kernels::cholesky(&p_mat).map_err(chol_abort)?;
    let qp = if p > 1 {
        for j in 0..ks {
            for c in 0..s {
                r[(j, ks + c)] += w_c[(j, c)];
            }
        }
        let v = u.sub(&kernels::matmul(&qpre, &w_c)?)?;
        kernels::tri_solve(&rpp, &v, Side::Right, false)?
    } else {
        kernels::tri_solve(&rpp, &u, Side::Right, false)?
    };
    r.set_block(ks, ks, &rpp);
    q.set_col_range(ks, &qp);
    Ok(())
}

/// Block analog of the column-wise selective reorthogonalization step:
/// fused projections of the whole block against the finished basis with
/// per-column fault checks and replacement, then a column-wise sweep that
/// also builds the within-block factor.
pub fn bcgs_step_sror(
    qprev: &Mat,
    xk: &Mat,
    rpltol: f64,
    rng: &mut Rng,
    ev: &mut EventLog,
) -> (Mat, Mat, Mat) {
    let m = xk.rows();
    let s = xk.cols();
    let ks = qprev.cols();
    let mut rcol = if ks > 0 {
        Mat::zeros(ks, s)
    } else {
        Mat::zeros(1, 0)
    };
    let mut rdiag = Mat::zeros(s, s);
    let mut y = xk.clone();

    // Phase 1: block projection passes against the finished basis.
    let mut nu = vec![0.0; s];
    let mut nu1 = vec![0.0; s];
    let mut active = vec![false; s];
    if ks > 0 {
        ev.record(Origin::Skeleton);
        for i in 0..s {
            let n = y.col_norm(i);
            nu[i] = n;
            nu1[i] = n;
            active[i] = n != 0.0;
        }
        let mut passes = 0;
        while active.iter().any(|a| *a) && passes < 8 {
            passes += 1;
            ev.record(Origin::Skeleton); // fused Q^T Y over active columns
            let mut coeffs = Mat::zeros(ks, s);
            for i in 0..s {
                if !active[i] {
                    continue;
                }
                for j in 0..ks {
                    coeffs[(j, i)] = dot(qprev.col(j), y.col(i));
                }
            }
            for i in 0..s {
                if !active[i] {
                    continue;
                }
                for j in 0..ks {
                    let c = coeffs[(j, i)];
                    rcol[(j, i)] += c;
                    let qj = qprev.col(j);
                    for (yi, qv) in y.col_mut(i).iter_mut().zip(qj) {
                        *yi -= c * qv;
                    }
                }
            }
            ev.record(Origin::Skeleton); // fused column norms
            for i in 0..s {
                if !active[i] {
                    continue;
                }
                let n2 = y.col_norm(i);
                if n2 > 0.5 * nu1[i] {
                    active[i] = false;
                } else if n2 > rpltol * nu[i] * EPS {
                    nu1[i] = n2;
                } else {
                    // Fault: replace by a tiny random vector and keep going.
                    nu[i] *= EPS;
                    nu1[i] = nu[i];
                    let repl = muscles::random_centered(m, rng);
                    let n = repl.iter().map(|v| v * v).sum::<f64>().sqrt();
                    for (yi, rv) in y.col_mut(i).iter_mut().zip(&repl) {
                        *yi = rv * nu[i] / n;
                    }
                }
            }
        }
    } else {
        for i in 0..s {
            nu[i] = y.col_norm(i);
        }
    }

    // Phase 2: column-wise cleanup against the combined basis, building the
    // within-block orthonormal columns.
    let mut qk = Mat::zeros(m, s);
    for i in 0..s {
        let basis = if ks > 0 {
            qprev.hcat(&qk.col_range(0, i))
        } else {
            qk.col_range(0, i)
        };
        let basis = if basis.cols() == 0 {
            Mat::zeros(m, 0)
        } else {
            basis
        };
        let step = muscles::cgs_step_sror(
            &basis,
            y.col(i),
            Some(nu[i]),
            rpltol,
            rng,
            ev,
        );
        for (j, c) in step.r.iter().enumerate() {
            if j < ks {
                rcol[(j, i)] += c;
            } else {
                rdiag[(j - ks, i)] += c;
            }
        }
        rdiag[(i, i)] = step.rho;
        qk.col_mut(i).copy_from_slice(&step.y);
    }
    (qk, rcol, rdiag)
}

fn bcgs_sror_skel(
    x: &Mat,
    lay: BlockLayout,
    ctx: &mut Ctx,
    opts: &SkeletonOptions,
    ev: &mut EventLog,
    q: &mut Mat,
    r: &mut Mat,
) -> Step {
    let s = lay.s;
    let (q0, r00, _) = ctx.first_io(&xblk(x, 0, s), opts.reorth_first_block, ev)?;
    q.set_col_range(0, &q0);
    r.set_block(0, 0, &r00);
    let rpl = if ctx.musc == MuscleId::CgsSro {
        0.0
    } else {
        opts.rpltol
    };
    for k in 1..lay.p {
        let qpre = q.col_range(0, k * s);
        let xk = xblk(x, k, s);
        let (qk, rcol, rdiag) = bcgs_step_sror(&qpre, &xk, rpl, ctx.rng, ev);
        q.set_col_range(k * s, &qk);
        r.set_block(0, k * s, &rcol);
        r.set_block(k * s, k * s, &rdiag);
    }
    Ok(())
}

fn bmgs(
    x: &Mat,
    lay: BlockLayout,
    ctx: &mut Ctx,
    opts: &SkeletonOptions,
    ev: &mut EventLog,
    q: &mut Mat,
    r: &mut Mat,
) -> Step {
    let s = lay.s;
    let (q0, r00, t00) = ctx.first_io(&xblk(x, 0, s), opts.reorth_first_block, ev)?;
    q.set_col_range(0, &q0);
    r.set_block(0, 0, &r00);
    let mut tblocks = vec![t00];
    for k in 1..lay.p {
        let mut w = xblk(x, k, s);
        for j in 0..k {
            let qj = q.col_range(j * s, (j + 1) * s);
            ev.record(Origin::Skeleton);
            let mut c = kernels::at_mul_b(&qj, &w)?;
            if opts.t_fix {
                c = kernels::gemm(&tblocks[j], true, &c, false, 1.0, 0.0, None)?;
            }
            w = w.sub(&kernels::matmul(&qj, &c)?)?;
            r.set_block(j * s, k * s, &c);
        }
        let (qk, rkk, tk) = ctx.io(&w, ev)?;
        q.set_col_range(k * s, &qk);
        r.set_block(k * s, k * s, &rkk);
        tblocks.push(tk);
    }
    Ok(())
}

/// C with block j equal to sum over i <= j of T_{ij}^T V_i, reading the
/// leading k x k block triangle of the big T.
fn t_transpose_mul(t: &Mat, k: usize, s: usize, v: &Mat) -> Result<Mat> {
    let mut out = Mat::zeros(k * s, v.cols());
    for j in 0..k {
        let mut acc = Mat::zeros(s, v.cols());
        for i in 0..=j {
            let tij = t.block(i * s, (i + 1) * s, j * s, (j + 1) * s);
            let vi = v.block(i * s, (i + 1) * s, 0, v.cols());
            acc = acc.add(&kernels::gemm(&tij, true, &vi, false, 1.0, 0.0, None)?)?;
        }
        out.set_block(j * s, 0, &acc);
    }
    Ok(out)
}

/// Solve T^T C = V by block forward substitution over the leading k blocks.
fn t_transpose_solve(t: &Mat, k: usize, s: usize, v: &Mat) -> Result<Mat> {
    let mut out = Mat::zeros(k * s, v.cols());
    for j in 0..k {
        let mut rhs = v.block(j * s, (j + 1) * s, 0, v.cols());
        for i in 0..j {
            let tij = t.block(i * s, (i + 1) * s, j * s, (j + 1) * s);
            let ci = out.block(i * s, (i + 1) * s, 0, v.cols());
            rhs = rhs.sub(&kernels::gemm(&tij, true, &ci, false, 1.0, 0.0, None)?)?;
        }
        let tjj = t.block(j * s, (j + 1) * s, j * s, (j + 1) * s);
        let cj = kernels::tri_solve(&tjj, &rhs, Side::Left, true)?;
        out.set_block(j * s, 0, &cj);
    }
    Ok(out)
}

/// X with block i equal to sum over j in i..k of T_{ij} G_j.
fn t_mul(t: &Mat, k: usize, s: usize, g: &Mat) -> Result<Mat> {
    let mut out = Mat::zeros(k * s, g.cols());
    for i in 0..k {
        let mut acc = Mat::zeros(s, g.cols());
        for j in i..k {
            let tij = t.block(i * s, (i + 1) * s, j * s, (j + 1) * s);
            let gj = g.block(j * s, (j + 1) * s, 0, g.cols());
            acc = acc.add(&kernels::matmul(&tij, &gj)?)?;
        }
        out.set_block(i * s, 0, &acc);
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn bmgs_svl_lts(
    x: &Mat,
    lay: BlockLayout,
    ctx: &mut Ctx,
    opts: &SkeletonOptions,
    svl: bool,
    ev: &mut EventLog,
    q: &mut Mat,
    r: &mut Mat,
    t: &mut Mat,
) -> Step {
    let s = lay.s;
    let (q0, r00, t00) = ctx.first_io(&xblk(x, 0, s), opts.reorth_first_block, ev)?;
    q.set_col_range(0, &q0);
    r.set_block(0, 0, &r00);
    t.set_block(0, 0, &t00);
    for k in 1..lay.p {
        let ks = k * s;
        let qpre = q.col_range(0, ks);
        let xk = xblk(x, k, s);
        ev.record(Origin::Skeleton);
        let raw = kernels::at_mul_b(&qpre, &xk)?;
        let c = if svl {
            t_transpose_mul(t, k, s, &raw)?
        } else {
            t_transpose_solve(t, k, s, &raw)?
        };
        let w = xk.sub(&kernels::matmul(&qpre, &c)?)?;
        let (qk, rkk, tkk) = ctx.io(&w, ev)?;
        q.set_col_range(ks, &qk);
        r.set_block(0, ks, &c);
        r.set_block(ks, ks, &rkk);
        t.set_block(ks, ks, &tkk);
        // Extend the correction factor with the new block column.
        ev.record(Origin::Skeleton);
        let f = kernels::at_mul_b(&qpre, &q.col_range(ks, ks + s))?;
        if svl {
            let g = kernels::matmul(&f, &tkk)?;
            let col = t_mul(t, k, s, &g)?.scale(-1.0);
            t.set_block(0, ks, &col);
        } else {
            t.set_block(0, ks, &f);
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bmgs_cwy_icwy(
    x: &Mat,
    lay: BlockLayout,
    ctx: &mut Ctx,
    cwy: bool,
    ev: &mut EventLog,
    q: &mut Mat,
    r: &mut Mat,
    t: &mut Mat,
) -> Step {
    let s = lay.s;
    let p = lay.p;
    let mut u = xblk(x, 0, s);
    for k in 0..p - 1 {
        let ks = k * s;
        let xn = xblk(x, k + 1, s);
        // One fused reduction: [Q_{1:k-1} U]^T [U X_{k+1}].
        ev.record(Origin::Skeleton);
        let qpre = q.col_range(0, ks);
        let (w_c, z_c) = if k > 0 {
            (kernels::at_mul_b(&qpre, &u)?, kernels::at_mul_b(&qpre, &xn)?)
        } else {
            (Mat::zeros(1, 0), Mat::zeros(1, 0))
        };
        let omega = kernels::at_mul_b(&u, &u)?;
        let zeta = kernels::at_mul_b(&u, &xn)?;
        // Cholesky recovery of the diagonal block.
        let rkk = kernels::cholesky(&omega).map_err(chol_abort)?;
        let qk = kernels::tri_solve(&rkk, &u, Side::Right, false)?;
        q.set_col_range(ks, &qk);
        r.set_block(ks, ks, &rkk);
        if k > 0 {
            let wn = kernels::tri_solve(&rkk, &w_c, Side::Right, false)?;
            if cwy {
                let col = t_mul(t, k, s, &wn)?.scale(-1.0);
                t.set_block(0, ks, &col);
            } else {
                t.set_block(0, ks, &wn);
            }
        }
        let tail = kernels::tri_solve(&rkk, &zeta, Side::Left, true)?;
        let mut stacked = Mat::zeros(ks + s, s);
        if k > 0 {
            stacked.set_block(0, 0, &z_c);
        }
        stacked.set_block(ks, 0, &tail);
        let c = if cwy {
            t_transpose_mul(t, k + 1, s, &stacked)?
        } else {
            t_transpose_solve(t, k + 1, s, &stacked)?
        };
        r.set_block(0, (k + 1) * s, &c);
        let qdone = q.col_range(0, ks + s);
        u = xn.sub(&kernels::matmul(&qdone, &c)?)?;
    }
    // The last block is closed by a muscle call.
    let (qp, rpp, _) = ctx.io(&u, ev)?;
    q.set_col_range((p - 1) * s, &qp);
    r.set_block((p - 1) * s, (p - 1) * s, &rpp);
    Ok(())
}

/// Residual of R^T R = S^T S + T^T T for X = Y + Z with Y^T Z = 0, where R,
/// S, T are the triangular factors of X, Y, Z; returns the residual scaled
/// by the squared spectral norm of X.
pub fn verify_block_pythagorean(y: &Mat, z: &Mat) -> Result<f64> {
    let x = y.add(z)?;
    let (_, r) = kernels::house_qr(&x)?;
    let (_, sf) = kernels::house_qr(y)?;
    let (_, tf) = kernels::house_qr(z)?;
    let lhs = kernels::at_mul_b(&r, &r)?;
    let rhs = kernels::at_mul_b(&sf, &sf)?.add(&kernels::at_mul_b(&tf, &tf)?)?;
    let num = kernels::two_norm(&lhs.sub(&rhs)?)?;
    let den = kernels::two_norm(&x)?;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / (den * den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{at_mul_b, house_qr, jacobi_svd_values, matmul, tri_solve, two_norm};

    fn random_mat(rows: usize, cols: usize, seed: u64) -> Mat {
        let mut rng = Rng::new(seed);
        let mut m = Mat::zeros(rows, cols);
        for v in m.data_mut() {
            *v = rng.normal();
        }
        m
    }

    fn conditioned(m: usize, n: usize, log_kappa: f64, seed: u64) -> Mat {
        let base = random_mat(m, n, seed);
        let (u, _) = house_qr(&base).unwrap();
        let mut sig = Mat::zeros(n, n);
        for j in 0..n {
            sig[(j, j)] = 10.0_f64.powf(-log_kappa * j as f64 / (n as f64 - 1.0));
        }
        let v = random_mat(n, n, seed + 1);
        let (vq, _) = house_qr(&v).unwrap();
        matmul(&matmul(&u, &sig).unwrap(), &vq.transpose()).unwrap()
    }

    fn run(
        x: &Mat,
        lay: BlockLayout,
        skel: SkeletonId,
        musc: MuscleId,
        opts: &SkeletonOptions,
    ) -> BlockQRResult {
        let mut rng = Rng::new(4242);
        block_orthogonalize(x, lay, skel, musc, opts, &mut rng).unwrap()
    }

    fn loo(q: &Mat) -> f64 {
        let g = at_mul_b(q, q).unwrap();
        two_norm(&g.sub(&Mat::identity(q.cols())).unwrap()).unwrap()
    }

    fn compatible_pairs() -> Vec<(SkeletonId, MuscleId)> {
        let mut out = vec![];
        for skel in SkeletonId::ALL {
            for musc in MuscleId::ALL {
                if skel.accepts(musc) {
                    out.push((skel, musc));
                }
            }
        }
        out
    }

    #[test]
    fn identity_block_columns_fixed_point() {
        let lay = BlockLayout::new(10, 3, 2).unwrap();
        let mut x = Mat::zeros(10, 6);
        for j in 0..6 {
            x[(j, j)] = 1.0;
        }
        for (skel, musc) in compatible_pairs() {
            let out = run(&x, lay, skel, musc, &SkeletonOptions::default());
            assert_eq!(out.status, RunStatus::Ok, "{skel}/{musc}");
            let dq = out.q.sub(&x).unwrap().frobenius_norm();
            let dr = out.r.sub(&Mat::identity(6)).unwrap().frobenius_norm();
            assert!(dq <= 1e-13, "{skel}/{musc}: dq {dq}");
            assert!(dr <= 1e-13, "{skel}/{musc}: dr {dr}");
        }
    }

    #[test]
    fn single_block_reduces_to_muscle_bitwise() {
        let x = random_mat(20, 4, 11);
        let lay = BlockLayout::new(20, 1, 4).unwrap();
        for musc in [MuscleId::Mgs, MuscleId::HouseQr, MuscleId::CgsSror] {
            let mut rng_a = Rng::new(99);
            let block =
                block_orthogonalize(&x, lay, SkeletonId::Bcgs, musc, &SkeletonOptions::default(), &mut rng_a)
                    .unwrap();
            let mut rng_b = Rng::new(99);
            let single =
                intra_orthogonalize(&x, musc, &MuscleParams::default(), &mut rng_b).unwrap();
            assert_eq!(block.q, single.q, "{musc}");
            assert_eq!(block.r, single.r, "{musc}");
        }
    }

    #[test]
    fn skeleton_sync_counts() {
        let (m, p, s) = (40, 5, 3);
        let lay = BlockLayout::new(m, p, s).unwrap();
        let x = random_mat(m, p * s, 21);
        let cases = [
            (SkeletonId::Bcgs, p - 1),
            (SkeletonId::BcgsIro, 2 * (p - 1)),
            (SkeletonId::Bmgs, p * (p - 1) / 2),
            (SkeletonId::BcgsIroLs, p),
            (SkeletonId::BmgsCwy, p - 1),
            (SkeletonId::BmgsIcwy, p - 1),
        ];
        for (skel, expect) in cases {
            let out = run(&x, lay, skel, MuscleId::HouseQr, &SkeletonOptions::default());
            assert_eq!(out.status, RunStatus::Ok, "{skel}");
            assert_eq!(
                out.events.count(Origin::Skeleton),
                expect,
                "{skel}: skeleton-origin count"
            );
        }
        // The low-sync tail still ends in exactly one muscle call.
        let out = run(&x, lay, SkeletonId::BmgsIcwy, MuscleId::CholQr, &SkeletonOptions::default());
        assert_eq!(out.events.count(Origin::Muscle), 1);
    }

    #[test]
    fn oracle_range_agreement_all_pairs() {
        let (m, p, s) = (60, 4, 3);
        let lay = BlockLayout::new(m, p, s).unwrap();
        let n = p * s;
        let x = conditioned(m, n, 2.0, 31);
        let (q_star, _) = house_qr(&x).unwrap();
        for (skel, musc) in compatible_pairs() {
            let out = run(&x, lay, skel, musc, &SkeletonOptions::default());
            assert_eq!(out.status, RunStatus::Ok, "{skel}/{musc}");
            let dist = crate::metrics::range_distance(&out.q, &q_star).unwrap();
            assert!(dist <= 1e-10, "{skel}/{musc}: range distance {dist}");
        }
    }

    #[test]
    fn residual_bound_for_non_exempt_variants() {
        let (m, p, s) = (60, 4, 3);
        let lay = BlockLayout::new(m, p, s).unwrap();
        let n = p * s;
        let x = conditioned(m, n, 2.0, 41);
        let xnorm = two_norm(&x).unwrap();
        for (skel, musc) in compatible_pairs() {
            if matches!(skel, SkeletonId::BmgsCwy | SkeletonId::BmgsIcwy) {
                continue;
            }
            let out = run(&x, lay, skel, musc, &SkeletonOptions::default());
            assert_eq!(out.status, RunStatus::Ok, "{skel}/{musc}");
            let res = matmul(&out.q, &out.r).unwrap().sub(&x).unwrap();
            let rel = two_norm(&res).unwrap() / xnorm;
            assert!(
                rel <= 100.0 * EPS * n as f64,
                "{skel}/{musc}: rel residual {rel}"
            );
        }
    }

    #[test]
    fn r_is_block_upper_triangular() {
        let (m, p, s) = (50, 4, 3);
        let lay = BlockLayout::new(m, p, s).unwrap();
        let x = random_mat(m, p * s, 51);
        for (skel, musc) in compatible_pairs() {
            let out = run(&x, lay, skel, musc, &SkeletonOptions::default());
            assert_eq!(out.status, RunStatus::Ok, "{skel}/{musc}");
            for jb in 0..p {
                for j in jb * s..(jb + 1) * s {
                    for i in (j + 1)..p * s {
                        if i < (jb + 1) * s {
                            // Within the diagonal block: upper triangular.
                            assert_eq!(out.r[(i, j)], 0.0, "{skel}/{musc} at ({i},{j})");
                        } else {
                            assert_eq!(out.r[(i, j)], 0.0, "{skel}/{musc} at ({i},{j})");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn incompatible_pairing_rejected() {
        let lay = BlockLayout::new(20, 2, 2).unwrap();
        let x = random_mat(20, 4, 61);
        let mut rng = Rng::new(1);
        let err = block_orthogonalize(
            &x,
            lay,
            SkeletonId::BcgsSror,
            MuscleId::HouseQr,
            &SkeletonOptions::default(),
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, Error::IncompatiblePairing { .. }));
        let err = block_orthogonalize(
            &x,
            lay,
            SkeletonId::Bcgs,
            MuscleId::HouseQr,
            &SkeletonOptions {
                t_fix: true,
                ..Default::default()
            },
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    fn laeuchli(m: usize, n: usize, eta: f64) -> Mat {
        let mut x = Mat::zeros(m, n);
        for j in 0..n {
            x[(0, j)] = 1.0;
            x[(1 + j, j)] = eta;
        }
        x
    }

    #[test]
    fn abort_propagates_failure_status() {
        let lay = BlockLayout::new(30, 3, 2).unwrap();
        let x = laeuchli(30, 6, 1e-9);
        let out = run(&x, lay, SkeletonId::Bcgs, MuscleId::CholQr, &SkeletonOptions::default());
        assert!(
            matches!(out.status, RunStatus::CholFail | RunStatus::NanEncountered),
            "status {:?}",
            out.status
        );
    }

    #[test]
    fn bcgs_step_sror_empty_basis_orthonormal_input() {
        let mut rng = Rng::new(7);
        let mut ev = EventLog::new();
        let mut xk = Mat::zeros(8, 2);
        xk[(0, 0)] = 1.0;
        xk[(1, 1)] = 1.0;
        let empty = Mat::zeros(8, 0);
        let (qk, _, rdiag) = bcgs_step_sror(&empty, &xk, 100.0, &mut rng, &mut ev);
        assert!(qk.sub(&xk).unwrap().frobenius_norm() <= 1e-14);
        assert!(rdiag.sub(&Mat::identity(2)).unwrap().frobenius_norm() <= 1e-14);
    }

    #[test]
    fn bcgs_step_sror_exact_repeat_takes_replacement_path() {
        let base = random_mat(30, 4, 71);
        let (qprev, _) = house_qr(&base).unwrap();
        let xk = qprev.col_range(0, 2);
        let mut rng = Rng::new(8);
        let mut ev = EventLog::new();
        let (qk, _, rdiag) = bcgs_step_sror(&qprev, &xk, 100.0, &mut rng, &mut ev);
        let overlap = two_norm(&at_mul_b(&qprev, &qk).unwrap()).unwrap();
        assert!(overlap <= 1e-8, "overlap {overlap}");
        // The diagonal factor records the collapse.
        assert!(rdiag[(0, 0)] <= 1e-10 && rdiag[(1, 1)] <= 1e-10);
        assert!(loo(&qk) <= 1e-10);
    }

    #[test]
    fn zero_block_passes_rank_deficiency_onto_r() {
        let (m, p, s) = (40, 3, 2);
        let lay = BlockLayout::new(m, p, s).unwrap();
        let mut x = random_mat(m, p * s, 81);
        x.col_mut(3).fill(0.0);
        let out = run(&x, lay, SkeletonId::BcgsSror, MuscleId::CgsSror, &SkeletonOptions::default());
        assert_eq!(out.status, RunStatus::Ok);
        assert_eq!(out.r[(3, 3)], 0.0);
        assert!(loo(&out.q) <= 1e-12);
    }

    #[test]
    fn block_pythagorean_cases() {
        // 3-4-5: orthogonal columns with norms 3 and 4 compose to norm 5.
        let mut y = Mat::zeros(4, 1);
        y[(0, 0)] = 3.0;
        let mut z = Mat::zeros(4, 1);
        z[(1, 0)] = 4.0;
        assert_eq!(verify_block_pythagorean(&y, &z).unwrap(), 0.0);
        // Orthogonal ranges built from disjoint coordinate blocks.
        let mut y = Mat::zeros(8, 2);
        y[(0, 0)] = 2.0;
        y[(1, 1)] = 3.0;
        let a = random_mat(2, 2, 91);
        let mut z = Mat::zeros(8, 2);
        z.set_block(2, 0, &a);
        assert!(verify_block_pythagorean(&y, &z).unwrap() <= 1e-14);
        // Degenerate summand.
        let zero = Mat::zeros(8, 2);
        assert!(verify_block_pythagorean(&y, &zero).unwrap() <= 1e-15);
    }

    #[test]
    fn bmgs_projector_telescoping() {
        let (m, p, s) = (60, 4, 3);
        let lay = BlockLayout::new(m, p, s).unwrap();
        let x = conditioned(m, p * s, 3.0, 95);
        let out = run(&x, lay, SkeletonId::Bmgs, MuscleId::Mgs, &SkeletonOptions::default());
        assert_eq!(out.status, RunStatus::Ok);
        for k in 1..p {
            let xk = x.col_range(k * s, (k + 1) * s);
            let mut w = xk.clone();
            for j in 0..k {
                let qj = out.q.col_range(j * s, (j + 1) * s);
                let c = at_mul_b(&qj, &w).unwrap();
                w = w.sub(&matmul(&qj, &c).unwrap()).unwrap();
            }
            let qk = out.q.col_range(k * s, (k + 1) * s);
            let rkk = out.r.block(k * s, (k + 1) * s, k * s, (k + 1) * s);
            let recon = matmul(&qk, &rkk).unwrap();
            let err = recon.sub(&w).unwrap().frobenius_norm();
            assert!(err <= 1e-10 * xk.frobenius_norm(), "block {k}: {err}");
        }
    }

    #[test]
    fn weyl_style_inverse_bound() {
        let (m, p, s) = (60, 4, 3);
        let lay = BlockLayout::new(m, p, s).unwrap();
        let n = p * s;
        let x = conditioned(m, n, 4.0, 97);
        let svals = jacobi_svd_values(&x).unwrap();
        let sigma_min = svals[n - 1];
        for skel in [SkeletonId::Bcgs, SkeletonId::BcgsIro, SkeletonId::Bmgs, SkeletonId::BcgsPip] {
            let out = run(&x, lay, skel, MuscleId::HouseQr, &SkeletonOptions::default());
            assert_eq!(out.status, RunStatus::Ok, "{skel}");
            let rinv = tri_solve(&out.r, &Mat::identity(n), Side::Left, false).unwrap();
            let norm_rinv = two_norm(&rinv).unwrap();
            assert!(
                norm_rinv <= 2.0 / sigma_min,
                "{skel}: ||R^-1|| {norm_rinv} vs 2/sigma_min {}",
                2.0 / sigma_min
            );
        }
    }

    #[test]
    fn chol_residual_of_pythagorean_variants() {
        let (m, p, s) = (60, 4, 3);
        let lay = BlockLayout::new(m, p, s).unwrap();
        let n = p * s;
        let x = conditioned(m, n, 4.0, 98);
        let xtx = at_mul_b(&x, &x).unwrap();
        let xn2 = two_norm(&x).unwrap().powi(2);
        for skel in [SkeletonId::BcgsPip, SkeletonId::BcgsPio] {
            let out = run(&x, lay, skel, MuscleId::HouseQr, &SkeletonOptions::default());
            assert_eq!(out.status, RunStatus::Ok, "{skel}");
            let rtr = at_mul_b(&out.r, &out.r).unwrap();
            let rel = two_norm(&xtx.sub(&rtr).unwrap()).unwrap() / xn2;
            assert!(rel <= 100.0 * EPS * n as f64, "{skel}: chol residual {rel}");
        }
    }

    #[test]
    fn t_fix_restores_orthogonality_on_laeuchli() {
        let (m, p, s) = (40, 4, 2);
        let lay = BlockLayout::new(m, p, s).unwrap();
        let x = laeuchli(m, p * s, 1e-8);
        let plain = run(&x, lay, SkeletonId::Bmgs, MuscleId::MgsSvl, &SkeletonOptions::default());
        let fixed = run(
            &x,
            lay,
            SkeletonId::Bmgs,
            MuscleId::MgsSvl,
            &SkeletonOptions {
                t_fix: true,
                ..Default::default()
            },
        );
        assert_eq!(plain.status, RunStatus::Ok);
        assert_eq!(fixed.status, RunStatus::Ok);
        let l_plain = loo(&plain.q);
        let l_fixed = loo(&fixed.q);
        assert!(l_plain >= 1e-2, "plain loo {l_plain}");
        assert!(l_fixed <= 1e-6, "fixed loo {l_fixed}");
    }

    #[test]
    fn reorth_first_block_improves_leading_block() {
        let (m, p, s) = (40, 3, 2);
        let lay = BlockLayout::new(m, p, s).unwrap();
        let mut x = conditioned(m, p * s, 6.0, 99);
        // Make the first block the ill-conditioned part.
        let perm: Vec<usize> = (0..p * s).rev().collect();
        let mut xp = Mat::zeros(m, p * s);
        for (to, &from) in perm.iter().enumerate() {
            xp.col_mut(to).copy_from_slice(x.col(from));
        }
        x = xp;
        let out = run(
            &x,
            lay,
            SkeletonId::BcgsIro,
            MuscleId::Cgs,
            &SkeletonOptions {
                reorth_first_block: true,
                ..Default::default()
            },
        );
        assert_eq!(out.status, RunStatus::Ok);
        let q1 = out.q.col_range(0, s);
        assert!(loo(&q1) <= 100.0 * EPS);
        // Residual still holds with the combined first-block R.
        let res = matmul(&out.q, &out.r).unwrap().sub(&x).unwrap();
        assert!(res.frobenius_norm() <= 1e-10 * x.frobenius_norm());
    }

    #[test]
    fn event_origins_are_separated() {
        let (m, p, s) = (40, 3, 2);
        let lay = BlockLayout::new(m, p, s).unwrap();
        let x = random_mat(m, p * s, 120);
        let out = run(&x, lay, SkeletonId::Bcgs, MuscleId::Cgs, &SkeletonOptions::default());
        assert_eq!(out.events.count(Origin::Skeleton), p - 1);
        // Each muscle call on an s-wide block contributes 2s - 1.
        assert_eq!(out.events.count(Origin::Muscle), p * (2 * s - 1));
    }
}
