//! Seeded test-matrix generators.
//!
//! Every family is deterministic in (spec, seed).  Orthonormal factors are
//! built by Householder QR of seeded normal matrices.

use crate::error::{Error, Result};
use crate::kernels::{self, EPS};
use crate::mat::{BlockLayout, Mat};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatrixKind {
    RandUniform,
    RandNormal,
    RankDef,
    Laeuchli,
    Monomial,
    SStep,
    Newton,
    Stewart,
    StewartExtreme,
    Glued,
    KappaSeries,
}

impl MatrixKind {
    pub const ALL: [MatrixKind; 11] = [
        MatrixKind::RandUniform,
        MatrixKind::RandNormal,
        MatrixKind::RankDef,
        MatrixKind::Laeuchli,
        MatrixKind::Monomial,
        MatrixKind::SStep,
        MatrixKind::Newton,
        MatrixKind::Stewart,
        MatrixKind::StewartExtreme,
        MatrixKind::Glued,
        MatrixKind::KappaSeries,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MatrixKind::RandUniform => "rand_uniform",
            MatrixKind::RandNormal => "rand_normal",
            MatrixKind::RankDef => "rank_def",
            MatrixKind::Laeuchli => "laeuchli",
            MatrixKind::Monomial => "monomial",
            MatrixKind::SStep => "s_step",
            MatrixKind::Newton => "newton",
            MatrixKind::Stewart => "stewart",
            MatrixKind::StewartExtreme => "stewart_extreme",
            MatrixKind::Glued => "glued",
            MatrixKind::KappaSeries => "kappa_series",
        }
    }

    pub fn parse(name: &str) -> Option<MatrixKind> {
        let canon = name.replace('-', "_");
        MatrixKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str().eq_ignore_ascii_case(&canon))
    }
}

impl std::fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Kind-specific parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extra {
    None,
    /// Outer and within-block singular-value exponents (typically negative).
    Glued { r: f64, t: f64 },
    /// Condition exponent: singular values span 10^[-t, 0].
    Kappa { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixSpec {
    pub kind: MatrixKind,
    pub dims: BlockLayout,
    pub seed: u64,
    pub extra: Extra,
}

impl MatrixSpec {
    pub fn new(kind: MatrixKind, dims: BlockLayout, seed: u64) -> Self {
        let extra = match kind {
            MatrixKind::Glued => Extra::Glued { r: -8.0, t: -8.0 },
            MatrixKind::KappaSeries => Extra::Kappa { t: 8.0 },
            _ => Extra::None,
        };
        MatrixSpec {
            kind,
            dims,
            seed,
            extra,
        }
    }
}

fn random_normal_mat(rows: usize, cols: usize, rng: &mut Rng) -> Mat {
    let mut m = Mat::zeros(rows, cols);
    for v in m.data_mut() {
        *v = rng.normal();
    }
    m
}

/// Orthonormal rows x cols factor (rows >= cols) from a seeded normal draw.
fn orth(rows: usize, cols: usize, rng: &mut Rng) -> Result<Mat> {
    let (q, _) = kernels::house_qr(&random_normal_mat(rows, cols, rng))?;
    Ok(q)
}

/// 10^linspace(a, b, n) with exact endpoints.
fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![10.0_f64.powf(b)];
    }
    (0..n)
        .map(|i| {
            let e = (a * ((n - 1 - i) as f64) + b * (i as f64)) / ((n - 1) as f64);
            10.0_f64.powf(e)
        })
        .collect()
}

/// Greedy Leja ordering of points on [lo, hi]: each point maximizes the
/// product of distances to those already chosen.
fn leja_points(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let ncand = 1000.max(4 * count);
    let cand: Vec<f64> = (0..ncand)
        .map(|i| lo + (hi - lo) * i as f64 / (ncand - 1) as f64)
        .collect();
    let mut chosen: Vec<f64> = vec![hi];
    // Log-distance accumulators avoid under/overflow of the product.
    let mut score: Vec<f64> = cand.iter().map(|c| (c - hi).abs().ln()).collect();
    while chosen.len() < count {
        let (best, _) = score
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let point = cand[best];
        chosen.push(point);
        for (sc, c) in score.iter_mut().zip(&cand) {
            *sc += (c - point).abs().max(1e-300).ln();
        }
    }
    chosen
}

/// Diagonal operator with eigenvalues evenly distributed inside (1/10, 10).
fn operator_diag(m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| 0.1 + 9.9 * (i + 1) as f64 / (m + 1) as f64)
        .collect()
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

pub fn generate(spec: &MatrixSpec) -> Result<Mat> {
    let BlockLayout { m, p, s } = spec.dims;
    let n = spec.dims.n();
    let mut rng = Rng::new(spec.seed);
    match spec.kind {
        MatrixKind::RandUniform => {
            let mut x = Mat::zeros(m, n);
            for v in x.data_mut() {
                *v = rng.uniform();
            }
            Ok(x)
        }
        MatrixKind::RandNormal => Ok(random_normal_mat(m, n, &mut rng)),
        MatrixKind::RankDef => {
            let mut x = random_normal_mat(m, n, &mut rng);
            // First block vector is 100 times the last one.
            let last = x.col_range((p - 1) * s, p * s).scale(100.0);
            x.set_col_range(0, &last);
            Ok(x)
        }
        MatrixKind::Laeuchli => {
            if m < n + 1 {
                return Err(Error::InvalidParameter(format!(
                    "laeuchli requires m >= n+1, got m={m}, n={n}"
                )));
            }
            let eta = rng.uniform_in(EPS, EPS.sqrt());
            let mut x = Mat::zeros(m, n);
            for j in 0..n {
                x[(0, j)] = 1.0;
                x[(1 + j, j)] = eta;
            }
            Ok(x)
        }
        MatrixKind::Monomial => {
            let a = operator_diag(m);
            let mut x = Mat::zeros(m, n);
            for k in 0..p {
                let mut v: Vec<f64> = (0..m).map(|_| rng.uniform()).collect();
                normalize(&mut v);
                write_poly_block(&mut x, k * s, s, &a, &v, None);
            }
            Ok(x)
        }
        MatrixKind::SStep => {
            let a = operator_diag(m);
            let mut v: Vec<f64> = (0..m).map(|_| rng.uniform()).collect();
            normalize(&mut v);
            let mut x = Mat::zeros(m, n);
            for k in 0..p {
                write_poly_block(&mut x, k * s, s, &a, &v, None);
                // Next starting vector: normalized A^{s-1} v.
                let mut next = x.col(k * s + s - 1).to_vec();
                normalize(&mut next);
                v = next;
            }
            Ok(x)
        }
        MatrixKind::Newton => {
            let a = operator_diag(m);
            // Shift sequence shared across blocks, consumed s-1 per block.
            let shifts = leja_points(0.1, 10.0, (s.saturating_sub(1)) * p + 1);
            let mut v: Vec<f64> = (0..m).map(|_| rng.uniform()).collect();
            normalize(&mut v);
            let mut x = Mat::zeros(m, n);
            for k in 0..p {
                let block_shifts = &shifts[k * (s - 1).max(0)..];
                write_poly_block(&mut x, k * s, s, &a, &v, Some(block_shifts));
                let mut next = x.col(k * s + s - 1).to_vec();
                normalize(&mut next);
                v = next;
            }
            Ok(x)
        }
        MatrixKind::Stewart => {
            let sigma = logspace(0.0, -20.0, n);
            let mut x = svd_form(m, n, &sigma, &mut rng)?;
            let (dup, zero) = stewart_indices(n)?;
            let c0 = x.col(0).to_vec();
            x.col_mut(dup).copy_from_slice(&c0);
            x.col_mut(zero).fill(0.0);
            Ok(x)
        }
        MatrixKind::StewartExtreme => {
            let h = n / 2;
            if h < 2 {
                return Err(Error::InvalidParameter(
                    "stewart_extreme requires n >= 4".into(),
                ));
            }
            let mut sigma = logspace(0.0, -10.0, h);
            sigma.resize(n, 0.0);
            svd_form(m, n, &sigma, &mut rng)
        }
        MatrixKind::Glued => {
            let (r, t) = match spec.extra {
                Extra::Glued { r, t } => (r, t),
                _ => {
                    return Err(Error::InvalidParameter(
                        "glued requires r and t exponents".into(),
                    ))
                }
            };
            let sigma = logspace(0.0, r, n);
            let mut x = svd_form(m, n, &sigma, &mut rng)?;
            let sigma_block = logspace(0.0, t, s);
            let v_block = orth(s, s, &mut rng)?;
            for k in 0..p {
                let mut blk = x.col_range(k * s, (k + 1) * s);
                for (j, sb) in sigma_block.iter().enumerate() {
                    let scaled = blk.col(j).iter().map(|v| v * sb).collect::<Vec<_>>();
                    blk.col_mut(j).copy_from_slice(&scaled);
                }
                let rotated = kernels::gemm(&blk, false, &v_block, true, 1.0, 0.0, None)?;
                x.set_col_range(k * s, &rotated);
            }
            Ok(x)
        }
        MatrixKind::KappaSeries => {
            let t = match spec.extra {
                Extra::Kappa { t } => t,
                _ => return Err(Error::InvalidParameter("kappa_series requires t".into())),
            };
            let sigma = logspace(-t, 0.0, n);
            svd_form(m, n, &sigma, &mut rng)
        }
    }
}

/// U diag(sigma) V^T with seeded orthonormal U (m x n) and V (n x n).
fn svd_form(m: usize, n: usize, sigma: &[f64], rng: &mut Rng) -> Result<Mat> {
    let u = orth(m, n, rng)?;
    let v = orth(n, n, rng)?;
    let mut us = u;
    for (j, sg) in sigma.iter().enumerate() {
        for val in us.col_mut(j) {
            *val *= sg;
        }
    }
    kernels::gemm(&us, false, &v, true, 1.0, 0.0, None)
}

/// Zero-based duplicated and zero column indices: literal 25th/35th columns
/// when they fit, proportional positions otherwise.
fn stewart_indices(n: usize) -> Result<(usize, usize)> {
    if n >= 35 {
        Ok((24, 34))
    } else {
        let dup = n.div_ceil(2) - 1;
        let zero = (7 * n).div_ceil(10) - 1;
        if dup == 0 || zero <= dup {
            return Err(Error::InvalidParameter(format!(
                "stewart requires n large enough for distinct structural columns, got n={n}"
            )));
        }
        Ok((dup, zero))
    }
}

/// Columns v, q1(A)v, q2(A)v, ... for the diagonal operator: monomials when
/// shifts is None, Newton products (A - theta_1)...(A - theta_j) otherwise.
fn write_poly_block(
    x: &mut Mat,
    j0: usize,
    s: usize,
    a: &[f64],
    v: &[f64],
    shifts: Option<&[f64]>,
) {
    x.col_mut(j0).copy_from_slice(v);
    for j in 1..s {
        let prev = x.col(j0 + j - 1).to_vec();
        let col = x.col_mut(j0 + j);
        match shifts {
            None => {
                for (c, (pv, av)) in col.iter_mut().zip(prev.iter().zip(a)) {
                    *c = av * pv;
                }
            }
            Some(th) => {
                let theta = th[j - 1];
                for (c, (pv, av)) in col.iter_mut().zip(prev.iter().zip(a)) {
                    *c = (av - theta) * pv;
                }
            }
        }
    }
}
