//! Dense real matrices in column-major order.

use crate::error::{Error, Result};

/// Dense `rows x cols` matrix of f64, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1, "Mat requires at least one row");
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from a column-major data vector.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must be rows*cols");
        assert!(rows >= 1);
        Mat { rows, cols, data }
    }

    /// Build from rows of data; convenient for literals in tests.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        let mut m = Mat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c);
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Copy of columns `j0..j1`.
    pub fn col_range(&self, j0: usize, j1: usize) -> Mat {
        assert!(j0 <= j1 && j1 <= self.cols);
        Mat {
            rows: self.rows,
            cols: j1 - j0,
            data: self.data[j0 * self.rows..j1 * self.rows].to_vec(),
        }
    }

    /// Overwrite columns `j0..` with the columns of `src`.
    pub fn set_col_range(&mut self, j0: usize, src: &Mat) {
        assert_eq!(self.rows, src.rows);
        assert!(j0 + src.cols <= self.cols);
        self.data[j0 * self.rows..(j0 + src.cols) * self.rows].copy_from_slice(&src.data);
    }

    /// Copy of the submatrix at rows `i0..i1`, columns `j0..j1`.
    pub fn block(&self, i0: usize, i1: usize, j0: usize, j1: usize) -> Mat {
        assert!(i0 < i1 && i1 <= self.rows && j0 <= j1 && j1 <= self.cols);
        let mut out = Mat::zeros(i1 - i0, j1 - j0);
        for j in j0..j1 {
            for i in i0..i1 {
                out[(i - i0, j - j0)] = self[(i, j)];
            }
        }
        out
    }

    /// Overwrite the submatrix with top-left corner (i0, j0).
    pub fn set_block(&mut self, i0: usize, j0: usize, src: &Mat) {
        assert!(i0 + src.rows <= self.rows && j0 + src.cols <= self.cols);
        for j in 0..src.cols {
            for i in 0..src.rows {
                self[(i0 + i, j0 + j)] = src[(i, j)];
            }
        }
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols.max(1), self.rows);
        if self.cols == 0 {
            return Mat {
                rows: 1,
                cols: 0,
                data: vec![],
            };
        }
        for j in 0..self.cols {
            for i in 0..self.rows {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, alpha: f64) -> Mat {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= alpha;
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "add: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v += w;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat> {
        self.add(&other.scale(-1.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn col_norm(&self, j: usize) -> f64 {
        self.col(j).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn has_nonfinite(&self) -> bool {
        self.data.iter().any(|v| !v.is_finite())
    }

    pub fn is_upper_triangular(&self, tol: f64) -> bool {
        for j in 0..self.cols {
            for i in (j + 1)..self.rows {
                if self[(i, j)].abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Horizontal concatenation [self | other].
    pub fn hcat(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows);
        let mut out = Mat::zeros(self.rows, self.cols + other.cols);
        out.set_col_range(0, self);
        out.set_col_range(self.cols, other);
        out
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

/// Partition of an m x (p*s) matrix into p block vectors of width s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct BlockLayout {
    pub m: usize,
    pub p: usize,
    pub s: usize,
}

impl BlockLayout {
    pub fn new(m: usize, p: usize, s: usize) -> Result<Self> {
        let n = p * s;
        if n < 1 || m < n {
            return Err(Error::InvalidParameter(format!(
                "block layout requires m >= p*s >= 1, got m={m}, p={p}, s={s}"
            )));
        }
        Ok(BlockLayout { m, p, s })
    }

    pub fn n(&self) -> usize {
        self.p * self.s
    }
}
