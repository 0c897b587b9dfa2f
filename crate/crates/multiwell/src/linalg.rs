//! Thin dense-matrix layer over the system BLAS/LAPACK.
//!
//! Only the handful of routines the crate actually needs are bound:
//! `dsyevd` (symmetric eigenproblem), `dgemm` (matrix product) and
//! `dgels` (least squares). Matrices are column-major to match the
//! Fortran convention, so eigenvector columns are contiguous slices.

use std::os::raw::c_char;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix entry at ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("LAPACK {routine} failed with info = {info}")]
    LapackInfo { routine: &'static str, info: i32 },
    #[error("dimension {dim} exceeds the LAPACK index range")]
    DimensionOverflow { dim: usize },
}

extern "C" {
    fn dsyevd_(
        jobz: *const c_char,
        uplo: *const c_char,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        w: *mut f64,
        work: *mut f64,
        lwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );

    fn dgemm_(
        transa: *const c_char,
        transb: *const c_char,
        m: *const i32,
        n: *const i32,
        k: *const i32,
        alpha: *const f64,
        a: *const f64,
        lda: *const i32,
        b: *const f64,
        ldb: *const i32,
        beta: *const f64,
        c: *mut f64,
        ldc: *const i32,
    );

    fn dgels_(
        trans: *const c_char,
        m: *const i32,
        n: *const i32,
        nrhs: *const i32,
        a: *mut f64,
        lda: *const i32,
        b: *mut f64,
        ldb: *const i32,
        work: *mut f64,
        lwork: *const i32,
        info: *mut i32,
    );
}

/// Column-major dense matrix; column `j` is the contiguous slice
/// `data[j * rows .. (j + 1) * rows]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ColMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ColMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_data(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must be rows * cols");
        ColMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[col * self.rows + row]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[col * self.rows + row] = value;
    }

    /// Contiguous view of one column.
    pub fn column(&self, col: usize) -> &[f64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn column_mut(&mut self, col: usize) -> &mut [f64] {
        &mut self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Keep only the listed columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> ColMatrix {
        let mut out = ColMatrix::zeros(self.rows, cols.len());
        for (k, &c) in cols.iter().enumerate() {
            out.column_mut(k).copy_from_slice(self.column(c));
        }
        out
    }
}

fn as_lapack_dim(dim: usize) -> Result<i32, LinalgError> {
    i32::try_from(dim).map_err(|_| LinalgError::DimensionOverflow { dim })
}

/// Eigenvalues (ascending) and optionally eigenvectors of a symmetric
/// matrix given as a full column-major buffer. Consumes the buffer: it
/// becomes the eigenvector storage with `jobz = 'V'`, scratch otherwise.
pub fn symmetric_eigen(
    dim: usize,
    mut a: Vec<f64>,
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<ColMatrix>), LinalgError> {
    assert_eq!(a.len(), dim * dim, "buffer length must be dim * dim");
    if dim == 0 {
        return Ok((Vec::new(), want_vectors.then(|| ColMatrix::zeros(0, 0))));
    }
    for (pos, &x) in a.iter().enumerate() {
        if !x.is_finite() {
            return Err(LinalgError::NonFinite {
                row: pos % dim,
                col: pos / dim,
            });
        }
    }
    let n = as_lapack_dim(dim)?;
    let jobz = if want_vectors { b'V' } else { b'N' } as c_char;
    let uplo = b'L' as c_char;
    let mut w = vec![0.0f64; dim];
    let mut info: i32 = 0;

    // workspace query
    let mut work_query = [0.0f64; 1];
    let mut iwork_query = [0i32; 1];
    let query = -1i32;
    unsafe {
        dsyevd_(
            &jobz,
            &uplo,
            &n,
            a.as_mut_ptr(),
            &n,
            w.as_mut_ptr(),
            work_query.as_mut_ptr(),
            &query,
            iwork_query.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::LapackInfo {
            routine: "dsyevd (workspace query)",
            info,
        });
    }
    let lwork_usize = work_query[0] as usize;
    let lwork = as_lapack_dim(lwork_usize)?;
    let liwork = iwork_query[0].max(1);
    let mut work = vec![0.0f64; lwork_usize.max(1)];
    let mut iwork = vec![0i32; liwork as usize];

    unsafe {
        dsyevd_(
            &jobz,
            &uplo,
            &n,
            a.as_mut_ptr(),
            &n,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::LapackInfo {
            routine: "dsyevd",
            info,
        });
    }
    let vectors = want_vectors.then(|| ColMatrix::from_data(dim, dim, a));
    Ok((w, vectors))
}

/// `op(a) * op(b)` where each `op` is identity or transpose.
pub fn matmul(
    a: &ColMatrix,
    transpose_a: bool,
    b: &ColMatrix,
    transpose_b: bool,
) -> Result<ColMatrix, LinalgError> {
    let (m, k_a) = if transpose_a {
        (a.cols, a.rows)
    } else {
        (a.rows, a.cols)
    };
    let (k_b, n) = if transpose_b {
        (b.cols, b.rows)
    } else {
        (b.rows, b.cols)
    };
    assert_eq!(k_a, k_b, "inner dimensions must agree");
    let mut c = ColMatrix::zeros(m, n);
    if m == 0 || n == 0 || k_a == 0 {
        return Ok(c);
    }
    let ta = if transpose_a { b'T' } else { b'N' } as c_char;
    let tb = if transpose_b { b'T' } else { b'N' } as c_char;
    let (mi, ni, ki) = (as_lapack_dim(m)?, as_lapack_dim(n)?, as_lapack_dim(k_a)?);
    let lda = as_lapack_dim(a.rows)?;
    let ldb = as_lapack_dim(b.rows)?;
    let alpha = 1.0f64;
    let beta = 0.0f64;
    unsafe {
        dgemm_(
            &ta,
            &tb,
            &mi,
            &ni,
            &ki,
            &alpha,
            a.data.as_ptr(),
            &lda,
            b.data.as_ptr(),
            &ldb,
            &beta,
            c.data.as_mut_ptr(),
            &mi,
        );
    }
    Ok(c)
}

/// Least-squares solution of `a * x = rhs` for a tall full-rank `a`
/// (one right-hand side). Returns the coefficient vector of length
/// `a.cols()`.
pub fn least_squares(a: &ColMatrix, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    assert_eq!(rhs.len(), a.rows, "rhs length must match row count");
    assert!(a.rows >= a.cols, "system must be overdetermined");
    let m = as_lapack_dim(a.rows)?;
    let n = as_lapack_dim(a.cols)?;
    let one = 1i32;
    let trans = b'N' as c_char;
    let mut a_work = a.data.clone();
    let mut b_work = rhs.to_vec();
    let mut info: i32 = 0;

    let mut work_query = [0.0f64; 1];
    let query = -1i32;
    unsafe {
        dgels_(
            &trans,
            &m,
            &n,
            &one,
            a_work.as_mut_ptr(),
            &m,
            b_work.as_mut_ptr(),
            &m,
            work_query.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::LapackInfo {
            routine: "dgels (workspace query)",
            info,
        });
    }
    let lwork_usize = work_query[0] as usize;
    let lwork = as_lapack_dim(lwork_usize)?;
    let mut work = vec![0.0f64; lwork_usize.max(1)];
    unsafe {
        dgels_(
            &trans,
            &m,
            &n,
            &one,
            a_work.as_mut_ptr(),
            &m,
            b_work.as_mut_ptr(),
            &m,
            work.as_mut_ptr(),
            &lwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::LapackInfo {
            routine: "dgels",
            info,
        });
    }
    b_work.truncate(a.cols);
    Ok(b_work)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eigen_2x2_analytic() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3
        let a = vec![2.0, 1.0, 1.0, 2.0];
        let (w, v) = symmetric_eigen(2, a, true).unwrap();
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w[1], 3.0, epsilon = 1e-14);
        let v = v.unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert_abs_diff_eq!(v.get(0, 0).abs(), s, epsilon = 1e-14);
        assert_abs_diff_eq!(v.get(0, 1).abs(), s, epsilon = 1e-14);
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let dim = 8;
        let mut a = vec![0.0f64; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let x = 1.0 / (1.0 + i as f64 + j as f64) + if i == j { 2.0 } else { 0.0 };
                a[j * dim + i] = x;
            }
        }
        let orig = a.clone();
        let (w, v) = symmetric_eigen(dim, a, true).unwrap();
        let v = v.unwrap();
        for i in 0..dim {
            for j in 0..dim {
                let mut sum = 0.0;
                for k in 0..dim {
                    sum += v.get(i, k) * w[k] * v.get(j, k);
                }
                assert_abs_diff_eq!(sum, orig[j * dim + i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn eigen_rejects_nan() {
        let a = vec![2.0, f64::NAN, f64::NAN, 2.0];
        assert!(matches!(
            symmetric_eigen(2, a, false),
            Err(LinalgError::NonFinite { .. })
        ));
    }

    #[test]
    fn matmul_transpose() {
        // a = [[1, 2], [3, 4], [5, 6]] (3x2), a^T a = [[35, 44], [44, 56]]
        let a = ColMatrix::from_data(3, 2, vec![1.0, 3.0, 5.0, 2.0, 4.0, 6.0]);
        let c = matmul(&a, true, &a, false).unwrap();
        assert_eq!((c.rows(), c.cols()), (2, 2));
        assert_abs_diff_eq!(c.get(0, 0), 35.0);
        assert_abs_diff_eq!(c.get(0, 1), 44.0);
        assert_abs_diff_eq!(c.get(1, 0), 44.0);
        assert_abs_diff_eq!(c.get(1, 1), 56.0);
    }

    #[test]
    fn least_squares_exact_line() {
        // y = 3 + 2 x sampled without noise
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let mut a = ColMatrix::zeros(xs.len(), 2);
        let mut y = Vec::new();
        for (i, &x) in xs.iter().enumerate() {
            a.set(i, 0, 1.0);
            a.set(i, 1, x);
            y.push(3.0 + 2.0 * x);
        }
        let c = least_squares(&a, &y).unwrap();
        assert_abs_diff_eq!(c[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[1], 2.0, epsilon = 1e-12);
    }
}
