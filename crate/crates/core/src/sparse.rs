//! Compressed sparse row matrices, Jacobi-preconditioned conjugate gradients
//! and inverse power iteration for the smallest eigenvalue of a symmetric
//! definite pencil.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result, VarfracError};

const PARALLEL_ROWS: usize = 20_000;
const EIG_SEED: u64 = 42;

/// Square CSR matrix with sorted, duplicate-free columns in each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Sums duplicate entries. The result depends only on the multiset of
    /// triplets, not on their order, up to floating-point summation order
    /// within one `(row, col)` slot, which is fixed by a stable sort.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let trip = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(move |(j, &v)| (i, j, v))
            })
            .collect();
        Self::from_triplets(n, trip)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .zip(&self.values[r])
            .map(|(&j, &v)| v * x[j])
            .sum()
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        if self.n >= PARALLEL_ROWS {
            y.par_iter_mut()
                .enumerate()
                .for_each(|(i, yi)| *yi = self.row_dot(i, x));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row_dot(i, x);
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    /// `A[rows, cols]` as a rectangular product helper: rows and columns are
    /// given as contiguous index ranges.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Block {
        let mut row_ptr = vec![0usize];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in rows.clone() {
            for (j, v) in self.row(i) {
                if cols.contains(&j) {
                    col_idx.push(j - cols.start);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Block {
            rows: rows.len(),
            cols: cols.len(),
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Square principal submatrix over a contiguous index range.
    pub fn principal(&self, range: std::ops::Range<usize>) -> SparseMatrix {
        let b = self.block(range.clone(), range);
        SparseMatrix {
            n: b.rows,
            row_ptr: b.row_ptr,
            col_idx: b.col_idx,
            values: b.values,
        }
    }

    /// `A + c B` for matrices of equal dimension.
    pub fn add_scaled(&self, c: f64, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.n, other.n);
        let mut trip = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            trip.extend(self.row(i).map(|(j, v)| (i, j, v)));
            trip.extend(other.row(i).map(|(j, v)| (i, j, c * v)));
        }
        SparseMatrix::from_triplets(self.n, trip)
    }

    /// `D A D` for the diagonal matrix `D = diag(d)`.
    pub fn symmetric_scaled(&self, d: &[f64]) -> SparseMatrix {
        assert_eq!(d.len(), self.n);
        let mut out = self.clone();
        for i in 0..self.n {
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                out.values[k] *= d[i] * d[out.col_idx[k]];
            }
        }
        out
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Rectangular CSR block extracted from a [`SparseMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl Block {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let r = self.row_ptr[i]..self.row_ptr[i + 1];
                self.col_idx[r.clone()]
                    .iter()
                    .zip(&self.values[r])
                    .map(|(&j, &v)| v * x[j])
                    .sum()
            })
            .collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Result of a CG solve that met its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖A x - b‖₂ / ‖b‖₂`.
    pub residual: f64,
}

/// Default iteration cap `50 √n + 1000`.
pub fn default_max_iter(n: usize) -> usize {
    50 * (n as f64).sqrt().ceil() as usize + 1000
}

/// Jacobi-preconditioned conjugate gradients for SPD `a`, stopping when
/// `‖A x - b‖₂ ≤ tol ‖b‖₂`.
pub fn cg_solve(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let n = a.dim();
    if b.len() != n {
        return Err(VarfracError::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    if !(tol > 0.0) {
        return Err(invalid("tol", format!("need tol > 0, got {tol}")));
    }
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = 1.0;
    for it in 1..=max_iter {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(VarfracError::NonConvergence {
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm2(&r) / bnorm;
        if res <= tol {
            return Ok(CgOutcome {
                x,
                iterations: it,
                residual: res,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(VarfracError::NonConvergence {
        iterations: max_iter,
        residual: res,
    })
}

/// Smallest eigenpair of `A v = ν B v` for SPD `A`, `B`.
///
/// Inverse iteration with `B`-normalised iterates from a fixed-seed start
/// vector; stops when the Rayleigh quotient changes by less than `tol`
/// relatively.
pub fn smallest_generalized_eig(a: &SparseMatrix, b: &SparseMatrix, tol: f64) -> Result<(f64, Vec<f64>)> {
    smallest_generalized_eig_capped(a, b, tol, None)
}

/// [`smallest_generalized_eig`] with an explicit iteration cap for the inner
/// CG solves (`None` means `50 √n + 1000`).
pub fn smallest_generalized_eig_capped(
    a: &SparseMatrix,
    b: &SparseMatrix,
    tol: f64,
    inner_max_iter: Option<usize>,
) -> Result<(f64, Vec<f64>)> {
    let n = a.dim();
    if b.dim() != n {
        return Err(VarfracError::DimensionMismatch {
            expected: n,
            found: b.dim(),
        });
    }
    if n == 0 {
        return Err(invalid("A", "empty matrix"));
    }
    let inner_tol = (tol * 1e-2).clamp(1e-14, 1e-10);
    let max_iter = inner_max_iter.unwrap_or_else(|| default_max_iter(n));
    let mut rng = ChaCha8Rng::seed_from_u64(EIG_SEED);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let bn = b.quad_form(&v).sqrt();
    v.iter_mut().for_each(|x| *x /= bn);
    let mut rq = a.quad_form(&v);
    for _ in 0..2000 {
        let rhs = b.matvec(&v);
        let w = cg_solve(a, &rhs, inner_tol, max_iter)?.x;
        let bw = b.quad_form(&w).sqrt();
        v = w.into_iter().map(|x| x / bw).collect();
        let next = a.quad_form(&v);
        if (next - rq).abs() <= tol * next.abs() {
            return Ok((next, v));
        }
        rq = next;
    }
    Err(VarfracError::NonConvergence {
        iterations: 2000,
        residual: f64::NAN,
    })
}
