//! Compressed sparse row storage, direct factorizations backed by faer, and
//! a preconditioned conjugate gradient solver.

use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::Col;
use faer::prelude::Solve;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n_rows: usize, n_cols: usize, trips: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n_rows + 1];
        for &(i, j, _) in trips {
            assert!(i < n_rows && j < n_cols, "triplet ({i},{j}) out of bounds");
            counts[i + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut cols = vec![0usize; trips.len()];
        let mut vals = vec![0.0; trips.len()];
        for &(i, j, v) in trips {
            cols[fill[i]] = j;
            vals[fill[i]] = v;
            fill[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(trips.len());
        let mut values = Vec::with_capacity(trips.len());
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..n_rows {
            scratch.clear();
            scratch.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            scratch.sort_unstable_by_key(|e| e.0);
            let mut k = 0;
            while k < scratch.len() {
                let c = scratch[k].0;
                let mut s = 0.0;
                while k < scratch.len() && scratch[k].0 == c {
                    s += scratch[k].1;
                    k += 1;
                }
                col_idx.push(c);
                values.push(s);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { n_rows, n_cols, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            out.extend(self.row(i).map(|(j, v)| (i, j, v)));
        }
        out
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        for i in 0..self.n_rows {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    /// `a^T M b`.
    pub fn form(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n_rows {
            if a[i] == 0.0 {
                continue;
            }
            let mut r = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                r += self.values[k] * b[self.col_idx[k]];
            }
            s += a[i] * r;
        }
        s
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_rows.min(self.n_cols)];
        for (i, di) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                if j == i {
                    *di = v;
                }
            }
        }
        d
    }

    /// Returns `self + diag(d)`; the diagonal must already be structurally present.
    pub fn plus_diagonal(&self, d: &[f64]) -> Self {
        let mut out = self.clone();
        for (i, &di) in d.iter().enumerate() {
            let pos = (out.row_ptr[i]..out.row_ptr[i + 1])
                .find(|&k| out.col_idx[k] == i)
                .expect("diagonal entry missing from pattern");
            out.values[pos] += di;
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let trips: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        CsrMatrix::from_triplets(self.n_cols, self.n_rows, &trips)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let t = self.transpose();
        if t.row_ptr != self.row_ptr || t.col_idx != self.col_idx {
            return f64::INFINITY;
        }
        self.values
            .iter()
            .zip(&t.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn to_faer(&self) -> SparseColMat<usize, f64> {
        // Column-compressed storage of A is row-compressed storage of A^T.
        let t = self.transpose();
        let sym = SymbolicSparseColMat::new_checked(self.n_rows, self.n_cols, t.row_ptr, None, t.col_idx);
        SparseColMat::new(sym, t.values)
    }
}

/// Reusable symbolic LU analysis for a fixed sparsity pattern.
#[derive(Clone)]
pub struct LuPattern {
    symbolic: SymbolicLu<usize>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl LuPattern {
    pub fn analyze(a: &CsrMatrix) -> Result<Self> {
        let m = a.to_faer();
        let symbolic = SymbolicLu::try_new(m.symbolic())
            .map_err(|e| Error::Linear(format!("symbolic LU failed: {e:?}")))?;
        Ok(LuPattern { symbolic, row_ptr: a.row_ptr.clone(), col_idx: a.col_idx.clone() })
    }

    pub fn matches(&self, a: &CsrMatrix) -> bool {
        self.row_ptr == a.row_ptr && self.col_idx == a.col_idx
    }
}

/// Sparse LU with partial pivoting. Works for indefinite and saddle-point systems.
pub struct LuSolver {
    lu: Lu<usize, f64>,
    n: usize,
}

impl LuSolver {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let pattern = LuPattern::analyze(a)?;
        Self::factor_with(&pattern, a)
    }

    pub fn factor_with(pattern: &LuPattern, a: &CsrMatrix) -> Result<Self> {
        if a.n_rows != a.n_cols {
            return Err(Error::Linear("LU of a non-square matrix".into()));
        }
        if !pattern.matches(a) {
            return Err(Error::Linear("matrix pattern differs from analysed pattern".into()));
        }
        let m = a.to_faer();
        let lu = Lu::try_new_with_symbolic(pattern.symbolic.clone(), m.as_ref())
            .map_err(|e| Error::Linear(format!("numeric LU failed: {e:?}")))?;
        Ok(LuSolver { lu, n: a.n_rows })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let rhs = Col::<f64>::from_fn(self.n, |i| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[i]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    Jacobi,
    IncompleteCholesky,
}

#[derive(Debug, Clone)]
pub struct PcgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

struct Ic0 {
    // Lower factor in CSR, diagonal stored last in each row.
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl Ic0 {
    fn new(a: &CsrMatrix) -> Option<Self> {
        let n = a.n_rows;
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        let mut diag_pos = vec![0usize; n];
        for i in 0..n {
            let last = row_ptr[i + 1].checked_sub(1)?;
            if row_ptr[i + 1] == row_ptr[i] || col_idx[last] != i {
                return None;
            }
            diag_pos[i] = last;
        }
        let mut marker = vec![usize::MAX; n];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                marker[col_idx[k]] = k;
            }
            for k in row_ptr[i]..diag_pos[i] {
                let j = col_idx[k];
                // l_ij = (a_ij - sum_{c<j} l_ic l_jc) / l_jj
                let mut s = values[k];
                for kk in row_ptr[j]..diag_pos[j] {
                    let c = col_idx[kk];
                    let m = marker[c];
                    if m != usize::MAX && m < k {
                        s -= values[m] * values[kk];
                    }
                }
                values[k] = s / values[diag_pos[j]];
            }
            let mut d = values[diag_pos[i]];
            for k in row_ptr[i]..diag_pos[i] {
                d -= values[k] * values[k];
            }
            if d <= 0.0 {
                return None;
            }
            values[diag_pos[i]] = d.sqrt();
            for k in row_ptr[i]..row_ptr[i + 1] {
                marker[col_idx[k]] = usize::MAX;
            }
        }
        Some(Ic0 { row_ptr, col_idx, values })
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        for i in 0..n {
            let end = self.row_ptr[i + 1] - 1;
            let mut s = r[i];
            for k in self.row_ptr[i]..end {
                s -= self.values[k] * z[self.col_idx[k]];
            }
            z[i] = s / self.values[end];
        }
        for i in (0..n).rev() {
            let end = self.row_ptr[i + 1] - 1;
            z[i] /= self.values[end];
            let zi = z[i];
            for k in self.row_ptr[i]..end {
                z[self.col_idx[k]] -= self.values[k] * zi;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients for a symmetric positive definite `a`.
/// Falls back to Jacobi if the incomplete factorization breaks down.
pub fn pcg(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize, pc: Preconditioner) -> Result<PcgOutcome> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(PcgOutcome { solution: vec![0.0; n], iterations: 0, relative_residual: 0.0 });
    }
    let ic = match pc {
        Preconditioner::IncompleteCholesky => Ic0::new(a),
        Preconditioner::Jacobi => None,
    };
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| if *d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let precond = |r: &[f64], z: &mut [f64]| match &ic {
        Some(f) => f.apply(r, z),
        None => {
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
        }
    };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Linear("operator not positive definite in PCG".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = dot(&r, &r).sqrt() / bnorm;
        if rel < tol {
            return Ok(PcgOutcome { solution: x, iterations: it, relative_residual: rel });
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Convergence(format!("PCG iteration cap {max_iter} exceeded")))
}

/// Extreme eigenvalue estimates of a symmetric matrix from `steps` Lanczos iterations.
pub fn lanczos_extremes(a: &CsrMatrix, steps: usize, seed: u64) -> (f64, f64) {
    use rand::{Rng, SeedableRng};
    let n = a.n_rows;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let nq = dot(&q, &q).sqrt();
    q.iter_mut().for_each(|v| *v /= nq);
    let mut q_prev = vec![0.0; n];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut beta = 0.0;
    for _ in 0..steps.min(n) {
        basis.push(q.clone());
        let mut w = a.matvec(&q);
        let alpha = dot(&w, &q);
        for i in 0..n {
            w[i] -= alpha * q[i] + beta * q_prev[i];
        }
        // Full reorthogonalization keeps the small tridiagonal faithful.
        for v in &basis {
            let c = dot(&w, v);
            for i in 0..n {
                w[i] -= c * v[i];
            }
        }
        alphas.push(alpha);
        beta = dot(&w, &w).sqrt();
        if beta < 1e-14 {
            break;
        }
        betas.push(beta);
        q_prev = std::mem::replace(&mut q, w.iter().map(|v| v / beta).collect());
    }
    let k = alphas.len();
    let t = nalgebra::DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j || j + 1 == i {
            betas[i.min(j)]
        } else {
            0.0
        }
    });
    let ev = t.symmetric_eigenvalues();
    (ev.min(), ev.max())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize, shift: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 4.0)]);
        assert_eq!(m.values, vec![3.0, 4.0]);
        assert_eq!(m.matvec(&[1.0, 1.0]), vec![3.0, 4.0]);
    }

    #[test]
    fn lu_solves_nonsymmetric() {
        let m = CsrMatrix::from_triplets(3, 3, &[(0, 0, 2.0), (0, 2, 1.0), (1, 1, -3.0), (2, 0, 1.0), (2, 2, 2.0), (1, 0, 1.0)]);
        let x = [1.0, -2.0, 0.5];
        let b = m.matvec(&x);
        let lu = LuSolver::factor(&m).unwrap();
        let y = lu.solve(&b);
        for i in 0..3 {
            assert!((x[i] - y[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn pcg_both_preconditioners() {
        let a = laplace_1d(200, 0.01);
        let x: Vec<f64> = (0..200).map(|i| (i as f64 * 0.1).sin()).collect();
        let b = a.matvec(&x);
        for pc in [Preconditioner::Jacobi, Preconditioner::IncompleteCholesky] {
            let out = pcg(&a, &b, 1e-12, 2000, pc).unwrap();
            let err = out.solution.iter().zip(&x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "{pc:?} err {err}");
        }
        let ic = pcg(&a, &b, 1e-12, 2000, Preconditioner::IncompleteCholesky).unwrap();
        let jac = pcg(&a, &b, 1e-12, 2000, Preconditioner::Jacobi).unwrap();
        // IC(0) is exact for tridiagonal matrices.
        assert!(ic.iterations <= 2 && jac.iterations > 10);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = laplace_1d(10, 1.0);
        let out = pcg(&a, &[0.0; 10], 1e-12, 10, Preconditioner::Jacobi).unwrap();
        assert!(out.solution.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lanczos_brackets_spectrum() {
        let n = 50;
        let a = laplace_1d(n, 0.0);
        let (lo, hi) = lanczos_extremes(&a, 50, 1);
        let pi = std::f64::consts::PI;
        let exact_lo = 2.0 - 2.0 * (pi / (n as f64 + 1.0)).cos();
        let exact_hi = 2.0 + 2.0 * (pi / (n as f64 + 1.0)).cos();
        assert!((lo - exact_lo).abs() < 1e-8 && (hi - exact_hi).abs() < 1e-8);
    }
}
