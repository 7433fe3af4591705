//! Sparse storage, linear solvers, and extremal eigenvalue estimates.

use std::io::{self, Write};

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par, Side};

use crate::error::{Error, Result};

/// Unsorted coordinate entries; duplicates are summed on conversion.
#[derive(Clone, Debug, Default)]
pub struct Triplets {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        self.entries.push((i, j, v));
    }

    /// Adds a dense local matrix at the given global indices.
    pub fn add_local<const N: usize>(&mut self, dofs: &[usize; N], local: &[[f64; N]; N]) {
        for (a, &i) in dofs.iter().enumerate() {
            for (b, &j) in dofs.iter().enumerate() {
                if local[a][b] != 0.0 {
                    self.push(i, j, local[a][b]);
                }
            }
        }
    }

    /// Appends `scale * other`, shifting indices by `offset` in both directions.
    pub fn extend_scaled(&mut self, other: &Triplets, scale: f64, offset: usize) {
        if scale == 0.0 {
            return;
        }
        self.entries.extend(other.entries.iter().map(|&(i, j, v)| (i + offset, j + offset, scale * v)));
    }
}

/// Compressed sparse row matrix (square).
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
    /// Whether the matrix is symmetric by construction.
    pub symmetric: bool,
}

impl CsrMatrix {
    /// Sums duplicate entries in a fixed (row, column, insertion) order.
    pub fn from_triplets(t: &Triplets, symmetric: bool) -> Self {
        let mut order: Vec<usize> = (0..t.entries.len()).collect();
        order.sort_by_key(|&k| (t.entries[k].0, t.entries[k].1));
        let mut row_ptr = vec![0usize; t.n + 1];
        let mut col_idx = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (i, j, v) = t.entries[k];
            assert!(i < t.n && j < t.n, "entry ({i}, {j}) outside {}x{}", t.n, t.n);
            if last == Some((i, j)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..t.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n: t.n, row_ptr, col_idx, values, symmetric }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal_matrix(&vec![1.0; n])
    }

    pub fn diagonal_matrix(d: &[f64]) -> Self {
        Self {
            n: d.len(),
            row_ptr: (0..=d.len()).collect(),
            col_idx: (0..d.len()).collect(),
            values: d.to_vec(),
            symmetric: true,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.n).map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>()).sum()
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A_ij - A_ji| / max |A_ij|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d = d.max((v - self.get(j, i)).abs());
            }
        }
        d / self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// `diag(left) A diag(right)`.
    pub fn scaled(&self, left: &[f64], right: &[f64]) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.values[k] *= left[i] * right[self.col_idx[k]];
            }
        }
        out.symmetric = self.symmetric && left == right;
        out
    }

    /// Principal submatrix on the index range `[start, end)`.
    pub fn principal_block(&self, start: usize, end: usize) -> Self {
        let mut t = Triplets::new(end - start);
        for i in start..end {
            for (j, v) in self.row(i) {
                if (start..end).contains(&j) {
                    t.push(i - start, j - start, v);
                }
            }
        }
        Self::from_triplets(&t, self.symmetric)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let entries: Vec<Triplet<usize, usize, f64>> =
            (0..self.n).flat_map(|i| self.row(i).map(move |(j, v)| Triplet::new(i, j, v))).collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &entries)
            .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))
    }

    /// Coordinate text dump, one `i j value` line per stored entry.
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> io::Result<()> {
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                writeln!(out, "{i} {j} {v:.17e}")?;
            }
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let r: Vec<f64> = a.mul_vec(x).iter().zip(b).map(|(ax, bi)| ax - bi).collect();
    let nb = norm(b);
    if nb == 0.0 {
        norm(&r)
    } else {
        norm(&r) / nb
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    ConjugateGradient,
    SparseDirect,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub method: SolveMethod,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.n;
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| if *d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let nb = norm(b);
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok((x, SolveStats { method: SolveMethod::ConjugateGradient, iterations: 0, relative_residual: 0.0 }));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = 1.0;
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotConverged { iterations: it, residual: res });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm(&r) / nb;
        if res <= rel_tol {
            let true_res = relative_residual(a, &x, b);
            if true_res <= rel_tol * 10.0 {
                return Ok((
                    x,
                    SolveStats { method: SolveMethod::ConjugateGradient, iterations: it, relative_residual: true_res },
                ));
            }
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
    Err(Error::NotConverged { iterations: max_iter, residual: res })
}

/// Sparse LU factorization and solve.
pub fn direct_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let s = a.to_faer()?;
    let lu = s.sp_lu().map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    let rhs = Mat::<f64>::from_fn(a.n, 1, |i, _| b[i]);
    let x = lu.solve(&rhs);
    let out: Vec<f64> = (0..a.n).map(|i| x[(i, 0)]).collect();
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(Error::LinearAlgebra("non-finite direct solution".into()))
    }
}

/// Conjugate gradients with at most `20 N` iterations; if they stall, a sparse
/// direct factorization is tried and accepted only if it meets `rel_tol`.
pub fn solve(a: &CsrMatrix, b: &[f64], rel_tol: f64) -> Result<(Vec<f64>, SolveStats)> {
    match conjugate_gradient(a, b, rel_tol, 20 * a.n.max(1)) {
        Ok(out) => Ok(out),
        Err(Error::NotConverged { iterations, residual }) => {
            let x = direct_solve(a, b).map_err(|_| Error::NotConverged { iterations, residual })?;
            let res = relative_residual(a, &x, b);
            if res <= rel_tol {
                Ok((x, SolveStats { method: SolveMethod::SparseDirect, iterations, relative_residual: res }))
            } else {
                Err(Error::NotConverged { iterations, residual: res.min(residual) })
            }
        }
        Err(e) => Err(e),
    }
}

/// Eigenvalues of a symmetric matrix in ascending order (dense).
pub fn symmetric_eigenvalues(a: &Mat<f64>) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::LinearAlgebra(format!("{e:?}")))
}

/// Moduli of the eigenvalues of a general square matrix (dense).
pub fn eigenvalue_moduli(a: &Mat<f64>) -> Result<Vec<f64>> {
    let ev = a.eigenvalues().map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    Ok(ev.iter().map(|z| z.re.hypot(z.im)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionEstimate {
    pub kappa: f64,
    /// Smallest eigenvalue modulus above the zero threshold.
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Largest dimension for which the condition number is computed densely.
pub const DENSE_EIGEN_LIMIT: usize = 6000;

/// Ratio of the largest to the smallest non-zero eigenvalue modulus. Moduli
/// below `zero_threshold * lambda_max` count as zero.
pub fn condition_number(a: &CsrMatrix, zero_threshold: f64) -> Result<ConditionEstimate> {
    if a.n <= DENSE_EIGEN_LIMIT {
        condition_number_dense(a, zero_threshold)
    } else {
        condition_number_iterative(a, 1e-10)
    }
}

pub fn condition_number_dense(a: &CsrMatrix, zero_threshold: f64) -> Result<ConditionEstimate> {
    let dense = a.to_dense();
    let moduli: Vec<f64> = if a.symmetric {
        symmetric_eigenvalues(&dense)?.iter().map(|v| v.abs()).collect()
    } else {
        eigenvalue_moduli(&dense)?
    };
    condition_from_moduli(&moduli, zero_threshold)
}

pub fn condition_from_moduli(moduli: &[f64], zero_threshold: f64) -> Result<ConditionEstimate> {
    let lambda_max = moduli.iter().fold(0.0f64, |m, v| m.max(*v));
    let cut = zero_threshold * lambda_max;
    let lambda_min = moduli.iter().filter(|v| **v > cut).fold(f64::INFINITY, |m, v| m.min(*v));
    if !(lambda_max > 0.0) || !lambda_min.is_finite() {
        return Err(Error::DegenerateMatrix);
    }
    Ok(ConditionEstimate { kappa: lambda_max / lambda_min, lambda_min, lambda_max })
}

/// Small deterministic generator for Lanczos start vectors.
fn start_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    (0..n)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

/// Extremal Ritz values of a symmetric operator by Lanczos with full
/// reorthogonalization. Stops once the residual bound `beta_k |s_k|` of both
/// extreme Ritz pairs is below `rel_tol` times the spectral radius estimate.
pub fn lanczos_extremes(
    n: usize,
    apply: impl Fn(&[f64], &mut [f64]),
    max_steps: usize,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    let steps = max_steps.min(n).max(1);
    let mut q = start_vector(n, 7);
    let nq = norm(&q);
    q.iter_mut().for_each(|v| *v /= nq);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    for k in 0..steps {
        apply(&basis[k], &mut w);
        alpha.push(dot(&w, &basis[k]));
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
            }
        }
        let b = norm(&w);
        let (lo, hi, s_lo, s_hi) = tridiagonal_extremes(&alpha, &beta)?;
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        let converged = b * s_lo.abs() <= rel_tol * scale && b * s_hi.abs() <= rel_tol * scale;
        if converged || b <= 1e-14 * scale || k + 1 == steps {
            return Ok((lo, hi));
        }
        beta.push(b);
        basis.push(w.iter().map(|v| v / b).collect());
    }
    unreachable!("loop returns on its final step")
}

/// Extreme eigenvalues of the Lanczos tridiagonal matrix and the last
/// components of their eigenvectors.
fn tridiagonal_extremes(alpha: &[f64], beta: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let k = alpha.len();
    let t = Mat::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    let evd = t.self_adjoint_eigen(Side::Lower).map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    Ok((s[0], s[k - 1], u[(k - 1, 0)], u[(k - 1, k - 1)]))
}

/// Condition number of a symmetric positive definite matrix: Lanczos on `A`
/// for the top of the spectrum and on `A^{-1}` (sparse Cholesky) for the bottom.
pub fn condition_number_iterative(a: &CsrMatrix, rel_tol: f64) -> Result<ConditionEstimate> {
    let (_, lambda_max) = lanczos_extremes(a.n, |x, y| a.mul_vec_into(x, y), 600, rel_tol)?;
    let s = a.to_faer()?;
    let llt = s
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("Cholesky failed ({e:?}); matrix not SPD")))?;
    let (_, inv_max) = lanczos_extremes(
        a.n,
        |x, y| {
            let rhs = Mat::<f64>::from_fn(x.len(), 1, |i, _| x[i]);
            let sol = llt.solve(&rhs);
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = sol[(i, 0)];
            }
        },
        600,
        rel_tol,
    )?;
    let lambda_min = 1.0 / inv_max;
    Ok(ConditionEstimate { kappa: lambda_max / lambda_min, lambda_min, lambda_max })
}

/// Extremal generalized eigenvalues of `num x = lambda den x` restricted to
/// the range of the symmetric positive semidefinite `den`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralizedBounds {
    pub min: f64,
    pub max: f64,
    /// Dimension of the numerically detected kernel of `den`.
    pub kernel_dim: usize,
    /// Largest Rayleigh quotient `|x^T num x| / ||num||` over unit kernel vectors of `den`;
    /// a value above round-off means `num` is not controlled by `den`.
    pub kernel_leak: f64,
}

pub fn generalized_bounds_on_range(num: &Mat<f64>, den: &Mat<f64>, rel_tol: f64) -> Result<GeneralizedBounds> {
    let n = den.nrows();
    let evd = den.self_adjoint_eigen(Side::Lower).map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let top = (0..n).map(|i| s[i].abs()).fold(0.0f64, f64::max);
    let keep: Vec<usize> = (0..n).filter(|&i| s[i] > rel_tol * top).collect();
    if keep.is_empty() {
        return Err(Error::DegenerateMatrix);
    }
    let kernel: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let w = Mat::<f64>::from_fn(n, keep.len(), |i, k| u[(i, keep[k])] / s[keep[k]].sqrt());
    let reduced = w.transpose() * num * &w;
    let sym = Mat::<f64>::from_fn(keep.len(), keep.len(), |i, j| 0.5 * (reduced[(i, j)] + reduced[(j, i)]));
    let ev = symmetric_eigenvalues(&sym)?;
    let num_scale = (0..n).map(|i| num[(i, i)].abs()).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let mut kernel_leak = 0.0f64;
    if !kernel.is_empty() {
        let z = Mat::<f64>::from_fn(n, kernel.len(), |i, k| u[(i, kernel[k])]);
        let zk = z.transpose() * num * &z;
        let sym = Mat::<f64>::from_fn(kernel.len(), kernel.len(), |i, j| 0.5 * (zk[(i, j)] + zk[(j, i)]));
        let kev = symmetric_eigenvalues(&sym)?;
        kernel_leak = kev.iter().fold(0.0f64, |m, v| m.max(v.abs())) / num_scale;
    }
    Ok(GeneralizedBounds { min: ev[0], max: ev[ev.len() - 1], kernel_dim: kernel.len(), kernel_leak })
}

/// Smallest and largest eigenvalue of `a x = lambda g x` for SPD `g`.
pub fn generalized_extremes_spd(a: &Mat<f64>, g: &Mat<f64>) -> Result<(f64, f64)> {
    let llt = g.llt(Side::Lower).map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    let l = llt.L();
    let mut m = a.clone();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l, m.as_mut(), Par::Seq);
    let mut mt = m.transpose().to_owned();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l, mt.as_mut(), Par::Seq);
    let n = a.nrows();
    let sym = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (mt[(i, j)] + mt[(j, i)]));
    let ev = symmetric_eigenvalues(&sym)?;
    Ok((ev[0], ev[n - 1]))
}
