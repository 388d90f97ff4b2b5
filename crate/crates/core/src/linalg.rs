//! Sparse and dense kernels: CSR storage, banded Cholesky, preconditioned CG,
//! symmetric eigensolvers, uniformized matrix exponentials and Gauss-Legendre rules.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative residual target for iterative solves.
pub const SOLVE_TOL: f64 = 1e-12;
/// Poisson tail mass left out of uniformization sums.
pub const POISSON_TAIL: f64 = 1e-12;

/// Above this many unknowns (or band work) the solver falls back to preconditioned CG.
const DIRECT_MAX_UNKNOWNS: usize = 50_000;
const DIRECT_MAX_BAND_WORK: f64 = 4e8;

/// Eigenproblems up to this size are solved densely.
pub const DENSE_EIGEN_MAX: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets, summing duplicates and sorting columns.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < n_rows && c < n_cols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n_rows, n_cols, row_ptr, col_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        for (i, yi) in y.iter_mut().enumerate().take(self.n_rows) {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|i| self.row(i).find(|(c, _)| *c == i).map_or(0.0, |(_, v)| v))
            .collect()
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n_rows)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Writes coordinate triplets `row col value`, one per line.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# {} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                writeln!(w, "{i} {j} {v:.17e}")?;
            }
        }
        Ok(())
    }
}

/// Cholesky factor of a symmetric positive definite band matrix.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    /// Row-major lower band: `l[i * (bw + 1) + (bw - (i - j))]` holds `L[i][j]` for `i - bw <= j <= i`.
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n_rows;
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    l[i * w + bw - (i - j)] = v;
                }
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = l[i * w + bw - (i - j)];
                for k in k0..j {
                    s -= l[i * w + bw - (i - k)] * l[j * w + bw - (j - k)];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::InvalidInput(format!(
                            "matrix is not positive definite (pivot {s:.3e} at row {i})"
                        )));
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + bw - (i - j)] = s / l[j * w + bw];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + bw - (i - k)] * y[k];
            }
            y[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n.min(i + bw + 1) {
                s -= self.l[k * w + bw - (k - i)] * y[k];
            }
            y[i] = s / self.l[i * w + bw];
        }
        y
    }
}

/// Summary of a linear solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveInfo {
    pub iterations: usize,
    pub relative_residual: f64,
    pub direct: bool,
}

/// Jacobi-preconditioned conjugate gradient for SPD systems.
pub fn pcg(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveInfo)> {
    let n = a.n_rows;
    let diag = a.diagonal();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, SolveInfo { iterations: 0, relative_residual: 0.0, direct: false }));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = 1.0;
    for it in 1..=max_iter {
        a.matvec_into(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = norm2(&r) / bnorm;
        if rel < tol {
            // Confirm with a true residual; recurrences drift on ill-conditioned systems.
            let ax = a.matvec(&x);
            let true_rel = norm2(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>()) / bnorm;
            if true_rel < tol * 10.0 {
                return Ok((x, SolveInfo { iterations: it, relative_residual: true_rel, direct: false }));
            }
            r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDiverged { iterations: max_iter, residual: rel })
}

/// Solves an SPD system, by banded Cholesky when the band is narrow enough, else by PCG.
pub fn solve_spd(a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveInfo)> {
    let n = a.n_rows;
    let bw = a.bandwidth() as f64;
    if n <= DIRECT_MAX_UNKNOWNS && n as f64 * (bw + 1.0) * (bw + 1.0) <= DIRECT_MAX_BAND_WORK {
        let chol = BandedCholesky::factor(a)?;
        let x = chol.solve(b);
        let ax = a.matvec(&x);
        let bnorm = norm2(b).max(f64::MIN_POSITIVE);
        let res = norm2(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>()) / bnorm;
        return Ok((x, SolveInfo { iterations: 1, relative_residual: res, direct: true }));
    }
    pcg(a, b, SOLVE_TOL, 20 * n.max(100))
}

/// Eigen-decomposition of a dense symmetric matrix with eigenvalues sorted ascending.
pub fn symmetric_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Lowest `count` eigenpairs of a sparse SPD (after shift) matrix by shift-invert subspace iteration.
///
/// `shift` is added to the diagonal so that `K + shift I` is positive definite; returned
/// eigenvalues are those of `K`. Eigenvectors are Euclidean-orthonormal columns.
pub fn lowest_eigenpairs(k: &CsrMatrix, count: usize, shift: f64, tol: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = k.n_rows;
    let count = count.min(n);
    let block = (2 * count + 8).min(n);
    let mut trip = Vec::with_capacity(k.nnz() + n);
    for i in 0..n {
        for (j, v) in k.row(i) {
            trip.push((i, j, v));
        }
        trip.push((i, i, shift));
    }
    let shifted = CsrMatrix::from_triplets(n, n, trip);
    let chol = BandedCholesky::factor(&shifted)?;
    // Deterministic, non-degenerate start block.
    let mut basis: Vec<Vec<f64>> = (0..block)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let h = (i as u64).wrapping_mul(6_364_136_223_846_793_005).wrapping_add((j as u64).wrapping_mul(1_442_695_040_888_963_407));
                    ((h >> 11) as f64 / (1u64 << 53) as f64) - 0.5
                })
                .collect()
        })
        .collect();
    orthonormalize(&mut basis);
    let mut last_res = f64::INFINITY;
    for _ in 0..500 {
        let mut next: Vec<Vec<f64>> = basis.iter().map(|v| chol.solve(v)).collect();
        orthonormalize(&mut next);
        // Rayleigh-Ritz on K.
        let kv: Vec<Vec<f64>> = next.iter().map(|v| k.matvec(v)).collect();
        let m = next.len();
        let mut h = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                h[(a, b)] = dot(&next[a], &kv[b]);
            }
        }
        let h = (&h + h.transpose()) * 0.5;
        let (vals, vecs) = symmetric_eigen(h);
        let ritz: Vec<Vec<f64>> = (0..m)
            .map(|c| {
                let mut v = vec![0.0; n];
                for (a, q) in next.iter().enumerate() {
                    let w = vecs[(a, c)];
                    for i in 0..n {
                        v[i] += w * q[i];
                    }
                }
                v
            })
            .collect();
        let mut res = 0.0f64;
        for c in 0..count {
            let kv = k.matvec(&ritz[c]);
            let r: f64 = kv.iter().zip(&ritz[c]).map(|(a, b)| (a - vals[c] * b).powi(2)).sum::<f64>().sqrt();
            res = res.max(r / vals[c].abs().max(1.0));
        }
        basis = ritz;
        last_res = res;
        if res < tol {
            return Ok((vals[..count].to_vec(), basis[..count].to_vec()));
        }
    }
    Err(Error::EigenNotConverged { residual: last_res })
}

fn orthonormalize(vs: &mut [Vec<f64>]) {
    for i in 0..vs.len() {
        for _ in 0..2 {
            for j in 0..i {
                let c = dot(&vs[i], &vs[j]);
                let (head, tail) = vs.split_at_mut(i);
                for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                    *a -= c * b;
                }
            }
        }
        let nrm = norm2(&vs[i]);
        for a in vs[i].iter_mut() {
            *a /= nrm;
        }
    }
}

/// Applies `exp(t G)` to `f` for a Markov generator `G` with total exit rates at most `rate_bound`,
/// via the uniformized series `sum_k Poisson(k; rate_bound * t) (I + G / rate_bound)^k f`.
///
/// `apply_generator(x, out)` must write `G x` into `out`. Terms are summed until the
/// neglected Poisson mass falls below [`POISSON_TAIL`].
pub fn uniformized_exp<F>(apply_generator: F, rate_bound: f64, f: &[f64], t: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("time must be non-negative, got {t}")));
    }
    if t == 0.0 || rate_bound <= 0.0 {
        return Ok(f.to_vec());
    }
    let mean = rate_bound * t;
    let n = f.len();
    let mut v = f.to_vec();
    let mut gv = vec![0.0; n];
    let mut out = vec![0.0; n];
    let ln_mean = mean.ln();
    let mut log_w = -mean;
    let mut mass = 0.0;
    let mut k: u64 = 0;
    // Hard cap far beyond the Poisson bulk (mean + 40 sd).
    let k_max = (mean + 40.0 * mean.sqrt() + 50.0) as u64;
    loop {
        let w = log_w.exp();
        if w > 0.0 {
            mass += w;
            for i in 0..n {
                out[i] += w * v[i];
            }
        }
        if (k as f64) > mean && 1.0 - mass < POISSON_TAIL {
            break;
        }
        if k >= k_max {
            break;
        }
        apply_generator(&v, &mut gv);
        for i in 0..n {
            v[i] += gv[i] / rate_bound;
        }
        k += 1;
        log_w += ln_mean - (k as f64).ln();
    }
    Ok(out)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize, shift: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 0.5)]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.matvec(&[1.0, 1.0]), vec![1.5, 2.0]);
    }

    #[test]
    fn banded_cholesky_and_pcg_agree() {
        let a = laplacian_1d(50, 0.01);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let x1 = BandedCholesky::factor(&a).unwrap().solve(&b);
        let (x2, info) = pcg(&a, &b, 1e-13, 1000).unwrap();
        assert!(!info.direct);
        for (u, v) in x1.iter().zip(&x2) {
            assert!((u - v).abs() < 1e-9);
        }
        let r: Vec<f64> = a.matvec(&x1).iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm2(&r) < 1e-11);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(BandedCholesky::factor(&a).is_err());
    }

    #[test]
    fn subspace_iteration_matches_dense() {
        let a = laplacian_1d(120, 0.0);
        let (dense, _) = symmetric_eigen(a.to_dense());
        let (vals, vecs) = lowest_eigenpairs(&a, 4, 0.5, 1e-10).unwrap();
        for k in 0..4 {
            assert!((vals[k] - dense[k]).abs() < 1e-9, "{} vs {}", vals[k], dense[k]);
            assert!((norm2(&vecs[k]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((i - 2.0 / 31.0).abs() < 1e-14);
        let (x3, w3) = gauss_legendre(3);
        assert!((x3[2] - (0.6f64).sqrt()).abs() < 1e-15);
        assert!((w3[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn uniformization_matches_two_state_closed_form() {
        // Two-state chain 0 <-> 1 with rates a, b.
        let (a, b) = (3.0, 1.0);
        let gen = |x: &[f64], out: &mut [f64]| {
            out[0] = a * (x[1] - x[0]);
            out[1] = b * (x[0] - x[1]);
        };
        let t = 0.7;
        let p = uniformized_exp(gen, a + b, &[1.0, 0.0], t).unwrap();
        let s = a + b;
        let p00 = b / s + a / s * (-s * t).exp();
        assert!((p[0] - p00).abs() < 1e-12);
        assert!(uniformized_exp(gen, s, &[1.0, 0.0], -1.0).is_err());
    }

    #[test]
    fn uniformization_survives_large_rate_times() {
        let gen = |x: &[f64], out: &mut [f64]| {
            out[0] = 2000.0 * (x[1] - x[0]);
            out[1] = 2000.0 * (x[0] - x[1]);
        };
        let p = uniformized_exp(gen, 4000.0, &[1.0, 0.0], 1.0).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-10 && (p[0] + p[1] - 1.0).abs() < 1e-10);
    }
}
