use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::LatticeApprox;
use crate::linalg::{self, CsrMatrix, SolveInfo};

use super::Beta;

/// Generator `A^{eps,beta}` of the walk on `Omega_eps`, absorbed on the exterior sites.
///
/// Functions on the closed lattice are vectors of length `n + m`: the `n` sites first,
/// then the `m` exterior sites.
#[derive(Debug, Clone)]
pub struct WalkOperator {
    lattice: Arc<LatticeApprox>,
    beta: Beta,
    /// `beta = inf` generator on the sites (rate `eps^-2` per edge).
    bulk: CsrMatrix,
    /// `V(x) = eps^-1 alpha(x)`.
    potential: Vec<f64>,
    /// `eps^(beta - 1)`.
    absorption_scale: f64,
    /// `bulk - absorption_scale * diag(V)`: the action on functions vanishing outside.
    block: CsrMatrix,
    /// Site-to-exterior rates `eps^(beta - 2) alpha_xz`, an `n x m` matrix.
    cross: CsrMatrix,
    rate_bound: f64,
}

/// Solution of the boundary value problem with exterior data `theta`.
#[derive(Debug, Clone)]
pub struct HarmonicProfile {
    /// Values on the closed lattice (`theta` on the exterior part).
    pub values: Vec<f64>,
    /// `max_x |A h (x)|` over the sites.
    pub residual: f64,
    pub solve: SolveInfo,
}

impl HarmonicProfile {
    pub fn inner(&self, n: usize) -> &[f64] {
        &self.values[..n]
    }
}

#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Lowest eigenvalues of `-A` in non-decreasing order.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors with `eps^d sum psi^2 = 1`; the first is positive.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl SpectralData {
    pub fn ground_state(&self) -> (f64, &[f64]) {
        (self.eigenvalues[0], &self.eigenvectors[0])
    }
}

impl WalkOperator {
    pub fn new(lattice: Arc<LatticeApprox>, beta: Beta) -> Self {
        let n = lattice.n();
        let eps = lattice.eps;
        let inv2 = eps.powi(-2);
        let mut bulk = Vec::with_capacity(5 * n);
        for x in 0..n {
            let nb = lattice.neighbors(x);
            for &y in nb {
                bulk.push((x, y, inv2));
            }
            bulk.push((x, x, -(nb.len() as f64) * inv2));
        }
        let bulk = CsrMatrix::from_triplets(n, n, bulk);
        let potential: Vec<f64> = lattice.alpha.iter().map(|a| a / eps).collect();
        let absorption_scale = beta.eps_pow(eps, -1.0);
        let mut block = Vec::with_capacity(bulk.nnz());
        for x in 0..n {
            for (y, v) in bulk.row(x) {
                let v = if x == y { v - absorption_scale * potential[x] } else { v };
                block.push((x, y, v));
            }
        }
        let block = CsrMatrix::from_triplets(n, n, block);
        let cross_scale = beta.eps_pow(eps, -2.0);
        let cross_trip = lattice
            .cross_edges()
            .iter()
            .filter(|_| cross_scale > 0.0)
            .map(|e| (e.x, e.z, cross_scale * e.alpha_xz))
            .collect();
        let cross = CsrMatrix::from_triplets(n, lattice.m(), cross_trip);
        let rate_bound = block.diagonal().iter().fold(0.0f64, |m, d| m.max(-d));
        WalkOperator { lattice, beta, bulk, potential, absorption_scale, block, cross, rate_bound }
    }

    pub fn lattice(&self) -> &Arc<LatticeApprox> {
        &self.lattice
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    pub fn n(&self) -> usize {
        self.lattice.n()
    }

    pub fn m(&self) -> usize {
        self.lattice.m()
    }

    pub fn bulk(&self) -> &CsrMatrix {
        &self.bulk
    }

    pub fn block(&self) -> &CsrMatrix {
        &self.block
    }

    pub fn cross(&self) -> &CsrMatrix {
        &self.cross
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn absorption_scale(&self) -> f64 {
        self.absorption_scale
    }

    /// Largest total jump rate out of a site.
    pub fn rate_bound(&self) -> f64 {
        self.rate_bound
    }

    /// `A f` on the closed lattice; exterior rows are zero.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n() + self.m()];
        self.apply_into(f, &mut out);
        out
    }

    fn apply_into(&self, f: &[f64], out: &mut [f64]) {
        let n = self.n();
        self.block.matvec_into(&f[..n], &mut out[..n]);
        let fo = &f[n..];
        for x in 0..n {
            out[x] += self.cross.row(x).map(|(z, r)| r * fo[z]).sum::<f64>();
        }
        for v in &mut out[n..] {
            *v = 0.0;
        }
    }

    /// `A f` for `f` on the sites extended by zero.
    pub fn apply_block(&self, f: &[f64]) -> Vec<f64> {
        self.block.matvec(f)
    }

    /// `P_t f` on the closed lattice by uniformization.
    pub fn semigroup_apply(&self, f: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_closed(f)?;
        linalg::uniformized_exp(|x, out| self.apply_into(x, out), self.rate_bound, f, t)
    }

    /// Killed semigroup on functions vanishing outside.
    pub fn semigroup_block(&self, f: &[f64], t: f64) -> Result<Vec<f64>> {
        if f.len() != self.n() {
            return Err(Error::InvalidInput(format!("expected {} site values, got {}", self.n(), f.len())));
        }
        linalg::uniformized_exp(|x, out| self.block.matvec_into(x, out), self.rate_bound, f, t)
    }

    /// `x -> p_t(x, y)` on the closed lattice, with `y` a closed-lattice index.
    pub fn heat_kernel_column(&self, y: usize, t: f64) -> Result<Vec<f64>> {
        let mut e = vec![0.0; self.n() + self.m()];
        *e.get_mut(y).ok_or_else(|| Error::InvalidInput(format!("site {y} out of range")))? = 1.0;
        self.semigroup_apply(&e, t)
    }

    /// Harmonic extension of exterior data `theta` (length `m`).
    pub fn harmonic_profile(&self, theta: &[f64]) -> Result<HarmonicProfile> {
        if theta.len() != self.m() {
            return Err(Error::InvalidInput(format!("expected {} exterior values, got {}", self.m(), theta.len())));
        }
        if !self.beta.is_finite() {
            return Err(Error::InvalidInput("harmonic profile needs finite beta".into()));
        }
        let n = self.n();
        let rhs = self.cross.matvec(theta);
        let neg = self.negated_block();
        let (h, solve) = linalg::solve_spd(&neg, &rhs)?;
        let mut values = h;
        values.extend_from_slice(theta);
        let residual = linalg::sup_norm(&self.apply(&values)[..n]);
        let scale = linalg::sup_norm(theta).max(f64::MIN_POSITIVE);
        if residual > 1e-10 * scale {
            return Err(Error::SolverDiverged { iterations: solve.iterations, residual: residual / scale });
        }
        Ok(HarmonicProfile { values, residual, solve })
    }

    pub(crate) fn negated_block(&self) -> CsrMatrix {
        let mut neg = self.block.clone();
        for v in &mut neg.values {
            *v = -*v;
        }
        neg
    }

    /// Lowest `count` eigenpairs of `-A` on `L^2(Omega_eps)`.
    pub fn spectrum(&self, count: usize) -> Result<SpectralData> {
        let n = self.n();
        if count == 0 || count > n {
            return Err(Error::InvalidInput(format!("requested {count} eigenpairs of a {n}-site operator")));
        }
        let norm = self.lattice.site_volume().sqrt();
        let (mut eigenvalues, mut eigenvectors) = if n <= linalg::DENSE_EIGEN_MAX {
            let (vals, vecs) = linalg::symmetric_eigen(self.negated_block().to_dense());
            let vecs = (0..count).map(|k| vecs.column(k).iter().copied().collect()).collect();
            (vals[..count].to_vec(), vecs)
        } else {
            linalg::lowest_eigenpairs(&self.negated_block(), count, 1.0, 1e-9)?
        };
        for v in &mut eigenvectors {
            let s = linalg::norm2(v) * norm;
            let sign = if v.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            for a in v.iter_mut() {
                *a *= sign / s;
            }
        }
        if !self.beta.is_finite() {
            eigenvalues[0] = 0.0;
            eigenvectors[0] = vec![self.lattice.total_volume().powf(-0.5); n];
        }
        Ok(SpectralData { eigenvalues, eigenvectors })
    }

    /// `(lambda_0, psi_0)` with `psi_0 > 0` and unit `L^2(Omega_eps)` norm.
    pub fn ground_state(&self) -> Result<(f64, Vec<f64>)> {
        let mut s = self.spectrum(1)?;
        Ok((s.eigenvalues[0], s.eigenvectors.swap_remove(0)))
    }

    /// `<f, g>` in `L^2(Omega_eps)`.
    pub fn inner_product(&self, f: &[f64], g: &[f64]) -> f64 {
        self.lattice.site_volume() * linalg::dot(f, g)
    }

    /// `E(f, g) = (eps^d / 2) sum_{x~y} grad f grad g + eps^(beta-1) <sigma_eps, f g>`.
    pub fn dirichlet_form(&self, f: &[f64], g: &[f64]) -> f64 {
        let l = &self.lattice;
        let inv = 1.0 / l.eps;
        let mut grad = 0.0;
        for x in 0..l.n() {
            for &y in l.neighbors(x) {
                grad += (f[y] - f[x]) * inv * (g[y] - g[x]) * inv;
            }
        }
        let fg: Vec<f64> = f.iter().zip(g).map(|(a, b)| a * b).collect();
        0.5 * l.site_volume() * grad + self.absorption_scale * l.surface_pairing(&fg)
    }

    /// Per-site carré du champ `1/2 sum_{y~x} grad f grad g + 1_boundary eps^(beta-2) alpha f g`.
    pub fn carre_du_champ(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        let l = &self.lattice;
        let inv = 1.0 / l.eps;
        let boundary = self.beta.eps_pow(l.eps, -2.0);
        (0..l.n())
            .map(|x| {
                let grad: f64 = l
                    .neighbors(x)
                    .iter()
                    .map(|&y| (f[y] - f[x]) * inv * (g[y] - g[x]) * inv)
                    .sum();
                0.5 * grad + boundary * l.alpha[x] * f[x] * g[x]
            })
            .collect()
    }

    /// Coordinate triplets of the full closed-lattice generator.
    pub fn write_triplets<W: Write>(&self, w: W) -> std::io::Result<()> {
        let n = self.n();
        let mut trip = Vec::with_capacity(self.block.nnz() + self.cross.nnz());
        for x in 0..n {
            trip.extend(self.block.row(x).map(|(y, v)| (x, y, v)));
            trip.extend(self.cross.row(x).map(|(z, v)| (x, n + z, v)));
        }
        CsrMatrix::from_triplets(n + self.m(), n + self.m(), trip).write_triplets(w)
    }

    fn check_closed(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.n() + self.m() {
            return Err(Error::InvalidInput(format!(
                "expected {} closed-lattice values, got {}",
                self.n() + self.m(),
                f.len()
            )));
        }
        Ok(())
    }
}
