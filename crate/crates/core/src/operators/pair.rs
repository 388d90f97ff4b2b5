use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::LatticeApprox;
use crate::linalg::{self, CsrMatrix, SolveInfo};

use super::{Beta, Sigma};

/// Default bound on the number of pair states.
pub const PAIR_STATE_CAP: usize = 250_000;

/// Positions of two labelled dual particles, as closed-lattice indices
/// (`< n` for sites, `n + z` for exterior site `z`).
pub type PairState = (usize, usize);

/// Generator of two labelled dual walkers with exclusion (`sigma = -1`) or inclusion
/// (`sigma = +1`) interaction, each absorbed independently on the exterior sites.
#[derive(Debug, Clone)]
pub struct PairOperator {
    lattice: Arc<LatticeApprox>,
    beta: Beta,
    sigma: Sigma,
    n: usize,
    m: usize,
    /// Both-in-lattice states first, then states with at least one absorbed particle.
    states: Vec<PairState>,
    n_bulk: usize,
    /// Dense `(n + m)^2` lookup, `u32::MAX` for inaccessible states.
    index: Vec<u32>,
    generator: CsrMatrix,
    rate_bound: f64,
}

/// Two-point harmonic function on the pair space.
#[derive(Debug, Clone)]
pub struct TwoPointProfile {
    /// Values on every pair state, in [`PairOperator::states`] order.
    pub values: Vec<f64>,
    pub residual: f64,
    pub solve: SolveInfo,
}

impl PairOperator {
    pub fn new(lattice: Arc<LatticeApprox>, beta: Beta, sigma: Sigma) -> Result<Self> {
        Self::with_cap(lattice, beta, sigma, PAIR_STATE_CAP)
    }

    pub fn with_cap(lattice: Arc<LatticeApprox>, beta: Beta, sigma: Sigma, cap: usize) -> Result<Self> {
        let (n, m) = (lattice.n(), lattice.m());
        let diag = if sigma == Sigma::Exclusion { n } else { 0 };
        let count = (n + m) * (n + m) - diag;
        if count > cap {
            return Err(Error::StateSpaceTooLarge { states: count, cap });
        }
        let total = n + m;
        let accessible = |a: usize, b: usize| !(sigma == Sigma::Exclusion && a == b && a < n);
        let mut states = Vec::with_capacity(count);
        for a in 0..n {
            for b in 0..n {
                if accessible(a, b) {
                    states.push((a, b));
                }
            }
        }
        let n_bulk = states.len();
        for a in 0..total {
            for b in 0..total {
                if (a >= n || b >= n) && accessible(a, b) {
                    states.push((a, b));
                }
            }
        }
        let mut index = vec![u32::MAX; total * total];
        for (k, &(a, b)) in states.iter().enumerate() {
            index[a * total + b] = k as u32;
        }
        let eps = lattice.eps;
        let bulk_rate = eps.powi(-2);
        let cross_scale = beta.eps_pow(eps, -2.0);
        let s = sigma.value();
        let mut trip = Vec::new();
        let mut rate_bound = 0.0f64;
        for (k, &(a, b)) in states.iter().enumerate() {
            let mut out = 0.0;
            // Moves of one particle while the other sits at `other`.
            let mut moves = |p: usize, other: usize, to: &dyn Fn(usize) -> PairState| {
                if p >= n {
                    return;
                }
                for &y in lattice.neighbors(p) {
                    let r = bulk_rate * (1.0 + if y == other { s } else { 0.0 });
                    if r > 0.0 {
                        let (c, d) = to(y);
                        trip.push((k, index[c * total + d] as usize, r));
                        out += r;
                    }
                }
                if cross_scale > 0.0 {
                    for e in lattice.cross_edges_at(p) {
                        let r = cross_scale * e.alpha_xz;
                        let (c, d) = to(n + e.z);
                        trip.push((k, index[c * total + d] as usize, r));
                        out += r;
                    }
                }
            };
            moves(a, b, &|y| (y, b));
            moves(b, a, &|y| (a, y));
            if out > 0.0 {
                trip.push((k, k, -out));
            }
            rate_bound = rate_bound.max(out);
        }
        let generator = CsrMatrix::from_triplets(states.len(), states.len(), trip);
        Ok(PairOperator { lattice, beta, sigma, n, m, states, n_bulk, index, generator, rate_bound })
    }

    pub fn lattice(&self) -> &Arc<LatticeApprox> {
        &self.lattice
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    pub fn sigma(&self) -> Sigma {
        self.sigma
    }

    pub fn states(&self) -> &[PairState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Number of states with both particles on the lattice; they come first.
    pub fn n_bulk(&self) -> usize {
        self.n_bulk
    }

    pub fn generator(&self) -> &CsrMatrix {
        &self.generator
    }

    pub fn rate_bound(&self) -> f64 {
        self.rate_bound
    }

    pub fn state_index(&self, a: usize, b: usize) -> Option<usize> {
        let total = self.n + self.m;
        if a >= total || b >= total {
            return None;
        }
        let k = self.index[a * total + b];
        (k != u32::MAX).then_some(k as usize)
    }

    /// Weight `1 + sigma 1{a = b}` of a both-in-lattice state.
    pub fn weight(&self, k: usize) -> f64 {
        let (a, b) = self.states[k];
        if a == b && a < self.n {
            1.0 + self.sigma.value()
        } else {
            1.0
        }
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.generator.matvec(f)
    }

    /// `J f (a, b) = f(a) + f(b)` for a one-particle function on the closed lattice.
    pub fn annihilate(&self, f: &[f64]) -> Vec<f64> {
        self.states.iter().map(|&(a, b)| f[a] + f[b]).collect()
    }

    /// `max |A_2 J f - J A_1 f|` over pair states, for `f` on the closed lattice.
    pub fn consistency_defect(&self, walk: &super::WalkOperator, f: &[f64]) -> f64 {
        let lhs = self.apply(&self.annihilate(f));
        let rhs = self.annihilate(&walk.apply(f));
        lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// `F (a, b) = f(a) f(b)`.
    pub fn tensor(&self, f: &[f64]) -> Vec<f64> {
        self.states.iter().map(|&(a, b)| f[a] * f[b]).collect()
    }

    pub fn semigroup_apply(&self, f: &[f64], t: f64) -> Result<Vec<f64>> {
        if f.len() != self.len() {
            return Err(Error::InvalidInput(format!("expected {} pair values, got {}", self.len(), f.len())));
        }
        linalg::uniformized_exp(|x, out| self.generator.matvec_into(x, out), self.rate_bound, f, t)
    }

    /// Duality function `D((a, b), eta)`: `eta(a) eta(b)` off the diagonal,
    /// `eta(x)(eta(x) - 1) / 2` on the inclusion diagonal, `theta` on absorbed coordinates.
    pub fn duality_function(&self, eta: &[u64], theta: &[f64]) -> Vec<f64> {
        let n = self.n;
        let one = |p: usize| if p < n { eta[p] as f64 } else { theta[p - n] };
        self.states
            .iter()
            .map(|&(a, b)| {
                if a == b && a < n {
                    let e = eta[a] as f64;
                    e * (e - 1.0) / (1.0 + self.sigma.value())
                } else {
                    one(a) * one(b)
                }
            })
            .collect()
    }

    /// Solves `A g = 0` on both-in-lattice states with `g = h(x) theta(z)` on mixed states
    /// and `theta(z) theta(w)` on doubly absorbed ones. `h` is the one-particle profile on the
    /// closed lattice (its exterior part is `theta`).
    pub fn two_point_profile(&self, h: &[f64]) -> Result<TwoPointProfile> {
        if !self.beta.is_finite() {
            return Err(Error::InvalidInput("two-point profile needs finite beta".into()));
        }
        if h.len() != self.n + self.m {
            return Err(Error::InvalidInput(format!("expected {} profile values, got {}", self.n + self.m, h.len())));
        }
        let nb = self.n_bulk;
        let mut values = self.tensor(h);
        // Symmetrize with the reversible weights: W (-A_II) is symmetric positive definite.
        let mut trip = Vec::with_capacity(self.generator.nnz());
        let mut rhs = vec![0.0; nb];
        for k in 0..nb {
            let w = self.weight(k);
            for (j, v) in self.generator.row(k) {
                if j < nb {
                    trip.push((k, j, -w * v));
                } else {
                    rhs[k] += w * v * values[j];
                }
            }
        }
        let mat = CsrMatrix::from_triplets(nb, nb, trip);
        let (g, solve) = linalg::solve_spd(&mat, &rhs)?;
        values[..nb].copy_from_slice(&g);
        let residual = linalg::sup_norm(&self.apply(&values)[..nb]);
        let scale = linalg::sup_norm(h).powi(2).max(f64::MIN_POSITIVE);
        if residual > 1e-10 * scale * self.rate_bound.max(1.0) {
            return Err(Error::SolverDiverged { iterations: solve.iterations, residual: residual / scale });
        }
        Ok(TwoPointProfile { values, residual, solve })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use crate::operators::WalkOperator;

    fn lattice() -> Arc<LatticeApprox> {
        Arc::new(LatticeApprox::build(&DomainSpec::unit_square(), 0.25).unwrap())
    }

    #[test]
    fn state_counts() {
        let l = lattice();
        let sep = PairOperator::new(l.clone(), Beta::Finite(1.0), Sigma::Exclusion).unwrap();
        assert_eq!(sep.len(), 9 * 8 + 2 * 9 * 16 + 16 * 16);
        assert_eq!(sep.len(), 616);
        let sip = PairOperator::new(l.clone(), Beta::Finite(1.0), Sigma::Inclusion).unwrap();
        assert_eq!(sip.len(), 25 * 25);
        assert!(matches!(
            PairOperator::with_cap(l, Beta::Finite(1.0), Sigma::Inclusion, 100),
            Err(Error::StateSpaceTooLarge { states: 625, cap: 100 })
        ));
    }

    #[test]
    fn weighted_symmetry_on_bulk_states() {
        for sigma in [Sigma::Exclusion, Sigma::Inclusion] {
            let p = PairOperator::new(lattice(), Beta::Finite(0.0), sigma).unwrap();
            let d = p.generator().to_dense();
            for i in 0..p.n_bulk() {
                for j in 0..p.n_bulk() {
                    let a = p.weight(i) * d[(i, j)];
                    let b = p.weight(j) * d[(j, i)];
                    assert!((a - b).abs() < 1e-12, "{sigma:?} {i} {j}");
                }
            }
        }
    }

    #[test]
    fn constant_data_gives_constant_square() {
        for sigma in [Sigma::Exclusion, Sigma::Inclusion] {
            let l = lattice();
            let walk = WalkOperator::new(l.clone(), Beta::Finite(1.0));
            let h = walk.harmonic_profile(&vec![0.4; l.m()]).unwrap();
            let p = PairOperator::new(l, Beta::Finite(1.0), sigma).unwrap();
            let g = p.two_point_profile(&h.values).unwrap();
            assert!(g.values.iter().all(|v| (v - 0.16).abs() < 1e-12));
        }
    }
}
