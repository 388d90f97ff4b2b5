use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::LatticeApprox;
use crate::linalg::{gauss_legendre, sup_norm};
use crate::operators::{PairOperator, Sigma, TwoPointProfile, WalkOperator};

/// Default relative tolerance for the time integral's tail.
pub const QUADRATURE_REL_TOL: f64 = 1e-6;
const GL_NODES: usize = 16;
const MAX_WINDOWS: usize = 64;
/// Largest `rate_bound * horizon` attempted, a cap on total uniformization work.
const MAX_RATE_TIME: f64 = 1e7;

/// Predicted against estimated covariance of two fluctuation pairings.
#[derive(Debug, Clone, Serialize)]
pub struct CovarianceReport {
    pub f: String,
    pub g: String,
    /// `N`, `R` or `D`.
    pub regime: String,
    pub predicted: f64,
    pub estimate: f64,
    pub se: f64,
    pub z: f64,
}

/// `chi <f, g>` in `L^2(Omega_eps)`.
pub fn neumann_covariance(lattice: &LatticeApprox, chi: f64, f: &[f64], g: &[f64]) -> f64 {
    chi * lattice.site_volume() * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
}

/// `sum_z q(x, z) theta(z)` at inner-boundary sites, zero elsewhere.
pub fn reservoir_average(lattice: &LatticeApprox, theta: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; lattice.n()];
    for e in lattice.cross_edges() {
        out[e.x] += e.alpha_xz * theta[e.z] / lattice.alpha[e.x];
    }
    out
}

/// Boundary weight `(theta - h)(1 + 2 sigma h)` of the reservoir term, with `theta` read
/// through the exit kernel at each inner-boundary site.
pub fn iota_weight(lattice: &LatticeApprox, theta: &[f64], h: &[f64], sigma: Sigma) -> Vec<f64> {
    let avg = reservoir_average(lattice, theta);
    let s = sigma.value();
    (0..lattice.n())
        .map(|x| if lattice.is_inner_boundary(x) { (avg[x] - h[x]) * (1.0 + 2.0 * s * h[x]) } else { 0.0 })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadratureReport {
    pub value: f64,
    /// `int 2 <Gamma(P_s f, P_s g), chi> ds`.
    pub gamma_part: f64,
    /// Reservoir term.
    pub iota_part: f64,
    /// Rigorous bound on the neglected integral beyond `horizon`.
    pub tail_bound: f64,
    pub horizon: f64,
    pub windows: usize,
}

/// `int_0^T 2 <Gamma(P_s f, P_s g), chi> + eps^(beta-1) <sigma_eps, P_s f P_s g w> ds`, with `P_s`
/// the killed semigroup and `w` the optional reservoir weight from [`iota_weight`].
///
/// Gauss-Legendre on `[0, delta]` and dyadic windows after it, `delta = 0.01 / lambda_max`.
/// Stops once the tail bound `(|chi|_inf + |w|_inf / 2) |P_T f| |P_T g|` drops below
/// `rel_tol |value|`.
pub fn covariance_quadrature(
    op: &WalkOperator,
    f: &[f64],
    g: &[f64],
    chi: &[f64],
    iota: Option<&[f64]>,
    rel_tol: f64,
) -> Result<QuadratureReport> {
    let n = op.n();
    if f.len() != n || g.len() != n || chi.len() != n || iota.is_some_and(|w| w.len() != n) {
        return Err(Error::InvalidInput(format!("quadrature inputs must have {n} site values")));
    }
    let lattice = op.lattice().clone();
    let same = f == g;
    let norm = |v: &[f64]| op.inner_product(v, v).sqrt();
    let tail_coef = sup_norm(chi) + iota.map_or(0.0, sup_norm) / 2.0;
    let boundary_scale = op.absorption_scale();
    let integrand = |a: &[f64], b: &[f64]| {
        let gam = op.carre_du_champ(a, b);
        let gp = 2.0 * op.inner_product(&gam, chi);
        let ip = iota.map_or(0.0, |w| {
            let abw: Vec<f64> = (0..n).map(|x| a[x] * b[x] * w[x]).collect();
            boundary_scale * lattice.surface_pairing(&abw)
        });
        (gp, ip)
    };
    let lambda_max = 2.0 * op.rate_bound();
    if !(lambda_max > 0.0) {
        return Err(Error::InvalidInput("quadrature needs a non-trivial generator".into()));
    }
    let delta = 0.01 / lambda_max;
    let (nodes, weights) = gauss_legendre(GL_NODES);
    let scale = tail_coef * norm(f) * norm(g);
    let mut a = f.to_vec();
    let mut b = g.to_vec();
    let mut s = 0.0;
    let (mut gamma_part, mut iota_part) = (0.0, 0.0);
    let mut tail = scale;
    let mut lo = 0.0;
    let mut hi = delta;
    for window in 1..=MAX_WINDOWS {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (u, w) in nodes.iter().zip(&weights) {
            let t = mid + half * u;
            a = op.semigroup_block(&a, t - s)?;
            if !same {
                b = op.semigroup_block(&b, t - s)?;
            }
            s = t;
            let (gp, ip) = integrand(&a, if same { &a } else { &b });
            gamma_part += half * w * gp;
            iota_part += half * w * ip;
        }
        a = op.semigroup_block(&a, hi - s)?;
        if !same {
            b = op.semigroup_block(&b, hi - s)?;
        }
        s = hi;
        tail = tail_coef * norm(&a) * if same { norm(&a) } else { norm(&b) };
        let value = gamma_part + iota_part;
        if tail <= rel_tol * value.abs() || tail <= rel_tol * 1e-9 * scale || scale == 0.0 {
            return Ok(QuadratureReport { value, gamma_part, iota_part, tail_bound: tail, horizon: hi, windows: window });
        }
        lo = hi;
        hi *= 2.0;
        if op.rate_bound() * hi > MAX_RATE_TIME {
            break;
        }
    }
    Err(Error::QuadratureNotConverged { tail, horizon: lo })
}

/// Exact stationary variance of `<(eta - h) mu_eps, f>` from the one- and two-point profiles:
/// `eps^(2d) [sum_x f^2 (E eta^2 - h^2) + sum_{x != y} f f (h2 - h h)]`.
pub fn exact_stationary_variance(pair: &PairOperator, h: &[f64], h2: &TwoPointProfile, f: &[f64]) -> f64 {
    let lattice = pair.lattice();
    let w2 = lattice.site_volume().powi(2);
    let mut total = 0.0;
    if pair.sigma() == Sigma::Exclusion {
        total += (0..lattice.n()).map(|x| f[x] * f[x] * (h[x] - h[x] * h[x])).sum::<f64>();
    }
    for (k, &(a, b)) in pair.states()[..pair.n_bulk()].iter().enumerate() {
        let v = h2.values[k];
        total += if a == b {
            // Inclusion diagonal stores E[eta (eta - 1) / 2].
            f[a] * f[a] * (h[a] + 2.0 * v - h[a] * h[a])
        } else {
            f[a] * f[b] * (v - h[a] * h[b])
        };
    }
    w2 * total
}

/// `(|theta|_inf^2 + |theta|_inf) eps^d |f|_inf |f|_1`.
pub fn variance_bound(lattice: &LatticeApprox, theta: &[f64], f: &[f64]) -> f64 {
    let t = sup_norm(theta);
    let w = lattice.site_volume();
    (t * t + t) * w * sup_norm(f) * w * f.iter().map(|v| v.abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use crate::operators::Beta;
    use std::sync::Arc;

    fn fixture() -> Arc<LatticeApprox> {
        Arc::new(LatticeApprox::build(&DomainSpec::unit_square(), 0.25).unwrap())
    }

    #[test]
    fn neumann_arithmetic() {
        let l = fixture();
        let one = vec![1.0; 9];
        assert!((neumann_covariance(&l, 0.3 * 0.7, &one, &one) - 0.118125).abs() < 1e-15);
        assert_eq!(neumann_covariance(&l, 0.0, &one, &one), 0.0);
    }

    #[test]
    fn constant_chi_integrates_to_norm() {
        let l = fixture();
        let op = WalkOperator::new(l.clone(), Beta::Finite(0.0));
        let f = l.sample(|p| (std::f64::consts::PI * p[0]).cos() * (std::f64::consts::PI * p[1]).cos());
        let chi = vec![0.25; 9];
        let q = covariance_quadrature(&op, &f, &f, &chi, None, QUADRATURE_REL_TOL).unwrap();
        let target = 0.25 * op.inner_product(&f, &f);
        assert!((q.value - target).abs() <= 1e-6 * target + q.tail_bound, "{} vs {target}", q.value);
        let zero = vec![0.0; 9];
        assert_eq!(covariance_quadrature(&op, &zero, &zero, &chi, None, 1e-6).unwrap().value, 0.0);
    }

    #[test]
    fn infinite_beta_does_not_converge() {
        let l = fixture();
        let op = WalkOperator::new(l.clone(), Beta::Infinite);
        let r = covariance_quadrature(&op, &[1.0; 9], &[1.0; 9], &[1.0; 9], Some(&[0.0; 9]), 1e-6);
        assert!(matches!(r, Err(Error::QuadratureNotConverged { .. })));
    }

    #[test]
    fn constant_reservoirs_remove_iota() {
        let l = fixture();
        let op = WalkOperator::new(l.clone(), Beta::Finite(1.0));
        let theta = vec![0.3; l.m()];
        let h = op.harmonic_profile(&theta).unwrap().values;
        let w = iota_weight(&l, &theta, &h, Sigma::Exclusion);
        assert!(w.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn product_measure_variance() {
        let l = fixture();
        let op = WalkOperator::new(l.clone(), Beta::Finite(1.0));
        let theta = vec![0.3; l.m()];
        let h = op.harmonic_profile(&theta).unwrap().values;
        let f = l.sample(|p| p[0] + 2.0 * p[1] * p[1]);
        for sigma in [Sigma::Exclusion, Sigma::Inclusion] {
            let pair = PairOperator::new(l.clone(), Beta::Finite(1.0), sigma).unwrap();
            let h2 = pair.two_point_profile(&h).unwrap();
            let v = exact_stationary_variance(&pair, &h, &h2, &f);
            let chi = 0.3 * (1.0 + sigma.value() * 0.3);
            let expect = l.site_volume() * neumann_covariance(&l, chi, &f, &f);
            assert!((v - expect).abs() < 1e-12, "{sigma:?}: {v} vs {expect}");
            assert!(v <= variance_bound(&l, &theta, &f));
        }
    }
}
