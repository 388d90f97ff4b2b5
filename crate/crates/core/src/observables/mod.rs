//! Density and fluctuation fields, duality audits, mild solutions and stationary covariances.

mod audit;
mod covariance;
mod stats;

pub use audit::{duality_audit, duality_sweep, pair_duality_audit, AuditReport, DualObservable};
pub use covariance::{
    covariance_quadrature, exact_stationary_variance, iota_weight, neumann_covariance, reservoir_average,
    variance_bound, CovarianceReport, QuadratureReport, QUADRATURE_REL_TOL,
};
pub use stats::{batch_mean_se, gaussianity_stats, mean_se, Estimate, GaussianityStats, MIN_MOMENT_SAMPLES};

use crate::error::{Error, Result};
use crate::expr::CoordExpr;
use crate::geometry::{DomainSpec, LatticeApprox, Point};
use crate::operators::WalkOperator;

/// `eps^d sum_x eta(x) f(x)`.
pub fn density_pairing(lattice: &LatticeApprox, eta: &[u64], f: &[f64]) -> f64 {
    lattice.site_volume() * eta.iter().zip(f).map(|(&e, v)| e as f64 * v).sum::<f64>()
}

/// `eps^(d/2) sum_x (eta(x) - h(x)) f(x)`.
pub fn fluctuation_pairing(lattice: &LatticeApprox, eta: &[u64], h: &[f64], f: &[f64]) -> f64 {
    lattice.site_volume().sqrt() * eta.iter().zip(h).zip(f).map(|((&e, h), v)| (e as f64 - h) * v).sum::<f64>()
}

/// The measure `g mu_eps` as site masses.
pub fn profile_measure(lattice: &LatticeApprox, g: &[f64]) -> Vec<f64> {
    let w = lattice.site_volume();
    g.iter().map(|v| v * w).collect()
}

/// Pairing of a measure given as site masses with a site function.
pub fn measure_pairing(masses: &[f64], f: &[f64]) -> f64 {
    masses.iter().zip(f).map(|(a, b)| a * b).sum()
}

/// `u_t = h mu + P_t^* (pi0 - h mu)` as site masses. `h` holds the profile on the sites.
pub fn mild_solution(op: &WalkOperator, h: &[f64], pi0: &[f64], t: f64) -> Result<Vec<f64>> {
    let n = op.n();
    if h.len() < n || pi0.len() != n {
        return Err(Error::InvalidInput(format!(
            "mild solution on {n} sites got a profile of length {} and a measure of length {}",
            h.len(),
            pi0.len()
        )));
    }
    let hm = profile_measure(op.lattice(), &h[..n]);
    let diff: Vec<f64> = pi0.iter().zip(&hm).map(|(p, q)| p - q).collect();
    // The killed block is a symmetric matrix, so its adjoint on masses is itself.
    let moved = op.semigroup_block(&diff, t)?;
    Ok(hm.iter().zip(&moved).map(|(a, b)| a + b).collect())
}

#[derive(Debug, Clone)]
pub enum TestKind {
    Expr(CoordExpr),
    /// `exp(1 - 1 / (1 - |x - c|^2 / r^2))` inside the ball, zero outside.
    Bump { center: Point, radius: f64 },
}

#[derive(Debug, Clone)]
pub struct TestFunction {
    pub name: String,
    pub kind: TestKind,
    /// Vanishes on the boundary (checked numerically on a fine boundary partition).
    pub dirichlet: bool,
}

impl TestFunction {
    pub fn eval(&self, p: &Point) -> f64 {
        match &self.kind {
            TestKind::Expr(e) => e.eval(p),
            TestKind::Bump { center, radius } => {
                let r2: f64 = (0..3).map(|i| (p[i] - center[i]).powi(2)).sum::<f64>() / (radius * radius);
                if r2 < 1.0 {
                    (1.0 - 1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn on_sites(&self, lattice: &LatticeApprox) -> Vec<f64> {
        lattice.sample(|p| self.eval(p))
    }
}

#[derive(Debug, Clone)]
pub struct TestFamily {
    pub functions: Vec<TestFunction>,
}

const STANDARD_EXPRS: [(&str, &str); 6] = [
    ("one", "1"),
    ("x1", "x1"),
    ("x2", "x2"),
    ("x1x2", "x1 * x2"),
    ("sin_sin", "sin(pi * x1) * sin(pi * x2)"),
    ("cos_cos", "cos(pi * x1) * cos(pi * x2)"),
];

impl TestFamily {
    /// The built-in functions plus a bump centred at the origin.
    pub fn standard(domain: &DomainSpec) -> Result<Self> {
        let mut functions = Vec::new();
        for (name, src) in STANDARD_EXPRS {
            functions.push(Self::expr_function(domain, name, src)?);
        }
        let inradius = domain
            .boundary_pieces(boundary_probe(domain))
            .iter()
            .map(|p| p.distance(&[0.0; 3]))
            .fold(f64::INFINITY, f64::min);
        let bump = TestKind::Bump { center: [0.0; 3], radius: 0.7 * inradius };
        let mut f = TestFunction { name: "bump".into(), kind: bump, dirichlet: false };
        f.dirichlet = vanishes_on_boundary(domain, &f);
        functions.push(f);
        Ok(TestFamily { functions })
    }

    /// Standard functions selected by name; unknown names are parsed as coordinate expressions.
    pub fn select(domain: &DomainSpec, names: &[String]) -> Result<Self> {
        let standard = Self::standard(domain)?;
        let mut functions = Vec::with_capacity(names.len());
        for name in names {
            match standard.get(name) {
                Some(f) => functions.push(f.clone()),
                None => functions.push(Self::expr_function(domain, name, name)?),
            }
        }
        Ok(TestFamily { functions })
    }

    pub fn expr_function(domain: &DomainSpec, name: &str, src: &str) -> Result<TestFunction> {
        let mut f = TestFunction { name: name.into(), kind: TestKind::Expr(CoordExpr::parse(src)?), dirichlet: false };
        f.dirichlet = vanishes_on_boundary(domain, &f);
        Ok(f)
    }

    pub fn get(&self, name: &str) -> Option<&TestFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.functions.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn dirichlet_only(&self) -> Self {
        TestFamily { functions: self.functions.iter().filter(|f| f.dirichlet).cloned().collect() }
    }
}

fn boundary_probe(domain: &DomainSpec) -> f64 {
    0.01f64.powi(domain.dim() as i32 - 1)
}

fn vanishes_on_boundary(domain: &DomainSpec, f: &TestFunction) -> bool {
    domain.boundary_pieces(boundary_probe(domain)).iter().all(|p| f.eval(&p.midpoint()).abs() < 1e-9)
}
