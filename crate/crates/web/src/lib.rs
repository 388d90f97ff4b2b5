//! wasm-bindgen front end for the lattice demo page.
//!
//! Every call builds its lattice from scratch; the spacing is clamped so a click
//! never blocks the page for long.

use std::sync::Arc;

use reservoir_lattice::expr::CoordExpr;
use reservoir_lattice::particles::{replica_rng, simulate, Configuration, SimParams};
use reservoir_lattice::{Beta, DomainSpec, LatticeApprox, Shape, Sigma, WalkOperator};
use wasm_bindgen::prelude::*;

const MIN_EPS: f64 = 1.0 / 48.0;
const MAX_EPS: f64 = 0.25;

/// Values on the sites of a lattice, plus the reservoir sites around it.
#[wasm_bindgen]
pub struct Field {
    xs: Vec<f64>,
    ys: Vec<f64>,
    values: Vec<f64>,
    outer_xs: Vec<f64>,
    outer_ys: Vec<f64>,
    outer_values: Vec<f64>,
    eps: f64,
    scalar: f64,
}

#[wasm_bindgen]
impl Field {
    pub fn xs(&self) -> Vec<f64> {
        self.xs.clone()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.ys.clone()
    }

    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    #[wasm_bindgen(js_name = outerXs)]
    pub fn outer_xs(&self) -> Vec<f64> {
        self.outer_xs.clone()
    }

    #[wasm_bindgen(js_name = outerYs)]
    pub fn outer_ys(&self) -> Vec<f64> {
        self.outer_ys.clone()
    }

    #[wasm_bindgen(js_name = outerValues)]
    pub fn outer_values(&self) -> Vec<f64> {
        self.outer_values.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Eigenvalue for modes, particle count for snapshots, mean value for profiles.
    #[wasm_bindgen(getter)]
    pub fn scalar(&self) -> f64 {
        self.scalar
    }

    #[wasm_bindgen(getter)]
    pub fn sites(&self) -> usize {
        self.values.len()
    }
}

/// `square`, `disk` or `lshape`.
pub fn domain(shape: &str) -> Result<DomainSpec, String> {
    match shape {
        "square" => Ok(DomainSpec::unit_square()),
        "disk" => DomainSpec::disk(0.5).map_err(|e| e.to_string()),
        "lshape" => {
            let vertices = vec![[-0.3, -0.3], [0.7, -0.3], [0.7, 0.2], [0.2, 0.2], [0.2, 0.7], [-0.3, 0.7]];
            DomainSpec::new(Shape::Polygon { vertices }, 2.0).map_err(|e| e.to_string())
        }
        other => Err(format!("unknown shape {other:?}")),
    }
}

fn lattice(shape: &str, eps: f64) -> Result<Arc<LatticeApprox>, String> {
    if !(MIN_EPS..=MAX_EPS).contains(&eps) {
        return Err(format!("eps must lie in [{MIN_EPS:.4}, {MAX_EPS}]"));
    }
    LatticeApprox::build(&domain(shape)?, eps).map(Arc::new).map_err(|e| e.to_string())
}

fn reservoirs(l: &LatticeApprox, theta: &str) -> Result<Vec<f64>, String> {
    let e = CoordExpr::parse(theta).map_err(|e| e.to_string())?;
    Ok(l.sample_outer(|p| e.eval(p)))
}

fn field(l: &LatticeApprox, values: Vec<f64>, outer_values: Vec<f64>, scalar: f64) -> Field {
    let n = l.n();
    Field {
        xs: (0..n).map(|x| l.point(x)[0]).collect(),
        ys: (0..n).map(|x| l.point(x)[1]).collect(),
        values,
        outer_xs: (0..l.m()).map(|z| l.outer_point(z)[0]).collect(),
        outer_ys: (0..l.m()).map(|z| l.outer_point(z)[1]).collect(),
        outer_values,
        eps: l.eps,
        scalar,
    }
}

fn parse_beta(beta: &str) -> Result<Beta, String> {
    beta.parse().map_err(|e: reservoir_lattice::Error| e.to_string())
}

/// Harmonic profile with reservoir densities `theta(x1, x2)`.
#[wasm_bindgen]
pub fn harmonic(shape: &str, eps: f64, beta: &str, theta: &str) -> Result<Field, String> {
    let l = lattice(shape, eps)?;
    let beta = parse_beta(beta)?;
    if !beta.is_finite() {
        return Err("the profile needs a finite beta".into());
    }
    let th = reservoirs(&l, theta)?;
    let h = WalkOperator::new(l.clone(), beta).harmonic_profile(&th).map_err(|e| e.to_string())?;
    let inner = h.inner(l.n()).to_vec();
    let mean = inner.iter().sum::<f64>() / inner.len() as f64;
    Ok(field(&l, inner, th, mean))
}

/// The `k`-th eigenvector of the walk generator, counting from the ground state.
#[wasm_bindgen]
pub fn eigenmode(shape: &str, eps: f64, beta: &str, k: usize) -> Result<Field, String> {
    let l = lattice(shape, eps)?;
    let beta = parse_beta(beta)?;
    let mut s = WalkOperator::new(l.clone(), beta).spectrum(k + 1).map_err(|e| e.to_string())?;
    let mode = s.eigenvectors.swap_remove(k);
    Ok(field(&l, mode, vec![0.0; l.m()], s.eigenvalues[k]))
}

/// Occupations of the exclusion process at time `t`, started empty.
#[wasm_bindgen]
pub fn exclusion_snapshot(shape: &str, eps: f64, beta: &str, theta: &str, t: f64, seed: u32) -> Result<Field, String> {
    let l = lattice(shape, eps)?;
    let beta = parse_beta(beta)?;
    if !(0.0..=5.0).contains(&t) {
        return Err("t must lie in [0, 5]".into());
    }
    let th = reservoirs(&l, theta)?;
    let params = SimParams::new(beta, Sigma::Exclusion, th.clone(), t, seed as u64);
    let start = Configuration::empty(l.n(), Sigma::Exclusion);
    let tr = simulate(&l, start, &params, &[t], replica_rng(seed as u64, 0)).map_err(|e| e.to_string())?;
    let eta: Vec<f64> = tr.snapshots[0].1.iter().map(|&e| e as f64).collect();
    let count = eta.iter().sum();
    Ok(field(&l, eta, th, count))
}
