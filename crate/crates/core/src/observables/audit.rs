use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::stats::{mean_se, Estimate};
use crate::error::{Error, Result};
use crate::geometry::LatticeApprox;
use crate::operators::{PairOperator, Sigma, WalkOperator};
use crate::particles::{replica_rng, run_replicas, Configuration, SimParams, Simulator};

/// Moment observed by a duality audit: one dual particle at a site or two at a pair of sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DualObservable {
    Site(usize),
    Pair(usize, usize),
}

impl DualObservable {
    pub fn order(&self) -> usize {
        match self {
            DualObservable::Site(_) => 1,
            DualObservable::Pair(..) => 2,
        }
    }

    /// `D(., eta)` at this observable.
    pub fn evaluate(&self, eta: &[u64]) -> f64 {
        match *self {
            DualObservable::Site(x) => eta[x] as f64,
            DualObservable::Pair(x, y) if x == y => {
                let e = eta[x] as f64;
                e * (e - 1.0) / 2.0
            }
            DualObservable::Pair(x, y) => eta[x] as f64 * eta[y] as f64,
        }
    }
}

impl fmt::Display for DualObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DualObservable::Site(x) => write!(f, "k1[{x}]"),
            DualObservable::Pair(x, y) => write!(f, "k2[{x},{y}]"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub label: String,
    pub observable: DualObservable,
    pub time: f64,
    pub replicas: usize,
    pub mc: Estimate,
    pub exact: f64,
    pub z: f64,
    pub pass: bool,
}

/// `E_eta[eta_t(x)]` by simulation against `(P_t D(., eta))(x)`.
pub fn duality_audit(
    lattice: &Arc<LatticeApprox>,
    params: &SimParams,
    eta0: &Configuration,
    x: usize,
    t: f64,
    n_replicas: usize,
    seed: u64,
) -> Result<AuditReport> {
    duality_sweep(lattice, params, eta0, &[DualObservable::Site(x)], t, n_replicas, seed).map(|mut v| v.remove(0))
}

/// Two-particle version of [`duality_audit`], using the pair semigroup as the exact side.
#[allow(clippy::too_many_arguments)]
pub fn pair_duality_audit(
    lattice: &Arc<LatticeApprox>,
    params: &SimParams,
    eta0: &Configuration,
    x: usize,
    y: usize,
    t: f64,
    n_replicas: usize,
    seed: u64,
) -> Result<AuditReport> {
    duality_sweep(lattice, params, eta0, &[DualObservable::Pair(x, y)], t, n_replicas, seed).map(|mut v| v.remove(0))
}

/// Audits several observables on one shared set of replicas.
pub fn duality_sweep(
    lattice: &Arc<LatticeApprox>,
    params: &SimParams,
    eta0: &Configuration,
    observables: &[DualObservable],
    t: f64,
    n_replicas: usize,
    seed: u64,
) -> Result<Vec<AuditReport>> {
    let n = lattice.n();
    for ob in observables {
        let ok = match *ob {
            DualObservable::Site(x) => x < n,
            DualObservable::Pair(x, y) => x < n && y < n && !(x == y && params.sigma == Sigma::Exclusion),
        };
        if !ok {
            return Err(Error::InvalidInput(format!("{ob} is not an admissible {} observable", params.sigma.label())));
        }
    }
    if n_replicas < 2 {
        return Err(Error::InvalidInput("an audit needs at least two replicas".into()));
    }
    let exact = exact_moments(lattice, params, eta0, observables, t)?;
    let runs = run_replicas(n_replicas, |r| {
        let mut sim = Simulator::new(lattice, params, eta0.clone(), replica_rng(seed, r))?;
        sim.run_until(t)?;
        Ok(observables.iter().map(|ob| ob.evaluate(sim.eta())).collect::<Vec<f64>>())
    })?;
    Ok(observables
        .iter()
        .enumerate()
        .map(|(i, ob)| {
            let xs: Vec<f64> = runs.iter().map(|r| r[i]).collect();
            let mc = mean_se(&xs);
            let z = mc.z_score(exact[i]);
            AuditReport {
                label: format!("{} beta={} {ob}", params.sigma.label(), params.beta),
                observable: *ob,
                time: t,
                replicas: n_replicas,
                mc,
                exact: exact[i],
                z,
                pass: z.abs() <= 3.0,
            }
        })
        .collect())
}

fn exact_moments(
    lattice: &Arc<LatticeApprox>,
    params: &SimParams,
    eta0: &Configuration,
    observables: &[DualObservable],
    t: f64,
) -> Result<Vec<f64>> {
    let n = lattice.n();
    let single = if observables.iter().any(|o| o.order() == 1) {
        let mut d: Vec<f64> = eta0.eta.iter().map(|&e| e as f64).collect();
        d.extend_from_slice(&params.theta);
        Some(WalkOperator::new(lattice.clone(), params.beta).semigroup_apply(&d, t)?)
    } else {
        None
    };
    let pair = if observables.iter().any(|o| o.order() == 2) {
        let op = PairOperator::new(lattice.clone(), params.beta, params.sigma)?;
        let d = op.duality_function(&eta0.eta, &params.theta);
        let moved = op.semigroup_apply(&d, t)?;
        Some((op, moved))
    } else {
        None
    };
    Ok(observables
        .iter()
        .map(|ob| match *ob {
            DualObservable::Site(x) => single.as_ref().expect("computed above")[x],
            DualObservable::Pair(x, y) => {
                let (op, v) = pair.as_ref().expect("computed above");
                debug_assert!(x < n && y < n);
                v[op.state_index(x, y).expect("admissible pair")]
            }
        })
        .collect())
}
