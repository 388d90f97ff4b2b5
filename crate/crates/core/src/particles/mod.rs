//! Open exclusion (`sigma = -1`) and inclusion (`sigma = +1`) processes on the lattice,
//! simulated exactly with a Gillespie loop over a Fenwick tree of per-site rates.

mod fenwick;
mod init;
mod sim;

pub use fenwick::RateTree;
pub use init::{init_pile, init_product, replica_rng, PileOutcome};
pub use sim::{sample_stationary, simulate, Event, EventKind, SimParams, Simulator, StationarySampler, Trajectory};

use crate::error::{Error, Result};
pub use crate::operators::Sigma;

/// Default cap on a single site's occupation for inclusion runs.
pub const DEFAULT_MAX_OCCUPANCY: u64 = 1_000_000;

/// Occupation numbers on the lattice sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub eta: Vec<u64>,
    pub sigma: Sigma,
}

impl Configuration {
    pub fn empty(n: usize, sigma: Sigma) -> Self {
        Configuration { eta: vec![0; n], sigma }
    }

    pub fn from_occupation(eta: Vec<u64>, sigma: Sigma) -> Result<Self> {
        let c = Configuration { eta, sigma };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma == Sigma::Exclusion {
            if let Some(x) = self.eta.iter().position(|&e| e > 1) {
                return Err(Error::InvalidInput(format!(
                    "exclusion configuration has {} particles at site {x}",
                    self.eta[x]
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.eta.iter().sum()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.eta.iter().map(|&e| e as f64).collect()
    }
}

/// Evaluates `f` on replicas `0..n`, in parallel when the `parallel` feature is on.
/// Results come back in replica order either way.
pub fn run_replicas<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n as u64).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n as u64).map(f).collect()
    }
}
