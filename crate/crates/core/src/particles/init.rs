use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Poisson};

use super::{Configuration, Sigma};
use crate::error::{Error, Result};
use crate::geometry::{LatticeApprox, Point};

/// Independent stream for replica `replica` of a run seeded with `master`.
pub fn replica_rng(master: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(replica);
    rng
}

/// Independent sites with mean `g(x)`: Bernoulli for exclusion, Poisson for inclusion.
pub fn init_product<R: Rng + ?Sized>(g: &[f64], sigma: Sigma, rng: &mut R) -> Result<Configuration> {
    let bad = |x: usize| Error::InvalidInput(format!("profile value {} at site {x} is out of range for {}", g[x], sigma.label()));
    let mut eta = Vec::with_capacity(g.len());
    for (x, &p) in g.iter().enumerate() {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(bad(x));
        }
        let e = match sigma {
            Sigma::Exclusion => {
                let b = Bernoulli::new(p).map_err(|_| bad(x))?;
                b.sample(rng) as u64
            }
            Sigma::Inclusion if p == 0.0 => 0,
            Sigma::Inclusion => Poisson::new(p).map_err(|_| bad(x))?.sample(rng) as u64,
        };
        eta.push(e);
    }
    Ok(Configuration { eta, sigma })
}

#[derive(Debug, Clone)]
pub struct PileOutcome {
    pub config: Configuration,
    pub height: u64,
    pub warning: Option<String>,
}

/// `floor(eps^(-d/2))` particles on every site within `eps^(1/2)` of `center`.
pub fn init_pile(lattice: &LatticeApprox, center: &Point, sigma: Sigma) -> Result<PileOutcome> {
    if sigma == Sigma::Exclusion {
        return Err(Error::InvalidInput("piles need inclusion: exclusion allows one particle per site".into()));
    }
    let eps = lattice.eps;
    let height = eps.powf(-(lattice.dim as f64) / 2.0).floor() as u64;
    let radius = eps.sqrt();
    let eta: Vec<u64> = (0..lattice.n())
        .map(|x| {
            let p = lattice.point(x);
            let r2: f64 = (0..3).map(|i| (p[i] - center[i]).powi(2)).sum();
            if r2.sqrt() <= radius * (1.0 + 1e-12) { height } else { 0 }
        })
        .collect();
    let warning = eta
        .iter()
        .all(|&e| e == 0)
        .then(|| format!("no lattice site within {radius:.4} of the pile center; configuration is empty"));
    Ok(PileOutcome { config: Configuration { eta, sigma }, height, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;

    #[test]
    fn zero_profile_is_empty() {
        let mut rng = replica_rng(1, 0);
        for sigma in [Sigma::Exclusion, Sigma::Inclusion] {
            assert_eq!(init_product(&[0.0; 9], sigma, &mut rng).unwrap().total(), 0);
        }
        assert!(init_product(&[1.5], Sigma::Exclusion, &mut rng).is_err());
        assert!(init_product(&[-0.1], Sigma::Inclusion, &mut rng).is_err());
    }

    #[test]
    fn pile_height_and_rejections() {
        let l = LatticeApprox::build(&DomainSpec::unit_square(), 1.0 / 16.0).unwrap();
        let p = init_pile(&l, &[0.0; 3], Sigma::Inclusion).unwrap();
        assert_eq!(p.height, 16);
        assert!(p.config.eta.iter().all(|&e| e == 0 || e == 16));
        assert!(init_pile(&l, &[0.0; 3], Sigma::Exclusion).is_err());
        let far = init_pile(&l, &[5.0, 5.0, 0.0], Sigma::Inclusion).unwrap();
        assert_eq!(far.config.total(), 0);
        assert!(far.warning.is_some());
    }

    #[test]
    fn streams_differ_and_repeat() {
        let a: u64 = replica_rng(7, 0).random();
        let b: u64 = replica_rng(7, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, replica_rng(7, 0).random::<u64>());
    }
}
