use std::sync::Arc;

use proptest::prelude::*;
use reservoir_lattice::observables::{
    covariance_quadrature, density_pairing, exact_stationary_variance, fluctuation_pairing, gaussianity_stats,
    iota_weight, neumann_covariance, variance_bound, TestFamily, QUADRATURE_REL_TOL,
};
use reservoir_lattice::particles::{init_product, replica_rng, run_replicas, sample_stationary, SimParams, StationarySampler};
use reservoir_lattice::{Beta, DomainSpec, LatticeApprox, PairOperator, Sigma, WalkOperator};

fn square(eps: f64) -> Arc<LatticeApprox> {
    Arc::new(LatticeApprox::build(&DomainSpec::unit_square(), eps).unwrap())
}

#[test]
fn stationary_variance_obeys_the_bound() {
    let family = TestFamily::standard(&DomainSpec::unit_square()).unwrap();
    for eps in [0.25, 1.0 / 6.0, 0.125] {
        let l = square(eps);
        let theta = l.sample_outer(|p| 0.5 + 0.45 * (3.0 * p[0]).sin() * p[1].signum());
        for beta in [Beta::Finite(0.0), Beta::Finite(1.0), Beta::Finite(3.0)] {
            let walk = WalkOperator::new(l.clone(), beta);
            let h = walk.harmonic_profile(&theta).unwrap();
            for sigma in [Sigma::Exclusion, Sigma::Inclusion] {
                let pair = PairOperator::new(l.clone(), beta, sigma).unwrap();
                let h2 = pair.two_point_profile(&h.values).unwrap();
                for f in &family.functions {
                    let fv = f.on_sites(&l);
                    let v = exact_stationary_variance(&pair, &h.values, &h2, &fv);
                    let bound = variance_bound(&l, &theta, &fv);
                    assert!(v >= -1e-15, "{eps} {beta:?} {sigma:?} {}: {v}", f.name);
                    assert!(v <= bound * (1.0 + 1e-12), "{eps} {beta:?} {sigma:?} {}: {v} > {bound}", f.name);
                }
            }
        }
    }
}

#[test]
fn constant_reservoirs_give_bernoulli_fluctuations() {
    let l = square(0.25);
    let theta = 0.3;
    let beta = Beta::Finite(0.0);
    let walk = WalkOperator::new(l.clone(), beta);
    let h = walk.harmonic_profile(&vec![theta; l.m()]).unwrap();
    let f = l.sample(|p| 1.0 + p[0] - 2.0 * p[1] * p[1]);
    let pair = PairOperator::new(l.clone(), beta, Sigma::Exclusion).unwrap();
    let h2 = pair.two_point_profile(&h.values).unwrap();
    let exact = exact_stationary_variance(&pair, &h.values, &h2, &f);
    let product = l.site_volume().powi(2) * f.iter().map(|v| v * v).sum::<f64>() * theta * (1.0 - theta);
    assert!((exact - product).abs() < 1e-14, "{exact} vs {product}");
    let fluct = neumann_covariance(&l, theta * (1.0 - theta), &f, &f);
    assert!((exact / l.site_volume() - fluct).abs() < 1e-13);

    let (lambda0, _) = walk.ground_state().unwrap();
    let sampler = StationarySampler::from_relaxation(Some(lambda0), 10.0, 2.0).unwrap();
    let params = SimParams::new(beta, Sigma::Exclusion, vec![theta; l.m()], 0.0, 5);
    let chains = run_replicas(8, |c| {
        let mut rng = replica_rng(5, c);
        let init = init_product(&vec![theta; l.n()], Sigma::Exclusion, &mut rng)?;
        sample_stationary(&l, &params, init, sampler, 400, rng)
    })
    .unwrap();
    let samples: Vec<f64> = chains
        .iter()
        .flatten()
        .map(|c| fluctuation_pairing(&l, &c.eta, h.inner(l.n()), &f))
        .collect();
    let stats = gaussianity_stats(&samples).unwrap();
    let z = (stats.variance - fluct) / stats.se_variance;
    assert!(z.abs() <= 3.0, "variance {} vs {fluct}, z {z}", stats.variance);
    assert!(stats.mean.abs() <= 3.0 * stats.se_mean);
}

#[test]
fn halving_quadrature_tolerance_stays_within_reported_error() {
    let l = square(0.125);
    let family = TestFamily::standard(&DomainSpec::unit_square()).unwrap();
    let theta = l.sample_outer(|p| 0.4 + 0.3 * p[0]);
    for beta in [Beta::Finite(0.0), Beta::Finite(1.0), Beta::Finite(3.0)] {
        let op = WalkOperator::new(l.clone(), beta);
        let h = op.harmonic_profile(&theta).unwrap();
        let hs = h.inner(l.n());
        let chi: Vec<f64> = hs.iter().map(|v| v * (1.0 - v)).collect();
        let w = iota_weight(&l, &theta, &h.values, Sigma::Exclusion);
        for name in ["x1", "cos_cos", "bump"] {
            let f = family.get(name).unwrap().on_sites(&l);
            let g = family.get("x1x2").unwrap().on_sites(&l);
            for (a, b) in [(&f, &f), (&f, &g)] {
                let coarse = covariance_quadrature(&op, a, b, &chi, Some(&w), QUADRATURE_REL_TOL).unwrap();
                let fine = covariance_quadrature(&op, a, b, &chi, Some(&w), QUADRATURE_REL_TOL / 2.0).unwrap();
                let gap = (coarse.value - fine.value).abs();
                assert!(
                    gap <= coarse.tail_bound + 1e-12 * coarse.value.abs(),
                    "{beta:?} {name}: gap {gap:e} bound {:e}",
                    coarse.tail_bound
                );
            }
        }
    }
}

#[test]
fn dirichlet_flags_match_boundary_behaviour() {
    let d = DomainSpec::unit_square();
    let family = TestFamily::standard(&d).unwrap();
    let flags: Vec<(&str, bool)> = family.functions.iter().map(|f| (f.name.as_str(), f.dirichlet)).collect();
    assert_eq!(
        flags,
        [
            ("one", false),
            ("x1", false),
            ("x2", false),
            ("x1x2", false),
            ("sin_sin", false),
            ("cos_cos", true),
            ("bump", true)
        ]
    );
    let l = square(1.0 / 16.0);
    let lip = std::f64::consts::PI * 2f64.sqrt();
    for f in family.dirichlet_only().functions.iter().filter(|f| f.name == "cos_cos") {
        for x in 0..l.n() {
            let p = l.point(x);
            let dist = 0.5 - p[0].abs().max(p[1].abs());
            assert!(f.eval(p).abs() <= lip * dist + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn density_pairings_of_nonnegative_functions_are_nonnegative(
        eta in prop::collection::vec(0u64..4, 9),
        f in prop::collection::vec(0.0f64..2.0, 9),
    ) {
        let l = square(0.25);
        prop_assert!(density_pairing(&l, &eta, &f) >= 0.0);
    }
}
