use proptest::prelude::*;
use reservoir_lattice::particles::{
    init_product, replica_rng, run_replicas, simulate, Configuration, EventKind, SimParams, Simulator,
};
use reservoir_lattice::{Beta, DomainSpec, LatticeApprox, Sigma};

fn fixture() -> LatticeApprox {
    LatticeApprox::build(&DomainSpec::unit_square(), 0.25).unwrap()
}

fn params(l: &LatticeApprox, beta: Beta, sigma: Sigma, level: f64, seed: u64) -> SimParams {
    let theta = l.sample_outer(|p| level * (0.6 + 0.4 * p[0]));
    let mut p = SimParams::new(beta, sigma, theta, 1.0, seed);
    p.record_events = true;
    p
}

fn sigma_of(sip: bool) -> Sigma {
    if sip {
        Sigma::Inclusion
    } else {
        Sigma::Exclusion
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn event_log_respects_counting_and_exclusion(seed in any::<u64>(), b in 0usize..3, sip in any::<bool>(), level in 0.0f64..1.0) {
        let l = fixture();
        let beta = [Beta::Finite(0.0), Beta::Finite(1.0), Beta::Finite(3.0)][b];
        let sigma = sigma_of(sip);
        let p = params(&l, beta, sigma, level, seed);
        let mut rng = replica_rng(seed, 0);
        let init = init_product(&vec![level; l.n()], sigma, &mut rng).unwrap();
        let tr = simulate(&l, init, &p, &[0.25, 0.5, 1.0], rng).unwrap();
        let mut eta = tr.initial.clone();
        let mut last = 0.0;
        let mut snaps = tr.snapshots.iter().peekable();
        for e in &tr.events {
            while let Some((t, s)) = snaps.peek() {
                if *t < e.time {
                    prop_assert_eq!(&eta, s);
                    snaps.next();
                } else {
                    break;
                }
            }
            prop_assert!(e.time > last);
            last = e.time;
            let before: u64 = eta.iter().sum();
            match e.kind {
                EventKind::Jump { from, to } => {
                    prop_assert!(l.neighbors(from).contains(&to));
                    prop_assert!(eta[from] > 0);
                    eta[from] -= 1;
                    eta[to] += 1;
                    prop_assert_eq!(eta.iter().sum::<u64>(), before);
                }
                EventKind::Exit { site } => {
                    prop_assert!(l.is_inner_boundary(site));
                    eta[site] -= 1;
                }
                EventKind::Entry { site } => {
                    prop_assert!(l.is_inner_boundary(site));
                    eta[site] += 1;
                }
            }
            if sigma == Sigma::Exclusion {
                prop_assert!(eta.iter().all(|&v| v <= 1));
            }
        }
        for (_, s) in snaps {
            prop_assert_eq!(&eta, s);
        }
        prop_assert_eq!(tr.replay(), eta);
        prop_assert_eq!(tr.event_count, tr.events.len() as u64);
    }

    #[test]
    fn rate_cache_tracks_every_event(seed in any::<u64>(), sip in any::<bool>(), level in 0.05f64..1.0) {
        let l = fixture();
        let sigma = sigma_of(sip);
        let p = params(&l, Beta::Finite(0.5), sigma, level, seed);
        let mut rng = replica_rng(seed, 1);
        let init = init_product(&vec![level; l.n()], sigma, &mut rng).unwrap();
        let mut sim = Simulator::new(&l, &p, init, rng).unwrap();
        let mut t = 0.0;
        for _ in 0..400 {
            let seen = sim.event_count();
            while sim.event_count() == seen && t < 2.0 {
                t += 1e-3;
                sim.run_until(t).unwrap();
            }
            prop_assert!(sim.rate_cache_error() < 1e-12);
        }
    }

    #[test]
    fn identical_seeds_replay_identically(seed in any::<u64>(), sip in any::<bool>()) {
        let l = fixture();
        let sigma = sigma_of(sip);
        let p = params(&l, Beta::Finite(1.0), sigma, 0.7, seed);
        let run = || {
            let mut rng = replica_rng(seed, 5);
            let init = init_product(&vec![0.3; l.n()], sigma, &mut rng).unwrap();
            simulate(&l, init, &p, &[0.5], rng).unwrap()
        };
        let (a, b) = (run(), run());
        prop_assert_eq!(a.events, b.events);
        prop_assert_eq!(a.snapshots, b.snapshots);
    }
}

#[test]
fn replica_sets_do_not_depend_on_scheduling() {
    let l = fixture();
    let p = SimParams::new(Beta::Finite(1.0), Sigma::Inclusion, vec![0.8; l.m()], 0.5, 9);
    let one = |r: u64| {
        let mut rng = replica_rng(9, r);
        let init = init_product(&vec![0.8; l.n()], Sigma::Inclusion, &mut rng)?;
        simulate(&l, init, &p, &[0.5], rng).map(|t| t.snapshots[0].1.clone())
    };
    let parallel = run_replicas(64, one).unwrap();
    let serial: Vec<_> = (0..64).rev().map(|r| one(r).unwrap()).rev().collect();
    assert_eq!(parallel, serial);
}

#[test]
fn constant_reservoirs_relax_to_their_density() {
    // Product Bernoulli(theta) is invariant, so the time-1 mean from empty is close to theta.
    let l = fixture();
    let theta = 0.35;
    let p = SimParams::new(Beta::Finite(0.0), Sigma::Exclusion, vec![theta; l.m()], 1.0, 21);
    let totals = run_replicas(4000, |r| {
        let tr = simulate(&l, Configuration::empty(l.n(), Sigma::Exclusion), &p, &[1.0], replica_rng(21, r))?;
        Ok(tr.snapshots[0].1.iter().sum::<u64>() as f64)
    })
    .unwrap();
    let n = totals.len() as f64;
    let mean = totals.iter().sum::<f64>() / n;
    let var = totals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let target = theta * l.n() as f64;
    let z = (mean - target) / (var / n).sqrt();
    assert!(z.abs() <= 3.0, "mean {mean} target {target} z {z}");
    let binomial = l.n() as f64 * theta * (1.0 - theta);
    assert!((var / binomial - 1.0).abs() < 0.1, "var {var} vs {binomial}");
}
