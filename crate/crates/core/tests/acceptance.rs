//! Acceptance suite: one line per criterion, nonzero exit if any criterion fails.
//! Runs without the libtest harness so the lines come out in order.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use reservoir_lattice::lab::{
    run_duality_audit, run_fluctuations, run_hydrodynamic, run_hydrostatic, ExperimentConfig, ExperimentKind, Report,
    RunContext,
};
use reservoir_lattice::observables::{covariance_quadrature, QUADRATURE_REL_TOL};
use reservoir_lattice::{Beta, DomainSpec, LatticeApprox, PairOperator, Sigma, WalkOperator};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn square(eps: f64) -> Arc<LatticeApprox> {
    Arc::new(LatticeApprox::build(&DomainSpec::unit_square(), eps).unwrap())
}

const BETAS: [Beta; 4] = [Beta::Finite(0.0), Beta::Finite(1.0), Beta::Finite(3.0), Beta::Infinite];

fn exact_identities() -> Outcome {
    let lattices = [
        square(0.25),
        square(0.125),
        Arc::new(LatticeApprox::build(&DomainSpec::disk(0.4).unwrap(), 0.25).unwrap()),
        Arc::new(LatticeApprox::build(&DomainSpec::disk(0.4).unwrap(), 0.125).unwrap()),
        Arc::new(LatticeApprox::build(&DomainSpec::unit_cube(), 0.25).unwrap()),
    ];
    let mut worst: [f64; 8] = [0.0; 8];
    for l in &lattices {
        let (n, m) = (l.n(), l.m());
        let f: Vec<f64> = (0..n).map(|x| (3.0 * l.point(x)[0] + 1.0).sin() + l.point(x)[1].powi(2)).collect();
        let g: Vec<f64> = (0..n).map(|x| 1.0 - l.point(x)[0] * l.point(x)[1] + 0.5 * l.point(x)[2]).collect();
        let closed: Vec<f64> = (0..n + m)
            .map(|i| {
                let p = if i < n { *l.point(i) } else { *l.outer_point(i - n) };
                0.7 + p[0] - p[1] * p[1]
            })
            .collect();
        let closed_op = WalkOperator::new(l.clone(), Beta::Infinite);
        for beta in BETAS {
            let op = WalkOperator::new(l.clone(), beta);
            let scale = op.rate_bound().max(1.0);
            // Rows of the closed-lattice generator sum to zero.
            worst[0] = worst[0].max(op.apply(&vec![1.0; n + m]).iter().map(|v| v.abs()).fold(0.0, f64::max) / scale);
            // Symmetric in L^2 of the uniform site measure.
            let b = op.block().to_dense();
            worst[1] = worst[1].max((&b - b.transpose()).abs().max() / scale);
            // Feynman-Kac block identity.
            let mut fk = closed_op.block().to_dense();
            for x in 0..n {
                fk[(x, x)] -= op.absorption_scale() * op.potential()[x];
            }
            worst[2] = worst[2].max((&b - fk).abs().max() / scale);
            // Dirichlet form and carre du champ.
            let e = op.dirichlet_form(&f, &g);
            let rhs = -op.inner_product(&f, &op.apply_block(&g));
            let gam = op.inner_product(&op.carre_du_champ(&f, &g), &vec![1.0; n]);
            worst[3] = worst[3].max((e - rhs).abs() / e.abs().max(1.0));
            worst[4] = worst[4].max((gam - e).abs() / e.abs().max(1.0));
            // Pair operators are checked on the small lattices only.
            if n > 30 {
                continue;
            }
            for sigma in [Sigma::Exclusion, Sigma::Inclusion] {
                let pair = PairOperator::new(l.clone(), beta, sigma).unwrap();
                worst[5] = worst[5].max(pair.consistency_defect(&op, &closed) / pair.rate_bound().max(1.0));
                if beta.is_finite() {
                    let h = op.harmonic_profile(&vec![0.35; m]).unwrap();
                    worst[6] = worst[6].max(h.values.iter().map(|v| (v - 0.35).abs()).fold(0.0, f64::max));
                    let h2 = pair.two_point_profile(&h.values).unwrap();
                    worst[7] = worst[7].max(h2.values.iter().map(|v| (v - 0.35 * 0.35).abs()).fold(0.0, f64::max));
                }
            }
        }
    }
    let names = ["row sums", "symmetry", "block identity", "dirichlet form", "carre du champ", "consistency", "h const", "h2 const"];
    let detail: Vec<String> = names.iter().zip(&worst).map(|(n, w)| format!("{n} {w:.1e}")).collect();
    outcome(worst.iter().all(|&w| w <= 1e-10), detail.join(", "))
}

const EPS: [f64; 3] = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0];

fn monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

fn spectral_convergence() -> Outcome {
    let mut neumann = Vec::new();
    let mut dirichlet = Vec::new();
    for eps in EPS {
        let l = square(eps);
        let s3 = WalkOperator::new(l.clone(), Beta::Finite(3.0)).spectrum(2).unwrap();
        let s0 = WalkOperator::new(l.clone(), Beta::Finite(0.0)).spectrum(1).unwrap();
        neumann.push((s3.eigenvalues[1] - PI * PI).abs() / (PI * PI));
        dirichlet.push((s0.eigenvalues[0] - 2.0 * PI * PI).abs() / (2.0 * PI * PI));
    }
    let pass = neumann[2] <= 0.05 && dirichlet[2] <= 0.10 && monotone(&neumann) && monotone(&dirichlet);
    outcome(pass, format!("lambda1 rel errors (beta=3) {neumann:.4?}; lambda0 rel errors (beta=0) {dirichlet:.4?}"))
}

fn ground_state_scaling() -> Outcome {
    let mut lam = Vec::new();
    let mut dev = 0.0;
    for eps in EPS {
        let l = square(eps);
        let (l0, psi) = WalkOperator::new(l.clone(), Beta::Finite(3.0)).ground_state().unwrap();
        lam.push(l0);
        let u = l.total_volume().powf(-0.5);
        dev = psi.iter().map(|p| (p - u).abs()).fold(0.0, f64::max);
    }
    let x: Vec<f64> = EPS.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = lam.iter().map(|v| v.ln()).collect();
    let (mx, my) = (x.iter().sum::<f64>() / 3.0, y.iter().sum::<f64>() / 3.0);
    let slope = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    outcome((slope - 2.0).abs() <= 0.15 && dev <= 0.1, format!("slope {slope:.4}, psi0 deviation {dev:.2e}"))
}

fn harmonic_convergence() -> Outcome {
    let mut neumann = Vec::new();
    let mut dirichlet = Vec::new();
    for eps in EPS {
        let l = square(eps);
        let theta = l.sample_outer(|p| p[0] + 0.5);
        let h3 = WalkOperator::new(l.clone(), Beta::Finite(3.0)).harmonic_profile(&theta).unwrap();
        let h0 = WalkOperator::new(l.clone(), Beta::Finite(0.0)).harmonic_profile(&theta).unwrap();
        neumann.push((0..l.n()).map(|x| (h3.values[x] - 0.5).abs()).fold(0.0, f64::max));
        dirichlet.push((0..l.n()).map(|x| (h0.values[x] - l.point(x)[0] - 0.5).abs()).fold(0.0, f64::max));
    }
    let pass = monotone(&neumann) && monotone(&dirichlet) && neumann[2] <= 0.1 && dirichlet[2] <= 0.1;
    outcome(pass, format!("beta=3 vs 1/2 {neumann:.3?}; beta=0 vs x1 + 1/2 {dirichlet:.3?}"))
}

fn domination_and_ordering() -> Outcome {
    let l = square(0.25);
    let n = l.n();
    let mut violations = 0;
    let mut checked = 0;
    for t in [0.05, 0.5] {
        let kernels: Vec<Vec<Vec<f64>>> = BETAS
            .iter()
            .map(|&b| {
                let op = WalkOperator::new(l.clone(), b);
                (0..n).map(|y| op.heat_kernel_column(y, t).unwrap()[..n].to_vec()).collect()
            })
            .collect();
        for w in kernels.windows(2) {
            for y in 0..n {
                for x in 0..n {
                    checked += 1;
                    violations += usize::from(w[0][y][x] > w[1][y][x]);
                }
            }
        }
    }
    let spectra: Vec<Vec<f64>> =
        BETAS.iter().map(|&b| WalkOperator::new(l.clone(), b).spectrum(n).unwrap().eigenvalues).collect();
    let mut order_bad = 0;
    for w in spectra.windows(2) {
        order_bad += w[0].iter().zip(&w[1]).filter(|(a, b)| a < b).count();
    }
    outcome(
        violations == 0 && order_bad == 0,
        format!("{violations} of {checked} kernel entries out of order, {order_bad} eigenvalue indices out of order"),
    )
}

fn from_report(r: &Report) -> Outcome {
    let failures: Vec<String> = r.failures().iter().map(|c| format!("{} ({})", c.name, c.detail)).collect();
    let asserted = r.checks.iter().filter(|c| c.asserted).count();
    if failures.is_empty() {
        outcome(true, format!("{asserted} checks pass"))
    } else {
        outcome(false, format!("{} of {asserted} checks fail: {}", failures.len(), failures.join("; ")))
    }
}

fn lab_run(kind: ExperimentKind, run: fn(&ExperimentConfig, &mut RunContext) -> reservoir_lattice::Result<Report>) -> Outcome {
    let cfg = ExperimentConfig::defaults(kind, false);
    match run(&cfg, &mut RunContext::detached(&cfg)) {
        Ok(r) => from_report(&r),
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

fn duality() -> Outcome {
    let cfg = ExperimentConfig::defaults(ExperimentKind::DualityAudit, false);
    match run_duality_audit(&cfg, &mut RunContext::detached(&cfg)) {
        Ok(r) => {
            let cells = r.summary["cells"].as_u64().unwrap_or(0);
            let passed = r.summary["passed"].as_u64().unwrap_or(0);
            let mut o = from_report(&r);
            o.pass &= cells == 36;
            o.detail = format!("{passed} of {cells} cells within 3 SE; {}", o.detail);
            o
        }
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

fn quadrature_self_test() -> Outcome {
    let l = square(0.125);
    let op = WalkOperator::new(l.clone(), Beta::Finite(0.0));
    let f = l.sample(|p| (PI * p[0]).cos() * (1.0 + p[1]));
    let chi = 0.21;
    let q = covariance_quadrature(&op, &f, &f, &vec![chi; l.n()], None, QUADRATURE_REL_TOL).unwrap();
    let target = chi * l.site_volume() * f.iter().map(|v| v * v).sum::<f64>();
    let err = (q.value - target).abs();
    outcome(
        err <= 1e-6 * target + q.tail_bound,
        format!("value {:.10e} vs {target:.10e}, |diff| {err:.2e}, tail bound {:.2e}", q.value, q.tail_bound),
    )
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 10] = [
        ("exact identities", Duration::from_secs(1), exact_identities),
        ("spectral convergence", Duration::from_secs(120), spectral_convergence),
        ("ground-state scaling", Duration::from_secs(60), ground_state_scaling),
        ("harmonic convergence", Duration::from_secs(60), harmonic_convergence),
        ("domination and eigenvalue ordering", Duration::from_secs(1), domination_and_ordering),
        ("duality audits", Duration::from_secs(600), duality),
        ("hydrodynamic limit", Duration::from_secs(600), || lab_run(ExperimentKind::Hydrodynamic, run_hydrodynamic)),
        ("hydrostatic limit and variance bound", Duration::from_secs(600), || lab_run(ExperimentKind::Hydrostatic, run_hydrostatic)),
        ("neumann fluctuations", Duration::from_secs(600), || lab_run(ExperimentKind::Fluctuations, run_fluctuations)),
        ("covariance quadrature self-test", Duration::from_secs(60), quadrature_self_test),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let pass = o.pass && took <= *budget;
        failed += usize::from(!pass);
        println!(
            "criterion {:>2} {:<38} {}  [{:.2}s of {}s] {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs(),
            o.detail
        );
    }
    println!("acceptance: {} of {ran} criteria pass", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
