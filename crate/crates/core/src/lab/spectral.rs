//! Deterministic experiments: spectra, harmonic profiles and semigroups across lattice spacings.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{eps_tag, fmt_list, non_increasing, ExperimentConfig, ExperimentKind, Report, RunContext, Table};
use crate::error::Result;
use crate::expr::CoordExpr;
use crate::geometry::LatticeApprox;
use crate::linalg::sup_norm;
use crate::observables::TestFamily;
use crate::operators::{Beta, Regime, WalkOperator};

/// Lowest `count` eigenvalues of the Laplacian on a box with the given sides,
/// Neumann (`dirichlet = false`) or Dirichlet.
pub fn box_eigenvalues(sides: &[f64], count: usize, dirichlet: bool) -> Vec<f64> {
    let start = usize::from(dirichlet);
    let kmax = start + count;
    let mut vals = Vec::new();
    let mut idx = vec![start; sides.len()];
    loop {
        vals.push(PI * PI * idx.iter().zip(sides).map(|(&k, l)| (k as f64 / l).powi(2)).sum::<f64>());
        let mut i = 0;
        while i < idx.len() {
            idx[i] += 1;
            if idx[i] <= kmax {
                break;
            }
            idx[i] = start;
            i += 1;
        }
        if i == idx.len() {
            break;
        }
    }
    vals.sort_by(f64::total_cmp);
    vals.truncate(count);
    vals
}

/// Least-squares slope of `log y` against `log x`.
pub fn slope_fit(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn regime_label(beta: Beta) -> &'static str {
    match (beta, beta.regime()) {
        (Beta::Infinite, _) => "closed",
        (_, Regime::Neumann) => "N",
        (_, Regime::Robin) => "R",
        (_, Regime::Dirichlet) => "D",
    }
}

/// Values of `coarse` at each site of the coarse lattice, paired with the fine lattice's value
/// at the same point. Sites with no fine counterpart are skipped.
fn sup_distance(coarse: &LatticeApprox, cv: &[f64], fine: &LatticeApprox, fv: &[f64]) -> (f64, usize) {
    let mut d: f64 = 0.0;
    let mut missing = 0;
    for x in 0..coarse.n() {
        match fine.site_index(coarse.point(x)) {
            Some(y) => d = d.max((cv[x] - fv[y]).abs()),
            None => missing += 1,
        }
    }
    (d, missing)
}

fn dump_lattice(ctx: &RunContext, lattice: &LatticeApprox) -> Result<()> {
    let tag = eps_tag(lattice.eps);
    if let Some(w) = ctx.file(&format!("sites_{tag}.csv"))? {
        lattice.write_sites_csv(w)?;
    }
    if let Some(w) = ctx.file(&format!("cross_edges_{tag}.csv"))? {
        lattice.write_cross_edges_csv(w)?;
    }
    Ok(())
}

pub fn run_spectral_convergence(cfg: &ExperimentConfig, ctx: &mut RunContext) -> Result<Report> {
    let mut report = Report::new(ExperimentKind::SpectralConvergence);
    let domain = cfg.domain.build()?;
    let sides = cfg.domain.box_sides();
    let count = cfg.eigen_count + 1;
    let mut eig = Table::new("eigenvalues", &["beta", "regime", "eps", "n", "lambda", "reference", "reference_kind", "rel_error"]);
    let mut ground = Table::new("ground_state", &["beta", "eps", "lambda0", "psi0_uniform_dev"]);

    let mut lattices = Vec::new();
    for &eps in &cfg.eps {
        ctx.stage(format!("lattice eps={eps}"))?;
        let l = ctx.lattice(&domain, eps, &mut report)?;
        dump_lattice(ctx, &l)?;
        lattices.push(l);
    }

    for &beta in &cfg.beta {
        ctx.stage(format!("spectra beta={beta}"))?;
        let mut spectra = Vec::new();
        for l in &lattices {
            let op = WalkOperator::new(l.clone(), beta);
            if let Some(w) = ctx.file(&format!("operator_beta{beta}_{}.csv", eps_tag(l.eps)))? {
                op.write_triplets(w)?;
            }
            spectra.push(op.spectrum(count.min(l.n()))?);
        }
        let finest = spectra.last().expect("eps list is non-empty").eigenvalues.clone();
        let closed_form = match (beta, beta.regime(), &sides) {
            (Beta::Infinite, _, Some(s)) | (_, Regime::Neumann, Some(s)) => Some(box_eigenvalues(s, count, false)),
            (_, Regime::Dirichlet, Some(s)) => Some(box_eigenvalues(s, count, true)),
            _ => None,
        };
        let mut rel_errors: Vec<Vec<f64>> = vec![Vec::new(); count];
        for (l, s) in lattices.iter().zip(&spectra) {
            for (k, &lam) in s.eigenvalues.iter().enumerate() {
                let (reference, kind) = match &closed_form {
                    Some(r) => (r[k], "closed_form"),
                    None => (finest.get(k).copied().unwrap_or(f64::NAN), "finest_eps"),
                };
                let err = if reference != 0.0 { (lam - reference).abs() / reference.abs() } else { (lam - reference).abs() };
                rel_errors[k].push(err);
                eig.push([
                    beta.to_string(),
                    regime_label(beta).into(),
                    l.eps.to_string(),
                    k.to_string(),
                    lam.to_string(),
                    reference.to_string(),
                    kind.into(),
                    err.to_string(),
                ]);
            }
            let (lam0, psi0) = s.ground_state();
            let uniform = l.total_volume().powf(-0.5);
            let dev = psi0.iter().map(|p| (p - uniform).abs()).fold(0.0, f64::max);
            ground.push([beta.to_string(), l.eps.to_string(), lam0.to_string(), dev.to_string()]);
        }

        let b = beta.to_string();
        if beta == Beta::Infinite {
            let lam0: Vec<f64> = spectra.iter().map(|s| s.eigenvalues[0]).collect();
            report.check(format!("beta={b}: lambda0 = 0 at every eps"), lam0.iter().all(|&v| v == 0.0), fmt_list(&lam0));
            continue;
        }
        // The eigenvalue tracked per regime: lambda_1 when lambda_0 tends to zero, lambda_0 otherwise.
        let (k, tol) = match beta.regime() {
            Regime::Neumann => (1, 0.05),
            Regime::Dirichlet => (0, 0.10),
            Regime::Robin => (0, f64::NAN),
        };
        if k >= count {
            continue;
        }
        let errs = &rel_errors[k];
        match &closed_form {
            Some(r) => {
                let last = *errs.last().expect("non-empty");
                report.check(
                    format!("beta={b}: lambda{k} within {:.0}% of {:.4} at eps={}", tol * 100.0, r[k], cfg.eps.last().unwrap()),
                    last <= tol,
                    format!("relative error {last:.4}"),
                );
                report.check(format!("beta={b}: lambda{k} errors monotone over eps"), non_increasing(errs, 0.0), fmt_list(errs));
            }
            None if errs.len() > 2 => {
                let coarse = &errs[..errs.len() - 1];
                report.check(
                    format!("beta={b}: lambda{k} Cauchy distances to finest eps decrease"),
                    non_increasing(coarse, 0.0),
                    fmt_list(coarse),
                );
            }
            None => {}
        }

        if let Beta::Finite(bv) = beta {
            if bv > 1.0 && lattices.len() >= 2 {
                let lam0: Vec<f64> = spectra.iter().map(|s| s.eigenvalues[0]).collect();
                let slope = slope_fit(&cfg.eps, &lam0);
                let target = bv - 1.0;
                report.check(
                    format!("beta={b}: log lambda0 vs log eps slope within 0.15 of {target}"),
                    (slope - target).abs() <= 0.15,
                    format!("slope {slope:.4}"),
                );
                let dev: f64 = ground.rows.last().unwrap()[3].parse().unwrap();
                report.check(
                    format!("beta={b}: |psi0 - uniform|_inf <= 0.1 at eps={}", cfg.eps.last().unwrap()),
                    dev <= 0.1,
                    format!("deviation {dev:.4}"),
                );
                report.record(&format!("slope_beta{b}"), slope);
            }
        }
    }
    report.tables.push(eig);
    report.tables.push(ground);
    Ok(report)
}

/// Whether `theta` is harmonic, by a finite-difference Laplacian at a few points of the domain.
fn is_harmonic(expr: &CoordExpr, lattice: &LatticeApprox) -> bool {
    let h = 1e-3;
    let probe = [0, lattice.n() / 3, lattice.n() / 2, 2 * lattice.n() / 3, lattice.n() - 1];
    let scale = (0..lattice.n()).map(|x| expr.eval(lattice.point(x)).abs()).fold(1.0, f64::max);
    probe.iter().all(|&x| {
        let p = *lattice.point(x);
        let c = expr.eval(&p);
        let lap: f64 = (0..lattice.dim)
            .map(|i| {
                let (mut a, mut b) = (p, p);
                a[i] += h;
                b[i] -= h;
                (expr.eval(&a) + expr.eval(&b) - 2.0 * c) / (h * h)
            })
            .sum();
        lap.abs() <= 1e-4 * scale
    })
}

pub fn run_harmonic_convergence(cfg: &ExperimentConfig, ctx: &mut RunContext) -> Result<Report> {
    let mut report = Report::new(ExperimentKind::HarmonicConvergence);
    let domain = cfg.domain.build()?;
    let theta_expr = CoordExpr::parse(&cfg.theta)?;
    let mut errors = Table::new("errors", &["beta", "regime", "eps", "reference", "sup_error", "residual", "iterations"]);
    let mut profiles = Table::new("profiles", &["beta", "eps", "site", "x1", "x2", "x3", "h"]);

    let mut lattices = Vec::new();
    for &eps in &cfg.eps {
        lattices.push(ctx.lattice(&domain, eps, &mut report)?);
    }
    let boundary_avg = domain.integrate_boundary(&|p| theta_expr.eval(p)) / domain.surface_measure();
    let finest = lattices.last().expect("eps list is non-empty").clone();
    let harmonic = is_harmonic(&theta_expr, &finest);

    for &beta in &cfg.beta {
        if !beta.is_finite() {
            report.warnings.push("beta = inf has no harmonic profile; skipped".into());
            continue;
        }
        ctx.stage(format!("profiles beta={beta}"))?;
        let mut hs = Vec::new();
        for l in &lattices {
            let op = WalkOperator::new(l.clone(), beta);
            let hp = op.harmonic_profile(&l.sample_outer(|p| theta_expr.eval(p)))?;
            for x in 0..l.n() {
                let p = l.point(x);
                profiles.push([beta.to_string(), l.eps.to_string(), x.to_string(), p[0].to_string(), p[1].to_string(), p[2].to_string(), hp.values[x].to_string()]);
            }
            hs.push(hp);
        }
        let closed: Option<(&str, Box<dyn Fn(&LatticeApprox) -> Vec<f64>>)> = match beta.regime() {
            Regime::Neumann => Some(("boundary_average", Box::new(move |l: &LatticeApprox| vec![boundary_avg; l.n()]))),
            Regime::Dirichlet if harmonic => Some(("theta", Box::new(|l: &LatticeApprox| l.sample(|p| theta_expr.eval(p))))),
            _ => None,
        };
        let mut errs = Vec::new();
        for (i, (l, hp)) in lattices.iter().zip(&hs).enumerate() {
            let (kind, err) = match &closed {
                Some((kind, reference)) => (*kind, sup_norm(&hp.values[..l.n()].iter().zip(reference(l)).map(|(a, b)| a - b).collect::<Vec<_>>())),
                None if i + 1 == lattices.len() => continue,
                None => {
                    let (d, missing) = sup_distance(l, &hp.values, &finest, &hs.last().unwrap().values);
                    if missing > 0 {
                        report.warnings.push(format!("eps = {}: {missing} sites have no counterpart on the finest lattice", l.eps));
                    }
                    ("finest_eps", d)
                }
            };
            errs.push(err);
            errors.push([
                beta.to_string(),
                regime_label(beta).into(),
                l.eps.to_string(),
                kind.into(),
                err.to_string(),
                hp.residual.to_string(),
                hp.solve.iterations.to_string(),
            ]);
        }
        let b = beta.to_string();
        report.check(format!("beta={b}: profile errors decrease over eps"), non_increasing(&errs, 1e-12), fmt_list(&errs));
        if closed.is_some() {
            let last = *errs.last().unwrap();
            report.check(
                format!("beta={b}: profile error <= 0.1 at eps={}", finest.eps),
                last <= 0.1,
                format!("sup error {last:.4e}"),
            );
        }
    }
    report.record("boundary_average", boundary_avg);
    report.record("theta_harmonic", harmonic);
    report.tables.push(errors);
    report.tables.push(profiles);
    Ok(report)
}

pub fn run_semigroup_convergence(cfg: &ExperimentConfig, ctx: &mut RunContext) -> Result<Report> {
    let mut report = Report::new(ExperimentKind::SemigroupConvergence);
    let domain = cfg.domain.build()?;
    let family = TestFamily::select(&domain, &cfg.test_functions)?;
    let mut dist = Table::new("distances", &["beta", "f", "t", "eps", "reference_eps", "sup_distance"]);
    let mut dom = Table::new("domination", &["eps", "f", "t", "beta_low", "beta_high", "max_violation"]);

    let mut lattices: Vec<Arc<LatticeApprox>> = Vec::new();
    for &eps in &cfg.eps {
        lattices.push(ctx.lattice(&domain, eps, &mut report)?);
    }
    let finest = lattices.last().expect("eps list is non-empty").clone();

    // values[beta][eps][f][t]
    let mut values = Vec::new();
    for &beta in &cfg.beta {
        ctx.stage(format!("semigroups beta={beta}"))?;
        let mut per_eps = Vec::new();
        for l in &lattices {
            let op = WalkOperator::new(l.clone(), beta);
            let mut per_f = Vec::new();
            for f in &family.functions {
                let mut v = f.on_sites(l);
                let mut s = 0.0;
                let mut per_t = Vec::new();
                for &t in &cfg.times {
                    v = op.semigroup_block(&v, t - s)?;
                    s = t;
                    per_t.push(v.clone());
                }
                per_f.push(per_t);
            }
            per_eps.push(per_f);
        }
        values.push(per_eps);
    }

    ctx.stage("distances")?;
    for (bi, &beta) in cfg.beta.iter().enumerate() {
        for (fi, f) in family.functions.iter().enumerate() {
            for (ti, &t) in cfg.times.iter().enumerate() {
                let reference = &values[bi][lattices.len() - 1][fi][ti];
                let mut ds = Vec::new();
                for (ei, l) in lattices.iter().enumerate().take(lattices.len() - 1) {
                    let (d, missing) = sup_distance(l, &values[bi][ei][fi][ti], &finest, reference);
                    if missing > 0 {
                        report.warnings.push(format!("eps = {}: {missing} sites have no counterpart on the finest lattice", l.eps));
                    }
                    ds.push(d);
                    dist.push([beta.to_string(), f.name.clone(), t.to_string(), l.eps.to_string(), finest.eps.to_string(), d.to_string()]);
                }
                if ds.len() >= 2 {
                    report.check(
                        format!("beta={beta} f={} t={t}: distances to finest eps decrease", f.name),
                        non_increasing(&ds, 1e-12),
                        fmt_list(&ds),
                    );
                }
            }
        }
    }

    ctx.stage("domination")?;
    let mut order: Vec<usize> = (0..cfg.beta.len()).collect();
    order.sort_by(|&a, &b| cfg.beta[a].as_f64().total_cmp(&cfg.beta[b].as_f64()));
    for (ei, l) in lattices.iter().enumerate() {
        for (fi, f) in family.functions.iter().enumerate() {
            let sampled = f.on_sites(l);
            if sampled.iter().any(|&v| v < 0.0) {
                continue;
            }
            let tol = 1e-10 * sup_norm(&sampled).max(1.0);
            for (ti, &t) in cfg.times.iter().enumerate() {
                for w in order.windows(2) {
                    let lo = &values[w[0]][ei][fi][ti];
                    let hi = &values[w[1]][ei][fi][ti];
                    let worst = lo.iter().zip(hi).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
                    dom.push([
                        l.eps.to_string(),
                        f.name.clone(),
                        t.to_string(),
                        cfg.beta[w[0]].to_string(),
                        cfg.beta[w[1]].to_string(),
                        worst.to_string(),
                    ]);
                    report.check(
                        format!("eps={} f={} t={t}: P(beta={}) <= P(beta={})", l.eps, f.name, cfg.beta[w[0]], cfg.beta[w[1]]),
                        worst <= tol,
                        format!("max violation {worst:.3e}"),
                    );
                }
            }
        }
    }
    report.record("test_functions", family.names());
    report.tables.push(dist);
    report.tables.push(dom);
    Ok(report)
}
