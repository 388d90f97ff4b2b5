//! Monte Carlo experiments: hydrodynamic and hydrostatic limits, stationary fluctuations, duality audits.

use std::sync::Arc;

use super::{config_error, derive_seed, eps_tag, ExperimentConfig, ExperimentKind, Report, RunContext, Table};
use crate::error::Result;
use crate::expr::CoordExpr;
use crate::geometry::LatticeApprox;
use crate::linalg::sup_norm;
use crate::observables::{
    covariance_quadrature, density_pairing, duality_sweep, exact_stationary_variance, fluctuation_pairing,
    gaussianity_stats, iota_weight, mean_se, measure_pairing, mild_solution, neumann_covariance, profile_measure,
    variance_bound, DualObservable, Estimate, TestFamily, QUADRATURE_REL_TOL,
};
use crate::operators::{PairOperator, Regime, Sigma, WalkOperator};
use crate::particles::{
    init_pile, init_product, replica_rng, run_replicas, sample_stationary, simulate, Configuration, SimParams,
    StationarySampler,
};

/// Batches per stationary chain for standard errors of correlated samples.
const BATCHES_PER_CHAIN: usize = 5;

enum Initial {
    Product(CoordExpr),
    Pile,
    Stationary,
    Fixed,
}

impl Initial {
    fn parse(src: &str) -> Result<Self> {
        let s = src.trim();
        if let Some(expr) = s.strip_prefix("product:") {
            return Ok(Initial::Product(CoordExpr::parse(expr)?));
        }
        match s {
            "pile" => Ok(Initial::Pile),
            "stationary" => Ok(Initial::Stationary),
            "fixed" => Ok(Initial::Fixed),
            _ => Err(config_error(format!("unknown initial condition {src:?}"))),
        }
    }
}

/// Exterior densities from the config's expression.
fn reservoirs(cfg: &ExperimentConfig, lattice: &LatticeApprox) -> Result<Vec<f64>> {
    let e = CoordExpr::parse(&cfg.theta)?;
    Ok(lattice.sample_outer(|p| e.eval(p)))
}

/// Sites-only harmonic profile, zero for `beta = inf`.
fn site_profile(op: &WalkOperator, theta: &[f64]) -> Result<Vec<f64>> {
    if !op.beta().is_finite() {
        return Ok(vec![0.0; op.n()]);
    }
    Ok(op.harmonic_profile(theta)?.values[..op.n()].to_vec())
}

/// Mean over all chains with the standard error from within-chain batch means.
fn chain_estimate(chains: &[Vec<f64>]) -> Estimate {
    let total: usize = chains.iter().map(Vec::len).sum();
    let mean = chains.iter().flatten().sum::<f64>() / total as f64;
    let mut batches = Vec::new();
    for c in chains {
        let len = (c.len() / BATCHES_PER_CHAIN).max(1);
        for chunk in c.chunks_exact(len) {
            batches.push(chunk.iter().sum::<f64>() / len as f64);
        }
    }
    Estimate { mean, se: mean_se(&batches).se }
}

fn per_chain<F: Fn(&Configuration) -> f64>(chains: &[Vec<Configuration>], f: F) -> Vec<Vec<f64>> {
    chains.iter().map(|c| c.iter().map(&f).collect()).collect()
}

/// Stationary chains started from the product measure with the profile as mean.
fn stationary_chains(
    cfg: &ExperimentConfig,
    lattice: &Arc<LatticeApprox>,
    op: &WalkOperator,
    theta: &[f64],
    h: &[f64],
    seed: u64,
) -> Result<(Vec<Vec<Configuration>>, StationarySampler)> {
    let (lambda0, _) = op.ground_state()?;
    let sampler = StationarySampler::from_relaxation(Some(lambda0), cfg.burnin_multiplier, cfg.spacing_multiplier)?;
    let params = SimParams::new(op.beta(), cfg.sigma, theta.to_vec(), f64::INFINITY, seed);
    params.validate(lattice)?;
    let g: Vec<f64> = match cfg.sigma {
        Sigma::Exclusion => h.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        Sigma::Inclusion => h.iter().map(|v| v.max(0.0)).collect(),
    };
    let chains = run_replicas(cfg.replicas, |r| {
        let mut rng = replica_rng(seed, r);
        let init = init_product(&g, cfg.sigma, &mut rng)?;
        sample_stationary(lattice, &params, init, sampler, cfg.samples, rng)
    })?;
    Ok((chains, sampler))
}

pub fn run_hydrodynamic(cfg: &ExperimentConfig, ctx: &mut RunContext) -> Result<Report> {
    let mut report = Report::new(ExperimentKind::Hydrodynamic);
    let domain = cfg.domain.build()?;
    let family = TestFamily::select(&domain, &cfg.test_functions)?;
    let initial = Initial::parse(&cfg.initial)?;
    let horizon = cfg.times.last().copied().unwrap_or(0.0);
    let mut pairings = Table::new("pairings", &["beta", "eps", "t", "f", "mc_mean", "se", "mild", "z", "pass"]);
    let mut residuals = Table::new("residuals", &["beta", "eps", "reference_eps", "t", "f", "mild", "mild_reference", "difference"]);

    let mut lattices = Vec::new();
    for &eps in &cfg.eps {
        lattices.push(ctx.lattice(&domain, eps, &mut report)?);
    }
    let simulated = if lattices.len() >= 2 { lattices.len() - 1 } else { 1 };

    for (bi, &beta) in cfg.beta.iter().enumerate() {
        // mild[eps][t][f]
        let mut mild = Vec::new();
        for (ei, l) in lattices.iter().enumerate() {
            ctx.stage(format!("beta={beta} eps={}", l.eps))?;
            let op = WalkOperator::new(l.clone(), beta);
            let theta = reservoirs(cfg, l)?;
            let h = site_profile(&op, &theta)?;
            let (pi0, init): (Vec<f64>, Box<dyn Fn(u64) -> Result<Configuration> + Sync + Send>) = match &initial {
                Initial::Product(e) => {
                    let g = l.sample(|p| e.eval(p));
                    let seed = derive_seed(cfg.seed, (bi * 1000 + ei) as u64);
                    let sigma = cfg.sigma;
                    (profile_measure(l, &g), Box::new(move |r| init_product(&g, sigma, &mut replica_rng(seed ^ 0x1217, r))))
                }
                Initial::Stationary => {
                    let g = h.clone();
                    let seed = derive_seed(cfg.seed, (bi * 1000 + ei) as u64);
                    let sigma = cfg.sigma;
                    (profile_measure(l, &g), Box::new(move |r| init_product(&g, sigma, &mut replica_rng(seed ^ 0x1217, r))))
                }
                Initial::Pile => {
                    let pile = init_pile(l, &[0.0; 3], cfg.sigma)?;
                    if let Some(w) = &pile.warning {
                        report.warnings.push(format!("eps = {}: {w}", l.eps));
                    }
                    let c = pile.config;
                    let masses = profile_measure(l, &c.as_f64());
                    (masses, Box::new(move |_| Ok(c.clone())))
                }
                Initial::Fixed => return Err(config_error("the hydrodynamic experiment needs a product, pile or stationary start")),
            };
            let fs: Vec<Vec<f64>> = family.functions.iter().map(|f| f.on_sites(l)).collect();
            let mut per_t = Vec::new();
            for &t in &cfg.times {
                let u = mild_solution(&op, &h, &pi0, t)?;
                per_t.push(fs.iter().map(|f| measure_pairing(&u, f)).collect::<Vec<f64>>());
            }
            mild.push(per_t);
            if ei >= simulated {
                continue;
            }

            let seed = derive_seed(cfg.seed, (bi * 1000 + ei) as u64);
            ctx.seed(seed);
            let params = SimParams::new(beta, cfg.sigma, theta.clone(), horizon, seed);
            params.validate(l)?;
            let runs = run_replicas(cfg.replicas, |r| {
                let tr = simulate(l, init(r)?, &params, &cfg.times, replica_rng(seed, r))?;
                Ok(tr)
            })?;
            if let Some(w) = ctx.file(&format!("trajectory_beta{beta}_{}.csv", eps_tag(l.eps)))? {
                runs[0].write_snapshots_csv(w)?;
            }
            let mut zs = Vec::new();
            for (ti, &t) in cfg.times.iter().enumerate() {
                for (fi, f) in family.functions.iter().enumerate() {
                    let xs: Vec<f64> = runs.iter().map(|tr| density_pairing(l, &tr.snapshots[ti].1, &fs[fi])).collect();
                    let mut est = mean_se(&xs);
                    // Identical replicas: fall back to the resolution of a single particle in one replica.
                    est.se = est.se.max(l.site_volume() * sup_norm(&fs[fi]) / cfg.replicas as f64);
                    let exact = mild[ei][ti][fi];
                    let z = est.z_score(exact);
                    zs.push(z);
                    pairings.push([
                        beta.to_string(),
                        l.eps.to_string(),
                        t.to_string(),
                        f.name.clone(),
                        est.mean.to_string(),
                        est.se.to_string(),
                        exact.to_string(),
                        z.to_string(),
                        (z.abs() <= 3.0).to_string(),
                    ]);
                }
            }
            let worst = zs.iter().map(|z| z.abs()).fold(0.0, f64::max);
            report.check(
                format!("beta={beta} eps={}: all |z| <= 3 against the mild solution", l.eps),
                worst <= 3.0,
                format!("{} pairings, max |z| = {worst:.3}", zs.len()),
            );
        }

        if lattices.len() >= 2 {
            let last = lattices.len() - 1;
            let reference = &mild[last];
            for (ei, l) in lattices.iter().enumerate().take(last) {
                let mut worst: f64 = 0.0;
                for (ti, &t) in cfg.times.iter().enumerate() {
                    for (fi, f) in family.functions.iter().enumerate() {
                        let d = (mild[ei][ti][fi] - reference[ti][fi]).abs();
                        worst = worst.max(d);
                        residuals.push([
                            beta.to_string(),
                            l.eps.to_string(),
                            lattices[last].eps.to_string(),
                            t.to_string(),
                            f.name.clone(),
                            mild[ei][ti][fi].to_string(),
                            reference[ti][fi].to_string(),
                            d.to_string(),
                        ]);
                    }
                }
                report.check(
                    format!("beta={beta} eps={}: mild-solution residual vs eps={} <= 0.05", l.eps, lattices[last].eps),
                    worst <= 0.05,
                    format!("max pairing difference {worst:.4e}"),
                );
                report.record(&format!("residual_beta{beta}_{}", eps_tag(l.eps)), worst);
            }
        }
    }
    report.tables.push(pairings);
    report.tables.push(residuals);
    Ok(report)
}

pub fn run_hydrostatic(cfg: &ExperimentConfig, ctx: &mut RunContext) -> Result<Report> {
    let mut report = Report::new(ExperimentKind::Hydrostatic);
    let domain = cfg.domain.build()?;
    let family = TestFamily::select(&domain, &cfg.test_functions)?;
    let mut sites = Table::new("site_means", &["beta", "eps", "site", "x1", "x2", "x3", "h", "mc_mean", "se", "z"]);
    let mut fields = Table::new(
        "fields",
        &["beta", "eps", "f", "mc_mean", "se", "exact", "z", "variance", "se_variance", "exact_variance", "bound"],
    );
    let mut pairs = Table::new("two_point", &["beta", "eps", "x", "y", "exact_cov", "mc_cov", "se", "z"]);

    for (bi, &beta) in cfg.beta.iter().enumerate() {
        if !beta.is_finite() {
            return Err(config_error("stationary sampling needs finite beta"));
        }
        for (ei, &eps) in cfg.eps.iter().enumerate() {
            ctx.stage(format!("beta={beta} eps={eps}: profiles"))?;
            let l = ctx.lattice(&domain, eps, &mut report)?;
            let tag = format!("beta={beta} eps={eps}");
            let op = WalkOperator::new(l.clone(), beta);
            let theta = reservoirs(cfg, &l)?;
            let hp = op.harmonic_profile(&theta)?;
            let h = hp.values[..l.n()].to_vec();
            let pair = PairOperator::new(l.clone(), beta, cfg.sigma)?;
            let h2 = pair.two_point_profile(&hp.values)?;

            ctx.stage(format!("{tag}: sampling"))?;
            let seed = derive_seed(cfg.seed, (bi * 1000 + ei) as u64);
            ctx.seed(seed);
            let (chains, sampler) = stationary_chains(cfg, &l, &op, &theta, &h, seed)?;
            report.record(&format!("sampler_{}", eps_tag(eps)), [sampler.burnin, sampler.spacing]);

            ctx.stage(format!("{tag}: statistics"))?;
            let mut exceed = 0;
            for x in 0..l.n() {
                let est = chain_estimate(&per_chain(&chains, |c| c.eta[x] as f64));
                let z = est.z_score(h[x]);
                if !(z.abs() <= 3.0) {
                    exceed += 1;
                }
                let p = l.point(x);
                sites.push([
                    beta.to_string(),
                    eps.to_string(),
                    x.to_string(),
                    p[0].to_string(),
                    p[1].to_string(),
                    p[2].to_string(),
                    h[x].to_string(),
                    est.mean.to_string(),
                    est.se.to_string(),
                    z.to_string(),
                ]);
            }
            report.check(
                format!("{tag}: per-site means within 3 SE of the profile"),
                exceed == 0,
                format!("{exceed} of {} sites outside (about {:.1} expected by chance)", l.n(), 0.0027 * l.n() as f64),
            );

            let hm = profile_measure(&l, &h);
            for f in &family.functions {
                let fv = f.on_sites(&l);
                let series = per_chain(&chains, |c| density_pairing(&l, &c.eta, &fv));
                let est = chain_estimate(&series);
                let exact = measure_pairing(&hm, &fv);
                let z = est.z_score(exact);
                let flat: Vec<f64> = series.concat();
                let g = gaussianity_stats(&flat).ok();
                let var = g.map_or_else(|| mean_se(&flat).se.powi(2) * flat.len() as f64, |g| g.variance);
                let se_var = g.map_or(f64::NAN, |g| g.se_variance);
                let exact_var = exact_stationary_variance(&pair, &h, &h2, &fv);
                let bound = variance_bound(&l, &theta, &fv);
                fields.push([
                    beta.to_string(),
                    eps.to_string(),
                    f.name.clone(),
                    est.mean.to_string(),
                    est.se.to_string(),
                    exact.to_string(),
                    z.to_string(),
                    var.to_string(),
                    se_var.to_string(),
                    exact_var.to_string(),
                    bound.to_string(),
                ]);
                report.check(format!("{tag} f={}: field within 3 SE", f.name), z.abs() <= 3.0, format!("z = {z:.3}"));
                if g.is_some() {
                    report.check(
                        format!("{tag} f={}: variance <= bound + 3 SE", f.name),
                        var <= bound + 3.0 * se_var,
                        format!("variance {var:.4e}, bound {bound:.4e}, se {se_var:.2e}"),
                    );
                } else {
                    report.warnings.push(format!("{tag} f={}: too few samples for the variance check", f.name));
                }
            }

            // Exact correlations have the sign of sigma off the diagonal.
            let s = cfg.sigma.value();
            let scale = sup_norm(&h).powi(2);
            let mut wrong = 0;
            let mut cov = Vec::new();
            for (k, &(a, b)) in pair.states()[..pair.n_bulk()].iter().enumerate() {
                if a < b {
                    let c = h2.values[k] - h[a] * h[b];
                    if c * s < -1e-12 * scale {
                        wrong += 1;
                    }
                    if l.neighbors(a).contains(&b) {
                        cov.push((c, a, b));
                    }
                }
            }
            let constant = theta.iter().all(|&v| v == theta[0]);
            report.check(
                format!("{tag}: exact two-point correlations have the sign of sigma"),
                wrong == 0,
                format!("{wrong} pairs with the wrong sign"),
            );
            if !constant {
                cov.sort_by(|p, q| q.0.abs().total_cmp(&p.0.abs()).then((p.1, p.2).cmp(&(q.1, q.2))));
                cov.truncate(8);
                let mut agree = 0;
                for &(c, a, b) in &cov {
                    let (ma, mb) = (chain_estimate(&per_chain(&chains, |q| q.eta[a] as f64)).mean, chain_estimate(&per_chain(&chains, |q| q.eta[b] as f64)).mean);
                    let est = chain_estimate(&per_chain(&chains, |q| (q.eta[a] as f64 - ma) * (q.eta[b] as f64 - mb)));
                    let z = est.z_score(c);
                    if est.mean * c > 0.0 {
                        agree += 1;
                    }
                    pairs.push([beta.to_string(), eps.to_string(), a.to_string(), b.to_string(), c.to_string(), est.mean.to_string(), est.se.to_string(), z.to_string()]);
                    report.check(format!("{tag} pair ({a},{b}): covariance within 3 SE of exact"), z.abs() <= 3.0, format!("z = {z:.3}"));
                }
                report.note(
                    format!("{tag}: sampled neighbour covariances share the exact sign"),
                    agree == cov.len(),
                    format!("{agree} of {}", cov.len()),
                );
            }
        }
    }
    report.tables.push(sites);
    report.tables.push(fields);
    report.tables.push(pairs);
    Ok(report)
}

pub fn run_fluctuations(cfg: &ExperimentConfig, ctx: &mut RunContext) -> Result<Report> {
    let mut report = Report::new(ExperimentKind::Fluctuations);
    let domain = cfg.domain.build()?;
    let family = TestFamily::select(&domain, &cfg.test_functions)?;
    let s = cfg.sigma.value();
    let mut table = Table::new(
        "covariance",
        &[
            "beta", "regime", "eps", "f", "predicted", "exact", "quadrature", "variance", "se_variance", "z", "skewness",
            "se_skewness", "excess_kurtosis", "se_kurtosis",
        ],
    );

    for (bi, &beta) in cfg.beta.iter().enumerate() {
        if !beta.is_finite() {
            return Err(config_error("stationary sampling needs finite beta"));
        }
        let regime = beta.regime();
        let asserted = regime == Regime::Neumann;
        if !asserted {
            report.warnings.push(format!("beta = {beta}: {regime:?} fluctuation checks are experimental and not asserted"));
        }
        for (ei, &eps) in cfg.eps.iter().enumerate() {
            ctx.stage(format!("beta={beta} eps={eps}: profiles"))?;
            let tag = format!("beta={beta} eps={eps}");
            let l = ctx.lattice(&domain, eps, &mut report)?;
            let op = WalkOperator::new(l.clone(), beta);
            let theta = reservoirs(cfg, &l)?;
            let hp = op.harmonic_profile(&theta)?;
            let h = hp.values[..l.n()].to_vec();
            let pair = PairOperator::new(l.clone(), beta, cfg.sigma)?;
            let h2 = pair.two_point_profile(&hp.values)?;
            let chi: Vec<f64> = h.iter().map(|v| v * (1.0 + s * v)).collect();
            let iota = iota_weight(&l, &theta, &hp.values, cfg.sigma);
            let theta_expr = CoordExpr::parse(&cfg.theta)?;
            let hbar = domain.integrate_boundary(&|p| theta_expr.eval(p)) / domain.surface_measure();
            let chi_n = hbar * (1.0 + s * hbar);
            let (_, psi0) = op.ground_state()?;

            ctx.stage(format!("{tag}: sampling"))?;
            let seed = derive_seed(cfg.seed, (bi * 1000 + ei) as u64);
            ctx.seed(seed);
            let (chains, _) = stationary_chains(cfg, &l, &op, &theta, &h, seed)?;

            ctx.stage(format!("{tag}: statistics"))?;
            for f in &family.functions {
                let mut fv = f.on_sites(&l);
                let constant = fv.iter().all(|&v| (v - fv[0]).abs() <= 1e-12 * fv[0].abs().max(1.0));
                let route_ground = constant && regime == Regime::Neumann && fv[0] != 0.0;
                if route_ground {
                    // Rescaled ground state in place of a constant.
                    let c = fv[0] * l.total_volume().sqrt();
                    fv = psi0.iter().map(|p| c * p).collect();
                }
                let predicted = match regime {
                    Regime::Neumann => neumann_covariance(&l, chi_n, &fv, &fv),
                    _ => f64::NAN,
                };
                let quad = covariance_quadrature(&op, &fv, &fv, &chi, Some(&iota), QUADRATURE_REL_TOL);
                let quad_value = match &quad {
                    Ok(q) => q.value,
                    Err(e) => {
                        report.warnings.push(format!("{tag} f={}: {e}", f.name));
                        f64::NAN
                    }
                };
                let predicted = if predicted.is_nan() { quad_value } else { predicted };
                let exact = exact_stationary_variance(&pair, &h, &h2, &fv) / l.site_volume();
                let ys: Vec<f64> = chains.iter().flatten().map(|c| fluctuation_pairing(&l, &c.eta, &h, &fv)).collect();
                let g = gaussianity_stats(&ys)?;
                let z = Estimate { mean: g.variance, se: g.se_variance }.z_score(predicted);
                let zs = g.skewness.zip(g.se_skewness).map(|(m, se)| Estimate { mean: m, se }.z_score(0.0));
                let zk = g.excess_kurtosis.zip(g.se_kurtosis).map(|(m, se)| Estimate { mean: m, se }.z_score(0.0));
                let opt = |v: Option<f64>| v.map_or("".to_string(), |x| x.to_string());
                table.push([
                    beta.to_string(),
                    format!("{regime:?}"),
                    eps.to_string(),
                    f.name.clone(),
                    predicted.to_string(),
                    exact.to_string(),
                    quad_value.to_string(),
                    g.variance.to_string(),
                    g.se_variance.to_string(),
                    z.to_string(),
                    opt(g.skewness),
                    opt(g.se_skewness),
                    opt(g.excess_kurtosis),
                    opt(g.se_kurtosis),
                ]);
                let name = format!("{tag} f={}", f.name);
                let mut add = |label: &str, pass: bool, detail: String| {
                    if asserted {
                        report.check(format!("{name}: {label}"), pass, detail);
                    } else {
                        report.note(format!("{name}: {label}"), pass, detail);
                    }
                };
                add("variance within 3 SE of prediction", z.abs() <= 3.0, format!("{:.4e} vs {predicted:.4e}, z = {z:.3}", g.variance));
                add("skewness within 3 SE of 0", zs.is_some_and(|z| z.abs() <= 3.0), format!("z = {}", opt(zs)));
                add("excess kurtosis within 3 SE of 0", zk.is_some_and(|z| z.abs() <= 3.0), format!("z = {}", opt(zk)));
                if quad.is_ok() && exact > 0.0 {
                    let rel = (quad_value - exact).abs() / exact;
                    report.note(format!("{name}: quadrature matches the exact variance"), rel <= 1e-3, format!("relative difference {rel:.3e}"));
                }
            }
        }
    }
    report.tables.push(table);
    Ok(report)
}

/// Sites and observables of the duality sweep: the origin site `x0`, its first neighbour `x1`,
/// and an inner-boundary site `x2` distinct from both.
pub fn fixture_observables(lattice: &LatticeApprox, sigma: Sigma) -> Vec<DualObservable> {
    let x0 = lattice.site_index(&[0.0; 3]).unwrap_or(0);
    let x1 = lattice.neighbors(x0).first().copied().unwrap_or(x0);
    let x2 = lattice.inner_boundary().iter().rev().copied().find(|&x| x != x0 && x != x1).unwrap_or(x1);
    let mut obs = vec![DualObservable::Site(x0), DualObservable::Site(x1), DualObservable::Site(x2)];
    match sigma {
        Sigma::Exclusion => obs.extend([DualObservable::Pair(x0, x1), DualObservable::Pair(x1, x2), DualObservable::Pair(x0, x2)]),
        Sigma::Inclusion => obs.extend([DualObservable::Pair(x0, x0), DualObservable::Pair(x0, x1), DualObservable::Pair(x2, x2)]),
    }
    obs
}

fn fixture_start(lattice: &LatticeApprox, sigma: Sigma) -> Configuration {
    let x0 = lattice.site_index(&[0.0; 3]).unwrap_or(0);
    let mut eta = vec![0; lattice.n()];
    eta[x0] = if sigma == Sigma::Exclusion { 1 } else { 3 };
    for &y in lattice.neighbors(x0) {
        eta[y] = 1;
    }
    Configuration { eta, sigma }
}

pub fn run_duality_audit(cfg: &ExperimentConfig, ctx: &mut RunContext) -> Result<Report> {
    let mut report = Report::new(ExperimentKind::DualityAudit);
    if cfg.initial != "fixed" {
        return Err(config_error("the duality audit starts from the fixed configuration; set initial = \"fixed\""));
    }
    let domain = cfg.domain.build()?;
    let l = ctx.lattice(&domain, cfg.eps[0], &mut report)?;
    let theta = reservoirs(cfg, &l)?;
    let mut table = Table::new("audits", &["sigma", "beta", "t", "observable", "mc_mean", "se", "exact", "z", "pass"]);

    ctx.stage("consistency pre-check")?;
    let probe: Vec<f64> = (0..l.n() + l.m())
        .map(|i| {
            let p = if i < l.n() { *l.point(i) } else { *l.outer_point(i - l.n()) };
            1.0 + p[0] - 2.0 * p[1] * p[1] + 0.3 * p[0] * p[1]
        })
        .collect();
    let mut ok = true;
    for sigma in [Sigma::Exclusion, Sigma::Inclusion] {
        for &beta in &cfg.beta {
            let walk = WalkOperator::new(l.clone(), beta);
            let pair = PairOperator::new(l.clone(), beta, sigma)?;
            let defect = pair.consistency_defect(&walk, &probe);
            let pass = defect <= 1e-9 * pair.rate_bound().max(1.0) * sup_norm(&probe);
            ok &= pass;
            report.check(format!("{} beta={beta}: pair consistency", sigma.label()), pass, format!("defect {defect:.3e}"));
        }
    }
    if !ok {
        report.warnings.push("consistency pre-check failed; Monte Carlo skipped".into());
        return Ok(report);
    }

    let mut cells = 0;
    let mut passed = 0;
    let mut worst: f64 = 0.0;
    for (si, sigma) in [Sigma::Exclusion, Sigma::Inclusion].into_iter().enumerate() {
        let obs = fixture_observables(&l, sigma);
        let start = fixture_start(&l, sigma);
        for (bi, &beta) in cfg.beta.iter().enumerate() {
            for (ti, &t) in cfg.times.iter().enumerate() {
                ctx.stage(format!("{} beta={beta} t={t}", sigma.label()))?;
                let seed = derive_seed(cfg.seed, (si * 10_000 + bi * 100 + ti) as u64);
                ctx.seed(seed);
                let params = SimParams::new(beta, sigma, theta.clone(), t, seed);
                params.validate(&l)?;
                for a in duality_sweep(&l, &params, &start, &obs, t, cfg.replicas, seed)? {
                    cells += 1;
                    passed += usize::from(a.pass);
                    worst = worst.max(a.z.abs());
                    table.push([
                        sigma.label().to_string(),
                        beta.to_string(),
                        t.to_string(),
                        a.observable.to_string(),
                        a.mc.mean.to_string(),
                        a.mc.se.to_string(),
                        a.exact.to_string(),
                        a.z.to_string(),
                        a.pass.to_string(),
                    ]);
                    report.note(format!("{} t={t}", a.label), a.pass, format!("z = {:.3}", a.z));
                }
            }
        }
    }
    let frac = passed as f64 / cells.max(1) as f64;
    report.check(
        "at least 95% of audit cells with |z| <= 3",
        cells > 0 && frac >= 0.95,
        format!("{passed} of {cells} cells pass, max |z| = {worst:.3}"),
    );
    report.record("cells", cells);
    report.record("passed", passed);
    report.record("pass_fraction", frac);
    report.record("observables", fixture_observables(&l, Sigma::Exclusion).iter().chain(&fixture_observables(&l, Sigma::Inclusion)).map(|o| o.to_string()).collect::<Vec<_>>());
    report.tables.push(table);
    Ok(report)
}
