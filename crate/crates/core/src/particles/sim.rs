use std::io::Write;

use rand::Rng;

use super::{Configuration, RateTree, Sigma, DEFAULT_MAX_OCCUPANCY};
use crate::error::{Error, Result};
use crate::geometry::{csv_err, LatticeApprox};
use crate::operators::Beta;

/// Events between full rebuilds of the rate tree.
const REBUILD_EVERY: u32 = 1 << 14;

#[derive(Debug, Clone)]
pub struct SimParams {
    pub beta: Beta,
    pub sigma: Sigma,
    /// Reservoir density at each exterior site.
    pub theta: Vec<f64>,
    pub horizon: f64,
    pub seed: u64,
    pub max_occupancy: u64,
    pub record_events: bool,
}

impl SimParams {
    pub fn new(beta: Beta, sigma: Sigma, theta: Vec<f64>, horizon: f64, seed: u64) -> Self {
        SimParams { beta, sigma, theta, horizon, seed, max_occupancy: DEFAULT_MAX_OCCUPANCY, record_events: false }
    }

    pub fn validate(&self, lattice: &LatticeApprox) -> Result<()> {
        if self.theta.len() != lattice.m() {
            return Err(Error::InvalidInput(format!(
                "theta has {} values for {} exterior sites",
                self.theta.len(),
                lattice.m()
            )));
        }
        let upper = if self.sigma == Sigma::Exclusion { 1.0 } else { f64::INFINITY };
        if let Some(z) = self.theta.iter().position(|&t| !(t >= 0.0 && t <= upper)) {
            return Err(Error::InvalidInput(format!(
                "reservoir density {} at exterior site {z} is out of range for {}",
                self.theta[z],
                self.sigma.label()
            )));
        }
        if !(self.horizon >= 0.0) {
            return Err(Error::InvalidInput(format!("horizon must be non-negative, got {}", self.horizon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    Jump { from: usize, to: usize },
    Exit { site: usize },
    Entry { site: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub initial: Vec<u64>,
    /// Populated only when `record_events` is set.
    pub events: Vec<Event>,
    pub snapshots: Vec<(f64, Vec<u64>)>,
    pub event_count: u64,
}

impl Trajectory {
    /// Occupations after applying every logged event to the initial state.
    pub fn replay(&self) -> Vec<u64> {
        let mut eta = self.initial.clone();
        for e in &self.events {
            match e.kind {
                EventKind::Jump { from, to } => {
                    eta[from] -= 1;
                    eta[to] += 1;
                }
                EventKind::Exit { site } => eta[site] -= 1,
                EventKind::Entry { site } => eta[site] += 1,
            }
        }
        eta
    }

    /// Rows `time, site, occupation` for every snapshot.
    pub fn write_snapshots_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["time", "site", "occupation"]).map_err(csv_err)?;
        for (t, eta) in &self.snapshots {
            for (x, e) in eta.iter().enumerate() {
                out.write_record([t.to_string(), x.to_string(), e.to_string()]).map_err(csv_err)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Exact event-driven simulation of the open particle system.
pub struct Simulator<'a, R: Rng> {
    lattice: &'a LatticeApprox,
    sigma: f64,
    bulk_rate: f64,
    /// `eps^(beta-2) sum_z alpha_xz (1 + sigma theta(z))`: exit rate per particle at `x`.
    exit_coef: Vec<f64>,
    /// `eps^(beta-2) sum_z alpha_xz theta(z)`: entry rate at an empty `x`.
    entry_coef: Vec<f64>,
    eta: Vec<u64>,
    tree: RateTree,
    time: f64,
    rng: R,
    events: u64,
    since_rebuild: u32,
    max_occupancy: u64,
    log: Option<Vec<Event>>,
}

impl<'a, R: Rng> Simulator<'a, R> {
    pub fn new(lattice: &'a LatticeApprox, params: &SimParams, config: Configuration, rng: R) -> Result<Self> {
        params.validate(lattice)?;
        config.validate()?;
        if config.len() != lattice.n() || config.sigma != params.sigma {
            return Err(Error::InvalidInput("configuration does not match the lattice or sigma".into()));
        }
        let c = params.beta.eps_pow(lattice.eps, -2.0);
        let s = params.sigma.value();
        let mut exit_coef = vec![0.0; lattice.n()];
        let mut entry_coef = vec![0.0; lattice.n()];
        if c > 0.0 {
            for e in lattice.cross_edges() {
                let th = params.theta[e.z];
                exit_coef[e.x] += c * e.alpha_xz * (1.0 + s * th);
                entry_coef[e.x] += c * e.alpha_xz * th;
            }
        }
        let mut sim = Simulator {
            lattice,
            sigma: s,
            bulk_rate: lattice.eps.powi(-2),
            exit_coef,
            entry_coef,
            eta: config.eta,
            tree: RateTree::new(Vec::new()),
            time: 0.0,
            rng,
            events: 0,
            since_rebuild: 0,
            max_occupancy: params.max_occupancy,
            log: params.record_events.then(Vec::new),
        };
        let rates = (0..lattice.n()).map(|x| sim.site_rate(x)).collect();
        sim.tree = RateTree::new(rates);
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn eta(&self) -> &[u64] {
        &self.eta
    }

    pub fn event_count(&self) -> u64 {
        self.events
    }

    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    pub fn take_events(&mut self) -> Vec<Event> {
        self.log.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn into_rng(self) -> R {
        self.rng
    }

    /// Total rate of events attached to `x`: jumps out of `x`, exits at `x`, entries at `x`.
    fn site_rate(&self, x: usize) -> f64 {
        let e = self.eta[x] as f64;
        let mut r = 0.0;
        if e > 0.0 {
            let open: f64 = self.lattice.neighbors(x).iter().map(|&y| 1.0 + self.sigma * self.eta[y] as f64).sum();
            r += self.bulk_rate * e * open + e * self.exit_coef[x];
        }
        r + self.entry_coef[x] * (1.0 + self.sigma * e)
    }

    fn refresh(&mut self, x: usize) {
        let r = self.site_rate(x);
        self.tree.set(x, r);
        for i in 0..self.lattice.neighbors(x).len() {
            let y = self.lattice.neighbors(x)[i];
            let ry = self.site_rate(y);
            self.tree.set(y, ry);
        }
    }

    /// Largest relative gap between cached and recomputed rates, including the tree total.
    pub fn rate_cache_error(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut sum = 0.0;
        for x in 0..self.eta.len() {
            let fresh = self.site_rate(x);
            sum += fresh;
            worst = worst.max((fresh - self.tree.get(x)).abs() / fresh.abs().max(1.0));
        }
        worst.max((sum - self.tree.total()).abs() / sum.abs().max(1.0))
    }

    /// Advances to `t_end`; the last waiting time is discarded at the boundary (memoryless).
    pub fn run_until(&mut self, t_end: f64) -> Result<()> {
        while self.time < t_end {
            let total = self.tree.total();
            if !(total > 1e-300) {
                self.time = t_end;
                break;
            }
            let u: f64 = 1.0 - self.rng.random::<f64>();
            let dt = -u.ln() / total;
            if self.time + dt > t_end {
                self.time = t_end;
                break;
            }
            self.time += dt;
            self.fire(total)?;
        }
        Ok(())
    }

    fn fire(&mut self, total: f64) -> Result<()> {
        let x = self.tree.find(self.rng.random::<f64>() * total);
        let e = self.eta[x] as f64;
        let mut u = self.rng.random::<f64>() * self.tree.get(x);
        // The last live option absorbs any rounding remainder.
        let mut last = None;
        if e > 0.0 {
            for &y in self.lattice.neighbors(x) {
                let r = self.bulk_rate * e * (1.0 + self.sigma * self.eta[y] as f64);
                if r > 0.0 {
                    if u < r {
                        return self.apply(EventKind::Jump { from: x, to: y });
                    }
                    u -= r;
                    last = Some(EventKind::Jump { from: x, to: y });
                }
            }
        }
        let exit = e * self.exit_coef[x];
        if exit > 0.0 {
            if u < exit {
                return self.apply(EventKind::Exit { site: x });
            }
            last = Some(EventKind::Exit { site: x });
        }
        if self.entry_coef[x] * (1.0 + self.sigma * e) > 0.0 {
            last = Some(EventKind::Entry { site: x });
        }
        let kind = last.ok_or_else(|| Error::InvalidInput(format!("site {x} selected with no live event")))?;
        self.apply(kind)
    }

    fn apply(&mut self, kind: EventKind) -> Result<()> {
        match kind {
            EventKind::Jump { from, to } => {
                self.eta[from] -= 1;
                self.eta[to] += 1;
                self.check_occupancy(to)?;
                self.refresh(from);
                self.refresh(to);
            }
            EventKind::Exit { site } => {
                self.eta[site] -= 1;
                self.refresh(site);
            }
            EventKind::Entry { site } => {
                self.eta[site] += 1;
                self.check_occupancy(site)?;
                self.refresh(site);
            }
        }
        debug_assert!(self.sigma > 0.0 || self.eta.iter().all(|&e| e <= 1));
        if let Some(log) = self.log.as_mut() {
            log.push(Event { time: self.time, kind });
        }
        self.events += 1;
        self.since_rebuild += 1;
        if self.since_rebuild >= REBUILD_EVERY {
            self.tree.rebuild();
            self.since_rebuild = 0;
        }
        Ok(())
    }

    fn check_occupancy(&self, x: usize) -> Result<()> {
        if self.eta[x] > self.max_occupancy {
            return Err(Error::OccupancyOverflow {
                time: self.time,
                site: x,
                occupancy: self.eta[x],
                cap: self.max_occupancy,
            });
        }
        Ok(())
    }

    pub fn configuration(&self, sigma: Sigma) -> Configuration {
        Configuration { eta: self.eta.clone(), sigma }
    }
}

/// Runs one trajectory to `params.horizon`, taking snapshots at `observe` (sorted, within the horizon).
pub fn simulate<R: Rng>(
    lattice: &LatticeApprox,
    config: Configuration,
    params: &SimParams,
    observe: &[f64],
    rng: R,
) -> Result<Trajectory> {
    let initial = config.eta.clone();
    let mut sim = Simulator::new(lattice, params, config, rng)?;
    let mut snapshots = Vec::with_capacity(observe.len());
    for &t in observe {
        if t > params.horizon {
            return Err(Error::InvalidInput(format!("observation time {t} is past the horizon {}", params.horizon)));
        }
        sim.run_until(t)?;
        snapshots.push((t, sim.eta().to_vec()));
    }
    sim.run_until(params.horizon)?;
    let event_count = sim.event_count();
    Ok(Trajectory { initial, events: sim.take_events(), snapshots, event_count })
}

/// Burn-in and spacing for stationary sampling, in units of the relaxation time `1 / lambda_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarySampler {
    pub burnin: f64,
    pub spacing: f64,
}

impl StationarySampler {
    pub fn from_relaxation(lambda0: Option<f64>, burnin_multiplier: f64, spacing_multiplier: f64) -> Result<Self> {
        match lambda0 {
            Some(l) if l > 0.0 => Ok(StationarySampler { burnin: burnin_multiplier / l, spacing: spacing_multiplier / l }),
            Some(l) => Err(Error::MissingSpectrum(format!(
                "lambda_0 = {l} gives no finite relaxation time; stationary sampling needs finite beta"
            ))),
            None => Err(Error::MissingSpectrum(
                "compute the walk spectrum (ground state) before stationary sampling".into(),
            )),
        }
    }
}

/// One chain: burn in, then record `n_samples` configurations spaced by `sampler.spacing`.
pub fn sample_stationary<R: Rng>(
    lattice: &LatticeApprox,
    params: &SimParams,
    initial: Configuration,
    sampler: StationarySampler,
    n_samples: usize,
    rng: R,
) -> Result<Vec<Configuration>> {
    if !params.beta.is_finite() {
        return Err(Error::InvalidInput("stationary sampling needs finite beta".into()));
    }
    let sigma = params.sigma;
    let mut sim = Simulator::new(lattice, params, initial, rng)?;
    let mut t = sampler.burnin;
    sim.run_until(t)?;
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        out.push(sim.configuration(sigma));
        t += sampler.spacing;
        sim.run_until(t)?;
    }
    Ok(out)
}
