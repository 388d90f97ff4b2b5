//! Config-driven experiments with manifests, CSV tables and a JSON summary per run.

mod config;
mod dynamics;
mod manifest;
mod spectral;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

pub use config::{DomainConfig, ExperimentConfig, ExperimentKind, DEFAULT_SEED};
pub use dynamics::{
    fixture_observables, run_duality_audit, run_fluctuations, run_hydrodynamic, run_hydrostatic,
};
pub use manifest::{RunManifest, StageTiming};
pub use spectral::{
    box_eigenvalues, run_harmonic_convergence, run_semigroup_convergence, run_spectral_convergence, slope_fit,
};

use crate::error::{Error, Result};
use crate::geometry::{csv_err, DomainSpec, LatticeApprox};

/// Environment variable read for the worker thread count.
pub const THREADS_ENV: &str = "RLAB_THREADS";

/// One pass/fail line. Only asserted checks decide the exit status.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub asserted: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        self.rows.push(row.into_iter().map(|s| s.to_string()).collect());
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            out.write_record(r).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub experiment: ExperimentKind,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub tables: Vec<Table>,
    pub summary: BTreeMap<String, serde_json::Value>,
}

impl Report {
    pub fn new(experiment: ExperimentKind) -> Self {
        Report { experiment, checks: Vec::new(), warnings: Vec::new(), tables: Vec::new(), summary: BTreeMap::new() }
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), pass, asserted: true, detail: detail.into() });
    }

    /// A check that is reported but does not affect the exit status.
    pub fn note(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), pass, asserted: false, detail: detail.into() });
    }

    pub fn record<T: Serialize>(&mut self, key: &str, value: T) {
        self.summary.insert(key.into(), serde_json::to_value(value).expect("summary value serializes"));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| c.asserted).all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.asserted && !c.pass).collect()
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Run bookkeeping: manifest updates at stage boundaries and file output under `<out>/<experiment>/`.
pub struct RunContext {
    out: Option<PathBuf>,
    manifest: RunManifest,
    lattices: Vec<(u64, Arc<LatticeApprox>)>,
}

impl RunContext {
    /// A context that writes nothing; for library use and tests.
    pub fn detached(cfg: &ExperimentConfig) -> Self {
        RunContext { out: None, manifest: RunManifest::start(cfg), lattices: Vec::new() }
    }

    /// Creates the output directories and writes the initial manifest.
    pub fn create(cfg: &ExperimentConfig, out: &Path) -> Result<Self> {
        fs::create_dir_all(out.join(cfg.experiment.name()))?;
        let ctx = RunContext { out: Some(out.to_path_buf()), manifest: RunManifest::start(cfg), lattices: Vec::new() };
        ctx.write_manifest()?;
        Ok(ctx)
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn stage(&mut self, label: impl Into<String>) -> Result<()> {
        self.manifest.enter_stage(label.into());
        self.write_manifest()
    }

    pub fn seed(&mut self, seed: u64) {
        if !self.manifest.seeds.contains(&seed) {
            self.manifest.seeds.push(seed);
        }
    }

    /// Lattice for `eps`, built once per run.
    pub fn lattice(&mut self, domain: &DomainSpec, eps: f64, report: &mut Report) -> Result<Arc<LatticeApprox>> {
        let key = eps.to_bits();
        if let Some((_, l)) = self.lattices.iter().find(|(k, _)| *k == key) {
            return Ok(l.clone());
        }
        let l = Arc::new(LatticeApprox::build(domain, eps)?);
        for w in &l.meta.warnings {
            report.warnings.push(format!("eps = {eps}: {w}"));
        }
        if l.meta.degenerate() {
            report.warnings.push(format!(
                "eps = {eps}: degenerate lattice ({} sites, {} dropped)",
                l.meta.sites, l.meta.dropped_sites
            ));
        }
        self.lattices.push((key, l.clone()));
        Ok(l)
    }

    /// Opens `<out>/<experiment>/<name>` for writing; `None` for detached runs.
    pub fn file(&self, name: &str) -> Result<Option<BufWriter<File>>> {
        match &self.out {
            None => Ok(None),
            Some(out) => {
                let path = out.join(self.manifest.experiment.as_str()).join(name);
                Ok(Some(BufWriter::new(File::create(path)?)))
            }
        }
    }

    fn write_manifest(&self) -> Result<()> {
        if let Some(out) = &self.out {
            let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
            fs::write(out.join("manifest.json"), json + "\n")?;
        }
        Ok(())
    }

    fn finish(&mut self, outcome: &Result<Report>) -> Result<()> {
        self.manifest.finish(outcome);
        self.write_manifest()
    }
}

/// Writes every table as CSV and the summary JSON.
pub fn write_report(out: &Path, report: &Report) -> Result<()> {
    let dir = out.join(report.experiment.name());
    fs::create_dir_all(&dir)?;
    for t in &report.tables {
        t.write_csv(BufWriter::new(File::create(dir.join(format!("{}.csv", t.name)))?))?;
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        experiment: &'a str,
        passed: bool,
        checks: &'a [Check],
        warnings: &'a [String],
        results: &'a BTreeMap<String, serde_json::Value>,
    }
    let s = Summary {
        experiment: report.experiment.name(),
        passed: report.passed(),
        checks: &report.checks,
        warnings: &report.warnings,
        results: &report.summary,
    };
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&s).expect("summary serializes") + "\n")?;
    Ok(())
}

/// Dispatches on the experiment kind.
pub fn run_with(cfg: &ExperimentConfig, ctx: &mut RunContext) -> Result<Report> {
    match cfg.experiment {
        ExperimentKind::SpectralConvergence => run_spectral_convergence(cfg, ctx),
        ExperimentKind::HarmonicConvergence => run_harmonic_convergence(cfg, ctx),
        ExperimentKind::SemigroupConvergence => run_semigroup_convergence(cfg, ctx),
        ExperimentKind::Hydrodynamic => run_hydrodynamic(cfg, ctx),
        ExperimentKind::Hydrostatic => run_hydrostatic(cfg, ctx),
        ExperimentKind::Fluctuations => run_fluctuations(cfg, ctx),
        ExperimentKind::DualityAudit => run_duality_audit(cfg, ctx),
    }
}

/// Full run: manifest first, experiment, outputs, finalized manifest.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Report> {
    cfg.validate()?;
    let mut ctx = match out {
        Some(dir) => RunContext::create(cfg, dir)?,
        None => RunContext::detached(cfg),
    };
    let outcome = run_with(cfg, &mut ctx);
    if let (Some(dir), Ok(report)) = (out, &outcome) {
        ctx.stage("write outputs")?;
        write_report(dir, report)?;
    }
    ctx.finish(&outcome)?;
    outcome
}

/// Sizes the global worker pool. A no-op without the `parallel` feature.
pub fn configure_threads(threads: Option<usize>) -> Result<()> {
    let from_env = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok());
    let Some(n) = threads.or(from_env).filter(|&n| n > 0) else {
        return Ok(());
    };
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

/// Independent sub-seed for cell `tag` of a run seeded with `master`.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// File-name fragment for a spacing: `eps1_16` for `1/16`.
pub fn eps_tag(eps: f64) -> String {
    let inv = 1.0 / eps;
    if (inv - inv.round()).abs() < 1e-9 {
        format!("eps1_{}", inv.round() as u64)
    } else {
        format!("eps{eps}")
    }
}

/// `values[i + 1] <= values[i] + tol` along the list.
pub fn non_increasing(values: &[f64], tol: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + tol)
}

pub(crate) fn fmt_list(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

pub(crate) fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helpers() {
        assert_eq!(eps_tag(1.0 / 16.0), "eps1_16");
        assert_eq!(eps_tag(0.3), "eps0.3");
        assert!(non_increasing(&[3.0, 2.0, 2.0, 1.0], 0.0));
        assert!(!non_increasing(&[1.0, 2.0], 0.5));
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }

    #[test]
    fn outputs_are_written_and_manifest_finalized() {
        let dir = std::env::temp_dir().join(format!("rlab-test-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::HarmonicConvergence, true);
        cfg.eps = vec![0.25, 0.125];
        let report = run_experiment(&cfg, Some(&dir)).unwrap();
        assert!(dir.join("summary.json").exists());
        assert!(dir.join("harmonic_convergence").join("errors.csv").exists());
        let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["status"], if report.passed() { "passed" } else { "failed" });
        assert_eq!(m["config_hash"], cfg.hash());
        let first = fs::read(dir.join("harmonic_convergence").join("errors.csv")).unwrap();
        run_experiment(&cfg, Some(&dir)).unwrap();
        assert_eq!(first, fs::read(dir.join("harmonic_convergence").join("errors.csv")).unwrap());
        fs::remove_dir_all(&dir).unwrap();
    }
}
