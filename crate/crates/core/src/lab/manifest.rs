use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::{ExperimentConfig, Report};
use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub label: String,
    pub seconds: f64,
}

/// Written when a run starts, rewritten at each stage boundary and finalized at the end,
/// so a crashed run still names the stage it was in.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config_hash: String,
    pub tool_version: String,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    /// `running`, `passed`, `failed` or `error`.
    pub status: String,
    pub stage: String,
    pub stages: Vec<StageTiming>,
    pub seeds: Vec<u64>,
    pub checks_passed: usize,
    pub checks_failed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: ExperimentConfig,
    #[serde(skip)]
    clock: Option<(Instant, Instant)>,
}

impl RunManifest {
    pub fn start(cfg: &ExperimentConfig) -> Self {
        let now = Instant::now();
        RunManifest {
            experiment: cfg.experiment.name().into(),
            config_hash: cfg.hash(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            wall_clock_seconds: 0.0,
            status: "running".into(),
            stage: "setup".into(),
            stages: Vec::new(),
            seeds: vec![cfg.seed],
            checks_passed: 0,
            checks_failed: 0,
            error: None,
            config: cfg.clone(),
            clock: Some((now, now)),
        }
    }

    pub(crate) fn enter_stage(&mut self, label: String) {
        self.close_stage();
        self.stage = label;
    }

    fn close_stage(&mut self) {
        if let Some((start, stage_start)) = self.clock.as_mut() {
            let now = Instant::now();
            self.stages.push(StageTiming { label: self.stage.clone(), seconds: (now - *stage_start).as_secs_f64() });
            *stage_start = now;
            self.wall_clock_seconds = (now - *start).as_secs_f64();
        }
    }

    pub(crate) fn finish(&mut self, outcome: &Result<Report>) {
        self.close_stage();
        match outcome {
            Ok(r) => {
                self.checks_passed = r.checks.iter().filter(|c| c.asserted && c.pass).count();
                self.checks_failed = r.checks.iter().filter(|c| c.asserted && !c.pass).count();
                self.status = if r.passed() { "passed" } else { "failed" }.into();
                self.stage = "done".into();
            }
            Err(e) => {
                self.status = "error".into();
                self.error = Some(e.to_string());
            }
        }
    }
}
