use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{Disk, DomainSpec, Shape};
use crate::operators::{Beta, Sigma};

/// Seed used when neither the config nor the command line sets one.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SpectralConvergence,
    HarmonicConvergence,
    SemigroupConvergence,
    Hydrodynamic,
    Hydrostatic,
    Fluctuations,
    DualityAudit,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::SpectralConvergence,
        ExperimentKind::HarmonicConvergence,
        ExperimentKind::SemigroupConvergence,
        ExperimentKind::Hydrodynamic,
        ExperimentKind::Hydrostatic,
        ExperimentKind::Fluctuations,
        ExperimentKind::DualityAudit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SpectralConvergence => "spectral_convergence",
            ExperimentKind::HarmonicConvergence => "harmonic_convergence",
            ExperimentKind::SemigroupConvergence => "semigroup_convergence",
            ExperimentKind::Hydrodynamic => "hydrodynamic",
            ExperimentKind::Hydrostatic => "hydrostatic",
            ExperimentKind::Fluctuations => "fluctuations",
            ExperimentKind::DualityAudit => "duality_audit",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.replace('-', "_");
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    UnitSquare,
    UnitCube,
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
        #[serde(default = "one")]
        lipschitz: f64,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
        lipschitz: f64,
    },
    Disk {
        radius: f64,
        #[serde(default = "one")]
        lipschitz: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl DomainConfig {
    pub fn build(&self) -> Result<DomainSpec> {
        match self {
            DomainConfig::UnitSquare => Ok(DomainSpec::unit_square()),
            DomainConfig::UnitCube => Ok(DomainSpec::unit_cube()),
            DomainConfig::Box { lower, upper, lipschitz } => {
                DomainSpec::new(Shape::Box { lo: lower.clone(), hi: upper.clone() }, *lipschitz)
            }
            DomainConfig::Polygon { vertices, lipschitz } => {
                DomainSpec::new(Shape::Polygon { vertices: vertices.clone() }, *lipschitz)
            }
            DomainConfig::Disk { radius, lipschitz } => {
                DomainSpec::new(Shape::Implicit(Arc::new(Disk { center: [0.0, 0.0], radius: *radius })), *lipschitz)
            }
        }
    }

    /// Side lengths when the domain is an axis-aligned box.
    pub fn box_sides(&self) -> Option<Vec<f64>> {
        match self {
            DomainConfig::UnitSquare => Some(vec![1.0; 2]),
            DomainConfig::UnitCube => Some(vec![1.0; 3]),
            DomainConfig::Box { lower, upper, .. } => Some(upper.iter().zip(lower).map(|(u, l)| u - l).collect()),
            _ => None,
        }
    }
}

/// Everything an experiment reads. Fields left out of a config file take the
/// experiment's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub domain: DomainConfig,
    /// Strictly decreasing lattice spacings.
    pub eps: Vec<f64>,
    pub beta: Vec<Beta>,
    pub sigma: Sigma,
    /// Reservoir density as an expression in `x1, x2, x3`.
    pub theta: String,
    /// `product:<expr>`, `pile` or `stationary`.
    pub initial: String,
    pub test_functions: Vec<String>,
    pub times: Vec<f64>,
    /// Independent replicas (trajectories, or stationary chains).
    pub replicas: usize,
    /// Stationary samples per chain.
    pub samples: usize,
    pub eigen_count: usize,
    pub seed: u64,
    pub burnin_multiplier: f64,
    pub spacing_multiplier: f64,
    /// Reserved for a non-constant Robin coefficient; rejected when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<String>,
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind, quick: bool) -> Self {
        let fine = vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0];
        let base = ExperimentConfig {
            experiment: kind,
            domain: DomainConfig::UnitSquare,
            eps: fine.clone(),
            beta: vec![Beta::Finite(3.0)],
            sigma: Sigma::Exclusion,
            theta: "x1 + 1/2".into(),
            initial: "stationary".into(),
            test_functions: ["one", "x1", "x2", "x1x2", "sin_sin", "cos_cos", "bump"].map(String::from).to_vec(),
            times: vec![0.05, 0.2, 1.0],
            replicas: 1,
            samples: 1,
            eigen_count: 6,
            seed: DEFAULT_SEED,
            burnin_multiplier: 10.0,
            spacing_multiplier: 2.0,
            rho: None,
        };
        let q = |full: usize, small: usize| if quick { small } else { full };
        match kind {
            ExperimentKind::SpectralConvergence => ExperimentConfig {
                beta: vec![Beta::Finite(3.0), Beta::Finite(1.0), Beta::Finite(0.0), Beta::Infinite],
                eps: fine.clone(),
                ..base
            },
            ExperimentKind::HarmonicConvergence => ExperimentConfig {
                beta: vec![Beta::Finite(3.0), Beta::Finite(1.0), Beta::Finite(0.0)],
                eps: fine.clone(),
                ..base
            },
            ExperimentKind::SemigroupConvergence => ExperimentConfig {
                beta: vec![Beta::Finite(3.0), Beta::Finite(1.0), Beta::Finite(0.0), Beta::Infinite],
                eps: fine.clone(),
                ..base
            },
            ExperimentKind::Hydrodynamic => ExperimentConfig {
                eps: if quick { vec![1.0 / 8.0, 1.0 / 16.0] } else { vec![1.0 / 16.0, 1.0 / 32.0] },
                beta: vec![Beta::Finite(0.0)],
                theta: "0".into(),
                initial: "product:0.5 * (1 + x1)".into(),
                times: vec![0.05, 0.2, 0.5],
                replicas: q(400, 100),
                ..base
            },
            ExperimentKind::Hydrostatic => ExperimentConfig {
                eps: vec![if quick { 1.0 / 8.0 } else { 1.0 / 16.0 }],
                beta: vec![Beta::Finite(1.0)],
                replicas: q(16, 8),
                samples: q(250, 150),
                ..base
            },
            ExperimentKind::Fluctuations => ExperimentConfig {
                eps: vec![1.0 / 8.0],
                beta: vec![Beta::Finite(3.0)],
                theta: "0.3".into(),
                test_functions: ["x1", "x2", "x1x2", "sin_sin"].map(String::from).to_vec(),
                replicas: q(16, 8),
                samples: q(125, 15),
                ..base
            },
            ExperimentKind::DualityAudit => ExperimentConfig {
                eps: vec![1.0 / 4.0],
                beta: vec![Beta::Finite(0.0), Beta::Finite(1.0), Beta::Finite(3.0)],
                initial: "fixed".into(),
                times: vec![0.1],
                replicas: q(10_000, 2_000),
                ..base
            },
        }
    }

    /// Defaults for `kind` overlaid with the keys present in a TOML file.
    pub fn load(kind: ExperimentKind, path: Option<&Path>, quick: bool) -> Result<Self> {
        let mut cfg = Self::defaults(kind, quick);
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)?;
            cfg = Self::overlay(cfg, &text)?;
            if cfg.experiment != kind {
                return Err(Error::Config(format!(
                    "config is for {} but {} was requested",
                    cfg.experiment, kind
                )));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn overlay(base: Self, toml_text: &str) -> Result<Self> {
        let user: toml::Table = toml::from_str(toml_text).map_err(|e| Error::Config(e.to_string()))?;
        let mut merged = toml::Table::try_from(&base).map_err(|e| Error::Config(e.to_string()))?;
        for (k, v) in user {
            merged.insert(k, v);
        }
        merged.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(Error::Config("eps must be a non-empty list of values in (0, 1)".into()));
        }
        if self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("eps list must be strictly decreasing".into()));
        }
        if self.beta.is_empty() {
            return Err(Error::Config("beta list is empty".into()));
        }
        if self.replicas == 0 || self.samples == 0 {
            return Err(Error::Config("replica and sample counts must be at least 1".into()));
        }
        if self.times.iter().any(|t| !(*t >= 0.0)) || self.times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("times must be non-negative and sorted".into()));
        }
        if let Some(rho) = &self.rho {
            return Err(Error::Config(format!(
                "a non-constant Robin coefficient ({rho:?}) is not supported; beta = 1 uses rho = 1"
            )));
        }
        self.domain.build()?;
        crate::expr::CoordExpr::parse(&self.theta)?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_and_validation() {
        let base = ExperimentConfig::defaults(ExperimentKind::Hydrostatic, false);
        let cfg = ExperimentConfig::overlay(base.clone(), "theta = \"0.2 + 0.1*x2\"\nbeta = [\"inf\", 2.0]\nsigma = 1\n").unwrap();
        assert_eq!(cfg.theta, "0.2 + 0.1*x2");
        assert_eq!(cfg.beta, vec![Beta::Infinite, Beta::Finite(2.0)]);
        assert_eq!(cfg.sigma, Sigma::Inclusion);
        assert_eq!(cfg.eps, base.eps);
        assert!(ExperimentConfig::overlay(base.clone(), "bogus = 1").is_err());
        let bad = ExperimentConfig { eps: vec![0.1, 0.2], ..base.clone() };
        assert!(bad.validate().is_err());
        let rho = ExperimentConfig { rho: Some("1 + x1".into()), ..base.clone() };
        assert!(rho.validate().is_err());
        let poly = ExperimentConfig::overlay(
            base.clone(),
            "[domain]\nshape = \"polygon\"\nvertices = [[-0.5,-0.5],[0.5,-0.5],[0.0,0.5]]\nlipschitz = 2.0\n",
        )
        .unwrap();
        assert!(poly.validate().is_ok());
        assert_ne!(poly.hash(), base.hash());
        assert_eq!(base.hash(), ExperimentConfig::defaults(ExperimentKind::Hydrostatic, false).hash());
    }

    #[test]
    fn kinds_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
            ExperimentConfig::defaults(k, true).validate().unwrap();
            ExperimentConfig::defaults(k, false).validate().unwrap();
        }
    }
}
