//! Random-walk generators on the lattice, their semigroups, spectra and harmonic profiles,
//! and the two-particle dual generator.

mod pair;
mod walk;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use pair::{PairOperator, PairState, TwoPointProfile, PAIR_STATE_CAP};
pub use walk::{HarmonicProfile, SpectralData, WalkOperator};

use crate::error::{Error, Result};

/// Boundary-speed exponent. Cross edges fire at rate `eps^(beta - 2)`; `Infinite` closes them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

/// Limiting boundary condition selected by `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Neumann,
    Robin,
    Dirichlet,
}

impl Beta {
    /// `eps^(beta + offset)`, with `eps^inf = 0`.
    pub fn eps_pow(self, eps: f64, offset: f64) -> f64 {
        match self {
            Beta::Finite(b) => eps.powf(b + offset),
            Beta::Infinite => 0.0,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Beta::Finite(_))
    }

    pub fn regime(self) -> Regime {
        match self {
            Beta::Finite(b) if b < 1.0 => Regime::Dirichlet,
            Beta::Finite(b) if b == 1.0 => Regime::Robin,
            _ => Regime::Neumann,
        }
    }

    /// Ordering used for domination: smaller `beta` absorbs faster.
    pub fn as_f64(self) -> f64 {
        match self {
            Beta::Finite(b) => b,
            Beta::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beta::Finite(b) => write!(f, "{b}"),
            Beta::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Beta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" | "+inf" => Ok(Beta::Infinite),
            t => t
                .parse::<f64>()
                .ok()
                .filter(|b| b.is_finite())
                .map(Beta::Finite)
                .ok_or_else(|| Error::InvalidInput(format!("beta must be a number or \"inf\", got {s:?}"))),
        }
    }
}

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Beta::Finite(b) => s.serialize_f64(*b),
            Beta::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(b) => Ok(Beta::Finite(b)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Interaction sign: exclusion (`-1`) or inclusion (`+1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sigma {
    Exclusion,
    Inclusion,
}

impl Sigma {
    pub fn value(self) -> f64 {
        match self {
            Sigma::Exclusion => -1.0,
            Sigma::Inclusion => 1.0,
        }
    }

    pub fn from_sign(s: i64) -> Result<Self> {
        match s {
            -1 => Ok(Sigma::Exclusion),
            1 => Ok(Sigma::Inclusion),
            _ => Err(Error::InvalidInput(format!("sigma must be -1 or +1, got {s}"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sigma::Exclusion => "SEP",
            Sigma::Inclusion => "SIP",
        }
    }
}

impl Serialize for Sigma {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i64(self.value() as i64)
    }
}

impl<'de> Deserialize<'de> for Sigma {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Sigma::from_sign(i64::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_parsing_and_powers() {
        assert_eq!("inf".parse::<Beta>().unwrap(), Beta::Infinite);
        assert_eq!("1.5".parse::<Beta>().unwrap(), Beta::Finite(1.5));
        assert!("x".parse::<Beta>().is_err());
        assert_eq!(Beta::Infinite.eps_pow(0.5, -1.0), 0.0);
        assert_eq!(Beta::Finite(3.0).eps_pow(0.5, -1.0), 0.25);
        assert_eq!(Beta::Finite(3.0).regime(), Regime::Neumann);
        assert_eq!(Beta::Finite(1.0).regime(), Regime::Robin);
        assert_eq!(Beta::Finite(0.0).regime(), Regime::Dirichlet);
        let b: Beta = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(b, Beta::Infinite);
        let b: Beta = serde_json::from_str("2").unwrap();
        assert_eq!(b, Beta::Finite(2.0));
    }
}
