//! Model-space descriptors and their text form `name:key=value,...`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One of the catalog geometries, with its discretization parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpaceDescriptor {
    /// `[0, L]` with constant density, probability normalized.
    Uniform { l: f64, n: usize },
    /// `√(K/2π) e^{−Kx²/2}` on `[−R, R]`.
    Gaussian { k: f64, r: f64, n: usize },
    /// `e^{x²/2}` on `[−R, R]`, infinite measure, Dirichlet truncation.
    Expx2 { r: f64, n: usize },
    /// Meridian of the surface of revolution with profile `e^{−√|t|}`, `t ∈ [−T, T]`.
    Revolution { t: f64, n: usize },
    /// Radial part of the hyperbolic plane, density `2π sinh r` on `[0, R]`.
    HyperbolicRadial { r: f64, n: usize },
    /// Density `∝ e^{−(x²/2 + εx⁴)}` on `[−R, R]`.
    PerturbedGaussian { eps: f64, r: f64, n: usize },
}

/// Names accepted by [`SpaceDescriptor::from_str`], in catalog order.
pub const MODEL_NAMES: [&str; 6] = [
    "uniform",
    "gaussian",
    "expx2",
    "revolution",
    "hyperbolic_radial",
    "perturbed_gaussian",
];

impl SpaceDescriptor {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Uniform { .. } => "uniform",
            Self::Gaussian { .. } => "gaussian",
            Self::Expx2 { .. } => "expx2",
            Self::Revolution { .. } => "revolution",
            Self::HyperbolicRadial { .. } => "hyperbolic_radial",
            Self::PerturbedGaussian { .. } => "perturbed_gaussian",
        }
    }

    /// Descriptor with every parameter at its default value.
    pub fn default_for(name: &str) -> Result<Self> {
        Ok(match name {
            "uniform" => Self::Uniform { l: std::f64::consts::PI, n: 2001 },
            "gaussian" => Self::Gaussian { k: 1.0, r: 8.0, n: 4001 },
            "expx2" => Self::Expx2 { r: 4.0, n: 2001 },
            "revolution" => Self::Revolution { t: 40.0, n: 8001 },
            "hyperbolic_radial" => Self::HyperbolicRadial { r: 20.0, n: 4001 },
            "perturbed_gaussian" => Self::PerturbedGaussian { eps: 0.05, r: 8.0, n: 4001 },
            other => {
                return Err(Error::Parse {
                    input: other.to_string(),
                    reason: format!("unknown model; expected one of {}", MODEL_NAMES.join(", ")),
                })
            }
        })
    }

    pub fn n(&self) -> usize {
        match *self {
            Self::Uniform { n, .. }
            | Self::Gaussian { n, .. }
            | Self::Expx2 { n, .. }
            | Self::Revolution { n, .. }
            | Self::HyperbolicRadial { n, .. }
            | Self::PerturbedGaussian { n, .. } => n,
        }
    }

    pub fn with_n(mut self, new_n: usize) -> Self {
        match &mut self {
            Self::Uniform { n, .. }
            | Self::Gaussian { n, .. }
            | Self::Expx2 { n, .. }
            | Self::Revolution { n, .. }
            | Self::HyperbolicRadial { n, .. }
            | Self::PerturbedGaussian { n, .. } => *n = new_n,
        }
        self
    }

    /// Truncation radius (`L` for the interval, `T` for the meridian).
    pub fn extent(&self) -> f64 {
        match *self {
            Self::Uniform { l, .. } => l,
            Self::Revolution { t, .. } => t,
            Self::Gaussian { r, .. }
            | Self::Expx2 { r, .. }
            | Self::HyperbolicRadial { r, .. }
            | Self::PerturbedGaussian { r, .. } => r,
        }
    }

    pub fn with_extent(mut self, value: f64) -> Self {
        match &mut self {
            Self::Uniform { l, .. } => *l = value,
            Self::Revolution { t, .. } => *t = value,
            Self::Gaussian { r, .. }
            | Self::Expx2 { r, .. }
            | Self::HyperbolicRadial { r, .. }
            | Self::PerturbedGaussian { r, .. } => *r = value,
        }
        self
    }

    /// Ordered `(key, value)` parameters as they appear in the text form.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Self::Uniform { l, n } => vec![("L", l), ("n", n as f64)],
            Self::Gaussian { k, r, n } => vec![("K", k), ("R", r), ("n", n as f64)],
            Self::Expx2 { r, n } => vec![("R", r), ("n", n as f64)],
            Self::Revolution { t, n } => vec![("T", t), ("n", n as f64)],
            Self::HyperbolicRadial { r, n } => vec![("R", r), ("n", n as f64)],
            Self::PerturbedGaussian { eps, r, n } => {
                vec![("eps", eps), ("R", r), ("n", n as f64)]
            }
        }
    }

    /// Checks parameter ranges without building anything.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Err(Error::InvalidArgument(format!(
                "{}: {what} must be positive and finite, got {v}",
                self.name()
            )))
        };
        let min_nodes = match self {
            Self::Expx2 { .. } => 4,
            Self::HyperbolicRadial { .. } => 3,
            _ => 2,
        };
        if self.n() < min_nodes {
            return Err(Error::InvalidArgument(format!(
                "{}: n must be at least {min_nodes}, got {}",
                self.name(),
                self.n()
            )));
        }
        for (key, v) in self.params() {
            if key == "n" {
                continue;
            }
            if key == "eps" {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "perturbed_gaussian: eps must be nonnegative and finite, got {v}"
                    )));
                }
            } else if !(v.is_finite() && v > 0.0) {
                return bad(key, v);
            }
        }
        Ok(())
    }
}

impl fmt::Display for SpaceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.name())?;
        for (i, (key, v)) in self.params().into_iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            if key == "n" {
                write!(f, "n={}", v as usize)?;
            } else {
                write!(f, "{key}={v}")?;
            }
        }
        Ok(())
    }
}

fn parse_err(input: &str, reason: impl Into<String>) -> Error {
    Error::Parse {
        input: input.to_string(),
        reason: reason.into(),
    }
}

impl FromStr for SpaceDescriptor {
    type Err = Error;

    /// Parses `name[:key=value,...]`; omitted keys take their defaults.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut desc = Self::default_for(name.trim()).map_err(|_| {
            parse_err(s, format!("unknown model; expected one of {}", MODEL_NAMES.join(", ")))
        })?;
        for item in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| parse_err(s, format!("expected key=value, got `{item}`")))?;
            let key = key.trim();
            let value = value.trim();
            if key == "n" {
                let n: usize = value
                    .parse()
                    .map_err(|_| parse_err(s, format!("n must be a nonnegative integer, got `{value}`")))?;
                desc = desc.with_n(n);
                continue;
            }
            let v: f64 = value
                .parse()
                .map_err(|_| parse_err(s, format!("`{key}` expects a number, got `{value}`")))?;
            desc = match (desc, key) {
                (Self::Uniform { n, .. }, "L") => Self::Uniform { l: v, n },
                (Self::Gaussian { r, n, .. }, "K") => Self::Gaussian { k: v, r, n },
                (Self::Gaussian { k, n, .. }, "R") => Self::Gaussian { k, r: v, n },
                (Self::Expx2 { n, .. }, "R") => Self::Expx2 { r: v, n },
                (Self::Revolution { n, .. }, "T") => Self::Revolution { t: v, n },
                (Self::HyperbolicRadial { n, .. }, "R") => Self::HyperbolicRadial { r: v, n },
                (Self::PerturbedGaussian { r, n, .. }, "eps") => {
                    Self::PerturbedGaussian { eps: v, r, n }
                }
                (Self::PerturbedGaussian { eps, n, .. }, "R") => {
                    Self::PerturbedGaussian { eps, r: v, n }
                }
                (d, k) => {
                    let keys: Vec<&str> = d.params().iter().map(|p| p.0).collect();
                    return Err(parse_err(
                        s,
                        format!("unknown key `{k}` for {}; expected {}", d.name(), keys.join(", ")),
                    ));
                }
            };
        }
        // A Gaussian with a user-chosen K but no R gets the K-scaled default.
        if let Self::Gaussian { k, n, .. } = desc {
            if !rest.contains("R=") && k.is_finite() && k > 0.0 {
                desc = Self::Gaussian { k, r: 8.0 / k.sqrt(), n };
            }
        }
        Ok(desc)
    }
}

impl Serialize for SpaceDescriptor {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SpaceDescriptor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_defaults() {
        let d: SpaceDescriptor = "uniform:L=3.141592653589793".parse().unwrap();
        assert_eq!(d, SpaceDescriptor::Uniform { l: std::f64::consts::PI, n: 2001 });
        let d: SpaceDescriptor = "gaussian:K=4".parse().unwrap();
        assert_eq!(d, SpaceDescriptor::Gaussian { k: 4.0, r: 4.0, n: 4001 });
        let d: SpaceDescriptor = "perturbed_gaussian:eps=0.02,n=101".parse().unwrap();
        assert_eq!(d, SpaceDescriptor::PerturbedGaussian { eps: 0.02, r: 8.0, n: 101 });
    }

    #[test]
    fn round_trips_through_text() {
        for name in MODEL_NAMES {
            let d = SpaceDescriptor::default_for(name).unwrap().with_extent(1.0 / 3.0);
            let back: SpaceDescriptor = d.to_string().parse().unwrap();
            assert_eq!(d, back);
            let json = serde_json::to_string(&d).unwrap();
            let back: SpaceDescriptor = serde_json::from_str(&json).unwrap();
            assert_eq!(d, back);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!("sphere".parse::<SpaceDescriptor>().is_err());
        assert!("uniform:L".parse::<SpaceDescriptor>().is_err());
        assert!("uniform:R=1".parse::<SpaceDescriptor>().is_err());
        assert!("uniform:L=abc".parse::<SpaceDescriptor>().is_err());
        assert!("uniform:n=-3".parse::<SpaceDescriptor>().is_err());
        let d: SpaceDescriptor = "uniform:L=-1".parse().unwrap();
        assert!(d.validate().is_err());
        let d: SpaceDescriptor = "perturbed_gaussian:eps=-0.1".parse().unwrap();
        assert!(d.validate().is_err());
        let d: SpaceDescriptor = "gaussian:n=1".parse().unwrap();
        assert!(d.validate().is_err());
    }
}
