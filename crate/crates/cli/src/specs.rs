//! Small value types parsed from flags and config entries.

use std::fmt;
use std::str::FromStr;

use covext::{HermitianSeq, IndexSet, WeightMatrix};

use crate::CliError;

/// Comma-separated list of sizes, e.g. `2` or `2,3`.
#[derive(Clone, Debug, PartialEq)]
pub struct Extents(pub Vec<usize>);

impl Extents {
    /// One value is repeated `dim` times; otherwise the count must match.
    pub fn broadcast(&self, dim: usize) -> Result<Vec<usize>, CliError> {
        match self.0.len() {
            1 => Ok(vec![self.0[0]; dim]),
            n if n == dim => Ok(self.0.clone()),
            n => Err(CliError::from(covext::Error::IndexSetMismatch)
                .with_context(format!("{n} extents given for {dim}-dimensional data"))),
        }
    }
}

impl FromStr for Extents {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let v: Vec<usize> = s
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}")))
            .collect::<Result<_, _>>()?;
        if v.is_empty() {
            return Err("empty list".into());
        }
        Ok(Self(v))
    }
}

impl fmt::Display for Extents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    Biased,
    Unbiased,
}

impl FromStr for Estimator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "biased" => Ok(Self::Biased),
            "unbiased" => Ok(Self::Unbiased),
            _ => Err(format!("expected biased or unbiased, got {s:?}")),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Biased => "biased",
            Self::Unbiased => "unbiased",
        })
    }
}

/// Prior numerator: a coefficient file or the constant `1`.
#[derive(Clone, Debug, PartialEq)]
pub enum Prior {
    MaxEntropy,
    File(String),
}

impl Prior {
    pub fn load(&self, index: &IndexSet) -> Result<HermitianSeq, CliError> {
        match self {
            Prior::MaxEntropy => Ok(HermitianSeq::unit(index.clone())),
            Prior::File(path) => {
                let p = covext::io::read_coefficients(path).map_err(|e| CliError::from(e).with_context(path))?;
                if p.index_set() != index {
                    return Err(CliError::from(covext::Error::IndexSetMismatch)
                        .with_context("prior and covariances use different index sets"));
                }
                Ok(p)
            }
        }
    }
}

impl FromStr for Prior {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "" => Err("empty prior".into()),
            "me" => Ok(Self::MaxEntropy),
            path => Ok(Self::File(path.to_string())),
        }
    }
}

impl fmt::Display for Prior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MaxEntropy => f.write_str("me"),
            Self::File(p) => f.write_str(p),
        }
    }
}

/// `scalar:λ` for `W = λ I`, or `file:PATH`.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightSpec {
    Scalar(f64),
    File(String),
}

impl WeightSpec {
    pub fn load(&self, n: usize) -> Result<WeightMatrix, CliError> {
        match self {
            WeightSpec::Scalar(l) => Ok(WeightMatrix::scalar(n, *l)?),
            WeightSpec::File(path) => {
                let w = covext::io::read_weight(path).map_err(|e| CliError::from(e).with_context(path))?;
                if w.size() != n {
                    return Err(CliError::from(covext::Error::IndexSetMismatch)
                        .with_context(format!("weight is {}×{} but the index set has {n} elements", w.size(), w.size())));
                }
                Ok(w)
            }
        }
    }
}

impl FromStr for WeightSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            Some(("scalar", v)) => v
                .trim()
                .parse()
                .map(Self::Scalar)
                .map_err(|e| format!("scalar weight {v:?}: {e}")),
            Some(("file", p)) if !p.is_empty() => Ok(Self::File(p.to_string())),
            _ => Err(format!("expected scalar:λ or file:PATH, got {s:?}")),
        }
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Scalar(l) => write!(f, "scalar:{l}"),
            Self::File(p) => write!(f, "file:{p}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    SoftToHard,
    HardToSoft,
}

impl FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "soft2hard" => Ok(Self::SoftToHard),
            "hard2soft" => Ok(Self::HardToSoft),
            _ => Err(format!("expected soft2hard or hard2soft, got {s:?}")),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SoftToHard => "soft2hard",
            Self::HardToSoft => "hard2soft",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_weight_specs() {
        assert_eq!("scalar:0.5".parse::<WeightSpec>().unwrap(), WeightSpec::Scalar(0.5));
        assert_eq!("file:w.txt".parse::<WeightSpec>().unwrap(), WeightSpec::File("w.txt".into()));
        assert!("0.5".parse::<WeightSpec>().is_err());
        assert!("scalar:x".parse::<WeightSpec>().is_err());
    }

    #[test]
    fn extents_broadcast() {
        let e: Extents = "2".parse().unwrap();
        assert_eq!(e.broadcast(2).unwrap(), vec![2, 2]);
        let e: Extents = "2,3".parse().unwrap();
        assert_eq!(e.broadcast(2).unwrap(), vec![2, 3]);
        assert_eq!(e.broadcast(1).unwrap_err().code, 4);
        assert!("2,,3".parse::<Extents>().is_err());
    }

    #[test]
    fn displays_roundtrip() {
        for s in ["scalar:0.25", "file:a b.txt"] {
            assert_eq!(s.parse::<WeightSpec>().unwrap().to_string(), s);
        }
        assert_eq!("me".parse::<Prior>().unwrap().to_string(), "me");
        assert_eq!("hard2soft".parse::<Direction>().unwrap().to_string(), "hard2soft");
    }
}
