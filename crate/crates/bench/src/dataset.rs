//! Dataset sources: `.fvecs` files or seeded synthetic data.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{BenchError, Result};
use crate::vecs::load_fvecs;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    Gaussian,
    Uniform,
}

/// `path/to/file.fvecs`, `synthetic:N:D` (Gaussian) or
/// `synthetic-uniform:N:D`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSource {
    File(PathBuf),
    Synthetic {
        kind: SyntheticKind,
        n: usize,
        dim: usize,
    },
}

impl FromStr for DatasetSource {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let kind = if let Some(rest) = s.strip_prefix("synthetic-uniform:") {
            Some((SyntheticKind::Uniform, rest))
        } else {
            s.strip_prefix("synthetic:")
                .map(|rest| (SyntheticKind::Gaussian, rest))
        };
        let Some((kind, rest)) = kind else {
            return Ok(Self::File(PathBuf::from(s)));
        };
        let parts: Vec<&str> = rest.split(':').collect();
        let parse = |p: &str| {
            p.parse::<usize>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| BenchError::Config(format!("malformed synthetic dataset {s:?}")))
        };
        match parts.as_slice() {
            [n, dim] => Ok(Self::Synthetic {
                kind,
                n: parse(n)?,
                dim: parse(dim)?,
            }),
            _ => Err(BenchError::Config(format!(
                "expected synthetic:N:D, got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::File(p) => write!(f, "{}", p.display()),
            Self::Synthetic {
                kind: SyntheticKind::Gaussian,
                n,
                dim,
            } => write!(f, "synthetic:{n}:{dim}"),
            Self::Synthetic {
                kind: SyntheticKind::Uniform,
                n,
                dim,
            } => write!(f, "synthetic-uniform:{n}:{dim}"),
        }
    }
}

impl DatasetSource {
    /// Loads the vectors; synthetic data is drawn from `seed`.
    pub fn load(&self, seed: u64) -> Result<Vec<Vec<f32>>> {
        match self {
            Self::File(p) => {
                let rows = load_fvecs(p)?;
                if rows.is_empty() {
                    return Err(BenchError::Input(format!(
                        "{} holds no vectors",
                        p.display()
                    )));
                }
                Ok(rows)
            }
            Self::Synthetic { kind, n, dim } => Ok(synthetic(*kind, *n, *dim, seed)),
        }
    }
}

pub fn synthetic(kind: SyntheticKind, n: usize, dim: usize, seed: u64) -> Vec<Vec<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| match kind {
            SyntheticKind::Gaussian => (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect(),
            SyntheticKind::Uniform => (0..dim).map(|_| rng.random::<f32>()).collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_specs() {
        assert_eq!(
            "synthetic:100:8".parse::<DatasetSource>().unwrap(),
            DatasetSource::Synthetic {
                kind: SyntheticKind::Gaussian,
                n: 100,
                dim: 8
            }
        );
        assert_eq!(
            "synthetic-uniform:5:2"
                .parse::<DatasetSource>()
                .unwrap()
                .to_string(),
            "synthetic-uniform:5:2"
        );
        assert_eq!(
            "data/sift.fvecs".parse::<DatasetSource>().unwrap(),
            DatasetSource::File("data/sift.fvecs".into())
        );
        assert!("synthetic:0:8".parse::<DatasetSource>().is_err());
        assert!("synthetic:10".parse::<DatasetSource>().is_err());
    }

    #[test]
    fn synthetic_data_is_seeded() {
        let a = synthetic(SyntheticKind::Gaussian, 10, 4, 1);
        assert_eq!(a, synthetic(SyntheticKind::Gaussian, 10, 4, 1));
        assert_ne!(a, synthetic(SyntheticKind::Gaussian, 10, 4, 2));
        assert!(synthetic(SyntheticKind::Uniform, 50, 3, 1)
            .iter()
            .flatten()
            .all(|x| (0.0..1.0).contains(x)));
    }
}
