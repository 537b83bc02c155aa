//! `synthetic:seed=<u64>:dim=<n>[:latency_ns=<n>]` or
//! `vec:<path>[:oov=error|synthetic]`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use vecjoin::{load_vec_file, EmbeddingModel, OovPolicy};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelSpec {
    Synthetic {
        seed: u64,
        dim: usize,
        latency_ns: u64,
    },
    Vec {
        path: PathBuf,
        oov: OovPolicy,
    },
}

impl ModelSpec {
    pub fn build(&self) -> CliResult<EmbeddingModel> {
        match self {
            ModelSpec::Synthetic {
                seed,
                dim,
                latency_ns,
            } => Ok(EmbeddingModel::synthetic(*seed, *dim)?.with_latency_ns(*latency_ns)),
            ModelSpec::Vec { path, oov } => Ok(load_vec_file(path)?.with_oov(*oov, 0)),
        }
    }

    /// Seed of a synthetic model; lookup models fall back under seed 0.
    pub fn seed(&self) -> u64 {
        match self {
            ModelSpec::Synthetic { seed, .. } => *seed,
            ModelSpec::Vec { .. } => 0,
        }
    }
}

impl FromStr for ModelSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let bad = |why: &str| CliError::Usage(format!("invalid model spec {s:?}: {why}"));
        if let Some(rest) = s.strip_prefix("synthetic:") {
            let (mut seed, mut dim, mut latency_ns) = (None, None, 0u64);
            for part in rest.split(':') {
                let (key, value) = part
                    .split_once('=')
                    .ok_or_else(|| bad("expected key=value"))?;
                match key {
                    "seed" => seed = Some(value.parse().map_err(|_| bad("seed must be a u64"))?),
                    "dim" => {
                        dim = Some(
                            value
                                .parse()
                                .map_err(|_| bad("dim must be a positive integer"))?,
                        )
                    }
                    "latency_ns" => {
                        latency_ns = value.parse().map_err(|_| bad("latency_ns must be a u64"))?
                    }
                    _ => return Err(bad(&format!("unknown key {key:?}"))),
                }
            }
            let seed = seed.ok_or_else(|| bad("missing seed"))?;
            let dim: usize = dim.ok_or_else(|| bad("missing dim"))?;
            if dim == 0 {
                return Err(bad("dim must be positive"));
            }
            Ok(ModelSpec::Synthetic {
                seed,
                dim,
                latency_ns,
            })
        } else if let Some(rest) = s.strip_prefix("vec:") {
            let (path, oov) = if let Some(p) = rest.strip_suffix(":oov=error") {
                (p, OovPolicy::Error)
            } else if let Some(p) = rest.strip_suffix(":oov=synthetic") {
                (p, OovPolicy::Synthetic)
            } else {
                (rest, OovPolicy::Error)
            };
            if path.is_empty() {
                return Err(bad("missing path"));
            }
            Ok(ModelSpec::Vec {
                path: PathBuf::from(path),
                oov,
            })
        } else {
            Err(bad("expected synthetic:... or vec:..."))
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Synthetic {
                seed,
                dim,
                latency_ns,
            } => {
                write!(f, "synthetic:seed={seed}:dim={dim}")?;
                if *latency_ns > 0 {
                    write!(f, ":latency_ns={latency_ns}")?;
                }
                Ok(())
            }
            ModelSpec::Vec { path, oov } => {
                let oov = match oov {
                    OovPolicy::Error => "error",
                    OovPolicy::Synthetic => "synthetic",
                };
                write!(f, "vec:{}:oov={oov}", path.display())
            }
        }
    }
}
