//! Embedding models, the embedding operator and decoding by lookup.
//!
//! Two model kinds exist. A *synthetic* model derives a unit vector from the
//! token bytes with a portable recipe (FNV-1a seed, splitmix64 stream), so any
//! language can reproduce it bit for bit. A *lookup* model serves vectors from
//! a word2vec-style text file. Models never memoize: every `embed` call is
//! counted and pays the configured latency, so the cost of an operator that
//! re-embeds tuples is actually observed.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::linalg::{cosine_vm, normalize_in_place};
use crate::relation::{EmbeddedRelation, Offset, RawRelation};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

#[derive(Debug, Clone)]
struct SplitMix64(u64);

impl SplitMix64 {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
}

/// Writes the synthetic embedding of `token` into `out` (length = dim).
pub fn synthetic_embedding(token: &str, seed: u64, out: &mut [f32]) {
    let mut rng = SplitMix64(fnv1a64(token.as_bytes()) ^ seed);
    for x in out.iter_mut() {
        let u = rng.next_u64() as f64 / 18_446_744_073_709_551_616.0;
        *x = (u * 2.0 - 1.0) as f32;
    }
    normalize_in_place(out);
}

/// What a lookup model does with a token missing from its table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OovPolicy {
    #[default]
    Error,
    /// Fall back to the synthetic recipe under the model seed.
    Synthetic,
}

#[derive(Debug, Clone)]
pub enum ModelKind {
    Synthetic {
        seed: u64,
    },
    Lookup {
        vocab: HashMap<String, usize>,
        vectors: Vec<f32>,
        oov: OovPolicy,
        seed: u64,
    },
}

#[derive(Debug)]
pub struct EmbeddingModel {
    kind: ModelKind,
    dim: usize,
    latency: Duration,
    calls: AtomicU64,
}

impl EmbeddingModel {
    pub fn synthetic(seed: u64, dim: usize) -> Result<Self> {
        Self::with_kind(ModelKind::Synthetic { seed }, dim)
    }

    /// Lookup model over `(token, vector)` entries; later duplicates win.
    pub fn lookup<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f32>)>,
    {
        let mut vocab = HashMap::new();
        let mut vectors = Vec::new();
        for (token, v) in entries {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: v.len(),
                    right: dim,
                });
            }
            match vocab.get(&token) {
                Some(&slot) => vectors[slot * dim..(slot + 1) * dim].copy_from_slice(&v),
                None => {
                    vocab.insert(token, vectors.len() / dim.max(1));
                    vectors.extend_from_slice(&v);
                }
            }
        }
        Self::with_kind(
            ModelKind::Lookup {
                vocab,
                vectors,
                oov: OovPolicy::Error,
                seed: 0,
            },
            dim,
        )
    }

    fn with_kind(kind: ModelKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "embedding dim must be positive".into(),
            ));
        }
        Ok(EmbeddingModel {
            kind,
            dim,
            latency: Duration::ZERO,
            calls: AtomicU64::new(0),
        })
    }

    /// Adds a busy-wait of `nanos` to every embed call.
    pub fn with_latency_ns(mut self, nanos: u64) -> Self {
        self.latency = Duration::from_nanos(nanos);
        self
    }

    /// Sets the OOV policy and fallback seed of a lookup model. No effect on
    /// synthetic models.
    pub fn with_oov(mut self, policy: OovPolicy, fallback_seed: u64) -> Self {
        if let ModelKind::Lookup { oov, seed, .. } = &mut self.kind {
            *oov = policy;
            *seed = fallback_seed;
        }
        self
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn latency_ns(&self) -> u64 {
        self.latency.as_nanos() as u64
    }

    pub fn call_count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Number of tokens in a lookup table; `None` for synthetic models.
    pub fn vocab_len(&self) -> Option<usize> {
        match &self.kind {
            ModelKind::Lookup { vocab, .. } => Some(vocab.len()),
            ModelKind::Synthetic { .. } => None,
        }
    }

    pub fn embed(&self, token: &str) -> Result<Vec<f32>> {
        let mut out = vec![0.0; self.dim];
        self.embed_into(token, &mut out)?;
        Ok(out)
    }

    /// Embeds into a caller buffer of exactly `dim` floats. Counts as one call,
    /// even when it fails.
    pub fn embed_into(&self, token: &str, out: &mut [f32]) -> Result<()> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        if out.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: out.len(),
                right: self.dim,
            });
        }
        if !self.latency.is_zero() {
            spin_for(self.latency);
        }
        match &self.kind {
            ModelKind::Synthetic { seed } => synthetic_embedding(token, *seed, out),
            ModelKind::Lookup {
                vocab,
                vectors,
                oov,
                seed,
            } => match (vocab.get(token), oov) {
                (Some(&slot), _) => {
                    out.copy_from_slice(&vectors[slot * self.dim..(slot + 1) * self.dim])
                }
                (None, OovPolicy::Synthetic) => synthetic_embedding(token, *seed, out),
                (None, OovPolicy::Error) => return Err(Error::OutOfVocabulary(token.to_string())),
            },
        }
        Ok(())
    }
}

fn spin_for(d: Duration) {
    let start = Instant::now();
    while start.elapsed() < d {
        std::hint::spin_loop();
    }
}

/// Embeds every tuple once, in offset order. The result is not normalized.
pub fn embed_relation(model: &EmbeddingModel, r: &RawRelation) -> Result<EmbeddedRelation> {
    let dim = model.dim();
    let mut data = vec![0.0f32; r.len() * dim];
    for (token, row) in r.tokens().iter().zip(data.chunks_exact_mut(dim)) {
        model.embed_into(token, row)?;
    }
    Ok(EmbeddedRelation::from_parts(
        r.name().to_string(),
        dim,
        data,
        false,
    ))
}

/// Recovers the token stored at `offset`.
pub fn decode(r: &RawRelation, offset: Offset) -> Result<&str> {
    r.get(offset).ok_or(Error::OffsetOutOfRange {
        offset,
        len: r.len() as u64,
    })
}

/// Parses a word2vec text file: a `<count> <dim>` header followed by `count`
/// lines of `<token> <f1> ... <fdim>`.
pub fn load_vec_file(path: impl AsRef<Path>) -> Result<EmbeddingModel> {
    let f = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_vec(std::io::BufReader::new(f))
}

pub fn parse_vec<R: BufRead>(reader: R) -> Result<EmbeddingModel> {
    let parse_err = |line: usize, message: String| Error::Parse { line, message };
    let mut lines = reader.lines();

    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| parse_err(1, "missing header".into()))?;
    let mut fields = header.trim_end_matches('\r').split(' ');
    let (count, dim) = match (fields.next(), fields.next(), fields.next()) {
        (Some(c), Some(d), None) => {
            let count: usize = c
                .parse()
                .map_err(|_| parse_err(1, format!("bad count {c:?}")))?;
            let dim: usize = d
                .parse()
                .map_err(|_| parse_err(1, format!("bad dim {d:?}")))?;
            (count, dim)
        }
        _ => {
            return Err(parse_err(
                1,
                format!("expected \"<count> <dim>\", got {header:?}"),
            ))
        }
    };
    if dim == 0 {
        return Err(parse_err(1, "dim must be positive".into()));
    }

    let mut entries = Vec::with_capacity(count);
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if entries.len() == count {
            if line.is_empty() {
                continue;
            }
            return Err(parse_err(lineno, format!("more than {count} vector lines")));
        }
        let mut parts = line.split(' ');
        let token = match parts.next() {
            Some(t) if !t.is_empty() => t.to_string(),
            _ => return Err(parse_err(lineno, "missing token".into())),
        };
        let mut v = Vec::with_capacity(dim);
        for p in parts {
            if p.is_empty() {
                continue;
            }
            let x: f32 = p
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad float {p:?}")))?;
            if !x.is_finite() {
                return Err(parse_err(lineno, format!("non-finite component {p:?}")));
            }
            v.push(x);
        }
        if v.len() != dim {
            return Err(parse_err(
                lineno,
                format!("expected {dim} components, found {}", v.len()),
            ));
        }
        entries.push((token, v));
    }
    if entries.len() != count {
        return Err(parse_err(
            entries.len() + 2,
            format!("header declares {count} vectors, found {}", entries.len()),
        ));
    }
    EmbeddingModel::lookup(dim, entries)
}

/// The `k` tokens of `raw` most similar to `probe`, most similar first. Ties
/// go to the lower offset.
pub fn top_k(
    model: &EmbeddingModel,
    er: &EmbeddedRelation,
    raw: &RawRelation,
    probe: &str,
    k: usize,
) -> Result<Vec<(String, f32)>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if er.len() != raw.len() {
        return Err(Error::InvalidArgument(format!(
            "embedded relation has {} rows, raw relation {}",
            er.len(),
            raw.len()
        )));
    }
    let q = model.embed(probe)?;
    let sims = cosine_vm(&q, er)?;
    let mut ranked: Vec<(usize, f32)> = sims.into_iter().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(k);
    Ok(ranked
        .into_iter()
        .map(|(i, s)| (raw.tokens()[i].clone(), s))
        .collect())
}
