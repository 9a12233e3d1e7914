use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{EmbedError, Embedder, Embedding};

/// Offline, deterministic embedder.
///
/// Each lowercase word token maps (via a seeded hash) to a pseudo-random
/// direction; a text's vector is the weighted sum of its token directions,
/// scaled to unit length. Texts sharing vocabulary therefore land close to
/// each other, which is enough for the semantic tiers to behave sensibly
/// without a network model.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dimension: usize,
    seed: u64,
}

impl HashEmbedder {
    pub const DEFAULT_DIMENSION: usize = 256;

    pub fn new(dimension: usize, seed: u64) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        Self { dimension, seed }
    }

    pub fn embed_text(&self, text: &str) -> Embedding {
        let mut acc = vec![0.0f64; self.dimension];
        let mut any = false;
        for token in text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
            let token = token.to_lowercase();
            let weight = if token.chars().all(|c| c.is_ascii_digit()) {
                0.25
            } else {
                1.0
            };
            self.accumulate(&token, weight, &mut acc);
            any = true;
        }
        if !any {
            self.accumulate("\u{0}empty", 1.0, &mut acc);
        }
        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        Embedding::new(acc.into_iter().map(|v| v / norm).collect())
    }

    fn accumulate(&self, token: &str, weight: f64, acc: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(token.as_bytes()) ^ self.seed);
        for slot in acc.iter_mut() {
            *slot += weight * rng.random_range(-1.0..1.0);
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

impl Embedder for HashEmbedder {
    fn kind(&self) -> &'static str {
        "hash"
    }

    fn describe(&self) -> String {
        format!("hash:dim={}:seed={}", self.dimension, self.seed)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbedError> {
        Ok(texts.par_iter().map(|t| self.embed_text(t)).collect())
    }
}
