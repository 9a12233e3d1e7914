use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{distance_with_norms, EmbedError, Embedding};

pub const DEFAULT_EXACT_LIMIT: usize = 5_000;
pub const DEFAULT_SAMPLE_PAIRS: usize = 1_000_000;

/// How pairwise distances are enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// All pairs up to `exact_limit` vectors, otherwise `pairs` sampled pairs.
    Auto {
        exact_limit: usize,
        pairs: usize,
    },
    Exact,
    Sampled {
        pairs: usize,
    },
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling::Auto {
            exact_limit: DEFAULT_EXACT_LIMIT,
            pairs: DEFAULT_SAMPLE_PAIRS,
        }
    }
}

/// Mean and population standard deviation of pairwise cosine distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "StatsReport", try_from = "StatsReport")]
pub struct DistanceStats {
    pub mu: f64,
    pub sigma: f64,
    pub pair_count: u64,
    pub sampled: bool,
    /// Set when sampled.
    pub seed: Option<u64>,
}

impl DistanceStats {
    /// Candidate similarity thresholds `(mu - sigma, mu, mu + sigma)`.
    pub fn thresholds(&self) -> [f64; 3] {
        [self.mu - self.sigma, self.mu, self.mu + self.sigma]
    }
}

#[derive(Serialize, Deserialize)]
struct StatsReport {
    mu: f64,
    sigma: f64,
    thresholds: [f64; 3],
    pair_count: u64,
    sampled: bool,
    seed: Option<u64>,
}

impl From<DistanceStats> for StatsReport {
    fn from(s: DistanceStats) -> Self {
        Self {
            thresholds: s.thresholds(),
            mu: s.mu,
            sigma: s.sigma,
            pair_count: s.pair_count,
            sampled: s.sampled,
            seed: s.seed,
        }
    }
}

impl TryFrom<StatsReport> for DistanceStats {
    type Error = String;

    fn try_from(r: StatsReport) -> Result<Self, Self::Error> {
        if r.sigma.is_nan() || r.sigma < 0.0 {
            return Err(format!("sigma must be non-negative, got {}", r.sigma));
        }
        Ok(Self {
            mu: r.mu,
            sigma: r.sigma,
            pair_count: r.pair_count,
            sampled: r.sampled,
            seed: r.seed,
        })
    }
}

/// Running count/mean/M2, mergeable in a fixed order (Chan et al.).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        Moments { n, mean, m2 }
    }
}

/// Computes the distance distribution statistics for `vectors`.
///
/// Pair lists for sampling are drawn from `seed` before any parallel work,
/// and partial results are merged in index order, so output is
/// bit-reproducible for a given input, mode and seed. Sampled pairs are
/// distinct items drawn with replacement.
pub fn calibrate(vectors: &[Embedding], sampling: Sampling, seed: u64) -> Result<DistanceStats, EmbedError> {
    let n = vectors.len();
    if n < 2 {
        return Err(EmbedError::TooFewVectors(n));
    }
    let dim = vectors[0].dimension();
    if let Some(v) = vectors.iter().find(|v| v.dimension() != dim) {
        return Err(EmbedError::DimensionMismatch {
            expected: dim,
            found: v.dimension(),
        });
    }
    let norms: Vec<f64> = vectors.iter().map(Embedding::norm).collect();
    if norms.contains(&0.0) {
        return Err(EmbedError::ZeroNorm);
    }
    let dist = |i: usize, j: usize| distance_with_norms(vectors[i].values(), norms[i], vectors[j].values(), norms[j]);

    let sample_pairs = match sampling {
        Sampling::Exact => None,
        Sampling::Sampled { pairs } => Some(pairs),
        Sampling::Auto { exact_limit, pairs } => (n > exact_limit).then_some(pairs),
    };

    let moments = match sample_pairs {
        None => {
            let rows: Vec<Moments> = (0..n - 1)
                .into_par_iter()
                .map(|i| {
                    let mut m = Moments::default();
                    for j in i + 1..n {
                        m.push(dist(i, j));
                    }
                    m
                })
                .collect();
            rows.into_iter().fold(Moments::default(), Moments::merge)
        }
        Some(pairs) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pair_list: Vec<(usize, usize)> = (0..pairs)
                .map(|_| {
                    let i = rng.random_range(0..n);
                    let mut j = rng.random_range(0..n - 1);
                    if j >= i {
                        j += 1;
                    }
                    (i, j)
                })
                .collect();
            let chunks: Vec<Moments> = pair_list
                .par_chunks(4096)
                .map(|chunk| {
                    let mut m = Moments::default();
                    for &(i, j) in chunk {
                        m.push(dist(i, j));
                    }
                    m
                })
                .collect();
            chunks.into_iter().fold(Moments::default(), Moments::merge)
        }
    };

    if moments.n == 0 {
        return Err(EmbedError::TooFewVectors(n));
    }
    let variance = (moments.m2 / moments.n as f64).max(0.0);
    Ok(DistanceStats {
        mu: moments.mean,
        sigma: variance.sqrt(),
        pair_count: moments.n,
        sampled: sample_pairs.is_some(),
        seed: sample_pairs.map(|_| seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Unit vectors whose pairwise cosine similarities are 0.5, 0.4 and 0.3
    /// (lower-triangular Cholesky factor of the Gram matrix).
    fn triangle() -> Vec<Embedding> {
        let (g12, g13, g23) = (0.5f64, 0.4f64, 0.3f64);
        let l22 = (1.0 - g12 * g12).sqrt();
        let l32 = (g23 - g13 * g12) / l22;
        let l33 = (1.0 - g13 * g13 - l32 * l32).sqrt();
        vec![
            Embedding::new(vec![1.0, 0.0, 0.0]),
            Embedding::new(vec![g12, l22, 0.0]),
            Embedding::new(vec![g13, l32, l33]),
        ]
    }

    #[test]
    fn three_distances_in_equal_proportion() {
        let stats = calibrate(&triangle(), Sampling::Exact, 0).unwrap();
        assert_eq!(stats.pair_count, 3);
        assert!((stats.mu - 0.6).abs() < 1e-12);
        assert!((stats.sigma - (1.0f64 / 150.0).sqrt()).abs() < 1e-12);
        assert!(!stats.sampled);
        assert_eq!(stats.seed, None);
    }

    #[test]
    fn identical_vectors_have_zero_spread() {
        let v = Embedding::new(vec![0.3, -1.0, 2.0]);
        let stats = calibrate(&[v.clone(), v], Sampling::default(), 0).unwrap();
        assert_eq!(stats.mu, 0.0);
        assert_eq!(stats.sigma, 0.0);
    }

    #[test]
    fn too_few_vectors() {
        assert_eq!(
            calibrate(&[Embedding::new(vec![1.0])], Sampling::Exact, 0),
            Err(EmbedError::TooFewVectors(1))
        );
    }

    #[test]
    fn sampling_is_seed_reproducible() {
        let vs: Vec<Embedding> = (0..40)
            .map(|i| Embedding::new(vec![1.0, (i as f64).sin(), (i as f64 * 0.7).cos()]))
            .collect();
        let a = calibrate(&vs, Sampling::Sampled { pairs: 5000 }, 11).unwrap();
        let b = calibrate(&vs, Sampling::Sampled { pairs: 5000 }, 11).unwrap();
        assert_eq!(a.mu.to_bits(), b.mu.to_bits());
        assert_eq!(a.sigma.to_bits(), b.sigma.to_bits());
        assert_eq!(a.seed, Some(11));
        assert!(a.sampled);
        let c = calibrate(&vs, Sampling::Sampled { pairs: 5000 }, 12).unwrap();
        assert_ne!(a.mu.to_bits(), c.mu.to_bits());
    }

    #[test]
    fn auto_switches_on_size() {
        let vs: Vec<Embedding> = (0..10).map(|i| Embedding::new(vec![1.0, i as f64])).collect();
        let exact = calibrate(
            &vs,
            Sampling::Auto {
                exact_limit: 10,
                pairs: 100,
            },
            1,
        )
        .unwrap();
        assert_eq!(exact.pair_count, 45);
        let sampled = calibrate(
            &vs,
            Sampling::Auto {
                exact_limit: 9,
                pairs: 100,
            },
            1,
        )
        .unwrap();
        assert_eq!(sampled.pair_count, 100);
    }

    #[test]
    fn report_json_shape() {
        let stats = calibrate(&triangle(), Sampling::Exact, 0).unwrap();
        let v = serde_json::to_value(&stats).unwrap();
        for key in ["mu", "sigma", "thresholds", "pair_count", "sampled", "seed"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["thresholds"].as_array().unwrap().len(), 3);
        let back: DistanceStats = serde_json::from_value(v).unwrap();
        assert_eq!(back, stats);
    }
}
