use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::jitter;
use crate::error::{Error, Result};
use crate::oracle::Dataset;
use crate::point::{Point, NOISE_LABEL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Means {
    Explicit { means: Vec<Vec<f64>> },
    /// Means placed so that every pair is at least `distance` apart.
    Separated { distance: f64 },
}

/// `k` Gaussian clusters plus uniform noise. Cluster `j` is labelled `c{j}`
/// and drawn with probability `weights[j]`; noise is labelled `noise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub k: usize,
    pub dims: usize,
    pub means: Means,
    pub sigma: f64,
    pub weights: Vec<f64>,
    pub noise_fraction: f64,
    pub n: usize,
    pub seed: u64,
}

/// Intra-cluster point distance of [`character_profile`]. Stays below the
/// 0.4 and 0.5 query radii.
const PROFILE_INTRA: f64 = 0.35;
/// Typical distance between points of different clusters. Stays above the
/// 0.65 duplicate radius.
const PROFILE_INTER: f64 = 0.73;

/// A cast of eight entities in 128 dimensions: one main entity at 27 %, four
/// at 6 %, three at 4 %, and the remaining 37 % unstructured noise.
pub fn character_profile(n: usize, seed: u64) -> MixtureSpec {
    let dims = 128;
    let weights = vec![0.27, 0.06, 0.06, 0.06, 0.06, 0.04, 0.04, 0.04];
    let noise_fraction = 1.0 - weights.iter().sum::<f64>();
    MixtureSpec {
        k: weights.len(),
        dims,
        // points of one cluster sit sigma * sqrt(2d) apart
        sigma: PROFILE_INTRA / (2.0 * dims as f64).sqrt(),
        // and inter-cluster pairs at sqrt(delta^2 + intra^2)
        means: Means::Separated {
            distance: (PROFILE_INTER.powi(2) - PROFILE_INTRA.powi(2)).sqrt(),
        },
        weights,
        noise_fraction,
        n,
        seed,
    }
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.k == 0 || self.dims == 0 {
            return bad("k and dims must be positive".into());
        }
        if self.weights.len() != self.k {
            return bad(format!("{} weights for {} clusters", self.weights.len(), self.k));
        }
        if self.weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return bad("cluster weights must be positive".into());
        }
        if !(0.0..1.0).contains(&self.noise_fraction) {
            return bad(format!("noise_fraction {} outside [0, 1)", self.noise_fraction));
        }
        let total = self.weights.iter().sum::<f64>() + self.noise_fraction;
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("weights plus noise sum to {total}, not 1"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma {} must be non-negative", self.sigma));
        }
        match &self.means {
            Means::Explicit { means } => {
                if means.len() != self.k || means.iter().any(|m| m.len() != self.dims) {
                    return bad(format!("explicit means must be {} vectors of length {}", self.k, self.dims));
                }
                if means.iter().flatten().any(|v| !v.is_finite()) {
                    return bad("explicit means must be finite".into());
                }
            }
            Means::Separated { distance } => {
                if !(*distance >= 0.0 && distance.is_finite()) {
                    return bad(format!("separation {distance} must be non-negative"));
                }
            }
        }
        Ok(())
    }

    /// The cluster centers. Deterministic per seed and independent of `n`.
    pub fn cluster_means(&self) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        Ok(match &self.means {
            Means::Explicit { means } => means.clone(),
            Means::Separated { distance } => separated_means(self.k, self.dims, *distance, self.seed),
        })
    }
}

fn separated_means(k: usize, dims: usize, distance: f64, seed: u64) -> Vec<Vec<f64>> {
    if k <= dims {
        // Scaled basis vectors are pairwise exactly `distance` apart.
        let s = distance / std::f64::consts::SQRT_2;
        return (0..k)
            .map(|i| (0..dims).map(|j| if i == j { s } else { 0.0 }).collect())
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut side = distance * (k as f64).powf(1.0 / dims as f64) * 2.0;
    loop {
        let mut means: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut tries = 0;
        while means.len() < k && tries < 10_000 {
            tries += 1;
            let cand: Vec<f64> = (0..dims).map(|_| rng.random_range(0.0..=side)).collect();
            if means
                .iter()
                .all(|m| crate::metric::euclidean(m, &cand) >= distance)
            {
                means.push(cand);
            }
        }
        if means.len() == k {
            return means;
        }
        side *= 1.25;
    }
}

/// Draws `n` i.i.d. labelled points with timestamps `0, 1, 2, ...`.
pub fn gaussian_mixture_stream(spec: &MixtureSpec) -> Result<Dataset> {
    let means = spec.cluster_means()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut lo = vec![f64::INFINITY; spec.dims];
    let mut hi = vec![f64::NEG_INFINITY; spec.dims];
    for m in &means {
        for (j, v) in m.iter().enumerate() {
            lo[j] = lo[j].min(*v);
            hi[j] = hi[j].max(*v);
        }
    }
    let pad = 3.0 * spec.sigma;

    let mut shares = spec.weights.clone();
    shares.push(spec.noise_fraction);
    let pick = WeightedIndex::new(&shares).map_err(|e| Error::InvalidSpec(e.to_string()))?;

    let points = (0..spec.n)
        .map(|i| {
            let c = pick.sample(&mut rng);
            let t = i as f64;
            if c < spec.k {
                Point::new(t, jitter(&mut rng, &means[c], spec.sigma)).with_label(format!("c{c}"))
            } else {
                let x = lo
                    .iter()
                    .zip(&hi)
                    .map(|(l, h)| rng.random_range(l - pad..=h + pad))
                    .collect();
                Point::new(t, x).with_label(NOISE_LABEL)
            }
        })
        .collect();
    Dataset::new(points)
}
