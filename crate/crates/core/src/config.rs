use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricSpec;

/// Parameters of a hop-and-count sketch.
///
/// `f0` is the smallest frequency that can be queried, `epsilon` the slack of
/// the acceptance threshold `(1 - epsilon) * f * W`, and `delta` the failure
/// probability of the coverage guarantees. Radii form the geometric ladder
/// `r0 * gamma^k` for `k` in `0..=c`. `tau` is the exponential-decay timescale
/// in timestamp units; `None` means no decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HacConfig {
    pub f0: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub r0: f64,
    pub gamma: f64,
    pub c: u32,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub metric: MetricSpec,
    #[serde(default)]
    pub seed: u64,
}

impl HacConfig {
    /// Single-radius euclidean config with no decay.
    pub fn new(f0: f64, epsilon: f64, delta: f64) -> Self {
        HacConfig {
            f0,
            epsilon,
            delta,
            r0: 1.0,
            gamma: 2.0,
            c: 0,
            tau: None,
            metric: MetricSpec::Euclidean,
            seed: 0,
        }
    }

    pub fn with_radii(mut self, r0: f64, gamma: f64, c: u32) -> Self {
        self.r0 = r0;
        self.gamma = gamma;
        self.c = c;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn with_metric(mut self, metric: MetricSpec) -> Self {
        self.metric = metric;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(field: &'static str, reason: String) -> Result<()> {
            Err(Error::InvalidConfig { field, reason })
        }
        if !(self.f0 > 0.0 && self.f0 <= 1.0) {
            return bad("f0", format!("must lie in (0, 1], got {}", self.f0));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon", format!("must lie in (0, 1), got {}", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta", format!("must lie in (0, 1), got {}", self.delta));
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return bad("r0", format!("must be a positive finite real, got {}", self.r0));
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return bad("gamma", format!("must be a finite real > 1, got {}", self.gamma));
        }
        if !self.r_max().is_finite() {
            return bad("c", format!("r0 * gamma^c overflows for c = {}", self.c));
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0) {
                return bad("tau", format!("must be positive or absent, got {tau}"));
            }
        }
        self.metric.validate()
    }

    /// Decay timescale, `f64::INFINITY` when there is none.
    pub fn timescale(&self) -> f64 {
        self.tau.unwrap_or(f64::INFINITY)
    }

    pub fn is_decaying(&self) -> bool {
        self.timescale().is_finite()
    }

    pub fn slot_count(&self) -> usize {
        slot_count(self.f0, self.epsilon, self.delta)
    }

    pub fn bucket_count(&self) -> usize {
        self.c as usize + 1
    }

    pub fn radius(&self, index: usize) -> f64 {
        self.r0 * self.gamma.powi(index as i32)
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.bucket_count()).map(|k| self.radius(k)).collect()
    }

    pub fn r_max(&self) -> f64 {
        self.radius(self.c as usize)
    }
}

/// Number of sample slots, `ceil(ln(1 / (f0 * delta)) / (f0 * epsilon))`,
/// never less than one.
pub fn slot_count(f0: f64, epsilon: f64, delta: f64) -> usize {
    let raw = (1.0 / (f0 * delta)).ln() / (f0 * epsilon);
    // Shave rounding noise so that exact integers such as ln(e) / 1 do not
    // round up to the next slot.
    let m = (raw * (1.0 - 1e-12)).ceil();
    if m.is_finite() && m >= 1.0 {
        m as usize
    } else {
        1
    }
}

/// Smallest `k` in `0..=c` with `d <= radii[k]`, or `None` if `d` exceeds the
/// largest radius. Equals `max(0, ceil(log_gamma(d / r0)))` while resolving
/// boundary distances against the same radius table the queries report.
pub fn bucket_for(radii: &[f64], d: f64) -> Option<usize> {
    let k = radii.partition_point(|&r| r < d);
    (k < radii.len()).then_some(k)
}

/// Same as [`bucket_for`] for a config.
pub fn bucket_index(config: &HacConfig, d: f64) -> Option<usize> {
    bucket_for(&config.radii(), d)
}

/// The count a sample must reach to be reported: `(1 - epsilon) * f * W`.
/// The oracle compares against the same expression.
pub fn acceptance_threshold(epsilon: f64, f: f64, total_weight: f64) -> f64 {
    (1.0 - epsilon) * f * total_weight
}
