//! Brute-force ground truth for small datasets.
//!
//! Everything here is exact up to 64-bit float arithmetic. Masses are summed
//! in dataset order and compared with `>=`, the same comparison the sketch
//! uses against its acceptance threshold. With unit weights all sums are
//! exact integers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{acceptance_threshold, HacConfig};
use crate::error::{Error, Result};
use crate::metric::MetricSpec;
use crate::point::Point;
use crate::sketch::Output;

/// Points in arrival order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    points: Vec<Point>,
}

impl Dataset {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        for (i, w) in points.windows(2).enumerate() {
            if w[1].t < w[0].t || w[1].t.is_nan() {
                return Err(Error::arg(
                    "points",
                    format!("time at index {} goes backwards ({} after {})", i + 1, w[1].t, w[0].t),
                ));
            }
        }
        Ok(Dataset { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn prefix(&self, n: usize) -> Dataset {
        Dataset {
            points: self.points[..n.min(self.points.len())].to_vec(),
        }
    }

    pub fn last_time(&self) -> Option<f64> {
        self.points.last().map(|p| p.t)
    }
}

/// Density queries over one dataset with weights fixed at `at_time`.
#[derive(Debug, Clone)]
pub struct Oracle<'a> {
    points: &'a [Point],
    metric: &'a MetricSpec,
    weights: Vec<f64>,
    total: f64,
}

impl<'a> Oracle<'a> {
    /// `tau = None` (or infinite) gives every point weight 1; otherwise point
    /// `i` weighs `exp(-(at_time - t_i) / tau)`.
    pub fn new(data: &'a Dataset, metric: &'a MetricSpec, tau: Option<f64>, at_time: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let tau = tau.unwrap_or(f64::INFINITY);
        let weights: Vec<f64> = data
            .points
            .iter()
            .map(|p| {
                if tau.is_finite() {
                    (-(at_time - p.t) / tau).exp()
                } else {
                    1.0
                }
            })
            .collect();
        let total = weights.iter().sum();
        Ok(Oracle {
            points: &data.points,
            metric,
            weights,
            total,
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.total
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight of the dataset within distance `r` of `p`.
    pub fn mass_within(&self, p: &Point, r: f64) -> Result<f64> {
        let mut mass = 0.0;
        for (x, w) in self.points.iter().zip(&self.weights) {
            if self.metric.distance(x, p)? <= r {
                mass += w;
            }
        }
        Ok(mass)
    }

    pub fn is_dense(&self, p: &Point, r: f64, f: f64) -> Result<bool> {
        check_frequency(f)?;
        Ok(self.mass_within(p, r)? >= f * self.total)
    }

    /// Smallest `r` with `is_dense(p, r, f)`: the weighted `f`-quantile of
    /// the distances from `p`.
    pub fn r_f(&self, p: &Point, f: f64) -> Result<f64> {
        check_frequency(f)?;
        let mut by_distance: Vec<(f64, f64)> = self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(x, &w)| Ok((self.metric.distance(x, p)?, w)))
            .collect::<Result<_>>()?;
        by_distance.sort_by(|a, b| a.0.total_cmp(&b.0));
        let distances: Vec<f64> = by_distance.iter().map(|d| d.0).collect();

        let need = f * self.total;
        let mut cum = 0.0;
        let mut idx = by_distance.len() - 1;
        for (i, (_, w)) in by_distance.iter().enumerate() {
            cum += w;
            if cum >= need {
                idx = i;
                break;
            }
        }
        // The quantile above sums in distance order while is_dense sums in
        // dataset order. Walk to the neighbouring distinct distance if float
        // rounding makes the two disagree, so the pair stays exactly adjoint.
        while !self.is_dense(p, distances[idx], f)? && idx + 1 < distances.len() {
            idx = next_distinct(&distances, idx);
        }
        while idx > 0 {
            let prev = prev_distinct(&distances, idx);
            match prev {
                Some(j) if self.is_dense(p, distances[j], f)? => idx = j,
                _ => break,
            }
        }
        Ok(distances[idx])
    }

    /// Whether `out` is backed by at least `(1 - epsilon) * f` of the weight
    /// within its radius.
    pub fn verify_output(&self, out: &Output, epsilon: f64, f: f64) -> Result<bool> {
        let need = acceptance_threshold(epsilon, f, self.total);
        Ok(self.mass_within(&out.point, out.radius)? >= need)
    }

    /// Dense coverage and sparse leakage of a set of outputs, evaluated at
    /// every dataset point.
    pub fn coverage_stats(&self, outputs: &[Output], f: f64, r: f64, epsilon: f64) -> Result<CoverageStats> {
        check_frequency(f)?;
        let dense_need = f * self.total;
        let sparse_need = acceptance_threshold(epsilon, f, self.total);
        let flags: Vec<(bool, bool, bool)> = self
            .points
            .par_iter()
            .map(|p| {
                let mass = self.mass_within(p, r)?;
                let mut near = false;
                for o in outputs {
                    if self.metric.distance(&o.point, p)? <= r {
                        near = true;
                        break;
                    }
                }
                Ok((mass >= dense_need, mass < sparse_need, near))
            })
            .collect::<Result<_>>()?;
        let mut stats = CoverageStats::default();
        for (dense, sparse, near) in flags {
            if dense {
                stats.dense_total += 1;
                stats.dense_covered += near as usize;
            }
            if sparse {
                stats.sparse_total += 1;
                stats.sparse_near += near as usize;
            }
        }
        Ok(stats)
    }
}

fn next_distinct(d: &[f64], i: usize) -> usize {
    let mut j = i + 1;
    while j + 1 < d.len() && d[j] == d[i] {
        j += 1;
    }
    j
}

fn prev_distinct(d: &[f64], i: usize) -> Option<usize> {
    (0..i).rev().find(|&j| d[j] != d[i])
}

fn check_frequency(f: f64) -> Result<()> {
    if f > 0.0 && f <= 1.0 {
        Ok(())
    } else {
        Err(Error::arg("f", format!("must lie in (0, 1], got {f}")))
    }
}

/// Counts behind the two coverage fractions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverageStats {
    pub dense_total: usize,
    pub dense_covered: usize,
    pub sparse_total: usize,
    pub sparse_near: usize,
}

impl CoverageStats {
    /// Share of `(r, f)`-dense points with an output within `r`; 0 when no
    /// point is dense.
    pub fn dense_covered_fraction(&self) -> f64 {
        ratio(self.dense_covered, self.dense_total)
    }

    /// Share of `(r, (1 - epsilon) f)`-sparse points with an output within `r`.
    pub fn sparse_near_fraction(&self) -> f64 {
        ratio(self.sparse_near, self.sparse_total)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn is_dense(
    data: &Dataset,
    p: &Point,
    r: f64,
    f: f64,
    metric: &MetricSpec,
    tau: Option<f64>,
    at_time: f64,
) -> Result<bool> {
    Oracle::new(data, metric, tau, at_time)?.is_dense(p, r, f)
}

pub fn r_f(data: &Dataset, p: &Point, f: f64, metric: &MetricSpec, tau: Option<f64>, at_time: f64) -> Result<f64> {
    Oracle::new(data, metric, tau, at_time)?.r_f(p, f)
}

/// Checks an output of a sketch configured by `config` and fed exactly `data`.
pub fn verify_output(data: &Dataset, out: &Output, config: &HacConfig, f: f64, query_time: f64) -> Result<bool> {
    Oracle::new(data, &config.metric, config.tau, query_time)?.verify_output(out, config.epsilon, f)
}

/// Coverage with unit weights.
pub fn coverage_stats(
    data: &Dataset,
    outputs: &[Output],
    f: f64,
    r: f64,
    epsilon: f64,
    metric: &MetricSpec,
) -> Result<CoverageStats> {
    Oracle::new(data, metric, None, 0.0)?.coverage_stats(outputs, f, r, epsilon)
}
