//! Reference methods for finding the main entities of a labelled dataset,
//! and the scoring used to compare them.

use std::collections::{HashMap, HashSet};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricSpec;
use crate::oracle::Dataset;
use crate::point::Point;

/// `k` points drawn uniformly without replacement, in draw order.
pub fn random_sample(data: &Dataset, k: usize, seed: u64) -> Result<Vec<Point>> {
    if k > data.len() {
        return Err(Error::arg("k", format!("{k} exceeds the {} available points", data.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(index::sample(&mut rng, data.len(), k)
        .into_iter()
        .map(|i| data.points()[i].clone())
        .collect())
}

/// Visits points in a random order and keeps each one that is at least `r`
/// from everything kept before it. The result is in keep order.
pub fn maximal_independent_set(data: &Dataset, r: f64, seed: u64, metric: &MetricSpec) -> Result<Vec<Point>> {
    if !(r > 0.0) {
        return Err(Error::arg("r", format!("must be positive, got {r}")));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut kept: Vec<Point> = Vec::new();
    for i in order {
        let p = &data.points()[i];
        let mut far = true;
        for q in &kept {
            if metric.distance(p, q)? < r {
                far = false;
                break;
            }
        }
        if far {
            kept.push(p.clone());
        }
    }
    Ok(kept)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub found: usize,
    pub wrong: usize,
    pub duplicate: usize,
    pub missing: usize,
}

impl EvalReport {
    pub fn found_fraction(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.found as f64 / self.n as f64
        }
    }
}

/// Entity labels ordered by how often they occur, most frequent first; ties
/// go to the label seen first. Noise and unlabelled points are skipped.
pub fn entities_by_frequency(data: &Dataset) -> Vec<String> {
    let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
    for (i, p) in data.points().iter().enumerate() {
        if p.is_noise() {
            continue;
        }
        if let Some(l) = p.label.as_deref() {
            counts.entry(l).or_insert((0, i)).0 += 1;
        }
    }
    let mut ranked: Vec<(&str, (usize, usize))> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.1 .1.cmp(&b.1 .1)));
    ranked.into_iter().map(|(l, _)| l.to_string()).collect()
}

/// Scores the first `n` outputs against the `n` most frequent entities.
///
/// Each output takes the label of its nearest labelled data point, provided
/// that point lies within `match_threshold`. An output counts as `found` the
/// first time it hits a top-`n` entity, as `duplicate` when it hits one
/// already found, and as `wrong` otherwise (noise, no match, or an entity
/// outside the top `n`). Outputs short of `n` are `missing`.
pub fn eval_top_n(
    outputs: &[Point],
    data: &Dataset,
    n: usize,
    match_threshold: f64,
    metric: &MetricSpec,
) -> Result<EvalReport> {
    let top: HashSet<String> = entities_by_frequency(data).into_iter().take(n).collect();
    let mut report = EvalReport { n, ..Default::default() };
    let mut seen = HashSet::new();
    for out in outputs.iter().take(n) {
        let mut best: Option<(f64, &Point)> = None;
        for p in data.points().iter().filter(|p| p.label.is_some()) {
            let d = metric.distance(out, p)?;
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, p));
            }
        }
        let label = best
            .filter(|(d, _)| *d <= match_threshold)
            .and_then(|(_, p)| p.label.clone());
        match label {
            Some(l) if top.contains(&l) => {
                if seen.insert(l) {
                    report.found += 1;
                } else {
                    report.duplicate += 1;
                }
            }
            _ => report.wrong += 1,
        }
    }
    report.missing = n - outputs.len().min(n);
    Ok(report)
}
