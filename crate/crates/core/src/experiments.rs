//! End-to-end scenarios shared by the benchmark command and the acceptance
//! tests. Seeds run in parallel; each report lists per-seed rows and
//! aggregates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{eval_top_n, maximal_independent_set, random_sample, EvalReport};
use crate::config::HacConfig;
use crate::datagen::{character_profile, gaussian_mixture_stream, household_stream, HouseholdSpec, TruthAction};
use crate::error::Result;
use crate::metric::{euclidean, MetricSpec};
use crate::oracle::{coverage_stats, CoverageStats};
use crate::point::Point;
use crate::postprocess::DedupPolicy;
use crate::sketch::Sketch;
use crate::tracker::{query_top_human, run_tracker, TrackerConfig};

pub const SCENARIOS: [&str; 3] = ["characters", "guarantees", "household"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharactersParams {
    pub points: usize,
    pub f0: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Query radius.
    pub r: f64,
    /// Duplicate radius, also the independence radius of the MIS baseline.
    pub r_d: f64,
    pub ns: Vec<usize>,
}

impl Default for CharactersParams {
    fn default() -> Self {
        CharactersParams {
            points: 5000,
            f0: 0.02,
            epsilon: 0.5,
            delta: 0.5,
            r: 0.5,
            r_d: 0.65,
            ns: vec![1, 5, 8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub n: usize,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResults {
    pub seed: u64,
    pub results: Vec<MethodResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: String,
    pub n: usize,
    pub mean_found_fraction: f64,
    pub mean_wrong: f64,
    pub mean_duplicate: f64,
    pub mean_missing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharactersReport {
    pub params: CharactersParams,
    pub per_seed: Vec<SeedResults>,
    pub aggregate: Vec<AggregateRow>,
}

impl CharactersReport {
    pub fn mean_found(&self, method: &str, n: usize) -> Option<f64> {
        self.aggregate
            .iter()
            .find(|r| r.method == method && r.n == n)
            .map(|r| r.mean_found_fraction)
    }
}

pub const METHODS: [&str; 3] = ["hac", "random", "mis"];

pub fn characters(seeds: &[u64], params: &CharactersParams) -> Result<CharactersReport> {
    let metric = MetricSpec::Euclidean;
    let per_seed = seeds
        .par_iter()
        .map(|&seed| {
            let data = gaussian_mixture_stream(&character_profile(params.points, seed))?;
            let cfg = HacConfig::new(params.f0, params.epsilon, params.delta)
                .with_radii(params.r, 2.0, 0)
                .with_seed(seed);
            let mut sketch = Sketch::new(cfg)?;
            sketch.process_all(data.points())?;
            let now = data.last_time().unwrap_or(0.0);
            let mis = maximal_independent_set(&data, params.r_d, seed ^ 0x4d49_5300, &metric)?;
            let mut results = Vec::new();
            for &n in &params.ns {
                let hac: Vec<Point> = sketch
                    .query_top_k_by_frequency(0, n, now, &DedupPolicy::Threshold { r_d: params.r_d })?
                    .outputs
                    .into_iter()
                    .map(|o| o.point)
                    .collect();
                let random = random_sample(&data, n.min(data.len()), seed ^ 0x5241_4e44)?;
                let picks: [(&str, &[Point]); 3] = [("hac", &hac), ("random", &random), ("mis", &mis)];
                for (method, outs) in picks {
                    let report = eval_top_n(outs, &data, n, params.r, &metric)?;
                    results.push(MethodResult { method: method.into(), n, report });
                }
            }
            Ok(SeedResults { seed, results })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut aggregate = Vec::new();
    for method in METHODS {
        for &n in &params.ns {
            let rows: Vec<&EvalReport> = per_seed
                .iter()
                .flat_map(|s| &s.results)
                .filter(|r| r.method == method && r.n == n)
                .map(|r| &r.report)
                .collect();
            let mean = |f: &dyn Fn(&EvalReport) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / rows.len().max(1) as f64;
            aggregate.push(AggregateRow {
                method: method.into(),
                n,
                mean_found_fraction: mean(&|r| r.found_fraction()),
                mean_wrong: mean(&|r| r.wrong as f64),
                mean_duplicate: mean(&|r| r.duplicate as f64),
                mean_missing: mean(&|r| r.missing as f64),
            });
        }
    }
    Ok(CharactersReport { params: params.clone(), per_seed, aggregate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuaranteesParams {
    pub points: usize,
    pub f: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub r: f64,
}

impl Default for GuaranteesParams {
    fn default() -> Self {
        GuaranteesParams { points: 5000, f: 0.02, epsilon: 0.5, delta: 0.5, r: 0.4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuaranteesSeed {
    pub seed: u64,
    pub outputs: usize,
    pub stats: CoverageStats,
    pub dense_covered: f64,
    pub sparse_near: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuaranteesReport {
    pub params: GuaranteesParams,
    pub per_seed: Vec<GuaranteesSeed>,
    pub mean_dense_covered: f64,
    pub mean_sparse_near: f64,
}

/// Dense coverage and sparse leakage of a dense query on the 128-d entity
/// mixture.
pub fn guarantees(seeds: &[u64], params: &GuaranteesParams) -> Result<GuaranteesReport> {
    let metric = MetricSpec::Euclidean;
    let per_seed = seeds
        .par_iter()
        .map(|&seed| {
            let data = gaussian_mixture_stream(&character_profile(params.points, seed))?;
            let cfg = HacConfig::new(params.f, params.epsilon, params.delta)
                .with_radii(params.r, 2.0, 0)
                .with_seed(seed);
            let mut sketch = Sketch::new(cfg)?;
            sketch.process_all(data.points())?;
            let out = sketch.query_dense(params.f, data.last_time().unwrap_or(0.0))?;
            let stats = coverage_stats(&data, &out.outputs, params.f, params.r, params.epsilon, &metric)?;
            Ok(GuaranteesSeed {
                seed,
                outputs: out.len(),
                dense_covered: stats.dense_covered_fraction(),
                sparse_near: stats.sparse_near_fraction(),
                stats,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = per_seed.len().max(1) as f64;
    Ok(GuaranteesReport {
        params: params.clone(),
        mean_dense_covered: per_seed.iter().map(|s| s.dense_covered).sum::<f64>() / n,
        mean_sparse_near: per_seed.iter().map(|s| s.sparse_near).sum::<f64>() / n,
        per_seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRow {
    pub object: usize,
    pub moves: usize,
    /// Human with the most scripted actions on the object.
    pub true_top: Option<usize>,
    pub predicted_top: Option<usize>,
    /// 1-based rank of `true_top` in the prediction.
    pub rank_of_true: Option<usize>,
    pub ranked_humans: usize,
    /// Records whose object feature matches this object.
    pub matching_records: usize,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholdSeed {
    pub seed: u64,
    pub records: usize,
    pub objects: Vec<ObjectRow>,
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholdReport {
    pub tracker: TrackerConfig,
    pub per_seed: Vec<HouseholdSeed>,
    pub min_successes: usize,
}

/// Runs the tracker on the default household scenario. An object counts as
/// a success when its predicted top human is the true one, or, for an
/// untouched object, when no record mentions it at all.
pub fn household(seeds: &[u64], tracker: &TrackerConfig) -> Result<HouseholdReport> {
    let per_seed = seeds
        .par_iter()
        .map(|&seed| {
            let spec = HouseholdSpec::default_scenario(seed);
            let streams = household_stream(&spec)?;
            let cfg = TrackerConfig { seed, ..tracker.clone() };
            let records = run_tracker(streams.objects.points(), streams.faces.points(), &cfg)?;
            let objects: Vec<ObjectRow> = (0..spec.num_objects)
                .map(|object| {
                    let mut counts = vec![0usize; spec.num_humans];
                    for e in streams.truth.iter().filter(|e| e.object == object && e.action == TruthAction::Pick) {
                        counts[e.human] += 1;
                    }
                    let moves: usize = counts.iter().sum();
                    let true_top = (moves > 0).then(|| {
                        // first index of the maximum
                        let max = *counts.iter().max().unwrap();
                        counts.iter().position(|&c| c == max).unwrap()
                    });
                    let ranking = query_top_human(
                        &records,
                        &streams.object_prototypes[object],
                        &streams.human_prototypes,
                        cfg.feature_threshold,
                        cfg.face_threshold,
                    );
                    let predicted_top = ranking.first().map(|r| r.0);
                    let rank_of_true = true_top.and_then(|h| ranking.iter().position(|r| r.0 == h).map(|i| i + 1));
                    let prototype = &streams.object_prototypes[object];
                    let matching_records = records
                        .iter()
                        .filter(|r| euclidean(&r.object_feature, prototype) <= cfg.feature_threshold)
                        .count();
                    let success = match true_top {
                        Some(h) => predicted_top == Some(h),
                        None => matching_records == 0,
                    };
                    ObjectRow {
                        object,
                        moves,
                        true_top,
                        predicted_top,
                        rank_of_true,
                        ranked_humans: ranking.len(),
                        matching_records,
                        success,
                    }
                })
                .collect();
            Ok(HouseholdSeed {
                seed,
                records: records.len(),
                successes: objects.iter().filter(|o| o.success).count(),
                objects,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HouseholdReport {
        tracker: tracker.clone(),
        min_successes: per_seed.iter().map(|s| s.successes).min().unwrap_or(0),
        per_seed,
    })
}
