//! The twelve acceptance criteria. Each test prints one `PASS`/`FAIL` line
//! before asserting, so `cargo test --test acceptance -- --nocapture` gives a
//! compact scorecard.

use std::time::Instant;

use hac_core::baselines::entities_by_frequency;
use hac_core::datagen::{gaussian_mixture_stream, Means, MixtureSpec};
use hac_core::experiments::{self, CharactersParams, GuaranteesParams};
use hac_core::tracker::TrackerConfig;
use hac_core::{
    dedup_theorem, merge_outputs, Dataset, DedupPolicy, HacConfig, MetricSpec, Oracle, Output, OutputSet,
    Point, Sketch,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(id: u32, name: &str, pass: bool, started: Instant, detail: String) {
    println!(
        "criterion {id:>2} {:<4} {name} ({detail}; {:.1}s)",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

const E: MetricSpec = MetricSpec::Euclidean;

/// Three tight 2-D clusters plus a wide uniform noise field.
fn planar_mixture(n: usize, seed: u64) -> (MixtureSpec, Dataset) {
    let spec = MixtureSpec {
        k: 3,
        dims: 2,
        means: Means::Explicit {
            means: vec![vec![0.0, 0.0], vec![6.0, 0.0], vec![0.0, 6.0]],
        },
        sigma: 0.15,
        weights: vec![0.3, 0.2, 0.1],
        noise_fraction: 0.4,
        n,
        seed,
    };
    let data = gaussian_mixture_stream(&spec).unwrap();
    (spec, data)
}

/// Radii 0.01 to 0.16.
fn planar_config(seed: u64) -> HacConfig {
    HacConfig::new(0.05, 0.5, 0.5).with_radii(0.01, 2.0, 4).with_seed(seed)
}

const PREFIXES: [usize; 4] = [500, 1000, 1500, 2000];
const FREQS: [f64; 3] = [0.05, 0.1, 0.2];

struct PlanarRun {
    data: Dataset,
    /// (prefix length, f, outputs)
    queries: Vec<(usize, f64, Vec<Output>)>,
}

fn planar_runs() -> Vec<PlanarRun> {
    (0..100u64)
        .map(|seed| {
            let (_, data) = planar_mixture(2000, seed);
            let mut sketch = Sketch::new(planar_config(seed)).unwrap();
            let mut queries = Vec::new();
            let mut fed = 0;
            for &prefix in &PREFIXES {
                sketch.process_all(&data.points()[fed..prefix]).unwrap();
                fed = prefix;
                let now = data.points()[prefix - 1].t;
                for &f in &FREQS {
                    queries.push((prefix, f, sketch.query_dense(f, now).unwrap().outputs));
                }
            }
            PlanarRun { data, queries }
        })
        .collect()
}

#[test]
fn c01_deterministic_admissibility() {
    let started = Instant::now();
    let runs = planar_runs();
    let (mut checked, mut failed) = (0usize, 0usize);
    for run in &runs {
        for (prefix, f, outputs) in &run.queries {
            let data = run.data.prefix(*prefix);
            let oracle = Oracle::new(&data, &E, None, data.last_time().unwrap()).unwrap();
            for out in outputs {
                checked += 1;
                if !oracle.verify_output(out, 0.5, *f).unwrap() {
                    failed += 1;
                }
            }
        }
    }
    let pass = failed == 0 && checked > 0;
    verdict(1, "deterministic admissibility", pass, started, format!("{checked} outputs over 100 runs, {failed} inadmissible"));
}

#[test]
fn c02_sparse_rejection() {
    let started = Instant::now();
    let runs = planar_runs();
    let cfg = planar_config(0);
    let delta_radius = 5.0 * cfg.r_max();
    let (mut probes, mut violations) = (0usize, 0usize);
    for (seed, run) in runs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed as u64);
        for (prefix, f, outputs) in &run.queries {
            let data = run.data.prefix(*prefix);
            let oracle = Oracle::new(&data, &E, None, data.last_time().unwrap()).unwrap();
            // candidate probes across the noise field; keep the certified sparse ones
            for _ in 0..10 {
                let p = Point::new(0.0, vec![rng.random_range(-1.0..7.0), rng.random_range(-1.0..7.0)]);
                if oracle.is_dense(&p, delta_radius, 0.5 * f).unwrap() {
                    continue;
                }
                probes += 1;
                for out in outputs {
                    if E.distance(&out.point, &p).unwrap() <= delta_radius - out.radius {
                        violations += 1;
                    }
                }
            }
        }
    }
    let pass = violations == 0 && probes > 1000;
    verdict(2, "sparse rejection", pass, started, format!("{probes} certified sparse probes, {violations} outputs too close"));
}

/// 2000 points: `f * n` of them uniform in the unit disk around the origin,
/// the rest uniform on a 100 x 100 square, in random order.
fn planted_disk(f: f64, seed: u64) -> Dataset {
    let n = 2000;
    let inside = (f * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            if i < inside {
                let (rad, ang) = (rng.random::<f64>().sqrt(), rng.random_range(0.0..std::f64::consts::TAU));
                vec![rad * ang.cos(), rad * ang.sin()]
            } else {
                vec![rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)]
            }
        })
        .collect();
    xs.shuffle(&mut rng);
    Dataset::new(xs.into_iter().enumerate().map(|(i, x)| Point::new(i as f64, x)).collect()).unwrap()
}

#[test]
fn c03_coverage_with_doubled_radius() {
    let started = Instant::now();
    let (f, r) = (0.05, 1.0);
    let probe = Point::new(0.0, vec![0.0, 0.0]);
    let trials = 400;
    let (mut hits, mut certified) = (0usize, 0usize);
    for seed in 0..trials {
        let data = planted_disk(f, seed);
        let oracle = Oracle::new(&data, &E, None, 0.0).unwrap();
        if !oracle.is_dense(&probe, r, f).unwrap() {
            continue;
        }
        certified += 1;
        // single radius 2r
        let cfg = HacConfig::new(f, 0.5, 0.5).with_radii(2.0 * r, 2.0, 0).with_seed(seed);
        let mut sketch = Sketch::new(cfg).unwrap();
        sketch.process_all(data.points()).unwrap();
        let out = sketch.query_dense(f, data.last_time().unwrap()).unwrap();
        if out.outputs.iter().any(|o| E.distance(&o.point, &probe).unwrap() <= r) {
            hits += 1;
        }
    }
    let rate = hits as f64 / certified as f64;
    let bar = (1.0 - 0.5 * f) - 0.02;
    let pass = certified == trials as usize && rate >= bar;
    verdict(3, "coverage at radius 2r", pass, started, format!("{hits}/{certified} trials covered = {rate:.4}, bar {bar:.3}"));
}

#[test]
fn c04_coverage_within_three_r_f() {
    let started = Instant::now();
    let f = 0.05;
    let delta = 0.5;
    let trials = 200;
    let mut good_trials = 0;
    let mut probes_total = 0;
    for seed in 0..trials {
        let (_, data) = planar_mixture(2000, 5000 + seed);
        let cfg = HacConfig::new(f, 0.5, delta).with_radii(0.05, 2.0, 6).with_seed(seed);
        let limit = cfg.r_max() / (2.0 * cfg.gamma);
        let mut sketch = Sketch::new(cfg).unwrap();
        sketch.process_all(data.points()).unwrap();
        let now = data.last_time().unwrap();
        let outputs = sketch.query_dense(f, now).unwrap().outputs;
        let oracle = Oracle::new(&data, &E, None, now).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut probes = Vec::new();
        while probes.len() < 5 {
            let p = &data.points()[rng.random_range(0..data.len())];
            let rf = oracle.r_f(p, f).unwrap();
            if rf <= limit {
                probes.push((p.clone(), rf));
            }
        }
        probes_total += probes.len();
        let all_covered = probes.iter().all(|(p, rf)| {
            outputs
                .iter()
                .any(|o| E.distance(&o.point, p).unwrap() <= 3.0 * rf)
        });
        good_trials += all_covered as usize;
    }
    let rate = good_trials as f64 / trials as f64;
    let bar = (1.0 - delta) - 0.05;
    verdict(4, "coverage within 3 r_f", rate >= bar, started, format!("{good_trials}/{trials} trials with all 5 probes covered ({probes_total} probes) = {rate:.3}, bar {bar:.2}"));
}

/// `m = ceil(ln 2 / 0.9) = 1`.
fn single_slot_config(seed: u64) -> HacConfig {
    let cfg = HacConfig::new(1.0, 0.9, 0.5).with_seed(seed);
    assert_eq!(cfg.slot_count(), 1);
    cfg
}

fn held_index(sketch: &Sketch) -> usize {
    sketch.slots()[0].held().unwrap().x[0] as usize
}

#[test]
fn c05_reservoir_uniformity() {
    let started = Instant::now();
    let (n, runs) = (100, 50_000u64);
    let points: Vec<Point> = (0..n).map(|i| Point::new(i as f64, vec![i as f64])).collect();
    let mut counts = vec![0usize; n];
    for seed in 0..runs {
        let mut sketch = Sketch::new(single_slot_config(seed)).unwrap();
        sketch.process_all(&points).unwrap();
        counts[held_index(&sketch)] += 1;
    }
    let worst = counts
        .iter()
        .map(|&c| (c as f64 / runs as f64 - 1.0 / n as f64).abs())
        .fold(0.0, f64::max);
    verdict(5, "reservoir uniformity", worst <= 0.002, started, format!("max deviation {worst:.5} over {runs} runs"));
}

#[test]
fn c06_decay_exactness() {
    let started = Instant::now();
    let tau = 1.5;
    let times = [0.0, 0.7, 2.3];
    let points: Vec<Point> = times.iter().enumerate().map(|(i, &t)| Point::new(t, vec![i as f64])).collect();

    // Walk the hop tree with the sketch's own probabilities.
    let mut sketch = Sketch::new(single_slot_config(0).with_tau(tau)).unwrap();
    let mut hop = Vec::new();
    for p in &points {
        hop.push(sketch.hop_probability(p.t).unwrap());
        sketch.process(p).unwrap();
    }
    let tree = [(1.0 - hop[1]) * (1.0 - hop[2]), hop[1] * (1.0 - hop[2]), hop[2]];
    let weights: Vec<f64> = times.iter().map(|t| (-(times[2] - t) / tau).exp()).collect();
    let total: f64 = weights.iter().sum();
    let exact_err = tree
        .iter()
        .zip(&weights)
        .map(|(p, w)| (p - w / total).abs())
        .fold(0.0, f64::max);

    // Statistical version on 50 points.
    let n = 50;
    let runs = 50_000u64;
    let tau = 5.0;
    let stream: Vec<Point> = (0..n).map(|i| Point::new(i as f64 * 0.5, vec![i as f64])).collect();
    let last = stream[n - 1].t;
    let w: Vec<f64> = stream.iter().map(|p| (-(last - p.t) / tau).exp()).collect();
    let wsum: f64 = w.iter().sum();
    let mut counts = vec![0usize; n];
    for seed in 0..runs {
        let mut s = Sketch::new(single_slot_config(seed).with_tau(tau)).unwrap();
        s.process_all(&stream).unwrap();
        counts[held_index(&s)] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(&w)
        .map(|(&c, wi)| {
            let e = runs as f64 * wi / wsum;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let df = (n - 1) as f64;
    let chi2_bar = df + 3.0 * (2.0 * df).sqrt();

    let pass = exact_err <= 1e-12 && chi2 <= chi2_bar;
    verdict(6, "decay exactness", pass, started, format!("tree error {exact_err:.2e}; chi2 {chi2:.1} vs bar {chi2_bar:.1} over {runs} runs"));
}

#[test]
fn c07_high_dimension_coverage() {
    let started = Instant::now();
    let seeds: Vec<u64> = (0..10).collect();
    let params = GuaranteesParams::default();
    assert_eq!((params.points, params.f), (5000, 0.02));
    let report = experiments::guarantees(&seeds, &params).unwrap();
    let pass = report.mean_dense_covered >= 0.90 && report.mean_sparse_near <= 0.10;
    verdict(
        7,
        "high-dimension coverage",
        pass,
        started,
        format!("dense covered {:.4}, sparse near {:.4} at r = {}", report.mean_dense_covered, report.mean_sparse_near, params.r),
    );
}

#[test]
fn c08_character_recovery() {
    let started = Instant::now();
    let seeds: Vec<u64> = (0..25).collect();
    let mut params = CharactersParams::default();
    params.r_d = 1.3 * params.r;
    let report = experiments::characters(&seeds, &params).unwrap();
    let mut beats = true;
    let mut detail = Vec::new();
    for &n in &params.ns {
        let hac = report.mean_found("hac", n).unwrap();
        let random = report.mean_found("random", n).unwrap();
        let mis = report.mean_found("mis", n).unwrap();
        beats &= hac > random && hac > mis;
        detail.push(format!("n={n}: hac {hac:.3} random {random:.3} mis {mis:.3}"));
    }
    let strong_seeds = report
        .per_seed
        .iter()
        .filter(|s| s.results.iter().any(|r| r.method == "hac" && r.n == 8 && r.report.found >= 7))
        .count();
    detail.push(format!("found >= 7/8 in {strong_seeds}/25 seeds"));
    verdict(8, "character recovery", beats && strong_seeds >= 20, started, detail.join("; "));
}

#[test]
fn c09_theorem_postprocessing() {
    let started = Instant::now();
    let (f, eps) = (0.05, 0.5);
    let gamma = planar_config(0).gamma;
    let bound = (1.0 + 2.0 * eps) / f;
    let mut worst_size = 0;
    let (mut overlaps, mut uncovered, mut probes, mut unverified_runs) = (0, 0, 0, 0);
    for seed in 0..100u64 {
        let (spec, data) = planar_mixture(2000, 7000 + seed);
        let cfg = HacConfig::new(f, eps, 0.5).with_radii(0.05, 2.0, 6).with_seed(seed);
        let mut sketch = Sketch::new(cfg).unwrap();
        sketch.process_all(data.points()).unwrap();
        let now = data.last_time().unwrap();
        let raw = sketch.query_dense(f, now).unwrap().outputs;
        let oracle = Oracle::new(&data, &E, None, now).unwrap();
        if !raw.iter().all(|o| oracle.verify_output(o, eps, f).unwrap()) {
            unverified_runs += 1;
            continue;
        }
        let kept = dedup_theorem(&raw, &E).unwrap();
        worst_size = worst_size.max(kept.len());
        for (i, a) in kept.iter().enumerate() {
            for b in &kept[i + 1..] {
                if E.distance(&a.point, &b.point).unwrap() <= a.radius + b.radius {
                    overlaps += 1;
                }
            }
        }
        // planted dense probes: the cluster centers
        for mean in spec.cluster_means().unwrap() {
            let p = Point::new(0.0, mean);
            let rf = oracle.r_f(&p, f).unwrap();
            probes += 1;
            let reach = (4.0 * gamma + 3.0) * rf;
            if !kept.iter().any(|o| E.distance(&o.point, &p).unwrap() <= reach) {
                uncovered += 1;
            }
        }
    }
    let pass = worst_size as f64 <= bound && overlaps == 0 && uncovered == 0 && unverified_runs == 0;
    verdict(
        9,
        "theorem post-processing",
        pass,
        started,
        format!("max kept {worst_size} (bound {bound}), {overlaps} overlapping pairs, {uncovered}/{probes} probes uncovered, {unverified_runs} unverified runs"),
    );
}

#[test]
fn c10_memory_bound() {
    let started = Instant::now();
    let cfg = HacConfig::new(0.05, 0.5, 0.5).with_radii(0.01, 2.0, 4).with_seed(3);
    let mut sketch = Sketch::new(cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut feed = |s: &mut Sketch, from: usize, to: usize| {
        for i in from..to {
            let p = Point::new(i as f64, vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]);
            s.process(&p).unwrap();
        }
    };
    feed(&mut sketch, 0, 1_000);
    let small = (sketch.slots().len(), sketch.memory_cells());
    feed(&mut sketch, 1_000, 1_000_000);
    let large = (sketch.slots().len(), sketch.memory_cells());
    verdict(
        10,
        "memory bound",
        small == large && sketch.t_count() == 1_000_000,
        started,
        format!("slots/cells {small:?} after 10^3, {large:?} after 10^6"),
    );
}

#[test]
fn c11_entity_tracker() {
    let started = Instant::now();
    let seeds: Vec<u64> = (0..5).collect();
    let report = experiments::household(&seeds, &TrackerConfig::default()).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for s in &report.per_seed {
        let untouched_records: usize = s.objects.iter().filter(|o| o.moves == 0).map(|o| o.matching_records).sum();
        let touched_min_moves = s.objects.iter().filter(|o| o.moves > 0).map(|o| o.moves).min().unwrap();
        pass &= s.successes >= 8 && untouched_records == 0 && touched_min_moves >= 4;
        detail.push(format!("seed {}: {}/10, untouched records {untouched_records}", s.seed, s.successes));
    }
    verdict(11, "entity tracker", pass, started, detail.join("; "));
}

fn canonical(set: &OutputSet) -> String {
    serde_json::to_string(set).unwrap()
}

#[test]
fn c12_parallel_merge_fidelity() {
    let started = Instant::now();
    let mut mismatches = 0;
    let mut compared = 0;
    for seed in 0..20u64 {
        let (_, data) = planar_mixture(2000, 9000 + seed);
        let mut cfg = HacConfig::new(0.02, 0.5, 0.5).with_radii(0.01, 2.0, 6).with_seed(seed);
        assert_eq!(cfg.slot_count(), 461);
        if seed % 2 == 1 {
            cfg = cfg.with_tau(300.0);
        }
        let mut whole = Sketch::new(cfg.clone()).unwrap();
        whole.process_all(data.points()).unwrap();
        let mut parts = Sketch::split(cfg, 2 + (seed as usize % 3) * 2).unwrap();
        for part in &mut parts {
            part.process_all(data.points()).unwrap();
        }
        let now = data.last_time().unwrap();
        let queries: [&dyn Fn(&Sketch) -> OutputSet; 3] = [
            &|s| s.query_dense(0.05, now).unwrap(),
            &|s| s.query_top_k_by_frequency(3, 12, now, &DedupPolicy::None).unwrap(),
            &|s| s.query_top_k_by_radius(0.1, 12, now, &DedupPolicy::None).unwrap(),
        ];
        for q in queries {
            let merged = merge_outputs(parts.iter().map(q).collect()).unwrap();
            compared += 1;
            if canonical(&merged) != canonical(&q(&whole)) {
                mismatches += 1;
            }
        }
    }
    verdict(12, "parallel merge fidelity", mismatches == 0, started, format!("{compared} merged queries, {mismatches} differ"));
}

#[test]
fn top_entities_are_the_planted_clusters() {
    // sanity check of the fixture used by several criteria
    let (_, data) = planar_mixture(2000, 1);
    assert_eq!(entities_by_frequency(&data), vec!["c0", "c1", "c2"]);
}
