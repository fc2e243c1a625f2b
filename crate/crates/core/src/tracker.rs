//! Two-timescale interaction tracker.
//!
//! Object detections feed two sketches over the composite feature/position
//! metric: one with a short timescale `tau_s`, one with a long timescale
//! `tau_l`. Every `step` seconds the short sketch is queried and compared
//! with its previous answer. Regions that appeared or disappeared are object
//! moves, unless the long sketch still sees the region as dense, in which
//! case the region is a stable object whose sample merely changed. Each
//! remaining event is credited to the faces seen on the same camera during
//! `[t - 2 tau_s, t - tau_s]`, each of `k` distinct faces getting `1 / k`.

use serde::{Deserialize, Serialize};

use crate::config::HacConfig;
use crate::error::{Error, Result};
use crate::metric::{euclidean, MetricSpec};
use crate::point::Point;
use crate::postprocess::dedup_threshold;
use crate::sketch::{Output, OutputOrder, Sketch};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerConfig {
    pub tau_s: f64,
    /// `None` means no decay.
    pub tau_l: Option<f64>,
    pub f: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub step: f64,
    /// Radius of the dense regions and of the snapshot matching, in scaled
    /// composite units.
    pub match_radius: f64,
    pub feature_scale: f64,
    pub position_scale: f64,
    pub feature_threshold: f64,
    pub face_threshold: f64,
    pub seed: u64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            tau_s: 10.0,
            tau_l: None,
            f: 0.025,
            epsilon: 0.5,
            delta: 0.5,
            step: 10.0,
            match_radius: 1.0,
            feature_scale: 1.0,
            position_scale: 0.3,
            feature_threshold: 1.0,
            face_threshold: 1.0,
            seed: 0,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, reason: &str| Err(Error::InvalidConfig { field, reason: reason.into() });
        if !(self.tau_s > 0.0 && self.tau_s.is_finite()) {
            return bad("tracker.tau_s", "must be a positive finite real");
        }
        if !self.tau_l.is_none_or(|l| l > self.tau_s) {
            return bad("tracker.tau_l", "must exceed tau_s");
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad("tracker.step", "must be positive");
        }
        for (field, v) in [
            ("tracker.match_radius", self.match_radius),
            ("tracker.feature_threshold", self.feature_threshold),
            ("tracker.face_threshold", self.face_threshold),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(field, "must be positive");
            }
        }
        self.sketch_config(self.tau_s)?.validate()
    }

    pub fn metric(&self) -> MetricSpec {
        MetricSpec::composite(
            MetricSpec::Euclidean,
            MetricSpec::Euclidean,
            self.feature_scale,
            self.position_scale,
        )
    }

    fn sketch_config(&self, tau: f64) -> Result<HacConfig> {
        let mut cfg = HacConfig::new(self.f, self.epsilon, self.delta)
            .with_radii(self.match_radius, 2.0, 0)
            .with_metric(self.metric())
            .with_seed(self.seed);
        cfg.tau = tau.is_finite().then_some(tau);
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Appeared,
    Disappeared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub object_feature: Vec<f64>,
    pub human_feature: Vec<f64>,
    pub score: f64,
    pub time: f64,
    pub position: Vec<f64>,
    pub kind: EventKind,
    /// The region reaches past its camera's coordinate band.
    pub multi_camera: bool,
}

/// A region that changed between two snapshots of the short sketch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerEvent {
    pub time: f64,
    pub kind: EventKind,
    pub output: Output,
    /// Dense on the long timescale too, hence not a move.
    pub stable: bool,
    /// Number of distinct faces it was credited to.
    pub faces: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackerRun {
    pub records: Vec<InteractionRecord>,
    pub events: Vec<TrackerEvent>,
}

fn near_any(o: &Output, others: &[Output], radius: f64, metric: &MetricSpec) -> Result<bool> {
    for q in others {
        if metric.distance(&o.point, &q.point)? <= radius {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Regions of `cur` with nothing from `prev` within `match_radius`, and
/// regions of `prev` with nothing from `cur` within it.
pub fn snapshot_diff(
    prev: &[Output],
    cur: &[Output],
    match_radius: f64,
    metric: &MetricSpec,
) -> Result<(Vec<Output>, Vec<Output>)> {
    let mut appeared = Vec::new();
    for o in cur {
        if !near_any(o, prev, match_radius, metric)? {
            appeared.push(o.clone());
        }
    }
    let mut disappeared = Vec::new();
    for o in prev {
        if !near_any(o, cur, match_radius, metric)? {
            disappeared.push(o.clone());
        }
    }
    Ok((appeared, disappeared))
}

/// Camera id encoded in the first position coordinate.
pub fn camera_of(p: &Point) -> Option<i64> {
    p.pos.as_ref().and_then(|pos| pos.first()).map(|c| c.round() as i64)
}

/// Distinct faces seen on the event's camera during `window` (inclusive).
/// Faces closer than `face_threshold` to an earlier face count as the same
/// person. Returns one record per person with score `1 / persons`.
pub fn attribute(
    event: &Output,
    kind: EventKind,
    time: f64,
    faces: &[Point],
    window: (f64, f64),
    face_threshold: f64,
    position_reach: f64,
) -> Vec<InteractionRecord> {
    let camera = camera_of(&event.point);
    let lo = faces.partition_point(|p| p.t < window.0);
    let hi = faces.partition_point(|p| p.t <= window.1);
    let mut people: Vec<&Point> = Vec::new();
    for face in &faces[lo..hi] {
        if camera_of(face) != camera {
            continue;
        }
        if !people.iter().any(|q| euclidean(&q.x, &face.x) <= face_threshold) {
            people.push(face);
        }
    }
    let position = event.point.pos.clone().unwrap_or_default();
    let multi_camera = position
        .first()
        .is_some_and(|c| (c - c.round()).abs() + position_reach >= 0.5);
    let score = 1.0 / people.len() as f64;
    people
        .into_iter()
        .map(|face| InteractionRecord {
            object_feature: event.point.x.clone(),
            human_feature: face.x.clone(),
            score,
            time,
            position: position.clone(),
            kind,
            multi_camera,
        })
        .collect()
}

pub fn run_tracker(objects: &[Point], faces: &[Point], cfg: &TrackerConfig) -> Result<Vec<InteractionRecord>> {
    Ok(run_tracker_detailed(objects, faces, cfg)?.records)
}

/// Like [`run_tracker`], also returning every snapshot event.
pub fn run_tracker_detailed(objects: &[Point], faces: &[Point], cfg: &TrackerConfig) -> Result<TrackerRun> {
    cfg.validate()?;
    if let Some(i) = faces.windows(2).position(|w| w[1].t < w[0].t) {
        return Err(Error::TimeRegression { last: faces[i].t, got: faces[i + 1].t });
    }
    let metric = cfg.metric();
    let mut short = Sketch::new(cfg.sketch_config(cfg.tau_s)?)?;
    let mut long = Sketch::new(cfg.sketch_config(cfg.tau_l.unwrap_or(f64::INFINITY))?)?;
    let mut run = TrackerRun::default();
    let mut prev: Vec<Output> = Vec::new();
    let Some(first) = objects.first() else {
        return Ok(run);
    };
    let mut next_query = first.t + cfg.step;

    let query = |q: f64, short: &Sketch, long: &Sketch, prev: &mut Vec<Output>, run: &mut TrackerRun| -> Result<()> {
        let mut cur = short.query_dense(cfg.f, q)?.outputs;
        OutputOrder::Frequency.sort(&mut cur);
        let cur = dedup_threshold(&cur, cfg.match_radius, &metric)?;
        let stable = long.query_dense(cfg.f, q)?.outputs;
        let (appeared, disappeared) = snapshot_diff(prev, &cur, cfg.match_radius, &metric)?;
        let window = (q - 2.0 * cfg.tau_s, q - cfg.tau_s);
        let events = appeared
            .into_iter()
            .map(|o| (EventKind::Appeared, o))
            .chain(disappeared.into_iter().map(|o| (EventKind::Disappeared, o)));
        for (kind, output) in events {
            let is_stable = near_any(&output, &stable, cfg.match_radius, &metric)?;
            let records = if is_stable {
                Vec::new()
            } else {
                let reach = cfg.match_radius * cfg.position_scale;
                attribute(&output, kind, q, faces, window, cfg.face_threshold, reach)
            };
            run.events.push(TrackerEvent { time: q, kind, output, stable: is_stable, faces: records.len() });
            run.records.extend(records);
        }
        *prev = cur;
        Ok(())
    };

    for p in objects {
        if let Some(last) = short.last_arrival() {
            if p.t < last {
                return Err(Error::TimeRegression { last, got: p.t });
            }
        }
        while p.t > next_query {
            query(next_query, &short, &long, &mut prev, &mut run)?;
            next_query += cfg.step;
        }
        short.process(p)?;
        long.process(p)?;
    }
    let end = short.last_arrival().unwrap_or(first.t);
    while next_query <= end {
        query(next_query, &short, &long, &mut prev, &mut run)?;
        next_query += cfg.step;
    }
    Ok(run)
}

/// Ranks humans by the summed score of records whose object feature lies
/// within `feature_threshold` of `object_query` and whose face lies within
/// `face_threshold` of the human's prototype. Ties go to the human whose
/// first matching record is earlier. Returns `(human index, score)`.
pub fn query_top_human(
    records: &[InteractionRecord],
    object_query: &[f64],
    human_prototypes: &[Vec<f64>],
    feature_threshold: f64,
    face_threshold: f64,
) -> Vec<(usize, f64)> {
    let mut totals: Vec<Option<(f64, f64)>> = vec![None; human_prototypes.len()];
    for r in records {
        if r.object_feature.len() != object_query.len()
            || euclidean(&r.object_feature, object_query) > feature_threshold
        {
            continue;
        }
        for (h, proto) in human_prototypes.iter().enumerate() {
            if proto.len() == r.human_feature.len() && euclidean(proto, &r.human_feature) <= face_threshold {
                let entry = totals[h].get_or_insert((0.0, r.time));
                entry.0 += r.score;
                entry.1 = entry.1.min(r.time);
            }
        }
    }
    let mut ranked: Vec<(usize, f64, f64)> = totals
        .into_iter()
        .enumerate()
        .filter_map(|(h, t)| t.map(|(score, first)| (h, score, first)))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.2.total_cmp(&b.2)).then(a.0.cmp(&b.0)));
    ranked.into_iter().map(|(h, s, _)| (h, s)).collect()
}
