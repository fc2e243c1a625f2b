//! The hop-and-count sketch.
//!
//! A sketch holds `m` independent sample slots. Each slot is a one-element
//! weighted reservoir: when a point arrives it adopts the point with
//! probability `1 / W` (where `W` is the decayed total weight of the stream,
//! `t` without decay), clearing its counters. Every slot then adds the
//! arriving point to the counter of the smallest radius `r0 * gamma^k` that
//! contains it. A slot whose cumulative count at some radius reaches
//! `(1 - epsilon) * f * W` is reported as a dense region of that radius.
//!
//! Counters of a decaying sketch are stored relative to the slot's
//! `last_decay_time` and brought forward lazily, so processing a point costs
//! one distance evaluation per slot.
//!
//! Every slot draws from its own ChaCha stream keyed by `(seed, slot_id)`.
//! A sketch restricted to a sub-range of slots (see [`Sketch::partition`])
//! therefore makes exactly the same decisions as those slots do inside the
//! full sketch, which lets slot ranges run on separate workers.

use std::cmp::Ordering;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{acceptance_threshold, bucket_for, HacConfig};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::postprocess::{self, DedupPolicy};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSlot {
    id: usize,
    held: Option<Point>,
    hop_time: f64,
    counters: Vec<f64>,
    last_decay_time: f64,
    rng: ChaCha8Rng,
}

impl SampleSlot {
    fn new(id: usize, seed: u64, buckets: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id as u64);
        SampleSlot {
            id,
            held: None,
            hop_time: 0.0,
            counters: vec![0.0; buckets],
            last_decay_time: 0.0,
            rng,
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn held(&self) -> Option<&Point> {
        self.held.as_ref()
    }

    pub fn hop_time(&self) -> f64 {
        self.hop_time
    }

    /// Raw counters, decayed up to [`Self::last_decay_time`].
    pub fn counters(&self) -> &[f64] {
        &self.counters
    }

    pub fn last_decay_time(&self) -> f64 {
        self.last_decay_time
    }

    fn hop(&mut self, point: &Point, t: f64) {
        self.held = Some(point.unlabeled());
        self.hop_time = t;
        self.counters.iter_mut().for_each(|c| *c = 0.0);
        self.last_decay_time = t;
    }

    fn bring_forward(&mut self, t: f64, tau: f64) {
        let factor = decay(t - self.last_decay_time, tau);
        if factor != 1.0 {
            self.counters.iter_mut().for_each(|c| *c *= factor);
        }
        self.last_decay_time = t;
    }

    /// Cumulative decayed counts at `t`, bucket by bucket.
    fn cumulative_at(&self, t: f64, tau: f64) -> impl Iterator<Item = f64> + '_ {
        let factor = decay(t - self.last_decay_time, tau);
        self.counters.iter().scan(0.0, move |acc, c| {
            *acc += c * factor;
            Some(*acc)
        })
    }
}

fn decay(dt: f64, tau: f64) -> f64 {
    if tau.is_finite() && dt > 0.0 {
        (-dt / tau).exp()
    } else {
        1.0
    }
}

/// A dense region reported by a query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Output {
    #[serde(flatten)]
    pub point: Point,
    pub radius_index: usize,
    pub radius: f64,
    #[serde(rename = "freq")]
    pub freq_estimate: f64,
    #[serde(rename = "slot")]
    pub slot_id: usize,
    pub hop_time: f64,
}

/// Sort order of an [`OutputSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputOrder {
    /// By slot id; what [`Sketch::query_dense`] returns.
    Slot,
    /// Decreasing frequency, then earlier hop, then slot id.
    Frequency,
    /// Increasing radius, then decreasing frequency, then earlier hop, then slot id.
    Radius,
}

impl OutputOrder {
    pub fn compare(self, a: &Output, b: &Output) -> Ordering {
        let by_freq = || {
            b.freq_estimate
                .total_cmp(&a.freq_estimate)
                .then(a.hop_time.total_cmp(&b.hop_time))
                .then(a.slot_id.cmp(&b.slot_id))
        };
        match self {
            OutputOrder::Slot => a.slot_id.cmp(&b.slot_id),
            OutputOrder::Frequency => by_freq(),
            OutputOrder::Radius => a.radius_index.cmp(&b.radius_index).then_with(by_freq),
        }
    }

    pub fn sort(self, outputs: &mut [Output]) {
        outputs.sort_by(|a, b| self.compare(a, b));
    }
}

/// The result of one query: outputs in a known order, optionally truncated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSet {
    pub query_time: f64,
    pub order: OutputOrder,
    pub limit: Option<usize>,
    pub outputs: Vec<Output>,
}

impl OutputSet {
    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }
}

/// Combines results queried from disjoint slot ranges of one stream.
///
/// Parts must come from the same query (same time, order and limit) and must
/// not be deduplicated yet; deduplicate the merged set instead. The result
/// equals the query on the unpartitioned sketch.
pub fn merge_outputs(parts: Vec<OutputSet>) -> Result<OutputSet> {
    let mut iter = parts.into_iter();
    let Some(mut merged) = iter.next() else {
        return Ok(OutputSet {
            query_time: 0.0,
            order: OutputOrder::Slot,
            limit: None,
            outputs: Vec::new(),
        });
    };
    for part in iter {
        if part.query_time.to_bits() != merged.query_time.to_bits() {
            return Err(Error::MergeMismatch(format!(
                "query times {} and {} differ",
                merged.query_time, part.query_time
            )));
        }
        if part.order != merged.order || part.limit != merged.limit {
            return Err(Error::MergeMismatch("parts come from different queries".into()));
        }
        merged.outputs.extend(part.outputs);
    }
    merged.order.sort(&mut merged.outputs);
    if let Some(k) = merged.limit {
        merged.outputs.truncate(k);
    }
    Ok(merged)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct Shape {
    features: usize,
    position: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sketch {
    config: HacConfig,
    #[serde(skip)]
    radii: Vec<f64>,
    total_slots: usize,
    slots: Vec<SampleSlot>,
    t_count: u64,
    total_weight: f64,
    last_arrival: Option<f64>,
    shape: Option<Shape>,
}

impl Sketch {
    pub fn new(config: HacConfig) -> Result<Self> {
        let m = {
            config.validate()?;
            config.slot_count()
        };
        Self::partition(config, 0..m)
    }

    /// A sketch that owns only the slots in `range` of the full `0..m` set.
    pub fn partition(mut config: HacConfig, range: Range<usize>) -> Result<Self> {
        config.validate()?;
        config.tau = config.tau.filter(|t| t.is_finite());
        let m = config.slot_count();
        if range.start > range.end || range.end > m {
            return Err(Error::arg(
                "range",
                format!("{range:?} is not a sub-range of 0..{m}"),
            ));
        }
        let buckets = config.bucket_count();
        let slots = range
            .map(|id| SampleSlot::new(id, config.seed, buckets))
            .collect();
        Ok(Sketch {
            radii: config.radii(),
            config,
            total_slots: m,
            slots,
            t_count: 0,
            total_weight: 0.0,
            last_arrival: None,
            shape: None,
        })
    }

    /// Splits the full slot set into `parts` contiguous partitions.
    pub fn split(config: HacConfig, parts: usize) -> Result<Vec<Sketch>> {
        config.validate()?;
        if parts == 0 {
            return Err(Error::arg("parts", "must be at least 1"));
        }
        let m = config.slot_count();
        let chunk = m.div_ceil(parts);
        (0..parts)
            .map(|i| {
                let start = (i * chunk).min(m);
                let end = ((i + 1) * chunk).min(m);
                Sketch::partition(config.clone(), start..end)
            })
            .collect()
    }

    pub(crate) fn restore_derived(&mut self) -> Result<()> {
        self.config.validate()?;
        self.radii = self.config.radii();
        let buckets = self.config.bucket_count();
        if self.total_slots != self.config.slot_count() {
            return Err(Error::Snapshot(format!(
                "slot total {} does not match config ({})",
                self.total_slots,
                self.config.slot_count()
            )));
        }
        if self.slots.len() > self.total_slots {
            return Err(Error::Snapshot("more slots than the config allows".into()));
        }
        for slot in &self.slots {
            if slot.counters.len() != buckets || slot.id >= self.total_slots {
                return Err(Error::Snapshot(format!("slot {} is malformed", slot.id)));
            }
        }
        Ok(())
    }

    pub fn config(&self) -> &HacConfig {
        &self.config
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn slots(&self) -> &[SampleSlot] {
        &self.slots
    }

    /// `m`, the slot count of the full sketch.
    pub fn total_slots(&self) -> usize {
        self.total_slots
    }

    /// Number of counter cells held by this sketch.
    pub fn memory_cells(&self) -> usize {
        self.slots.iter().map(|s| s.counters.len()).sum()
    }

    pub fn t_count(&self) -> u64 {
        self.t_count
    }

    /// Decayed total weight as of the last arrival.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn last_arrival(&self) -> Option<f64> {
        self.last_arrival
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t.is_nan() {
            return Err(Error::NonFinite);
        }
        match self.last_arrival {
            Some(last) if t < last => Err(Error::TimeRegression { last, got: t }),
            _ => Ok(()),
        }
    }

    /// Total weight at `t` of the points seen so far.
    pub fn weight_at(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(match self.last_arrival {
            Some(last) => self.total_weight * decay(t - last, self.config.timescale()),
            None => 0.0,
        })
    }

    /// Probability that a slot hops to a point arriving at `t`.
    pub fn hop_probability(&self, arrival_time: f64) -> Result<f64> {
        Ok(1.0 / (self.weight_at(arrival_time)? + 1.0))
    }

    fn check_shape(&self, point: &Point) -> Result<Shape> {
        let shape = Shape {
            features: point.x.len(),
            position: point.pos.as_ref().map(Vec::len),
        };
        if let Some(expected) = self.shape {
            if expected.features != shape.features {
                return Err(Error::DimensionMismatch {
                    expected: expected.features,
                    got: shape.features,
                });
            }
            if self.config.metric.is_composite() && expected.position != shape.position {
                return Err(Error::DimensionMismatch {
                    expected: expected.position.unwrap_or(0),
                    got: shape.position.unwrap_or(0),
                });
            }
        }
        Ok(shape)
    }

    /// Feeds one point, using `point.t` as its arrival time.
    ///
    /// The point is validated before any state changes, so an error leaves
    /// the sketch untouched.
    pub fn process(&mut self, point: &Point) -> Result<()> {
        self.config.metric.check_point(point)?;
        let shape = self.check_shape(point)?;
        let t = point.t;
        let weight = self.weight_at(t)? + 1.0;
        let hop = 1.0 / weight;

        self.total_weight = weight;
        self.t_count += 1;
        self.last_arrival = Some(t);
        self.shape = Some(shape);

        let tau = self.config.timescale();
        let metric = &self.config.metric;
        let radii = &self.radii;
        for slot in &mut self.slots {
            // One draw per slot per point, hop or not, keeps the streams aligned.
            let u: f64 = slot.rng.random();
            if u < hop {
                slot.hop(point, t);
            }
            let Some(held) = &slot.held else { continue };
            let d = metric.distance(held, point)?;
            if let Some(k) = bucket_for(radii, d) {
                slot.bring_forward(t, tau);
                slot.counters[k] += 1.0;
            }
        }
        Ok(())
    }

    pub fn process_all<'a>(&mut self, points: impl IntoIterator<Item = &'a Point>) -> Result<()> {
        points.into_iter().try_for_each(|p| self.process(p))
    }

    fn query_weight(&self, query_time: f64) -> Result<f64> {
        self.check_time(query_time)?;
        self.weight_at(query_time)
    }

    fn check_frequency(&self, f: f64) -> Result<()> {
        if !(f <= 1.0) {
            return Err(Error::arg("f", format!("must be at most 1, got {f}")));
        }
        if f < self.config.f0 {
            return Err(Error::FrequencyBelowMinimum {
                f,
                f0: self.config.f0,
            });
        }
        Ok(())
    }

    fn output(&self, slot: &SampleSlot, held: &Point, index: usize, count: f64, weight: f64) -> Output {
        Output {
            point: held.clone(),
            radius_index: index,
            radius: self.radii[index],
            freq_estimate: count / weight,
            slot_id: slot.id,
            hop_time: slot.hop_time,
        }
    }

    fn dense_outputs(&self, f: f64, query_time: f64) -> Result<Vec<Output>> {
        self.check_frequency(f)?;
        let weight = self.query_weight(query_time)?;
        if self.t_count == 0 || (self.t_count as f64) * f < 1.0 {
            return Ok(Vec::new());
        }
        let threshold = acceptance_threshold(self.config.epsilon, f, weight);
        let tau = self.config.timescale();
        let mut out = Vec::new();
        for slot in &self.slots {
            let Some(held) = &slot.held else { continue };
            let hit = slot
                .cumulative_at(query_time, tau)
                .enumerate()
                .find(|&(_, count)| count >= threshold);
            if let Some((k, count)) = hit {
                out.push(self.output(slot, held, k, count, weight));
            }
        }
        Ok(out)
    }

    /// Every slot whose cumulative count reaches `(1 - epsilon) * f * W` at
    /// some radius, reported at the smallest such radius, in slot order.
    pub fn query_dense(&self, f: f64, query_time: f64) -> Result<OutputSet> {
        Ok(OutputSet {
            query_time,
            order: OutputOrder::Slot,
            limit: None,
            outputs: self.dense_outputs(f, query_time)?,
        })
    }

    /// One candidate per occupied slot, scored by its cumulative count up to
    /// `radius_index`, densest first. Duplicates are removed before the list
    /// is cut to `k`.
    pub fn query_top_k_by_frequency(
        &self,
        radius_index: usize,
        k: usize,
        query_time: f64,
        dedup: &DedupPolicy,
    ) -> Result<OutputSet> {
        let c = self.config.c as usize;
        if radius_index > c {
            return Err(Error::RadiusIndexOutOfRange {
                index: radius_index,
                c,
            });
        }
        if k == 0 {
            return Err(Error::arg("k", "must be positive"));
        }
        let weight = self.query_weight(query_time)?;
        let tau = self.config.timescale();
        let mut out = Vec::new();
        if self.t_count > 0 {
            for slot in &self.slots {
                let Some(held) = &slot.held else { continue };
                let count = slot
                    .cumulative_at(query_time, tau)
                    .nth(radius_index)
                    .unwrap_or(0.0);
                out.push(self.output(slot, held, radius_index, count, weight));
            }
        }
        self.finish(out, OutputOrder::Frequency, k, query_time, dedup)
    }

    /// The dense outputs for `f`, smallest radius first.
    pub fn query_top_k_by_radius(
        &self,
        f: f64,
        k: usize,
        query_time: f64,
        dedup: &DedupPolicy,
    ) -> Result<OutputSet> {
        if k == 0 {
            return Err(Error::arg("k", "must be positive"));
        }
        let out = self.dense_outputs(f, query_time)?;
        self.finish(out, OutputOrder::Radius, k, query_time, dedup)
    }

    fn finish(
        &self,
        mut outputs: Vec<Output>,
        order: OutputOrder,
        k: usize,
        query_time: f64,
        dedup: &DedupPolicy,
    ) -> Result<OutputSet> {
        order.sort(&mut outputs);
        let mut outputs = postprocess::apply(dedup, outputs, &self.config.metric, order)?;
        outputs.truncate(k);
        Ok(OutputSet {
            query_time,
            order,
            limit: Some(k),
            outputs,
        })
    }
}
