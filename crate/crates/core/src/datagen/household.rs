//! Synthetic household: objects resting on tables watched by cameras, humans
//! who walk up, pick an object and put it down elsewhere.
//!
//! Each scripted move occupies one step of `step_seconds` (20 s by default)
//! starting at `time = T`, with the phases scaled to the step length:
//!
//! | phase                         | default     |
//! |-------------------------------|-------------|
//! | human at the source table     | `[T, T+4]`  |
//! | pick                          | `T+2`       |
//! | human at the destination table| `[T+5, T+10]` |
//! | place                         | `T+7`       |
//!
//! Detections are emitted once per second. Object detections carry the
//! position block `[camera, x, y]`; face detections carry the position of the
//! table the human stands at.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{gaussian_vec, jitter};
use crate::error::{Error, Result};
use crate::oracle::Dataset;
use crate::point::{Point, NOISE_LABEL};

/// Spacing between neighbouring locations on one table, in metres.
const LOCATION_SPACING: f64 = 0.5;
/// Standard deviation of the position of object detections.
const POSITION_JITTER: f64 = 0.01;
const TICK: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table {
    pub camera: usize,
    pub locations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledMove {
    pub time: f64,
    pub human: usize,
    pub object: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthAction {
    Pick,
    Place,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub t: f64,
    pub human: usize,
    pub object: usize,
    pub action: TruthAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HouseholdSpec {
    pub num_objects: usize,
    pub num_humans: usize,
    pub tables: Vec<Table>,
    /// Starting location of every object.
    pub initial_locations: Vec<usize>,
    pub schedule: Vec<ScheduledMove>,
    /// Spurious detections per second.
    pub noise_rate: f64,
    pub step_seconds: f64,
    /// Length of the recording in seconds.
    pub duration: f64,
    pub feature_dims: usize,
    pub feature_noise_sigma: f64,
    pub face_miss_rate: f64,
    /// Two humans whose faces are nearly indistinguishable.
    #[serde(default)]
    pub twins: Option<(usize, usize)>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct HouseholdStreams {
    pub objects: Dataset,
    pub faces: Dataset,
    pub truth: Vec<TruthEntry>,
    pub object_prototypes: Vec<Vec<f64>>,
    pub human_prototypes: Vec<Vec<f64>>,
}

/// Phase offsets of a move as fractions of the step.
struct Phases {
    source: (f64, f64),
    pick: f64,
    destination: (f64, f64),
    place: f64,
}

impl HouseholdSpec {
    /// Eight humans, ten objects and four tables with 8, 4, 4 and 4 spots.
    /// Objects 0 to 8 move five or six times each, four of those times by
    /// their owner (human `object % 8`); object 9 is never touched. Moves
    /// alternate with idle steps, so 48 moves give 96 pick/place entries.
    pub fn default_scenario(seed: u64) -> Self {
        let tables: Vec<Table> = [8, 4, 4, 4]
            .iter()
            .enumerate()
            .map(|(camera, &locations)| Table { camera, locations })
            .collect();
        let num_locations: usize = tables.iter().map(|t| t.locations).sum();
        let (num_objects, num_humans) = (10, 8);
        let step = 20.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(3);

        let mut spots: Vec<usize> = (0..num_locations).collect();
        spots.shuffle(&mut rng);
        let initial_locations = spots[..num_objects].to_vec();

        let move_counts = [6, 6, 5, 5, 5, 5, 5, 5, 6, 0];
        let mut movers: Vec<Vec<usize>> = move_counts
            .iter()
            .enumerate()
            .map(|(object, &count)| {
                if count == 0 {
                    return Vec::new();
                }
                let owner = object % num_humans;
                let mut humans = vec![owner; 4];
                while humans.len() < count {
                    let h = rng.random_range(0..num_humans);
                    if h != owner {
                        humans.push(h);
                    }
                }
                humans.shuffle(&mut rng);
                humans
            })
            .collect();

        let order = interleave(&move_counts, &mut rng);
        let mut location = initial_locations.clone();
        let mut schedule = Vec::with_capacity(order.len());
        for (i, &object) in order.iter().enumerate() {
            let occupied = |l: usize| location.contains(&l);
            let free: Vec<usize> = (0..num_locations).filter(|&l| !occupied(l)).collect();
            let to = free[rng.random_range(0..free.len())];
            let human = movers[object].pop().expect("one mover per scheduled move");
            schedule.push(ScheduledMove {
                time: (1 + 2 * i) as f64 * step,
                human,
                object,
                from: location[object],
                to,
            });
            location[object] = to;
        }
        let duration = (2 * order.len() + 4) as f64 * step;

        HouseholdSpec {
            num_objects,
            num_humans,
            tables,
            initial_locations,
            schedule,
            noise_rate: 16.0,
            step_seconds: step,
            duration,
            feature_dims: 16,
            feature_noise_sigma: 0.05,
            face_miss_rate: 0.5,
            twins: None,
            seed,
        }
    }

    pub fn num_locations(&self) -> usize {
        self.tables.iter().map(|t| t.locations).sum()
    }

    fn table_of(&self, location: usize) -> (usize, usize) {
        let mut rest = location;
        for (i, t) in self.tables.iter().enumerate() {
            if rest < t.locations {
                return (i, rest);
            }
            rest -= t.locations;
        }
        unreachable!("location {location} checked by validate")
    }

    pub fn camera_of(&self, location: usize) -> usize {
        self.tables[self.table_of(location).0].camera
    }

    /// `[camera, x, y]` of a location.
    pub fn location_position(&self, location: usize) -> Vec<f64> {
        let (table, spot) = self.table_of(location);
        vec![self.tables[table].camera as f64, spot as f64 * LOCATION_SPACING, 0.0]
    }

    fn table_position(&self, table: usize) -> Vec<f64> {
        let t = &self.tables[table];
        let center = (t.locations.saturating_sub(1)) as f64 * LOCATION_SPACING / 2.0;
        vec![t.camera as f64, center, 0.0]
    }

    fn phases(&self) -> Phases {
        let s = self.step_seconds / 20.0;
        Phases {
            source: (0.0, 4.0 * s),
            pick: 2.0 * s,
            destination: (5.0 * s, 10.0 * s),
            place: 7.0 * s,
        }
    }

    /// Ground truth implied by the schedule.
    pub fn truth(&self) -> Vec<TruthEntry> {
        let ph = self.phases();
        let mut out = Vec::with_capacity(2 * self.schedule.len());
        for m in &self.schedule {
            out.push(TruthEntry { t: m.time + ph.pick, human: m.human, object: m.object, action: TruthAction::Pick });
            out.push(TruthEntry { t: m.time + ph.place, human: m.human, object: m.object, action: TruthAction::Place });
        }
        out.sort_by(|a, b| a.t.total_cmp(&b.t));
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        let nl = self.num_locations();
        if self.num_objects == 0 || self.num_humans == 0 || nl == 0 {
            return bad("objects, humans and locations must be non-empty".into());
        }
        if self.num_objects > nl {
            return bad(format!("{} objects do not fit on {nl} locations", self.num_objects));
        }
        if self.initial_locations.len() != self.num_objects {
            return bad("one initial location per object is required".into());
        }
        for (i, &l) in self.initial_locations.iter().enumerate() {
            if l >= nl {
                return bad(format!("object {i} starts at unknown location {l}"));
            }
            if self.initial_locations[..i].contains(&l) {
                return bad(format!("objects share initial location {l}"));
            }
        }
        if !(self.step_seconds > 0.0 && self.step_seconds.is_finite()) {
            return bad("step_seconds must be positive".into());
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return bad("duration must be non-negative".into());
        }
        if !(self.noise_rate >= 0.0 && self.noise_rate.is_finite()) {
            return bad("noise_rate must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.face_miss_rate) {
            return bad("face_miss_rate must lie in [0, 1]".into());
        }
        if self.feature_dims == 0 || !(self.feature_noise_sigma >= 0.0) {
            return bad("feature_dims must be positive and the noise non-negative".into());
        }
        if let Some((a, b)) = self.twins {
            if a == b || a >= self.num_humans || b >= self.num_humans {
                return bad(format!("twins ({a}, {b}) must be two distinct humans"));
            }
        }

        let mut location = self.initial_locations.clone();
        let mut free_from = vec![f64::NEG_INFINITY; self.num_objects];
        let mut last_time = f64::NEG_INFINITY;
        for (index, m) in self.schedule.iter().enumerate() {
            let err = |reason: String| Err(Error::InconsistentSchedule { index, reason });
            if !m.time.is_finite() || m.time < last_time {
                return err(format!("time {} goes backwards", m.time));
            }
            last_time = m.time;
            if m.object >= self.num_objects || m.human >= self.num_humans {
                return err(format!("unknown object {} or human {}", m.object, m.human));
            }
            if m.from >= nl || m.to >= nl {
                return err(format!("unknown location in move {} -> {}", m.from, m.to));
            }
            if location[m.object] != m.from {
                return err(format!(
                    "object {} is at location {}, not {}",
                    m.object, location[m.object], m.from
                ));
            }
            if m.time < free_from[m.object] {
                return err(format!("object {} is still being moved", m.object));
            }
            if m.to == m.from || location.contains(&m.to) {
                return err(format!("destination {} is occupied", m.to));
            }
            location[m.object] = m.to;
            free_from[m.object] = m.time + self.step_seconds;
        }
        Ok(())
    }
}

/// A random order of object ids, each repeated `counts[i]` times, with no
/// object moved twice in a row.
fn interleave<R: Rng>(counts: &[usize], rng: &mut R) -> Vec<usize> {
    loop {
        let mut left = counts.to_vec();
        let total: usize = left.iter().sum();
        let mut order = Vec::with_capacity(total);
        while order.len() < total {
            let last = order.last().copied();
            let choices: Vec<usize> = (0..left.len())
                .filter(|&o| left[o] > 0 && Some(o) != last)
                .collect();
            if choices.is_empty() {
                break;
            }
            // weight by remaining count so no object is left over at the end
            let weights: usize = choices.iter().map(|&o| left[o]).sum();
            let mut r = rng.random_range(0..weights);
            let mut pick = choices[0];
            for &o in &choices {
                if r < left[o] {
                    pick = o;
                    break;
                }
                r -= left[o];
            }
            left[pick] -= 1;
            order.push(pick);
        }
        if order.len() == total {
            return order;
        }
    }
}

pub fn household_stream(spec: &HouseholdSpec) -> Result<HouseholdStreams> {
    spec.validate()?;
    let dims = spec.feature_dims;
    let mut proto_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    proto_rng.set_stream(2);
    let object_prototypes: Vec<Vec<f64>> =
        (0..spec.num_objects).map(|_| gaussian_vec(&mut proto_rng, dims, 1.0)).collect();
    let mut human_prototypes: Vec<Vec<f64>> =
        (0..spec.num_humans).map(|_| gaussian_vec(&mut proto_rng, dims, 1.0)).collect();
    if let Some((a, b)) = spec.twins {
        human_prototypes[b] = jitter(&mut proto_rng, &human_prototypes[a], spec.feature_noise_sigma);
    }

    let ph = spec.phases();
    // (start, end, location) of every rest period of every object
    let mut rests: Vec<Vec<(f64, f64, usize)>> = spec
        .initial_locations
        .iter()
        .map(|&l| vec![(f64::NEG_INFINITY, f64::INFINITY, l)])
        .collect();
    // (start, end, table, human) of every presence at a table
    let mut presence: Vec<(f64, f64, usize, usize)> = Vec::new();
    for m in &spec.schedule {
        let r = rests[m.object].last_mut().expect("initial rest");
        r.1 = m.time + ph.pick;
        rests[m.object].push((m.time + ph.place, f64::INFINITY, m.to));
        let src = spec.table_of(m.from).0;
        let dst = spec.table_of(m.to).0;
        presence.push((m.time + ph.source.0, m.time + ph.source.1, src, m.human));
        presence.push((m.time + ph.destination.0, m.time + ph.destination.1, dst, m.human));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let positions: Vec<Vec<f64>> = (0..spec.num_locations()).map(|l| spec.location_position(l)).collect();
    let ticks = (spec.duration / TICK).ceil() as usize;
    let (mut objects, mut faces) = (Vec::new(), Vec::new());
    for tick in 0..ticks {
        let t = tick as f64 * TICK;
        let mut batch = Vec::new();
        for (o, periods) in rests.iter().enumerate() {
            // An object is visible at its location up to and including the
            // pick time, and again from the place time on.
            if let Some(&(_, _, l)) = periods.iter().find(|(s, e, _)| *s <= t && t <= *e) {
                let x = jitter(&mut rng, &object_prototypes[o], spec.feature_noise_sigma);
                let pos = jitter(&mut rng, &positions[l], POSITION_JITTER);
                batch.push(Point::new(t, x).with_position(pos).with_label(format!("o{o}")));
            }
        }
        let whole = spec.noise_rate.floor() as usize;
        let extra = rng.random_bool(spec.noise_rate - spec.noise_rate.floor());
        for _ in 0..whole + extra as usize {
            let table = rng.random_range(0..spec.tables.len());
            let width = spec.tables[table].locations.saturating_sub(1) as f64 * LOCATION_SPACING;
            let pos = vec![spec.tables[table].camera as f64, rng.random_range(0.0..=width), 0.0];
            batch.push(Point::new(t, gaussian_vec(&mut rng, dims, 1.0)).with_position(pos).with_label(NOISE_LABEL));
        }
        batch.shuffle(&mut rng);
        objects.extend(batch);

        for &(_, _, table, h) in presence.iter().filter(|(s, e, _, _)| *s <= t && t <= *e) {
            if rng.random_bool(1.0 - spec.face_miss_rate) {
                let x = jitter(&mut rng, &human_prototypes[h], spec.feature_noise_sigma);
                faces.push(Point::new(t, x).with_position(spec.table_position(table)).with_label(format!("h{h}")));
            }
        }
    }

    Ok(HouseholdStreams {
        objects: Dataset::new(objects)?,
        faces: Dataset::new(faces)?,
        truth: spec.truth(),
        object_prototypes,
        human_prototypes,
    })
}
