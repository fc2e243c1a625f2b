//! Distance functions shared by the sketch, the oracle and the tracker.
//!
//! Three kinds are supported:
//!
//! * `euclidean`: the l2 norm of the difference of the feature vectors.
//! * `cosine-angular`: the angle between feature vectors, normalized to
//!   `[0, 1]` (`arccos(cos_sim) / pi`). This is a metric. Setting
//!   `non_metric = true` switches to the raw `1 - cos_sim`, which violates the
//!   triangle inequality and therefore voids the sketch's guarantees.
//! * `chebyshev-composite`: `max(d_p(pos) / position_scale, d_f(x) / feature_scale)`
//!   over points that carry both a feature vector and a position block.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", try_from = "RawMetric")]
pub enum MetricSpec {
    #[default]
    Euclidean,
    CosineAngular {
        #[serde(default)]
        non_metric: bool,
    },
    ChebyshevComposite {
        feature_scale: f64,
        position_scale: f64,
        feature: Box<MetricSpec>,
        position: Box<MetricSpec>,
    },
}

#[derive(Deserialize)]
#[serde(rename_all = "kebab-case")]
enum MetricKind {
    Euclidean,
    CosineAngular,
    ChebyshevComposite,
}

// Flat mirror used for decoding so that stray keys are rejected for every
// kind, including the field-less euclidean one.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetric {
    kind: MetricKind,
    non_metric: Option<bool>,
    feature_scale: Option<f64>,
    position_scale: Option<f64>,
    feature: Option<Box<MetricSpec>>,
    position: Option<Box<MetricSpec>>,
}

impl TryFrom<RawMetric> for MetricSpec {
    type Error = String;

    fn try_from(raw: RawMetric) -> std::result::Result<Self, String> {
        let composite_keys = raw.feature_scale.is_some()
            || raw.position_scale.is_some()
            || raw.feature.is_some()
            || raw.position.is_some();
        match raw.kind {
            MetricKind::Euclidean if composite_keys || raw.non_metric.is_some() => {
                Err("euclidean metric takes no parameters".into())
            }
            MetricKind::Euclidean => Ok(MetricSpec::Euclidean),
            MetricKind::CosineAngular if composite_keys => {
                Err("cosine-angular metric only takes `non_metric`".into())
            }
            MetricKind::CosineAngular => Ok(MetricSpec::CosineAngular {
                non_metric: raw.non_metric.unwrap_or(false),
            }),
            MetricKind::ChebyshevComposite => {
                if raw.non_metric.is_some() {
                    return Err("`non_metric` belongs on the inner metric".into());
                }
                let missing = |name: &str| format!("chebyshev-composite needs `{name}`");
                Ok(MetricSpec::ChebyshevComposite {
                    feature_scale: raw.feature_scale.ok_or_else(|| missing("feature_scale"))?,
                    position_scale: raw.position_scale.ok_or_else(|| missing("position_scale"))?,
                    feature: raw.feature.ok_or_else(|| missing("feature"))?,
                    position: raw.position.ok_or_else(|| missing("position"))?,
                })
            }
        }
    }
}


impl MetricSpec {
    pub fn angular() -> Self {
        MetricSpec::CosineAngular { non_metric: false }
    }

    pub fn composite(
        feature: MetricSpec,
        position: MetricSpec,
        feature_scale: f64,
        position_scale: f64,
    ) -> Self {
        MetricSpec::ChebyshevComposite {
            feature_scale,
            position_scale,
            feature: Box::new(feature),
            position: Box::new(position),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MetricSpec::Euclidean | MetricSpec::CosineAngular { .. } => Ok(()),
            MetricSpec::ChebyshevComposite {
                feature_scale,
                position_scale,
                feature,
                position,
            } => {
                for (field, scale) in [
                    ("metric.feature_scale", *feature_scale),
                    ("metric.position_scale", *position_scale),
                ] {
                    if !(scale > 0.0 && scale.is_finite()) {
                        return Err(Error::InvalidConfig {
                            field,
                            reason: format!("must be a positive finite real, got {scale}"),
                        });
                    }
                }
                for (field, inner) in [("metric.feature", feature), ("metric.position", position)] {
                    if inner.is_composite() {
                        return Err(Error::InvalidConfig {
                            field,
                            reason: "inner metrics of a composite cannot be composite".into(),
                        });
                    }
                }
                Ok(())
            }
        }
    }

    pub fn is_composite(&self) -> bool {
        matches!(self, MetricSpec::ChebyshevComposite { .. })
    }

    /// Whether the triangle inequality holds for this spec.
    pub fn is_metric(&self) -> bool {
        match self {
            MetricSpec::Euclidean => true,
            MetricSpec::CosineAngular { non_metric } => !non_metric,
            MetricSpec::ChebyshevComposite {
                feature, position, ..
            } => feature.is_metric() && position.is_metric(),
        }
    }

    /// Checks that a single point can be measured under this spec at all:
    /// finite coordinates, a position block for composites and non-zero norms
    /// for angular distances.
    pub fn check_point(&self, p: &Point) -> Result<()> {
        if !p.is_finite() {
            return Err(Error::NonFinite);
        }
        match self {
            MetricSpec::Euclidean => Ok(()),
            MetricSpec::CosineAngular { .. } => {
                if norm(&p.x) == 0.0 {
                    Err(Error::ZeroNorm)
                } else {
                    Ok(())
                }
            }
            MetricSpec::ChebyshevComposite {
                feature, position, ..
            } => {
                let pos = p.pos.as_deref().ok_or(Error::MissingPosition)?;
                feature.check_vector(&p.x)?;
                position.check_vector(pos)
            }
        }
    }

    fn check_vector(&self, v: &[f64]) -> Result<()> {
        match self {
            MetricSpec::CosineAngular { .. } if norm(v) == 0.0 => Err(Error::ZeroNorm),
            _ => Ok(()),
        }
    }

    pub fn distance(&self, a: &Point, b: &Point) -> Result<f64> {
        match self {
            MetricSpec::ChebyshevComposite {
                feature_scale,
                position_scale,
                feature,
                position,
            } => composite_max_distance(a, b, feature, position, *feature_scale, *position_scale),
            _ => self.vector_distance(&a.x, &b.x),
        }
    }

    /// Distance between two raw vectors. Composite specs need the position
    /// block and are rejected here.
    pub fn vector_distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        match self {
            MetricSpec::Euclidean => Ok(euclidean(a, b)),
            MetricSpec::CosineAngular { non_metric } => {
                let (na, nb) = (norm(a), norm(b));
                if na == 0.0 || nb == 0.0 {
                    return Err(Error::ZeroNorm);
                }
                // |ua - ub| and |ua + ub| of the unit vectors give the angle
                // through atan2, which stays accurate for nearly parallel
                // vectors where acos loses all precision.
                let (mut diff, mut sum) = (0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    let (ux, uy) = (x / na, y / nb);
                    diff += (ux - uy) * (ux - uy);
                    sum += (ux + uy) * (ux + uy);
                }
                if *non_metric {
                    // 1 - cos = |ua - ub|^2 / 2
                    Ok(diff / 2.0)
                } else {
                    Ok(2.0 * diff.sqrt().atan2(sum.sqrt()) / std::f64::consts::PI)
                }
            }
            MetricSpec::ChebyshevComposite { .. } => Err(Error::MissingPosition),
        }
    }
}

/// `max(d_p(pos_a, pos_b) / position_scale, d_f(x_a, x_b) / feature_scale)`.
pub fn composite_max_distance(
    a: &Point,
    b: &Point,
    feature: &MetricSpec,
    position: &MetricSpec,
    feature_scale: f64,
    position_scale: f64,
) -> Result<f64> {
    let pa = a.pos.as_deref().ok_or(Error::MissingPosition)?;
    let pb = b.pos.as_deref().ok_or(Error::MissingPosition)?;
    let dp = position.vector_distance(pa, pb)? / position_scale;
    let df = feature.vector_distance(&a.x, &b.x)? / feature_scale;
    Ok(dp.max(df))
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: &[f64]) -> Point {
        Point::new(0.0, x.to_vec())
    }

    fn pp(x: &[f64], pos: &[f64]) -> Point {
        Point::new(0.0, x.to_vec()).with_position(pos.to_vec())
    }

    fn euclid_composite(fs: f64, ps: f64) -> MetricSpec {
        MetricSpec::composite(MetricSpec::Euclidean, MetricSpec::Euclidean, fs, ps)
    }

    #[test]
    fn euclidean_pythagoras() {
        let d = MetricSpec::Euclidean.distance(&p(&[0.0, 0.0]), &p(&[3.0, 4.0])).unwrap();
        assert_eq!(d, 5.0);
    }

    #[test]
    fn self_distance_is_zero_for_every_kind() {
        let a = pp(&[0.3, -1.2, 4.0], &[1.0, 2.0]);
        let specs = [
            MetricSpec::Euclidean,
            MetricSpec::angular(),
            MetricSpec::CosineAngular { non_metric: true },
            euclid_composite(1.0, 1.0),
            MetricSpec::composite(MetricSpec::angular(), MetricSpec::Euclidean, 0.5, 2.0),
        ];
        for spec in specs {
            assert_eq!(spec.distance(&a, &a).unwrap(), 0.0, "{spec:?}");
        }
    }

    #[test]
    fn orthogonal_vectors_are_half_apart_on_angular_scale() {
        let d = MetricSpec::angular().distance(&p(&[1.0, 0.0]), &p(&[0.0, 1.0])).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        let opposite = MetricSpec::angular().distance(&p(&[1.0, 0.0]), &p(&[-2.0, 0.0])).unwrap();
        assert!((opposite - 1.0).abs() < 1e-15);
        let raw = MetricSpec::CosineAngular { non_metric: true }
            .distance(&p(&[1.0, 0.0]), &p(&[0.0, 1.0]))
            .unwrap();
        assert!((raw - 1.0).abs() < 1e-15);
    }

    #[test]
    fn raw_cosine_breaks_the_triangle_inequality() {
        let raw = MetricSpec::CosineAngular { non_metric: true };
        let a = p(&[1.0, 0.0]);
        let b = p(&[1.0, 1.0]);
        let c = p(&[0.0, 1.0]);
        let lhs = raw.distance(&a, &c).unwrap();
        let rhs = raw.distance(&a, &b).unwrap() + raw.distance(&b, &c).unwrap();
        assert!(lhs > rhs);
        assert!(!raw.is_metric());
        assert!(MetricSpec::angular().is_metric());
    }

    #[test]
    fn zero_norm_is_an_error() {
        let err = MetricSpec::angular().distance(&p(&[0.0, 0.0]), &p(&[1.0, 0.0]));
        assert!(matches!(err, Err(Error::ZeroNorm)));
        assert!(matches!(MetricSpec::angular().check_point(&p(&[0.0])), Err(Error::ZeroNorm)));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let err = MetricSpec::Euclidean.distance(&p(&[0.0, 0.0]), &p(&[1.0]));
        assert!(matches!(err, Err(Error::DimensionMismatch { expected: 2, got: 1 })));
    }

    #[test]
    fn composite_needs_positions() {
        let spec = euclid_composite(1.0, 1.0);
        assert!(matches!(spec.distance(&p(&[0.0]), &p(&[1.0])), Err(Error::MissingPosition)));
        assert!(matches!(spec.check_point(&p(&[0.0])), Err(Error::MissingPosition)));
    }

    #[test]
    fn composite_takes_the_larger_scaled_distance() {
        // feature 0.2 / 1, position 0.7 / 1
        let a = pp(&[0.0], &[0.0]);
        let b = pp(&[0.2], &[0.7]);
        let d = euclid_composite(1.0, 1.0).distance(&a, &b).unwrap();
        assert!((d - 0.7).abs() < 1e-15);

        // feature 0.6 / 2 = 0.3, position 0.5 / 1 = 0.5
        let c = pp(&[0.6], &[0.5]);
        let d = composite_max_distance(&a, &c, &MetricSpec::Euclidean, &MetricSpec::Euclidean, 2.0, 1.0)
            .unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scales_must_be_positive() {
        assert!(euclid_composite(0.0, 1.0).validate().is_err());
        assert!(euclid_composite(1.0, -2.0).validate().is_err());
        let nested = MetricSpec::composite(euclid_composite(1.0, 1.0), MetricSpec::Euclidean, 1.0, 1.0);
        assert!(nested.validate().is_err());
    }

    #[test]
    fn config_text_round_trips() {
        let spec = MetricSpec::composite(MetricSpec::angular(), MetricSpec::Euclidean, 2.0, 0.3);
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"kind\":\"chebyshev-composite\""));
        assert_eq!(serde_json::from_str::<MetricSpec>(&json).unwrap(), spec);
        assert!(serde_json::from_str::<MetricSpec>(r#"{"kind":"euclidean","bogus":1}"#).is_err());
        assert!(serde_json::from_str::<MetricSpec>(r#"{"kind":"euclidean","feature_scale":1}"#).is_err());
        assert!(serde_json::from_str::<MetricSpec>(r#"{"kind":"chebyshev-composite","feature_scale":1}"#).is_err());
        assert_eq!(
            serde_json::from_str::<MetricSpec>(r#"{"kind":"cosine-angular"}"#).unwrap(),
            MetricSpec::angular()
        );
    }

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0..10.0f64, 3)
    }

    fn vec2() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0..10.0f64, 2)
    }

    fn nonzero3() -> impl Strategy<Value = Vec<f64>> {
        vec3().prop_filter("non-zero", |v| norm(v) > 1e-6)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn euclidean_triangle(a in vec3(), b in vec3(), c in vec3()) {
            let m = MetricSpec::Euclidean;
            let (a, b, c) = (p(&a), p(&b), p(&c));
            let ac = m.distance(&a, &c).unwrap();
            let ab = m.distance(&a, &b).unwrap();
            let bc = m.distance(&b, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-9);
        }

        #[test]
        fn angular_triangle(a in nonzero3(), b in nonzero3(), c in nonzero3()) {
            let m = MetricSpec::angular();
            let (a, b, c) = (p(&a), p(&b), p(&c));
            let ac = m.distance(&a, &c).unwrap();
            let ab = m.distance(&a, &b).unwrap();
            let bc = m.distance(&b, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-9);
        }

        #[test]
        fn composite_triangle(
            fa in vec3(), fb in vec3(), fc in vec3(),
            pa in vec2(), pb in vec2(), pc in vec2(),
            fs in 0.1..5.0f64, ps in 0.1..5.0f64,
        ) {
            let m = euclid_composite(fs, ps);
            let (a, b, c) = (pp(&fa, &pa), pp(&fb, &pb), pp(&fc, &pc));
            let ac = m.distance(&a, &c).unwrap();
            let ab = m.distance(&a, &b).unwrap();
            let bc = m.distance(&b, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-9);
        }
    }

    proptest! {
        #[test]
        fn symmetric_and_non_negative(a in nonzero3(), b in nonzero3(), pa in vec2(), pb in vec2()) {
            let (a, b) = (pp(&a, &pa), pp(&b, &pb));
            for m in [
                MetricSpec::Euclidean,
                MetricSpec::angular(),
                MetricSpec::CosineAngular { non_metric: true },
                euclid_composite(0.7, 1.3),
            ] {
                let ab = m.distance(&a, &b).unwrap();
                prop_assert!(ab >= 0.0);
                prop_assert_eq!(ab, m.distance(&b, &a).unwrap());
                prop_assert_eq!(m.distance(&a, &a).unwrap(), 0.0);
            }
        }

        #[test]
        fn composite_is_monotone_in_each_inner_distance(
            base in vec2(), stretch in 1.0..3.0f64, fx in 0.0..4.0f64, px in 0.0..4.0f64,
        ) {
            let m = euclid_composite(1.0, 1.0);
            let origin = pp(&[0.0], &base);
            let near = pp(&[fx], &[base[0] + px, base[1]]);
            let far_f = pp(&[fx * stretch], &[base[0] + px, base[1]]);
            let far_p = pp(&[fx], &[base[0] + px * stretch, base[1]]);
            let d = m.distance(&origin, &near).unwrap();
            prop_assert!(m.distance(&origin, &far_f).unwrap() >= d);
            prop_assert!(m.distance(&origin, &far_p).unwrap() >= d);
        }
    }
}
