//! Duplicate removal over raw sketch outputs.
//!
//! Two filters live here and neither stands in for the other:
//!
//! * [`dedup_theorem`] walks outputs from the smallest radius up and keeps an
//!   output only if its ball is disjoint from every ball kept so far.
//! * [`dedup_threshold`] walks outputs from the densest down and keeps an
//!   output only if it is farther than `r_d` from everything kept so far.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricSpec;
use crate::sketch::{Output, OutputOrder};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case", try_from = "RawPolicy")]
pub enum DedupPolicy {
    #[default]
    None,
    Theorem,
    Threshold { r_d: f64 },
}

#[derive(Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Variant {
    None,
    Theorem,
    Threshold,
}

// Flat mirror so that stray keys are rejected for the field-less variants too.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    variant: Variant,
    r_d: Option<f64>,
}

impl TryFrom<RawPolicy> for DedupPolicy {
    type Error = String;

    fn try_from(raw: RawPolicy) -> std::result::Result<Self, String> {
        match (raw.variant, raw.r_d) {
            (Variant::Threshold, Some(r_d)) => Ok(DedupPolicy::Threshold { r_d }),
            (Variant::Threshold, None) => Err("threshold dedup needs `r_d`".into()),
            (_, Some(_)) => Err("`r_d` only applies to threshold dedup".into()),
            (Variant::None, None) => Ok(DedupPolicy::None),
            (Variant::Theorem, None) => Ok(DedupPolicy::Theorem),
        }
    }
}

impl DedupPolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            DedupPolicy::Threshold { r_d } if !(*r_d >= 0.0 && r_d.is_finite()) => {
                Err(Error::InvalidConfig {
                    field: "dedup.r_d",
                    reason: format!("must be a non-negative finite real, got {r_d}"),
                })
            }
            _ => Ok(()),
        }
    }
}

fn keep_if<F>(candidates: Vec<Output>, mut far_from: F) -> Result<Vec<Output>>
where
    F: FnMut(&Output, &Output) -> Result<bool>,
{
    let mut kept: Vec<Output> = Vec::new();
    for p in candidates {
        let mut admit = true;
        for o in &kept {
            if !far_from(o, &p)? {
                admit = false;
                break;
            }
        }
        if admit {
            kept.push(p);
        }
    }
    Ok(kept)
}

/// Keeps outputs whose balls `B(p, radius)` are pairwise disjoint, preferring
/// smaller radii, then higher frequency, then lower slot id. The result is
/// in that preference order.
pub fn dedup_theorem(outputs: &[Output], metric: &MetricSpec) -> Result<Vec<Output>> {
    let mut sorted = outputs.to_vec();
    sorted.sort_by(|a, b| {
        a.radius
            .total_cmp(&b.radius)
            .then(b.freq_estimate.total_cmp(&a.freq_estimate))
            .then(a.slot_id.cmp(&b.slot_id))
    });
    keep_if(sorted, |o, p| {
        Ok(metric.distance(&o.point, &p.point)? > o.radius + p.radius)
    })
}

/// Greedy keep-if-farther-than-`r_d` filter over outputs already sorted by
/// decreasing frequency. Order is preserved.
pub fn dedup_threshold(outputs: &[Output], r_d: f64, metric: &MetricSpec) -> Result<Vec<Output>> {
    if let Some(i) = outputs
        .windows(2)
        .position(|w| w[0].freq_estimate < w[1].freq_estimate)
    {
        return Err(Error::UnsortedOutputs(i + 1));
    }
    keep_if(outputs.to_vec(), |o, p| {
        Ok(metric.distance(&o.point, &p.point)? > r_d)
    })
}

/// Applies `policy` to outputs of a query and returns them in `order`.
pub fn apply(
    policy: &DedupPolicy,
    mut outputs: Vec<Output>,
    metric: &MetricSpec,
    order: OutputOrder,
) -> Result<Vec<Output>> {
    policy.validate()?;
    let mut kept = match policy {
        DedupPolicy::None => outputs,
        DedupPolicy::Theorem => dedup_theorem(&outputs, metric)?,
        DedupPolicy::Threshold { r_d } => {
            OutputOrder::Frequency.sort(&mut outputs);
            dedup_threshold(&outputs, *r_d, metric)?
        }
    };
    order.sort(&mut kept);
    Ok(kept)
}
