use serde::{Deserialize, Serialize};

/// Label carried by generated points that belong to no entity.
pub const NOISE_LABEL: &str = "noise";

/// A timestamped observation: a feature vector, an optional position block and
/// an optional ground-truth label.
///
/// The label exists for evaluation only. The sketch strips it before storing a
/// sample and never reads it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub t: f64,
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Point {
    pub fn new(t: f64, x: Vec<f64>) -> Self {
        Point {
            t,
            x,
            pos: None,
            label: None,
        }
    }

    pub fn with_position(mut self, pos: Vec<f64>) -> Self {
        self.pos = Some(pos);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Copy without the evaluation label.
    pub fn unlabeled(&self) -> Point {
        Point {
            t: self.t,
            x: self.x.clone(),
            pos: self.pos.clone(),
            label: None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.x.iter().all(|v| v.is_finite())
            && self.pos.as_ref().is_none_or(|p| p.iter().all(|v| v.is_finite()))
    }

    pub fn is_noise(&self) -> bool {
        self.label.as_deref() == Some(NOISE_LABEL)
    }
}
