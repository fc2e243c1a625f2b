//! Streaming detection of dense regions in metric spaces.
//!
//! [`Sketch`] keeps `m` hop-and-count sample slots whose memory does not grow
//! with the stream. Queries report every sample sitting in a region that
//! holds at least a fraction `(1 - epsilon) * f` of the (optionally
//! time-decayed) stream weight, together with the smallest radius at which
//! that holds.
//!
//! ```
//! use hac_core::{HacConfig, Point, Sketch};
//!
//! let cfg = HacConfig::new(0.1, 0.5, 0.5).with_radii(0.5, 2.0, 3).with_seed(7);
//! let mut sketch = Sketch::new(cfg)?;
//! for i in 0..1000 {
//!     let x = if i % 2 == 0 { 0.0 } else { 10.0 + (i % 7) as f64 };
//!     sketch.process(&Point::new(i as f64, vec![x]))?;
//! }
//! let dense = sketch.query_dense(0.3, 999.0)?;
//! assert!(dense.outputs.iter().any(|o| o.point.x[0] == 0.0));
//! # Ok::<(), hac_core::Error>(())
//! ```

// Negated float comparisons are how NaN gets rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod config;
pub mod datagen;
pub mod error;
pub mod experiments;
pub mod io;
pub mod metric;
pub mod oracle;
pub mod point;
pub mod postprocess;
pub mod sketch;
pub mod snapshot;
pub mod tracker;

pub use config::{acceptance_threshold, bucket_for, bucket_index, slot_count, HacConfig};
pub use error::{Error, Result};
pub use metric::{composite_max_distance, MetricSpec};
pub use oracle::{CoverageStats, Dataset, Oracle};
pub use point::{Point, NOISE_LABEL};
pub use postprocess::{dedup_theorem, dedup_threshold, DedupPolicy};
pub use sketch::{merge_outputs, Output, OutputOrder, OutputSet, SampleSlot, Sketch};
