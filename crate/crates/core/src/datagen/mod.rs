//! Seeded synthetic streams.
//!
//! Generated geometry is an idealization: clusters are isotropic Gaussians
//! and embeddings are random prototypes plus small noise. Nothing here models
//! a real perception pipeline.

mod household;
mod mixture;

pub use household::{
    household_stream, HouseholdSpec, HouseholdStreams, ScheduledMove, Table, TruthAction, TruthEntry,
};
pub use mixture::{character_profile, gaussian_mixture_stream, Means, MixtureSpec};

use rand::Rng;
use rand_distr::StandardNormal;

pub(crate) fn gaussian_vec<R: Rng>(rng: &mut R, dims: usize, sigma: f64) -> Vec<f64> {
    (0..dims).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect()
}

pub(crate) fn jitter<R: Rng>(rng: &mut R, center: &[f64], sigma: f64) -> Vec<f64> {
    center
        .iter()
        .map(|c| c + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}
