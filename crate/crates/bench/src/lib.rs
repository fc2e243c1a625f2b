//! Fixtures shared by the benchmarks.

use hac_core::datagen::{character_profile, gaussian_mixture_stream, Means, MixtureSpec};
use hac_core::{HacConfig, Point, Sketch};

/// `n` points of the 128-dimensional character profile.
pub fn profile_points(n: usize, seed: u64) -> Vec<Point> {
    gaussian_mixture_stream(&character_profile(n, seed)).expect("valid profile").into_points()
}

/// `n` points from three planar clusters over 40% noise.
pub fn planar_points(n: usize, seed: u64) -> Vec<Point> {
    let spec = MixtureSpec {
        k: 3,
        dims: 2,
        means: Means::Separated { distance: 5.0 },
        sigma: 0.2,
        weights: vec![0.3, 0.2, 0.1],
        noise_fraction: 0.4,
        n,
        seed,
    };
    gaussian_mixture_stream(&spec).expect("valid mixture").into_points()
}

/// A sketch that has already seen `points`.
pub fn filled(config: HacConfig, points: &[Point]) -> Sketch {
    let mut sketch = Sketch::new(config).expect("valid config");
    sketch.process_all(points).expect("ordered points");
    sketch
}
