use hac_core::datagen::{gaussian_mixture_stream, Means, MixtureSpec};
use hac_core::{dedup_theorem, dedup_threshold, Dataset, HacConfig, MetricSpec, Oracle, OutputOrder, Point, Sketch};
use proptest::prelude::*;

const E: MetricSpec = MetricSpec::Euclidean;

fn mixture(k: usize, noise: f64, seed: u64) -> MixtureSpec {
    let w = (1.0 - noise) / k as f64;
    MixtureSpec {
        k,
        dims: 2,
        means: Means::Separated { distance: 4.0 },
        sigma: 0.2,
        weights: vec![w; k],
        noise_fraction: noise,
        n: 600,
        seed,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn theorem_dedup_is_small_and_disjoint_on_verified_outputs(
        k in 1usize..6,
        noise in 0.0f64..0.6,
        seed in any::<u64>(),
        f in 0.05f64..0.3,
    ) {
        let spec = mixture(k, noise, seed);
        let data = gaussian_mixture_stream(&spec).unwrap();
        let cfg = HacConfig::new(0.05, 0.5, 0.5).with_radii(0.05, 2.0, 5).with_seed(seed);
        let mut sketch = Sketch::new(cfg.clone()).unwrap();
        sketch.process_all(data.points()).unwrap();
        let q = data.last_time().unwrap();
        let raw = sketch.query_dense(f, q).unwrap().outputs;
        let oracle = Oracle::new(&data, &E, None, q).unwrap();
        prop_assume!(raw.iter().all(|o| oracle.verify_output(o, cfg.epsilon, f).unwrap()));

        let kept = dedup_theorem(&raw, &E).unwrap();
        let bound = (1.0 / ((1.0 - cfg.epsilon) * f)).floor() as usize;
        prop_assert!(kept.len() <= bound, "{} > {bound}", kept.len());
        for (i, a) in kept.iter().enumerate() {
            for b in &kept[i + 1..] {
                prop_assert!(E.distance(&a.point, &b.point).unwrap() > a.radius + b.radius);
            }
        }
        prop_assert_eq!(dedup_theorem(&kept, &E).unwrap(), kept);

        let mut by_freq = raw.clone();
        OutputOrder::Frequency.sort(&mut by_freq);
        let thin = dedup_threshold(&by_freq, 0.5, &E).unwrap();
        prop_assert_eq!(dedup_threshold(&thin, 0.5, &E).unwrap(), thin);
    }
}

#[test]
fn cluster_centres_keep_a_nearby_output_after_theorem_dedup() {
    let f = 0.1;
    for seed in 0..40 {
        let spec = mixture(4, 0.3, seed);
        let data: Dataset = gaussian_mixture_stream(&spec).unwrap();
        let cfg = HacConfig::new(f, 0.5, 0.5).with_radii(0.05, 2.0, 5).with_seed(seed);
        let reach = 4.0 * cfg.gamma + 3.0;
        let mut sketch = Sketch::new(cfg).unwrap();
        sketch.process_all(data.points()).unwrap();
        let q = data.last_time().unwrap();
        let kept = dedup_theorem(&sketch.query_dense(f, q).unwrap().outputs, &E).unwrap();
        let oracle = Oracle::new(&data, &E, None, q).unwrap();
        for mean in spec.cluster_means().unwrap() {
            let p = Point::new(q, mean);
            let rf = oracle.r_f(&p, f).unwrap();
            let nearest = kept.iter().map(|o| E.distance(&o.point, &p).unwrap()).fold(f64::INFINITY, f64::min);
            assert!(nearest <= reach * rf, "seed {seed}: nearest output {nearest}, r_f {rf}");
        }
    }
}
