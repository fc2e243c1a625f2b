//! TOML config file: `[sketch]`, `[metric]`, `[dedup]` and `[tracker]`.

use std::path::Path;

use hac_core::tracker::TrackerConfig;
use hac_core::{DedupPolicy, HacConfig, MetricSpec};
use serde::Deserialize;

use crate::Failure;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SketchSection {
    pub f0: f64,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default = "one")]
    pub r0: f64,
    #[serde(default = "two")]
    pub gamma: f64,
    #[serde(default)]
    pub c: u32,
    /// Omitted means no decay.
    pub tau: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub sketch: Option<SketchSection>,
    #[serde(default)]
    pub metric: MetricSpec,
    #[serde(default)]
    pub dedup: Option<DedupPolicy>,
    #[serde(default)]
    pub tracker: Option<TrackerConfig>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        Self::parse(&text).map_err(|f| f.context(&path.display().to_string()))
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| Failure::format(e.to_string().trim_end()))?;
        cfg.metric.validate()?;
        if let Some(d) = &cfg.dedup {
            d.validate()?;
        }
        if let Some(t) = &cfg.tracker {
            t.validate()?;
        }
        if cfg.sketch.is_some() {
            cfg.hac_config(None)?;
        }
        Ok(cfg)
    }

    /// The sketch config, with `seed` (flag or `HAC_SEED`) taking precedence
    /// over the file.
    pub fn hac_config(&self, seed: Option<u64>) -> Result<HacConfig, Failure> {
        let s = self
            .sketch
            .as_ref()
            .ok_or_else(|| Failure::contract("the config file needs a [sketch] section"))?;
        let cfg = HacConfig {
            f0: s.f0,
            epsilon: s.epsilon,
            delta: s.delta,
            r0: s.r0,
            gamma: s.gamma,
            c: s.c,
            tau: s.tau,
            metric: self.metric.clone(),
            seed: seed.unwrap_or(s.seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn tracker(&self, seed: Option<u64>) -> TrackerConfig {
        let mut t = self.tracker.clone().unwrap_or_default();
        if let Some(seed) = seed {
            t.seed = seed;
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file_parses() {
        let cfg = ConfigFile::parse(
            r#"
            [sketch]
            f0 = 0.02
            epsilon = 0.5
            delta = 0.5
            r0 = 0.5
            tau = 30.0
            seed = 4

            [metric]
            kind = "cosine-angular"

            [dedup]
            variant = "threshold"
            r_d = 0.65

            [tracker]
            tau_s = 5.0
            "#,
        )
        .unwrap();
        let hac = cfg.hac_config(None).unwrap();
        assert_eq!(hac.slot_count(), 461);
        assert_eq!(hac.seed, 4);
        assert_eq!(cfg.hac_config(Some(9)).unwrap().seed, 9);
        assert_eq!(cfg.dedup, Some(DedupPolicy::Threshold { r_d: 0.65 }));
        assert_eq!(cfg.tracker(None).tau_s, 5.0);
    }

    #[test]
    fn unknown_keys_are_rejected_in_every_section() {
        let base = "[sketch]\nf0 = 0.1\nepsilon = 0.5\ndelta = 0.5\n";
        for extra in [
            "bogus = 1\n",
            "[metric]\nkind = \"euclidean\"\nbogus = 1\n",
            "[dedup]\nvariant = \"theorem\"\nbogus = 1\n",
            "[tracker]\nbogus = 1\n",
            "[extra]\n",
        ] {
            let err = ConfigFile::parse(&format!("{base}{extra}")).unwrap_err();
            assert_eq!(err.code, 3, "{extra}: {}", err.message);
            assert!(err.message.contains("bogus") || err.message.contains("extra"), "{}", err.message);
        }
    }

    #[test]
    fn out_of_range_values_name_the_field() {
        let err = ConfigFile::parse("[sketch]\nf0 = 0.1\nepsilon = 1.5\ndelta = 0.5\n").unwrap_err();
        assert_eq!(err.code, 2);
        assert!(err.message.contains("epsilon"), "{}", err.message);
        let err = ConfigFile::parse("[dedup]\nvariant = \"threshold\"\nr_d = -1.0\n").unwrap_err();
        assert!(err.message.contains("r_d"), "{}", err.message);
        let err = ConfigFile::parse("[tracker]\ntau_s = 10.0\ntau_l = 5.0\n").unwrap_err();
        assert!(err.message.contains("tau_l"), "{}", err.message);
    }
}
