//! Experiment configuration: per-experiment defaults, TOML overrides and command-line overrides,
//! resolved into a complete [`ExperimentConfig`] whose canonical JSON is hashed into the manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::HarnessError;

pub const EXPERIMENTS: [&str; 8] = ["counting", "equidist", "geometry", "trace", "aprox", "crossover", "excursion", "ubiquity"];

/// A fully resolved experiment configuration. List-valued form parameters are aligned: case `i`
/// uses `forms[i]`, `q_max[i]` and `patch[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    /// Catalog names (`circle`, `sphere`, `split22`, ...) or inline form text.
    pub forms: Vec<String>,
    pub q_max: Vec<i64>,
    /// Half-width of the centered chart box.
    pub patch: Vec<f64>,
    pub base: f64,
    pub k_min: Option<i64>,
    /// Rational exponents as `"p/q"` strings.
    pub alpha: Vec<String>,
    pub beta: Vec<String>,
    /// Shell width `T`; `None` selects `2 sqrt2 ln base`.
    pub shell_width: Option<f64>,
    pub t_max: f64,
    pub dt: f64,
    pub samples: u64,
    pub instances: usize,
    pub kappa: f64,
    pub r1: f64,
    pub balls: usize,
}

/// Optional overrides, as read from a TOML file or the command line.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub forms: Option<Vec<String>>,
    pub q_max: Option<Vec<i64>>,
    pub patch: Option<Vec<f64>>,
    pub base: Option<f64>,
    pub k_min: Option<i64>,
    pub alpha: Option<Vec<String>>,
    pub beta: Option<Vec<String>>,
    pub shell_width: Option<f64>,
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
    pub samples: Option<u64>,
    pub instances: Option<usize>,
    pub kappa: Option<f64>,
    pub r1: Option<f64>,
    pub balls: Option<usize>,
}

impl ExperimentConfig {
    /// Defaults reproducing the acceptance settings of each experiment.
    pub fn defaults(experiment: &str) -> Result<Self, HarnessError> {
        let base = Self {
            experiment: experiment.to_string(),
            seed: 1,
            forms: vec!["circle".into(), "sphere".into()],
            q_max: vec![1 << 12, 1 << 9],
            patch: vec![1.0, 1.0],
            base: 2.0,
            k_min: None,
            alpha: vec!["2".into()],
            beta: vec!["1/4".into(), "1/2".into(), "3/4".into()],
            shell_width: None,
            t_max: 60.0,
            dt: 0.05,
            samples: 200_000,
            instances: 200,
            kappa: 2.0,
            r1: 0.2,
            balls: 50,
        };
        let cfg = match experiment {
            "counting" => base,
            "equidist" => Self { forms: vec!["sphere".into()], q_max: vec![1 << 9], patch: vec![0.6], ..base },
            "geometry" => Self { forms: vec!["split22".into()], q_max: vec![], patch: vec![], ..base },
            "trace" => Self { forms: vec!["split22".into()], q_max: vec![], patch: vec![], ..base },
            "aprox" => Self { q_max: vec![500, 500], alpha: vec!["1/2".into()], instances: 20, ..base },
            "crossover" => Self { q_max: vec![1 << 10, 1 << 9], patch: vec![1.0, 0.7], ..base },
            "excursion" => Self { forms: vec!["circle".into()], q_max: vec![1 << 10], patch: vec![1.0], balls: 100, ..base },
            "ubiquity" => Self { forms: vec!["circle".into()], q_max: vec![1 << 12], patch: vec![1.0], ..base },
            other => return Err(HarnessError::UnknownExperiment(other.to_string())),
        };
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &ConfigOverrides) {
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = &o.$f { self.$f = v.clone(); } )* };
        }
        take!(seed, forms, q_max, patch, base, alpha, beta, t_max, dt, samples, instances, kappa, r1, balls);
        if o.k_min.is_some() {
            self.k_min = o.k_min;
        }
        if o.shell_width.is_some() {
            self.shell_width = o.shell_width;
        }
        // Lists shorter or longer than `forms` are replaced by copies of their first entry.
        let n = self.forms.len();
        if !self.q_max.is_empty() && self.q_max.len() != n {
            self.q_max = vec![self.q_max[0]; n];
        }
        if !self.patch.is_empty() && self.patch.len() != n {
            self.patch = vec![self.patch[0]; n];
        }
    }

    /// Defaults for the experiment named in the overrides (or `experiment`), then the overrides.
    pub fn resolve(experiment: Option<&str>, overrides: &ConfigOverrides) -> Result<Self, HarnessError> {
        let name = overrides
            .experiment
            .as_deref()
            .or(experiment)
            .ok_or_else(|| HarnessError::Config("no experiment named".into()))?;
        let mut cfg = Self::defaults(name)?;
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.forms.is_empty() {
            return bad("at least one form is needed");
        }
        if !self.q_max.is_empty() && self.q_max.iter().any(|&q| q < 1) {
            return bad("q_max must be positive");
        }
        if self.patch.iter().any(|&r| !(r > 0.0)) {
            return bad("patch half-widths must be positive");
        }
        if !(self.base > 1.0) {
            return bad("base must exceed 1");
        }
        if !(self.dt > 0.0) || !(self.t_max > 0.0) {
            return bad("need dt > 0 and t_max > 0");
        }
        for a in self.alpha.iter().chain(&self.beta) {
            quadcusp::rational::parse_rat(a).map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configs serialize")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn shell_width(&self) -> f64 {
        self.shell_width.unwrap_or(2.0 * std::f64::consts::SQRT_2 * self.base.ln())
    }
}

/// Reads overrides from a TOML file, or a complete configuration from a manifest written by a
/// previous run (`*.json`).
pub fn load_file(path: &Path) -> Result<ConfigOverrides, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        #[derive(Deserialize)]
        struct ManifestConfig {
            config: ExperimentConfig,
        }
        let m: ManifestConfig = serde_json::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?;
        let c = m.config;
        return Ok(ConfigOverrides {
            experiment: Some(c.experiment),
            seed: Some(c.seed),
            forms: Some(c.forms),
            q_max: Some(c.q_max),
            patch: Some(c.patch),
            base: Some(c.base),
            k_min: c.k_min,
            alpha: Some(c.alpha),
            beta: Some(c.beta),
            shell_width: c.shell_width,
            t_max: Some(c.t_max),
            dt: Some(c.dt),
            samples: Some(c.samples),
            instances: Some(c.instances),
            kappa: Some(c.kappa),
            r1: Some(c.r1),
            balls: Some(c.balls),
        });
    }
    toml::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_experiment_has_valid_defaults() {
        for e in EXPERIMENTS {
            ExperimentConfig::defaults(e).unwrap().validate().unwrap();
        }
        assert!(matches!(ExperimentConfig::defaults("nope"), Err(HarnessError::UnknownExperiment(_))));
    }

    #[test]
    fn toml_overrides_and_hash() {
        let o: ConfigOverrides = toml::from_str("seed = 9\nforms = [\"circle\"]\nq_max = [64]\nalpha = [\"3/2\"]\n").unwrap();
        let cfg = ExperimentConfig::resolve(Some("counting"), &o).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.patch, vec![1.0]);
        assert_eq!(cfg.q_max, vec![64]);
        let again = ExperimentConfig::resolve(Some("counting"), &o).unwrap();
        assert_eq!(cfg.hash(), again.hash());
        let other = ExperimentConfig::resolve(Some("counting"), &ConfigOverrides::default()).unwrap();
        assert_ne!(cfg.hash(), other.hash());
        assert!(toml::from_str::<ConfigOverrides>("bogus = 1").is_err());
        let bad = ConfigOverrides { alpha: Some(vec!["x/2".into()]), ..Default::default() };
        assert!(ExperimentConfig::resolve(Some("counting"), &bad).is_err());
    }
}
