//! Artifact output. Every experiment writes `report.json` (checks and results), CSV tables, a
//! gnuplot script and `manifest.json` holding the resolved config, its hash, the derived seeds
//! and the SHA-256 of every artifact. Nothing time- or host-dependent is written.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use quadcusp::json::{format_real, ser_real};
use serde::Serialize;
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::HarnessError;

/// One acceptance check.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    #[serde(serialize_with = "ser_real")]
    pub value: f64,
    pub target: String,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub experiment: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub dir: PathBuf,
}

impl Outcome {
    pub fn summary_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| format!("{} {}: {} = {} (target {})", if c.pass { "PASS" } else { "FAIL" }, self.experiment, c.name, format_real(c.value), c.target))
            .collect()
    }
}

#[derive(Serialize)]
struct Report<'a> {
    experiment: &'a str,
    anchor: &'a str,
    config_hash: &'a str,
    seed: u64,
    pass: bool,
    checks: &'a [Check],
    results: &'a BTreeMap<String, Box<RawValue>>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    version: &'a str,
    config_hash: &'a str,
    config: &'a ExperimentConfig,
    seeds: &'a BTreeMap<String, u64>,
    files: &'a BTreeMap<String, String>,
}

/// Collects the checks and artifacts of one experiment run.
pub struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    dir: PathBuf,
    anchor: String,
    checks: Vec<Check>,
    results: BTreeMap<String, Box<RawValue>>,
    seeds: BTreeMap<String, u64>,
    files: BTreeMap<String, String>,
}

impl<'a> Ctx<'a> {
    pub fn new(cfg: &'a ExperimentConfig, dir: &Path) -> Result<Self, HarnessError> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            cfg,
            dir: dir.to_path_buf(),
            anchor: String::new(),
            checks: Vec::new(),
            results: BTreeMap::new(),
            seeds: BTreeMap::new(),
            files: BTreeMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn set_anchor(&mut self, anchor: &str) {
        self.anchor = anchor.to_string();
    }

    /// A seed derived from the config seed and a label, recorded in the manifest.
    pub fn seed(&mut self, label: &str) -> u64 {
        let seed = derive_seed(self.cfg.seed, label);
        self.seeds.insert(label.to_string(), seed);
        seed
    }

    pub fn check(&mut self, name: impl Into<String>, value: f64, target: impl Into<String>, pass: bool) {
        self.checks.push(Check { name: name.into(), value, target: target.into(), pass });
    }

    pub fn result<T: Serialize>(&mut self, key: &str, value: &T) -> Result<(), HarnessError> {
        let text = serde_json::to_string(value).map_err(|e| HarnessError::Io(e.to_string()))?;
        let raw = RawValue::from_string(text).map_err(|e| HarnessError::Io(e.to_string()))?;
        self.results.insert(key.to_string(), raw);
        Ok(())
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), HarnessError> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.files.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    /// Writes a CSV table; reals are formatted with 17 significant digits by the caller via
    /// [`real`].
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
        self.write(name, &bytes)
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<(), HarnessError> {
        self.write(name, body.as_bytes())
    }

    pub fn finish(mut self) -> Result<Outcome, HarnessError> {
        let pass = !self.checks.is_empty() && self.checks.iter().all(|c| c.pass);
        let hash = self.cfg.hash();
        let report = Report {
            experiment: &self.cfg.experiment,
            anchor: &self.anchor,
            config_hash: &hash,
            seed: self.cfg.seed,
            pass,
            checks: &self.checks,
            results: &self.results,
        };
        let body = serde_json::to_string_pretty(&report).map_err(|e| HarnessError::Io(e.to_string()))? + "\n";
        self.write("report.json", body.as_bytes())?;
        let manifest = Manifest {
            experiment: &self.cfg.experiment,
            version: env!("CARGO_PKG_VERSION"),
            config_hash: &hash,
            config: self.cfg,
            seeds: &self.seeds,
            files: &self.files,
        };
        let body = serde_json::to_string_pretty(&manifest).map_err(|e| HarnessError::Io(e.to_string()))? + "\n";
        std::fs::write(self.dir.join("manifest.json"), body)?;
        Ok(Outcome { experiment: self.cfg.experiment.clone(), pass, checks: self.checks, dir: self.dir })
    }
}

pub fn real(x: f64) -> String {
    format_real(x)
}

/// First eight bytes of `SHA-256(seed_le || label)`.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_depend_on_label_and_base() {
        assert_eq!(derive_seed(1, "a"), derive_seed(1, "a"));
        assert_ne!(derive_seed(1, "a"), derive_seed(1, "b"));
        assert_ne!(derive_seed(1, "a"), derive_seed(2, "a"));
    }

    #[test]
    fn artifacts_are_hashed_and_reports_written() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::defaults("counting").unwrap();
        let mut ctx = Ctx::new(&cfg, dir.path()).unwrap();
        ctx.check("x", 0.5, "< 1", true);
        ctx.csv("t.csv", &["a", "b"], &[vec!["1".into(), real(0.25)]]).unwrap();
        ctx.result("r", &vec![1, 2]).unwrap();
        let out = ctx.finish().unwrap();
        assert!(out.pass);
        let report = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        assert!(report.contains("\"results\""));
        assert!(report.contains("5.0000000000000000e-1"));
        let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        assert!(manifest.contains("t.csv") && manifest.contains("report.json"));
        assert_eq!(std::fs::read_to_string(dir.path().join("t.csv")).unwrap(), "a,b\n1,2.5000000000000000e-1\n");
    }
}
