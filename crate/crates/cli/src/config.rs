//! JSON run configuration.

use std::path::{Path, PathBuf};

use covmis::detect::DetectorKind;
use covmis::mcengine::{min_calibration_trials, SimPath, ThresholdPolicy};
use covmis::mismatch::MismatchSpec;
use covmis::scenario::ScenarioCfg;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Failure;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioCfg,
    #[serde(default = "default_mismatch")]
    pub mismatch: MismatchSpec,
    /// Detectors with a fixed `κ`.
    #[serde(default = "default_detectors")]
    pub detectors: Vec<DetectorKind>,
    /// `c` grid of the clairvoyant Kalson detector (`κ = c·Ω₂.₁`); empty disables it.
    #[serde(default)]
    pub clairvoyant_c: Vec<f64>,
    /// Thresholds used by `sweep` and `roc`; defaults to `nominal` and `per_detector`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_policy: Option<ThresholdPolicy>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Number of `Σ_t` draws in `sweep`, `roc` and the GER census.
    #[serde(default = "default_draws")]
    pub n_draws: u64,
    /// Number of `Σ_t` draws in `cdf`.
    #[serde(default = "default_cdf_draws")]
    pub cdf_draws: u64,
    #[serde(default)]
    pub trials: Trials,
    #[serde(default = "default_pfa")]
    pub pfa_target: f64,
    #[serde(default = "default_pd")]
    pub pd_target: f64,
    /// Also estimate `P_d` in `sweep`.
    #[serde(default)]
    pub with_pd: bool,
    #[serde(default)]
    pub path: SimPath,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Trials {
    pub calibration: u64,
    pub pfa: u64,
    pub pd: u64,
    pub pd_calibration: u64,
    pub cdf_samples: u64,
    pub validate: u64,
}

impl Default for Trials {
    fn default() -> Self {
        Self {
            calibration: 10_000_000,
            pfa: 1_000_000,
            pd: 100_000,
            pd_calibration: 100_000,
            cdf_samples: 100_000,
            validate: 200_000,
        }
    }
}

fn default_mismatch() -> MismatchSpec {
    MismatchSpec::Identity
}

fn default_detectors() -> Vec<DetectorKind> {
    vec![DetectorKind::Kelly, DetectorKind::Amf]
}

fn default_seed() -> u64 {
    1
}

fn default_draws() -> u64 {
    50
}

fn default_cdf_draws() -> u64 {
    10
}

fn default_pfa() -> f64 {
    1e-3
}

fn default_pd() -> f64 {
    0.7
}

fn bad(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let cfg = |e: covmis::Error| bad(e.to_string());
        self.scenario.validate().map_err(cfg)?;
        self.mismatch.validate(self.scenario.n).map_err(cfg)?;
        for d in &self.detectors {
            d.validate().map_err(cfg)?;
        }
        if self.detectors.is_empty() && self.clairvoyant_c.is_empty() {
            return Err(bad("no detectors configured"));
        }
        if let Some(c) = self
            .clairvoyant_c
            .iter()
            .find(|c| !(**c > 0.0 && c.is_finite()))
        {
            return Err(bad(format!("clairvoyant c = {c} must be positive")));
        }
        for (name, p) in [
            ("pfa_target", self.pfa_target),
            ("pd_target", self.pd_target),
        ] {
            if !(p > 0.0 && p < 1.0) {
                return Err(bad(format!("{name} = {p} outside (0, 1)")));
            }
        }
        if self.n_draws == 0 || self.cdf_draws == 0 {
            return Err(bad("n_draws and cdf_draws must be positive"));
        }
        let t = &self.trials;
        if [t.pfa, t.pd, t.pd_calibration, t.cdf_samples, t.validate].contains(&0) {
            return Err(bad("trial counts must be positive"));
        }
        let required = min_calibration_trials(self.pfa_target);
        if t.calibration < required {
            return Err(bad(format!(
                "trials.calibration = {} below {required} needed for pfa_target {:e}",
                t.calibration, self.pfa_target
            )));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON, ignoring where outputs are written.
    pub fn hash(&self) -> String {
        let canonical = Self {
            out_dir: None,
            ..self.clone()
        };
        let bytes = serde_json::to_vec(&canonical).expect("config serialises");
        hex::encode(Sha256::digest(bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunConfig, serde_json::Error> {
        serde_json::from_str(s)
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse(r#"{"scenario": {"n": 16, "k": 32}}"#).unwrap();
        assert_eq!(c.mismatch, MismatchSpec::Identity);
        assert_eq!(c.detectors.len(), 2);
        assert_eq!(c.trials.calibration, 10_000_000);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse(r#"{"scenario": {"n": 16, "k": 32}, "seeds": 3}"#).is_err());
        assert!(parse(r#"{"scenario": {"n": 16, "k": 32, "cnr": 3}}"#).is_err());
        assert!(parse(r#"{"scenario": {"n": 16, "k": 32}, "trials": {"pfa_": 3}}"#).is_err());
    }

    #[test]
    fn hash_ignores_out_dir_only() {
        let a = parse(r#"{"scenario": {"n": 16, "k": 32}}"#).unwrap();
        let b = RunConfig {
            out_dir: Some("elsewhere".into()),
            ..a.clone()
        };
        let c = RunConfig {
            seed: 2,
            ..a.clone()
        };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn small_calibration_is_a_config_error() {
        let mut c = parse(r#"{"scenario": {"n": 16, "k": 32}, "pfa_target": 1e-4}"#).unwrap();
        c.trials.calibration = 500_000;
        assert!(matches!(c.validate(), Err(Failure::Config(_))));
    }
}
