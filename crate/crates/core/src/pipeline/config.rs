use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::harmonics::{FitOptions, OutOfMask, Solver};
use crate::patch::{FilterOptions, FitMask, SegmentOptions};
use crate::spheremap::ConformalOptions;
use crate::transfer::{AssignParams, CostNormalization, MatchWeights, TransferOptions};

use super::{PipelineError, SyntheticSpec};

/// Everything a pipeline run depends on. When `source` and `target` are
/// absent the inputs come from `synthetic` and `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub source: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub landmarks: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub synthetic: Option<SyntheticSpec>,
    pub order: usize,
    /// Name of a weight preset; overrides `weights` when set.
    pub preset: Option<String>,
    pub weights: MatchWeights,
    pub normalization: CostNormalization,
    pub assign: AssignParams,
    pub filter: FilterOptions,
    pub segment: SegmentOptions,
    pub conformal: ConformalOptions,
    pub regularization: f64,
    pub solver: Solver,
    pub out_of_mask: OutOfMask,
    pub fit_mask: FitMask,
    pub cache: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            source: None,
            target: None,
            ground_truth: None,
            landmarks: None,
            out_dir: PathBuf::from("out"),
            seed: 0,
            synthetic: None,
            order: 16,
            preset: None,
            weights: MatchWeights::default(),
            normalization: CostNormalization::default(),
            assign: AssignParams::default(),
            filter: FilterOptions::default(),
            segment: SegmentOptions::default(),
            conformal: ConformalOptions::default(),
            regularization: FitOptions::default().regularization,
            solver: FitOptions::default().solver,
            out_of_mask: FitOptions::default().out_of_mask,
            fit_mask: FitMask::default(),
            cache: true,
        }
    }
}

/// Reproducibility header written into every JSON artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

impl PipelineConfig {
    /// Reads a config file. Relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.source, &mut cfg.target, &mut cfg.ground_truth, &mut cfg.landmarks]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate_params()?;
        Ok(cfg)
    }

    /// Full check for a run: parameters plus a usable input source.
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.validate_params()?;
        match (&self.source, &self.target, &self.synthetic) {
            (Some(_), Some(_), _) | (None, None, Some(_)) => Ok(()),
            _ => Err(PipelineError::Config(
                "give both `source` and `target`, or a `synthetic` spec".into(),
            )),
        }
    }

    /// Checks every numeric parameter without requiring input paths.
    pub fn validate_params(&self) -> Result<(), PipelineError> {
        if self.order < 1 {
            return Err(PipelineError::Config("order must be at least 1".into()));
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return Err(PipelineError::Config(format!(
                "regularization must be finite and non-negative, got {}",
                self.regularization
            )));
        }
        if let Some(name) = &self.preset {
            if MatchWeights::preset(name).is_none() {
                return Err(PipelineError::Config(format!(
                    "unknown preset `{name}` (known: {})",
                    MatchWeights::PRESETS.join(", ")
                )));
            }
        }
        let w = self.weights;
        MatchWeights::new(w.alpha, w.beta, w.gamma, w.delta, w.lambda)
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.assign.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if let Some(s) = &self.synthetic {
            s.validate()?;
        }
        Ok(())
    }

    pub fn weights(&self) -> MatchWeights {
        self.preset.as_deref().and_then(MatchWeights::preset).unwrap_or(self.weights)
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            order: self.order,
            regularization: self.regularization,
            solver: self.solver,
            out_of_mask: self.out_of_mask,
        }
    }

    pub fn transfer_options(&self) -> TransferOptions {
        TransferOptions {
            conformal: self.conformal,
            filter: self.filter,
            segment: self.segment,
            fit: self.fit_options(),
            mask: self.fit_mask,
            weights: self.weights(),
            normalization: self.normalization,
            assign: self.assign,
        }
    }

    /// SHA-256 of the canonical JSON form, excluding `out_dir` and `cache`
    /// which do not affect results.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        c.cache = true;
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            config_hash: self.hash(),
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic() -> PipelineConfig {
        PipelineConfig {
            synthetic: Some(SyntheticSpec::default()),
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn default_synthetic_config_is_valid() {
        synthetic().validate().unwrap();
        assert!(PipelineConfig::default().validate().is_err());
    }

    #[test]
    fn bad_values_are_config_errors() {
        let c = PipelineConfig { order: 0, ..synthetic() };
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
        let c = PipelineConfig {
            preset: Some("nope".into()),
            ..synthetic()
        };
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = synthetic();
        let b = PipelineConfig {
            out_dir: "elsewhere".into(),
            ..synthetic()
        };
        assert_eq!(a.hash(), b.hash());
        let c = PipelineConfig { seed: 1, ..synthetic() };
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let c = synthetic();
        let back: PipelineConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"ordr": 3}"#).is_err());
    }
}
