//! Run configuration (TOML). Every field has a default, so an empty file is
//! a valid config; defaults are the best settings reported for the method.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::astpath::PathLimits;
use crate::detect::DetectParams;
use crate::embed::DEFAULT_DIM;
use crate::eval::TuningGrid;
use crate::inject::{AttackType, CampaignConfig};
use crate::{Error, Result};

/// Environment variable overriding `output.dir`.
pub const OUT_DIR_ENV: &str = "INJDETECT_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub path: PathBuf,
    /// Only the `top_k` most common function types are analyzed.
    pub top_k: usize,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection {
            path: PathBuf::from("data/synthetic_corpus.jsonl"),
            top_k: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    pub dim: usize,
    pub seed: u64,
    pub max_path_length: usize,
    pub max_path_width: usize,
    /// Precomputed `{id, vector}` JSONL used instead of hashing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub import_path: Option<PathBuf>,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        let limits = PathLimits::default();
        EmbeddingSection {
            dim: DEFAULT_DIM,
            seed: 7,
            max_path_length: limits.max_path_length,
            max_path_width: limits.max_path_width,
            import_path: None,
        }
    }
}

impl EmbeddingSection {
    pub fn limits(&self) -> PathLimits {
        PathLimits {
            max_path_length: self.max_path_length,
            max_path_width: self.max_path_width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CampaignMode {
    /// One campaign per attack type, all with the same seed; each
    /// (type, attack) cell is evaluated on its own campaign.
    #[default]
    PerAttack,
    /// A single campaign drawing the attack per injected record.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSection {
    pub enabled: bool,
    pub rate: f64,
    pub attacks: Vec<AttackType>,
    pub seed: u64,
    /// Empty means every analyzed type.
    pub target_types: Vec<String>,
    pub mode: CampaignMode,
}

impl Default for CampaignSection {
    fn default() -> Self {
        CampaignSection {
            enabled: true,
            rate: 0.1,
            attacks: AttackType::ALL.to_vec(),
            seed: 42,
            target_types: Vec::new(),
            mode: CampaignMode::PerAttack,
        }
    }
}

impl CampaignSection {
    pub fn campaign_config(&self, types: &[String], attacks: Vec<AttackType>) -> CampaignConfig {
        CampaignConfig {
            rate: self.rate,
            attacks,
            seed: self.seed,
            target_types: if self.target_types.is_empty() {
                types.to_vec()
            } else {
                self.target_types.clone()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub k_max: usize,
    pub folds: usize,
    /// Fraction of each type's records that ECOD flags as detected.
    pub ecod_contamination: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuning: Option<TuningGrid>,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            k_max: 10,
            folds: 10,
            ecod_contamination: 0.1,
            tuning: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("runs/default"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: CorpusSection,
    pub embedding: EmbeddingSection,
    pub campaign: CampaignSection,
    pub detection: DetectParams,
    pub eval: EvalSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&crate::io::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies the output-directory environment override.
    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()) {
            self.output.dir = PathBuf::from(dir);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.corpus.top_k == 0 {
            return bad("corpus.top_k must be at least 1".into());
        }
        if self.embedding.dim < 2 {
            return bad(format!("embedding.dim must be at least 2, got {}", self.embedding.dim));
        }
        if self.embedding.max_path_length < 2 {
            return bad("embedding.max_path_length must be at least 2".into());
        }
        if !(self.detection.eps > 0.0 && self.detection.eps.is_finite()) {
            return bad(format!("detection.eps must be positive, got {}", self.detection.eps));
        }
        if self.detection.min_samples == 0 {
            return bad("detection.min_samples must be at least 1".into());
        }
        if self.eval.k_max == 0 {
            return bad("eval.k_max must be at least 1".into());
        }
        if self.eval.folds < 2 {
            return bad(format!("eval.folds must be at least 2, got {}", self.eval.folds));
        }
        if !(self.eval.ecod_contamination > 0.0 && self.eval.ecod_contamination <= 1.0) {
            return bad("eval.ecod_contamination must be in (0, 1]".into());
        }
        if self.campaign.enabled {
            if !(self.campaign.rate > 0.0 && self.campaign.rate <= crate::inject::MAX_RATE) {
                return bad(format!("campaign.rate must be in (0, 0.1], got {}", self.campaign.rate));
            }
            if self.campaign.attacks.is_empty() {
                return bad("campaign.attacks must not be empty".into());
            }
        }
        if let Some(grid) = &self.eval.tuning {
            grid.validate()
                .map_err(|e| Error::Config(format!("eval.tuning: {e}")))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::Method;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.detection.eps, 0.3);
        assert_eq!(cfg.detection.min_samples, 10);
        assert_eq!(cfg.embedding.dim, 320);
    }

    #[test]
    fn sections_parse_and_round_trip() {
        let text = r#"
[corpus]
path = "c.jsonl"

[campaign]
attacks = ["exec_obfuscated", "os_system_obfuscated"]
mode = "mixed"

[detection]
method = "ecod"

[eval.tuning]
eps = [0.2, 0.3]
min_samples = [5, 10]
"#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.detection.method, Method::Ecod);
        assert_eq!(cfg.campaign.mode, CampaignMode::Mixed);
        assert_eq!(cfg.eval.tuning.as_ref().unwrap().eps, vec![0.2, 0.3]);
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(RunConfig::from_toml("[detection]\neps = 0.0\n").is_err());
        assert!(RunConfig::from_toml("[campaign]\nrate = 0.5\n").is_err());
        assert!(RunConfig::from_toml("[eval]\nfolds = 1\n").is_err());
        assert!(RunConfig::from_toml("[bogus]\nx = 1\n").is_err());
        assert!(RunConfig::from_toml("[eval.tuning]\neps = []\nmin_samples = [2]\n").is_err());
    }
}
