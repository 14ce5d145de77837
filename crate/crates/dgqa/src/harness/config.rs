//! Experiment configuration: one JSON document drives every subcommand.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distortion::{lookup_family, registry_default, DomainId};
use crate::error::{Error, Result};
use crate::features::PatchPolicy;
use crate::models::TrainConfig;

/// How a mixture component set combines into one target image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureMode {
    /// Each target image draws one component (by weight).
    SingleDraw,
    /// Every component is applied sequentially, in listed order.
    Stacked,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub family: DomainId,
    pub levels: Vec<u8>,
    pub weight: f64,
}

/// Recipe for a synthetic target set: a weighted mixture of distortion
/// families over held-out references.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetMixtureRecipe {
    pub components: Vec<MixtureComponent>,
    #[serde(default = "default_mixture_mode")]
    pub mode: MixtureMode,
    /// Exact proportional component counts instead of seeded draws.
    #[serde(default)]
    pub stratified: bool,
}

fn default_mixture_mode() -> MixtureMode {
    MixtureMode::SingleDraw
}

impl TargetMixtureRecipe {
    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::validation("mixture recipe needs >= 1 component"));
        }
        for c in &self.components {
            lookup_family(c.family)?;
            validate_levels(&c.levels)?;
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::validation(format!(
                    "component {} weight {} must be positive",
                    c.family, c.weight
                )));
            }
        }
        Ok(())
    }

    /// Weights normalized to sum 1, in component order.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        self.components.iter().map(|c| c.weight / total).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSpec {
    /// Synthesize the target from held-out references with a recipe.
    Mixture {
        recipe: TargetMixtureRecipe,
        count: usize,
    },
    /// Use an existing directory of PNG images (unlabeled).
    Directory { dir: PathBuf },
}

fn default_domains() -> Vec<DomainId> {
    registry_default().into_iter().map(|f| f.id).collect()
}

fn default_levels() -> Vec<u8> {
    vec![1, 2, 3, 4, 5]
}

fn default_n_repeats() -> usize {
    5
}

fn default_split_ratio() -> f64 {
    0.8
}

fn default_source_ref_ratio() -> f64 {
    0.75
}

fn default_hidden() -> Option<usize> {
    Some(crate::models::DEFAULT_HIDDEN)
}

/// The experiment configuration; every subcommand takes one of these.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Source-domain registry subset for this run.
    #[serde(default = "default_domains")]
    pub domains: Vec<DomainId>,
    /// Directory of pristine reference PNGs.
    pub refs_dir: PathBuf,
    /// Share of references assigned to the source side; the rest build the
    /// mixture target. Ignored for directory targets.
    #[serde(default = "default_source_ref_ratio")]
    pub source_ref_ratio: f64,
    pub target: TargetSpec,
    /// Selection threshold; `None` means 1/k.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub patch: PatchPolicy,
    #[serde(default = "default_levels")]
    pub levels: Vec<u8>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_repeats")]
    pub n_repeats: usize,
    #[serde(default = "default_split_ratio")]
    pub split_ratio: f64,
    pub out_dir: PathBuf,
    #[serde(default = "default_hidden")]
    pub hidden: Option<usize>,
    /// Domains whose pseudo-MOS labels are stored inverted (100 - q) — the
    /// constructed outlier sources for negative-transfer experiments.
    #[serde(default)]
    pub invert_label_domains: Vec<DomainId>,
}

fn validate_levels(levels: &[u8]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::validation("empty level set"));
    }
    for &l in levels {
        if !(1..=5).contains(&l) {
            return Err(Error::LevelOutOfRange(l));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    /// Parse a config document. Accepts either a bare config or a `run.json`
    /// written by an earlier run (the embedded config is extracted).
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::json(origin, e))?;
        let config_value = match value.get("config") {
            Some(inner) if value.get("command").is_some() => inner.clone(),
            _ => value,
        };
        serde_json::from_value(config_value).map_err(|e| Error::json(origin, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config = Self::from_json(&text, path)?;
        config.validate()?;
        Ok(config)
    }

    /// Structural validation plus existence checks for referenced paths,
    /// performed before any compute.
    pub fn validate(&self) -> Result<()> {
        if self.domains.is_empty() {
            return Err(Error::validation("empty domain list"));
        }
        let unique: BTreeSet<DomainId> = self.domains.iter().copied().collect();
        if unique.len() != self.domains.len() {
            return Err(Error::validation("duplicate domain ids"));
        }
        for &d in &self.domains {
            lookup_family(d)?;
        }
        if !self.refs_dir.is_dir() {
            return Err(Error::io(
                &self.refs_dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "reference directory not found"),
            ));
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0 && tau < 1.0) {
                return Err(Error::validation(format!("tau {tau} outside (0,1)")));
            }
        }
        validate_levels(&self.levels)?;
        match &self.target {
            TargetSpec::Mixture { recipe, count } => {
                recipe.validate()?;
                if *count == 0 {
                    return Err(Error::validation("target count must be >= 1"));
                }
                if !(self.source_ref_ratio > 0.0 && self.source_ref_ratio < 1.0) {
                    return Err(Error::validation(format!(
                        "source_ref_ratio {} outside (0,1)",
                        self.source_ref_ratio
                    )));
                }
            }
            TargetSpec::Directory { dir } => {
                if !dir.is_dir() {
                    return Err(Error::io(
                        dir,
                        std::io::Error::new(
                            std::io::ErrorKind::NotFound,
                            "target directory not found",
                        ),
                    ));
                }
            }
        }
        if self.n_repeats == 0 {
            return Err(Error::validation("n_repeats must be >= 1"));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::validation(format!(
                "split_ratio {} outside (0,1)",
                self.split_ratio
            )));
        }
        self.train.validate()?;
        for &d in &self.invert_label_domains {
            if !unique.contains(&d) {
                return Err(Error::validation(format!(
                    "invert_label_domains lists {d} which is not in the run"
                )));
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.domains.len()
    }

    /// Effective selection threshold: explicit value or 1/k.
    pub fn effective_tau(&self) -> f64 {
        self.tau.unwrap_or(1.0 / self.k() as f64)
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mixture_config(dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            domains: default_domains(),
            refs_dir: dir.to_path_buf(),
            source_ref_ratio: 0.75,
            target: TargetSpec::Mixture {
                recipe: TargetMixtureRecipe {
                    components: vec![MixtureComponent {
                        family: DomainId(11),
                        levels: vec![3, 4],
                        weight: 1.0,
                    }],
                    mode: MixtureMode::SingleDraw,
                    stratified: true,
                },
                count: 10,
            },
            tau: None,
            train: TrainConfig::default(),
            patch: PatchPolicy::default(),
            levels: default_levels(),
            seed: 7,
            n_repeats: 5,
            split_ratio: 0.8,
            out_dir: dir.join("out"),
            hidden: default_hidden(),
            invert_label_domains: Vec::new(),
        }
    }

    #[test]
    fn default_tau_is_one_over_k() {
        let dir = std::env::temp_dir();
        let config = mixture_config(&dir);
        assert!((config.effective_tau() - 1.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn missing_refs_dir_rejected() {
        let mut config = mixture_config(&std::env::temp_dir());
        config.refs_dir = PathBuf::from("/nonexistent/dgqa-refs");
        assert!(config.validate().is_err());
    }

    #[test]
    fn bad_weight_rejected() {
        let mut config = mixture_config(&std::env::temp_dir());
        if let TargetSpec::Mixture { recipe, .. } = &mut config.target {
            recipe.components[0].weight = 0.0;
        }
        assert!(config.validate().is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let config = mixture_config(&std::env::temp_dir());
        let a = config.hash();
        assert_eq!(a, config.hash());
        let mut other = config.clone();
        other.seed = 8;
        assert_ne!(a, other.hash());
    }

    #[test]
    fn round_trips_through_json() {
        let config = mixture_config(&std::env::temp_dir());
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back = ExperimentConfig::from_json(&text, Path::new("mem")).unwrap();
        assert_eq!(config.hash(), back.hash());
    }

    #[test]
    fn run_json_wrapper_is_unwrapped() {
        let config = mixture_config(&std::env::temp_dir());
        let wrapped = serde_json::json!({
            "command": "pipeline",
            "config_hash": config.hash(),
            "config": serde_json::to_value(&config).unwrap(),
        });
        let back =
            ExperimentConfig::from_json(&wrapped.to_string(), Path::new("mem")).unwrap();
        assert_eq!(config.hash(), back.hash());
    }

    #[test]
    fn duplicate_domains_rejected() {
        let mut config = mixture_config(&std::env::temp_dir());
        config.domains = vec![DomainId(1), DomainId(1)];
        assert!(config.validate().is_err());
    }
}
