//! Experiment configuration.
//!
//! The file is TOML written as flat dotted keys; every key is optional and
//! defaults to the published setup. Unknown keys are rejected.
//!
//! ```toml
//! methods = ["none", "means", "drca", "ldsp", "selftrain"]
//! drca.lambda = 0.1
//! drca.k = 127
//! ldsp.kappa = 10.0
//! selftrain.confidence_threshold = 0.99
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adaptation::{MethodName, MethodSpec, SelfTrainConfig};
use crate::classifier::ClassifierConfig;
use crate::data_io::SyntheticConfig;
use crate::error::{Error, Result};
use crate::metrics::F1Average;
use crate::subspace::{DrcaConfig, LdspConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    pub f1_average: F1Average,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Directory with batch1.dat..batch10.dat; synthetic data when absent.
    pub data_dir: Option<PathBuf>,
    pub methods: Vec<MethodName>,
    /// Min-max scale every batch with calibration extrema.
    pub normalize: bool,
    pub jobs: usize,
    pub classifier: ClassifierConfig,
    pub drca: DrcaConfig,
    pub ldsp: LdspConfig,
    pub selftrain: SelfTrainConfig,
    pub metrics: MetricsConfig,
    pub synthetic: SyntheticConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data_dir: None,
            methods: MethodName::ALL.to_vec(),
            normalize: true,
            jobs: 1,
            classifier: ClassifierConfig::default(),
            drca: DrcaConfig::default(),
            ldsp: LdspConfig::default(),
            selftrain: SelfTrainConfig::default(),
            metrics: MetricsConfig::default(),
            synthetic: SyntheticConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("methods must name at least one method".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be >= 1".into()));
        }
        self.classifier.validate()?;
        self.drca.validate()?;
        self.ldsp.validate()?;
        self.selftrain.validate()?;
        if self.data_dir.is_none() {
            self.synthetic.validate()?;
        }
        Ok(())
    }

    /// Requested methods, deduplicated, in canonical order.
    pub fn method_specs(&self) -> Vec<MethodSpec> {
        MethodName::ALL
            .into_iter()
            .filter(|m| self.methods.contains(m))
            .map(|m| self.spec_for(m))
            .collect()
    }

    pub fn spec_for(&self, method: MethodName) -> MethodSpec {
        match method {
            MethodName::None => MethodSpec::None,
            MethodName::Means => MethodSpec::Means,
            MethodName::Drca => MethodSpec::Drca(self.drca),
            MethodName::Ldsp => MethodSpec::Ldsp(self.ldsp),
            MethodName::SelfTrain => MethodSpec::SelfTrain(self.selftrain),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        assert_eq!(ExperimentConfig::from_toml_str("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn defaults_match_published_setup() {
        let c = ExperimentConfig::default();
        assert_eq!(c.drca.lambda, 0.1);
        assert_eq!(c.drca.k, 127);
        assert_eq!((c.ldsp.lambda, c.ldsp.kappa, c.ldsp.mu, c.ldsp.k), (0.1, 10.0, 100.0, 127));
        assert_eq!(c.selftrain.confidence_threshold, 0.99);
        assert!(c.selftrain.cumulative);
        assert_eq!(c.metrics.f1_average, F1Average::Macro);
    }

    #[test]
    fn flat_dotted_keys() {
        let c = ExperimentConfig::from_toml_str(
            "methods = [\"drca\", \"none\"]\nclassifier.reg_strength = 2.5\nldsp.mu = 5.0\nmetrics.f1_average = \"weighted\"\n",
        )
        .unwrap();
        assert_eq!(c.classifier.reg_strength, 2.5);
        assert_eq!(c.ldsp.mu, 5.0);
        assert_eq!(c.ldsp.kappa, 10.0);
        assert_eq!(c.metrics.f1_average, F1Average::Weighted);
        let names: Vec<_> = c.method_specs().iter().map(|s| s.name()).collect();
        assert_eq!(names, vec![MethodName::None, MethodName::Drca]);
    }

    #[test]
    fn unknown_keys_are_errors() {
        for doc in ["lambda = 0.1", "drca.lamda = 0.1", "classifier.c = 1.0", "methods = [\"pca\"]"] {
            assert!(matches!(ExperimentConfig::from_toml_str(doc), Err(Error::Config(_))), "{doc}");
        }
    }

    #[test]
    fn invalid_values_are_errors() {
        for doc in ["jobs = 0", "methods = []", "selftrain.confidence_threshold = 0.0", "drca.k = 0"] {
            assert!(ExperimentConfig::from_toml_str(doc).is_err(), "{doc}");
        }
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig {
            data_dir: Some("/data/gas".into()),
            ..Default::default()
        };
        assert_eq!(ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap(), c);
    }
}
