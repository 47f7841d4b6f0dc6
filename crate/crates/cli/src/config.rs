//! Experiment configuration document (TOML).
//!
//! Every table rejects unknown keys. All keys are optional; defaults are
//! shown below.
//!
//! ```toml
//! arch = "micro_resnet"          # micro_resnet | micro_fcn | resnet18_structural
//! output = "runs/default"
//!
//! [attachment]
//! enabled = true                 # false trains the bare backbone
//! start = 1                      # L1..L5
//! end = 5
//! seg_mode = "none"              # none | encoder | encoder_decoder
//!
//! [lfmu]
//! mem_channels = 32
//! basis = "haar"                 # any of the 18 registered bases
//! downsampler = "wavelet"        # wavelet | max | avg
//! supplement = true
//!
//! [dataset]
//! generator = "lowfreq"          # lowfreq | shapes
//! n = 2000                       # training samples
//! n_test = 500
//! size = 64
//! seed = 0
//! # image_dir = "data/train"     # root/<class>/*.ppm|pgm, replaces the generator
//! # test_dir = "data/test"
//! # cache_dir = "cache"          # generated datasets are cached here
//!
//! [train]
//! epochs = 10
//! batch_size = 32
//! lr = 0.01
//! momentum = 0.9
//! weight_decay = 0.0005
//! seed = 0
//! eval_every = 1
//! dtype = "f32"
//! ```

use std::path::{Path, PathBuf};

use mlfm::graph::{Arch, GraphSpec, MlfmAttachment, SegMode};
use mlfm::harness::{Generator, TrainConfig};
use mlfm::lfmu::LfmuConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttachmentConfig {
    pub enabled: bool,
    pub start: usize,
    pub end: usize,
    pub seg_mode: SegMode,
}

impl Default for AttachmentConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            start: 1,
            end: 5,
            seg_mode: SegMode::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub generator: Generator,
    pub n: usize,
    pub n_test: usize,
    pub size: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            generator: Generator::Lowfreq,
            n: 2000,
            n_test: 500,
            size: 64,
            seed: 0,
            image_dir: None,
            test_dir: None,
            cache_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub arch: Arch,
    pub output: PathBuf,
    pub attachment: AttachmentConfig,
    pub lfmu: LfmuConfig,
    pub dataset: DatasetConfig,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            arch: Arch::MicroResnet,
            output: PathBuf::from("runs/default"),
            attachment: AttachmentConfig::default(),
            lfmu: LfmuConfig::default(),
            dataset: DatasetConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

/// A configuration problem, reported with the offending key path.
#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| invalid("", e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| ConfigError {
            path: e.path().to_string(),
            message: e.into_inner().message().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid("", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every field that can be checked without touching data.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let d = &self.dataset;
        if d.image_dir.is_none() && (d.size < 32 || !d.size.is_power_of_two()) {
            return Err(invalid(
                "dataset.size",
                format!("must be a power of two >= 32, got {}", d.size),
            ));
        }
        if d.image_dir.is_none() && d.n == 0 {
            return Err(invalid("dataset.n", "must be positive"));
        }
        if self.train.batch_size == 0 {
            return Err(invalid("train.batch_size", "must be positive"));
        }
        if !(self.train.lr >= 0.0 && self.train.lr.is_finite()) {
            return Err(invalid("train.lr", "must be a non-negative number"));
        }
        if !(0.0..1.0).contains(&self.train.momentum) {
            return Err(invalid("train.momentum", "must lie in [0, 1)"));
        }
        if self.train.weight_decay.is_nan() || self.train.weight_decay < 0.0 {
            return Err(invalid("train.weight_decay", "must be non-negative"));
        }
        if self.lfmu.mem_channels == 0 {
            return Err(invalid("lfmu.mem_channels", "must be positive"));
        }
        let a = &self.attachment;
        if a.enabled && !(1 <= a.start && a.start <= a.end && a.end <= 5) {
            return Err(invalid(
                "attachment",
                format!(
                    "start/end must satisfy 1 <= start <= end <= 5, got {}..{}",
                    a.start, a.end
                ),
            ));
        }
        if a.enabled && a.seg_mode != SegMode::None && !self.arch.is_segmentation() {
            return Err(invalid(
                "attachment.seg_mode",
                format!("requires micro_fcn, arch is {}", self.arch),
            ));
        }
        let classes = self.classes();
        if d.image_dir.is_none() && self.arch.is_segmentation() != (d.generator == Generator::Shapes) {
            return Err(invalid(
                "dataset.generator",
                format!("{} does not produce labels for {}", d.generator, self.arch),
            ));
        }
        self.spec(classes, d.size)
            .validate()
            .map_err(|e| invalid("arch", e.to_string()))
    }

    pub fn classes(&self) -> usize {
        self.dataset.generator.classes()
    }

    /// Graph spec for `classes` outputs on `size×size` inputs.
    pub fn spec(&self, classes: usize, size: usize) -> GraphSpec {
        let mut spec = GraphSpec::for_arch(self.arch, classes);
        if self.arch != Arch::Resnet18Structural {
            spec.input = [3, size, size];
        }
        spec
    }

    pub fn mlfm(&self) -> Option<MlfmAttachment> {
        self.attachment.enabled.then(|| MlfmAttachment {
            seg_mode: self.attachment.seg_mode,
            ..MlfmAttachment::new(self.attachment.start, self.attachment.end, self.lfmu)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&c.to_toml()).unwrap(), c);
        assert_eq!(ExperimentConfig::parse("").unwrap(), c);
    }

    #[test]
    fn unknown_key_names_its_path() {
        let e = ExperimentConfig::parse("[train]\nepochz = 3\n").unwrap_err();
        assert_eq!(e.path, "train.epochz");
        assert!(e.message.contains("epochz"));
        let e = ExperimentConfig::parse("[lfmu]\nbasis = \"db3\"\n").unwrap_err();
        assert_eq!(e.path, "lfmu.basis");
    }

    #[test]
    fn validation_catches_ranges() {
        let mut c = ExperimentConfig::default();
        c.dataset.size = 48;
        assert_eq!(c.validate().unwrap_err().path, "dataset.size");
        let mut c = ExperimentConfig::default();
        c.attachment.end = 6;
        assert_eq!(c.validate().unwrap_err().path, "attachment");
    }
}
