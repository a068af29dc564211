//! Pipeline configuration, loaded from TOML.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::template::default_side_table;
use crate::depth::{SideTable, SoicParams};
use crate::features::{LandmarkQuota, FRONTAL_LANDMARKS};
use crate::imgproc::{Polarity, StructuringElement, ThresholdMethod};
use crate::scda::{ScdaParams, WindowRules};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    pub equalize: bool,
    /// Rescale both views so the frontal image has this height. Off when absent.
    pub target_height: Option<usize>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig { equalize: true, target_height: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdConfig {
    pub method: ThresholdMethod,
    pub polarity: Polarity,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig { method: ThresholdMethod::Otsu, polarity: Polarity::BrightForeground }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MorphologyConfig {
    /// Width and height of the rectangular structuring element.
    pub element: [usize; 2],
    pub open: bool,
    pub close: bool,
}

impl Default for MorphologyConfig {
    fn default() -> Self {
        MorphologyConfig { element: [3, 3], open: true, close: true }
    }
}

impl MorphologyConfig {
    pub fn structuring_element(&self) -> Result<StructuringElement> {
        StructuringElement::rect(self.element[0], self.element[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterConfig {
    pub radius: f64,
    pub alpha: usize,
    /// Pixels added around the clustered foreground to form the face region.
    pub face_margin: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig { radius: 14.0, alpha: 5, face_margin: 8 }
    }
}

impl ClusterConfig {
    pub fn params(&self) -> ScdaParams {
        ScdaParams { radius: self.radius, alpha: self.alpha }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CannyConfig {
    pub low: f64,
    pub high: f64,
}

impl Default for CannyConfig {
    fn default() -> Self {
        CannyConfig { low: 20.0, high: 40.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    Procrustes,
    #[default]
    Dffd,
}

impl FitMethod {
    pub fn name(self) -> &'static str {
        match self {
            FitMethod::Procrustes => "procrustes",
            FitMethod::Dffd => "dffd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub method: FitMethod,
}

/// Every tunable of the pipeline. Missing sections take their defaults;
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub threshold: ThresholdConfig,
    pub morphology: MorphologyConfig,
    pub clustering: ClusterConfig,
    pub windows: WindowRules,
    pub canny: CannyConfig,
    pub quota: LandmarkQuota,
    pub soic: SoicParams,
    pub sides: SideTable,
    pub fit: FitConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            preprocess: PreprocessConfig::default(),
            threshold: ThresholdConfig::default(),
            morphology: MorphologyConfig::default(),
            clustering: ClusterConfig::default(),
            windows: WindowRules::default(),
            canny: CannyConfig::default(),
            quota: LandmarkQuota::default(),
            soic: SoicParams::default(),
            sides: default_side_table(),
            fit: FitConfig::default(),
        }
    }
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

impl PipelineConfig {
    /// Parses and validates. Every failure is an [`Error::Config`].
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(h) = self.preprocess.target_height {
            if !(16..=8192).contains(&h) {
                return Err(Error::Config(format!("preprocess.target_height {h} outside [16, 8192]")));
            }
        }
        self.morphology.structuring_element().map_err(config_err)?;
        self.clustering.params().validate().map_err(config_err)?;
        if self.clustering.radius > 1000.0 {
            return Err(Error::Config(format!("clustering.radius {} is unreasonably large", self.clustering.radius)));
        }
        self.windows.validate().map_err(config_err)?;
        let CannyConfig { low, high } = self.canny;
        if !(0.0 <= low && low < high && high <= 255.0) {
            return Err(Error::Config(format!("canny thresholds need 0 <= low < high <= 255, got {low} and {high}")));
        }
        self.soic.validate().map_err(config_err)?;
        self.sides.validate(FRONTAL_LANDMARKS).map_err(config_err)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml();
        assert_eq!(PipelineConfig::from_toml_str(&text).unwrap(), cfg);
        assert_eq!(PipelineConfig::from_toml_str("").unwrap(), cfg);
    }

    #[test]
    fn partial_sections_override_defaults() {
        let cfg = PipelineConfig::from_toml_str(
            "[clustering]\nradius = 9.5\n[threshold]\nmethod = { kind = \"fixed\", value = 100 }\n[fit]\nmethod = \"procrustes\"\n",
        )
        .unwrap();
        assert_eq!(cfg.clustering.radius, 9.5);
        assert_eq!(cfg.clustering.alpha, 5);
        assert_eq!(cfg.threshold.method, ThresholdMethod::Fixed(100));
        assert_eq!(cfg.fit.method, FitMethod::Procrustes);
    }

    #[test]
    fn rejects_bad_values_and_unknown_keys() {
        for text in [
            "[clustering]\nalpha = 0\n",
            "[clustering]\nradius = -1.0\n",
            "[canny]\nlow = 50.0\nhigh = 10.0\n",
            "[canny]\nlow = 30.0\nhigh = 30.0\n",
            "[morphology]\nelement = [2, 3]\n",
            "[soic]\nd_step = 0\n",
            "[quota]\nleft_eye = 10\nright_eye = 10\nnose = 12\nmouth = 14\noutline = 15\n",
            "[windows]\nnose_top = 0.5\nnose_bottom = 0.4\n",
            "[preprocess]\ntarget_height = 3\n",
            "[clustering]\nradius_px = 3.0\n",
            "bogus = 1\n",
            "[sides]\nvisible_ids = [0]\nmidline_ids = []\nmirror = []\neye_center_ids = [0, 1]\n",
        ] {
            let err = PipelineConfig::from_toml_str(text).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{text}: {err:?}");
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.canny.low = 21.0;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
