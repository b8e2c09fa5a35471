//! Optional JSON configuration shared by the subcommands.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;
use vizent_core::color::ColorMap;
use vizent_core::entropy::DEFAULT_SAMPLE_COUNT;
use vizent_core::geometry::{DisplayGeometry, GlyphProportions};
use vizent_core::scale::{build_scale, VarianceBinning};
use vizent_core::UncertaintyScale;

/// Parameters for generating a scale from scratch.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleConfig {
    pub levels: usize,
    pub base_frequency: f64,
    pub amplitude: f64,
    pub sample_count: usize,
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
    pub binning: VarianceBinning,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        Self {
            levels: 7,
            base_frequency: 1.5,
            amplitude: 1.0,
            sample_count: DEFAULT_SAMPLE_COUNT,
            v_min: None,
            v_max: None,
            binning: VarianceBinning::Linear,
        }
    }
}

impl ScaleConfig {
    pub fn build(&self) -> vizent_core::Result<UncertaintyScale> {
        let scale = build_scale(self.levels, self.base_frequency, self.amplitude, self.sample_count)?;
        let scale = match (self.v_min, self.v_max) {
            (Some(lo), Some(hi)) => scale.with_bounds(lo, hi)?,
            (None, None) => scale,
            _ => {
                return Err(vizent_core::Error::InvalidParameter("v_min and v_max must be set together".into()));
            }
        };
        scale.with_binning(self.binning)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub scale: ScaleConfig,
    pub proportions: GlyphProportions,
    pub color_map: ColorMap,
    pub display: Option<DisplayGeometry>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let config: Config = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        config.proportions.validate()?;
        if let Some(d) = &config.display {
            d.validate()?;
        }
        Ok(config)
    }
}
