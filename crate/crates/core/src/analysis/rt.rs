//! Response-time screening.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{mean, population_sd};

/// Outlier band and per-value flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtScreen {
    pub mean: f64,
    /// Population standard deviation of the list.
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
    pub flags: Vec<bool>,
}

impl RtScreen {
    pub fn outlier_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

/// Flags values at or beyond `mean +/- 3 SD`.
///
/// Distances within 1e-9 (relative) of the band edge count as on the edge.
pub fn rt_outliers(mean_rts: &[f64]) -> Result<RtScreen> {
    if mean_rts.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: mean_rts.len() });
    }
    if mean_rts.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("response times must be finite".into()));
    }
    let m = mean(mean_rts).unwrap();
    let sd = population_sd(mean_rts).unwrap();
    let half_width = 3.0 * sd;
    let flags = mean_rts
        .iter()
        .map(|&v| sd > 0.0 && (v - m).abs() >= half_width * (1.0 - 1e-9))
        .collect();
    Ok(RtScreen { mean: m, sd, lower: m - half_width, upper: m + half_width, flags })
}
