//! Ordered glyph scales built by frequency doubling, and the mappings from
//! variance or significance onto scale levels.

use serde::{Deserialize, Serialize};

use crate::entropy::{generate_message, sample_entropy, SampEnParams, Signal, DEFAULT_SAMPLE_COUNT};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One rung of the scale.
#[derive(Debug, Clone, PartialEq)]
pub struct GlyphLevel<T = f64> {
    pub index: usize,
    /// Cycles per revolution; 0 for the circular level.
    pub frequency: T,
    pub amplitude: T,
    pub signal: Signal<T>,
    pub entropy: T,
}

/// How the variance range is split into levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceBinning {
    #[default]
    Linear,
    /// Equal-width bins of `ln(variance)`; requires `v_min > 0`.
    Log,
}

/// Where a value lands on the scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelChoice {
    Level(usize),
    /// Value known, uncertainty missing.
    Null,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyScale<T = f64> {
    levels: Vec<GlyphLevel<T>>,
    bounds: Option<(T, T)>,
    binning: VarianceBinning,
    sample_count: usize,
}

/// Builds `level_count` levels: a circle, then `base_frequency * 2^(j-1)`.
pub fn build_scale<T: Scalar>(
    level_count: usize,
    base_frequency: T,
    amplitude: T,
    sample_count: usize,
) -> Result<UncertaintyScale<T>> {
    build_scale_with(level_count, base_frequency, amplitude, sample_count, &SampEnParams::default())
}

pub fn build_scale_with<T: Scalar>(
    level_count: usize,
    base_frequency: T,
    amplitude: T,
    sample_count: usize,
    params: &SampEnParams<T>,
) -> Result<UncertaintyScale<T>> {
    if level_count < 2 {
        return Err(Error::InvalidParameter(format!("level count {level_count} < 2")));
    }
    if !(base_frequency > T::zero()) || !base_frequency.is_finite() {
        return Err(Error::InvalidParameter(format!("base frequency {base_frequency} must be > 0")));
    }
    let top = base_frequency * T::lit(2.0).powi(level_count as i32 - 2);
    let nyquist = T::from_usize_exact(sample_count) / T::lit(2.0);
    if top > nyquist {
        return Err(Error::FrequencyAboveNyquist { frequency: top.as_f64(), limit: nyquist.as_f64() });
    }
    let mut levels = Vec::with_capacity(level_count);
    let mut frequency = T::zero();
    for index in 0..level_count {
        if index == 1 {
            frequency = base_frequency;
        } else if index > 1 {
            frequency = frequency * T::lit(2.0);
        }
        let signal = generate_message(frequency, amplitude, sample_count)?;
        let entropy = sample_entropy(&signal, params).map_err(|e| Error::Level { index, source: Box::new(e) })?;
        levels.push(GlyphLevel { index, frequency, amplitude, signal, entropy });
    }
    check_monotone(&levels)?;
    Ok(UncertaintyScale { levels, bounds: None, binning: VarianceBinning::Linear, sample_count })
}

fn check_monotone<T: Scalar>(levels: &[GlyphLevel<T>]) -> Result<()> {
    for w in levels.windows(2) {
        if !(w[1].entropy > w[0].entropy) {
            return Err(Error::NonMonotoneEntropy {
                lower: w[0].index,
                upper: w[1].index,
                lower_entropy: w[0].entropy.as_f64(),
                upper_entropy: w[1].entropy.as_f64(),
            });
        }
    }
    Ok(())
}

impl<T: Scalar> UncertaintyScale<T> {
    /// Seven levels, 0 to 48 cycles.
    pub fn seven_level() -> Result<Self> {
        build_scale(7, T::lit(1.5), T::one(), DEFAULT_SAMPLE_COUNT)
    }

    /// Five levels topping out at 24 cycles.
    pub fn five_level() -> Result<Self> {
        build_scale(5, T::lit(3.0), T::one(), DEFAULT_SAMPLE_COUNT)
    }

    pub fn levels(&self) -> &[GlyphLevel<T>] {
        &self.levels
    }

    pub fn level(&self, index: usize) -> Option<&GlyphLevel<T>> {
        self.levels.get(index)
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn bounds(&self) -> Option<(T, T)> {
        self.bounds
    }

    pub fn binning(&self) -> VarianceBinning {
        self.binning
    }

    pub fn entropies(&self) -> Vec<T> {
        self.levels.iter().map(|l| l.entropy).collect()
    }

    pub fn with_bounds(mut self, v_min: T, v_max: T) -> Result<Self> {
        if !v_min.is_finite() || !v_max.is_finite() || !(v_min < v_max) {
            return Err(Error::InvalidParameter(format!("variance bounds [{v_min}, {v_max}]")));
        }
        if self.binning == VarianceBinning::Log && !(v_min > T::zero()) {
            return Err(Error::InvalidParameter("log binning needs v_min > 0".into()));
        }
        self.bounds = Some((v_min, v_max));
        Ok(self)
    }

    pub fn with_binning(mut self, binning: VarianceBinning) -> Result<Self> {
        if let (VarianceBinning::Log, Some((lo, _))) = (binning, self.bounds) {
            if !(lo > T::zero()) {
                return Err(Error::InvalidParameter("log binning needs v_min > 0".into()));
            }
        }
        self.binning = binning;
        Ok(self)
    }

    /// Sets the bounds to the range of the given variances.
    ///
    /// Fails when fewer than two distinct values are present.
    pub fn with_bounds_from(self, variances: impl IntoIterator<Item = T>) -> Result<Self> {
        let (lo, hi) = variances
            .into_iter()
            .filter(|v| v.is_finite())
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| (lo.min(v), hi.max(v)));
        self.with_bounds(lo, hi)
    }

    /// Quantizes a variance onto the scale; `None` (or NaN) selects the null glyph.
    pub fn map_uncertainty(&self, variance: Option<T>) -> Result<LevelChoice> {
        let (lo, hi) = self.bounds.ok_or(Error::BoundsUnset)?;
        let v = match variance {
            Some(v) if !v.is_nan() => v,
            _ => return Ok(LevelChoice::Null),
        };
        let fraction = match self.binning {
            VarianceBinning::Linear => (v - lo) / (hi - lo),
            VarianceBinning::Log => {
                let v = v.max(lo);
                (v.ln() - lo.ln()) / (hi.ln() - lo.ln())
            }
        };
        let n = self.levels.len();
        let top = n - 1;
        let index = if fraction <= T::zero() {
            0
        } else if fraction >= T::one() {
            top
        } else {
            (fraction * T::from_usize_exact(n)).floor().to_usize().unwrap_or(top).min(top)
        };
        Ok(LevelChoice::Level(index))
    }
}

/// Maps a p-value onto a five-level scale by significance band, strongest
/// significance to the lowest-entropy glyph.
///
/// | p               | code  | level |
/// |-----------------|-------|-------|
/// | [0, 0.001]      | `***` | 0     |
/// | (0.001, 0.01]   | `**`  | 1     |
/// | (0.01, 0.05]    | `*`   | 2     |
/// | (0.05, 0.1]     | `.`   | 3     |
/// | (0.1, 1]        | blank | 4     |
pub fn significance_to_level(p: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(p));
    }
    const EDGES: [f64; 4] = [0.001, 0.01, 0.05, 0.1];
    Ok(EDGES.iter().position(|&edge| p <= edge).unwrap_or(EDGES.len()))
}

/// Generator tag written into scale files.
pub const GENERATED_BY_VERSION: &str = concat!("vizent ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub index: usize,
    pub frequency: f64,
    pub amplitude: f64,
    pub entropy: f64,
}

/// On-disk form of a scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleFile {
    pub levels: Vec<LevelRecord>,
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
    #[serde(rename = "N")]
    pub sample_count: usize,
    pub generated_by_version: String,
    #[serde(default)]
    pub binning: VarianceBinning,
}

impl<T: Scalar> UncertaintyScale<T> {
    pub fn to_file(&self) -> ScaleFile {
        ScaleFile {
            levels: self
                .levels
                .iter()
                .map(|l| LevelRecord {
                    index: l.index,
                    frequency: l.frequency.as_f64(),
                    amplitude: l.amplitude.as_f64(),
                    entropy: l.entropy.as_f64(),
                })
                .collect(),
            v_min: self.bounds.map(|b| b.0.as_f64()),
            v_max: self.bounds.map(|b| b.1.as_f64()),
            sample_count: self.sample_count,
            generated_by_version: GENERATED_BY_VERSION.to_string(),
            binning: self.binning,
        }
    }

    /// Rebuilds a scale, regenerating each level's signal; stored entropies
    /// are kept as written.
    pub fn from_file(file: &ScaleFile) -> Result<Self> {
        if file.levels.len() < 2 {
            return Err(Error::InvalidParameter("scale needs at least 2 levels".into()));
        }
        let mut levels = Vec::with_capacity(file.levels.len());
        for (position, rec) in file.levels.iter().enumerate() {
            if rec.index != position {
                return Err(Error::InvalidParameter(format!("level at position {position} has index {}", rec.index)));
            }
            if (rec.index == 0) != (rec.frequency == 0.0) {
                return Err(Error::InvalidParameter(format!("level {} has frequency {}", rec.index, rec.frequency)));
            }
            let frequency = T::lit(rec.frequency);
            let amplitude = T::lit(rec.amplitude);
            let signal = generate_message(frequency, amplitude, file.sample_count)?;
            levels.push(GlyphLevel { index: rec.index, frequency, amplitude, signal, entropy: T::lit(rec.entropy) });
        }
        check_monotone(&levels)?;
        let scale = UncertaintyScale { levels, bounds: None, binning: VarianceBinning::Linear, sample_count: file.sample_count };
        let scale = match (file.v_min, file.v_max) {
            (Some(lo), Some(hi)) => scale.with_bounds(T::lit(lo), T::lit(hi))?,
            (None, None) => scale,
            _ => return Err(Error::InvalidParameter("v_min and v_max must be set together".into())),
        };
        scale.with_binning(file.binning)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(json)?)
    }
}

impl<T: Scalar> Serialize for UncertaintyScale<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for UncertaintyScale<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = ScaleFile::deserialize(d)?;
        Self::from_file(&file).map_err(serde::de::Error::custom)
    }
}
