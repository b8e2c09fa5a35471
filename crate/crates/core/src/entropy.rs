//! Messages, Shannon entropy and sample entropy.
//!
//! The visual entropy of a glyph is estimated as the sample entropy of the
//! one-dimensional message that generates its outline. Messages here are
//! sinusoids sampled once per polar step around a full revolution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{population_sd, Scalar};

/// Samples per revolution used when nothing else is specified (one per degree).
pub const DEFAULT_SAMPLE_COUNT: usize = 360;

const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// Discrete distribution over an alphabet of `weights.len()` symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityDistribution<T = f64> {
    weights: Vec<T>,
}

impl<T: Scalar> ProbabilityDistribution<T> {
    pub fn new(weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < T::zero()) {
            return Err(Error::InvalidDistribution(format!("weight {w} is negative or not finite")));
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs().as_f64() > DISTRIBUTION_TOLERANCE.max(T::epsilon().as_f64() * 8.0 * weights.len() as f64) {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        Self::new(vec![T::one() / T::from_usize_exact(n); n])
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

/// Average coding cost in bits; zero-probability symbols contribute nothing.
///
/// Applies equally to visual symbols, in which case the result is the
/// visual entropy of the alphabet.
pub fn shannon_entropy<T: Scalar>(dist: &ProbabilityDistribution<T>) -> T {
    dist.weights
        .iter()
        .filter(|&&p| p > T::zero())
        .map(|&p| p * (T::one() / p).log2())
        .sum()
}

/// Parameters a message was generated from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MessageParams<T = f64> {
    /// Cycles per revolution.
    pub frequency: T,
    pub amplitude: T,
    pub sample_count: usize,
}

/// A sampled message, optionally carrying the parameters that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T = f64> {
    samples: Vec<T>,
    meta: Option<MessageParams<T>>,
}

impl<T: Scalar> Signal<T> {
    /// Wraps arbitrary samples (at least four).
    pub fn from_samples(samples: Vec<T>) -> Result<Self> {
        if samples.len() < 4 {
            return Err(Error::SeriesTooShort { len: samples.len(), m: 0 });
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter("samples must be finite".into()));
        }
        Ok(Self { samples, meta: None })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn meta(&self) -> Option<&MessageParams<T>> {
        self.meta.as_ref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Multiplies every sample by `factor`; generating parameters are dropped.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            samples: self.samples.iter().map(|&s| s * factor).collect(),
            meta: None,
        }
    }
}

/// Samples `a * sin(2 pi k i / n)` for `i in 0..n`.
///
/// `k = 0` produces the constant zero message used for the circular level.
pub fn generate_message<T: Scalar>(frequency: T, amplitude: T, sample_count: usize) -> Result<Signal<T>> {
    if sample_count < 4 {
        return Err(Error::InvalidParameter(format!("sample count {sample_count} < 4")));
    }
    if !amplitude.is_finite() || amplitude < T::zero() {
        return Err(Error::InvalidParameter(format!("amplitude {amplitude} must be >= 0")));
    }
    if !frequency.is_finite() || frequency < T::zero() {
        return Err(Error::InvalidParameter(format!("frequency {frequency} must be >= 0")));
    }
    let n = T::from_usize_exact(sample_count);
    let nyquist = n / T::lit(2.0);
    if frequency > nyquist {
        return Err(Error::FrequencyAboveNyquist {
            frequency: frequency.as_f64(),
            limit: nyquist.as_f64(),
        });
    }
    let step = T::TAU() * frequency / n;
    let samples = (0..sample_count)
        .map(|i| amplitude * (step * T::from_usize_exact(i)).sin())
        .collect();
    Ok(Signal {
        samples,
        meta: Some(MessageParams { frequency, amplitude, sample_count }),
    })
}

/// Embedding length and tolerance for sample entropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampEnParams<T = f64> {
    /// Template (embedding) length.
    pub m: usize,
    /// Tolerance as a fraction of the population standard deviation.
    pub r_frac: T,
}

impl<T: Scalar> Default for SampEnParams<T> {
    /// `m = 1`, `r_frac = 0.2`.
    ///
    /// With `m = 2` the entropy of a 360-sample sinusoid stops increasing
    /// past 12 cycles (48 cycles scores exactly 0, like the circle), so the
    /// doubling ladder could not be ordered.
    fn default() -> Self {
        Self { m: 1, r_frac: T::lit(0.2) }
    }
}

impl<T: Scalar> SampEnParams<T> {
    pub fn new(m: usize, r_frac: T) -> Result<Self> {
        let p = Self { m, r_frac };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidParameter("embedding length m must be >= 1".into()));
        }
        if !(self.r_frac > T::zero()) || !self.r_frac.is_finite() {
            return Err(Error::InvalidParameter(format!("r_frac {} must be > 0", self.r_frac)));
        }
        Ok(())
    }
}

/// Sample entropy together with the template counts it was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleEntropy<T = f64> {
    pub value: T,
    /// Ordered pairs of distinct length-m templates within tolerance (B).
    pub matches_m: u64,
    /// Same for length m + 1 (A).
    pub matches_m1: u64,
    /// Absolute tolerance used.
    pub tolerance: T,
}

/// `-ln(A / B)` over the first `N - m` templates, Chebyshev distance `<= r`.
///
/// A series with zero spread scores 0 by convention.
pub fn sample_entropy<T: Scalar>(signal: &Signal<T>, params: &SampEnParams<T>) -> Result<T> {
    sample_entropy_detail(signal.samples(), params).map(|s| s.value)
}

pub fn sample_entropy_detail<T: Scalar>(samples: &[T], params: &SampEnParams<T>) -> Result<SampleEntropy<T>> {
    params.validate()?;
    let m = params.m;
    let n = samples.len();
    if n <= m + 1 {
        return Err(Error::SeriesTooShort { len: n, m });
    }
    let sd = population_sd(samples).unwrap_or_else(T::zero);
    if sd == T::zero() {
        return Ok(SampleEntropy {
            value: T::zero(),
            matches_m: 0,
            matches_m1: 0,
            tolerance: T::zero(),
        });
    }
    let r = params.r_frac * sd;
    let templates = n - m;
    let (mut b, mut a) = (0u64, 0u64);
    for i in 0..templates {
        for j in (i + 1)..templates {
            if (0..m).all(|k| (samples[i + k] - samples[j + k]).abs() <= r) {
                b += 2;
                if (samples[i + m] - samples[j + m]).abs() <= r {
                    a += 2;
                }
            }
        }
    }
    if a == 0 || b == 0 {
        return Err(Error::NoTemplateMatches { matches_m: b, matches_m1: a });
    }
    let ratio = T::from_u64(a).unwrap() / T::from_u64(b).unwrap();
    Ok(SampleEntropy {
        // + 0 turns -0 into 0 when A == B
        value: -ratio.ln() + T::zero(),
        matches_m: b,
        matches_m1: a,
        tolerance: r,
    })
}

/// Scores each signal with the default parameters, preserving order.
pub fn score_levels<T: Scalar>(levels: &[Signal<T>]) -> Result<Vec<T>> {
    let params = SampEnParams::default();
    levels
        .iter()
        .enumerate()
        .map(|(index, s)| {
            sample_entropy(s, &params).map_err(|e| Error::Level { index, source: Box::new(e) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shannon_examples() {
        let h = |w: Vec<f64>| shannon_entropy(&ProbabilityDistribution::new(w).unwrap());
        assert!((h(vec![0.5, 0.5]) - 1.0).abs() < 1e-12);
        assert_eq!(h(vec![1.0]), 0.0);
        assert!((h(vec![0.5, 0.25, 0.25]) - 1.5).abs() < 1e-12);
        assert!((h(vec![0.5, 0.0, 0.5]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_distributions() {
        assert!(matches!(
            ProbabilityDistribution::new(vec![0.5, 0.6]),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(matches!(
            ProbabilityDistribution::new(vec![1.5, -0.5]),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(ProbabilityDistribution::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn uniform_is_log2_n() {
        for n in 1..20 {
            let d = ProbabilityDistribution::<f64>::uniform(n).unwrap();
            assert!((shannon_entropy(&d) - (n as f64).log2()).abs() < 1e-9);
        }
    }

    #[test]
    fn message_examples() {
        let zero = generate_message(0.0_f64, 1.0, 360).unwrap();
        assert!(zero.samples().iter().all(|&s| s == 0.0));
        let one = generate_message(1.0_f64, 1.0, 360).unwrap();
        assert!((one.samples()[90] - 1.0).abs() < 1e-12);
        let fast = generate_message(24.0_f64, 1.0, 360).unwrap();
        assert_eq!(fast.samples()[0], 0.0);
        for i in 0..345 {
            assert!((fast.samples()[i] - fast.samples()[i + 15]).abs() < 1e-12);
        }
        let meta = fast.meta().unwrap();
        assert_eq!((meta.frequency, meta.amplitude, meta.sample_count), (24.0, 1.0, 360));
    }

    #[test]
    fn message_errors() {
        assert!(matches!(
            generate_message(181.0, 1.0, 360),
            Err(Error::FrequencyAboveNyquist { .. })
        ));
        assert!(generate_message(180.0, 1.0, 360).is_ok());
        assert!(generate_message(1.0, -1.0, 360).is_err());
        assert!(generate_message(1.0, 1.0, 3).is_err());
    }

    #[test]
    fn constant_series_scores_zero() {
        let s = Signal::from_samples(vec![7.25_f64; 360]).unwrap();
        assert_eq!(sample_entropy(&s, &SampEnParams::default()).unwrap(), 0.0);
        assert_eq!(sample_entropy(&s, &SampEnParams::new(2, 0.2).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn too_short_and_undefined() {
        let s = Signal::from_samples(vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            sample_entropy(&s, &SampEnParams::new(3, 0.2).unwrap()),
            Err(Error::SeriesTooShort { .. })
        ));
        // widely spaced values never match within 0.2 SD
        let ramp = Signal::from_samples(vec![0.0, 10.0, 20.0, 30.0]).unwrap();
        assert!(matches!(
            sample_entropy(&ramp, &SampEnParams::default()),
            Err(Error::NoTemplateMatches { .. })
        ));
    }

    #[test]
    fn higher_frequency_scores_higher() {
        for m in [1, 2] {
            let p = SampEnParams::new(m, 0.2).unwrap();
            let low = sample_entropy(&generate_message(3.0, 1.0, 360).unwrap(), &p).unwrap();
            let high = sample_entropy(&generate_message(24.0_f64, 1.0, 360).unwrap(), &p).unwrap();
            assert!(high > low, "m={m}: {high} <= {low}");
        }
    }

    #[test]
    fn generic_over_f32() {
        let s = generate_message(6.0_f32, 1.0, 360).unwrap();
        let v32 = sample_entropy(&s, &SampEnParams::default()).unwrap();
        let v64 = sample_entropy(&generate_message(6.0_f64, 1.0, 360).unwrap(), &SampEnParams::default()).unwrap();
        assert!((v32 as f64 - v64).abs() < 1e-3);
    }

    #[test]
    fn score_levels_cases() {
        assert!(score_levels::<f64>(&[]).unwrap().is_empty());
        let c = Signal::from_samples(vec![1.0; 360]).unwrap();
        assert_eq!(score_levels(&[c]).unwrap(), vec![0.0]);
        let ramp = Signal::from_samples(vec![0.0, 10.0, 20.0, 30.0]).unwrap();
        let c = Signal::from_samples(vec![1.0; 20]).unwrap();
        match score_levels(&[c, ramp]) {
            Err(Error::Level { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
