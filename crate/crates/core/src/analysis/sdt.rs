//! Signal-detection indices from a yes/no confusion matrix.

use serde::{Deserialize, Serialize};

use super::normal::normal_quantile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SdtCounts {
    pub hits: u64,
    pub misses: u64,
    pub false_alarms: u64,
    pub correct_rejections: u64,
}

impl SdtCounts {
    pub fn present(&self) -> u64 {
        self.hits + self.misses
    }

    pub fn absent(&self) -> u64 {
        self.false_alarms + self.correct_rejections
    }

    pub fn hit_rate(&self) -> f64 {
        self.hits as f64 / self.present() as f64
    }

    pub fn false_alarm_rate(&self) -> f64 {
        self.false_alarms as f64 / self.absent() as f64
    }
}

/// Adjustment applied to hit and false-alarm rates before taking z scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    /// Raw rates; extreme rates give infinite z.
    None,
    /// When either rate is 0 or 1, add 0.5 to every cell: both rates become
    /// `(count + 0.5) / (n + 1)`.
    #[default]
    HalfCount,
    /// `(count + 0.5) / (n + 1)` for both rates, extreme or not.
    #[serde(rename = "loglinear")]
    LogLinear,
    /// Only an extreme rate moves: 0 becomes `0.5/n`, 1 becomes `(n - 0.5)/n`.
    HalfTrial,
    /// Always `(count + 0.5) / (count + 0.5 + other + 1)`, as in the R
    /// `psycho` package.
    Psycho,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdtResult {
    pub hit_rate: f64,
    pub false_alarm_rate: f64,
    /// Rates after correction, used for the parametric indices.
    pub adjusted_hit_rate: f64,
    pub adjusted_false_alarm_rate: f64,
    pub d_prime: f64,
    pub beta: f64,
    /// Criterion location, `-(z(H) + z(F)) / 2`.
    pub c: f64,
    pub a_prime: f64,
    pub b_double_prime_d: f64,
}

fn adjusted_rates(c: &SdtCounts, correction: Correction) -> (f64, f64) {
    let (h, f) = (c.hit_rate(), c.false_alarm_rate());
    let extreme = |r: f64| r == 0.0 || r == 1.0;
    let add_half = || {
        (
            (c.hits as f64 + 0.5) / (c.present() as f64 + 1.0),
            (c.false_alarms as f64 + 0.5) / (c.absent() as f64 + 1.0),
        )
    };
    match correction {
        Correction::None => (h, f),
        Correction::HalfCount if extreme(h) || extreme(f) => add_half(),
        Correction::HalfCount => (h, f),
        Correction::LogLinear => add_half(),
        Correction::HalfTrial => {
            let fix = |r: f64, n: u64| {
                let n = n as f64;
                if r == 0.0 {
                    0.5 / n
                } else if r == 1.0 {
                    (n - 0.5) / n
                } else {
                    r
                }
            };
            (fix(h, c.present()), fix(f, c.absent()))
        }
        Correction::Psycho => (
            (c.hits as f64 + 0.5) / (c.hits as f64 + 0.5 + c.misses as f64 + 1.0),
            (c.false_alarms as f64 + 0.5) / (c.false_alarms as f64 + 0.5 + c.correct_rejections as f64 + 1.0),
        ),
    }
}

/// Non-parametric sensitivity A'.
pub fn a_prime(h: f64, f: f64) -> f64 {
    if h == f {
        return 0.5;
    }
    let diff = h - f;
    let denom = 4.0 * h.max(f) * (1.0 - h.min(f));
    0.5 + diff.signum() * (diff * diff + diff.abs()) / denom
}

/// Non-parametric bias B''_D.
pub fn b_double_prime_d(h: f64, f: f64) -> f64 {
    let num = (1.0 - h) * (1.0 - f) - h * f;
    let den = (1.0 - h) * (1.0 - f) + h * f;
    if den == 0.0 {
        // (H, F) = (1, 0) or (0, 1): take the limit along the F edge
        return if f == 0.0 { 1.0 } else { -1.0 };
    }
    num / den
}

/// d', beta and c use the corrected rates; A' and B''_D use the raw rates.
pub fn sdt_metrics(counts: &SdtCounts, correction: Correction) -> Result<SdtResult> {
    if counts.present() == 0 {
        return Err(Error::EmptyCondition("target present"));
    }
    if counts.absent() == 0 {
        return Err(Error::EmptyCondition("target absent"));
    }
    let (h, f) = (counts.hit_rate(), counts.false_alarm_rate());
    let (ha, fa) = adjusted_rates(counts, correction);
    let (zh, zf) = (normal_quantile(ha), normal_quantile(fa));
    Ok(SdtResult {
        hit_rate: h,
        false_alarm_rate: f,
        adjusted_hit_rate: ha,
        adjusted_false_alarm_rate: fa,
        d_prime: zh - zf,
        beta: ((zf * zf - zh * zh) / 2.0).exp(),
        c: -(zh + zf) / 2.0,
        a_prime: a_prime(h, f),
        b_double_prime_d: b_double_prime_d(h, f),
    })
}
