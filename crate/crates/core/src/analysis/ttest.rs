//! Two-sample Student t tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::scalar::{mean, sample_variance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TTestKind {
    /// Differences of matched observations.
    #[default]
    Paired,
    /// Independent samples, pooled variance.
    Pooled,
    /// Independent samples, Welch-Satterthwaite degrees of freedom.
    Welch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
    /// `mean(a) - mean(b)`.
    pub mean_difference: f64,
}

fn two_sided(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

fn finish(diff: f64, se: f64, df: f64) -> Result<TTestResult> {
    if se == 0.0 {
        if diff == 0.0 {
            return Ok(TTestResult { t: 0.0, df, p: 1.0, mean_difference: 0.0 });
        }
        return Err(Error::InfiniteT { mean_difference: diff });
    }
    let t = diff / se;
    Ok(TTestResult { t, df, p: two_sided(t, df), mean_difference: diff })
}

pub fn t_test(a: &[f64], b: &[f64], kind: TTestKind) -> Result<TTestResult> {
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("samples must be finite".into()));
    }
    match kind {
        TTestKind::Paired => {
            if a.len() != b.len() {
                return Err(Error::LengthMismatch(a.len(), b.len()));
            }
            if a.len() < 2 {
                return Err(Error::TooFewSamples { needed: 2, got: a.len() });
            }
            let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            let n = d.len() as f64;
            let md = mean(&d).unwrap();
            let var = sample_variance(&d).unwrap();
            finish(md, (var / n).sqrt(), n - 1.0)
        }
        TTestKind::Pooled | TTestKind::Welch => {
            for s in [a, b] {
                if s.len() < 2 {
                    return Err(Error::TooFewSamples { needed: 2, got: s.len() });
                }
            }
            let (na, nb) = (a.len() as f64, b.len() as f64);
            let (va, vb) = (sample_variance(a).unwrap(), sample_variance(b).unwrap());
            let diff = mean(a).unwrap() - mean(b).unwrap();
            if kind == TTestKind::Pooled {
                let df = na + nb - 2.0;
                let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
                finish(diff, (pooled * (1.0 / na + 1.0 / nb)).sqrt(), df)
            } else {
                let (sa, sb) = (va / na, vb / nb);
                let se2 = sa + sb;
                let df = if se2 > 0.0 { se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0)) } else { na + nb - 2.0 };
                finish(diff, se2.sqrt(), df)
            }
        }
    }
}
