//! Statistical analyses of the ranking and search experiments.

pub mod bt;
pub mod normal;
pub mod ols;
pub mod rt;
pub mod sdt;
pub mod ttest;

pub use bt::{bt_fit, merge_duplicates, BtResult, PairComparisonTable, PairRow, Side, TrialChoice};
pub use normal::{normal_cdf, normal_quantile, two_sided_p};
pub use ols::{fit_ols, RegressionResult};
pub use rt::{rt_outliers, RtScreen};
pub use sdt::{sdt_metrics, Correction, SdtCounts, SdtResult};
pub use ttest::{t_test, TTestKind, TTestResult};

use crate::error::{Error, Result};
use crate::scale::UncertaintyScale;

/// Abilities of levels 1.. regressed on the log of their entropies.
///
/// Level ids are matched positionally: `ids[j]` names scale level `j`.
/// Level 0 is left out because its entropy is zero.
pub fn ability_vs_log_entropy(fit: &BtResult, scale: &UncertaintyScale<f64>, ids: &[&str]) -> Result<RegressionResult> {
    let (x, y) = paired_points(fit, scale, ids, 1)?;
    fit_ols(&x.iter().map(|e| e.ln()).collect::<Vec<_>>(), &y, 1)
}

/// Quadratic in entropy over every level, including level 0.
pub fn ability_vs_entropy_quadratic(fit: &BtResult, scale: &UncertaintyScale<f64>, ids: &[&str]) -> Result<RegressionResult> {
    let (x, y) = paired_points(fit, scale, ids, 0)?;
    fit_ols(&x, &y, 2)
}

/// `(entropy, ability)` pairs for levels `from..`.
pub fn paired_points(fit: &BtResult, scale: &UncertaintyScale<f64>, ids: &[&str], from: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if ids.len() != scale.len() {
        return Err(Error::LengthMismatch(ids.len(), scale.len()));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (level, id) in scale.levels().iter().zip(ids).skip(from) {
        let a = fit
            .abilities
            .get(*id)
            .ok_or_else(|| Error::InvalidParameter(format!("no ability for glyph {id}")))?;
        x.push(level.entropy);
        y.push(*a);
    }
    Ok((x, y))
}
