//! Bradley-Terry ability estimation for paired comparisons.
//!
//! `P(i beats j) = exp(a_i) / (exp(a_i) + exp(a_j))`, with the reference
//! item's ability pinned to zero. The likelihood is maximized by Newton
//! iterations on the logit link (identical to IRLS for a binomial GLM);
//! standard errors come from the inverse information at the optimum.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::normal::two_sided_p;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 500;
const STEP_TOLERANCE: f64 = 1e-10;
/// Abilities this large mean a perfectly separated item.
const DIVERGENCE_BOUND: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub left: String,
    pub right: String,
    pub chose_left: u64,
    pub chose_right: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_rt: Option<f64>,
}

impl PairRow {
    pub fn total(&self) -> u64 {
        self.chose_left + self.chose_right
    }
}

/// Merged pairwise counts, at most one row per unordered pair.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PairComparisonTable {
    rows: Vec<PairRow>,
}

#[derive(Deserialize)]
struct RawTable {
    rows: Vec<PairRow>,
}

impl<'de> Deserialize<'de> for PairComparisonTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawTable::deserialize(d)?;
        PairComparisonTable::new(raw.rows).map_err(serde::de::Error::custom)
    }
}

impl PairComparisonTable {
    pub fn new(rows: Vec<PairRow>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for row in &rows {
            if row.left == row.right {
                return Err(Error::SelfPair(row.left.clone()));
            }
            let key = canonical(&row.left, &row.right);
            if !seen.insert((key.0.to_string(), key.1.to_string())) {
                return Err(Error::InvalidTable(format!("pair {}-{} appears twice", row.left, row.right)));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[PairRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn items(&self) -> BTreeSet<&str> {
        self.rows.iter().flat_map(|r| [r.left.as_str(), r.right.as_str()]).collect()
    }

    pub fn mean_rts(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.mean_rt).collect()
    }

    /// Plain-text table: left, right, chose left, chose right, mean RT.
    pub fn to_text(&self) -> String {
        let mut out = format!("{:<11} {:<12} {:>11} {:>12} {:>18}\n", "Left glyph", "Right glyph", "Chose left", "Chose right", "mean RT (seconds)");
        for r in &self.rows {
            let rt = r.mean_rt.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "{:<11} {:<12} {:>11} {:>12} {:>18}", r.left, r.right, r.chose_left, r.chose_right, rt);
        }
        out
    }
}

fn canonical<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// One presented pair and the participant's pick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialChoice {
    pub left: String,
    pub right: String,
    pub choice: Side,
    /// Seconds.
    pub rt: f64,
}

impl TrialChoice {
    pub fn winner(&self) -> &str {
        match self.choice {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }
}

/// Pools presentations of the same pair in either order.
///
/// Rows use the lexicographically smaller id as `left`, sorted by pair.
pub fn merge_duplicates(trials: &[TrialChoice]) -> Result<PairComparisonTable> {
    let mut acc: BTreeMap<(String, String), (u64, u64, f64, usize)> = BTreeMap::new();
    for t in trials {
        if t.left == t.right {
            return Err(Error::SelfPair(t.left.clone()));
        }
        let (a, b) = canonical(&t.left, &t.right);
        let entry = acc.entry((a.to_string(), b.to_string())).or_insert((0, 0, 0.0, 0));
        if t.winner() == a {
            entry.0 += 1;
        } else {
            entry.1 += 1;
        }
        entry.2 += t.rt;
        entry.3 += 1;
    }
    let rows = acc
        .into_iter()
        .map(|((left, right), (l, r, rt_sum, n))| PairRow {
            left,
            right,
            chose_left: l,
            chose_right: r,
            mean_rt: Some(rt_sum / n as f64),
        })
        .collect();
    PairComparisonTable::new(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtResult {
    pub reference: String,
    /// Reference included at exactly 0.
    pub abilities: BTreeMap<String, f64>,
    pub std_errors: BTreeMap<String, f64>,
    pub z_values: BTreeMap<String, f64>,
    pub p_values: BTreeMap<String, f64>,
    pub null_deviance: f64,
    pub residual_deviance: f64,
    pub null_df: usize,
    pub residual_df: usize,
    pub pseudo_r2: f64,
    pub iterations: usize,
}

impl BtResult {
    /// Model probability that `winner` is picked over `loser`.
    pub fn win_probability(&self, winner: &str, loser: &str) -> Option<f64> {
        let d = self.abilities.get(winner)? - self.abilities.get(loser)?;
        Some(logistic(d))
    }

    /// Ability table with Wald statistics, ordered by ability.
    pub fn to_text(&self) -> String {
        let mut items: Vec<(&String, &f64)> = self.abilities.iter().collect();
        items.sort_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(b.0)));
        let mut out = format!("{:<6} {:>9} {:>10} {:>8} {:>10}\n", "Glyph", "Ability", "Std Error", "z value", "Pr(>|z|)");
        for (id, a) in items {
            if *id == self.reference {
                let _ = writeln!(out, "{id:<6} {:>9}", 0);
                continue;
            }
            let p = self.p_values[id];
            let p = if p < 2e-16 { "< 2e-16".to_string() } else { format!("{p:.2E}") };
            let _ = writeln!(out, "{id:<6} {a:>9.4} {:>10.4} {:>8.3} {p:>10}", self.std_errors[id], self.z_values[id]);
        }
        let _ = writeln!(
            out,
            "\nNull deviance: {:.3} on {} df\nResidual deviance: {:.3} on {} df\nPseudo R-squared: {:.1}%",
            self.null_deviance,
            self.null_df,
            self.residual_deviance,
            self.residual_df,
            self.pseudo_r2 * 100.0
        );
        out
    }
}

fn logistic(d: f64) -> f64 {
    if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    }
}

/// Binomial deviance of the rows against the saturated model.
fn deviance(rows: &[(usize, usize, f64, f64)], prob: impl Fn(usize, usize) -> f64) -> f64 {
    let term = |y: f64, expected: f64| if y > 0.0 { y * (y / expected).ln() } else { 0.0 };
    rows.iter()
        .map(|&(i, j, w, l)| {
            let n = w + l;
            let p = prob(i, j);
            2.0 * (term(w, n * p) + term(l, n * (1.0 - p)))
        })
        .sum()
}

pub fn bt_fit(table: &PairComparisonTable, reference: &str) -> Result<BtResult> {
    let items: Vec<String> = table.items().into_iter().map(str::to_owned).collect();
    let index: BTreeMap<&str, usize> = items.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let ref_idx = *index
        .get(reference)
        .ok_or_else(|| Error::InvalidTable(format!("reference {reference:?} not in table")))?;
    let rows: Vec<(usize, usize, f64, f64)> = table
        .rows()
        .iter()
        .filter(|r| r.total() > 0)
        .map(|r| (index[r.left.as_str()], index[r.right.as_str()], r.chose_left as f64, r.chose_right as f64))
        .collect();
    check_connected(&items, &rows)?;

    // parameter slot for each item; the reference has none
    let slot: Vec<Option<usize>> = (0..items.len())
        .map(|i| match i.cmp(&ref_idx) {
            std::cmp::Ordering::Less => Some(i),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(i - 1),
        })
        .collect();
    let k = items.len() - 1;
    let mut ability = vec![0.0; items.len()];

    let gradient_and_information = |ability: &[f64]| {
        let mut g = DVector::<f64>::zeros(k);
        let mut info = DMatrix::<f64>::zeros(k, k);
        for &(i, j, w, l) in &rows {
            let n = w + l;
            let p = logistic(ability[i] - ability[j]);
            let resid = w - n * p;
            let weight = n * p * (1.0 - p);
            for (a, sa) in [(slot[i], 1.0), (slot[j], -1.0)] {
                let Some(a) = a else { continue };
                g[a] += sa * resid;
                for (b, sb) in [(slot[i], 1.0), (slot[j], -1.0)] {
                    if let Some(b) = b {
                        info[(a, b)] += sa * sb * weight;
                    }
                }
            }
        }
        (g, info)
    };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (g, info) = gradient_and_information(&ability);
        let step = match info.clone().cholesky() {
            Some(ch) => ch.solve(&g),
            None => return Err(Error::NonConvergence { iterations, gradient_norm: g.norm() }),
        };
        for (i, s) in slot.iter().enumerate() {
            if let Some(s) = s {
                ability[i] += step[*s];
            }
        }
        if ability.iter().any(|a| !a.is_finite() || a.abs() > DIVERGENCE_BOUND) {
            return Err(Error::NonConvergence { iterations, gradient_norm: g.norm() });
        }
        if step.amax() < STEP_TOLERANCE {
            converged = true;
            break;
        }
    }
    let (g, info) = gradient_and_information(&ability);
    if !converged {
        return Err(Error::NonConvergence { iterations, gradient_norm: g.norm() });
    }
    let covariance = info
        .cholesky()
        .map(|ch| ch.inverse())
        .ok_or(Error::NonConvergence { iterations, gradient_norm: g.norm() })?;

    let mut result = BtResult {
        reference: reference.to_string(),
        abilities: BTreeMap::new(),
        std_errors: BTreeMap::new(),
        z_values: BTreeMap::new(),
        p_values: BTreeMap::new(),
        null_deviance: deviance(&rows, |_, _| 0.5),
        residual_deviance: deviance(&rows, |i, j| logistic(ability[i] - ability[j])),
        null_df: rows.len(),
        residual_df: rows.len() - k,
        pseudo_r2: 0.0,
        iterations,
    };
    result.pseudo_r2 = if result.null_deviance > 0.0 { 1.0 - result.residual_deviance / result.null_deviance } else { 0.0 };
    for (i, id) in items.iter().enumerate() {
        result.abilities.insert(id.clone(), ability[i]);
        if let Some(s) = slot[i] {
            let se = covariance[(s, s)].sqrt();
            let z = ability[i] / se;
            result.std_errors.insert(id.clone(), se);
            result.z_values.insert(id.clone(), z);
            result.p_values.insert(id.clone(), two_sided_p(z));
        }
    }
    Ok(result)
}

fn check_connected(items: &[String], rows: &[(usize, usize, f64, f64)]) -> Result<()> {
    let mut parent: Vec<usize> = (0..items.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(i, j, _, _) in rows {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        parent[a] = b;
    }
    let root = find(&mut parent, 0);
    let stray: Vec<&str> = (0..items.len())
        .filter(|&i| find(&mut parent, i) != root)
        .map(|i| items[i].as_str())
        .collect();
    if stray.is_empty() {
        Ok(())
    } else {
        Err(Error::DisconnectedGraph(format!("not linked to {}: {}", items[0], stray.join(", "))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(l: &str, r: &str, a: u64, b: u64) -> PairRow {
        PairRow { left: l.into(), right: r.into(), chose_left: a, chose_right: b, mean_rt: None }
    }

    #[test]
    fn symmetric_pair() {
        let t = PairComparisonTable::new(vec![row("x", "y", 19, 19)]).unwrap();
        let fit = bt_fit(&t, "x").unwrap();
        assert_eq!(fit.abilities["x"], 0.0);
        assert!(fit.abilities["y"].abs() < 1e-12);
        assert!((fit.win_probability("x", "y").unwrap() - 0.5).abs() < 1e-12);
        assert!(fit.residual_deviance.abs() < 1e-12);
    }

    #[test]
    fn disconnected() {
        let t = PairComparisonTable::new(vec![row("a", "b", 3, 2), row("c", "d", 1, 4)]).unwrap();
        assert!(matches!(bt_fit(&t, "a"), Err(Error::DisconnectedGraph(_))));
    }

    #[test]
    fn separated_item_does_not_converge() {
        let t = PairComparisonTable::new(vec![row("a", "b", 0, 5), row("b", "c", 5, 0), row("a", "c", 2, 2)]).unwrap();
        assert!(matches!(bt_fit(&t, "a"), Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn missing_reference() {
        let t = PairComparisonTable::new(vec![row("a", "b", 3, 2)]).unwrap();
        assert!(matches!(bt_fit(&t, "z"), Err(Error::InvalidTable(_))));
    }

    #[test]
    fn table_validation() {
        assert!(matches!(PairComparisonTable::new(vec![row("a", "a", 1, 1)]), Err(Error::SelfPair(_))));
        assert!(PairComparisonTable::new(vec![row("a", "b", 1, 1), row("b", "a", 1, 1)]).is_err());
    }

    #[test]
    fn merge_cases() {
        assert!(merge_duplicates(&[]).unwrap().is_empty());
        let t = |l: &str, r: &str, c, rt| TrialChoice { left: l.into(), right: r.into(), choice: c, rt };
        let merged = merge_duplicates(&[t("B", "A", Side::Left, 1.0), t("A", "B", Side::Right, 2.0)]).unwrap();
        assert_eq!(merged.rows().len(), 1);
        let r = &merged.rows()[0];
        assert_eq!((r.left.as_str(), r.right.as_str(), r.chose_left, r.chose_right), ("A", "B", 0, 2));
        assert_eq!(r.mean_rt, Some(1.5));
        assert!(matches!(merge_duplicates(&[t("A", "A", Side::Left, 1.0)]), Err(Error::SelfPair(_))));
    }
}
