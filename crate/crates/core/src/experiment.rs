//! Trial manifests for the ranking and search tasks, participant result
//! files, and merging results into analysis inputs.
//!
//! Manifests and results are JSON documents carrying `schema_version`.
//! Trial order comes from a seeded Fisher-Yates shuffle driven by ChaCha8
//! (see [`seeded_shuffle`]), so a given seed yields the same order on every
//! platform and release.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{DateTime, Utc};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{merge_duplicates, PairComparisonTable, SdtCounts, Side, TrialChoice};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub const RANKING_INSTRUCTIONS: &str = "You will see a series of image pairs.\n\
Each image represents a value and also represents a level of uncertainty.\n\
More complex shapes represent more uncertainty.\n\
Choose which image represents the most uncertain value to you.\n\
Left arrow for left. Right arrow for right.\n\
Press space when ready.";

pub const SEARCH_INSTRUCTIONS: &str = "You will see a series of map images.\n\
Before each image you will be told which glyph to look for.\n\
Press Y if that glyph is present and N if it is absent.\n\
Press space when ready.";

/// Trials per bucket in the search task.
pub const SEARCH_BUCKET_SIZE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Ranking,
    Search,
}

/// Which glyph a search trial asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// Lowest-uncertainty glyph.
    Low,
    /// Highest-uncertainty glyph.
    High,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Trial {
    Pair { left_asset: String, right_asset: String },
    Search { scene_asset: String, target_present: bool, target: TargetKind },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialManifest {
    pub schema_version: u32,
    pub mode: Mode,
    pub trials: Vec<Trial>,
    pub seed: u64,
    pub instructions: String,
    pub participant_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    Left,
    Right,
    Yes,
    No,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub response: Response,
    /// Seconds from stimulus onset to key press.
    pub rt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResults {
    pub schema_version: u32,
    pub participant_id: String,
    pub mode: Mode,
    pub records: Vec<TrialRecord>,
    pub started_at: DateTime<Utc>,
    pub completed_at: DateTime<Utc>,
}

/// Glyph id for an asset reference: its file stem (`"glyphs/C.svg"` -> `"C"`).
pub fn glyph_id(asset: &str) -> String {
    Path::new(asset)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(asset)
        .to_string()
}

/// In-place Fisher-Yates shuffle.
///
/// The generator is ChaCha8 keyed with the little-endian bytes of `seed` in
/// the first 8 key bytes (the rest zero). Going from the last position down
/// to 1, position `i` swaps with `j = (u * (i + 1)) >> 64` where `u` is the
/// next 64-bit output.
pub fn seeded_shuffle<T>(items: &mut [T], seed: u64) {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    for i in (1..items.len()).rev() {
        let j = ((rng.next_u64() as u128 * (i as u128 + 1)) >> 64) as usize;
        items.swap(i, j);
    }
}

/// Every ordered pair of distinct glyphs, shuffled by `seed`.
pub fn build_ranking_manifest(glyph_assets: &[String], seed: u64, participant_id: &str) -> Result<TrialManifest> {
    if glyph_assets.len() < 2 {
        return Err(Error::TooFewGlyphs(glyph_assets.len()));
    }
    let ids: BTreeSet<String> = glyph_assets.iter().map(|a| glyph_id(a)).collect();
    if ids.len() != glyph_assets.len() {
        return Err(Error::InvalidParameter("glyph assets must have distinct file stems".into()));
    }
    let mut trials = Vec::with_capacity(glyph_assets.len() * (glyph_assets.len() - 1));
    for (i, left) in glyph_assets.iter().enumerate() {
        for (j, right) in glyph_assets.iter().enumerate() {
            if i != j {
                trials.push(Trial::Pair { left_asset: left.clone(), right_asset: right.clone() });
            }
        }
    }
    seeded_shuffle(&mut trials, seed);
    Ok(TrialManifest {
        schema_version: SCHEMA_VERSION,
        mode: Mode::Ranking,
        trials,
        seed,
        instructions: RANKING_INSTRUCTIONS.to_string(),
        participant_id: participant_id.to_string(),
    })
}

/// Scene assets for the search task, [`SEARCH_BUCKET_SIZE`] per bucket.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBuckets {
    pub low_present: Vec<String>,
    pub low_absent: Vec<String>,
    pub high_present: Vec<String>,
    pub high_absent: Vec<String>,
}

pub fn build_search_manifest(buckets: &SearchBuckets, seed: u64, participant_id: &str) -> Result<TrialManifest> {
    let groups = [
        ("low_present", &buckets.low_present, TargetKind::Low, true),
        ("low_absent", &buckets.low_absent, TargetKind::Low, false),
        ("high_present", &buckets.high_present, TargetKind::High, true),
        ("high_absent", &buckets.high_absent, TargetKind::High, false),
    ];
    let mut trials = Vec::with_capacity(4 * SEARCH_BUCKET_SIZE);
    for (bucket, assets, target, present) in groups {
        if assets.len() != SEARCH_BUCKET_SIZE {
            return Err(Error::WrongBucketSize { bucket, got: assets.len(), expected: SEARCH_BUCKET_SIZE });
        }
        trials.extend(assets.iter().map(|a| Trial::Search { scene_asset: a.clone(), target_present: present, target }));
    }
    seeded_shuffle(&mut trials, seed);
    Ok(TrialManifest {
        schema_version: SCHEMA_VERSION,
        mode: Mode::Search,
        trials,
        seed,
        instructions: SEARCH_INSTRUCTIONS.to_string(),
        participant_id: participant_id.to_string(),
    })
}

impl TrialManifest {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion(self.schema_version));
        }
        if self.trials.is_empty() {
            return Err(Error::InvalidParameter("manifest has no trials".into()));
        }
        match self.mode {
            Mode::Ranking => {
                let mut pairs = BTreeSet::new();
                for t in &self.trials {
                    let Trial::Pair { left_asset, right_asset } = t else {
                        return Err(Error::MixedModes("search trial in a ranking manifest".into()));
                    };
                    if left_asset == right_asset {
                        return Err(Error::SelfPair(left_asset.clone()));
                    }
                    if !pairs.insert((left_asset, right_asset)) {
                        return Err(Error::InvalidParameter(format!("pair {left_asset} / {right_asset} repeated")));
                    }
                }
                let g = self.glyph_set().len();
                if self.trials.len() != g * (g - 1) {
                    return Err(Error::InvalidParameter(format!("{} trials for {g} glyphs, expected {}", self.trials.len(), g * (g - 1))));
                }
            }
            Mode::Search => {
                let mut tally: BTreeMap<(TargetKind, bool), usize> = BTreeMap::new();
                for t in &self.trials {
                    let Trial::Search { target, target_present, .. } = t else {
                        return Err(Error::MixedModes("pair trial in a search manifest".into()));
                    };
                    *tally.entry((*target, *target_present)).or_default() += 1;
                }
                for target in [TargetKind::Low, TargetKind::High] {
                    let present = tally.get(&(target, true)).copied().unwrap_or(0);
                    let absent = tally.get(&(target, false)).copied().unwrap_or(0);
                    if present != absent {
                        return Err(Error::InvalidParameter(format!("{target:?}: {present} present vs {absent} absent")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Glyph ids for ranking manifests; target kinds for search manifests.
    pub fn glyph_set(&self) -> BTreeSet<String> {
        self.trials
            .iter()
            .flat_map(|t| match t {
                Trial::Pair { left_asset, right_asset } => vec![glyph_id(left_asset), glyph_id(right_asset)],
                Trial::Search { target, .. } => vec![format!("{target:?}").to_lowercase()],
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(json)?;
        m.validate()?;
        Ok(m)
    }
}

impl TrialResults {
    /// One record per manifest trial, positive RTs, responses that fit the mode.
    pub fn validate_against(&self, manifest: &TrialManifest) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion(self.schema_version));
        }
        if self.mode != manifest.mode {
            return Err(Error::MixedModes(format!("results in {:?} mode for a {:?} manifest", self.mode, manifest.mode)));
        }
        let mut seen = BTreeSet::new();
        for r in &self.records {
            if r.trial_index >= manifest.trials.len() {
                return Err(Error::InvalidResults(format!("trial index {} out of range", r.trial_index)));
            }
            if !seen.insert(r.trial_index) {
                return Err(Error::InvalidResults(format!("trial {} recorded twice", r.trial_index)));
            }
            if !(r.rt > 0.0) || !r.rt.is_finite() {
                return Err(Error::InvalidResults(format!("trial {}: rt {} must be > 0", r.trial_index, r.rt)));
            }
            let ok = matches!(
                (self.mode, r.response),
                (Mode::Ranking, Response::Left | Response::Right) | (Mode::Search, Response::Yes | Response::No)
            );
            if !ok {
                return Err(Error::InvalidResults(format!("trial {}: {:?} is not a {:?} response", r.trial_index, r.response, self.mode)));
            }
        }
        let missing: Vec<usize> = (0..manifest.trials.len()).filter(|i| !seen.contains(i)).collect();
        if !missing.is_empty() {
            return Err(Error::MissingRecords { participant: self.participant_id.clone(), indices: missing });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(json)?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion(r.schema_version));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergedResults {
    Ranking(PairComparisonTable),
    Search(BTreeMap<TargetKind, SdtCounts>),
}

/// Pools every participant's results; each result file is matched to the
/// manifest with the same participant id.
///
/// The outcome does not depend on the order of either list.
pub fn merge_results(manifests: &[TrialManifest], results: &[TrialResults]) -> Result<MergedResults> {
    let first = results.first().ok_or_else(|| Error::InvalidResults("no result files".into()))?;
    let by_participant: BTreeMap<&str, &TrialManifest> = manifests.iter().map(|m| (m.participant_id.as_str(), m)).collect();
    let mut glyphs: Option<BTreeSet<String>> = None;
    let mut choices = Vec::new();
    let mut counts: BTreeMap<TargetKind, SdtCounts> = BTreeMap::new();
    for res in results {
        if res.mode != first.mode {
            return Err(Error::MixedModes(format!("{:?} and {:?} results", first.mode, res.mode)));
        }
        let manifest = by_participant
            .get(res.participant_id.as_str())
            .ok_or_else(|| Error::InvalidResults(format!("no manifest for participant {}", res.participant_id)))?;
        res.validate_against(manifest)?;
        let set = manifest.glyph_set();
        match &glyphs {
            None => glyphs = Some(set),
            Some(g) if *g != set => {
                return Err(Error::MixedModes(format!("participant {} saw a different glyph set", res.participant_id)));
            }
            Some(_) => {}
        }
        for r in &res.records {
            match (&manifest.trials[r.trial_index], r.response) {
                (Trial::Pair { left_asset, right_asset }, resp) => choices.push(TrialChoice {
                    left: glyph_id(left_asset),
                    right: glyph_id(right_asset),
                    choice: if resp == Response::Left { Side::Left } else { Side::Right },
                    rt: r.rt,
                }),
                (Trial::Search { target_present, target, .. }, resp) => {
                    let c = counts.entry(*target).or_default();
                    match (target_present, resp == Response::Yes) {
                        (true, true) => c.hits += 1,
                        (true, false) => c.misses += 1,
                        (false, true) => c.false_alarms += 1,
                        (false, false) => c.correct_rejections += 1,
                    }
                }
            }
        }
    }
    match first.mode {
        Mode::Ranking => {
            choices.sort_by(|a, b| {
                (&a.left, &a.right, a.choice as u8)
                    .cmp(&(&b.left, &b.right, b.choice as u8))
                    .then(a.rt.total_cmp(&b.rt))
            });
            Ok(MergedResults::Ranking(merge_duplicates(&choices)?))
        }
        Mode::Search => Ok(MergedResults::Search(counts)),
    }
}
