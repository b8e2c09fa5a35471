#![allow(dead_code)]

use chrono::{DateTime, Duration, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vizent_core::analysis::PairComparisonTable;
use vizent_core::experiment::{build_ranking_manifest, Mode, Response, TrialManifest, TrialRecord, TrialResults, SCHEMA_VERSION};

pub const SEVEN_GLYPH_JSON: &str = include_str!("../../fixtures/seven_glyph_counts.json");

pub fn seven_glyph_counts() -> PairComparisonTable {
    serde_json::from_str(SEVEN_GLYPH_JSON).expect("bundled fixture parses")
}

pub fn glyph_assets(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("glyphs/{}.svg", (b'A' + i as u8) as char)).collect()
}

pub fn epoch() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339("2024-05-01T09:00:00Z").unwrap().with_timezone(&Utc)
}

/// A completed session with random answers and RTs.
pub fn random_results(manifest: &TrialManifest, seed: u64) -> TrialResults {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..manifest.trials.len())
        .map(|trial_index| {
            let first = rng.random_bool(0.5);
            let response = match (manifest.mode, first) {
                (Mode::Ranking, true) => Response::Left,
                (Mode::Ranking, false) => Response::Right,
                (Mode::Search, true) => Response::Yes,
                (Mode::Search, false) => Response::No,
            };
            TrialRecord { trial_index, response, rt: rng.random_range(0.3..4.0) }
        })
        .collect();
    TrialResults {
        schema_version: SCHEMA_VERSION,
        participant_id: manifest.participant_id.clone(),
        mode: manifest.mode,
        records,
        started_at: epoch(),
        completed_at: epoch() + Duration::minutes(12),
    }
}

/// `participants` ranking sessions over seven glyphs, one seed each.
pub fn ranking_sessions(participants: usize) -> (Vec<TrialManifest>, Vec<TrialResults>) {
    let assets = glyph_assets(7);
    let manifests: Vec<TrialManifest> = (0..participants)
        .map(|p| build_ranking_manifest(&assets, 100 + p as u64, &format!("p{p:02}")).unwrap())
        .collect();
    let results = manifests.iter().enumerate().map(|(p, m)| random_results(m, 900 + p as u64)).collect();
    (manifests, results)
}

/// Materializes every template and compares all ordered pairs `i != j`.
pub fn brute_counts(x: &[f64], m: usize, r_frac: f64) -> (u64, u64) {
    let n = x.len() as f64;
    let mu = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n).sqrt();
    let r = r_frac * sd;
    let count = |len: usize| {
        let templates: Vec<Vec<f64>> = (0..x.len() - m).map(|i| x[i..i + len].to_vec()).collect();
        let mut c = 0u64;
        for (i, a) in templates.iter().enumerate() {
            for (j, b) in templates.iter().enumerate() {
                if i == j {
                    continue;
                }
                let d = a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                if d <= r {
                    c += 1;
                }
            }
        }
        c
    };
    (count(m), count(m + 1))
}

/// Standard normal CDF by composite Simpson over the density.
fn phi(x: f64) -> f64 {
    let n = 4000;
    let h = x.abs() / n as f64;
    let pdf = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(0.0) + pdf(x.abs());
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * pdf(i as f64 * h);
    }
    let half_area = s * h / 3.0;
    if x >= 0.0 {
        0.5 + half_area
    } else {
        0.5 - half_area
    }
}

fn quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub struct Expected {
    pub d: f64,
    pub beta: f64,
    pub c: f64,
    pub a: f64,
    pub b: f64,
}

/// Add half a count to every cell when a rate is extreme, then the
/// textbook formulas.
pub fn sdt_oracle(h: u64, m: u64, f: u64, cr: u64) -> Expected {
    let (np, na) = ((h + m) as f64, (f + cr) as f64);
    let (hr, fr) = (h as f64 / np, f as f64 / na);
    let edge = |r: f64| r == 0.0 || r == 1.0;
    let (ah, af) = if edge(hr) || edge(fr) {
        ((h as f64 + 0.5) / (np + 1.0), (f as f64 + 0.5) / (na + 1.0))
    } else {
        (hr, fr)
    };
    let (zh, zf) = (quantile(ah), quantile(af));
    let a = if hr >= fr {
        0.5 + ((hr - fr) * (1.0 + hr - fr)) / (4.0 * hr * (1.0 - fr))
    } else {
        0.5 - ((fr - hr) * (1.0 + fr - hr)) / (4.0 * fr * (1.0 - hr))
    };
    let (x, y) = ((1.0 - hr) * (1.0 - fr), hr * fr);
    let b = if x + y == 0.0 { if fr == 0.0 { 1.0 } else { -1.0 } } else { (x - y) / (x + y) };
    Expected { d: zh - zf, beta: ((zf * zf - zh * zh) / 2.0).exp(), c: -(zh + zf) / 2.0, a, b }
}
