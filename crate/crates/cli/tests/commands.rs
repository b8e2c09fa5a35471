use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;
use vizent_core::experiment::{Mode, Response, TrialManifest, TrialRecord, TrialResults, SCHEMA_VERSION};

fn vizent(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vizent"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str], dir: &Path) -> Value {
    let out = vizent(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn entropy_of_generated_message() {
    let dir = TempDir::new().unwrap();
    let v = ok_json(&["entropy", "--frequency", "6"], dir.path());
    assert_eq!(v["n"], 360);
    assert_eq!(v["m"], 1);
    let direct = vizent_core::entropy::sample_entropy(
        &vizent_core::entropy::generate_message(6.0, 1.0, 360).unwrap(),
        &vizent_core::SampEnParams::default(),
    )
    .unwrap();
    assert_eq!(v["value"].as_f64().unwrap(), direct);
}

#[test]
fn entropy_reads_series_files() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("a.txt"), "1, -1 1\n-1 1 -1 1 -1").unwrap();
    fs::write(dir.path().join("a.json"), "[1,-1,1,-1,1,-1,1,-1]").unwrap();
    let text = ok_json(&["entropy", "--input", "a.txt", "--m", "2"], dir.path());
    let json = ok_json(&["entropy", "--input", "a.json", "--m", "2"], dir.path());
    assert_eq!(text, json);
    assert_eq!(text["value"], 0.0);
}

#[test]
fn undefined_entropy_exits_two() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("x.txt"), "0 10 20 30").unwrap();
    let out = vizent(&["entropy", "--input", "x.txt"], dir.path());
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_arguments_exit_one() {
    let dir = TempDir::new().unwrap();
    let out = vizent(&["entropy", "--frequency", "6", "--m", "0"], dir.path());
    assert_eq!(code(&out), 1);
    let out = vizent(&["entropy", "--frequency", "500"], dir.path());
    assert_eq!(code(&out), 1, "above Nyquist is invalid input");
    let out = vizent(&["ttest", "missing.txt", "missing.txt"], dir.path());
    assert_eq!(code(&out), 1);
}

#[test]
fn constant_paired_difference_exits_two() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("a"), "1 2 3").unwrap();
    fs::write(dir.path().join("b"), "0 1 2").unwrap();
    let out = vizent(&["ttest", "a", "b"], dir.path());
    assert_eq!(code(&out), 2);
    let v = ok_json(&["ttest", "a", "b", "--kind", "welch"], dir.path());
    assert!((v["mean_difference"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn scale_file_round_trips_through_glyph() {
    let dir = TempDir::new().unwrap();
    let out = vizent(&["gen-scale", "--levels", "5", "--v-min", "0", "--v-max", "4", "--out", "s.json"], dir.path());
    assert!(out.status.success());
    let scale = vizent_core::UncertaintyScale::from_json(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(scale.len(), 5);
    assert_eq!(scale.bounds(), Some((0.0, 4.0)));

    let out = vizent(&["gen-glyph", "--scale", "s.json", "--level", "4", "--color", "#ff0000"], dir.path());
    let svg = String::from_utf8(out.stdout).unwrap();
    assert!(svg.contains("level-4") && svg.contains("#ff0000"), "{svg}");
    assert_eq!(code(&vizent(&["gen-glyph", "--scale", "s.json", "--level", "5"], dir.path())), 1);
    let null = String::from_utf8(vizent(&["gen-glyph", "--null"], dir.path()).stdout).unwrap();
    assert!(null.contains("<rect"));
}

#[test]
fn config_sets_scale_and_warns_about_fine_waves() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"scale": {"levels": 4}, "display": {"pixel_pitch": 0.1, "viewing_distance": 500, "glyph_wave_diameter_px": 10}}"#,
    )
    .unwrap();
    let out = vizent(&["--config", "c.json", "gen-scale"], dir.path());
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["levels"].as_array().unwrap().len(), 4);
    fs::write(dir.path().join("bad.json"), r#"{"scale": {"levls": 4}}"#).unwrap();
    assert_eq!(code(&vizent(&["--config", "bad.json", "gen-scale"], dir.path())), 1);

    let out = vizent(&["--config", "c.json", "gen-glyph", "--level", "3"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

const READINGS: &str = "sensor_id,timestamp,value,measure
s1,2024-05-01T09:05:00Z,10,temp
s1,2024-05-01T09:25:00Z,12,temp
s2,2024-05-01T09:10:00Z,20,temp
s2,2024-05-01T09:40:00Z,30,temp
s3,2024-05-01T09:15:00Z,15,temp
s1,2024-05-01T10:05:00Z,99,temp
";

#[test]
fn summarize_and_render_scene() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("r.csv"), READINGS).unwrap();
    fs::write(dir.path().join("loc.json"), r#"{"s1": [100, 100], "s2": [200, 150], "s3": [300, 50]}"#).unwrap();
    let v = ok_json(&["summarize", "--readings", "r.csv", "--locations", "loc.json"], dir.path());
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["mean"], 11.0);
    assert_eq!(rows[0]["variance"], 2.0);
    assert_eq!(rows[1]["variance"], 50.0);
    assert!(rows[2]["variance"].is_null());

    let out = vizent(
        &["render-scene", "--readings", "r.csv", "--locations", "loc.json", "--width", "400", "--height", "200", "--labels"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = String::from_utf8(out.stdout).unwrap();
    assert_eq!(svg.matches("class=\"glyph ").count(), 3);
    assert!(svg.contains("level-0") && svg.contains("level-6") && svg.contains("<rect"));
    let again = vizent(
        &["render-scene", "--readings", "r.csv", "--locations", "loc.json", "--width", "400", "--height", "200", "--labels"],
        dir.path(),
    );
    assert_eq!(svg.as_bytes(), again.stdout.as_slice());

    let out = vizent(&["render-scene", "--readings", "r.csv", "--locations", "loc.json", "--width", "150"], dir.path());
    assert_eq!(code(&out), 1);
}

fn write_results(dir: &Path, manifest: &TrialManifest, name: &str, answer: impl Fn(usize) -> Response) {
    let t0 = chrono::DateTime::parse_from_rfc3339("2024-05-01T09:00:00Z").unwrap().with_timezone(&chrono::Utc);
    let results = TrialResults {
        schema_version: SCHEMA_VERSION,
        participant_id: manifest.participant_id.clone(),
        mode: manifest.mode,
        records: (0..manifest.trials.len())
            .map(|i| TrialRecord { trial_index: i, response: answer(i), rt: 1.0 + (i % 5) as f64 * 0.1 })
            .collect(),
        started_at: t0,
        completed_at: t0 + chrono::Duration::minutes(10),
    };
    fs::write(dir.join(name), results.to_json().unwrap()).unwrap();
}

#[test]
fn ranking_session_to_fit_and_regression() {
    let dir = TempDir::new().unwrap();
    let glyphs = ["g/L0.svg", "g/L1.svg", "g/L2.svg", "g/L3.svg"];
    assert_eq!(code(&vizent(&["manifest-ranking", "--participant", "p1", "g/a.svg", "g/b.svg"], dir.path())), 1);
    let mut manifests = Vec::new();
    for p in ["p1", "p2", "p3"] {
        let seed = if p == "p1" { "1" } else if p == "p2" { "2" } else { "3" };
        let mut args = vec!["--seed", seed, "manifest-ranking", "--participant", p];
        args.extend(glyphs);
        let v = ok_json(&args, dir.path());
        let m: TrialManifest = serde_json::from_value(v).unwrap();
        assert_eq!(m.trials.len(), 12);
        fs::write(dir.path().join(format!("{p}.manifest.json")), m.to_json().unwrap()).unwrap();
        manifests.push(m);
    }
    // the higher level wins, except that participant p1 picks the lower of two neighbouring levels
    for (k, m) in manifests.iter().enumerate() {
        let m2 = m.clone();
        write_results(dir.path(), m, &format!("r{k}.json"), move |i| {
            let vizent_core::experiment::Trial::Pair { left_asset, right_asset } = &m2.trials[i] else { unreachable!() };
            let level = |a: &str| a.as_bytes()[a.len() - 5] - b'0';
            let (l, r) = (level(left_asset), level(right_asset));
            let lower_wins = k == 0 && l.abs_diff(r) == 1;
            if (l > r) != lower_wins {
                Response::Left
            } else {
                Response::Right
            }
        });
    }
    let out = vizent(
        &[
            "merge", "--manifest", "p1.manifest.json", "--manifest", "p2.manifest.json", "--manifest", "p3.manifest.json",
            "r2.json", "r0.json", "r1.json", "--out", "merged.json",
        ],
        dir.path(),
    );
    assert!(out.status.success() && out.stdout.is_empty());
    let merged: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("merged.json")).unwrap()).unwrap();
    let rows = merged["ranking"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r["chose_left"].as_u64().unwrap() + r["chose_right"].as_u64().unwrap() == 6));

    let out = vizent(&["merge", "--manifest", "p1.manifest.json", "r0.json", "r1.json"], dir.path());
    assert_eq!(code(&out), 1, "results without a manifest are rejected");

    assert!(vizent(&["bt-fit", "merged.json", "--reference", "L0", "--out", "fit.json"], dir.path()).status.success());
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    let ab = &report["fit"]["abilities"];
    assert_eq!(ab["L0"], 0.0);
    let a: Vec<f64> = ["L0", "L1", "L2", "L3"].iter().map(|k| ab[k].as_f64().unwrap()).collect();
    assert!(a.windows(2).all(|w| w[1] > w[0]), "{a:?}");
    assert_eq!(report["rt_screen"]["flags"].as_array().unwrap().len(), 6);

    let text = vizent(&["bt-fit", "merged.json", "--report", "text"], dir.path());
    assert!(String::from_utf8_lossy(&text.stdout).contains("Residual deviance"));

    assert!(vizent(&["gen-scale", "--levels", "4", "--out", "s4.json"], dir.path()).status.success());
    let reg = ok_json(&["regress", "--bt", "fit.json", "--scale", "s4.json"], dir.path());
    assert_eq!(reg["ids"], json!(["L0", "L1", "L2", "L3"]));
    assert_eq!(reg["entropy"][0], 0.0);
    assert_eq!(reg["log_linear"]["df"], json!([1, 1]));
    assert_eq!(reg["quadratic"]["df"], json!([2, 1]));
    let out = vizent(&["regress", "--bt", "fit.json"], dir.path());
    assert_eq!(code(&out), 1, "seven-level default scale does not match four glyphs");
}

#[test]
fn regress_plain_data() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("xy.csv"), "x,y\n0,1\n1,3\n2,5\n3,7.5\n").unwrap();
    let v = ok_json(&["regress", "--data", "xy.csv"], dir.path());
    let c = v["coefficients"].as_array().unwrap();
    assert!((c[1].as_f64().unwrap() - 2.15).abs() < 1e-12, "{c:?}");
    fs::write(dir.path().join("line.csv"), "0,1\n1,1\n2,1\n").unwrap();
    let out = vizent(&["regress", "--data", "line.csv", "--degree", "2"], dir.path());
    assert_ne!(code(&out), 0);
}

#[test]
fn search_session_to_sdt() {
    let dir = TempDir::new().unwrap();
    let bucket = |p: &str| (0..10).map(|i| format!("scenes/{p}{i}.png")).collect::<Vec<_>>();
    fs::write(
        dir.path().join("b.json"),
        json!({"low_present": bucket("lp"), "low_absent": bucket("la"), "high_present": bucket("hp"), "high_absent": bucket("ha")})
            .to_string(),
    )
    .unwrap();
    assert_eq!(code(&vizent(&["manifest-search", "--participant", "p1", "--buckets", "b.json"], dir.path())), 1, "seed required");
    let v = ok_json(&["--seed", "5", "manifest-search", "--participant", "p1", "--buckets", "b.json"], dir.path());
    let m: TrialManifest = serde_json::from_value(v).unwrap();
    assert_eq!((m.mode, m.trials.len()), (Mode::Search, 40));
    fs::write(dir.path().join("m.json"), m.to_json().unwrap()).unwrap();
    let m2 = m.clone();
    // always answers correctly except for one miss
    write_results(dir.path(), &m, "r.json", move |i| {
        let vizent_core::experiment::Trial::Search { target_present, .. } = &m2.trials[i] else { unreachable!() };
        if *target_present && i != first_present(&m2) {
            Response::Yes
        } else {
            Response::No
        }
    });
    assert!(vizent(&["merge", "--manifest", "m.json", "r.json", "--out", "merged.json"], dir.path()).status.success());
    let merged: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("merged.json")).unwrap()).unwrap();
    let total: u64 = ["low", "high"].iter().map(|k| merged["search"][k]["misses"].as_u64().unwrap()).sum();
    assert_eq!(total, 1);

    let v = ok_json(&["sdt", "merged.json"], dir.path());
    assert!(v["low"]["d_prime"].as_f64().unwrap() > 2.0);
    assert!(v["high"]["a_prime"].as_f64().unwrap() > 0.9);

    let one = ok_json(
        &["sdt", "--hits", "142", "--misses", "8", "--false-alarms", "0", "--correct-rejections", "150", "--correction", "psycho"],
        dir.path(),
    );
    assert!((one["d_prime"].as_f64().unwrap() - 4.2761).abs() < 5e-5);
    let none = vizent(&["sdt", "--hits", "5", "--misses", "0", "--false-alarms", "0", "--correct-rejections", "5", "--correction", "none"], dir.path());
    assert!(none.status.success());
}

fn first_present(m: &TrialManifest) -> usize {
    m.trials
        .iter()
        .position(|t| matches!(t, vizent_core::experiment::Trial::Search { target_present: true, .. }))
        .unwrap()
}
