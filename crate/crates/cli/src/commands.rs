//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use chrono::{DateTime, Duration, Utc};
use serde::Serialize;
use serde_json::Value;
use vizent_core::analysis::{
    ability_vs_entropy_quadratic, ability_vs_log_entropy, bt_fit, fit_ols, paired_points, rt_outliers, sdt_metrics,
    t_test, BtResult, PairComparisonTable, RegressionResult, RtScreen, SdtCounts, SdtResult, TTestResult,
};
use vizent_core::color::{value_to_color, Rgb};
use vizent_core::entropy::{generate_message, sample_entropy_detail, SampEnParams};
use vizent_core::experiment::{
    build_ranking_manifest, build_search_manifest, merge_results, MergedResults, SearchBuckets, TargetKind,
    TrialManifest, TrialResults,
};
use vizent_core::geometry::{assemble_glyph, max_cycles, null_glyph, GlyphSource};
use vizent_core::ingest::{align_to_hour, attach_locations, parse_readings, summarize_window, ReadingFormat, SensorSummary};
use vizent_core::render::{render_glyph, render_scene, Canvas, Placement, SceneSpec};
use vizent_core::scale::VarianceBinning;
use vizent_core::UncertaintyScale;

use crate::config::Config;
use crate::serve::TrialServer;
use crate::{
    BtFitArgs, Cli, Command, EntropyArgs, Format, GenGlyphArgs, GenScaleArgs, ManifestRankingArgs, ManifestSearchArgs,
    MergeArgs, ReadingsInput, RegressArgs, RenderSceneArgs, SdtArgs, ServeTrialArgs, SummarizeArgs, TtestArgs,
};

pub fn run(cli: &Cli) -> Result<()> {
    let config = Config::load(cli.config.as_deref())?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Entropy(a) => entropy(a, out),
        Command::GenScale(a) => gen_scale(a, &config, out),
        Command::GenGlyph(a) => gen_glyph(a, &config, out),
        Command::Summarize(a) => summarize(a, out),
        Command::RenderScene(a) => render(a, &config, out),
        Command::ManifestRanking(a) => manifest_ranking(a, cli.seed, out),
        Command::ManifestSearch(a) => manifest_search(a, cli.seed, out),
        Command::Merge(a) => merge(a, out),
        Command::BtFit(a) => bt(a, out),
        Command::Regress(a) => regress(a, &config, out),
        Command::Sdt(a) => sdt(a, out),
        Command::Ttest(a) => ttest(a, out),
        Command::ServeTrial(a) => serve(a, out),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn emit_json<T: Serialize + ?Sized>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(out, text.as_bytes())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// A JSON array of numbers, or numbers separated by whitespace or commas.
fn read_numbers(path: &Path) -> Result<Vec<f64>> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()));
    }
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(i, t)| {
            t.parse::<f64>()
                .with_context(|| format!("{}: item {} ({t:?}) is not a number", path.display(), i + 1))
        })
        .collect()
}

fn load_scale(path: Option<&Path>, config: &Config) -> Result<UncertaintyScale> {
    match path {
        Some(p) => Ok(UncertaintyScale::from_json(&read_text(p)?).with_context(|| format!("loading scale {}", p.display()))?),
        None => Ok(config.scale.build()?),
    }
}

fn warn_unresolvable(scale: &UncertaintyScale, config: &Config) {
    let Some(display) = &config.display else {
        return;
    };
    let limit = max_cycles(display);
    for level in scale.levels().iter().filter(|l| l.frequency > limit) {
        eprintln!(
            "warning: level {} has {} cycles, above the {limit:.1} resolvable at this viewing distance",
            level.index, level.frequency
        );
    }
}

#[derive(Serialize)]
struct EntropyReport {
    value: f64,
    matches_m: u64,
    matches_m1: u64,
    tolerance: f64,
    m: usize,
    r_frac: f64,
    n: usize,
}

fn entropy(a: &EntropyArgs, out: Option<&Path>) -> Result<()> {
    let params = SampEnParams::new(a.m, a.r_frac)?;
    let samples = match (&a.input, a.frequency) {
        (Some(path), _) => read_numbers(path)?,
        (None, Some(k)) => generate_message(k, a.amplitude, a.samples)?.samples().to_vec(),
        (None, None) => bail!("give --frequency or --input"),
    };
    let s = sample_entropy_detail(&samples, &params)?;
    emit_json(
        out,
        &EntropyReport {
            value: s.value,
            matches_m: s.matches_m,
            matches_m1: s.matches_m1,
            tolerance: s.tolerance,
            m: a.m,
            r_frac: a.r_frac,
            n: samples.len(),
        },
    )
}

fn gen_scale(a: &GenScaleArgs, config: &Config, out: Option<&Path>) -> Result<()> {
    let mut sc = config.scale.clone();
    if let Some(v) = a.levels {
        sc.levels = v;
    }
    if let Some(v) = a.base_frequency {
        sc.base_frequency = v;
    }
    if let Some(v) = a.amplitude {
        sc.amplitude = v;
    }
    if let Some(v) = a.samples {
        sc.sample_count = v;
    }
    if a.v_min.is_some() {
        sc.v_min = a.v_min;
        sc.v_max = a.v_max;
    }
    if let Some(b) = a.binning {
        sc.binning = VarianceBinning::from(b);
    }
    let scale = sc.build()?;
    warn_unresolvable(&scale, config);
    let mut text = scale.to_json()?;
    text.push('\n');
    emit(out, text.as_bytes())
}

fn gen_glyph(a: &GenGlyphArgs, config: &Config, out: Option<&Path>) -> Result<()> {
    if !(a.size > 0.0 && a.size.is_finite()) {
        bail!("--size must be a positive number of pixels");
    }
    let color = match (&a.color, a.value) {
        (Some(hex), _) => hex.parse::<Rgb>()?,
        (None, Some(v)) => value_to_color(v, &config.color_map),
        (None, None) => Rgb(0x80, 0x80, 0x80),
    };
    let geometry = if a.null {
        let mut g = null_glyph(color, &config.proportions)?;
        g.label = a.label.clone();
        g
    } else {
        let scale = load_scale(a.scale.as_deref(), config)?;
        let index = a.level.expect("clap requires --level without --null");
        let level = scale
            .level(index)
            .ok_or_else(|| anyhow!("level {index} is not on the scale (0..{})", scale.len()))?;
        if let Some(display) = &config.display {
            let limit = max_cycles(display);
            if level.frequency > limit {
                eprintln!(
                    "warning: {} cycles exceeds the {limit:.1} resolvable at this viewing distance",
                    level.frequency
                );
            }
        }
        assemble_glyph(GlyphSource::Level(level), color, a.label.as_deref(), &config.proportions)?
    };
    emit(out, &render_glyph(&geometry, a.size))
}

fn load_summaries(input: &ReadingsInput) -> Result<Vec<SensorSummary>> {
    summaries_from(&input.readings, input.format.as_deref(), input.window_start.as_deref(), input.window_minutes)
}

fn summaries_from(path: &Path, format: Option<&str>, start: Option<&str>, minutes: i64) -> Result<Vec<SensorSummary>> {
    let format: ReadingFormat = match format {
        Some(f) => f.parse()?,
        None => path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .parse()
            .with_context(|| format!("cannot tell the format of {}; pass --format", path.display()))?,
    };
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let readings = parse_readings(&bytes, format).with_context(|| format!("parsing {}", path.display()))?;
    if minutes <= 0 {
        bail!("--window-minutes must be positive");
    }
    let start: DateTime<Utc> = match start {
        Some(s) => DateTime::parse_from_rfc3339(s)
            .with_context(|| format!("window start {s:?}"))?
            .with_timezone(&Utc),
        None => align_to_hour(
            readings
                .iter()
                .map(|r| r.timestamp)
                .min()
                .ok_or_else(|| anyhow!("{} holds no readings", path.display()))?,
        ),
    };
    Ok(summarize_window(&readings, Duration::minutes(minutes), start))
}

fn load_locations(path: &Path) -> Result<BTreeMap<String, (f64, f64)>> {
    read_json(path)
}

fn summarize(a: &SummarizeArgs, out: Option<&Path>) -> Result<()> {
    let mut summaries = load_summaries(&a.input)?;
    if let Some(path) = &a.locations {
        attach_locations(&mut summaries, &load_locations(path)?);
    }
    emit_json(out, &summaries)
}

fn render(a: &RenderSceneArgs, config: &Config, out: Option<&Path>) -> Result<()> {
    let spec = match (&a.spec, &a.readings, &a.locations) {
        (Some(path), _, _) => read_json::<SceneSpec>(path)?,
        (None, Some(readings), Some(locations)) => build_scene(a, readings, locations, config)?,
        _ => bail!("give --spec, or --readings with --locations"),
    };
    emit(out, &render_scene(&spec)?)
}

fn build_scene(a: &RenderSceneArgs, readings: &Path, locations: &Path, config: &Config) -> Result<SceneSpec> {
    let mut summaries = summaries_from(readings, a.format.as_deref(), a.window_start.as_deref(), a.window_minutes)?;
    attach_locations(&mut summaries, &load_locations(locations)?);
    let mut scale = load_scale(a.scale.as_deref(), config)?;
    if scale.bounds().is_none() {
        let variances: Vec<f64> = summaries.iter().filter_map(|s| s.variance).collect();
        if variances.is_empty() {
            bail!("no sensor has two readings in the window, so variance bounds cannot be derived; set them on the scale");
        }
        scale = scale.with_bounds_from(variances).context("deriving variance bounds from the window")?;
    }
    let mut placements = Vec::new();
    for s in summaries {
        match s.location {
            Some(position) => placements.push(Placement { summary: s, position, diameter: a.diameter }),
            None => eprintln!("warning: no location for sensor {}; skipped", s.sensor_id),
        }
    }
    Ok(SceneSpec {
        canvas: Canvas { width: a.width, height: a.height },
        placements,
        scale,
        color_map: config.color_map.clone(),
        show_labels: a.labels,
        background: a.background.clone(),
        proportions: config.proportions,
    })
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| anyhow!("--seed is required so the trial order can be reproduced"))
}

fn manifest_ranking(a: &ManifestRankingArgs, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let manifest = build_ranking_manifest(&a.glyphs, require_seed(seed)?, &a.participant)?;
    emit_manifest(out, &manifest)
}

fn manifest_search(a: &ManifestSearchArgs, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let buckets: SearchBuckets = read_json(&a.buckets)?;
    let manifest = build_search_manifest(&buckets, require_seed(seed)?, &a.participant)?;
    emit_manifest(out, &manifest)
}

fn emit_manifest(out: Option<&Path>, manifest: &TrialManifest) -> Result<()> {
    let mut text = manifest.to_json()?;
    text.push('\n');
    emit(out, text.as_bytes())
}

fn load_manifest(path: &Path) -> Result<TrialManifest> {
    let m = TrialManifest::from_json(&read_text(path)?).with_context(|| format!("loading manifest {}", path.display()))?;
    m.validate().with_context(|| format!("manifest {}", path.display()))?;
    Ok(m)
}

fn merge(a: &MergeArgs, out: Option<&Path>) -> Result<()> {
    let manifests = a.manifests.iter().map(|p| load_manifest(p)).collect::<Result<Vec<_>>>()?;
    let results = a
        .results
        .iter()
        .map(|p| TrialResults::from_json(&read_text(p)?).with_context(|| format!("loading results {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let merged = merge_results(&manifests, &results)?;
    match a.report {
        Format::Json => emit_json(out, &merged),
        Format::Text => {
            let text = match &merged {
                MergedResults::Ranking(table) => table.to_text(),
                MergedResults::Search(counts) => counts_text(counts),
            };
            emit(out, text.as_bytes())
        }
    }
}

fn counts_text(counts: &BTreeMap<TargetKind, SdtCounts>) -> String {
    let mut s = format!("{:<8} {:>6} {:>6} {:>6} {:>6}\n", "Target", "Hits", "Misses", "FA", "CR");
    for (target, c) in counts {
        let _ = writeln!(
            s,
            "{:<8} {:>6} {:>6} {:>6} {:>6}",
            target_name(*target),
            c.hits,
            c.misses,
            c.false_alarms,
            c.correct_rejections
        );
    }
    s
}

fn target_name(t: TargetKind) -> &'static str {
    match t {
        TargetKind::Low => "low",
        TargetKind::High => "high",
    }
}

/// Either a bare table or the output of `merge` for a ranking session.
fn load_table(path: &Path) -> Result<PairComparisonTable> {
    let value: Value = read_json(path)?;
    let inner = match value {
        Value::Object(mut map) if map.contains_key("ranking") => map.remove("ranking").expect("key checked"),
        Value::Object(map) if map.contains_key("search") => bail!("{} holds search results, not a comparison table", path.display()),
        v => v,
    };
    serde_json::from_value(inner).with_context(|| format!("parsing comparison table {}", path.display()))
}

#[derive(Serialize, serde::Deserialize)]
struct BtReport {
    fit: BtResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rt_screen: Option<RtScreen>,
}

fn bt(a: &BtFitArgs, out: Option<&Path>) -> Result<()> {
    let table = load_table(&a.table)?;
    let reference = match &a.reference {
        Some(r) => r.clone(),
        None => table
            .items()
            .into_iter()
            .next()
            .ok_or_else(|| anyhow!("comparison table is empty"))?
            .to_string(),
    };
    let fit = bt_fit(&table, &reference)?;
    let rts = table.mean_rts();
    let rt_screen = if rts.len() >= 2 { Some(rt_outliers(&rts)?) } else { None };
    match a.report {
        Format::Json => emit_json(out, &BtReport { fit, rt_screen }),
        Format::Text => {
            let mut text = fit.to_text();
            if let Some(screen) = &rt_screen {
                let _ = writeln!(
                    text,
                    "\nMean RT {:.4} s, SD {:.4} s, band [{:.4}, {:.4}], {} outlier(s)",
                    screen.mean,
                    screen.sd,
                    screen.lower,
                    screen.upper,
                    screen.outlier_count()
                );
            }
            emit(out, text.as_bytes())
        }
    }
}

/// A `bt-fit` report, or a bare fit.
fn load_fit(path: &Path) -> Result<BtResult> {
    let value: Value = read_json(path)?;
    if value.get("fit").is_some() {
        let report: BtReport = serde_json::from_value(value).with_context(|| format!("parsing {}", path.display()))?;
        return Ok(report.fit);
    }
    serde_json::from_value(value).with_context(|| format!("parsing fit {}", path.display()))
}

#[derive(Serialize)]
struct EntropyRegression {
    ids: Vec<String>,
    entropy: Vec<f64>,
    ability: Vec<f64>,
    log_linear: RegressionResult,
    quadratic: RegressionResult,
}

fn regress(a: &RegressArgs, config: &Config, out: Option<&Path>) -> Result<()> {
    if let Some(data) = &a.data {
        let (x, y) = read_xy(data)?;
        let fit = fit_ols(&x, &y, a.degree)?;
        return match a.report {
            Format::Json => emit_json(out, &fit),
            Format::Text => emit(out, regression_text("fit", &fit).as_bytes()),
        };
    }
    let fit = load_fit(a.bt.as_deref().expect("clap requires --bt without --data"))?;
    let scale = load_scale(a.scale.as_deref(), config)?;
    let ids: Vec<String> = match &a.ids {
        Some(ids) => ids.clone(),
        None => fit.abilities.keys().cloned().collect(),
    };
    let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    let (entropy, ability) = paired_points(&fit, &scale, &id_refs, 0)?;
    let report = EntropyRegression {
        log_linear: ability_vs_log_entropy(&fit, &scale, &id_refs)?,
        quadratic: ability_vs_entropy_quadratic(&fit, &scale, &id_refs)?,
        ids,
        entropy,
        ability,
    };
    match a.report {
        Format::Json => emit_json(out, &report),
        Format::Text => {
            let mut text = String::from("Glyph  Entropy   Ability\n");
            for ((id, e), b) in report.ids.iter().zip(&report.entropy).zip(&report.ability) {
                let _ = writeln!(text, "{id:<6} {e:>7.4} {b:>9.4}");
            }
            text.push('\n');
            text.push_str(&regression_text("ability ~ ln(entropy), levels 1..", &report.log_linear));
            text.push_str(&regression_text("ability ~ entropy + entropy^2", &report.quadratic));
            emit(out, text.as_bytes())
        }
    }
}

fn regression_text(title: &str, r: &RegressionResult) -> String {
    let coefficients: Vec<String> = r.coefficients.iter().map(|c| format!("{c:.4}")).collect();
    format!(
        "{title}\n  coefficients [{}]\n  R^2 {:.4}, F({}, {}) = {:.3}, p = {:.3e}\n",
        coefficients.join(", "),
        r.r_squared,
        r.df.0,
        r.df.1,
        r.f_statistic,
        r.f_p_value
    )
}

/// `x,y` rows; a first line that does not parse is taken as a header.
fn read_xy(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = read_text(path)?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed = line
            .split_once(',')
            .and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)));
        match parsed {
            Some((a, b)) => {
                x.push(a);
                y.push(b);
            }
            None if i == 0 => continue,
            None => bail!("{} line {}: expected `x,y`", path.display(), i + 1),
        }
    }
    Ok((x, y))
}

fn sdt(a: &SdtArgs, out: Option<&Path>) -> Result<()> {
    let correction = a.correction.into();
    let tables: BTreeMap<String, SdtCounts> = match &a.counts {
        Some(path) => load_counts(path)?,
        None => {
            let (Some(hits), Some(misses), Some(false_alarms), Some(correct_rejections)) =
                (a.hits, a.misses, a.false_alarms, a.correct_rejections)
            else {
                bail!("give a counts file or all of --hits, --misses, --false-alarms, --correct-rejections");
            };
            BTreeMap::from([("all".to_string(), SdtCounts { hits, misses, false_alarms, correct_rejections })])
        }
    };
    let mut results: BTreeMap<String, SdtResult> = BTreeMap::new();
    for (name, counts) in &tables {
        results.insert(name.clone(), sdt_metrics(counts, correction).with_context(|| format!("condition {name}"))?);
    }
    match a.report {
        Format::Json if a.counts.is_none() => emit_json(out, &results["all"]),
        Format::Json => emit_json(out, &results),
        Format::Text => {
            let mut text = format!(
                "{:<8} {:>5} {:>6} {:>5} {:>5} {:>8} {:>9} {:>8} {:>8} {:>8}\n",
                "Target", "Hits", "Misses", "FA", "CR", "d'", "beta", "c", "A'", "B''D"
            );
            for (name, r) in &results {
                let c = &tables[name];
                let _ = writeln!(
                    text,
                    "{name:<8} {:>5} {:>6} {:>5} {:>5} {:>8.4} {:>9.4} {:>8.4} {:>8.4} {:>8.4}",
                    c.hits, c.misses, c.false_alarms, c.correct_rejections, r.d_prime, r.beta, r.c, r.a_prime, r.b_double_prime_d
                );
            }
            emit(out, text.as_bytes())
        }
    }
}

/// One table, a map of named tables, or the output of `merge` for a search session.
fn load_counts(path: &Path) -> Result<BTreeMap<String, SdtCounts>> {
    let value: Value = read_json(path)?;
    let inner = match value {
        Value::Object(mut map) if map.contains_key("search") => map.remove("search").expect("key checked"),
        Value::Object(map) if map.contains_key("ranking") => bail!("{} holds ranking results, not counts", path.display()),
        v => v,
    };
    if inner.get("hits").is_some() {
        let one: SdtCounts = serde_json::from_value(inner).with_context(|| format!("parsing {}", path.display()))?;
        return Ok(BTreeMap::from([("all".to_string(), one)]));
    }
    serde_json::from_value(inner).with_context(|| format!("parsing counts {}", path.display()))
}

fn ttest(a: &TtestArgs, out: Option<&Path>) -> Result<()> {
    let xs = read_numbers(&a.a)?;
    let ys = read_numbers(&a.b)?;
    let r: TTestResult = t_test(&xs, &ys, a.kind.into())?;
    match a.report {
        Format::Json => emit_json(out, &r),
        Format::Text => {
            let text = format!(
                "t = {:.4}, df = {:.3}, p-value = {:.4e}\nmean difference {:.4}\n",
                r.t, r.df, r.p, r.mean_difference
            );
            emit(out, text.as_bytes())
        }
    }
}

fn serve(a: &ServeTrialArgs, out: Option<&Path>) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let results_dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("results"));
    let server = TrialServer::bind(&a.addr, &a.root, manifest, &results_dir)?;
    println!("listening on http://{}", server.local_addr());
    std::io::stdout().flush()?;
    eprintln!("saving results to {}", results_dir.display());
    server.run()
}
