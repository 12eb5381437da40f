//! File-based pipeline behind the command-line verbs.
//!
//! Every step reads and writes newline-delimited JSON except the feature
//! matrix, which is a tab-separated `post_id, feature, value` file whose
//! first line names the feature schema.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curation::{curate, AccountLexicons, CurationConfig, CurationInputs, LocalFocusConfig, RawProfile, SourceProfile, StageCounts, TopicAssignment, CENTROID_SAMPLE};
use crate::curation::{build_trbc_centroids, fit_shared_tfidf, LocalFocusFormula};
use crate::error::{Error, Result};
use crate::geo::Gazetteer;
use crate::impact::{parse_labeled_phrases, shipped_impact_model, train_impact_classifier, ImpactContext};
use crate::labeling::{propagate_links, post_vector, undersample, HeadlineIndex, Headline, LabeledPost, LinkConfig, Masker, MatchStatus};
use crate::linear::{ClassWeighting, LinearModel, SgdConfig, SvmConfig};
use crate::model::{ablate, cross_validate, predict, reference_configurations, train_svm, EvalReport, FeatureExtractor, FeatureGroup, FeatureVector, LabeledExample, Provenance, FEATURE_SCHEMA};
use crate::rarity::{build_background, BackgroundPost};
use crate::records::{read_records, write_records, Post};
use crate::scope::ScopeExtractor;
use crate::textvec::{fit_tfidf, tokenize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    #[serde(rename = "match")]
    pub match_: f64,
    pub link: f64,
    pub same_user_link: f64,
    pub local_focus: f64,
    pub follower_cap: u64,
    pub undersample_ratio: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            match_: crate::labeling::MATCH_THRESHOLD,
            link: crate::labeling::LINK_THRESHOLD,
            same_user_link: crate::labeling::SAME_USER_LINK_THRESHOLD,
            local_focus: crate::curation::LOCAL_FOCUS_THRESHOLD,
            follower_cap: crate::curation::FOLLOWER_CAP,
            undersample_ratio: crate::labeling::UNDERSAMPLE_RATIO,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Defaults to the shipped world-cities file.
    pub gazetteer: Option<PathBuf>,
    /// Labelled numeric phrases for the impact classifier; defaults to the
    /// shipped set.
    pub impact_phrases: Option<PathBuf>,
    pub profiles: PathBuf,
    pub tweets: PathBuf,
    pub assignments: Option<PathBuf>,
    pub headlines: PathBuf,
    pub background: Option<PathBuf>,
    pub curated: PathBuf,
    pub features: PathBuf,
    pub labeled: PathBuf,
    pub model: PathBuf,
    pub report: PathBuf,
    pub predictions: PathBuf,
    pub ablation: PathBuf,
    pub feed: PathBuf,
    pub wire: PathBuf,
    pub timeliness: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            gazetteer: None,
            impact_phrases: None,
            profiles: "profiles.jsonl".into(),
            tweets: "tweets.jsonl".into(),
            assignments: None,
            headlines: "headlines.jsonl".into(),
            background: None,
            curated: "out/curated.jsonl".into(),
            features: "out/features.tsv".into(),
            labeled: "out/labeled.jsonl".into(),
            model: "out/model.json".into(),
            report: "out/report.json".into(),
            predictions: "out/predictions.jsonl".into(),
            ablation: "out/ablation.json".into(),
            feed: "feed.jsonl".into(),
            wire: "wire.jsonl".into(),
            timeliness: "out/timeliness.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmSection {
    pub epochs: usize,
    pub c: f64,
    pub class_weighting: ClassWeighting,
    pub folds: usize,
    pub train_share: f64,
}

impl Default for SvmSection {
    fn default() -> Self {
        let d = SvmConfig::default();
        SvmSection {
            epochs: d.epochs,
            c: d.c,
            class_weighting: d.class_weighting,
            folds: crate::model::CV_FOLDS,
            train_share: crate::model::CV_TRAIN_SHARE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub local_focus_formula: LocalFocusFormula,
    /// Background window `[start, end)` in seconds; defaults to the span of
    /// the background posts.
    pub background_window: Option<(i64, i64)>,
    pub thresholds: Thresholds,
    pub paths: Paths,
    pub svm: SvmSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            local_focus_formula: LocalFocusFormula::HitShare,
            background_window: None,
            thresholds: Thresholds::default(),
            paths: Paths::default(),
            svm: SvmSection::default(),
        }
    }
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        let c: PipelineConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Loads a config file; relative paths in it are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingInput(path.to_owned()),
            _ => Error::Io(e),
        })?;
        let mut c = Self::from_toml(&content)?;
        c.rebase(path.parent().unwrap_or(Path::new(".")));
        Ok(c)
    }

    pub fn rebase(&mut self, base: &Path) {
        let p = &mut self.paths;
        for x in [&mut p.gazetteer, &mut p.impact_phrases, &mut p.assignments, &mut p.background].into_iter().flatten() {
            rebase(base, x);
        }
        for x in [
            &mut p.profiles, &mut p.tweets, &mut p.headlines, &mut p.curated, &mut p.features, &mut p.labeled,
            &mut p.model, &mut p.report, &mut p.predictions, &mut p.ablation, &mut p.feed, &mut p.wire,
            &mut p.timeliness,
        ] {
            rebase(base, x);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.thresholds;
        for (name, v) in [("match", t.match_), ("link", t.link), ("same_user_link", t.same_user_link), ("local_focus", t.local_focus)] {
            if !(0.0..=1.0).contains(&v) && !(name == "local_focus" && self.local_focus_formula == LocalFocusFormula::HitToMiss && v >= 0.0) {
                return Err(Error::Config(format!("threshold `{name}` = {v} is outside [0, 1]")));
            }
        }
        if t.follower_cap == 0 {
            return Err(Error::Config("follower_cap must be positive".into()));
        }
        if t.undersample_ratio == 0 {
            return Err(Error::Config("undersample_ratio must be positive".into()));
        }
        if self.svm.folds == 0 || self.svm.epochs == 0 || self.svm.c <= 0.0 {
            return Err(Error::Config("svm folds, epochs and c must be positive".into()));
        }
        if !(self.svm.train_share > 0.0 && self.svm.train_share < 1.0) {
            return Err(Error::Config("train_share must be inside (0, 1)".into()));
        }
        if let Some((a, b)) = self.background_window {
            if b <= a {
                return Err(Error::Config("background window end must be after start".into()));
            }
        }
        Ok(())
    }

    pub fn svm_config(&self) -> SvmConfig {
        SvmConfig { epochs: self.svm.epochs, c: self.svm.c, seed: self.seed, class_weighting: self.svm.class_weighting }
    }
}

fn read_all<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    Ok(read_records(path)?.items)
}

fn gazetteer(cfg: &PipelineConfig) -> Result<Gazetteer> {
    match &cfg.paths.gazetteer {
        Some(p) => Gazetteer::load(p),
        None => Ok(Gazetteer::shipped()),
    }
}

fn impact_model(cfg: &PipelineConfig, ctx: &ImpactContext) -> Result<LinearModel> {
    let Some(path) = &cfg.paths.impact_phrases else {
        return Ok(shipped_impact_model(ctx));
    };
    let content = std::fs::read_to_string(path).map_err(|_| Error::MissingInput(path.clone()))?;
    let rows: Vec<_> = parse_labeled_phrases(&content)?
        .iter()
        .filter_map(|r| Some((r.feature_row(ctx)?, r.label)))
        .collect();
    Ok(train_impact_classifier(&rows, &SgdConfig { seed: cfg.seed, ..Default::default() })?.model)
}

fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, content)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

pub fn cmd_curate(cfg: &PipelineConfig) -> Result<StageCounts> {
    let profiles: Vec<RawProfile> = read_all(&cfg.paths.profiles)?;
    let tweets: Vec<Post> = read_all(&cfg.paths.tweets)?;
    let headlines: Vec<Headline> = read_all(&cfg.paths.headlines)?;
    let assignments: Vec<TopicAssignment> = match &cfg.paths.assignments {
        Some(p) => read_all(p)?,
        None => Vec::new(),
    };
    let g = gazetteer(cfg)?;
    let lexicons = AccountLexicons::shipped();
    let inputs = CurationInputs { tweets: &tweets, assignments: &assignments, headlines: &headlines, geocoder: &g, lexicons: &lexicons };
    let config = CurationConfig {
        follower_cap: cfg.thresholds.follower_cap,
        local_focus: LocalFocusConfig { threshold: cfg.thresholds.local_focus, formula: cfg.local_focus_formula, ..Default::default() },
        seed: cfg.seed,
        ..Default::default()
    };
    let out = curate(&profiles, &inputs, &config)?;
    write_records(&cfg.paths.curated, &out.profiles)?;
    Ok(out.stages)
}

/// Posts written by curated sources, in input order.
fn source_posts(cfg: &PipelineConfig) -> Result<(BTreeMap<String, SourceProfile>, Vec<Post>)> {
    let sources: BTreeMap<String, SourceProfile> = read_all::<SourceProfile>(&cfg.paths.curated)?
        .into_iter()
        .map(|s| (s.user_id.clone(), s))
        .collect();
    let posts = read_all::<Post>(&cfg.paths.tweets)?
        .into_iter()
        .filter(|p| sources.contains_key(&p.user_id))
        .collect();
    Ok((sources, posts))
}

pub fn feature_extractor(cfg: &PipelineConfig, posts: &[Post], headlines: &[Headline]) -> Result<FeatureExtractor> {
    let impact = ImpactContext::shipped();
    let impact_model = impact_model(cfg, &impact)?;
    let tfidf = fit_shared_tfidf(headlines, posts)?;
    let centroids = build_trbc_centroids(headlines, &tfidf, CENTROID_SAMPLE, cfg.seed)?;
    let background = match &cfg.paths.background {
        Some(p) => {
            let bg: Vec<BackgroundPost> = read_all(p)?;
            let window = cfg.background_window.unwrap_or_else(|| {
                let lo = bg.iter().map(|b| b.created_at).min().unwrap_or(0);
                let hi = bg.iter().map(|b| b.created_at).max().unwrap_or(0);
                (lo, hi + 1)
            });
            Some(build_background(&bg, window)?)
        }
        None => None,
    };
    Ok(FeatureExtractor {
        gazetteer: gazetteer(cfg)?,
        scope: ScopeExtractor::shipped(),
        impact,
        impact_model,
        masker: Masker::shipped(),
        tfidf,
        centroids,
        background,
    })
}

pub fn format_features(rows: &[(String, FeatureVector)]) -> String {
    let mut out = format!("# schema\t{FEATURE_SCHEMA}\n");
    for (id, f) in rows {
        for (k, v) in f {
            let _ = writeln!(out, "{id}\t{k}\t{v}");
        }
    }
    out
}

/// Parses a feature file; rows keep the order of first appearance.
pub fn parse_features(content: &str) -> Result<Vec<(String, FeatureVector)>> {
    let mut lines = content.lines().enumerate();
    let header = lines.next().map(|(_, l)| l).unwrap_or("");
    let schema = header.strip_prefix("# schema\t").unwrap_or(header);
    if schema != FEATURE_SCHEMA {
        return Err(Error::SchemaMismatch { expected: FEATURE_SCHEMA.into(), found: schema.into() });
    }
    let mut order: Vec<String> = Vec::new();
    let mut rows: BTreeMap<String, FeatureVector> = BTreeMap::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let bad = |reason: &str| Error::BadRecord { line: i + 1, reason: reason.into() };
        let mut cols = line.split('\t');
        let (Some(id), Some(k), Some(v), None) = (cols.next(), cols.next(), cols.next(), cols.next()) else {
            return Err(bad("expected post_id, feature, value"));
        };
        let v: f64 = v.parse().map_err(|_| bad("bad value"))?;
        if !rows.contains_key(id) {
            order.push(id.to_owned());
        }
        rows.entry(id.to_owned()).or_default().insert(k.to_owned(), v);
    }
    Ok(order.into_iter().map(|id| {
        let f = rows.remove(&id).unwrap_or_default();
        (id, f)
    }).collect())
}

fn read_features(path: &Path) -> Result<Vec<(String, FeatureVector)>> {
    let content = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingInput(path.to_owned()),
        _ => Error::Io(e),
    })?;
    parse_features(&content)
}

pub fn cmd_extract(cfg: &PipelineConfig) -> Result<usize> {
    let (sources, posts) = source_posts(cfg)?;
    let headlines: Vec<Headline> = read_all(&cfg.paths.headlines)?;
    let rows: Vec<(String, FeatureVector)> = if posts.is_empty() {
        Vec::new()
    } else {
        let fx = feature_extractor(cfg, &posts, &headlines)?;
        posts.iter().map(|p| (p.id.clone(), fx.assemble(p, &sources[&p.user_id]))).collect()
    };
    write_text(&cfg.paths.features, &format_features(&rows))?;
    Ok(rows.len())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub matched: usize,
    pub unmatched: usize,
    pub tardy: usize,
    /// Matched before link propagation.
    pub matched_direct: usize,
    pub via_link: usize,
}

pub fn cmd_label(cfg: &PipelineConfig) -> Result<LabelCounts> {
    let (_, posts) = source_posts(cfg)?;
    let headlines: Vec<Headline> = read_all(&cfg.paths.headlines)?;
    let masker = Masker::shipped();
    // one dictionary over masked headlines and posts
    let docs: Vec<(String, _)> = headlines
        .iter()
        .map(|h| (format!("h:{}", h.id), tokenize(&masker.mask(&h.text))))
        .chain(posts.iter().map(|p| (format!("p:{}", p.id), tokenize(&masker.mask(&p.text)))))
        .collect();
    if docs.is_empty() {
        return Err(Error::DegenerateLabels("no posts to label".into()));
    }
    let tfidf = fit_tfidf(&docs)?;
    let index = HeadlineIndex::build(&headlines, &tfidf, &masker);
    let vectors: Vec<_> = posts.iter().map(|p| post_vector(p, &tfidf, &masker)).collect();
    let first: Vec<_> = posts
        .iter()
        .zip(&vectors)
        .map(|(p, v)| index.match_vector(&p.id, p.created_at, v, cfg.thresholds.match_))
        .collect();
    let links = LinkConfig { link_threshold: cfg.thresholds.link, same_user_threshold: cfg.thresholds.same_user_link };
    let results = propagate_links(&first, &posts, &vectors, &links);

    let mut counts = LabelCounts { matched_direct: first.iter().filter(|r| r.is_matched()).count(), ..Default::default() };
    let mut out = Vec::with_capacity(posts.len());
    for (p, r) in posts.iter().zip(&results) {
        match r.status {
            MatchStatus::Matched => counts.matched += 1,
            MatchStatus::Unmatched => counts.unmatched += 1,
            MatchStatus::Tardy => counts.tardy += 1,
        }
        counts.via_link += r.via_link as usize;
        out.push(LabeledPost {
            post: p.clone(),
            status: r.status,
            best_headline: r.best_headline.clone(),
            best_score: r.best_score,
            via_link: r.via_link,
        });
    }
    write_records(&cfg.paths.labeled, &out)?;
    if counts.matched == 0 {
        return Err(Error::DegenerateLabels("no post matched a headline".into()));
    }
    Ok(counts)
}

/// Joins the feature matrix with the labels and undersamples negatives.
pub fn labeled_examples(cfg: &PipelineConfig) -> Result<Vec<LabeledExample>> {
    let features = read_features(&cfg.paths.features)?;
    let labels: BTreeMap<String, LabeledPost> = read_all::<LabeledPost>(&cfg.paths.labeled)?
        .into_iter()
        .map(|l| (l.post.id.clone(), l))
        .collect();
    let examples: Vec<LabeledExample> = features
        .into_iter()
        .filter_map(|(id, f)| {
            let l = labels.get(&id)?;
            Some(LabeledExample {
                post_id: id,
                features: f,
                label: l.status == MatchStatus::Matched,
                label_provenance: if l.via_link { Provenance::ViaLink } else { Provenance::Direct },
            })
        })
        .collect();
    undersample(&examples, cfg.thresholds.undersample_ratio, cfg.seed)
}

pub fn cmd_train(cfg: &PipelineConfig) -> Result<EvalReport> {
    let examples = labeled_examples(cfg)?;
    let report = cross_validate(&examples, cfg.svm.folds, cfg.svm.train_share, cfg.seed, &cfg.svm_config())?;
    let model = train_svm(&examples, &cfg.svm_config())?;
    write_text(&cfg.paths.model, &model.to_json())?;
    write_json(&cfg.paths.report, &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub post_id: String,
    pub score: f64,
    pub newsworthy: bool,
}

pub fn cmd_predict(cfg: &PipelineConfig) -> Result<Vec<Prediction>> {
    let content = std::fs::read_to_string(&cfg.paths.model).map_err(|_| Error::MissingInput(cfg.paths.model.clone()))?;
    let model = LinearModel::from_json(&content)?;
    crate::model::check_schema(&model)?;
    let features = read_features(&cfg.paths.features)?;
    let out = features
        .iter()
        .map(|(id, f)| {
            let (score, newsworthy) = predict(&model, f)?;
            Ok(Prediction { post_id: id.clone(), score, newsworthy })
        })
        .collect::<Result<Vec<_>>>()?;
    write_records(&cfg.paths.predictions, &out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub groups: Vec<FeatureGroup>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn cmd_evaluate(cfg: &PipelineConfig) -> Result<Vec<AblationRow>> {
    let examples = labeled_examples(cfg)?;
    let rows: Vec<AblationRow> = ablate(&examples, &reference_configurations(), cfg.svm.folds, cfg.seed, &cfg.svm_config())?
        .into_iter()
        .map(|(groups, r)| AblationRow { groups, precision: r.precision, recall: r.recall, f1: r.f1 })
        .collect();
    write_json(&cfg.paths.ablation, &rows)?;
    Ok(rows)
}

pub fn format_ablation(rows: &[AblationRow]) -> String {
    let mut out = format!("{:<40} {:>7} {:>7} {:>7}\n", "features", "P", "R", "F");
    for r in rows {
        let name = if r.groups.len() == FeatureGroup::ALL.len() {
            "all".to_string()
        } else {
            r.groups.iter().map(|g| g.as_str()).collect::<Vec<_>>().join("+")
        };
        let _ = writeln!(out, "{name:<40} {:>7.2} {:>7.2} {:>7.2}", r.precision, r.recall, r.f1);
    }
    out
}

/// One event time from either side of the timeliness comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTime {
    pub event_id: String,
    pub at: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelinessRow {
    pub event_id: String,
    pub first_tweet_at: i64,
    pub wire_alert_at: i64,
    /// Wire time minus feed time; positive when the feed was earlier.
    pub lead_minutes: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimelinessReport {
    pub rows: Vec<TimelinessRow>,
    pub mean_lead_minutes: Option<f64>,
    /// Share of events where the feed was strictly earlier.
    pub beat_fraction: Option<f64>,
    /// Event ids present on only one side.
    pub skipped: Vec<String>,
}

fn earliest(events: &[EventTime]) -> BTreeMap<&str, i64> {
    let mut m: BTreeMap<&str, i64> = BTreeMap::new();
    for e in events {
        let slot = m.entry(&e.event_id).or_insert(e.at);
        *slot = (*slot).min(e.at);
    }
    m
}

pub fn timeliness(feed: &[EventTime], wire: &[EventTime]) -> TimelinessReport {
    let (f, w) = (earliest(feed), earliest(wire));
    let rows: Vec<TimelinessRow> = f
        .iter()
        .filter_map(|(id, &t)| {
            let &a = w.get(id)?;
            Some(TimelinessRow { event_id: id.to_string(), first_tweet_at: t, wire_alert_at: a, lead_minutes: (a - t) as f64 / 60.0 })
        })
        .collect();
    let skipped: BTreeSet<String> = f.keys().chain(w.keys()).filter(|id| !(f.contains_key(*id) && w.contains_key(*id))).map(|s| s.to_string()).collect();
    let n = rows.len() as f64;
    let (mean, beat) = if rows.is_empty() {
        (None, None)
    } else {
        (
            Some(rows.iter().map(|r| r.lead_minutes).sum::<f64>() / n),
            Some(rows.iter().filter(|r| r.lead_minutes > 0.0).count() as f64 / n),
        )
    };
    TimelinessReport { rows, mean_lead_minutes: mean, beat_fraction: beat, skipped: skipped.into_iter().collect() }
}

pub fn cmd_timeliness(feed: &Path, wire: &Path, out: &Path) -> Result<TimelinessReport> {
    let report = timeliness(&read_all::<EventTime>(feed)?, &read_all::<EventTime>(wire)?);
    write_json(out, &report)?;
    Ok(report)
}

pub fn format_timeliness(r: &TimelinessReport) -> String {
    let mut out = String::new();
    for row in &r.rows {
        let _ = writeln!(out, "{:<24} lead {:>8.1} min", row.event_id, row.lead_minutes);
    }
    match (r.mean_lead_minutes, r.beat_fraction) {
        (Some(m), Some(b)) => {
            let _ = writeln!(out, "events {}  mean lead {:.1} min  beat {:.2}", r.rows.len(), m, b);
        }
        _ => out.push_str("no events on both sides\n"),
    }
    if !r.skipped.is_empty() {
        let _ = writeln!(out, "skipped (one side only): {}", r.skipped.join(", "));
    }
    out
}
