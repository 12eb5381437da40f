//! The news-value model: per-post feature assembly, a linear SVM, repeated
//! 80/20 cross-validation and feature-group ablation.
//!
//! Feature names carry their family as a prefix (`text_`, `topic_`,
//! `scope_`, `impact_`, `loc_`, `rarity`). Optional values come with a
//! `*_present` indicator that is always stored, as 0 or 1.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curation::SourceProfile;
use crate::error::{Error, Result};
use crate::geo::{location_features, Gazetteer};
use crate::impact::{classify_impact, extract_site_terms, ImpactContext, ImpactLabel};
use crate::labeling::Masker;
use crate::linear::{train_pegasos, FeatureMap, LinearModel, SvmConfig};
use crate::numeric::extract_numeric_phrases;
use crate::rarity::{BackgroundIndex, LocationId};
use crate::records::Post;
use crate::scope::ScopeExtractor;
use crate::textvec::{nearest_centroid, tokenize, CentroidSet, TfidfModel};

pub type FeatureVector = FeatureMap;

pub const FEATURE_SCHEMA: &str = "newsvalue-features/v1";
pub const NAME_BUCKETS: u64 = 1024;
pub const CV_FOLDS: usize = 10;
pub const CV_TRAIN_SHARE: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Text,
    Topic,
    Scope,
    Impact,
    Rarity,
    Location,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 6] = [
        FeatureGroup::Text,
        FeatureGroup::Topic,
        FeatureGroup::Scope,
        FeatureGroup::Impact,
        FeatureGroup::Rarity,
        FeatureGroup::Location,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::Text => "text",
            FeatureGroup::Topic => "topic",
            FeatureGroup::Scope => "scope",
            FeatureGroup::Impact => "impact",
            FeatureGroup::Rarity => "rarity",
            FeatureGroup::Location => "location",
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            FeatureGroup::Text => "text_",
            FeatureGroup::Topic => "topic_",
            FeatureGroup::Scope => "scope_",
            FeatureGroup::Impact => "impact_",
            FeatureGroup::Rarity => "rarity",
            FeatureGroup::Location => "loc_",
        }
    }

    pub fn of(feature: &str) -> Option<FeatureGroup> {
        Self::ALL.into_iter().find(|g| feature.starts_with(g.prefix()))
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown feature group `{s}`")))
    }
}

/// The four feature configurations of the reference evaluation: the
/// text+topic baseline, plus scope and impact, plus rarity and location,
/// and everything.
pub fn reference_configurations() -> Vec<Vec<FeatureGroup>> {
    use FeatureGroup::*;
    vec![
        vec![Text, Topic],
        vec![Text, Topic, Scope, Impact],
        vec![Text, Topic, Rarity, Location],
        FeatureGroup::ALL.to_vec(),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Direct,
    ViaLink,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub post_id: String,
    pub features: FeatureVector,
    pub label: bool,
    pub label_provenance: Provenance,
}

/// Everything feature assembly reads. Immutable once built.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    pub gazetteer: Gazetteer,
    pub scope: ScopeExtractor,
    pub impact: ImpactContext,
    pub impact_model: LinearModel,
    pub masker: Masker,
    /// Shared tweet and headline dictionary.
    pub tfidf: TfidfModel,
    pub centroids: CentroidSet,
    pub background: Option<BackgroundIndex>,
}

fn flag(v: bool) -> f64 {
    if v {
        1.0
    } else {
        0.0
    }
}

pub fn name_bucket(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in crate::geo::normalize_name(name).bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h % NAME_BUCKETS
}

impl FeatureExtractor {
    pub fn topic_of(&self, text: &str) -> Option<String> {
        let v = self.tfidf.vectorize_text(text);
        if v.norm() == 0.0 || self.centroids.is_empty() {
            return None;
        }
        match nearest_centroid(&v, &self.centroids) {
            Ok((code, sim)) if sim > 0.0 => Some(code),
            _ => None,
        }
    }

    pub fn assemble(&self, post: &Post, source: &SourceProfile) -> FeatureVector {
        let mut f = FeatureVector::new();
        let mut put = |k: &str, v: f64| {
            if v.is_finite() {
                f.insert(k.to_owned(), v);
            }
        };

        // text
        let masked = self.masker.mask(&post.text);
        for (term, w) in self.tfidf.vectorize_text(&masked).normalized().iter() {
            put(&format!("text_{term}"), w);
        }

        // topic
        let topic = self.topic_of(&post.text);
        put("topic_present", flag(topic.is_some()));
        if let Some(code) = &topic {
            put(&format!("topic_{code}"), 1.0);
        }

        // scope
        let s = self.scope.extract(&post.text);
        put("scope_scale_adj_present", flag(!s.scale_adjectives.is_empty()));
        if !s.scale_adjectives.is_empty() {
            put("scope_scale_adj_count", s.scale_adjectives.len() as f64);
        }
        put("scope_fire_cause_present", flag(s.fire_cause.is_some()));
        put("scope_alarm_present", flag(s.alarm_level.is_some()));
        if let Some(a) = s.alarm_level {
            put("scope_alarm_level", a as f64);
        }
        put("scope_quake_present", flag(s.quake_magnitude.is_some()));
        if let Some((_, m)) = s.quake_magnitude {
            put("scope_quake_magnitude", m);
        }
        put("scope_wildfire_present", flag(s.wildfire_size_acres.is_some()));
        if let Some(a) = s.wildfire_size_acres {
            put("scope_wildfire_size", a);
        }
        put("scope_vehicle_present", flag(s.vehicle_count.is_some()));
        if let Some(n) = s.vehicle_count {
            put("scope_vehicle_count", n as f64);
        }
        put("scope_weather_present", flag(s.weather_scale.is_some()));
        if let Some((scale, level)) = s.weather_scale {
            put("scope_weather_level", level as f64 / scale.max_level() as f64);
        }
        put("scope_hail_present", flag(s.hail_size_inches.is_some()));
        if let Some(h) = s.hail_size_inches {
            put("scope_hail_size", h);
        }

        // impact
        let (mut human, mut financial, mut human_max) = (0usize, 0usize, None::<f64>);
        for p in extract_numeric_phrases(&post.text) {
            match classify_impact(&p, &post.text, &self.impact, &self.impact_model) {
                Ok(ImpactLabel::HumanImpact) => {
                    human += 1;
                    if let Some(v) = p.value.or(p.soft_quantity.map(|q| q.floor())) {
                        human_max = Some(human_max.map_or(v, |m| m.max(v)));
                    }
                }
                Ok(ImpactLabel::FinancialImpact) => financial += 1,
                _ => {}
            }
        }
        put("impact_human_count", human as f64);
        put("impact_financial_count", financial as f64);
        put("impact_human_present", flag(human_max.is_some()));
        if let Some(m) = human_max {
            put("impact_human_max", m);
        }
        put("impact_site_count", extract_site_terms(&tokenize(&post.text), &self.impact.sites).len() as f64);

        // location
        let loc = location_features(post, source, &self.gazetteer);
        put("loc_present", flag(!loc.is_nil()));
        if let (Some(lat), Some(lon)) = (loc.lat, loc.lon) {
            put("loc_lat", lat);
            put("loc_lon", lon);
        }
        if let Some(name) = &loc.name {
            put(&format!("loc_name_{}", name_bucket(name)), 1.0);
        }
        if let Some(cc) = &loc.country_code {
            put(&format!("loc_country_{cc}"), 1.0);
        }

        // rarity
        let score = match (&self.background, loc.lat.zip(loc.lon), &loc.country_code, &topic) {
            (Some(bg), Some((lat, lon)), Some(cc), Some(t)) => Some(bg.rarity(LocationId::from_coords(lat, lon), cc, t).value),
            _ => None,
        };
        put("rarity_present", flag(score.is_some()));
        put("rarity", score.unwrap_or(0.0));
        f
    }
}

pub fn assemble_features(post: &Post, source: &SourceProfile, fx: &FeatureExtractor) -> FeatureVector {
    fx.assemble(post, source)
}

pub fn restrict(features: &FeatureVector, groups: &BTreeSet<FeatureGroup>) -> FeatureVector {
    features
        .iter()
        .filter(|(k, _)| FeatureGroup::of(k).is_some_and(|g| groups.contains(&g)))
        .map(|(k, v)| (k.clone(), *v))
        .collect()
}

/// Linear SVM over max-abs scaled features. The scaling is folded back into
/// the weights, so the returned model scores raw feature vectors.
pub fn train_svm(examples: &[LabeledExample], config: &SvmConfig) -> Result<LinearModel> {
    let mut max_abs: BTreeMap<&str, f64> = BTreeMap::new();
    for e in examples {
        for (k, v) in &e.features {
            let m = max_abs.entry(k).or_insert(0.0);
            *m = m.max(v.abs());
        }
    }
    let scaled: Vec<FeatureMap> = examples
        .iter()
        .map(|e| {
            e.features
                .iter()
                .filter(|(_, v)| **v != 0.0)
                .map(|(k, v)| (k.clone(), v / max_abs[k.as_str()]))
                .collect()
        })
        .collect();
    let rows: Vec<(&FeatureMap, bool)> = scaled.iter().zip(examples).map(|(x, e)| (x, e.label)).collect();
    let mut model = train_pegasos(&rows, FEATURE_SCHEMA, config)?;
    for (k, w) in model.heads[0].weights.iter_mut() {
        *w /= max_abs[k.as_str()];
    }
    Ok(model)
}

pub fn check_schema(model: &LinearModel) -> Result<()> {
    if model.schema != FEATURE_SCHEMA {
        return Err(Error::SchemaMismatch { expected: FEATURE_SCHEMA.into(), found: model.schema.clone() });
    }
    Ok(())
}

/// Decision value and predicted label.
pub fn predict(model: &LinearModel, features: &FeatureVector) -> Result<(f64, bool)> {
    check_schema(model)?;
    let d = model.decision(features)?;
    Ok((d, d > 0.0))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn add(&mut self, gold: bool, predicted: bool) {
        match (gold, predicted) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn merge(&mut self, o: &Confusion) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.tn += o.tn;
    }

    /// Precision, recall and F1 in percent; 0 where undefined.
    pub fn prf(&self) -> (f64, f64, f64) {
        let pct = |a: usize, b: usize| if b == 0 { 0.0 } else { 100.0 * a as f64 / b as f64 };
        let p = pct(self.tp, self.tp + self.fp);
        let r = pct(self.tp, self.tp + self.fn_);
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        (p, r, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub confusion: Confusion,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Pooled over all held-out predictions, in percent.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: Confusion,
    pub folds: Vec<FoldReport>,
    /// Per group: (sum of positive weights, sum of negative weights) of a
    /// model trained on all examples.
    pub group_weights: BTreeMap<String, (f64, f64)>,
}

impl EvalReport {
    pub fn table(&self) -> String {
        let mut out = format!(
            "P={:.2} R={:.2} F={:.2} (tp={} fp={} fn={} tn={})\n",
            self.precision, self.recall, self.f1, self.confusion.tp, self.confusion.fp, self.confusion.fn_, self.confusion.tn
        );
        for f in &self.folds {
            out.push_str(&format!("  fold {:>2}: P={:.2} R={:.2} F={:.2}\n", f.fold, f.precision, f.recall, f.f1));
        }
        out
    }
}

/// Indices of a stratified random split: `share` of each class for
/// training, the rest held out.
fn stratified_split(labels: &[bool], share: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(rng);
        let k = ((idx.len() as f64 * share).round() as usize).clamp(1.min(idx.len()), idx.len());
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// `folds` independent stratified 80/20 resamples; fold `k` draws its split
/// and its training order from `seed + k`.
pub fn cross_validate(examples: &[LabeledExample], folds: usize, share: f64, seed: u64, config: &SvmConfig) -> Result<EvalReport> {
    let needed = folds * 2;
    if examples.len() < needed {
        return Err(Error::InsufficientData { needed, got: examples.len() });
    }
    let labels: Vec<bool> = examples.iter().map(|e| e.label).collect();
    let mut pooled = Confusion::default();
    let mut reports = Vec::with_capacity(folds);
    for k in 0..folds {
        let fold_seed = seed.wrapping_add(k as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(fold_seed);
        let (train, test) = stratified_split(&labels, share, &mut rng);
        let train_set: Vec<LabeledExample> = train.iter().map(|&i| examples[i].clone()).collect();
        let model = train_svm(&train_set, &SvmConfig { seed: fold_seed, ..config.clone() })?;
        let mut c = Confusion::default();
        for &i in &test {
            c.add(labels[i], model.decision(&examples[i].features)? > 0.0);
        }
        pooled.merge(&c);
        let (precision, recall, f1) = c.prf();
        reports.push(FoldReport { fold: k, confusion: c, precision, recall, f1 });
    }
    let full = train_svm(examples, &SvmConfig { seed, ..config.clone() })?;
    let (precision, recall, f1) = pooled.prf();
    Ok(EvalReport {
        precision,
        recall,
        f1,
        confusion: pooled,
        folds: reports,
        group_weights: feature_group_weights(&full),
    })
}

/// Cross-validation restricted to each requested union of groups.
pub fn ablate(
    examples: &[LabeledExample],
    configurations: &[Vec<FeatureGroup>],
    folds: usize,
    seed: u64,
    config: &SvmConfig,
) -> Result<Vec<(Vec<FeatureGroup>, EvalReport)>> {
    let mut out = Vec::new();
    for groups in configurations {
        if groups.is_empty() {
            return Err(Error::NoFeatures);
        }
        let set: BTreeSet<FeatureGroup> = groups.iter().copied().collect();
        let restricted: Vec<LabeledExample> = examples
            .iter()
            .map(|e| LabeledExample { features: restrict(&e.features, &set), ..e.clone() })
            .collect();
        out.push((groups.clone(), cross_validate(&restricted, folds, CV_TRAIN_SHARE, seed, config)?));
    }
    Ok(out)
}

/// Signed weight sums per feature group, split by sign.
pub fn feature_group_weights(model: &LinearModel) -> BTreeMap<String, (f64, f64)> {
    let mut out: BTreeMap<String, (f64, f64)> = FeatureGroup::ALL.iter().map(|g| (g.as_str().to_owned(), (0.0, 0.0))).collect();
    for head in model.heads.iter().take(1) {
        for (k, &w) in &head.weights {
            let Some(g) = FeatureGroup::of(k) else { continue };
            let slot = out.get_mut(g.as_str()).expect("all groups present");
            if w > 0.0 {
                slot.0 += w;
            } else {
                slot.1 += w;
            }
        }
    }
    out
}
