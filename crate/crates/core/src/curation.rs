//! Building the list of local disaster sources.
//!
//! Stages, in order: drop accounts above the follower cap; drop accounts
//! whose profile location does not resolve; drop accounts whose tweets are
//! not mostly about places inside their profile location; re-admit the
//! accounts among the last two groups that are topically focused on crime
//! or disaster; type every survivor and score its informativeness.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{GazetteerEntry, Geocoder};
use crate::labeling::Headline;
use crate::records::Post;
use crate::taxonomy::Taxonomy;
use crate::textvec::{centroid, fit_tfidf, nearest_centroid, tokenize, CentroidSet, TfidfModel};

pub const JOURNALIST_TERMS: &str = include_str!("../data/journalist_terms.txt");
pub const MEDIA_KEYWORDS: &str = include_str!("../data/media_keywords.txt");

pub const FOLLOWER_CAP: u64 = 1_000_000;
pub const LOCAL_FOCUS_THRESHOLD: f64 = 0.5;
pub const LOCAL_FOCUS_SAMPLE: usize = 50;
pub const CENTROID_SAMPLE: usize = 1_000;
pub const TOPICAL_PERCENTILE: f64 = 0.8;
pub const TARGET_TOPICS: [&str; 2] = ["Law/Crime", "Crisis/War/Disaster"];

/// The eight disaster topic codes. The last one is the ancestor of all the
/// others in the source hierarchy.
pub mod trbc {
    pub const FIRE: &str = "fire_explosions";
    pub const QUAKE: &str = "earthquakes";
    pub const CRIME: &str = "violence_crime";
    pub const TERRORISM: &str = "terrorism";
    pub const WAR: &str = "war_conflict";
    pub const FLOODS: &str = "floods";
    pub const WEATHER: &str = "severe_weather";
    pub const DISASTER: &str = "disaster_accidents";

    pub const ALL: [&str; 8] = [FIRE, QUAKE, CRIME, TERRORISM, WAR, FLOODS, WEATHER, DISASTER];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    LocalNews,
    LocalJournalist,
    FireEmergency,
    PoliceTraffic,
    LocalAuthority,
    DisasterMonitor,
    QuakeMonitor,
    WeatherMonitor,
}

impl Category {
    pub const ALL: [Category; 8] = [
        Category::LocalNews,
        Category::LocalJournalist,
        Category::FireEmergency,
        Category::PoliceTraffic,
        Category::LocalAuthority,
        Category::DisasterMonitor,
        Category::QuakeMonitor,
        Category::WeatherMonitor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::LocalNews => "local_news",
            Category::LocalJournalist => "local_journalist",
            Category::FireEmergency => "fire_emergency",
            Category::PoliceTraffic => "police_traffic",
            Category::LocalAuthority => "local_authority",
            Category::DisasterMonitor => "disaster_monitor",
            Category::QuakeMonitor => "quake_monitor",
            Category::WeatherMonitor => "weather_monitor",
        }
    }
}

/// Account metadata as it arrives from the platform.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RawProfile {
    pub user_id: String,
    #[serde(default)]
    pub display_name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub followers: u64,
    #[serde(default)]
    pub friends: u64,
    #[serde(default)]
    pub profile_location: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SourceProfile {
    pub user_id: String,
    #[serde(default)]
    pub display_name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub followers: u64,
    #[serde(default)]
    pub friends: u64,
    #[serde(default)]
    pub profile_location: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved_location: Option<GazetteerEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    #[serde(default)]
    pub locally_focused: bool,
    /// Disaster stories per 100 tweets.
    #[serde(default)]
    pub informativeness: f64,
}

impl SourceProfile {
    pub fn new(user_id: &str, profile_location: &str) -> Self {
        SourceProfile { user_id: user_id.into(), profile_location: profile_location.into(), ..Default::default() }
    }
}

impl From<&RawProfile> for SourceProfile {
    fn from(r: &RawProfile) -> Self {
        SourceProfile {
            user_id: r.user_id.clone(),
            display_name: r.display_name.clone(),
            description: r.description.clone(),
            followers: r.followers,
            friends: r.friends,
            profile_location: r.profile_location.clone(),
            ..Default::default()
        }
    }
}

impl From<&SourceProfile> for RawProfile {
    fn from(s: &SourceProfile) -> Self {
        RawProfile {
            user_id: s.user_id.clone(),
            display_name: s.display_name.clone(),
            description: s.description.clone(),
            followers: s.followers,
            friends: s.friends,
            profile_location: s.profile_location.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub user_id: String,
    pub topic: String,
    pub count: u64,
}

pub fn filter_by_followers<T: Clone>(profiles: &[T], cap: u64, followers: impl Fn(&T) -> u64) -> Vec<T> {
    profiles.iter().filter(|p| followers(p) <= cap).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalFocusFormula {
    /// hits / (hits + misses)
    #[default]
    HitShare,
    /// hits / misses, the literal reading; no misses counts as infinite.
    HitToMiss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalFocusConfig {
    pub threshold: f64,
    pub formula: LocalFocusFormula,
    pub sample_size: usize,
}

impl Default for LocalFocusConfig {
    fn default() -> Self {
        LocalFocusConfig { threshold: LOCAL_FOCUS_THRESHOLD, formula: LocalFocusFormula::HitShare, sample_size: LOCAL_FOCUS_SAMPLE }
    }
}

/// Stable per-account seed so that sampling does not depend on the order
/// in which accounts are processed.
pub fn account_seed(seed: u64, user_id: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in user_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    seed ^ h
}

fn sample_posts<'a>(posts: &[&'a Post], n: usize, seed: u64) -> Vec<&'a Post> {
    if posts.len() <= n {
        return posts.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    posts.choose_multiple(&mut rng, n).copied().collect()
}

/// Guided-lookup hits and misses over a sample of the account's posts.
/// Each located post is geocoded with the profile location as anchor;
/// posts without a toponym do not count.
pub fn local_focus_counts(
    profile: &SourceProfile,
    sample: &[&Post],
    g: &dyn Geocoder,
    sample_size: usize,
    seed: u64,
) -> Result<(usize, usize)> {
    if profile.resolved_location.is_none() && g.resolve_place(&profile.profile_location).is_none() {
        return Err(Error::NoProfileLocation(profile.user_id.clone()));
    }
    let (mut hits, mut misses) = (0, 0);
    for post in sample_posts(sample, sample_size, account_seed(seed, &profile.user_id)) {
        let Some(tag) = g.tag_locations(&post.text).into_iter().next() else {
            continue;
        };
        if g.geocode(&tag.query, Some(&profile.profile_location)).hit {
            hits += 1;
        } else {
            misses += 1;
        }
    }
    Ok((hits, misses))
}

pub fn local_focus_ratio(profile: &SourceProfile, sample: &[&Post], g: &dyn Geocoder, sample_size: usize, seed: u64) -> Result<f64> {
    let (hits, misses) = local_focus_counts(profile, sample, g, sample_size, seed)?;
    Ok(if hits + misses == 0 { 0.0 } else { hits as f64 / (hits + misses) as f64 })
}

pub fn is_locally_focused(hits: usize, misses: usize, config: &LocalFocusConfig) -> bool {
    if hits == 0 {
        return false;
    }
    let score = match config.formula {
        LocalFocusFormula::HitShare => hits as f64 / (hits + misses) as f64,
        LocalFocusFormula::HitToMiss if misses == 0 => f64::INFINITY,
        LocalFocusFormula::HitToMiss => hits as f64 / misses as f64,
    };
    score >= config.threshold
}

/// Per-account max tf.idf over the target topics, where each topic is a
/// document and each account a term weighted by its cluster count.
pub fn topical_scores(assignments: &[TopicAssignment], targets: &[&str]) -> Result<BTreeMap<String, f64>> {
    if assignments.is_empty() {
        return Err(Error::NoDocuments);
    }
    let mut docs: BTreeMap<&str, BTreeMap<&str, u64>> = BTreeMap::new();
    for a in assignments {
        *docs.entry(&a.topic).or_default().entry(&a.user_id).or_insert(0) += a.count;
    }
    let n = docs.len() as f64;
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for terms in docs.values() {
        for u in terms.keys() {
            *df.entry(u).or_insert(0) += 1;
        }
    }
    let mut scores: BTreeMap<String, f64> = df.keys().map(|u| (u.to_string(), 0.0)).collect();
    for topic in targets {
        for (u, &count) in docs.get(topic).into_iter().flatten() {
            let idf = ((1.0 + n) / (1.0 + df[u] as f64)).ln() + 1.0;
            let s = scores.get_mut(*u).expect("every account has a score");
            *s = s.max(count as f64 * idf);
        }
    }
    Ok(scores)
}

/// Linearly interpolated percentile of ascending values, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Accounts whose score is positive and at or above the 80th percentile
/// (linear interpolation) of all accounts' scores.
pub fn topical_focus(assignments: &[TopicAssignment], targets: &[&str]) -> Result<BTreeSet<String>> {
    let scores = topical_scores(assignments, targets)?;
    let mut sorted: Vec<f64> = scores.values().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let cut = percentile(&sorted, TOPICAL_PERCENTILE);
    Ok(scores.into_iter().filter(|(_, s)| *s > 0.0 && *s >= cut).map(|(u, _)| u).collect())
}

/// One centroid per topic code from sampled headlines. Headlines under the
/// catch-all disaster code only count when they carry no other code.
pub fn build_trbc_centroids(headlines: &[Headline], tfidf: &TfidfModel, per_code: usize, seed: u64) -> Result<CentroidSet> {
    let mut set = CentroidSet::new();
    for (k, code) in trbc::ALL.iter().enumerate() {
        let pool: Vec<&Headline> = headlines
            .iter()
            .filter(|h| h.topic_codes.contains(*code))
            .filter(|h| *code != trbc::DISASTER || h.topic_codes.iter().all(|c| c == trbc::DISASTER || !trbc::ALL.contains(&c.as_str())))
            .collect();
        if pool.is_empty() {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let vectors: Vec<_> = pool
            .choose_multiple(&mut rng, per_code.min(pool.len()))
            .map(|h| tfidf.vectorize_text(&h.text))
            .collect();
        let c = centroid(&vectors)?;
        if c.norm() > 0.0 {
            set.insert(*code, c)?;
        }
    }
    if set.is_empty() {
        return Err(Error::NoCentroids);
    }
    Ok(set)
}

/// Shared tf.idf dictionary over headlines and tweets, one document each.
pub fn fit_shared_tfidf(headlines: &[Headline], posts: &[Post]) -> Result<TfidfModel> {
    let docs: Vec<(String, _)> = headlines
        .iter()
        .map(|h| (format!("h:{}", h.id), tokenize(&h.text)))
        .chain(posts.iter().map(|p| (format!("p:{}", p.id), tokenize(&p.text))))
        .collect();
    fit_tfidf(&docs)
}

#[derive(Debug, Clone)]
pub struct AccountLexicons {
    pub journalist: Taxonomy,
    pub media: Taxonomy,
}

impl AccountLexicons {
    pub fn shipped() -> Self {
        AccountLexicons {
            journalist: Taxonomy::parse("journalist_terms", JOURNALIST_TERMS).expect("shipped lexicon"),
            media: Taxonomy::parse("media_keywords", MEDIA_KEYWORDS).expect("shipped lexicon"),
        }
    }
}

pub fn category_for_code(code: &str) -> Option<Category> {
    match code {
        trbc::FIRE => Some(Category::FireEmergency),
        trbc::CRIME => Some(Category::PoliceTraffic),
        trbc::QUAKE => Some(Category::QuakeMonitor),
        trbc::FLOODS | trbc::WEATHER => Some(Category::WeatherMonitor),
        _ => None,
    }
}

/// Types an account by its nearest topic centroid. Accounts nearest the
/// general disaster, terrorism or war codes are split further by profile:
/// journalist, then non-local monitor, then news outlet, then authority.
pub fn classify_account(
    profile: &SourceProfile,
    sample_tweets: &[&Post],
    tfidf: &TfidfModel,
    centroids: &CentroidSet,
    lexicons: &AccountLexicons,
    seed: u64,
) -> Result<Category> {
    if sample_tweets.is_empty() {
        return Err(Error::EmptyAccount(profile.user_id.clone()));
    }
    let sampled = sample_posts(sample_tweets, CENTROID_SAMPLE, account_seed(seed, &profile.user_id));
    let vectors: Vec<_> = sampled.iter().map(|p| tfidf.vectorize_text(&p.text)).collect();
    let (code, _) = nearest_centroid(&centroid(&vectors)?, centroids)?;
    if let Some(c) = category_for_code(&code) {
        return Ok(c);
    }
    let description = tokenize(&profile.description);
    if !lexicons.journalist.find_all(description.as_slice()).is_empty() {
        return Ok(Category::LocalJournalist);
    }
    if !profile.locally_focused {
        return Ok(Category::DisasterMonitor);
    }
    let name_and_description = tokenize(&format!("{} {}", profile.display_name, profile.description));
    if !lexicons.media.find_all(name_and_description.as_slice()).is_empty() {
        return Ok(Category::LocalNews);
    }
    Ok(Category::LocalAuthority)
}

pub fn informativeness(history_len: usize, story_memberships: usize) -> Result<f64> {
    if history_len == 0 {
        return Err(Error::EmptyAccount(String::new()));
    }
    Ok(100.0 * story_memberships as f64 / history_len as f64)
}

/// Distinct stories among an account's posts.
pub fn story_memberships(history: &[&Post]) -> usize {
    history.iter().filter_map(|p| p.story_id.as_deref()).collect::<BTreeSet<_>>().len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurationConfig {
    pub follower_cap: u64,
    pub local_focus: LocalFocusConfig,
    pub centroid_sample: usize,
    pub target_topics: Vec<String>,
    pub seed: u64,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig {
            follower_cap: FOLLOWER_CAP,
            local_focus: LocalFocusConfig::default(),
            centroid_sample: CENTROID_SAMPLE,
            target_topics: TARGET_TOPICS.iter().map(|s| s.to_string()).collect(),
            seed: 42,
        }
    }
}

/// Everything besides the profiles that the curation stages consult.
pub struct CurationInputs<'a> {
    pub tweets: &'a [Post],
    pub assignments: &'a [TopicAssignment],
    pub headlines: &'a [Headline],
    pub geocoder: &'a dyn Geocoder,
    pub lexicons: &'a AccountLexicons,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageCounts {
    pub input: usize,
    pub removed_followers: usize,
    pub removed_no_location: usize,
    pub removed_not_local: usize,
    pub readmitted: usize,
    pub skipped: usize,
    pub survivors: usize,
}

#[derive(Debug, Clone)]
pub struct Curation {
    /// Sorted by user id.
    pub profiles: Vec<SourceProfile>,
    pub stages: StageCounts,
}

pub fn curate(raw: &[RawProfile], inputs: &CurationInputs, config: &CurationConfig) -> Result<Curation> {
    let mut stages = StageCounts { input: raw.len(), ..Default::default() };
    let mut by_user: BTreeMap<&str, Vec<&Post>> = BTreeMap::new();
    for t in inputs.tweets {
        by_user.entry(&t.user_id).or_default().push(t);
    }
    let no_posts: Vec<&Post> = Vec::new();
    let posts_of = |u: &str| by_user.get(u).unwrap_or(&no_posts);

    let capped = filter_by_followers(raw, config.follower_cap, |p| p.followers);
    stages.removed_followers = raw.len() - capped.len();

    let mut kept: Vec<SourceProfile> = Vec::new();
    let mut removed: Vec<SourceProfile> = Vec::new();
    for r in &capped {
        let mut p = SourceProfile::from(r);
        p.resolved_location = inputs.geocoder.resolve_place(&p.profile_location);
        if p.resolved_location.is_none() {
            log::info!("{}: profile location `{}` does not resolve", p.user_id, p.profile_location);
            stages.removed_no_location += 1;
            removed.push(p);
            continue;
        }
        let (hits, misses) = local_focus_counts(
            &p,
            posts_of(&p.user_id),
            inputs.geocoder,
            config.local_focus.sample_size,
            config.seed,
        )?;
        p.locally_focused = is_locally_focused(hits, misses, &config.local_focus);
        if p.locally_focused {
            kept.push(p);
        } else {
            stages.removed_not_local += 1;
            removed.push(p);
        }
    }

    if !removed.is_empty() && !inputs.assignments.is_empty() {
        let targets: Vec<&str> = config.target_topics.iter().map(String::as_str).collect();
        let focused = topical_focus(inputs.assignments, &targets)?;
        for p in removed {
            if focused.contains(&p.user_id) {
                stages.readmitted += 1;
                kept.push(p);
            }
        }
    }

    if kept.is_empty() {
        return Ok(Curation { profiles: Vec::new(), stages });
    }
    let tfidf = fit_shared_tfidf(inputs.headlines, inputs.tweets)?;
    let centroids = build_trbc_centroids(inputs.headlines, &tfidf, config.centroid_sample, config.seed)?;
    let mut profiles = Vec::new();
    for mut p in kept {
        let history = posts_of(&p.user_id);
        let typed = classify_account(&p, history, &tfidf, &centroids, inputs.lexicons, config.seed)
            .and_then(|c| Ok((c, informativeness(history.len(), story_memberships(history))?)));
        match typed {
            Ok((c, info)) => {
                p.category = Some(c);
                p.informativeness = info;
                profiles.push(p);
            }
            Err(e) => {
                log::warn!("{}: skipped: {e}", p.user_id);
                stages.skipped += 1;
            }
        }
    }
    profiles.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    stages.survivors = profiles.len();
    Ok(Curation { profiles, stages })
}
