//! Distant labelling of posts against wire headlines.
//!
//! A post is *matched* (globally reported) when a headline published within
//! the following 24 hours is similar enough to it. Posts that only resemble
//! earlier headlines are *tardy* and stay negative. A single link pass then
//! lifts unmatched posts that closely resemble a later matched post from
//! the same day.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impact::{HUMAN_IMPACT_TERMS, SITE_TERMS};
use crate::records::Post;
use crate::scope::ScopeExtractor;
use crate::taxonomy::Taxonomy;
use crate::textvec::{cosine, tokenize_spans, SparseVector, TfidfModel};

pub const WINDOW_SECS: i64 = 86_400;
pub const MATCH_THRESHOLD: f64 = 0.5;
pub const LINK_THRESHOLD: f64 = 0.5;
pub const SAME_USER_LINK_THRESHOLD: f64 = 0.3;
pub const UNDERSAMPLE_RATIO: usize = 10;

pub const IMPACT_HUMAN_TERM: &str = "impact_human_term";
pub const IMPACT_SITE: &str = "impact_site";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outlet {
    Reuters,
    Ap,
    Afp,
    Cnn,
    Bbc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Headline {
    pub id: String,
    pub text: String,
    pub outlet: Outlet,
    pub published_at: i64,
    #[serde(default)]
    pub topic_codes: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchStatus {
    Matched,
    Unmatched,
    Tardy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub post_id: String,
    pub status: MatchStatus,
    pub best_headline: Option<String>,
    pub best_score: f64,
    #[serde(default)]
    pub via_link: bool,
    /// For link-propagated matches: the matched post and its similarity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linked_post: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_score: Option<f64>,
}

impl MatchResult {
    pub fn is_matched(&self) -> bool {
        self.status == MatchStatus::Matched
    }
}

/// A post record with its labelling outcome, as written by the label step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPost {
    #[serde(flatten)]
    pub post: Post,
    pub status: MatchStatus,
    pub best_headline: Option<String>,
    pub best_score: f64,
    #[serde(default)]
    pub via_link: bool,
}

/// Replaces scope and impact spans with their feature names before
/// vectorizing, so that "M5.8" and "M6.1" look alike to the matcher.
#[derive(Debug, Clone)]
pub struct Masker {
    pub scope: Option<ScopeExtractor>,
    pub taxonomies: Vec<(String, Taxonomy)>,
}

impl Masker {
    pub fn new(scope: Option<ScopeExtractor>, taxonomies: Vec<(String, Taxonomy)>) -> Self {
        Masker { scope, taxonomies }
    }

    pub fn shipped() -> Self {
        let t = |name: &str, content| (name.to_owned(), Taxonomy::parse(name, content).expect("shipped taxonomy"));
        Masker::new(
            Some(ScopeExtractor::shipped()),
            vec![t(IMPACT_HUMAN_TERM, HUMAN_IMPACT_TERMS), t(IMPACT_SITE, SITE_TERMS)],
        )
    }

    /// Matched spans snapped to whole tokens, longest first then leftmost,
    /// without overlaps, in text order.
    pub fn spans(&self, text: &str) -> Vec<(usize, usize, String)> {
        let tokens = tokenize_spans(text);
        let mut raw: Vec<(usize, usize, String)> = Vec::new();
        if let Some(scope) = &self.scope {
            raw.extend(scope.spans(text).into_iter().map(|(s, e, n)| (s, e, n.to_owned())));
        }
        for (name, tax) in &self.taxonomies {
            raw.extend(tax.find_spans(&tokens).into_iter().map(|(s, e, _)| (s, e, name.clone())));
        }
        // token index ranges
        let mut ranges: Vec<(usize, usize, String)> = raw
            .into_iter()
            .filter_map(|(s, e, name)| {
                let first = tokens.iter().position(|t| t.end > s && t.start < e)?;
                let last = tokens.iter().rposition(|t| t.end > s && t.start < e)?;
                Some((first, last + 1, name))
            })
            .collect();
        ranges.sort_by(|a, b| (b.1 - b.0).cmp(&(a.1 - a.0)).then(a.0.cmp(&b.0)).then(a.2.cmp(&b.2)));
        let mut taken = vec![false; tokens.len()];
        let mut chosen = Vec::new();
        for (s, e, name) in ranges {
            if taken[s..e].iter().any(|&t| t) {
                continue;
            }
            taken[s..e].iter_mut().for_each(|t| *t = true);
            chosen.push((tokens[s].start, tokens[e - 1].end, name));
        }
        chosen.sort();
        chosen
    }

    pub fn mask(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        let mut pos = 0;
        for (s, e, name) in self.spans(text) {
            out.push_str(&text[pos..s]);
            let glued_left = out.ends_with(|c: char| c.is_alphanumeric() || c == '_');
            let glued_right = text[e..].starts_with(|c: char| c.is_alphanumeric() || c == '_');
            if glued_left {
                out.push(' ');
            }
            out.push_str(&name);
            if glued_right {
                out.push(' ');
            }
            pos = e;
        }
        out.push_str(&text[pos..]);
        out
    }
}

pub fn mask_taxonomy_tokens(text: &str, masker: &Masker) -> String {
    masker.mask(text)
}

fn best_in<'a>(range: &'a [(i64, String, SparseVector)], v: &SparseVector) -> Option<(&'a str, f64)> {
    let mut best: Option<(&str, f64)> = None;
    for (_, id, hv) in range {
        let s = cosine(v, hv);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((id, s));
        }
    }
    best
}

/// Headlines masked, vectorized and sorted by publication time.
#[derive(Debug, Clone)]
pub struct HeadlineIndex {
    items: Vec<(i64, String, SparseVector)>,
}

impl HeadlineIndex {
    pub fn build(headlines: &[Headline], tfidf: &TfidfModel, masker: &Masker) -> Self {
        let mut items: Vec<(i64, String, SparseVector)> = headlines
            .iter()
            .map(|h| (h.published_at, h.id.clone(), tfidf.vectorize_text(&masker.mask(&h.text))))
            .collect();
        items.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        HeadlineIndex { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Labels one post given its (masked) vector. Headlines published in
    /// `(t, t + 24h]` can match; headlines at or before `t` can only make the
    /// post tardy.
    pub fn match_vector(&self, post_id: &str, created_at: i64, v: &SparseVector, threshold: f64) -> MatchResult {
        let split = self.items.partition_point(|h| h.0 <= created_at);
        let end = self.items.partition_point(|h| h.0 <= created_at + WINDOW_SECS);
        let best = |range| best_in(range, v);
        let after = best(&self.items[split..end]);
        let before = best(&self.items[..split]);
        let score = |b: Option<(&str, f64)>| b.map_or(0.0, |(_, s)| s);
        let (status, chosen) = if score(after) >= threshold {
            (MatchStatus::Matched, after)
        } else if score(before) >= threshold {
            (MatchStatus::Tardy, before)
        } else if score(before) > score(after) {
            (MatchStatus::Unmatched, before)
        } else {
            (MatchStatus::Unmatched, after)
        };
        MatchResult {
            post_id: post_id.to_owned(),
            status,
            best_headline: chosen.map(|(id, _)| id.to_owned()),
            best_score: score(chosen),
            via_link: false,
            linked_post: None,
            link_score: None,
        }
    }
}

pub fn post_vector(post: &Post, tfidf: &TfidfModel, masker: &Masker) -> SparseVector {
    tfidf.vectorize_text(&masker.mask(&post.text))
}

pub fn match_to_headlines(
    post: &Post,
    headlines: &HeadlineIndex,
    tfidf: &TfidfModel,
    masker: &Masker,
    threshold: f64,
) -> MatchResult {
    headlines.match_vector(&post.id, post.created_at, &post_vector(post, tfidf, masker), threshold)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    pub link_threshold: f64,
    pub same_user_threshold: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig { link_threshold: LINK_THRESHOLD, same_user_threshold: SAME_USER_LINK_THRESHOLD }
    }
}

pub fn utc_day(t: i64) -> i64 {
    t.div_euclid(86_400)
}

/// One pass of message linking over a frozen snapshot of `results`.
/// `results`, `posts` and `vectors` are parallel. Only unmatched posts can
/// gain a label (tardy posts stay as they are); the link target must be a
/// first-pass match posted strictly later on the same UTC day.
pub fn propagate_links(
    results: &[MatchResult],
    posts: &[Post],
    vectors: &[SparseVector],
    config: &LinkConfig,
) -> Vec<MatchResult> {
    assert_eq!(results.len(), posts.len(), "results and posts must be parallel");
    assert_eq!(results.len(), vectors.len(), "results and vectors must be parallel");
    let mut by_day: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, r) in results.iter().enumerate() {
        if r.is_matched() {
            by_day.entry(utc_day(posts[i].created_at)).or_default().push(i);
        }
    }
    let mut out = results.to_vec();
    for (i, r) in results.iter().enumerate() {
        if r.status != MatchStatus::Unmatched {
            continue;
        }
        let post = &posts[i];
        let mut best: Option<(usize, f64)> = None;
        for &m in by_day.get(&utc_day(post.created_at)).into_iter().flatten() {
            if posts[m].created_at <= post.created_at {
                continue;
            }
            let threshold = if posts[m].user_id == post.user_id {
                config.same_user_threshold
            } else {
                config.link_threshold
            };
            let s = cosine(&vectors[i], &vectors[m]);
            if s >= threshold && best.is_none_or(|(_, b)| s > b) {
                best = Some((m, s));
            }
        }
        if let Some((m, s)) = best {
            let o = &mut out[i];
            o.status = MatchStatus::Matched;
            o.via_link = true;
            o.linked_post = Some(posts[m].id.clone());
            o.link_score = Some(s);
        }
    }
    out
}

/// Keeps every positive and at most `ratio` negatives per positive, drawn
/// without replacement. Input order is preserved.
pub fn undersample_by<T: Clone>(items: &[T], is_positive: impl Fn(&T) -> bool, ratio: usize, seed: u64) -> Result<Vec<T>> {
    let positives = items.iter().filter(|x| is_positive(x)).count();
    if positives == 0 {
        return Err(Error::DegenerateLabels("no matched examples to undersample against".into()));
    }
    let negatives: Vec<usize> = (0..items.len()).filter(|&i| !is_positive(&items[i])).collect();
    let keep = negatives.len().min(positives.saturating_mul(ratio));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = vec![false; items.len()];
    for j in sample(&mut rng, negatives.len(), keep) {
        kept[negatives[j]] = true;
    }
    Ok(items
        .iter()
        .enumerate()
        .filter(|(i, x)| kept[*i] || is_positive(x))
        .map(|(_, x)| x.clone())
        .collect())
}

pub fn undersample(examples: &[crate::model::LabeledExample], ratio: usize, seed: u64) -> Result<Vec<crate::model::LabeledExample>> {
    undersample_by(examples, |e| e.label, ratio, seed)
}
