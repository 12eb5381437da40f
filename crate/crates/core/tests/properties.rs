use std::collections::BTreeSet;

use proptest::prelude::*;

use newsvalue::curation::{curate, is_locally_focused, local_focus_ratio, AccountLexicons, CurationConfig, CurationInputs, LocalFocusConfig, RawProfile, SourceProfile, TopicAssignment};
use newsvalue::geo::{Gazetteer, GazetteerEntry, Geocoder};
use newsvalue::labeling::{propagate_links, undersample_by, Headline, LinkConfig, Masker, MatchResult, MatchStatus};
use newsvalue::numeric::{extract_numeric_phrases, parse_word_number};
use newsvalue::rarity::{BackgroundIndex, BackgroundPost, LocationId};
use newsvalue::records::{read_records, Post};
use newsvalue::scope::{
    extract_alarm_level, extract_fire_cause, extract_quake_magnitude, extract_scale_adjectives, extract_scope,
    extract_vehicle_count, extract_weather_scale, extract_wildfire_size, HailTable, ScopeExtractor,
};
use newsvalue::textvec::{cosine, fit_tfidf, nearest_centroid, tokenize, tokenize_spans, CentroidSet, SparseVector, TokenList};

fn sparse() -> impl Strategy<Value = SparseVector> {
    prop::collection::btree_map("[a-f]", -5.0f64..5.0, 0..6).prop_map(SparseVector::from_entries)
}

proptest! {
    #[test]
    fn cosine_is_symmetric(a in sparse(), b in sparse()) {
        prop_assert_eq!(cosine(&a, &b), cosine(&b, &a));
    }

    #[test]
    fn cosine_is_scale_invariant(a in sparse(), s in 0.01f64..100.0) {
        prop_assume!(a.norm() > 1e-6);
        prop_assert!((cosine(&a, &a.scaled(s)) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn nearest_centroid_ignores_query_scale(q in sparse(), cs in prop::collection::vec(sparse(), 1..5), s in 0.01f64..100.0) {
        let mut set = CentroidSet::new();
        for (i, c) in cs.into_iter().enumerate() {
            if c.norm() > 1e-6 {
                set.insert(format!("c{i}"), c).unwrap();
            }
        }
        prop_assume!(!set.is_empty());
        let a = nearest_centroid(&q, &set).unwrap();
        let b = nearest_centroid(&q.scaled(s), &set).unwrap();
        prop_assert_eq!(a.0, b.0);
    }

    #[test]
    fn tfidf_is_deterministic(docs in prop::collection::vec(prop::collection::vec("[a-e]{1,2}", 0..8), 1..6)) {
        let named: Vec<(String, TokenList)> = docs.iter().enumerate().map(|(i, d)| (i.to_string(), TokenList(d.clone()))).collect();
        let a = fit_tfidf(&named).unwrap();
        let b = fit_tfidf(&named).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
        for d in &docs {
            let (va, vb) = (a.vectorize(&TokenList(d.clone())), b.vectorize(&TokenList(d.clone())));
            prop_assert_eq!(format!("{va:?}"), format!("{vb:?}"));
        }
    }
}

// ------------------------------------------------------------- scope

const SCOPE_WORDS: &[&str] = &[
    "deadly", "massive", "3-alarm", "2nd", "alarm", "fire", "gas", "leak", "M5.8", "magnitude", "6.1", "intensity", "VII",
    "1,200", "acres", "2", "square", "miles", "sq", "km", "mile", "radius", "car", "crash", "trucks", "&", "one", "vehicle",
    "EF3", "tornado", "quarter", "sized", "hail", "inch", "force", "10", "winds", "in", "Houston", "reported", "the",
];

fn scope_text() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(SCOPE_WORDS), 0..14).prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn scope_composes_from_extractors(text in scope_text()) {
        let ex = ScopeExtractor::shipped();
        let hail = HailTable::shipped();
        let tokens = tokenize(&text);
        let f = extract_scope(&text);
        let w = extract_weather_scale(&text, &hail);
        prop_assert_eq!(&f.scale_adjectives, &extract_scale_adjectives(&tokens, &ex.adjectives));
        prop_assert_eq!(f.alarm_level, extract_alarm_level(&text));
        prop_assert_eq!(&f.fire_cause, &extract_fire_cause(&tokens, &ex.causes));
        prop_assert_eq!(f.quake_magnitude, extract_quake_magnitude(&text));
        prop_assert_eq!(f.wildfire_size_acres, extract_wildfire_size(&text));
        prop_assert_eq!(f.vehicle_count, extract_vehicle_count(&text));
        prop_assert_eq!(f.weather_scale, w.scale);
        prop_assert_eq!(f.hail_size_inches, w.hail_inches);
        prop_assert_eq!(&f, &extract_scope(&text));
    }

    #[test]
    fn fuzzed_numerals_stay_in_bounds(n in 0u64..1_000_000, d in 0u32..100) {
        let f = extract_scope(&format!("{n}-alarm fire, M{n}.{d} quake, EF{n} tornado, force {n} winds, {n} cars, {n}.{d} acres, {n} inch hail"));
        prop_assert!(f.alarm_level.is_none_or(|a| (1..=20).contains(&a)));
        prop_assert!(f.quake_magnitude.is_none_or(|(_, v)| (0.0..=12.0).contains(&v)));
        prop_assert!(f.weather_scale.is_none_or(|(_, l)| l <= 12));
        prop_assert!(f.vehicle_count.is_none_or(|v| v >= 1));
        prop_assert!(f.wildfire_size_acres.is_none_or(|a| a > 0.0));
        prop_assert!(f.hail_size_inches.is_none_or(|h| h > 0.0));
    }

    #[test]
    fn numeric_spans_index_the_text(text in "[a-z0-9 ,.$:-]{0,60}") {
        let phrases = extract_numeric_phrases(&text);
        for w in phrases.windows(2) {
            prop_assert!(w[0].span.1 <= w[1].span.0);
        }
        for p in &phrases {
            prop_assert_eq!(&text[p.span.0..p.span.1], p.raw.as_str());
        }
    }
}

// -------------------------------------------------------- word numerals

fn to_words(n: u64) -> String {
    const ONES: [&str; 20] = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve", "thirteen",
        "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen",
    ];
    const TENS: [&str; 10] = ["", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"];
    fn below_hundred(n: u64) -> String {
        match n {
            0..=19 => ONES[n as usize].to_string(),
            _ if n.is_multiple_of(10) => TENS[(n / 10) as usize].to_string(),
            _ => format!("{}-{}", TENS[(n / 10) as usize], ONES[(n % 10) as usize]),
        }
    }
    let mut parts = Vec::new();
    if n >= 1000 {
        parts.push(format!("{} thousand", below_hundred(n / 1000)));
    }
    if n % 1000 >= 100 {
        parts.push(format!("{} hundred", ONES[((n % 1000) / 100) as usize]));
    }
    if !n.is_multiple_of(100) || n == 0 {
        parts.push(below_hundred(n % 100));
    }
    parts.join(" ")
}

#[test]
fn word_numerals_match_table() {
    for n in 0..=9999u64 {
        let words = to_words(n);
        let split: Vec<&str> = words.split(' ').collect();
        assert_eq!(parse_word_number(&split), Some(n), "{words}");
    }
    for n in [0u64, 7, 21, 105, 999, 4206, 9999] {
        let text = format!("{} people", to_words(n));
        let p = extract_numeric_phrases(&text);
        assert_eq!(p.len(), 1, "{text}");
        assert_eq!(p[0].value, Some(n as f64), "{text}");
    }
}

// ------------------------------------------------------------- masking

const MASK_WORDS: &[&str] = &[
    "M5.8", "earthquake", "deadly", "massive", "crash", "3-alarm", "fire", "killed", "injured", "apartment", "bridge",
    "EF2", "tornado", "quarter", "sized", "hail", "near", "downtown", "12", "people", "$2", "million", "2-car", "the",
];

proptest! {
    #[test]
    fn masking_keeps_other_tokens(words in prop::collection::vec(prop::sample::select(MASK_WORDS), 0..16)) {
        let text = words.join(" ");
        let m = Masker::shipped();
        let spans = m.spans(&text);
        let labels: BTreeSet<String> = spans.iter().map(|s| s.2.clone()).collect();
        let outside: Vec<String> = tokenize_spans(&text)
            .into_iter()
            .filter(|t| !spans.iter().any(|(a, b, _)| t.start < *b && *a < t.end))
            .map(|t| t.text)
            .collect();
        let masked = tokenize(&m.mask(&text));
        let kept: Vec<String> = masked.iter().filter(|t| !labels.contains(*t)).map(str::to_owned).collect();
        prop_assert_eq!(kept, outside);
        prop_assert_eq!(masked.len() - masked.iter().filter(|t| !labels.contains(*t)).count(), spans.len());
    }
}

// -------------------------------------------------------------- rarity

fn background_post() -> impl Strategy<Value = BackgroundPost> {
    (0i64..100, 0usize..4, prop::sample::select(vec!["US", "JP"]), prop::sample::select(vec!["fire", "quake"])).prop_map(|(t, l, c, s)| {
        BackgroundPost { created_at: t, lat: 10.0 + l as f64, lon: 20.0, country: c.into(), topic: s.into() }
    })
}

proptest! {
    #[test]
    fn rarity_terms_are_bounded_and_monotone(posts in prop::collection::vec(background_post(), 0..60), extra in background_post()) {
        let mut idx = BackgroundIndex::new((10, 90)).unwrap();
        for p in &posts {
            idx.add(p);
        }
        let loc = extra.location();
        let before = idx.counts.get(&(loc, extra.topic.clone())).copied().unwrap_or(0);
        let r = idx.rarity(loc, &extra.country, &extra.topic);
        prop_assert!((0.0..=1.0).contains(&r.local_term) && (0.0..=1.0).contains(&r.country_term) && (0.0..=1.0).contains(&r.lambda));
        prop_assert!((0.0..=2.0).contains(&r.value));
        idx.add(&extra);
        let after = idx.counts.get(&(loc, extra.topic.clone())).copied().unwrap_or(0);
        prop_assert!(after >= before);
        prop_assert_eq!(after - before, u64::from((10..90).contains(&extra.created_at)));
        let back = BackgroundIndex::from_tsv(&idx.to_tsv()).unwrap();
        prop_assert_eq!(back.rarity(LocationId::from_coords(extra.lat, extra.lon), &extra.country, &extra.topic), idx.rarity(loc, &extra.country, &extra.topic));
    }
}

// ------------------------------------------------------------ labeling

fn status() -> impl Strategy<Value = MatchStatus> {
    prop::sample::select(vec![MatchStatus::Matched, MatchStatus::Unmatched, MatchStatus::Tardy])
}

proptest! {
    #[test]
    fn propagation_only_grows(rows in prop::collection::vec((status(), 0i64..200_000, 0u8..3, prop::collection::vec("[a-d]", 1..4)), 1..40)) {
        let posts: Vec<Post> = rows.iter().enumerate().map(|(i, (_, t, u, w))| Post::new(&format!("p{i}"), &format!("u{u}"), *t, &w.join(" "))).collect();
        let docs: Vec<(String, TokenList)> = posts.iter().map(|p| (p.id.clone(), tokenize(&p.text))).collect();
        let tfidf = fit_tfidf(&docs).unwrap();
        let vectors: Vec<_> = posts.iter().map(|p| tfidf.vectorize_text(&p.text)).collect();
        let first: Vec<MatchResult> = rows.iter().enumerate().map(|(i, (s, ..))| MatchResult {
            post_id: format!("p{i}"), status: *s, best_headline: None, best_score: 0.0, via_link: false, linked_post: None, link_score: None,
        }).collect();
        let out = propagate_links(&first, &posts, &vectors, &LinkConfig::default());
        for (a, b) in first.iter().zip(&out) {
            if a.status == MatchStatus::Matched {
                prop_assert_eq!(b.status, MatchStatus::Matched);
                prop_assert!(!b.via_link);
            }
            if a.status == MatchStatus::Tardy {
                prop_assert_eq!(b.status, MatchStatus::Tardy);
            }
            if b.via_link {
                let target = b.linked_post.as_ref().unwrap();
                let j = posts.iter().position(|p| &p.id == target).unwrap();
                prop_assert_eq!(first[j].status, MatchStatus::Matched);
            }
        }
    }

    #[test]
    fn undersampling_keeps_positives(labels in prop::collection::vec(any::<bool>(), 1..200), ratio in 1usize..12, seed in any::<u64>()) {
        prop_assume!(labels.iter().any(|l| *l));
        let items: Vec<(usize, bool)> = labels.iter().copied().enumerate().collect();
        let kept = undersample_by(&items, |x| x.1, ratio, seed).unwrap();
        let pos = labels.iter().filter(|l| **l).count();
        let neg = labels.len() - pos;
        prop_assert_eq!(kept.iter().filter(|x| x.1).count(), pos);
        prop_assert_eq!(kept.iter().filter(|x| !x.1).count(), neg.min(pos * ratio));
        prop_assert!(kept.windows(2).all(|w| w[0].0 < w[1].0));
        prop_assert_eq!(kept, undersample_by(&items, |x| x.1, ratio, seed).unwrap());
    }
}

// ----------------------------------------------------------------- geo

/// Whether `e` lies inside `anchor` by walking admin parents by name
/// within the same country.
fn inside(g: &Gazetteer, e: &GazetteerEntry, anchor: &GazetteerEntry) -> bool {
    if anchor.admin_parent.is_none() {
        return e.country_code == anchor.country_code;
    }
    let mut cur = e.clone();
    for _ in 0..16 {
        if cur.name == anchor.name && cur.country_code == anchor.country_code && cur.admin_parent == anchor.admin_parent {
            return true;
        }
        let Some(parent) = cur.admin_parent.clone() else { return false };
        match g.entries().iter().find(|x| x.name == parent && x.country_code == cur.country_code) {
            Some(p) => cur = p.clone(),
            None => return false,
        }
    }
    false
}

#[test]
fn anchoring_only_restricts() {
    let g = Gazetteer::shipped();
    let names: Vec<String> = g.entries().iter().map(|e| e.name.clone()).collect();
    let extra = ["US", "JP", "FR", "Houston, TX", "Paris, Texas", "Atlantis"].map(String::from);
    for q in &names {
        let free = g.geocode(q, None);
        for a in names.iter().chain(&extra) {
            let r = g.geocode(q, Some(a));
            if !r.hit {
                continue;
            }
            assert!(free.hit, "{q} within {a}");
            let e = r.entry.unwrap();
            if let Some(anchor) = g.geocode(a, None).entry.filter(|_| !a.contains(',')) {
                assert!(inside(&g, &e, &anchor), "{q} within {a} resolved outside");
            }
        }
    }
    // exhaustive: every entry is found when anchored at each of its ancestors
    for e in g.entries() {
        let mut parent = e.admin_parent.clone();
        while let Some(p) = parent {
            let r = g.geocode(&e.name, Some(&p));
            assert!(r.hit, "{} within {p}", e.name);
            parent = g.entries().iter().find(|x| x.name == p && x.country_code == e.country_code).and_then(|x| x.admin_parent.clone());
        }
    }
}

// ------------------------------------------------------------ curation

fn fixture<T: serde::de::DeserializeOwned>(name: &str) -> Vec<T> {
    read_records(&std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/curation").join(name)).unwrap().items
}

proptest! {
    #[test]
    fn local_focus_ratio_is_bounded(places in prop::collection::vec(prop::sample::select(vec!["Alvin", "Montrose", "Houston", "Dallas", "Tokyo", "Paris", "nowhere"]), 0..20)) {
        let g = Gazetteer::shipped();
        let profile = SourceProfile::new("u", "Houston, TX");
        let posts: Vec<Post> = places.iter().enumerate().map(|(i, p)| Post::new(&format!("p{i}"), "u", i as i64, &format!("Fire in {p}"))).collect();
        let refs: Vec<&Post> = posts.iter().collect();
        let r = local_focus_ratio(&profile, &refs, &g, 50, 1).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        let hits = places.iter().filter(|p| ["Alvin", "Montrose", "Houston"].contains(p)).count();
        let located = places.iter().filter(|p| **p != "nowhere").count();
        let want = if located == 0 { 0.0 } else { hits as f64 / located as f64 };
        prop_assert!((r - want).abs() < 1e-12);
        prop_assert_eq!(is_locally_focused(hits, located - hits, &LocalFocusConfig::default()), hits > 0 && 2 * hits >= located);
    }
}

#[test]
fn curate_is_idempotent_and_seeded() {
    let profiles: Vec<RawProfile> = fixture("profiles.jsonl");
    let tweets: Vec<Post> = fixture("tweets.jsonl");
    let assignments: Vec<TopicAssignment> = fixture("assignments.jsonl");
    let headlines: Vec<Headline> = fixture("headlines.jsonl");
    let g = Gazetteer::shipped();
    let lexicons = AccountLexicons::shipped();
    let inputs = CurationInputs { tweets: &tweets, assignments: &assignments, headlines: &headlines, geocoder: &g as &dyn Geocoder, lexicons: &lexicons };
    let config = CurationConfig::default();
    let once = curate(&profiles, &inputs, &config).unwrap();
    let again: Vec<RawProfile> = once.profiles.iter().map(RawProfile::from).collect();
    let twice = curate(&again, &inputs, &config).unwrap();
    let ids = |c: &[SourceProfile]| c.iter().map(|p| p.user_id.clone()).collect::<Vec<_>>();
    assert_eq!(ids(&once.profiles), ids(&twice.profiles));
    assert!(once.profiles.iter().all(|p| p.category.is_some()));
    assert_eq!(once.profiles, curate(&profiles, &inputs, &config).unwrap().profiles);
    let removed: BTreeSet<&str> = ["p07", "p08", "p10"].into();
    let survivors: BTreeSet<&str> = once.profiles.iter().map(|p| p.user_id.as_str()).collect();
    assert!(survivors.iter().filter(|u| !once.profiles.iter().find(|p| &p.user_id == *u).unwrap().locally_focused).all(|u| removed.contains(u)));
}
