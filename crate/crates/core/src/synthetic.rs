//! Seeded synthetic data: an impact-phrase feature dataset with a known
//! labelling rule, and an end-to-end corpus (sources, posts, headlines,
//! background) whose ground truth depends on scope, impact and country.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curation::{fit_shared_tfidf, build_trbc_centroids, trbc, RawProfile, SourceProfile, CENTROID_SAMPLE};
use crate::error::Result;
use crate::geo::{Gazetteer, Geocoder};
use crate::impact::{shipped_impact_model, ImpactContext, ImpactFeatureRow, ImpactLabel};
use crate::labeling::{Headline, Masker, Outlet};
use crate::model::{FeatureExtractor, LabeledExample, Provenance};
use crate::rarity::{build_background, BackgroundPost};
use crate::pipeline::EventTime;
use crate::records::{write_records, Post};
use crate::scope::ScopeExtractor;

/// Labelling rule over the eight impact features: time marks win, then
/// money marks, then the larger of the two term counts, then the largest
/// category weight.
pub fn impact_label_rule(r: &ImpactFeatureRow) -> ImpactLabel {
    if r.timestamp_symbol || r.timezone_or_period {
        return ImpactLabel::DateTime;
    }
    if r.currency_symbol || r.monetary_suffix {
        return ImpactLabel::FinancialImpact;
    }
    if r.human_terms_hits != r.address_terms_hits {
        return if r.human_terms_hits > r.address_terms_hits { ImpactLabel::HumanImpact } else { ImpactLabel::Address };
    }
    let [a, h, f] = r.tfidf_triple;
    if f > a && f > h {
        ImpactLabel::FinancialImpact
    } else if h > a {
        ImpactLabel::HumanImpact
    } else {
        ImpactLabel::Address
    }
}

/// `n` feature rows labelled by [`impact_label_rule`].
pub fn impact_dataset(n: usize, seed: u64) -> Vec<(ImpactFeatureRow, ImpactLabel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut r = ImpactFeatureRow { mixed_alnum: rng.gen_bool(0.3), ..Default::default() };
            r.tfidf_triple = [rng.gen_range(0.0..0.4), rng.gen_range(0.0..0.4), rng.gen_range(0.0..0.4)];
            match rng.gen_range(0..5) {
                0 => {
                    r.timestamp_symbol = rng.gen_bool(0.7);
                    r.timezone_or_period = !r.timestamp_symbol || rng.gen_bool(0.5);
                    r.currency_symbol = rng.gen_bool(0.1);
                    r.human_terms_hits = rng.gen_range(0..2);
                    r.address_terms_hits = rng.gen_range(0..2);
                }
                1 => {
                    r.currency_symbol = rng.gen_bool(0.7);
                    r.monetary_suffix = !r.currency_symbol || rng.gen_bool(0.4);
                    r.human_terms_hits = rng.gen_range(0..2);
                    r.address_terms_hits = rng.gen_range(0..2);
                }
                2 => {
                    r.human_terms_hits = rng.gen_range(1..4);
                    r.address_terms_hits = if rng.gen_bool(0.2) { r.human_terms_hits - 1 } else { 0 };
                }
                3 => {
                    r.address_terms_hits = rng.gen_range(1..4);
                    r.human_terms_hits = if rng.gen_bool(0.2) { r.address_terms_hits - 1 } else { 0 };
                }
                _ => {
                    let k = rng.gen_range(0..3);
                    r.tfidf_triple[k] = rng.gen_range(0.6..1.0);
                }
            }
            let label = impact_label_rule(&r);
            (r, label)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Event {
    Quake,
    Fire,
    Crash,
    Storm,
}

const CITIES: [&str; 12] = [
    "Houston", "Dallas", "Miami", "Los Angeles", "London", "Manchester", "Paris", "Tokyo", "Osaka", "Guadalajara",
    "Mumbai", "Santiago",
];
/// Countries whose events the wires pick up more readily.
const FAVOURED: [&str; 3] = ["US", "GB", "FR"];
const FILLER: [&str; 16] = [
    "update", "crews", "scene", "reported", "avoid", "area", "developing", "officials", "say", "residents",
    "traffic", "delays", "units", "responding", "alert", "more",
];

#[derive(Debug, Clone)]
pub struct Corpus {
    pub profiles: Vec<RawProfile>,
    pub posts: Vec<Post>,
    pub headlines: Vec<Headline>,
    pub background: Vec<BackgroundPost>,
    pub background_window: (i64, i64),
    /// Ground truth for every post.
    pub labels: BTreeMap<String, bool>,
}

pub const CORPUS_START: i64 = 1_498_867_200; // 2017-07-01

fn topic_headlines(rng: &mut ChaCha8Rng, at: i64) -> Vec<Headline> {
    let templates: [(&str, &[&str]); 8] = [
        (trbc::FIRE, &["fire crews battle blaze at warehouse", "alarm fire guts apartment building", "explosion and fire at plant"]),
        (trbc::QUAKE, &["earthquake of magnitude strikes", "quake shakes region, tremor felt", "seismic activity after earthquake"]),
        (trbc::CRIME, &["police arrest suspect after shooting", "stabbing suspect detained by police", "robbery suspect shot"]),
        (trbc::TERRORISM, &["militants claim bombing", "insurgents attack checkpoint", "suicide bomber targets market"]),
        (trbc::WAR, &["airstrikes hit rebel positions", "troops advance amid shelling", "military offensive on city"]),
        (trbc::FLOODS, &["flood waters rise, river bursts banks", "flash flooding swamps town", "floods force evacuations"]),
        (trbc::WEATHER, &["tornado touches down, storm damage", "severe storm and hail lash region", "hurricane winds batter coast"]),
        (trbc::DISASTER, &["crash on highway kills drivers", "vehicles pile up in highway crash", "bus accident injures passengers"]),
    ];
    let mut out = Vec::new();
    for (code, texts) in templates {
        for k in 0..6 {
            let text = texts[k % texts.len()];
            let extra = FILLER.choose(rng).unwrap();
            let mut codes = BTreeSet::from([code.to_string()]);
            if code != trbc::DISASTER {
                codes.insert(trbc::DISASTER.to_string());
            }
            out.push(Headline {
                id: format!("t-{code}-{k}"),
                text: format!("{text} {extra}"),
                outlet: Outlet::Reuters,
                published_at: at,
                topic_codes: codes,
            });
        }
    }
    out
}

/// A corpus of `n` posts from one locally focused source per city.
pub fn generate_corpus(n: usize, seed: u64) -> Corpus {
    let g = Gazetteer::shipped();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profiles: Vec<RawProfile> = CITIES
        .iter()
        .enumerate()
        .map(|(i, c)| RawProfile {
            user_id: format!("src{i:02}"),
            display_name: format!("{c} Alerts"),
            description: format!("Emergency alerts for {c}"),
            followers: 5_000 + 1_000 * i as u64,
            friends: 100,
            profile_location: c.to_string(),
        })
        .collect();

    let mut posts = Vec::with_capacity(n);
    let mut headlines = Vec::new();
    let mut labels = BTreeMap::new();
    for i in 0..n {
        let ci = rng.gen_range(0..CITIES.len());
        let city = CITIES[ci];
        let country = g.geocode(city, None).entry.map(|e| e.country_code).unwrap_or_default();
        let place = if rng.gen_bool(0.5) { format!(" in {city}") } else { String::new() };
        let event = [Event::Quake, Event::Fire, Event::Crash, Event::Storm][rng.gen_range(0..4)];
        let (core, severity) = match event {
            Event::Quake => {
                let m = rng.gen_range(30..76) as f64 / 10.0;
                (format!("Prelim M{m:.1} earthquake{place}"), (m - 4.5) / 2.0)
            }
            Event::Fire => {
                let a = rng.gen_range(1..7);
                (format!("{a}-alarm fire at a warehouse{place}"), (a as f64 - 2.0) / 2.5)
            }
            Event::Crash => {
                let v = rng.gen_range(2..11);
                (format!("{v} vehicles involved in crash on highway{place}"), (v as f64 - 3.0) / 4.0)
            }
            Event::Storm => {
                let k = rng.gen_range(0..6);
                (format!("EF{k} tornado touches down{place}"), (k as f64 - 1.5) / 2.0)
            }
        };
        let dead = if rng.gen_bool(0.4) { 0 } else { rng.gen_range(1..41) };
        let money = rng.gen_bool(0.3).then(|| rng.gen_range(1..501));
        let mut text = core.clone();
        if dead > 0 {
            text.push_str(&format!(", {dead} dead"));
        }
        if let Some(x) = money {
            text.push_str(&format!(", ${x} million in damages"));
        }
        let fillers: Vec<&str> = FILLER.choose_multiple(&mut rng, 2).copied().collect();
        text.push_str(&format!(" - {}", fillers.join(" ")));

        let impact = (1.0 + dead as f64).ln() / 41f64.ln() + money.map_or(0.0, |x| 0.5 * (1.0 + x as f64).ln() / 501f64.ln());
        let bonus = if FAVOURED.contains(&country.as_str()) { 0.7 } else { 0.0 };
        let label = severity + impact + bonus > 2.0;

        let id = format!("p{i:05}");
        let created_at = CORPUS_START + 600 * i as i64;
        if label {
            let mut h = core.clone();
            if place.is_empty() {
                h.push_str(&format!(" in {city}"));
            }
            if dead > 0 {
                h.push_str(&format!(", {dead} dead"));
            }
            headlines.push(Headline {
                id: format!("w{i:05}"),
                text: h,
                outlet: [Outlet::Reuters, Outlet::Ap, Outlet::Afp, Outlet::Cnn, Outlet::Bbc][i % 5],
                published_at: created_at + rng.gen_range(600..18_000),
                topic_codes: BTreeSet::new(),
            });
        }
        labels.insert(id.clone(), label);
        posts.push(Post::new(&id, &profiles[ci].user_id, created_at, &text));
    }
    let end = CORPUS_START + 600 * n as i64;
    headlines.extend(topic_headlines(&mut rng, end + 2 * 86_400));

    // three months of background ending at the corpus start
    let window = (CORPUS_START - 90 * 86_400, CORPUS_START);
    let codes = [trbc::QUAKE, trbc::FIRE, trbc::DISASTER, trbc::WEATHER];
    let background = (0..2_000)
        .map(|_| {
            let e = g.geocode(CITIES.choose(&mut rng).unwrap(), None).entry.expect("corpus cities resolve");
            BackgroundPost {
                created_at: rng.gen_range(window.0..window.1),
                lat: e.lat,
                lon: e.lon,
                country: e.country_code,
                topic: codes.choose(&mut rng).unwrap().to_string(),
            }
        })
        .collect();
    Corpus { profiles, posts, headlines, background, background_window: window, labels }
}

impl Corpus {
    /// Sources as they come out of curation: located and locally focused.
    pub fn sources(&self, g: &Gazetteer) -> BTreeMap<String, SourceProfile> {
        self.profiles
            .iter()
            .map(|r| {
                let mut s = SourceProfile::from(r);
                s.resolved_location = g.resolve_place(&s.profile_location);
                s.locally_focused = true;
                (s.user_id.clone(), s)
            })
            .collect()
    }

    pub fn feature_extractor(&self) -> Result<FeatureExtractor> {
        let gazetteer = Gazetteer::shipped();
        let tfidf = fit_shared_tfidf(&self.headlines, &self.posts)?;
        let centroids = build_trbc_centroids(&self.headlines, &tfidf, CENTROID_SAMPLE, 0)?;
        let impact = ImpactContext::shipped();
        let impact_model = shipped_impact_model(&impact);
        Ok(FeatureExtractor {
            gazetteer,
            scope: ScopeExtractor::shipped(),
            impact,
            impact_model,
            masker: Masker::shipped(),
            tfidf,
            centroids,
            background: Some(build_background(&self.background, self.background_window)?),
        })
    }

    /// Writes the corpus as pipeline inputs plus a `config.toml` pointing at
    /// them. Feed and wire event times pair each positive post with its
    /// headline.
    pub fn write_files(&self, dir: &Path, seed: u64) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_records(&dir.join("profiles.jsonl"), &self.profiles)?;
        write_records(&dir.join("tweets.jsonl"), &self.posts)?;
        write_records(&dir.join("headlines.jsonl"), &self.headlines)?;
        write_records(&dir.join("background.jsonl"), &self.background)?;
        let wire: Vec<EventTime> = self
            .headlines
            .iter()
            .filter_map(|h| Some(EventTime { event_id: h.id.strip_prefix('w')?.to_string(), at: h.published_at }))
            .collect();
        let events: BTreeSet<&str> = wire.iter().map(|w| w.event_id.as_str()).collect();
        let feed: Vec<EventTime> = self
            .posts
            .iter()
            .filter_map(|p| {
                let id = p.id.strip_prefix('p').filter(|id| events.contains(id))?;
                Some(EventTime { event_id: id.to_string(), at: p.created_at })
            })
            .collect();
        write_records(&dir.join("feed.jsonl"), &feed)?;
        write_records(&dir.join("wire.jsonl"), &wire)?;
        let (a, b) = self.background_window;
        let config = format!(
            "seed = {seed}\nbackground_window = [{a}, {b}]\n\n[paths]\nprofiles = \"profiles.jsonl\"\ntweets = \"tweets.jsonl\"\n\
             headlines = \"headlines.jsonl\"\nbackground = \"background.jsonl\"\nfeed = \"feed.jsonl\"\nwire = \"wire.jsonl\"\n"
        );
        std::fs::write(dir.join("config.toml"), config)?;
        Ok(())
    }

    /// Every post featurized and labelled with its ground truth.
    pub fn examples(&self) -> Result<Vec<LabeledExample>> {
        let fx = self.feature_extractor()?;
        let sources = self.sources(&fx.gazetteer);
        Ok(self
            .posts
            .iter()
            .map(|p| LabeledExample {
                post_id: p.id.clone(),
                features: fx.assemble(p, &sources[&p.user_id]),
                label: self.labels[&p.id],
                label_provenance: Provenance::Direct,
            })
            .collect())
    }
}
