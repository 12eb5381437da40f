//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use newsvalue::curation::{curate, informativeness, AccountLexicons, Category, CurationConfig, CurationInputs, RawProfile, TopicAssignment};
use newsvalue::geo::{Gazetteer, Geocoder};
use newsvalue::impact::{class_metrics, classify_row, impact_features, macro_f1, train_impact_classifier, ImpactContext};
use newsvalue::labeling::{propagate_links, utc_day, Headline, HeadlineIndex, LinkConfig, Masker, MatchResult, MatchStatus, Outlet};
use newsvalue::linear::{train_pegasos, FeatureMap, SgdConfig, SvmConfig};
use newsvalue::model::{ablate, cross_validate, FeatureGroup, LabeledExample, Provenance};
use newsvalue::numeric::extract_numeric_phrases;
use newsvalue::pipeline::{timeliness, EventTime};
use newsvalue::rarity::{build_background, BackgroundPost, LocationId};
use newsvalue::records::{read_records, Post};
use newsvalue::scope::{
    extract_alarm_level, extract_fire_cause, extract_quake_magnitude, extract_scale_adjectives, extract_scope,
    extract_vehicle_count, extract_weather_scale, extract_wildfire_size, HailTable, QuakeScale, ScopeExtractor, WeatherScale,
};
use newsvalue::synthetic::{generate_corpus, impact_dataset};
use newsvalue::textvec::{cosine, fit_tfidf, tokenize, tokenize_spans, TokenList};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(name: &str, budget: Duration, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let elapsed = start.elapsed();
    let outcome = match outcome {
        Ok(detail) if elapsed > budget => Err(format!("{detail}; over time budget")),
        o => o,
    };
    let (tag, detail) = match &outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("{tag}  {name:<28} {:>8.3} s / {:>3} s  {detail}", elapsed.as_secs_f64(), budget.as_secs());
    outcome.is_ok()
}

// ------------------------------------------------------------- parsers

fn parser_suite() -> Check {
    let ex = ScopeExtractor::shipped();
    let hail = HailTable::shipped();
    let mut n = 0;
    let mut fails = Vec::new();
    let mut check = |label: &str, ok: bool| {
        n += 1;
        if !ok {
            fails.push(label.to_string());
        }
    };

    let adj = |t: &str| extract_scale_adjectives(&tokenize(t), &ex.adjectives);
    check("adjective deadly", adj("deadly shooting near Alvin") == ["deadly"]);
    check("adjective none", adj("small kitchen issue").is_empty());
    check("adjective pair", adj("massive deadly blaze") == ["massive", "deadly"]);

    for (t, want) in [
        ("3-alarm fire reported", Some(3)),
        ("requesting a 2nd alarm", Some(2)),
        ("fire alarm went off", None),
        ("now a third alarm, was 2-alarm", Some(3)),
        ("two-alarm blaze", Some(2)),
    ] {
        check(t, extract_alarm_level(t) == want);
    }

    let cause = |t: &str| extract_fire_cause(&tokenize(t), &ex.causes);
    check("cause gas leak", cause("explosion caused by gas leak").as_deref() == Some("gas leak"));
    check("cause none", cause("structure fire downtown").is_none());
    check("cause trash fire", cause("trash fire behind mall").as_deref() == Some("trash fire"));
    check("cause lightning", cause("barn fire sparked by lightning").as_deref() == Some("lightning"));

    for (t, want) in [
        ("Prelim M5.8 earthquake off the coast of Jalisco", Some((QuakeScale::Richter, 5.8))),
        ("Prelim M5.8", Some((QuakeScale::Richter, 5.8))),
        ("no quake here", None),
        ("intensity VII reported, later M6.1", Some((QuakeScale::Richter, 6.1))),
        ("magnitude 5.8 quake", Some((QuakeScale::Richter, 5.8))),
        ("a 5.8-magnitude quake", Some((QuakeScale::Richter, 5.8))),
        ("intensity VII reported", Some((QuakeScale::Mercalli, 7.0))),
        ("shindo 6+ in Osaka", Some((QuakeScale::Shindo, 6.5))),
        ("JMA 6", Some((QuakeScale::Shindo, 6.0))),
        ("M5.8.3 quake", None),
    ] {
        check(t, extract_quake_magnitude(t) == want);
    }

    for (t, want) in [
        ("fire has burned 1,200 acres", Some(1200.0)),
        ("2 square miles scorched", Some(1280.0)),
        ("windy day", None),
        ("3 sq mi burned", Some(1920.0)),
    ] {
        check(t, extract_wildfire_size(t) == want);
    }
    let km = extract_wildfire_size("10 square kilometers").unwrap_or(0.0);
    check("sq km", (km - 2471.05).abs() < 1e-9);
    let r = extract_wildfire_size("1 mile radius").unwrap_or(0.0);
    check("radius", (r - std::f64::consts::PI * 640.0).abs() < 1e-9);

    for (t, want) in [
        ("2-car crash on I-40", Some(2)),
        ("2 commercial trucks & one vehicle", Some(3)),
        ("car crash reported", None),
        ("5-vehicle pileup", Some(5)),
    ] {
        check(t, extract_vehicle_count(t) == want);
    }

    let w = |t: &str| extract_weather_scale(t, &hail);
    check("quarter sized hail", w("quarter sized hail").hail_inches == Some(1.0));
    check("pea hail", w("pea hail").hail_inches == Some(0.25));
    check("golf ball hail", w("golf ball hail").hail_inches == Some(1.75));
    check("baseball hail", w("baseball hail").hail_inches == Some(2.75));
    check("2 inch hail", w("2 inch hail").hail_inches == Some(2.0));
    check("EF3", w("EF3 tornado confirmed").scale == Some((WeatherScale::EnhancedFujita, 3)));
    check("EF-3", w("EF-3 tornado").scale == Some((WeatherScale::EnhancedFujita, 3)));
    check("sunny", w("sunny skies").scale.is_none() && w("sunny skies").hail_inches.is_none());
    check("TORRO", w("TORRO T8 tornado").scale == Some((WeatherScale::Torro, 8)));
    check("Beaufort", w("Beaufort 10 gusts").scale == Some((WeatherScale::Beaufort, 10)));
    check("force 10", w("force 10 winds").scale == Some((WeatherScale::Beaufort, 10)));

    check("scope empty", extract_scope("") == Default::default());
    let usgs = extract_scope("Prelim M5.8 earthquake off the coast of Jalisco, Mexico May-20 06:02 UTC");
    check("scope usgs", usgs.quake_magnitude == Some((QuakeScale::Richter, 5.8)) && usgs.alarm_level.is_none() && usgs.scale_adjectives.is_empty());
    let s = extract_scope("deadly 3-alarm fire caused by gas leak");
    check("scope composite", s.scale_adjectives == ["deadly"] && s.alarm_level == Some(3) && s.fire_cause.as_deref() == Some("gas leak"));

    if fails.is_empty() {
        Ok(format!("{n}/{n} cases"))
    } else {
        Err(format!("{}/{n} failed: {}", fails.len(), fails.join("; ")))
    }
}

// ---------------------------------------------------------------- fuzz

const FRAGMENTS: &[&str] = &[
    "M", "m", "5.8", "1,200", "alarm", "-", "acres", "sq", "mi", "km", "radius", "EF", "T", "force", "hail", "quarter",
    "sized", "$", "million", "dozen", "scores of", ",", ".", ":", "UTC", "car", "trucks", "&", "one", "twenty", "VII",
    "intensity", "shindo", "+", "Houston", "Paris", "TX", " ", " ", " ", "\u{301}", "\u{200d}", "\u{202e}", "é", "ß", "İ",
    "Ω", "Ж", "地震", "ح", "🔥", "🌪️", "\u{0}", "\t", "\n", "9999999999999999999999", "0.", ".5", "1e308",
];

fn random_string(rng: &mut ChaCha8Rng) -> String {
    let pieces = rng.gen_range(0..40);
    let mut s = String::new();
    for _ in 0..pieces {
        match rng.gen_range(0..4) {
            0 => s.push(char::from_u32(rng.gen_range(0x20..0x7f)).unwrap()),
            1 => {
                if let Some(c) = char::from_u32(rng.gen_range(0..0x3_0000)) {
                    s.push(c);
                }
            }
            2 => s.push(char::from(b'0' + rng.gen_range(0..10u8))),
            _ => s.push_str(FRAGMENTS.choose(rng).unwrap()),
        }
    }
    s
}

fn fuzz() -> Check {
    let scope = ScopeExtractor::shipped();
    let masker = Masker::shipped();
    let g = Gazetteer::shipped();
    let ctx = ImpactContext::shipped();
    let mut rng = ChaCha8Rng::seed_from_u64(20_170_701);
    let n = 10_000;
    for i in 0..n {
        let s = random_string(&mut rng);
        let err = |what: &str| format!("case {i} {s:?}: {what}");
        let boundary = |a: usize, b: usize| a <= b && b <= s.len() && s.is_char_boundary(a) && s.is_char_boundary(b);

        for t in tokenize_spans(&s) {
            ensure(boundary(t.start, t.end) && !t.text.is_empty(), || err("token span"))?;
        }
        let f = scope.extract(&s);
        ensure(f.alarm_level.is_none_or(|a| (1..=20).contains(&a)), || err("alarm level"))?;
        ensure(f.quake_magnitude.is_none_or(|(_, v)| (0.0..=12.0).contains(&v)), || err("quake magnitude"))?;
        ensure(f.wildfire_size_acres.is_none_or(|a| a.is_finite() && a > 0.0), || err("wildfire size"))?;
        ensure(f.vehicle_count.is_none_or(|v| v >= 1), || err("vehicle count"))?;
        ensure(f.hail_size_inches.is_none_or(|h| h.is_finite() && h > 0.0), || err("hail size"))?;
        ensure(
            f.weather_scale.is_none_or(|(sc, l)| match sc {
                WeatherScale::EnhancedFujita => l <= 5,
                WeatherScale::Beaufort => l <= 12,
                WeatherScale::Torro => l <= 11,
            }),
            || err("weather level"),
        )?;
        for (a, b, _) in scope.spans(&s) {
            ensure(boundary(a, b), || err("scope span"))?;
        }
        let phrases = extract_numeric_phrases(&s);
        for w in phrases.windows(2) {
            ensure(w[0].span.1 <= w[1].span.0, || err("overlapping numeric spans"))?;
        }
        for p in &phrases {
            ensure(boundary(p.span.0, p.span.1) && s[p.span.0..p.span.1] == p.raw, || err("numeric span"))?;
            ensure(p.value.is_none_or(|v| v.is_finite() && v >= 0.0), || err("numeric value"))?;
            let row = impact_features(p, &s, &ctx);
            ensure(row.tfidf_triple.iter().all(|x| x.is_finite() && (0.0..=1.0 + 1e-12).contains(x)), || err("impact triple"))?;
        }
        let _ = masker.mask(&s);
        for r in g.tag_locations(&s) {
            let (a, b) = r.span.ok_or_else(|| err("tag without span"))?;
            ensure(boundary(a, b) && r.hit, || err("location tag"))?;
        }
    }
    Ok(format!("{n} strings, no panics, bounds held"))
}

// -------------------------------------------------------------- tf.idf

fn brute_vector(doc: &[String], corpus: &[Vec<String>]) -> BTreeMap<String, f64> {
    let n = corpus.len() as f64;
    let mut out = BTreeMap::new();
    for t in doc {
        if out.contains_key(t) {
            continue;
        }
        let tf = doc.iter().filter(|x| *x == t).count() as f64;
        let df = corpus.iter().filter(|d| d.contains(t)).count() as f64;
        out.insert(t.clone(), tf * (((1.0 + n) / (1.0 + df)).ln() + 1.0));
    }
    out
}

fn brute_cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a.iter().map(|(k, v)| v * b.get(k).unwrap_or(&0.0)).sum();
    let na = a.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.values().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn tfidf_oracle() -> Check {
    let vocab: Vec<String> = (0..30).map(|i| format!("w{i}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for _ in 0..100 {
        let docs: Vec<Vec<String>> = (0..rng.gen_range(1..=20))
            .map(|_| (0..rng.gen_range(0..15)).map(|_| vocab.choose(&mut rng).unwrap().clone()).collect())
            .collect();
        let named: Vec<(String, TokenList)> = docs.iter().enumerate().map(|(i, d)| (format!("d{i}"), TokenList(d.clone()))).collect();
        let model = fit_tfidf(&named).map_err(|e| e.to_string())?;
        let vs: Vec<_> = docs.iter().map(|d| model.vectorize(&TokenList(d.clone()))).collect();
        let bs: Vec<_> = docs.iter().map(|d| brute_vector(d, &docs)).collect();
        for (v, b) in vs.iter().zip(&bs) {
            for (k, x) in b {
                worst = worst.max((v.get(k) - x).abs());
            }
            ensure(v.len() == b.len(), || "vector support differs".into())?;
        }
        for i in 0..docs.len() {
            for j in 0..docs.len() {
                worst = worst.max((cosine(&vs[i], &vs[j]) - brute_cosine(&bs[i], &bs[j])).abs());
                pairs += 1;
            }
        }
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
    Ok(format!("100 corpora, {pairs} pairs, max deviation {worst:.1e}"))
}

// -------------------------------------------------------------- rarity

fn rarity_oracle() -> Check {
    let places = [(29.76, -95.37, "US"), (32.78, -96.80, "US"), (29.71, -95.41, "US"), (35.68, 139.76, "JP"), (34.69, 135.50, "JP"), (48.86, 2.35, "FR")];
    let topics = ["quake", "fire", "crash", "storm"];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for _ in 0..100 {
        let window = (1_000, 1_000 + 90 * 86_400);
        let posts: Vec<BackgroundPost> = (0..rng.gen_range(0..=1000))
            .map(|_| {
                let (lat, lon, c) = *places.choose(&mut rng).unwrap();
                BackgroundPost {
                    created_at: rng.gen_range(0..window.1 + 10 * 86_400),
                    lat,
                    lon,
                    country: c.into(),
                    topic: topics.choose(&mut rng).unwrap().to_string(),
                }
            })
            .collect();
        let idx = build_background(&posts, window).map_err(|e| e.to_string())?;
        let inside: Vec<&BackgroundPost> = posts.iter().filter(|p| p.created_at >= window.0 && p.created_at < window.1).collect();
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        for &(lat, lon, country) in &places {
            let cell = |p: &BackgroundPost| ((p.lat * 10.0).round(), (p.lon * 10.0).round()) == ((lat * 10.0).round(), (lon * 10.0).round());
            for topic in topics {
                let at_l = inside.iter().filter(|p| cell(p)).count();
                let at_ls = inside.iter().filter(|p| cell(p) && p.topic == topic).count();
                let at_c = inside.iter().filter(|p| p.country == country).count();
                let at_cs = inside.iter().filter(|p| p.country == country && p.topic == topic).count();
                let at_cl = inside.iter().filter(|p| p.country == country && cell(p)).count();
                let lambda = ratio(at_cl, at_c);
                let want = ratio(at_ls, at_l) + lambda * ratio(at_cs, at_c);
                let got = idx.rarity(LocationId::from_coords(lat, lon), country, topic);
                worst = worst.max((got.value - want).abs()).max((got.lambda - lambda).abs());
                checks += 1;
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("100 backgrounds, {checks} lookups, max deviation {worst:.1e}"))
}

// ------------------------------------------------------------ labeling

fn headline(id: &str, text: &str, at: i64) -> Headline {
    Headline { id: id.into(), text: text.into(), outlet: Outlet::Reuters, published_at: at, topic_codes: BTreeSet::new() }
}

fn labeling_semantics() -> Check {
    let masker = Masker::new(None, Vec::new());
    let t = 1_500_000_000;
    let text = "warehouse fire forces evacuations downtown";
    let post = Post::new("p", "u", t, text);
    let hs = [headline("h", text, t), headline("other", "stock markets rally", t)];
    let docs: Vec<(String, TokenList)> = vec![("p".into(), tokenize(text)), ("h".into(), tokenize(text)), ("o".into(), tokenize("stock markets rally"))];
    let tfidf = fit_tfidf(&docs).map_err(|e| e.to_string())?;
    let v = tfidf.vectorize(&tokenize(text));
    let status_at = |at: i64| {
        let mut h = hs.clone();
        h[0].published_at = at;
        HeadlineIndex::build(&h, &tfidf, &masker).match_vector(&post.id, post.created_at, &v, 0.5).status
    };
    ensure(status_at(t + 86_400) == MatchStatus::Matched, || "headline at +86400 s must match".into())?;
    ensure(status_at(t + 86_401) == MatchStatus::Unmatched, || "headline at +86401 s must not match".into())?;
    ensure(status_at(t + 1) == MatchStatus::Matched, || "headline at +1 s must match".into())?;
    ensure(status_at(t) == MatchStatus::Tardy, || "headline at posting time makes the post tardy".into())?;
    ensure(status_at(t - 3_600) == MatchStatus::Tardy, || "earlier headline makes the post tardy".into())?;

    // one-pass propagation against an all-pairs recount
    let vocab: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let base = 1_500_000_000 - 1_500_000_000 % 86_400;
    let posts: Vec<Post> = (0..200)
        .map(|i| {
            let words: Vec<&str> = (0..rng.gen_range(1..6)).map(|_| vocab.choose(&mut rng).unwrap().as_str()).collect();
            Post::new(&format!("p{i:03}"), &format!("u{}", rng.gen_range(0..5)), base + rng.gen_range(0..3 * 86_400), &words.join(" "))
        })
        .collect();
    let docs: Vec<(String, TokenList)> = posts.iter().map(|p| (p.id.clone(), tokenize(&p.text))).collect();
    let tfidf = fit_tfidf(&docs).map_err(|e| e.to_string())?;
    let vectors: Vec<_> = posts.iter().map(|p| tfidf.vectorize(&tokenize(&p.text))).collect();
    let statuses = [MatchStatus::Matched, MatchStatus::Unmatched, MatchStatus::Unmatched, MatchStatus::Tardy];
    let first: Vec<MatchResult> = posts
        .iter()
        .map(|p| MatchResult {
            post_id: p.id.clone(),
            status: *statuses.choose(&mut rng).unwrap(),
            best_headline: None,
            best_score: 0.0,
            via_link: false,
            linked_post: None,
            link_score: None,
        })
        .collect();
    let out = propagate_links(&first, &posts, &vectors, &LinkConfig::default());

    let bvec: Vec<_> = docs.iter().map(|(_, d)| brute_vector(d.as_slice(), &docs.iter().map(|(_, d)| d.0.clone()).collect::<Vec<_>>())).collect();
    let mut expected: BTreeSet<usize> = (0..posts.len()).filter(|&i| first[i].status == MatchStatus::Matched).collect();
    for i in 0..posts.len() {
        if first[i].status != MatchStatus::Unmatched {
            continue;
        }
        for j in 0..posts.len() {
            if first[j].status != MatchStatus::Matched || posts[j].created_at <= posts[i].created_at {
                continue;
            }
            if posts[j].created_at.div_euclid(86_400) != posts[i].created_at.div_euclid(86_400) {
                continue;
            }
            let threshold = if posts[j].user_id == posts[i].user_id { 0.3 } else { 0.5 };
            if brute_cosine(&bvec[i], &bvec[j]) >= threshold {
                expected.insert(i);
            }
        }
    }
    let got: BTreeSet<usize> = (0..posts.len()).filter(|&i| out[i].status == MatchStatus::Matched).collect();
    let direct = first.iter().filter(|r| r.status == MatchStatus::Matched).count();
    ensure(got == expected, || format!("propagated set differs: got {} expected {}", got.len(), expected.len()))?;
    ensure(
        out.iter().zip(&first).all(|(o, f)| f.status != MatchStatus::Tardy || o.status == MatchStatus::Tardy),
        || "tardy posts must not be relabelled".into(),
    )?;
    ensure(utc_day(-1) == -1, || "utc day of negative time".into())?;
    Ok(format!("window and tardy boundaries exact; propagation {direct} -> {} equals all-pairs recount", got.len()))
}

// -------------------------------------------------------------- impact

fn impact_classifier() -> Check {
    let train = impact_dataset(2_000, 1);
    let held_out = impact_dataset(2_000, 2);
    let start = Instant::now();
    let a = train_impact_classifier(&train, &SgdConfig::default()).map_err(|e| e.to_string())?;
    let train_time = start.elapsed();
    let b = train_impact_classifier(&train, &SgdConfig::default()).map_err(|e| e.to_string())?;
    ensure(a.model.to_json() == b.model.to_json(), || "retraining with the same seed is not bit-identical".into())?;
    ensure(train_time < Duration::from_secs(10), || format!("training took {train_time:?}"))?;
    let gold: Vec<_> = held_out.iter().map(|(_, l)| *l).collect();
    let pred = held_out.iter().map(|(r, _)| classify_row(r, &a.model)).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    let f1 = macro_f1(&class_metrics(&gold, &pred));
    ensure(f1 >= 0.95, || format!("held-out macro F1 {f1:.4} < 0.95"))?;
    Ok(format!("held-out macro F1 {f1:.4}, training {:.0} ms, bit-exact", train_time.as_secs_f64() * 1e3))
}

// ----------------------------------------------------------------- svm

fn separable(n: usize, rng: &mut ChaCha8Rng) -> Vec<(FeatureMap, bool)> {
    let w = [1.5, -2.0, 0.5, 1.0, -0.7];
    let mut out = Vec::new();
    while out.len() < n {
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + 0.2;
        if m.abs() < 0.3 {
            continue;
        }
        let f: FeatureMap = x.iter().enumerate().map(|(i, v)| (format!("x{i}"), *v)).collect();
        out.push((f, m > 0.0));
    }
    out
}

fn svm() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let train = separable(400, &mut rng);
    let test = separable(200, &mut rng);
    let rows: Vec<(&FeatureMap, bool)> = train.iter().map(|(f, y)| (f, *y)).collect();
    let model = train_pegasos(&rows, "separable", &SvmConfig { c: 100.0, ..Default::default() }).map_err(|e| e.to_string())?;
    let mut correct = 0;
    for (f, y) in &test {
        correct += ((model.decision(f).map_err(|e| e.to_string())? > 0.0) == *y) as usize;
    }
    ensure(correct == test.len(), || format!("held-out accuracy {correct}/{}", test.len()))?;
    let obj = &model.train_meta.objective;
    let (first, last) = (obj[0], obj[obj.len() - 1]);
    ensure(last < first, || format!("objective {first} -> {last} did not decrease"))?;

    let examples: Vec<LabeledExample> = train
        .iter()
        .enumerate()
        .map(|(i, (f, y))| LabeledExample { post_id: format!("e{i}"), features: f.clone(), label: *y, label_provenance: Provenance::Direct })
        .collect();
    let r1 = cross_validate(&examples, 10, 0.8, 9, &SvmConfig::default()).map_err(|e| e.to_string())?;
    let r2 = cross_validate(&examples, 10, 0.8, 9, &SvmConfig::default()).map_err(|e| e.to_string())?;
    ensure(serde_json::to_string(&r1).unwrap() == serde_json::to_string(&r2).unwrap(), || "cross-validation not reproducible".into())?;
    let (p, r, f) = r1.confusion.prf();
    ensure((f - r1.f1).abs() < 1e-9 && (p - r1.precision).abs() < 1e-9 && (r - r1.recall).abs() < 1e-9, || "pooled P/R/F inconsistent".into())?;
    Ok(format!("held-out {correct}/{}, objective {first:.4} -> {last:.4}, CV F={:.2} reproducible", test.len(), r1.f1))
}

// ------------------------------------------------------------ ablation

fn ablation() -> Check {
    use FeatureGroup::*;
    let configs = vec![vec![Text, Topic], vec![Text, Topic, Scope, Impact], FeatureGroup::ALL.to_vec()];
    let mut held = 0;
    let mut rows = Vec::new();
    for seed in 0..10u64 {
        let corpus = generate_corpus(400, seed);
        let examples = corpus.examples().map_err(|e| e.to_string())?;
        let r = ablate(&examples, &configs, 10, seed, &SvmConfig::default()).map_err(|e| e.to_string())?;
        let (tt, ttsi, all) = (r[0].1.f1, r[1].1.f1, r[2].1.f1);
        let ok = all >= ttsi && ttsi >= tt;
        held += ok as usize;
        rows.push(format!("{tt:.1}/{ttsi:.1}/{all:.1}{}", if ok { "" } else { "*" }));
    }
    ensure(held >= 8, || format!("ordering held on {held}/10 seeds: {}", rows.join(" ")))?;
    Ok(format!("ordering held on {held}/10 seeds (F tt/ttsi/all: {})", rows.join(" ")))
}

// ------------------------------------------------------------ curation

fn curation_fixture() -> Check {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/curation");
    let read = |f: &str| dir.join(f);
    let profiles: Vec<RawProfile> = read_records(&read("profiles.jsonl")).map_err(|e| e.to_string())?.items;
    let tweets: Vec<Post> = read_records(&read("tweets.jsonl")).map_err(|e| e.to_string())?.items;
    let assignments: Vec<TopicAssignment> = read_records(&read("assignments.jsonl")).map_err(|e| e.to_string())?.items;
    let headlines: Vec<Headline> = read_records(&read("headlines.jsonl")).map_err(|e| e.to_string())?.items;
    let g = Gazetteer::shipped();
    let lexicons = AccountLexicons::shipped();
    let inputs = CurationInputs { tweets: &tweets, assignments: &assignments, headlines: &headlines, geocoder: &g as &dyn Geocoder, lexicons: &lexicons };
    let out = curate(&profiles, &inputs, &CurationConfig::default()).map_err(|e| e.to_string())?;
    let got: Vec<(String, Option<Category>)> = out.profiles.iter().map(|p| (p.user_id.clone(), p.category)).collect();
    let want: Vec<(String, Option<Category>)> = [
        ("p01", Category::FireEmergency),
        ("p03", Category::PoliceTraffic),
        ("p04", Category::LocalJournalist),
        ("p05", Category::LocalNews),
        ("p06", Category::LocalAuthority),
        ("p07", Category::QuakeMonitor),
        ("p08", Category::DisasterMonitor),
    ]
    .into_iter()
    .map(|(u, c)| (u.to_string(), Some(c)))
    .collect();
    ensure(got == want, || format!("survivors {got:?}"))?;
    let s = &out.stages;
    ensure(
        (s.removed_followers, s.removed_no_location, s.removed_not_local, s.readmitted) == (2, 2, 3, 2),
        || format!("stage counts {s:?}"),
    )?;
    let info = informativeness(1000, 28).map_err(|e| e.to_string())?;
    ensure(info == 2.8, || format!("28 stories in 1000 tweets gave {info}"))?;
    ensure(out.profiles[0].informativeness == 40.0, || "p01 informativeness".into())?;
    Ok("7 survivors with expected categories; 28/1000 -> 2.8".into())
}

// ---------------------------------------------------------- timeliness

fn timeliness_arithmetic() -> Check {
    let ev = |id: &str, at: i64| EventTime { event_id: id.into(), at };
    let r = timeliness(&[ev("a", 0), ev("b", 0)], &[ev("a", 1_800), ev("b", -600)]);
    ensure(r.mean_lead_minutes == Some(10.0), || format!("mean {:?}", r.mean_lead_minutes))?;
    ensure(r.beat_fraction == Some(0.5), || format!("beat {:?}", r.beat_fraction))?;
    let tie = timeliness(&[ev("a", 100)], &[ev("a", 100)]);
    ensure(tie.rows[0].lead_minutes == 0.0 && tie.beat_fraction == Some(0.0), || "tie counted as a beat".into())?;
    let none = timeliness(&[ev("a", 1)], &[ev("b", 1)]);
    ensure(none.rows.is_empty() && none.skipped == ["a", "b"], || "disjoint ids".into())?;
    Ok("+30/-10 -> mean +10 min, beat 0.5; ties are not beats".into())
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        run("parser suite", secs(1), parser_suite),
        run("fuzz robustness", secs(30), fuzz),
        run("tf.idf and cosine oracle", secs(5), tfidf_oracle),
        run("rarity oracle", secs(10), rarity_oracle),
        run("labeling semantics", secs(5), labeling_semantics),
        run("impact classifier", secs(10), impact_classifier),
        run("linear SVM", secs(10), svm),
        run("ablation ordering", secs(60), ablation),
        run("curation fixture", secs(1), curation_fixture),
        run("timeliness arithmetic", secs(1), timeliness_arithmetic),
    ];
    let passed = results.iter().filter(|r| **r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
