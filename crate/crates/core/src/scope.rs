//! Scope indicators: scale adjectives, multiple-alarm fires, fire causes,
//! earthquake magnitudes and intensities, wildfire sizes, multi-vehicle
//! crash sizes, and severe-weather scales including hail size.
//!
//! Pattern extractors are exposed twice: as `extract_*` functions returning
//! the severity ceiling of a text, and as `*_candidates` returning every
//! match with its byte span (used for masking before headline matching).

use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ordinal_word_value, small_word_value};
use crate::taxonomy::Taxonomy;
use crate::textvec::{tokenize, tokenize_spans, TokenList};

pub const ACRES_PER_SQ_MILE: f64 = 640.0;
pub const ACRES_PER_SQ_KM: f64 = 247.105;
pub const MAX_ALARM: u32 = 20;

pub const SCALE_ADJECTIVES: &str = include_str!("../data/scale_adjectives.txt");
pub const FIRE_CAUSES: &str = include_str!("../data/fire_causes.txt");
pub const HAIL_SIZES: &str = include_str!("../data/hail_sizes.tsv");

/// A pattern match with its byte span in the source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<T> {
    pub span: (usize, usize),
    pub value: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuakeScale {
    Richter,
    Mercalli,
    Ems,
    Csis,
    Shindo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeatherScale {
    EnhancedFujita,
    Torro,
    Beaufort,
}

impl WeatherScale {
    pub fn max_level(self) -> u8 {
        match self {
            WeatherScale::EnhancedFujita => 5,
            WeatherScale::Torro => 11,
            WeatherScale::Beaufort => 12,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScopeFeatures {
    pub scale_adjectives: Vec<String>,
    pub alarm_level: Option<u32>,
    pub fire_cause: Option<String>,
    pub quake_magnitude: Option<(QuakeScale, f64)>,
    pub wildfire_size_acres: Option<f64>,
    pub vehicle_count: Option<u32>,
    pub weather_scale: Option<(WeatherScale, u8)>,
    pub hail_size_inches: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeatherReading {
    pub scale: Option<(WeatherScale, u8)>,
    pub hail_inches: Option<f64>,
}

const NUMBER_WORDS: &str = "one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|thirteen|fourteen|fifteen|sixteen|seventeen|eighteen|nineteen|twenty";
const ORDINAL_WORDS: &str = "first|second|third|fourth|fifth|sixth|seventh|eighth|ninth|tenth|eleventh|twelfth|thirteenth|fourteenth|fifteenth|sixteenth|seventeenth|eighteenth|nineteenth|twentieth";

fn re(pattern: &str) -> Regex {
    Regex::new(pattern).expect("static scope regex")
}

fn span_of(m: &regex::Match<'_>) -> (usize, usize) {
    (m.start(), m.end())
}

// ---------------------------------------------------------------- alarms

static ALARM_RE: LazyLock<Regex> = LazyLock::new(|| {
    re(&format!(
        r"(?i)\b(?:(?P<num>\d{{1,3}})(?:st|nd|rd|th)?|(?P<word>{NUMBER_WORDS}|{ORDINAL_WORDS}))[\s-]+alarms?\b"
    ))
});

pub fn alarm_candidates(text: &str) -> Vec<Candidate<u32>> {
    ALARM_RE
        .captures_iter(text)
        .filter_map(|c| {
            let n = if let Some(m) = c.name("num") {
                m.as_str().parse::<u32>().ok()?
            } else {
                let w = c.name("word")?.as_str().to_lowercase();
                small_word_value(&w).or_else(|| ordinal_word_value(&w))? as u32
            };
            (1..=MAX_ALARM).contains(&n).then(|| Candidate {
                span: span_of(&c.get(0).unwrap()),
                value: n,
            })
        })
        .collect()
}

/// Largest "N-alarm" / "Nth alarm" level mentioned.
pub fn extract_alarm_level(text: &str) -> Option<u32> {
    alarm_candidates(text).into_iter().map(|c| c.value).max()
}

// ---------------------------------------------------------------- quakes

static RICHTER_RES: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    vec![
        re(r"\bM(?:w|L|l|s|b|d|wp|ww)?\s?(?P<v>\d{1,2}(?:\.\d+)*)\b"),
        re(r"(?i)\bmagnitude[\s:-]*(?:of\s+)?(?P<v>\d{1,2}(?:\.\d+)*)\b"),
        re(r"(?i)\b(?P<v>\d{1,2}(?:\.\d+)*)[\s-]*magnitude\b"),
        re(r"(?i)\b(?P<v>\d{1,2}(?:\.\d+)*)\s+on\s+the\s+richter(?:\s+scale)?\b"),
        re(r"(?i)\brichter(?:\s+scale)?\s+(?:of\s+)?(?P<v>\d{1,2}(?:\.\d+)*)\b"),
    ]
});

static INTENSITY_RES: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    vec![
        re(r"(?i)\b(?:(?P<s>mercalli|mmi|ems(?:-98)?|csis)\s+)?intensity(?:\s+(?:level|of))?\s+(?P<v>[ivx]{1,4}|\d{1,2})\b"),
        re(r"(?i)\b(?P<s>mmi|ems(?:-98)?|csis)\s+(?P<v>[ivx]{1,4}|\d{1,2})\b"),
    ]
});

static SHINDO_RE: LazyLock<Regex> = LazyLock::new(|| {
    re(r"(?i)\b(?:shindo|jma(?:\s+(?:seismic\s+)?intensity)?)\s*(?P<v>[0-7])(?:\s*(?P<plus>\+)|\s*(?P<minus>-)|\s+(?P<upper>upper)\b|\s+(?P<lower>lower)\b)?")
});

/// Parses a decimal with at most one point; "5.8.3" is malformed.
fn parse_decimal(s: &str) -> Option<f64> {
    if s.matches('.').count() > 1 {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn parse_roman(s: &str) -> Option<u32> {
    let s = s.to_ascii_uppercase();
    let value = |c| match c {
        'I' => Some(1),
        'V' => Some(5),
        'X' => Some(10),
        _ => None,
    };
    let digits: Vec<u32> = s.chars().map(value).collect::<Option<_>>()?;
    if digits.is_empty() {
        return None;
    }
    let mut total = 0i64;
    for (i, d) in digits.iter().enumerate() {
        if digits.get(i + 1).is_some_and(|n| n > d) {
            total -= *d as i64;
        } else {
            total += *d as i64;
        }
    }
    let total = u32::try_from(total).ok()?;
    // reject non-canonical forms like "IIII" or "VX"
    (to_roman(total)? == s).then_some(total)
}

fn to_roman(mut n: u32) -> Option<String> {
    if n == 0 || n > 39 {
        return None;
    }
    let mut out = String::new();
    for (v, sym) in [(10, "X"), (9, "IX"), (5, "V"), (4, "IV"), (1, "I")] {
        while n >= v {
            out.push_str(sym);
            n -= v;
        }
    }
    Some(out)
}

fn in_quake_bounds(v: f64) -> bool {
    (0.0..=12.0).contains(&v)
}

pub fn quake_candidates(text: &str) -> Vec<Candidate<(QuakeScale, f64)>> {
    let mut out = Vec::new();
    for r in RICHTER_RES.iter() {
        for c in r.captures_iter(text) {
            let Some(v) = c.name("v").and_then(|m| parse_decimal(m.as_str())) else {
                continue;
            };
            if in_quake_bounds(v) {
                out.push(Candidate {
                    span: span_of(&c.get(0).unwrap()),
                    value: (QuakeScale::Richter, v),
                });
            }
        }
    }
    for r in INTENSITY_RES.iter() {
        for c in r.captures_iter(text) {
            let raw = c.name("v").unwrap().as_str();
            let Some(v) = raw.parse::<u32>().ok().or_else(|| parse_roman(raw)) else {
                continue;
            };
            let scale = match c.name("s").map(|m| m.as_str().to_ascii_lowercase()) {
                Some(s) if s.starts_with("ems") => QuakeScale::Ems,
                Some(s) if s == "csis" => QuakeScale::Csis,
                _ => QuakeScale::Mercalli,
            };
            if (1..=12).contains(&v) {
                out.push(Candidate {
                    span: span_of(&c.get(0).unwrap()),
                    value: (scale, v as f64),
                });
            }
        }
    }
    for c in SHINDO_RE.captures_iter(text) {
        let base: f64 = c["v"].parse().unwrap_or(0.0);
        let bump = if c.name("plus").is_some() || c.name("upper").is_some() {
            0.5
        } else {
            0.0
        };
        out.push(Candidate {
            span: span_of(&c.get(0).unwrap()),
            value: (QuakeScale::Shindo, base + bump),
        });
    }
    out.sort_by_key(|c| c.span);
    out
}

/// Earthquake magnitude or intensity. Richter-family magnitudes take
/// precedence over intensity scales; within the chosen family the largest
/// value wins.
pub fn extract_quake_magnitude(text: &str) -> Option<(QuakeScale, f64)> {
    let cands = quake_candidates(text);
    let richter = cands.iter().filter(|c| c.value.0 == QuakeScale::Richter);
    let pool: Vec<&Candidate<(QuakeScale, f64)>> = if richter.clone().next().is_some() {
        richter.collect()
    } else {
        cands.iter().collect()
    };
    pool.into_iter()
        .map(|c| c.value)
        .fold(None, |best: Option<(QuakeScale, f64)>, v| match best {
            Some(b) if b.1 >= v.1 => Some(b),
            _ => Some(v),
        })
}

// ------------------------------------------------------------- wildfires

static WILDFIRE_RES: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    let num = r"(?P<num>\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?)";
    vec![
        re(&format!(
            r"(?i)\b{num}\s*(?:-\s*)?(?P<unit>acres?\b|sq\.?\s*mi(?:les?)?\b|square[\s-]+miles?\b|sq\.?\s*km\b|square[\s-]+kilomet(?:er|re)s?\b|km2\b|km²|mile\s+radius\b)"
        )),
        re(&format!(r"(?i)\bradius\s+of\s+{num}\s*(?P<unit>miles?)\b")),
    ]
});

pub fn sq_miles_to_acres(sq_mi: f64) -> f64 {
    sq_mi * ACRES_PER_SQ_MILE
}

pub fn acres_to_sq_miles(acres: f64) -> f64 {
    acres / ACRES_PER_SQ_MILE
}

pub fn sq_km_to_acres(sq_km: f64) -> f64 {
    sq_km * ACRES_PER_SQ_KM
}

/// Area of a circle of the given radius in miles, in acres.
pub fn radius_miles_to_acres(r: f64) -> f64 {
    std::f64::consts::PI * r * r * ACRES_PER_SQ_MILE
}

pub fn wildfire_candidates(text: &str) -> Vec<Candidate<f64>> {
    let mut out = Vec::new();
    for r in WILDFIRE_RES.iter() {
        for c in r.captures_iter(text) {
            let Some(n) = parse_decimal(&c["num"].replace(',', "")) else {
                continue;
            };
            let unit = c["unit"].to_lowercase();
            let acres = if unit.starts_with("acre") {
                n
            } else if unit.contains("radius") || unit.starts_with("mile") {
                radius_miles_to_acres(n)
            } else if unit.contains("mi") {
                sq_miles_to_acres(n)
            } else {
                sq_km_to_acres(n)
            };
            if acres > 0.0 && acres.is_finite() {
                out.push(Candidate {
                    span: span_of(&c.get(0).unwrap()),
                    value: acres,
                });
            }
        }
    }
    out.sort_by_key(|c| c.span);
    out
}

/// Largest wildfire size mentioned, normalized to acres.
pub fn extract_wildfire_size(text: &str) -> Option<f64> {
    wildfire_candidates(text).into_iter().map(|c| c.value).reduce(f64::max)
}

// -------------------------------------------------------------- vehicles

static VEHICLE_HYPHEN_RE: LazyLock<Regex> = LazyLock::new(|| {
    re(&format!(
        r"(?i)\b(?P<n>\d{{1,3}}|{NUMBER_WORDS})-(?:car|truck|vehicle|bus|semi)s?\b(?:[\s-]+(?:crash|collision|pile-?up|wreck|accident)s?\b)?"
    ))
});

static VEHICLE_TOKEN_RE: LazyLock<Regex> =
    LazyLock::new(|| re(r"(?i)\d+|\p{L}+|&|\+|,"));

const VEHICLE_NOUNS: &[&str] = &[
    "car", "cars", "truck", "trucks", "vehicle", "vehicles", "suv", "suvs", "semi", "semis",
    "bus", "buses", "van", "vans", "motorcycle", "motorcycles", "pickup", "pickups", "tractor",
    "trailer", "trailers",
];
const CONJUNCTIONS: &[&str] = &["&", "+", "and", "plus", ","];

fn count_word(w: &str) -> Option<u32> {
    if w.chars().all(|c| c.is_ascii_digit()) {
        return w.parse().ok().filter(|n| (1..1000).contains(n));
    }
    small_word_value(w).filter(|n| (1..=20).contains(n)).map(|n| n as u32)
}

pub fn vehicle_candidates(text: &str) -> Vec<Candidate<u32>> {
    let mut out: Vec<Candidate<u32>> = VEHICLE_HYPHEN_RE
        .captures_iter(text)
        .filter_map(|c| {
            Some(Candidate {
                span: span_of(&c.get(0)?),
                value: count_word(&c["n"].to_lowercase())?,
            })
        })
        .collect();

    // "<n> [adj [adj]] <vehicle>" items joined by conjunctions are summed
    let toks: Vec<(String, usize, usize)> = VEHICLE_TOKEN_RE
        .find_iter(text)
        .map(|m| (m.as_str().to_lowercase(), m.start(), m.end()))
        .collect();
    let mut items: Vec<(usize, usize, u32)> = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let Some(n) = count_word(&toks[i].0) else {
            i += 1;
            continue;
        };
        let mut found = None;
        for (j, tok) in toks.iter().enumerate().take(i + 4).skip(i + 1) {
            let w = tok.0.as_str();
            if VEHICLE_NOUNS.contains(&w) {
                found = Some(j);
                break;
            }
            let plain = w.chars().all(char::is_alphabetic)
                && count_word(w).is_none()
                && !CONJUNCTIONS.contains(&w);
            if !plain {
                break;
            }
        }
        match found {
            Some(j) => {
                items.push((i, j, n));
                i = j + 1;
            }
            None => i += 1,
        }
    }
    let mut k = 0;
    while k < items.len() {
        let (first, mut last, mut sum) = items[k];
        while k + 1 < items.len() {
            let (next_first, next_last, n) = items[k + 1];
            let between: Vec<&str> = toks[last + 1..next_first].iter().map(|t| t.0.as_str()).collect();
            let joined = matches!(between.as_slice(), [c] if CONJUNCTIONS.contains(c))
                || matches!(between.as_slice(), [",", "and"]);
            if !joined {
                break;
            }
            sum = sum.saturating_add(n);
            last = next_last;
            k += 1;
        }
        out.push(Candidate {
            span: (toks[first].1, toks[last].2),
            value: sum,
        });
        k += 1;
    }
    out.sort_by_key(|c| c.span);
    out
}

/// Size of a multi-vehicle crash ("2-car crash", "2 trucks & one vehicle").
pub fn extract_vehicle_count(text: &str) -> Option<u32> {
    vehicle_candidates(text).into_iter().map(|c| c.value).max()
}

// --------------------------------------------------------------- weather

static EF_RE: LazyLock<Regex> = LazyLock::new(|| re(r"(?i)\bEF[\s-]?(?P<v>[0-5])\b"));
static TORRO_CONTEXT_RE: LazyLock<Regex> = LazyLock::new(|| re(r"(?i)\btorro\b"));
static TORRO_RES: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    vec![
        re(r"\bT[\s-]?(?P<v>\d{1,2})\b"),
        re(r"(?i)\btorro(?:\s+(?:scale|force|intensity))?\s+(?:T\s?)?(?P<v>\d{1,2})\b"),
    ]
});
static BEAUFORT_RE: LazyLock<Regex> = LazyLock::new(|| {
    re(r"(?i)\b(?:beaufort(?:\s+(?:scale|force))?|force)\s+(?P<v>\d{1,2})\b")
});
static HAIL_NUMERIC_RES: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    let num = r#"(?P<num>\d+\s+\d/\d+|\d/\d+|\d+(?:\.\d+)?)"#;
    let unit = r#"(?:inch(?:es)?\b|in\b\.?|")"#;
    vec![
        re(&format!(
            r"(?i)\b{num}\s*(?:-\s*)?{unit}\s*(?:(?:diameter|sized?|size)\s+)?hail(?:stones?)?\b"
        )),
        re(&format!(r"(?i)\bhail(?:stones?)?\b[^.]{{0,30}}?\b{num}\s*(?:-\s*)?{unit}")),
    ]
});

fn parse_inches(s: &str) -> Option<f64> {
    let mut total = 0.0;
    for part in s.split_whitespace() {
        total += match part.split_once('/') {
            Some((a, b)) => {
                let (a, b): (f64, f64) = (a.parse().ok()?, b.parse().ok()?);
                if b == 0.0 {
                    return None;
                }
                a / b
            }
            None => parse_decimal(part)?,
        };
    }
    (total > 0.0 && total.is_finite()).then_some(total)
}

/// Object-to-diameter table for hail reports ("quarter sized hail").
#[derive(Debug, Clone)]
pub struct HailTable {
    sizes: Vec<(String, f64)>,
    object_res: Vec<Regex>,
}

impl HailTable {
    /// Two columns, tab separated: object name and diameter in inches.
    pub fn parse(content: &str) -> Result<Self> {
        let mut sizes = Vec::new();
        for (i, line) in content.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: &str| Error::BadTaxonomy {
                name: "hail_sizes".into(),
                line: i + 1,
                reason: reason.into(),
            };
            let (name, value) = line.split_once('\t').ok_or_else(|| bad("expected two tab-separated columns"))?;
            let value: f64 = value.trim().parse().map_err(|_| bad("diameter is not a number"))?;
            if !(value > 0.0 && value.is_finite()) {
                return Err(bad("diameter must be positive"));
            }
            sizes.push((tokenize(name).0.join(" "), value));
        }
        if sizes.is_empty() {
            return Err(Error::BadTaxonomy {
                name: "hail_sizes".into(),
                line: 0,
                reason: "table is empty".into(),
            });
        }
        let mut names: Vec<&str> = sizes.iter().map(|(n, _)| n.as_str()).collect();
        names.sort_by_key(|n| std::cmp::Reverse(n.len()));
        let alt = names
            .iter()
            .map(|n| n.split(' ').map(regex::escape).collect::<Vec<_>>().join(r"[\s-]+"))
            .collect::<Vec<_>>()
            .join("|");
        let object_res = vec![
            re(&format!(r"(?i)\b(?P<obj>{alt})[\s-]*(?:(?:sized?|size)\s+)?hail(?:stones?)?\b")),
            re(&format!(r"(?i)\bhail(?:stones?)?\b[^.]{{0,30}}?\bsize\s+of\s+(?:an?\s+)?(?P<obj>{alt})s?\b")),
        ];
        Ok(HailTable { sizes, object_res })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn shipped() -> Self {
        Self::parse(HAIL_SIZES).expect("shipped hail table parses")
    }

    pub fn size_of(&self, object: &str) -> Option<f64> {
        let key = tokenize(object).0.join(" ");
        self.sizes.iter().find(|(n, _)| *n == key).map(|(_, v)| *v)
    }

    pub fn candidates(&self, text: &str) -> Vec<Candidate<f64>> {
        let mut out = Vec::new();
        for r in HAIL_NUMERIC_RES.iter() {
            for c in r.captures_iter(text) {
                if let Some(v) = parse_inches(&c["num"]) {
                    out.push(Candidate { span: span_of(&c.get(0).unwrap()), value: v });
                }
            }
        }
        for r in &self.object_res {
            for c in r.captures_iter(text) {
                if let Some(v) = self.size_of(&c["obj"]) {
                    out.push(Candidate { span: span_of(&c.get(0).unwrap()), value: v });
                }
            }
        }
        out.sort_by_key(|c| c.span);
        out
    }
}

pub fn weather_scale_candidates(text: &str) -> Vec<Candidate<(WeatherScale, u8)>> {
    let mut out = Vec::new();
    let mut push = |r: &Regex, scale: WeatherScale| {
        for c in r.captures_iter(text) {
            if let Ok(v) = c["v"].parse::<u8>() {
                if v <= scale.max_level() {
                    out.push(Candidate { span: span_of(&c.get(0).unwrap()), value: (scale, v) });
                }
            }
        }
    };
    push(&EF_RE, WeatherScale::EnhancedFujita);
    if TORRO_CONTEXT_RE.is_match(text) {
        for r in TORRO_RES.iter() {
            push(r, WeatherScale::Torro);
        }
    }
    push(&BEAUFORT_RE, WeatherScale::Beaufort);
    out.sort_by_key(|c| c.span);
    out
}

/// Severe-weather scale (EF, then TORRO, then Beaufort; highest level
/// within the first scale present) and the largest hail diameter.
pub fn extract_weather_scale(text: &str, hail: &HailTable) -> WeatherReading {
    let cands = weather_scale_candidates(text);
    let scale = [WeatherScale::EnhancedFujita, WeatherScale::Torro, WeatherScale::Beaufort]
        .into_iter()
        .find_map(|s| {
            cands
                .iter()
                .filter(|c| c.value.0 == s)
                .map(|c| c.value)
                .max_by_key(|v| v.1)
        });
    let hail_inches = hail.candidates(text).into_iter().map(|c| c.value).reduce(f64::max);
    WeatherReading { scale, hail_inches }
}

// ------------------------------------------------------------- taxonomies

/// Scale adjectives in text order, duplicates preserved.
pub fn extract_scale_adjectives(tokens: &TokenList, lexicon: &Taxonomy) -> Vec<String> {
    lexicon.find_all(tokens.as_slice()).into_iter().map(|m| m.phrase).collect()
}

/// First fire or explosion cause mentioned.
pub fn extract_fire_cause(tokens: &TokenList, causes: &Taxonomy) -> Option<String> {
    causes.find_all(tokens.as_slice()).into_iter().next().map(|m| m.phrase)
}

pub const SCALE_ADJ: &str = "scope_scale_adj";
pub const FIRE_CAUSE: &str = "scope_fire_cause";
pub const ALARM_LEVEL: &str = "scope_alarm_level";
pub const QUAKE_MAGNITUDE: &str = "scope_quake_magnitude";
pub const WILDFIRE_SIZE: &str = "scope_wildfire_size";
pub const VEHICLE_COUNT: &str = "scope_vehicle_count";
pub const WEATHER_SCALE: &str = "scope_weather_scale";
pub const HAIL_SIZE: &str = "scope_hail_size";

/// Bundles the data-driven parts of the scope indicators.
#[derive(Debug, Clone)]
pub struct ScopeExtractor {
    pub adjectives: Taxonomy,
    pub causes: Taxonomy,
    pub hail: HailTable,
}

impl ScopeExtractor {
    pub fn shipped() -> Self {
        ScopeExtractor {
            adjectives: Taxonomy::parse("scale_adjectives", SCALE_ADJECTIVES).expect("shipped lexicon"),
            causes: Taxonomy::parse("fire_causes", FIRE_CAUSES).expect("shipped causes"),
            hail: HailTable::shipped(),
        }
    }

    pub fn extract(&self, text: &str) -> ScopeFeatures {
        let tokens = tokenize(text);
        let weather = extract_weather_scale(text, &self.hail);
        ScopeFeatures {
            scale_adjectives: extract_scale_adjectives(&tokens, &self.adjectives),
            alarm_level: extract_alarm_level(text),
            fire_cause: extract_fire_cause(&tokens, &self.causes),
            quake_magnitude: extract_quake_magnitude(text),
            wildfire_size_acres: extract_wildfire_size(text),
            vehicle_count: extract_vehicle_count(text),
            weather_scale: weather.scale,
            hail_size_inches: weather.hail_inches,
        }
    }

    /// Every scope span in the text tagged with its feature name.
    pub fn spans(&self, text: &str) -> Vec<(usize, usize, &'static str)> {
        let toks = tokenize_spans(text);
        let mut out: Vec<(usize, usize, &'static str)> = Vec::new();
        out.extend(self.adjectives.find_spans(&toks).into_iter().map(|(s, e, _)| (s, e, SCALE_ADJ)));
        out.extend(self.causes.find_spans(&toks).into_iter().map(|(s, e, _)| (s, e, FIRE_CAUSE)));
        out.extend(alarm_candidates(text).into_iter().map(|c| (c.span.0, c.span.1, ALARM_LEVEL)));
        out.extend(quake_candidates(text).into_iter().map(|c| (c.span.0, c.span.1, QUAKE_MAGNITUDE)));
        out.extend(wildfire_candidates(text).into_iter().map(|c| (c.span.0, c.span.1, WILDFIRE_SIZE)));
        out.extend(vehicle_candidates(text).into_iter().map(|c| (c.span.0, c.span.1, VEHICLE_COUNT)));
        out.extend(weather_scale_candidates(text).into_iter().map(|c| (c.span.0, c.span.1, WEATHER_SCALE)));
        out.extend(self.hail.candidates(text).into_iter().map(|c| (c.span.0, c.span.1, HAIL_SIZE)));
        out
    }
}

pub fn extract_scope(text: &str) -> ScopeFeatures {
    static SHIPPED: LazyLock<ScopeExtractor> = LazyLock::new(ScopeExtractor::shipped);
    SHIPPED.extract(text)
}
