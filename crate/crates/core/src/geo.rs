//! Gazetteer-backed geocoding.
//!
//! Place names are matched on their normalized token sequence, so
//! "New York City", "new york city" and "New-York City" are the same key.
//! A query may be *guided* by an anchor region: the lookup then only
//! accepts entries that lie inside the anchor.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curation::SourceProfile;
use crate::error::{Error, Result};
use crate::records::Post;
use crate::textvec::{tokenize, tokenize_spans};

pub const WORLD_CITIES: &str = include_str!("../data/world_cities.psv");

/// Admin chains are short; this only guards against cyclic parents.
const MAX_CHAIN: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazetteerEntry {
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    pub lat: f64,
    pub lon: f64,
    pub country_code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admin_parent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<u64>,
}

impl GazetteerEntry {
    /// Country-level entries have no parent.
    pub fn is_country(&self) -> bool {
        self.admin_parent.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoResolution {
    pub query: String,
    pub anchor: Option<String>,
    pub hit: bool,
    pub entry: Option<GazetteerEntry>,
    /// Byte span of the toponym when the resolution comes from tagging text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<(usize, usize)>,
}

impl GeoResolution {
    fn miss(query: &str, anchor: Option<&str>) -> Self {
        GeoResolution { query: query.to_owned(), anchor: anchor.map(str::to_owned), hit: false, entry: None, span: None }
    }

    fn hit(query: &str, anchor: Option<&str>, entry: &GazetteerEntry) -> Self {
        GeoResolution {
            query: query.to_owned(),
            anchor: anchor.map(str::to_owned),
            hit: true,
            entry: Some(entry.clone()),
            span: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LocationFeatures {
    pub lat: Option<f64>,
    pub lon: Option<f64>,
    pub name: Option<String>,
    pub country_code: Option<String>,
}

impl LocationFeatures {
    pub fn from_entry(e: &GazetteerEntry) -> Self {
        LocationFeatures {
            lat: Some(e.lat),
            lon: Some(e.lon),
            name: Some(e.name.clone()),
            country_code: Some(e.country_code.clone()),
        }
    }

    pub fn is_nil(&self) -> bool {
        self.name.is_none()
    }
}

/// Lookup contract shared by the file-backed gazetteer and any remote
/// geocoding client.
pub trait Geocoder {
    fn geocode(&self, query: &str, anchor: Option<&str>) -> GeoResolution;

    fn tag_locations(&self, text: &str) -> Vec<GeoResolution>;

    /// Resolves a free-form place string such as a profile location.
    /// "Houston, TX" is read as "Houston" guided by "TX"; anything else
    /// falls back to the first toponym tagged in the string.
    fn resolve_place(&self, place: &str) -> Option<GazetteerEntry> {
        let whole = self.geocode(place, None);
        if whole.hit {
            return whole.entry;
        }
        if let Some((head, rest)) = place.split_once(',') {
            let guided = self.geocode(head, Some(rest.trim()));
            if guided.hit {
                return guided.entry;
            }
        }
        self.tag_locations(place).into_iter().find_map(|r| r.entry)
    }
}

pub fn normalize_name(s: &str) -> String {
    tokenize(s).0.join(" ")
}

#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: Vec<GazetteerEntry>,
    /// Normalized name or alias → entry indices, most populous first.
    index: BTreeMap<String, Vec<usize>>,
    longest_key: usize,
}

enum Region {
    Entry(usize),
    Country(String),
}

fn parse_line(line: &str) -> std::result::Result<GazetteerEntry, String> {
    let cols: Vec<&str> = line.split('|').map(str::trim).collect();
    let [name, aliases, lat, lon, country, parent, population] = cols.as_slice() else {
        return Err(format!("expected 7 `|`-separated columns, got {}", cols.len()));
    };
    if name.is_empty() {
        return Err("empty name".into());
    }
    let lat: f64 = lat.parse().map_err(|_| format!("bad latitude `{lat}`"))?;
    let lon: f64 = lon.parse().map_err(|_| format!("bad longitude `{lon}`"))?;
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
        return Err(format!("coordinates out of range ({lat}, {lon})"));
    }
    if country.len() != 2 || !country.chars().all(|c| c.is_ascii_uppercase()) {
        return Err(format!("country code `{country}` is not two uppercase letters"));
    }
    let population = match *population {
        "" => None,
        p => Some(p.parse().map_err(|_| format!("bad population `{p}`"))?),
    };
    Ok(GazetteerEntry {
        name: name.to_string(),
        aliases: aliases.split(';').map(str::trim).filter(|a| !a.is_empty()).map(str::to_owned).collect(),
        lat,
        lon,
        country_code: country.to_string(),
        admin_parent: (!parent.is_empty()).then(|| parent.to_string()),
        population,
    })
}

impl Gazetteer {
    pub fn from_entries(entries: Vec<GazetteerEntry>) -> Self {
        let mut index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            for key in std::iter::once(&e.name).chain(&e.aliases).map(|n| normalize_name(n)) {
                if key.is_empty() {
                    continue;
                }
                let slot = index.entry(key).or_default();
                if !slot.contains(&i) {
                    slot.push(i);
                }
            }
        }
        for slot in index.values_mut() {
            // stable: equal populations keep file order
            slot.sort_by_key(|&i| std::cmp::Reverse(entries[i].population.unwrap_or(0)));
        }
        let longest_key = index.keys().map(|k| k.split(' ').count()).max().unwrap_or(0);
        Gazetteer { entries, index, longest_key }
    }

    /// One entry per line, `name|aliases|lat|lon|country|admin_parent|population`,
    /// aliases `;`-separated. Blank lines and `#` comments are skipped.
    pub fn parse(content: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in content.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            entries.push(parse_line(t).map_err(|reason| Error::BadGazetteer { line: i + 1, reason })?);
        }
        Ok(Self::from_entries(entries))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingInput(path.to_owned()),
            _ => Error::Io(e),
        })?;
        Self::parse(&content)
    }

    pub fn shipped() -> Self {
        Self::parse(WORLD_CITIES).expect("shipped gazetteer parses")
    }

    pub fn entries(&self) -> &[GazetteerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries under a name or alias, most populous first.
    pub fn lookup(&self, name: &str) -> Vec<&GazetteerEntry> {
        self.candidates(&normalize_name(name)).iter().map(|&i| &self.entries[i]).collect()
    }

    fn candidates(&self, key: &str) -> &[usize] {
        self.index.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    fn parent_of(&self, i: usize) -> Option<usize> {
        let e = &self.entries[i];
        let parent = normalize_name(e.admin_parent.as_deref()?);
        self.candidates(&parent)
            .iter()
            .copied()
            .find(|&p| p != i && self.entries[p].country_code == e.country_code)
    }

    fn chain_contains(&self, mut i: usize, target: usize) -> bool {
        for _ in 0..MAX_CHAIN {
            if i == target {
                return true;
            }
            match self.parent_of(i) {
                Some(p) => i = p,
                None => return false,
            }
        }
        false
    }

    /// Anchors may themselves be guided ("Paris, TX") or a bare
    /// two-letter country code.
    fn region(&self, anchor: &str) -> Option<Region> {
        if let Some(&i) = self.candidates(&normalize_name(anchor)).first() {
            return Some(Region::Entry(i));
        }
        if let Some((head, rest)) = anchor.split_once(',') {
            return self.geocode_index(head, Some(rest.trim())).map(Region::Entry);
        }
        let code = anchor.trim();
        (code.len() == 2 && code.chars().all(|c| c.is_ascii_alphabetic())).then(|| Region::Country(code.to_ascii_uppercase()))
    }

    fn within(&self, i: usize, region: &Region) -> bool {
        match region {
            Region::Country(code) => self.entries[i].country_code == *code,
            Region::Entry(a) if self.entries[*a].is_country() => self.entries[i].country_code == self.entries[*a].country_code,
            Region::Entry(a) => self.chain_contains(i, *a),
        }
    }

    fn geocode_index(&self, query: &str, anchor: Option<&str>) -> Option<usize> {
        let candidates = self.candidates(&normalize_name(query));
        match anchor {
            None => candidates.first().copied(),
            Some(a) => {
                let region = self.region(a)?;
                candidates.iter().copied().find(|&i| self.within(i, &region))
            }
        }
    }

    pub fn geocode(&self, query: &str, anchor: Option<&str>) -> GeoResolution {
        match self.geocode_index(query, anchor) {
            Some(i) => GeoResolution::hit(query, anchor, &self.entries[i]),
            None => GeoResolution::miss(query, anchor),
        }
    }

    /// Toponyms in text order. Overlapping candidates go to the longest,
    /// then the leftmost. A match must start with a capital letter, which
    /// keeps common words that double as place names ("reading") out.
    pub fn tag_locations(&self, text: &str) -> Vec<GeoResolution> {
        let tokens = tokenize_spans(text);
        let mut found: Vec<(usize, usize)> = Vec::new();
        for i in 0..tokens.len() {
            if !text[tokens[i].start..].starts_with(char::is_uppercase) {
                continue;
            }
            let mut key = String::new();
            for (j, t) in tokens.iter().enumerate().take(i + self.longest_key).skip(i) {
                if j > i {
                    key.push(' ');
                }
                key.push_str(&t.text);
                if self.index.contains_key(&key) {
                    found.push((i, j + 1));
                }
            }
        }
        found.sort_by_key(|&(s, e)| (std::cmp::Reverse(e - s), s));
        let mut taken = vec![false; tokens.len()];
        let mut chosen = Vec::new();
        for (s, e) in found {
            if taken[s..e].iter().any(|&t| t) {
                continue;
            }
            taken[s..e].iter_mut().for_each(|t| *t = true);
            chosen.push((s, e));
        }
        chosen.sort_unstable();
        chosen
            .into_iter()
            .map(|(s, e)| {
                let span = (tokens[s].start, tokens[e - 1].end);
                let mut r = self.geocode(&text[span.0..span.1], None);
                r.span = Some(span);
                r
            })
            .collect()
    }
}

impl Geocoder for Gazetteer {
    fn geocode(&self, query: &str, anchor: Option<&str>) -> GeoResolution {
        Gazetteer::geocode(self, query, anchor)
    }

    fn tag_locations(&self, text: &str) -> Vec<GeoResolution> {
        Gazetteer::tag_locations(self, text)
    }
}

/// First toponym in the post; failing that, the source's own location when
/// the source is locally focused; otherwise nil.
pub fn location_features(post: &Post, source: &SourceProfile, g: &dyn Geocoder) -> LocationFeatures {
    if let Some(e) = g.tag_locations(&post.text).into_iter().find_map(|r| r.entry) {
        return LocationFeatures::from_entry(&e);
    }
    if source.locally_focused {
        let entry = source.resolved_location.clone().or_else(|| g.resolve_place(&source.profile_location));
        if let Some(e) = entry {
            return LocationFeatures::from_entry(&e);
        }
    }
    LocationFeatures::default()
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "\
# name|aliases|lat|lon|country|admin_parent|population
France||46.2|2.2|FR||67000000
Japan||36.2|138.2|JP||125000000
United States|USA|39.8|-98.6|US||331000000
Texas|TX|31.9|-99.9|US|United States|29000000
Paris||48.86|2.35|FR|France|2100000
Paris||33.66|-95.55|US|Texas|25000
New York||40.7|-74.0|US|United States|8000000
New York City|NYC|40.71|-74.01|US|New York|8300000
Tokyo||35.68|139.69|JP|Japan|14000000
";

    fn g() -> Gazetteer {
        Gazetteer::parse(FIXTURE).unwrap()
    }

    #[test]
    fn empty_gazetteer_misses() {
        let g = Gazetteer::parse("").unwrap();
        assert!(g.is_empty());
        assert!(!g.geocode("Paris", None).hit);
        assert!(g.tag_locations("Paris is lovely").is_empty());
    }

    #[test]
    fn duplicate_names_share_a_key() {
        let g = g();
        let paris = g.lookup("paris");
        assert_eq!(paris.len(), 2);
        assert_eq!(paris[0].country_code, "FR");
        assert_eq!(paris[1].country_code, "US");
    }

    #[test]
    fn alias_resolves() {
        let r = g().geocode("NYC", None);
        assert_eq!(r.entry.unwrap().name, "New York City");
    }

    #[test]
    fn guided_queries() {
        let g = g();
        let r = g.geocode("Paris", Some("France"));
        assert!(r.hit);
        assert_eq!(r.entry.unwrap().country_code, "FR");
        assert!(!g.geocode("Paris", Some("Japan")).hit);
        let r = g.geocode("Paris", Some("Texas"));
        assert_eq!(r.entry.unwrap().country_code, "US");
        assert!(g.geocode("Paris", Some("TX")).hit);
        assert!(g.geocode("New York City", Some("New York")).hit);
        assert!(!g.geocode("Tokyo", Some("US")).hit);
        assert!(g.geocode("Tokyo", Some("JP")).hit);
        assert!(!g.geocode("", None).hit);
        assert!(!g.geocode("Paris", Some("Atlantis")).hit);
        assert!(g.geocode("Paris", Some("Paris, TX")).hit);
        assert!(!g.geocode("Paris", Some("Tokyo, Japan")).hit);
    }

    #[test]
    fn unanchored_prefers_population() {
        assert_eq!(g().geocode("Paris", None).entry.unwrap().country_code, "FR");
    }

    #[test]
    fn bad_lines_carry_line_numbers() {
        let bad = "# header\nParis||48.8|2.3|FR||1\nLyon||91|4.8|FR||1\n";
        assert!(matches!(Gazetteer::parse(bad), Err(Error::BadGazetteer { line: 3, .. })));
        assert!(matches!(Gazetteer::parse("X||1|1|fr||"), Err(Error::BadGazetteer { line: 1, .. })));
        assert!(matches!(Gazetteer::parse("X|1|1"), Err(Error::BadGazetteer { line: 1, .. })));
    }

    #[test]
    fn tagging_prefers_longest() {
        let tags = g().tag_locations("Flooding in New York City tonight");
        assert_eq!(tags.len(), 1);
        assert_eq!(tags[0].entry.as_ref().unwrap().name, "New York City");
        assert_eq!(tags[0].span, Some((12, 25)));
        assert!(g().tag_locations("all quiet").is_empty());
    }

    #[test]
    fn shipped_tags_jalisco_and_mexico() {
        let g = Gazetteer::shipped();
        let names: Vec<String> = g
            .tag_locations("Prelim M5.8 earthquake off the coast of Jalisco, Mexico")
            .into_iter()
            .map(|r| r.entry.unwrap().name)
            .collect();
        assert_eq!(names, ["Jalisco", "Mexico"]);
    }

    #[test]
    fn resolve_profile_place() {
        let g = g();
        assert_eq!(g.resolve_place("Paris, TX").unwrap().country_code, "US");
        assert_eq!(g.resolve_place("Paris, France").unwrap().country_code, "FR");
        assert_eq!(g.resolve_place("Downtown Tokyo").unwrap().name, "Tokyo");
        assert!(g.resolve_place("Atlantis").is_none());
    }

    #[test]
    fn location_fallback() {
        let g = g();
        let mut src = SourceProfile::new("u", "Tokyo");
        src.locally_focused = true;
        let post = Post::new("1", "u", 0, "fire downtown");
        assert_eq!(location_features(&post, &src, &g).name.as_deref(), Some("Tokyo"));
        let post2 = Post::new("2", "u", 0, "fire in Paris");
        assert_eq!(location_features(&post2, &src, &g).country_code.as_deref(), Some("FR"));
        src.locally_focused = false;
        assert!(location_features(&post, &src, &g).is_nil());
    }
}
