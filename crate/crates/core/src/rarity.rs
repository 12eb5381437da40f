//! Location-dependent event rarity from a background corpus.
//!
//! For an event of topic `s` at location `l` in country `L`:
//!
//! ```text
//! rarity = T(l,s)/T(l) + λ · T(L,s)/T(L),   λ = T(L,l)/T(L)
//! ```
//!
//! where `T(..)` counts background posts. As written the score grows when
//! the topic is *common* at the location; it is kept that way and the model
//! is left to learn the sign. Any ratio with a zero denominator is 0.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRID_DEGREES: f64 = 0.1;
const FORMAT_HEADER: &str = "# newsvalue background v1";

/// A 0.1° grid cell, stored as tenths of a degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LocationId {
    pub lat10: i32,
    pub lon10: i32,
}

impl LocationId {
    pub fn from_coords(lat: f64, lon: f64) -> Self {
        LocationId { lat10: (lat / GRID_DEGREES).round() as i32, lon10: (lon / GRID_DEGREES).round() as i32 }
    }
}

impl fmt::Display for LocationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.lat10, self.lon10)
    }
}

impl FromStr for LocationId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s.split_once(',').ok_or_else(|| format!("bad location id `{s}`"))?;
        let p = |x: &str| x.trim().parse::<i32>().map_err(|_| format!("bad location id `{s}`"));
        Ok(LocationId { lat10: p(a)?, lon10: p(b)? })
    }
}

/// One background post reduced to what the counts need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundPost {
    pub created_at: i64,
    pub lat: f64,
    pub lon: f64,
    pub country: String,
    pub topic: String,
}

impl BackgroundPost {
    pub fn location(&self) -> LocationId {
        LocationId::from_coords(self.lat, self.lon)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BackgroundIndex {
    /// Half-open `[start, end)`.
    pub window: (i64, i64),
    pub counts: BTreeMap<(LocationId, String), u64>,
    pub loc_counts: BTreeMap<LocationId, u64>,
    pub country_counts: BTreeMap<String, u64>,
    pub country_topic_counts: BTreeMap<(String, String), u64>,
    pub country_loc_counts: BTreeMap<(String, LocationId), u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RarityScore {
    pub value: f64,
    pub lambda: f64,
    pub local_term: f64,
    pub country_term: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl BackgroundIndex {
    pub fn new(window: (i64, i64)) -> Result<Self> {
        if window.1 <= window.0 {
            return Err(Error::Config(format!("background window end {} is not after start {}", window.1, window.0)));
        }
        Ok(BackgroundIndex { window, ..Default::default() })
    }

    pub fn in_window(&self, t: i64) -> bool {
        self.window.0 <= t && t < self.window.1
    }

    /// Counts one post; posts outside the window are ignored.
    pub fn add(&mut self, p: &BackgroundPost) {
        if !self.in_window(p.created_at) {
            return;
        }
        let l = p.location();
        *self.counts.entry((l, p.topic.clone())).or_insert(0) += 1;
        *self.loc_counts.entry(l).or_insert(0) += 1;
        *self.country_counts.entry(p.country.clone()).or_insert(0) += 1;
        *self.country_topic_counts.entry((p.country.clone(), p.topic.clone())).or_insert(0) += 1;
        *self.country_loc_counts.entry((p.country.clone(), l)).or_insert(0) += 1;
    }

    fn get<K: Ord>(m: &BTreeMap<K, u64>, k: &K) -> u64 {
        m.get(k).copied().unwrap_or(0)
    }

    pub fn lambda(&self, country: &str, location: LocationId) -> f64 {
        ratio(
            Self::get(&self.country_loc_counts, &(country.to_owned(), location)),
            Self::get(&self.country_counts, &country.to_owned()),
        )
    }

    pub fn rarity(&self, location: LocationId, country: &str, topic: &str) -> RarityScore {
        let local_term = ratio(
            Self::get(&self.counts, &(location, topic.to_owned())),
            Self::get(&self.loc_counts, &location),
        );
        let country_term = ratio(
            Self::get(&self.country_topic_counts, &(country.to_owned(), topic.to_owned())),
            Self::get(&self.country_counts, &country.to_owned()),
        );
        let lambda = self.lambda(country, location);
        RarityScore { value: local_term + lambda * country_term, lambda, local_term, country_term }
    }

    /// Tab-separated count file, one count per line, tagged by kind.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("{FORMAT_HEADER}\nwindow\t{}\t{}\n", self.window.0, self.window.1);
        for ((l, s), n) in &self.counts {
            out.push_str(&format!("ls\t{l}\t{s}\t{n}\n"));
        }
        for (l, n) in &self.loc_counts {
            out.push_str(&format!("l\t{l}\t{n}\n"));
        }
        for (c, n) in &self.country_counts {
            out.push_str(&format!("L\t{c}\t{n}\n"));
        }
        for ((c, s), n) in &self.country_topic_counts {
            out.push_str(&format!("Ls\t{c}\t{s}\t{n}\n"));
        }
        for ((c, l), n) in &self.country_loc_counts {
            out.push_str(&format!("Ll\t{c}\t{l}\t{n}\n"));
        }
        out
    }

    pub fn from_tsv(content: &str) -> Result<Self> {
        let mut idx = BackgroundIndex::default();
        let mut window = None;
        for (i, line) in content.lines().enumerate() {
            if i == 0 {
                if line != FORMAT_HEADER {
                    return Err(Error::SchemaMismatch { expected: FORMAT_HEADER.into(), found: line.into() });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| Error::BadRecord { line: i + 1, reason };
            let cols: Vec<&str> = line.split('\t').collect();
            let n = |s: &str| s.parse::<u64>().map_err(|_| bad(format!("bad count `{s}`")));
            let loc = |s: &str| s.parse::<LocationId>().map_err(bad);
            match cols.as_slice() {
                ["window", a, b] => {
                    let t = |s: &str| s.parse::<i64>().map_err(|_| bad(format!("bad timestamp `{s}`")));
                    window = Some((t(a)?, t(b)?));
                }
                ["ls", l, s, c] => {
                    idx.counts.insert((loc(l)?, s.to_string()), n(c)?);
                }
                ["l", l, c] => {
                    idx.loc_counts.insert(loc(l)?, n(c)?);
                }
                ["L", k, c] => {
                    idx.country_counts.insert(k.to_string(), n(c)?);
                }
                ["Ls", k, s, c] => {
                    idx.country_topic_counts.insert((k.to_string(), s.to_string()), n(c)?);
                }
                ["Ll", k, l, c] => {
                    idx.country_loc_counts.insert((k.to_string(), loc(l)?), n(c)?);
                }
                _ => return Err(bad(format!("unrecognized line `{line}`"))),
            }
        }
        idx.window = window.ok_or_else(|| Error::Format("background file has no window line".into()))?;
        Ok(idx)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_tsv())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingInput(path.to_owned()),
            _ => Error::Io(e),
        })?;
        Self::from_tsv(&content)
    }
}

pub fn build_background(posts: &[BackgroundPost], window: (i64, i64)) -> Result<BackgroundIndex> {
    let mut idx = BackgroundIndex::new(window)?;
    for p in posts {
        idx.add(p);
    }
    Ok(idx)
}

pub fn lambda(country: &str, location: LocationId, idx: &BackgroundIndex) -> f64 {
    idx.lambda(country, location)
}

pub fn rarity(location: LocationId, country: &str, topic: &str, idx: &BackgroundIndex) -> RarityScore {
    idx.rarity(location, country, topic)
}
