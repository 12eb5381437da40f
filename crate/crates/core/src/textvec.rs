//! Tokenization, tf.idf weighting and sparse-vector similarity.
//!
//! Every text-similarity decision in the crate goes through this module:
//! headline matching, message linking, account typing against topic
//! centroids and per-post topic assignment.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const URL_TOKEN: &str = "__url__";
pub const USER_TOKEN: &str = "__user__";

static TOKEN_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?x)
        (?P<url>(?:https?://|www\.)\S+)
        | (?P<user>@[\p{L}\p{N}_]+)
        | (?P<word>[\p{L}\p{N}_]+(?:[.,][\p{N}]+)*)",
    )
    .expect("token regex")
});

/// One token with the byte span it was cut from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Lowercased tokens of a text in order of appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenList(pub Vec<String>);

impl TokenList {
    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl From<Vec<String>> for TokenList {
    fn from(v: Vec<String>) -> Self {
        TokenList(v)
    }
}

impl<'a> FromIterator<&'a str> for TokenList {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        TokenList(iter.into_iter().map(str::to_owned).collect())
    }
}

/// Tokenize keeping byte spans into `text`.
///
/// URLs become [`URL_TOKEN`], `@mentions` become [`USER_TOKEN`], the `#` of a
/// hashtag is dropped with the rest of the punctuation. Underscores are word
/// characters so masked feature names survive as single tokens.
pub fn tokenize_spans(text: &str) -> Vec<Token> {
    TOKEN_RE
        .captures_iter(text)
        .filter_map(|caps| {
            let (m, token) = if let Some(m) = caps.name("url") {
                (m, URL_TOKEN.to_owned())
            } else if let Some(m) = caps.name("user") {
                (m, USER_TOKEN.to_owned())
            } else {
                let m = caps.name("word")?;
                (m, m.as_str().to_lowercase())
            };
            (!token.is_empty()).then(|| Token {
                text: token,
                start: m.start(),
                end: m.end(),
            })
        })
        .collect()
}

pub fn tokenize(text: &str) -> TokenList {
    TokenList(tokenize_spans(text).into_iter().map(|t| t.text).collect())
}

/// Sparse real vector keyed by term. Zero weights are never stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: BTreeMap<String, f64>,
    norm: f64,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries<I, K>(entries: I) -> Self
    where
        I: IntoIterator<Item = (K, f64)>,
        K: Into<String>,
    {
        let entries: BTreeMap<String, f64> = entries
            .into_iter()
            .map(|(k, v)| (k.into(), v))
            .filter(|(_, v)| *v != 0.0 && v.is_finite())
            .collect();
        let norm = entries.values().map(|v| v * v).sum::<f64>().sqrt();
        SparseVector { entries, norm }
    }

    pub fn get(&self, term: &str) -> f64 {
        self.entries.get(term).copied().unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .entries
            .iter()
            .filter_map(|(k, v)| large.entries.get(k).map(|w| v * w))
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector::from_entries(self.iter().map(|(k, v)| (k, v * factor)))
    }

    /// Unit-length copy; the zero vector stays zero.
    pub fn normalized(&self) -> SparseVector {
        if self.norm == 0.0 {
            self.clone()
        } else {
            self.scaled(1.0 / self.norm)
        }
    }
}

/// Document-frequency statistics over a labelled document collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    doc_count: usize,
    doc_ids: Vec<String>,
    doc_freq: BTreeMap<String, usize>,
}

const TFIDF_FORMAT: &str = "newsvalue/tfidf";
const TFIDF_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TfidfFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: TfidfModel,
}

pub fn fit_tfidf<S: AsRef<str>>(documents: &[(S, TokenList)]) -> Result<TfidfModel> {
    if documents.is_empty() {
        return Err(Error::NoDocuments);
    }
    let mut doc_freq = BTreeMap::new();
    for (_, tokens) in documents {
        let unique: BTreeSet<&str> = tokens.iter().collect();
        for term in unique {
            *doc_freq.entry(term.to_owned()).or_insert(0) += 1;
        }
    }
    Ok(TfidfModel {
        doc_count: documents.len(),
        doc_ids: documents.iter().map(|(l, _)| l.as_ref().to_owned()).collect(),
        doc_freq,
    })
}

impl TfidfModel {
    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    pub fn vocabulary_len(&self) -> usize {
        self.doc_freq.len()
    }

    /// Smoothed inverse document frequency, `ln((1+N)/(1+df)) + 1`.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_count as f64;
        let df = self.doc_freq(term) as f64;
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }

    /// Raw-count tf times smoothed idf.
    pub fn vectorize(&self, tokens: &TokenList) -> SparseVector {
        let mut tf: BTreeMap<&str, usize> = BTreeMap::new();
        for t in tokens.iter() {
            *tf.entry(t).or_insert(0) += 1;
        }
        SparseVector::from_entries(tf.into_iter().map(|(t, c)| (t, c as f64 * self.idf(t))))
    }

    pub fn vectorize_text(&self, text: &str) -> SparseVector {
        self.vectorize(&tokenize(text))
    }

    pub fn to_json(&self) -> String {
        let file = TfidfFile {
            format: TFIDF_FORMAT.into(),
            version: TFIDF_VERSION,
            model: self.clone(),
        };
        serde_json::to_string_pretty(&file).expect("tfidf model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: TfidfFile = serde_json::from_str(s)?;
        if file.format != TFIDF_FORMAT || file.version != TFIDF_VERSION {
            return Err(Error::Format(format!("{} v{}", file.format, file.version)));
        }
        let m = file.model;
        if m.doc_count == 0 || m.doc_freq.values().any(|&df| df == 0 || df > m.doc_count) {
            return Err(Error::Format("document frequencies out of range".into()));
        }
        Ok(m)
    }
}

/// Cosine similarity; zero when either side has zero norm.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return 0.0;
    }
    (a.dot(b) / (a.norm() * b.norm())).clamp(0.0, 1.0)
}

/// Per-term mean over the inputs, missing terms counted as zero.
pub fn centroid(vectors: &[SparseVector]) -> Result<SparseVector> {
    if vectors.is_empty() {
        return Err(Error::NoVectors);
    }
    let mut sums: BTreeMap<&str, f64> = BTreeMap::new();
    for v in vectors {
        for (k, w) in v.iter() {
            *sums.entry(k).or_insert(0.0) += w;
        }
    }
    let n = vectors.len() as f64;
    Ok(SparseVector::from_entries(sums.into_iter().map(|(k, s)| (k, s / n))))
}

#[derive(Debug, Clone, Default)]
pub struct CentroidSet {
    centroids: BTreeMap<String, SparseVector>,
}

impl CentroidSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: impl Into<String>, centroid: SparseVector) -> Result<()> {
        let label = label.into();
        if centroid.norm() == 0.0 {
            return Err(Error::ZeroCentroid(label));
        }
        self.centroids.insert(label, centroid);
        Ok(())
    }

    pub fn get(&self, label: &str) -> Option<&SparseVector> {
        self.centroids.get(label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.centroids.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }
}

/// Label of the most similar centroid. Ties go to the lexicographically
/// smallest label.
pub fn nearest_centroid(v: &SparseVector, cs: &CentroidSet) -> Result<(String, f64)> {
    let mut best: Option<(&str, f64)> = None;
    // BTreeMap iteration is already lexicographic, so strict > keeps the first.
    for (label, c) in &cs.centroids {
        let sim = cosine(v, c);
        if best.is_none_or(|(_, b)| sim > b) {
            best = Some((label, sim));
        }
    }
    best.map(|(l, s)| (l.to_owned(), s)).ok_or(Error::NoCentroids)
}
