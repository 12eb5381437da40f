//! Phrase lists loaded from plain-text data files and matched against
//! token streams by longest match.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::textvec::{tokenize, Token};

pub const MAX_PHRASE_TOKENS: usize = 4;

/// A named set of lowercase phrases of one to four tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    name: String,
    phrases: BTreeSet<Vec<String>>,
    longest: usize,
}

/// A phrase occurrence, as token indices `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseMatch {
    pub start: usize,
    pub end: usize,
    pub phrase: String,
}

impl Taxonomy {
    pub fn from_phrases<I, S>(name: &str, phrases: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let lines: Vec<String> = phrases.into_iter().map(|p| p.as_ref().to_owned()).collect();
        Self::parse(name, &lines.join("\n"))
    }

    /// One phrase per line; blank lines and `#` comments are skipped.
    pub fn parse(name: &str, content: &str) -> Result<Self> {
        let mut phrases = BTreeSet::new();
        for (i, line) in content.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens = tokenize(line).0;
            let bad = |reason: &str| Error::BadTaxonomy {
                name: name.to_owned(),
                line: i + 1,
                reason: reason.to_owned(),
            };
            if tokens.is_empty() {
                return Err(bad("phrase has no word characters"));
            }
            if tokens.len() > MAX_PHRASE_TOKENS {
                return Err(bad("phrase longer than four tokens"));
            }
            phrases.insert(tokens);
        }
        if phrases.is_empty() {
            return Err(Error::BadTaxonomy {
                name: name.to_owned(),
                line: 0,
                reason: "taxonomy is empty".into(),
            });
        }
        let longest = phrases.iter().map(Vec::len).max().unwrap_or(1);
        Ok(Taxonomy {
            name: name.to_owned(),
            phrases,
            longest,
        })
    }

    pub fn load(name: &str, path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path)?;
        Self::parse(name, &content)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn phrases(&self) -> impl Iterator<Item = String> + '_ {
        self.phrases.iter().map(|p| p.join(" "))
    }

    pub fn contains(&self, phrase: &str) -> bool {
        self.phrases.contains(&tokenize(phrase).0)
    }

    /// Non-overlapping matches scanning left to right, taking the longest
    /// phrase at each position.
    pub fn find_all<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<PhraseMatch> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let max = self.longest.min(tokens.len() - i);
            let hit = (1..=max).rev().find_map(|len| {
                let window: Vec<String> =
                    tokens[i..i + len].iter().map(|t| t.as_ref().to_owned()).collect();
                self.phrases.contains(&window).then_some((len, window))
            });
            match hit {
                Some((len, window)) => {
                    out.push(PhraseMatch {
                        start: i,
                        end: i + len,
                        phrase: window.join(" "),
                    });
                    i += len;
                }
                None => i += 1,
            }
        }
        out
    }

    /// Matches over spanned tokens, returned as byte spans into the source.
    pub fn find_spans(&self, tokens: &[Token]) -> Vec<(usize, usize, String)> {
        let words: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
        self.find_all(&words)
            .into_iter()
            .map(|m| (tokens[m.start].start, tokens[m.end - 1].end, m.phrase))
            .collect()
    }
}
