//! Numeric-phrase extraction: digit numerals, spelled-out numbers, implicit
//! quantities ("a dozen") and soft quantities ("scores of", "thousands").

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

static SCAN_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?x)
        (?P<num>[$£€¥₹]?\d[\d,]*(?:\.\d+)?(?:[:/\-]\d+)*\p{L}*)
        | (?P<word>\p{L}+(?:['’-]\p{L}+)*)
        | (?P<punct>[^\s\p{L}\d])",
    )
    .expect("numeric scan regex")
});

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Num,
    Word,
    Punct,
}

#[derive(Debug, Clone)]
struct ScanToken<'a> {
    raw: &'a str,
    lower: String,
    kind: Kind,
    start: usize,
    end: usize,
}

fn scan(text: &str) -> Vec<ScanToken<'_>> {
    SCAN_RE
        .captures_iter(text)
        .filter_map(|c| {
            let (m, kind) = if let Some(m) = c.name("num") {
                (m, Kind::Num)
            } else if let Some(m) = c.name("word") {
                (m, Kind::Word)
            } else {
                (c.name("punct")?, Kind::Punct)
            };
            Some(ScanToken {
                raw: m.as_str(),
                lower: m.as_str().to_lowercase(),
                kind,
                start: m.start(),
                end: m.end(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoftQuantity {
    Several,
    Scores,
    Dozens,
    Hundreds,
    Thousands,
    Millions,
    Lakh,
    Crore,
}

impl SoftQuantity {
    /// Magnitude floor used as the numeric value of a soft expression.
    pub fn floor(self) -> f64 {
        match self {
            SoftQuantity::Several => 3.0,
            SoftQuantity::Scores => 20.0,
            SoftQuantity::Dozens => 24.0,
            SoftQuantity::Hundreds => 100.0,
            SoftQuantity::Thousands => 1_000.0,
            SoftQuantity::Millions => 1_000_000.0,
            SoftQuantity::Lakh => 100_000.0,
            SoftQuantity::Crore => 10_000_000.0,
        }
    }

    fn from_word(w: &str) -> Option<Self> {
        Some(match w {
            "several" => SoftQuantity::Several,
            "scores" => SoftQuantity::Scores,
            "dozens" => SoftQuantity::Dozens,
            "hundreds" => SoftQuantity::Hundreds,
            "thousands" => SoftQuantity::Thousands,
            "millions" => SoftQuantity::Millions,
            "lakhs" => SoftQuantity::Lakh,
            "crores" => SoftQuantity::Crore,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericPhrase {
    /// Byte offsets into the source text.
    pub span: (usize, usize),
    pub raw: String,
    pub value: Option<f64>,
    pub soft_quantity: Option<SoftQuantity>,
    pub context_tokens: Vec<String>,
}

/// Value of a single number word below one hundred.
pub fn small_word_value(w: &str) -> Option<u64> {
    Some(match w {
        "zero" => 0,
        "one" => 1,
        "two" => 2,
        "three" => 3,
        "four" => 4,
        "five" => 5,
        "six" => 6,
        "seven" => 7,
        "eight" => 8,
        "nine" => 9,
        "ten" => 10,
        "eleven" => 11,
        "twelve" => 12,
        "thirteen" => 13,
        "fourteen" => 14,
        "fifteen" => 15,
        "sixteen" => 16,
        "seventeen" => 17,
        "eighteen" => 18,
        "nineteen" => 19,
        "twenty" => 20,
        "thirty" => 30,
        "forty" => 40,
        "fifty" => 50,
        "sixty" => 60,
        "seventy" => 70,
        "eighty" => 80,
        "ninety" => 90,
        _ => return None,
    })
}

/// Value of a spelled ordinal up to "twentieth".
pub fn ordinal_word_value(w: &str) -> Option<u64> {
    const ORDINALS: [&str; 20] = [
        "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth",
        "tenth", "eleventh", "twelfth", "thirteenth", "fourteenth", "fifteenth", "sixteenth",
        "seventeenth", "eighteenth", "nineteenth", "twentieth",
    ];
    ORDINALS.iter().position(|o| *o == w).map(|i| i as u64 + 1)
}

fn scale_word(w: &str) -> Option<u64> {
    Some(match w {
        "hundred" => 100,
        "thousand" => 1_000,
        "million" => 1_000_000,
        "billion" => 1_000_000_000,
        "lakh" => 100_000,
        "crore" => 10_000_000,
        _ => return None,
    })
}

fn is_number_word(w: &str) -> bool {
    w.split('-').all(|p| small_word_value(p).is_some()) || scale_word(w).is_some() || w == "dozen"
}

/// Parse a run of English number words ("four thousand two hundred six",
/// "twenty-one", "one hundred and five"). Returns `None` when any word is
/// not part of a number.
pub fn parse_word_number<S: AsRef<str>>(words: &[S]) -> Option<u64> {
    let mut total: u64 = 0;
    let mut current: u64 = 0;
    let mut seen = false;
    for w in words {
        let w = w.as_ref();
        if w == "and" && seen {
            continue;
        }
        if let Some(scale) = scale_word(w) {
            let base = if current == 0 { 1 } else { current };
            if scale == 100 {
                current = base.checked_mul(100)?;
            } else {
                total = total.checked_add(base.checked_mul(scale)?)?;
                current = 0;
            }
        } else if w == "dozen" {
            let base = if current == 0 { 1 } else { current };
            current = base.checked_mul(12)?;
        } else {
            for part in w.split('-') {
                current = current.checked_add(small_word_value(part)?)?;
            }
        }
        seen = true;
    }
    seen.then_some(total + current)
}

fn suffix_multiplier(suffix: &str) -> f64 {
    match suffix {
        "k" => 1e3,
        "m" | "mm" | "mn" => 1e6,
        "b" | "bn" => 1e9,
        _ => 1.0,
    }
}

/// Leading numeric value of a digit token such as "$1,200", "06:02" or "120MM".
pub fn parse_digit_token(raw: &str) -> Option<f64> {
    let body = raw.trim_start_matches(['$', '£', '€', '¥', '₹']);
    let end = body
        .char_indices()
        .find(|(_, c)| !(c.is_ascii_digit() || *c == ',' || *c == '.'))
        .map_or(body.len(), |(i, _)| i);
    let (num, rest) = body.split_at(end);
    let mut parts = num.split('.');
    let int = parts.next()?.replace(',', "");
    let frac = parts.next();
    if parts.next().is_some() || int.is_empty() {
        return None;
    }
    let value: f64 = match frac {
        Some(f) if !f.is_empty() => format!("{int}.{f}").parse().ok()?,
        _ => int.parse().ok()?,
    };
    let suffix = rest.to_lowercase();
    let value = if suffix.chars().all(|c| c.is_alphabetic()) {
        value * suffix_multiplier(&suffix)
    } else {
        value
    };
    value.is_finite().then_some(value)
}

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "in", "on", "at", "of", "by", "for", "to", "from", "with", "and", "or",
    "but", "is", "are", "was", "were", "be", "been", "has", "have", "had", "as", "after",
    "before", "near", "into", "over", "under", "about", "this", "that", "these", "those",
    "it", "its", "their", "there", "here", "than", "then", "so", "if", "via", "per", "up",
    "down", "out", "off", "while", "during", "amid", "across", "since", "who", "which",
];

fn is_stopword(w: &str) -> bool {
    STOPWORDS.contains(&w)
}

/// Finds the noun-phrase context around a numeral.
pub trait Chunker {
    /// `tokens` are lowercased words and numerals of the sentence; `None`
    /// marks a hard boundary (punctuation). Returns the context words around
    /// `[start, end)`, excluding the numeral itself.
    fn context(&self, tokens: &[Option<&str>], start: usize, end: usize) -> Vec<String>;
}

/// Takes runs of content words on either side of the numeral, stopping at
/// punctuation, function words and other numerals.
#[derive(Debug, Clone, Copy)]
pub struct RuleChunker {
    pub left: usize,
    pub right: usize,
}

impl Default for RuleChunker {
    fn default() -> Self {
        RuleChunker { left: 2, right: 4 }
    }
}

impl Chunker for RuleChunker {
    fn context(&self, tokens: &[Option<&str>], start: usize, end: usize) -> Vec<String> {
        let content = |t: &Option<&str>| match t {
            Some(w) => !is_stopword(w) && !w.starts_with(|c: char| c.is_ascii_digit()) && !is_number_word(w),
            None => false,
        };
        let left: Vec<String> = tokens[..start]
            .iter()
            .rev()
            .take_while(|t| content(t))
            .take(self.left)
            .map(|t| t.unwrap().to_owned())
            .collect();
        let right = tokens[end..]
            .iter()
            .take_while(|t| content(t))
            .take(self.right)
            .map(|t| t.unwrap().to_owned());
        left.into_iter().rev().chain(right).collect()
    }
}

pub fn extract_numeric_phrases(text: &str) -> Vec<NumericPhrase> {
    extract_numeric_phrases_with(text, &RuleChunker::default())
}

pub fn extract_numeric_phrases_with(text: &str, chunker: &dyn Chunker) -> Vec<NumericPhrase> {
    let toks = scan(text);
    let words: Vec<Option<&str>> = toks
        .iter()
        .map(|t| (t.kind != Kind::Punct).then_some(t.lower.as_str()))
        .collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let Some((end, value, soft)) = match_phrase(&toks, i) else {
            i += 1;
            continue;
        };
        let (start_b, end_b) = (toks[i].start, toks[end - 1].end);
        out.push(NumericPhrase {
            span: (start_b, end_b),
            raw: text[start_b..end_b].to_owned(),
            value,
            soft_quantity: soft,
            context_tokens: chunker.context(&words, i, end),
        });
        i = end;
    }
    out
}

/// Tries to match a numeric phrase starting at token `i`; returns the end
/// token index, value and soft tag.
fn match_phrase(toks: &[ScanToken<'_>], i: usize) -> Option<(usize, Option<f64>, Option<SoftQuantity>)> {
    let t = &toks[i];
    let word_at = |j: usize| toks.get(j).filter(|t| t.kind == Kind::Word).map(|t| t.lower.as_str());
    match t.kind {
        Kind::Num => {
            let mut value = parse_digit_token(t.raw)?;
            let mut end = i + 1;
            if let Some(scale) = word_at(end).and_then(scale_word) {
                value *= scale as f64;
                end += 1;
            } else if word_at(end) == Some("dozen") {
                value *= 12.0;
                end += 1;
            }
            Some((end, Some(value), None))
        }
        Kind::Word => {
            let w = t.lower.as_str();
            if let Some(soft) = SoftQuantity::from_word(w) {
                let end = if word_at(i + 1) == Some("of") { i + 2 } else { i + 1 };
                return Some((end, Some(soft.floor()), Some(soft)));
            }
            if (w == "a" || w == "an") && word_at(i + 1).is_some_and(|n| n == "dozen" || scale_word(n).is_some()) {
                let mut end = i + 1;
                let mut run = vec!["one"];
                while let Some(n) = word_at(end).filter(|n| is_number_word(n) || and_follows_scale(n, &run)) {
                    run.push(n);
                    end += 1;
                }
                trim_trailing_and(&mut run, &mut end);
                return parse_word_number(&run).map(|v| (end, Some(v as f64), None));
            }
            if !is_number_word(w) || scale_word(w).is_some() || w == "dozen" {
                return None;
            }
            let mut end = i;
            let mut run = Vec::new();
            while let Some(n) = word_at(end).filter(|n| is_number_word(n) || and_follows_scale(n, &run)) {
                run.push(n);
                end += 1;
            }
            trim_trailing_and(&mut run, &mut end);
            parse_word_number(&run).map(|v| (end, Some(v as f64), None))
        }
        Kind::Punct => None,
    }
}

fn and_follows_scale(w: &str, run: &[&str]) -> bool {
    w == "and" && run.last().is_some_and(|p| scale_word(p).is_some())
}

fn trim_trailing_and(run: &mut Vec<&str>, end: &mut usize) {
    while run.last() == Some(&"and") {
        run.pop();
        *end -= 1;
    }
}
