//! Impact indicators: numeric phrases classified as date/time, address,
//! human impact or financial impact, and physical-site terms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::{train_one_vs_rest, FeatureMap, LinearModel, SgdConfig};
use crate::numeric::{extract_numeric_phrases, NumericPhrase};
use crate::records::Post;
use crate::taxonomy::Taxonomy;
use crate::textvec::{fit_tfidf, tokenize, SparseVector, TfidfModel, TokenList};

pub const HUMAN_IMPACT_TERMS: &str = include_str!("../data/human_impact.txt");
pub const ADDRESS_TERMS: &str = include_str!("../data/address_terms.txt");
pub const FINANCIAL_TERMS: &str = include_str!("../data/financial_terms.txt");
pub const SITE_TERMS: &str = include_str!("../data/site_terms.txt");
pub const IMPACT_PHRASES: &str = include_str!("../data/impact_phrases.tsv");

pub const IMPACT_SCHEMA: &str = "impact-features/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpactLabel {
    DateTime,
    Address,
    HumanImpact,
    FinancialImpact,
}

impl ImpactLabel {
    /// Fixed class order; also the tie-breaking order.
    pub const ALL: [ImpactLabel; 4] = [
        ImpactLabel::DateTime,
        ImpactLabel::Address,
        ImpactLabel::HumanImpact,
        ImpactLabel::FinancialImpact,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ImpactLabel::DateTime => "date_time",
            ImpactLabel::Address => "address",
            ImpactLabel::HumanImpact => "human_impact",
            ImpactLabel::FinancialImpact => "financial_impact",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == s)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImpactFeatureRow {
    pub mixed_alnum: bool,
    pub currency_symbol: bool,
    pub monetary_suffix: bool,
    pub timestamp_symbol: bool,
    pub timezone_or_period: bool,
    pub human_terms_hits: u32,
    pub address_terms_hits: u32,
    /// Max category weight of any tweet term for address, human impact and
    /// financial impact, in that order.
    pub tfidf_triple: [f64; 3],
}

impl ImpactFeatureRow {
    pub fn to_features(&self) -> FeatureMap {
        let b = |v: bool| if v { 1.0 } else { 0.0 };
        [
            ("mixed_alnum", b(self.mixed_alnum)),
            ("currency_symbol", b(self.currency_symbol)),
            ("monetary_suffix", b(self.monetary_suffix)),
            ("timestamp_symbol", b(self.timestamp_symbol)),
            ("timezone_or_period", b(self.timezone_or_period)),
            ("human_terms_hits", self.human_terms_hits as f64),
            ("address_terms_hits", self.address_terms_hits as f64),
            ("tfidf_address", self.tfidf_triple[0]),
            ("tfidf_human", self.tfidf_triple[1]),
            ("tfidf_financial", self.tfidf_triple[2]),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v))
        .collect()
    }
}

/// tf.idf over three category documents (address, human impact, financial
/// impact), with each document kept as a unit-length vector.
#[derive(Debug, Clone)]
pub struct CategoryModel {
    pub tfidf: TfidfModel,
    docs: [SparseVector; 3],
}

impl CategoryModel {
    pub fn fit(address: TokenList, human: TokenList, financial: TokenList) -> Result<Self> {
        let docs = [("address", address), ("human_impact", human), ("financial_impact", financial)];
        let tfidf = fit_tfidf(&docs)?;
        let [a, h, f] = docs.map(|(_, t)| tfidf.vectorize(&t).normalized());
        Ok(CategoryModel { tfidf, docs: [a, h, f] })
    }

    fn from_taxonomies(address: &Taxonomy, human: &Taxonomy, financial: &Taxonomy) -> Result<Self> {
        let doc = |t: &Taxonomy| -> TokenList { t.phrases().flat_map(|p| tokenize(&p).0).collect::<Vec<_>>().into() };
        Self::fit(doc(address), doc(human), doc(financial))
    }

    pub fn triple(&self, tokens: &TokenList) -> [f64; 3] {
        self.docs.each_ref().map(|d| tokens.iter().map(|t| d.get(t)).fold(0.0, f64::max))
    }
}

/// Taxonomies and category statistics needed to featurize numeric phrases.
#[derive(Debug, Clone)]
pub struct ImpactContext {
    pub human: Taxonomy,
    pub address: Taxonomy,
    pub financial: Taxonomy,
    pub sites: Taxonomy,
    pub categories: CategoryModel,
}

impl ImpactContext {
    pub fn new(human: Taxonomy, address: Taxonomy, financial: Taxonomy, sites: Taxonomy) -> Result<Self> {
        let categories = CategoryModel::from_taxonomies(&address, &human, &financial)?;
        Ok(ImpactContext { human, address, financial, sites, categories })
    }

    pub fn shipped() -> Self {
        let t = |name, content| Taxonomy::parse(name, content).expect("shipped taxonomy");
        Self::new(
            t("human_impact", HUMAN_IMPACT_TERMS),
            t("address_terms", ADDRESS_TERMS),
            t("financial_terms", FINANCIAL_TERMS),
            t("site_terms", SITE_TERMS),
        )
        .expect("shipped impact context")
    }
}

const CURRENCY: &[char] = &['$', '£', '€', '¥', '₹'];
const MONEY_SUFFIXES: &[&str] = &["k", "m", "mm", "mn", "b", "bn"];
const TIME_MARKS: &[&str] = &[
    "am", "pm", "a.m", "p.m", "utc", "gmt", "edt", "est", "cdt", "cst", "mdt", "mst", "pdt",
    "pst", "bst", "cet", "cest", "ist", "jst", "aest", "hrs", "hours", "local",
];

fn mixes_digits_and_letters(s: &str) -> bool {
    s.chars().any(|c| c.is_ascii_digit()) && s.chars().any(char::is_alphabetic)
}

fn alpha_suffix(raw: &str) -> String {
    raw.trim_end_matches(|c: char| !c.is_alphanumeric())
        .rsplit(|c: char| c.is_ascii_digit())
        .next()
        .unwrap_or("")
        .to_lowercase()
}

pub fn impact_features(p: &NumericPhrase, text: &str, ctx: &ImpactContext) -> ImpactFeatureRow {
    let (start, end) = p.span;
    let before = text.get(..start).unwrap_or("");
    let after = text.get(end..).unwrap_or("");
    let prev_char = before.chars().next_back();
    let next_char = after.chars().next();
    let next_word = after
        .trim_start()
        .split(|c: char| c.is_whitespace() || (c != '.' && !c.is_alphanumeric()))
        .next()
        .unwrap_or("")
        .trim_end_matches('.')
        .to_lowercase();
    let suffix = alpha_suffix(&p.raw);

    let currency_symbol = p.raw.contains(CURRENCY)
        || before.trim_end().ends_with(CURRENCY)
        || after.trim_start().starts_with(CURRENCY);
    let monetary_suffix = MONEY_SUFFIXES.contains(&suffix.as_str()) || MONEY_SUFFIXES.contains(&next_word.as_str());
    let digit_sep = |c: Option<char>| matches!(c, Some(':' | '-' | '/'));
    let inner_sep = p.raw.char_indices().any(|(i, c)| {
        matches!(c, ':' | '-' | '/')
            && p.raw[..i].ends_with(|d: char| d.is_ascii_digit())
            && p.raw[i + 1..].starts_with(|d: char| d.is_ascii_digit())
    });
    let timestamp_symbol = inner_sep
        || (digit_sep(prev_char) && p.raw.starts_with(|c: char| c.is_ascii_digit()))
        || (digit_sep(next_char) && after[1..].starts_with(|c: char| c.is_ascii_digit()));
    let timezone_or_period = TIME_MARKS.contains(&suffix.as_str()) || TIME_MARKS.contains(&next_word.as_str());

    let mixed_alnum = p.raw.split_whitespace().any(mixes_digits_and_letters)
        || p.context_tokens.iter().any(|t| mixes_digits_and_letters(t));
    let human_terms_hits = ctx.human.find_all(&p.context_tokens).len() as u32;
    let address_terms_hits = ctx.address.find_all(&p.context_tokens).len() as u32;

    ImpactFeatureRow {
        mixed_alnum,
        currency_symbol,
        monetary_suffix,
        timestamp_symbol,
        timezone_or_period,
        human_terms_hits,
        address_terms_hits,
        tfidf_triple: ctx.categories.triple(&tokenize(text)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: ImpactLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone)]
pub struct ImpactTraining {
    pub model: LinearModel,
    /// Per-class scores on the training rows.
    pub report: Vec<ClassMetrics>,
}

fn class_names() -> Vec<String> {
    ImpactLabel::ALL.iter().map(|l| l.as_str().to_owned()).collect()
}

pub fn train_impact_classifier(rows: &[(ImpactFeatureRow, ImpactLabel)], config: &SgdConfig) -> Result<ImpactTraining> {
    let data: Vec<(FeatureMap, String)> = rows
        .iter()
        .map(|(r, l)| (r.to_features(), l.as_str().to_owned()))
        .collect();
    let model = train_one_vs_rest(&data, &class_names(), IMPACT_SCHEMA, config)?;
    let predicted: Vec<ImpactLabel> = rows
        .iter()
        .map(|(r, _)| classify_row(r, &model))
        .collect::<Result<_>>()?;
    let gold: Vec<ImpactLabel> = rows.iter().map(|(_, l)| *l).collect();
    Ok(ImpactTraining { model, report: class_metrics(&gold, &predicted) })
}

pub fn class_metrics(gold: &[ImpactLabel], predicted: &[ImpactLabel]) -> Vec<ClassMetrics> {
    ImpactLabel::ALL
        .iter()
        .map(|&label| {
            let tp = gold.iter().zip(predicted).filter(|(g, p)| **g == label && **p == label).count();
            let fp = gold.iter().zip(predicted).filter(|(g, p)| **g != label && **p == label).count();
            let support = gold.iter().filter(|g| **g == label).count();
            let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
            let recall = if support == 0 { 0.0 } else { tp as f64 / support as f64 };
            let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
            ClassMetrics { label, precision, recall, f1, support }
        })
        .collect()
}

/// Mean F1 over classes that occur in the gold labels.
pub fn macro_f1(metrics: &[ClassMetrics]) -> f64 {
    let present: Vec<&ClassMetrics> = metrics.iter().filter(|m| m.support > 0).collect();
    if present.is_empty() {
        return 0.0;
    }
    present.iter().map(|m| m.f1).sum::<f64>() / present.len() as f64
}

pub fn classify_row(row: &ImpactFeatureRow, model: &LinearModel) -> Result<ImpactLabel> {
    let idx = model.argmax(&row.to_features())?;
    ImpactLabel::parse(&model.classes[idx]).ok_or_else(|| Error::SchemaMismatch {
        expected: IMPACT_SCHEMA.into(),
        found: model.classes[idx].clone(),
    })
}

pub fn classify_impact(p: &NumericPhrase, text: &str, ctx: &ImpactContext, model: &LinearModel) -> Result<ImpactLabel> {
    classify_row(&impact_features(p, text, ctx), model)
}

/// Site nouns ("refinery", "bridge") in text order.
pub fn extract_site_terms(tokens: &TokenList, sites: &Taxonomy) -> Vec<String> {
    sites.find_all(tokens.as_slice()).into_iter().map(|m| m.phrase).collect()
}

/// Frequency-ranked context words of numeric phrases across a corpus, cut
/// to the top five percent of distinct words (at least one). The result is
/// a candidate list for manual review.
pub fn build_human_impact_taxonomy(corpus: &[Post]) -> Result<Vec<(String, usize)>> {
    if corpus.is_empty() {
        return Err(Error::NoDocuments);
    }
    let mut freq: BTreeMap<String, usize> = BTreeMap::new();
    for post in corpus {
        for p in extract_numeric_phrases(&post.text) {
            for t in p.context_tokens {
                if !t.chars().any(|c| c.is_ascii_digit()) {
                    *freq.entry(t).or_insert(0) += 1;
                }
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let keep = (ranked.len() as f64 * 0.05).ceil() as usize;
    ranked.truncate(keep);
    Ok(ranked)
}

/// A numeric phrase with a gold label, as stored in phrase datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPhrase {
    pub text: String,
    pub span: (usize, usize),
    pub label: ImpactLabel,
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some(o) => out.push(o),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Tab-separated `text, start, end, label` rows; `#` lines are comments.
/// Offsets are byte offsets into the unescaped text.
pub fn parse_labeled_phrases(content: &str) -> Result<Vec<LabeledPhrase>> {
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: String| Error::BadRecord { line: i + 1, reason };
        let cols: Vec<&str> = line.split('\t').collect();
        let [text, start, end, label] = cols.as_slice() else {
            return Err(bad(format!("expected 4 columns, got {}", cols.len())));
        };
        let text = unescape(text);
        let start: usize = start.parse().map_err(|_| bad("bad start offset".into()))?;
        let end: usize = end.parse().map_err(|_| bad("bad end offset".into()))?;
        if start >= end || text.get(start..end).is_none() {
            return Err(bad("span outside text".into()));
        }
        let label = ImpactLabel::parse(label).ok_or_else(|| bad(format!("unknown label `{label}`")))?;
        out.push(LabeledPhrase { text, span: (start, end), label });
    }
    Ok(out)
}

pub fn format_labeled_phrases(rows: &[LabeledPhrase]) -> String {
    let mut out = String::from("# text\tstart\tend\tlabel\n");
    for r in rows {
        out.push_str(&format!("{}\t{}\t{}\t{}\n", escape(&r.text), r.span.0, r.span.1, r.label.as_str()));
    }
    out
}

impl LabeledPhrase {
    /// The extracted numeric phrase overlapping this row's span.
    pub fn phrase(&self) -> Option<NumericPhrase> {
        extract_numeric_phrases(&self.text)
            .into_iter()
            .find(|p| p.span.0 < self.span.1 && self.span.0 < p.span.1)
    }

    pub fn feature_row(&self, ctx: &ImpactContext) -> Option<ImpactFeatureRow> {
        self.phrase().map(|p| impact_features(&p, &self.text, ctx))
    }
}

/// Impact classifier trained on the shipped labelled phrases.
pub fn shipped_impact_model(ctx: &ImpactContext) -> LinearModel {
    let rows: Vec<(ImpactFeatureRow, ImpactLabel)> = parse_labeled_phrases(IMPACT_PHRASES)
        .expect("shipped phrases parse")
        .iter()
        .filter_map(|r| Some((r.feature_row(ctx)?, r.label)))
        .collect();
    train_impact_classifier(&rows, &SgdConfig::default())
        .expect("shipped phrases cover all classes")
        .model
}
