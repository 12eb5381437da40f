//! Linear models over named sparse features, trained by stochastic
//! (sub)gradient descent on the hinge loss.
//!
//! Two trainers share the [`LinearModel`] representation:
//! * [`train_one_vs_rest`]: constant learning rate with an L2 penalty, one
//!   head per class; used for the numeric-impact classifier.
//! * [`train_pegasos`]: a binary linear SVM with the `1/(λt)` step schedule;
//!   used for the news-value model.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type FeatureMap = BTreeMap<String, f64>;

const MODEL_FORMAT: &str = "newsvalue/linear-model";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearHead {
    pub weights: BTreeMap<String, f64>,
    pub bias: f64,
}

impl LinearHead {
    pub fn score(&self, x: &FeatureMap) -> f64 {
        self.bias
            + x.iter()
                .filter_map(|(k, v)| self.weights.get(k).map(|w| w * v))
                .sum::<f64>()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub algorithm: String,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    /// Training objective after each epoch.
    pub objective: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// Identifies the feature layout the model was trained on.
    pub schema: String,
    pub classes: Vec<String>,
    pub heads: Vec<LinearHead>,
    pub train_meta: TrainMeta,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: LinearModel,
}

impl LinearModel {
    pub fn is_fitted(&self) -> bool {
        !self.heads.is_empty() && self.heads.len() == self.classes.len()
    }

    pub fn scores(&self, x: &FeatureMap) -> Result<Vec<f64>> {
        if !self.is_fitted() {
            return Err(Error::ModelNotFitted);
        }
        Ok(self.heads.iter().map(|h| h.score(x)).collect())
    }

    /// Index of the highest-scoring class; ties go to the earlier class.
    pub fn argmax(&self, x: &FeatureMap) -> Result<usize> {
        let scores = self.scores(x)?;
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        Ok(best)
    }

    /// Decision value of a binary model.
    pub fn decision(&self, x: &FeatureMap) -> Result<f64> {
        Ok(self.scores(x)?[0])
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::Format(format!("{} v{}", file.format, file.version)));
        }
        let m = file.model;
        let finite = m
            .heads
            .iter()
            .all(|h| h.bias.is_finite() && h.weights.values().all(|w| w.is_finite()));
        if !finite || m.classes.len() != m.heads.len() || m.classes.is_empty() {
            return Err(Error::Format("malformed linear model".into()));
        }
        Ok(m)
    }
}

/// Feature maps re-indexed to dense columns for training.
struct Indexed {
    names: Vec<String>,
    rows: Vec<Vec<(usize, f64)>>,
}

fn index_rows(rows: &[&FeatureMap]) -> Indexed {
    let mut vocab: BTreeMap<&str, usize> = BTreeMap::new();
    for r in rows {
        for k in r.keys() {
            vocab.entry(k).or_insert(0);
        }
    }
    for (i, v) in vocab.values_mut().enumerate() {
        *v = i;
    }
    let rows = rows
        .iter()
        .map(|r| {
            r.iter()
                .filter(|(_, v)| **v != 0.0)
                .map(|(k, v)| (vocab[k.as_str()], *v))
                .collect()
        })
        .collect();
    Indexed {
        names: vocab.keys().map(|k| (*k).to_owned()).collect(),
        rows,
    }
}

fn dot(w: &[f64], x: &[(usize, f64)]) -> f64 {
    x.iter().map(|(i, v)| w[*i] * v).sum()
}

fn to_weights(names: &[String], w: &[f64]) -> BTreeMap<String, f64> {
    names
        .iter()
        .zip(w)
        .filter(|(_, v)| **v != 0.0)
        .map(|(n, v)| (n.clone(), *v))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SgdConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            epochs: 50,
            learning_rate: 0.01,
            l2: 1e-4,
            seed: 42,
        }
    }
}

/// One-vs-rest hinge-loss classifiers trained with plain SGD.
///
/// `classes` fixes the class order (and thus tie-breaking). Every class must
/// be a label of at least one row and at least two classes must occur.
pub fn train_one_vs_rest(
    rows: &[(FeatureMap, String)],
    classes: &[String],
    schema: &str,
    config: &SgdConfig,
) -> Result<LinearModel> {
    let present: std::collections::BTreeSet<&str> = rows.iter().map(|(_, l)| l.as_str()).collect();
    if present.len() < 2 {
        return Err(Error::DegenerateLabels(format!(
            "{} distinct class(es) in training data",
            present.len()
        )));
    }
    if let Some(unknown) = present.iter().find(|l| !classes.iter().any(|c| c == *l)) {
        return Err(Error::DegenerateLabels(format!("unknown class `{unknown}`")));
    }
    let data = index_rows(&rows.iter().map(|(x, _)| x).collect::<Vec<_>>());
    let dim = data.names.len();
    let n = rows.len();
    let (lr, l2) = (config.learning_rate, config.l2);

    let mut heads = Vec::with_capacity(classes.len());
    let mut objective = vec![0.0; config.epochs];
    for (k, class) in classes.iter().enumerate() {
        let y: Vec<f64> = rows
            .iter()
            .map(|(_, l)| if l == class { 1.0 } else { -1.0 })
            .collect();
        let mut w = vec![0.0; dim];
        let mut b = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(k as u64));
        let mut order: Vec<usize> = (0..n).collect();
        for epoch_obj in objective.iter_mut() {
            order.shuffle(&mut rng);
            for &i in &order {
                let x = &data.rows[i];
                let margin = y[i] * (dot(&w, x) + b);
                let decay = 1.0 - lr * l2;
                w.iter_mut().for_each(|v| *v *= decay);
                if margin < 1.0 {
                    for (j, v) in x {
                        w[*j] += lr * y[i] * v;
                    }
                    b += lr * y[i];
                }
            }
            let hinge: f64 = (0..n)
                .map(|i| (1.0 - y[i] * (dot(&w, &data.rows[i]) + b)).max(0.0))
                .sum::<f64>()
                / n as f64;
            *epoch_obj += hinge + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
        }
        heads.push(LinearHead {
            weights: to_weights(&data.names, &w),
            bias: b,
        });
    }
    Ok(LinearModel {
        schema: schema.to_owned(),
        classes: classes.to_vec(),
        heads,
        train_meta: TrainMeta {
            algorithm: "sgd-hinge-ovr".into(),
            epochs: config.epochs,
            learning_rate: lr,
            l2,
            seed: config.seed,
            objective,
        },
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    None,
    /// Each class weighted by `n / (2 n_class)`.
    #[default]
    Balanced,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmConfig {
    pub epochs: usize,
    /// Soft-margin constant; the regularization strength is `1 / (C n)`.
    pub c: f64,
    pub seed: u64,
    pub class_weighting: ClassWeighting,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            epochs: 100,
            c: 1.0,
            seed: 42,
            class_weighting: ClassWeighting::Balanced,
        }
    }
}

pub const POSITIVE_CLASS: &str = "matched";

/// Binary linear SVM trained with Pegasos-style stochastic subgradient
/// steps `η_t = 1/(λ t)`. The bias is learned as the weight of a constant
/// feature and is regularized with the rest.
pub fn train_pegasos(rows: &[(&FeatureMap, bool)], schema: &str, config: &SvmConfig) -> Result<LinearModel> {
    let n = rows.len();
    let pos = rows.iter().filter(|(_, y)| *y).count();
    if pos == 0 || pos == n {
        return Err(Error::DegenerateLabels(format!("{pos} positive of {n} examples")));
    }
    let data = index_rows(&rows.iter().map(|(x, _)| *x).collect::<Vec<_>>());
    let bias_col = data.names.len();
    let dim = bias_col + 1;
    let xs: Vec<Vec<(usize, f64)>> = data
        .rows
        .into_iter()
        .map(|mut r| {
            r.push((bias_col, 1.0));
            r
        })
        .collect();
    let y: Vec<f64> = rows.iter().map(|(_, l)| if *l { 1.0 } else { -1.0 }).collect();
    let cw = |label: f64| match config.class_weighting {
        ClassWeighting::None => 1.0,
        ClassWeighting::Balanced => {
            let count = if label > 0.0 { pos } else { n - pos };
            n as f64 / (2.0 * count as f64)
        }
    };
    let (w_pos, w_neg) = (cw(1.0), cw(-1.0));
    let lambda = 1.0 / (config.c * n as f64);

    // w = scale * v keeps the shrink step O(1)
    let mut v = vec![0.0; dim];
    let mut scale = 1.0;
    let mut t: u64 = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut objective = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let margin = y[i] * scale * dot(&v, &xs[i]);
            let shrink = 1.0 - eta * lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|x| *x = 0.0);
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let c = if y[i] > 0.0 { w_pos } else { w_neg };
                let step = eta * c * y[i] / scale;
                for (j, x) in &xs[i] {
                    v[*j] += step * x;
                }
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|x| *x *= scale);
                scale = 1.0;
            }
        }
        let w: Vec<f64> = v.iter().map(|x| x * scale).collect();
        objective.push(svm_objective(&w, &xs, &y, lambda, w_pos, w_neg));
    }

    let w: Vec<f64> = v.iter().map(|x| x * scale).collect();
    Ok(LinearModel {
        schema: schema.to_owned(),
        classes: vec![POSITIVE_CLASS.to_owned()],
        heads: vec![LinearHead {
            weights: to_weights(&data.names, &w[..bias_col]),
            bias: w[bias_col],
        }],
        train_meta: TrainMeta {
            algorithm: "pegasos-hinge".into(),
            epochs: config.epochs,
            learning_rate: 0.0,
            l2: lambda,
            seed: config.seed,
            objective,
        },
    })
}

fn svm_objective(w: &[f64], xs: &[Vec<(usize, f64)>], y: &[f64], lambda: f64, w_pos: f64, w_neg: f64) -> f64 {
    let n = xs.len() as f64;
    let loss: f64 = xs
        .iter()
        .zip(y)
        .map(|(x, &yi)| {
            let c = if yi > 0.0 { w_pos } else { w_neg };
            c * (1.0 - yi * dot(w, x)).max(0.0)
        })
        .sum();
    0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>() + loss / n
}
