//! Classifiers over feature vectors and threshold calibration.
//!
//! The positive class is [`Label::Correct`]: a model outputs the probability
//! that a submission is correct, and a false positive is an incorrect
//! submission scored at or above the threshold.

mod calibrate;
mod gbt;
mod knn;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;

pub use calibrate::{
    pick_threshold, stratified_split, train_and_get_thresh, CalibratedModel, CalibrationStatus,
    ALL_TO_CHECKER, VALIDATION_FRACTION,
};
pub use gbt::{GbtModel, GbtParams};
pub use knn::KnnModel;
pub use tree::{Node, TreeModel, TreeSearch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Correct,
    Incorrect,
}

impl Label {
    pub fn is_correct(self) -> bool {
        self == Label::Correct
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Label::Correct => "correct",
            Label::Incorrect => "incorrect",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: FeatureVector,
    pub label: Label,
}

impl LabeledSample {
    pub fn new(features: FeatureVector, label: Label) -> Self {
        LabeledSample { features, label }
    }
}

pub const DEFAULT_K: usize = 6;
pub const DEFAULT_TREE_TRIALS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelConfig {
    Knn { k: usize },
    Tree(TreeSearch),
    Gbt(GbtParams),
}

impl ModelConfig {
    pub fn knn() -> Self {
        ModelConfig::Knn { k: DEFAULT_K }
    }

    pub fn tree() -> Self {
        ModelConfig::Tree(TreeSearch::default())
    }

    pub fn gbt() -> Self {
        ModelConfig::Gbt(GbtParams::default())
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            ModelConfig::Knn { .. } => "knn",
            ModelConfig::Tree(_) => "tree",
            ModelConfig::Gbt(_) => "gbt",
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |m: &str| Err(LearnError::InvalidConfig(m.to_string()));
        match *self {
            ModelConfig::Knn { k } if k == 0 => bad("k must be at least 1"),
            ModelConfig::Tree(s) => {
                if s.trials == 0 {
                    bad("trials must be at least 1")
                } else if s.max_depth.0 == 0 || s.max_depth.0 > s.max_depth.1 {
                    bad("max_depth range must be non-empty and start at 1 or more")
                } else if s.min_samples_leaf.0 == 0 || s.min_samples_leaf.0 > s.min_samples_leaf.1 {
                    bad("min_samples_leaf range must be non-empty and start at 1 or more")
                } else {
                    Ok(())
                }
            }
            ModelConfig::Gbt(p) => {
                if p.max_depth == 0 {
                    bad("max_depth must be at least 1")
                } else if p.n_estimators == 0 {
                    bad("n_estimators must be at least 1")
                } else if !(p.learning_rate > 0.0 && p.learning_rate <= 1.0) {
                    bad("learning_rate must lie in (0, 1]")
                } else if !(p.lambda >= 0.0) {
                    bad("lambda must be non-negative")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("feature vector has length {found}, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("max false-positive rate {0} is outside (0, 1)")]
    InvalidFpr(f64),
    #[error("model artifact: {0}")]
    Artifact(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Model {
    Knn(KnnModel),
    Tree(TreeModel),
    Gbt(GbtModel),
}

impl Model {
    pub fn dims(&self) -> usize {
        match self {
            Model::Knn(m) => m.dims,
            Model::Tree(m) => m.dims,
            Model::Gbt(m) => m.dims,
        }
    }

    fn score(&self, bits: &[bool]) -> f64 {
        match self {
            Model::Knn(m) => m.predict(bits),
            Model::Tree(m) => m.root.eval(bits),
            Model::Gbt(m) => m.predict(bits),
        }
    }
}

pub const MODEL_FORMAT: &str = "atas-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Artifact<T> {
    format: String,
    version: u32,
    body: T,
}

/// Wraps `body` in the versioned artifact envelope.
pub fn to_artifact<T: Serialize>(body: &T) -> String {
    #[derive(Serialize)]
    struct Out<'a, T> {
        format: &'a str,
        version: u32,
        body: &'a T,
    }
    serde_json::to_string_pretty(&Out {
        format: MODEL_FORMAT,
        version: MODEL_VERSION,
        body,
    })
    .expect("model serialization is infallible")
}

pub fn from_artifact<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, LearnError> {
    let a: Artifact<T> =
        serde_json::from_str(text).map_err(|e| LearnError::Artifact(e.to_string()))?;
    if a.format != MODEL_FORMAT {
        return Err(LearnError::Artifact(format!("unknown format {:?}", a.format)));
    }
    if a.version != MODEL_VERSION {
        return Err(LearnError::Artifact(format!("unsupported version {}", a.version)));
    }
    Ok(a.body)
}

/// Columnar view of a training set: set-bit indices per sample.
pub(crate) struct Dataset {
    pub dims: usize,
    pub active: Vec<Vec<u32>>,
    pub correct: Vec<bool>,
}

impl Dataset {
    fn new(data: &[LabeledSample]) -> Result<Self, LearnError> {
        let dims = data.first().map_or(0, |s| s.features.len());
        for s in data {
            if s.features.len() != dims {
                return Err(LearnError::DimensionMismatch {
                    expected: dims,
                    found: s.features.len(),
                });
            }
        }
        Ok(Dataset {
            dims,
            active: data.iter().map(|s| s.features.active()).collect(),
            correct: data.iter().map(|s| s.label.is_correct()).collect(),
        })
    }

    fn len(&self) -> usize {
        self.correct.len()
    }

    fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            dims: self.dims,
            active: idx.iter().map(|&i| self.active[i].clone()).collect(),
            correct: idx.iter().map(|&i| self.correct[i]).collect(),
        }
    }
}

fn require_both_classes(data: &[LabeledSample]) -> Result<(), LearnError> {
    let correct = data.iter().filter(|s| s.label.is_correct()).count();
    if correct == 0 || correct == data.len() {
        return Err(LearnError::InsufficientData(format!(
            "need both classes, got {correct} correct of {}",
            data.len()
        )));
    }
    Ok(())
}

pub fn train_model(
    config: &ModelConfig,
    data: &[LabeledSample],
    rng_seed: u64,
) -> Result<Model, LearnError> {
    config.validate()?;
    let ds = Dataset::new(data)?;
    match *config {
        ModelConfig::Knn { k } => {
            if data.len() < k {
                return Err(LearnError::InsufficientData(format!(
                    "k = {k} but only {} samples",
                    data.len()
                )));
            }
            Ok(Model::Knn(KnnModel::fit(&ds, k)))
        }
        ModelConfig::Tree(search) => {
            require_both_classes(data)?;
            Ok(Model::Tree(tree::search(&ds, search, rng_seed)))
        }
        ModelConfig::Gbt(params) => {
            require_both_classes(data)?;
            Ok(Model::Gbt(GbtModel::fit(&ds, params)))
        }
    }
}

pub fn predict_probability(model: &Model, features: &FeatureVector) -> Result<f64, LearnError> {
    if features.len() != model.dims() {
        return Err(LearnError::DimensionMismatch {
            expected: model.dims(),
            found: features.len(),
        });
    }
    Ok(model.score(&features.bits))
}
