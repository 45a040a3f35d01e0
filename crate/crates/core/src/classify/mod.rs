//! Baseline classifiers and the shared scored-model contract.
//!
//! Every fitted model maps a feature row to a score in `[0, 1]`; a row is
//! predicted positive when its score is at least the threshold (0.5 unless
//! given). Base learners always train on the observed label `s`.

mod dataset;
mod forest;
mod linear;

use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pu::{BaggingPuModel, ElkanotoModel, UpuModel};

pub use dataset::{PuDataset, SplitTag};
pub use forest::{fit_random_forest, DecisionTree, ForestConfig, ForestModel, TreeNode};
pub use linear::{
    fit_linear_svm, fit_logreg, LinearScorer, LogregConfig, LogregModel, PlattScaling, Standardizer, SvmConfig,
    SvmModel,
};
pub(crate) use linear::sigmoid;

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoredModel {
    Logreg(LogregModel),
    LinearSvm(SvmModel),
    RandomForest(ForestModel),
    BaggingPu(BaggingPuModel),
    Elkanoto(ElkanotoModel),
    Upu(UpuModel),
}

impl ScoredModel {
    pub fn kind(&self) -> &'static str {
        match self {
            ScoredModel::Logreg(_) => "logreg",
            ScoredModel::LinearSvm(_) => "linear_svm",
            ScoredModel::RandomForest(_) => "random_forest",
            ScoredModel::BaggingPu(_) => "bagging_pu",
            ScoredModel::Elkanoto(_) => "elkanoto",
            ScoredModel::Upu(_) => "upu",
        }
    }

    /// Expected feature dimension.
    pub fn dim(&self) -> usize {
        match self {
            ScoredModel::Logreg(m) => m.scorer.dim(),
            ScoredModel::LinearSvm(m) => m.scorer.dim(),
            ScoredModel::RandomForest(m) => m.dim,
            ScoredModel::BaggingPu(m) => m.dim(),
            ScoredModel::Elkanoto(m) => m.base.dim(),
            ScoredModel::Upu(m) => m.scorer.dim(),
        }
    }

    /// Score of one row. The caller guarantees `row.len() == self.dim()`.
    pub fn score_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        let s = match self {
            ScoredModel::Logreg(m) => m.score_row(row),
            ScoredModel::LinearSvm(m) => m.score_row(row),
            ScoredModel::RandomForest(m) => m.score_row(row),
            ScoredModel::BaggingPu(m) => m.score_row(row),
            ScoredModel::Elkanoto(m) => m.score_row(row),
            ScoredModel::Upu(m) => m.score_row(row),
        };
        if s.is_nan() {
            0.0
        } else {
            s.clamp(0.0, 1.0)
        }
    }

    pub fn scores(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if x.nrows() == 0 {
            return Ok(Vec::new());
        }
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.ncols(),
            });
        }
        Ok(x.rows().into_iter().map(|r| self.score_row(r)).collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Envelope<'a> {
            format_version: u32,
            model: &'a ScoredModel,
        }
        let mut w = BufWriter::new(crate::graph::io::create(path)?);
        serde_json::to_writer(
            &mut w,
            &Envelope {
                format_version: MODEL_FORMAT_VERSION,
                model: self,
            },
        )?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Envelope {
            format_version: u32,
            model: ScoredModel,
        }
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let env: Envelope = serde_json::from_reader(BufReader::new(file))?;
        if env.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Serde(format!(
                "unsupported model format_version {} (expected {MODEL_FORMAT_VERSION})",
                env.format_version
            )));
        }
        Ok(env.model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
}

impl Prediction {
    pub fn from_scores(scores: Vec<f64>, threshold: f64) -> Self {
        let labels = scores.iter().map(|&s| s >= threshold).collect();
        Self { scores, labels }
    }

    pub fn positive_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }
}

pub fn predict(model: &ScoredModel, x: ArrayView2<'_, f64>, threshold: f64) -> Result<Prediction> {
    Ok(Prediction::from_scores(model.scores(x)?, threshold))
}

/// A supervised trainer that treats `s` as the class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseLearner {
    Logreg(LogregConfig),
    LinearSvm(SvmConfig),
    RandomForest(ForestConfig),
}

impl BaseLearner {
    pub fn fit(&self, data: &PuDataset, seed: u64) -> Result<ScoredModel> {
        match self {
            BaseLearner::Logreg(c) => fit_logreg(data, c, seed),
            BaseLearner::LinearSvm(c) => fit_linear_svm(data, c, seed),
            BaseLearner::RandomForest(c) => fit_random_forest(data, c, seed),
        }
    }
}

pub(crate) fn check_fit_input(data: &PuDataset) -> Result<()> {
    let pos = data.labeled_count();
    if pos == 0 || pos == data.len() {
        return Err(Error::DegenerateData(format!(
            "need both classes to fit, got {pos} positive of {}",
            data.len()
        )));
    }
    if !data.features.iter().all(|v| v.is_finite()) {
        return Err(Error::DegenerateData("non-finite feature value".into()));
    }
    Ok(())
}
