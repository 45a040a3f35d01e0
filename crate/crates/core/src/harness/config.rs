use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synth::SyntheticSpec;
use crate::classify::{
    fit_linear_svm, BaseLearner, fit_logreg, fit_random_forest, ForestConfig, LogregConfig, PuDataset, ScoredModel, SvmConfig,
};
use crate::embed::{
    concat_embeddings, train_mnmf, train_node2vec, train_poincare, train_role2vec, EmbeddingMatrix, MnmfConfig,
    PoincareConfig, Role2VecConfig, SkipGramConfig, WalkConfig,
};
use crate::error::{Error, Result};
use crate::graph::{load_edge_list, load_labels, read_snapshot, EdgeFormat, LabelStore, TransactionGraph};
use crate::pu::{fit_bagging_pu, fit_elkanoto, fit_upu, BaggingPuConfig, ElkanotoConfig, UpuConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSpec {
    Synthetic(SyntheticSpec),
    Files {
        edges: PathBuf,
        labels: PathBuf,
        #[serde(default)]
        format: Option<EdgeFormat>,
        #[serde(default)]
        directed: bool,
    },
    /// A directory written by `write_snapshot`.
    Snapshot { dir: PathBuf },
}

impl DatasetSpec {
    /// Loads or generates the dataset. Relative paths resolve against `base`.
    pub fn load(&self, base: Option<&Path>, seed: u64) -> Result<(TransactionGraph, LabelStore)> {
        let resolve = |p: &Path| match base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        };
        match self {
            DatasetSpec::Synthetic(spec) => super::synth::generate_synthetic(spec, seed),
            DatasetSpec::Files {
                edges,
                labels,
                format,
                directed,
            } => {
                let edges = resolve(edges);
                let fmt = format.unwrap_or_else(|| EdgeFormat::from_path(&edges));
                let graph = load_edge_list(&edges, fmt, *directed)?;
                let (store, unknown) = load_labels(resolve(labels), &graph)?;
                if !unknown.is_empty() {
                    log::warn!("{} labeled ids are not in the graph (first: {})", unknown.len(), unknown[0]);
                }
                Ok((graph, store))
            }
            DatasetSpec::Snapshot { dir } => read_snapshot(&resolve(dir)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum EmbeddingMethod {
    Node2vec {
        #[serde(default)]
        walk: WalkConfig,
        #[serde(default)]
        skipgram: SkipGramConfig,
    },
    Poincare(PoincareConfig),
    Role2vec(Role2VecConfig),
    Mnmf(MnmfConfig),
    /// Row-wise concatenation of two other named embeddings.
    Concat { parts: [String; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub name: String,
    #[serde(flatten)]
    pub method: EmbeddingMethod,
}

impl EmbeddingSpec {
    pub fn new(name: &str, method: EmbeddingMethod) -> Self {
        Self { name: name.into(), method }
    }

    /// Trains a non-concat embedding with every internal seed set to `seed`.
    pub fn train(&self, graph: &TransactionGraph, seed: u64) -> Result<EmbeddingMatrix> {
        match &self.method {
            EmbeddingMethod::Node2vec { walk, skipgram } => {
                let walk = WalkConfig { rng_seed: seed, ..walk.clone() };
                let sg = SkipGramConfig { rng_seed: seed, ..skipgram.clone() };
                train_node2vec(graph, &walk, &sg)
            }
            EmbeddingMethod::Poincare(c) => {
                Ok(train_poincare(graph, &PoincareConfig { rng_seed: seed, ..c.clone() })?.into_matrix())
            }
            EmbeddingMethod::Role2vec(c) => {
                let mut c = c.clone();
                c.walk.rng_seed = seed;
                c.skipgram.rng_seed = seed;
                train_role2vec(graph, &c)
            }
            EmbeddingMethod::Mnmf(c) => Ok(train_mnmf(graph, &MnmfConfig { rng_seed: seed, ..c.clone() })?.into_matrix()),
            EmbeddingMethod::Concat { .. } => Err(Error::Config(format!(
                "embedding `{}` is a concat and has no trainer of its own",
                self.name
            ))),
        }
    }
}

/// Trains every spec on `graph`; concat specs reuse their parts.
pub fn train_embeddings(specs: &[EmbeddingSpec], graph: &TransactionGraph, seed: u64) -> Result<Vec<EmbeddingMatrix>> {
    let mut out: Vec<Option<EmbeddingMatrix>> = vec![None; specs.len()];
    for (i, spec) in specs.iter().enumerate() {
        if !matches!(spec.method, EmbeddingMethod::Concat { .. }) {
            out[i] = Some(spec.train(graph, seed)?);
        }
    }
    for (i, spec) in specs.iter().enumerate() {
        if let EmbeddingMethod::Concat { parts } = &spec.method {
            let find = |name: &str| {
                specs
                    .iter()
                    .position(|s| s.name == name)
                    .and_then(|k| out[k].as_ref())
                    .ok_or_else(|| Error::Config(format!("embeddings.{}.parts: unknown or concat part `{name}`", spec.name)))
            };
            let joined = concat_embeddings(find(&parts[0])?, find(&parts[1])?)?;
            out[i] = Some(joined);
        }
    }
    Ok(out.into_iter().map(Option::unwrap).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Logreg(LogregConfig),
    LinearSvm(SvmConfig),
    RandomForest(ForestConfig),
    BaggingPu(BaggingPuConfig),
    Elkanoto(ElkanotoConfig),
    Upu(UpuConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ModelKind,
}

/// Quantities a fit estimated along the way.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FitInfo {
    pub c_hat: Option<f64>,
    pub pi_hat: Option<f64>,
}

impl ModelSpec {
    pub fn new(name: &str, kind: ModelKind) -> Self {
        Self { name: name.into(), kind }
    }

    pub fn fit(&self, train: &PuDataset, seed: u64) -> Result<(ScoredModel, FitInfo)> {
        let none = FitInfo::default();
        Ok(match &self.kind {
            ModelKind::Logreg(c) => (fit_logreg(train, c, seed)?, none),
            ModelKind::LinearSvm(c) => (fit_linear_svm(train, c, seed)?, none),
            ModelKind::RandomForest(c) => (fit_random_forest(train, c, seed)?, none),
            ModelKind::BaggingPu(c) => (ScoredModel::BaggingPu(fit_bagging_pu(train, c, seed)?), none),
            ModelKind::Elkanoto(c) => {
                let m = fit_elkanoto(train, c, seed)?;
                let info = FitInfo {
                    c_hat: Some(m.c_hat),
                    pi_hat: Some(crate::pu::class_prior_from(train.labeled_fraction(), m.c_hat)),
                };
                (ScoredModel::Elkanoto(m), info)
            }
            ModelKind::Upu(c) => {
                let m = fit_upu(train, c, seed)?;
                let info = FitInfo { c_hat: None, pi_hat: Some(m.prior) };
                (ScoredModel::Upu(m), info)
            }
        })
    }
}

/// The six embeddings of the benchmark matrix.
pub fn default_embeddings() -> Vec<EmbeddingSpec> {
    let n2v = EmbeddingMethod::Node2vec {
        walk: WalkConfig::default(),
        skipgram: SkipGramConfig::default(),
    };
    let concat = |a: &str, b: &str| EmbeddingMethod::Concat { parts: [a.into(), b.into()] };
    vec![
        EmbeddingSpec::new("node2vec", n2v),
        EmbeddingSpec::new("poincare", EmbeddingMethod::Poincare(PoincareConfig::default())),
        EmbeddingSpec::new("role2vec", EmbeddingMethod::Role2vec(Role2VecConfig::default())),
        EmbeddingSpec::new("mnmf", EmbeddingMethod::Mnmf(MnmfConfig::default())),
        EmbeddingSpec::new("node2vec+poincare", concat("node2vec", "poincare")),
        EmbeddingSpec::new("node2vec+mnmf", concat("node2vec", "mnmf")),
    ]
}

/// The six models of the benchmark matrix, under their column labels.
/// ET wraps the calibrated SVM.
pub fn default_models() -> Vec<ModelSpec> {
    vec![
        ModelSpec::new("LR", ModelKind::Logreg(Default::default())),
        ModelSpec::new("RF", ModelKind::RandomForest(Default::default())),
        ModelSpec::new("SVM", ModelKind::LinearSvm(Default::default())),
        ModelSpec::new("BA", ModelKind::BaggingPu(Default::default())),
        ModelSpec::new(
            "ET",
            ModelKind::Elkanoto(ElkanotoConfig {
                base: BaseLearner::LinearSvm(SvmConfig::default()),
                ..Default::default()
            }),
        ),
        ModelSpec::new("UPU", ModelKind::Upu(Default::default())),
    ]
}

fn default_repeats() -> usize {
    10
}

fn default_train_fraction() -> f64 {
    0.8
}

fn default_threshold() -> f64 {
    crate::classify::DEFAULT_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    #[serde(default = "default_embeddings")]
    pub embeddings: Vec<EmbeddingSpec>,
    #[serde(default = "default_models")]
    pub models: Vec<ModelSpec>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// Sweep axis: how many labeled seed positives to hide.
    #[serde(default)]
    pub hide_counts: Vec<usize>,
    /// Benchmark only: fraction of labeled seed positives hidden before the split.
    #[serde(default)]
    pub hide_fraction: f64,
    /// Embedding used by the sweep; the first embedding when absent.
    #[serde(default)]
    pub sweep_embedding: Option<String>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub rng_seed: Option<u64>,
    /// Directory that relative dataset paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

/// One-line rendering of a TOML error: the message plus its line number.
pub(crate) fn toml_message(text: &str, e: &toml::de::Error) -> String {
    let msg = e.message().trim().replace('\n', " ");
    match e.span() {
        Some(span) => format!("{msg} (line {})", text[..span.start].matches('\n').count() + 1),
        None => msg,
    }
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSpec) -> Self {
        Self {
            dataset,
            embeddings: default_embeddings(),
            models: default_models(),
            repeats: default_repeats(),
            train_fraction: default_train_fraction(),
            hide_counts: Vec::new(),
            hide_fraction: 0.0,
            sweep_embedding: None,
            threshold: default_threshold(),
            rng_seed: None,
            base_dir: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(toml_message(text, &e)))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = if path.extension().is_some_and(|e| e == "json") {
            let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            cfg.validate()?;
            cfg
        } else {
            Self::from_toml_str(&text)?
        };
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!("train_fraction must be in (0,1), got {}", self.train_fraction)));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be ≥ 1".into()));
        }
        if !(0.0..1.0).contains(&self.hide_fraction) {
            return Err(Error::Config(format!("hide_fraction must be in [0,1), got {}", self.hide_fraction)));
        }
        if let DatasetSpec::Synthetic(s) = &self.dataset {
            s.validate()?;
        }
        let mut names = HashSet::new();
        for e in &self.embeddings {
            if !names.insert(e.name.as_str()) {
                return Err(Error::Config(format!("embeddings: duplicate name `{}`", e.name)));
            }
        }
        for e in &self.embeddings {
            if let EmbeddingMethod::Concat { parts } = &e.method {
                for p in parts {
                    let ok = self
                        .embeddings
                        .iter()
                        .any(|o| o.name == *p && !matches!(o.method, EmbeddingMethod::Concat { .. }));
                    if !ok {
                        return Err(Error::Config(format!(
                            "embeddings.{}.parts: `{p}` must name a non-concat embedding",
                            e.name
                        )));
                    }
                }
            }
        }
        if let Some(name) = &self.sweep_embedding {
            if !names.contains(name.as_str()) {
                return Err(Error::Config(format!("sweep_embedding: unknown embedding `{name}`")));
            }
        }
        Ok(())
    }

    pub fn sweep_embedding_index(&self) -> Result<usize> {
        match &self.sweep_embedding {
            Some(name) => self
                .embeddings
                .iter()
                .position(|e| &e.name == name)
                .ok_or_else(|| Error::Config(format!("sweep_embedding: unknown embedding `{name}`"))),
            None if self.embeddings.is_empty() => Err(Error::Config("embeddings: at least one is required".into())),
            None => Ok(0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
        repeats = 3
        hide_counts = [0, 5]

        [dataset]
        source = "synthetic"
        n_nodes = 300
        n_illicit = 30

        [[embeddings]]
        name = "n2v"
        method = "node2vec"
        skipgram = { dim = 16 }

        [[embeddings]]
        name = "poin"
        method = "poincare"
        dim = 8
        epochs = 5

        [[embeddings]]
        name = "both"
        method = "concat"
        parts = ["n2v", "poin"]

        [[models]]
        name = "LR"
        kind = "logreg"
        epochs = 20

        [[models]]
        name = "BA"
        kind = "bagging_pu"
        rounds = 5
        base = { kind = "logreg" }
    "#;

    #[test]
    fn parses_sample() {
        let cfg = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.repeats, 3);
        assert_eq!(cfg.train_fraction, 0.8);
        assert_eq!(cfg.embeddings.len(), 3);
        let EmbeddingMethod::Node2vec { skipgram, walk } = &cfg.embeddings[0].method else { panic!() };
        assert_eq!(skipgram.dim, 16);
        assert_eq!(walk.walk_length, 5);
        let ModelKind::BaggingPu(b) = &cfg.models[1].kind else { panic!() };
        assert_eq!(b.rounds, 5);
        assert!(matches!(b.base, crate::classify::BaseLearner::Logreg(_)));
    }

    #[test]
    fn defaults_fill_matrix() {
        let cfg = ExperimentConfig::from_toml_str("[dataset]\nsource = \"synthetic\"\n").unwrap();
        assert_eq!(cfg.embeddings.len(), 6);
        let names: Vec<_> = cfg.models.iter().map(|m| m.name.as_str()).collect();
        assert_eq!(names, ["LR", "RF", "SVM", "BA", "ET", "UPU"]);
    }

    #[test]
    fn missing_dataset_names_key() {
        let err = ExperimentConfig::from_toml_str("repeats = 2").unwrap_err().to_string();
        assert!(err.contains("dataset"), "{err}");
    }

    #[test]
    fn unknown_key_named() {
        let err = ExperimentConfig::from_toml_str("[dataset]\nsource = \"synthetic\"\nn_nodez = 5\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("n_nodez"), "{err}");
    }

    #[test]
    fn bad_concat_part() {
        let text = "[dataset]\nsource = \"synthetic\"\n[[embeddings]]\nname = \"c\"\nmethod = \"concat\"\nparts = [\"a\", \"b\"]\n";
        let err = ExperimentConfig::from_toml_str(text).unwrap_err().to_string();
        assert!(err.contains("embeddings.c.parts"), "{err}");
    }

    #[test]
    fn train_fraction_bounds() {
        let err = ExperimentConfig::from_toml_str("train_fraction = 1.5\n[dataset]\nsource = \"synthetic\"\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("train_fraction"));
    }
}
