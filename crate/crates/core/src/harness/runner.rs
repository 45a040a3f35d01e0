use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{train_embeddings, EmbeddingMethod, EmbeddingSpec, ExperimentConfig, FitInfo};
use super::engineer::{engineer_pu_dataset, seed_dataset};
use crate::classify::predict;
use crate::error::{Error, Result};
use crate::graph::{sample_subnetwork, LabelStore, TransactionGraph};
use crate::metrics::{
    estimated_vs_defacto, render_markdown, write_matrix_csv, MatrixCell, Metric, MetricSummary, MetricsReport,
    Variant,
};
use crate::par;
use crate::rng::derive_seed;

// Sub-streams of a repeat seed.
const SAMPLE: u64 = 0;
const EMBED: u64 = 1;
const HIDE: u64 = 2;
const SPLIT: u64 = 3;
const FIT: u64 = 4;

/// Seed of repeat `r`; also recorded in outputs.
pub fn repeat_seed(seed: u64, r: usize) -> u64 {
    derive_seed(derive_seed(seed, 0x5EED), r as u64)
}

/// Seed for generating a synthetic dataset from the run seed.
pub fn dataset_seed(seed: u64) -> u64 {
    derive_seed(seed, 0xDA7A)
}

struct Stopwatch(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Stopwatch {
    fn start() -> Self {
        Stopwatch(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    fn secs(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.0.elapsed().as_secs_f64();
        #[cfg(target_arch = "wasm32")]
        0.0
    }
}

fn needed_specs(specs: &[EmbeddingSpec], idx: usize) -> Vec<EmbeddingSpec> {
    let target = &specs[idx];
    let mut out = Vec::new();
    if let EmbeddingMethod::Concat { parts } = &target.method {
        for p in parts {
            if let Some(s) = specs.iter().find(|s| &s.name == p) {
                out.push(s.clone());
            }
        }
    }
    out.push(target.clone());
    out
}

fn collect<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub hide_count: usize,
    pub model: String,
    pub metric: Metric,
    pub variant: Variant,
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub embedding: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn mean(&self, hide_count: usize, model: &str, metric: Metric, variant: Variant) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.hide_count == hide_count && r.model == model && r.metric == metric && r.variant == variant)
            .map(|r| r.mean)
    }

    /// `(hide_count, mean)` in sweep order.
    pub fn series(&self, model: &str, metric: Metric, variant: Variant) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|r| r.model == model && r.metric == metric && r.variant == variant)
            .map(|r| (r.hide_count, r.mean))
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = crate::graph::io::create(path)?;
        let mut w = csv::Writer::from_writer(file);
        let err = |e: csv::Error| Error::Serde(format!("{}: {e}", path.display()));
        w.write_record(["hide_count", "model", "metric", "variant", "mean", "sd", "n"]).map_err(err)?;
        for r in &self.rows {
            w.write_record([
                r.hide_count.to_string(),
                r.model.clone(),
                r.metric.as_str().to_string(),
                r.variant.as_str().to_string(),
                r.mean.to_string(),
                r.sd.to_string(),
                r.n.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Per repeat: sample a subnetwork and embed it once, then for each hide
/// count hide that many seed positives, split, fit every model on `s` and
/// score the test part against `s` and `y`.
pub fn run_hidden_positive_sweep(
    cfg: &ExperimentConfig,
    graph: &TransactionGraph,
    labels: &LabelStore,
    seed: u64,
) -> Result<SweepTable> {
    cfg.validate()?;
    if cfg.hide_counts.is_empty() {
        return Err(Error::Config("hide_counts: at least one value is required for a sweep".into()));
    }
    if cfg.models.is_empty() {
        return Err(Error::Config("models: at least one is required".into()));
    }
    let emb_idx = cfg.sweep_embedding_index()?;
    let specs = needed_specs(&cfg.embeddings, emb_idx);
    let per_repeat = collect(par::map_indexed(cfg.repeats, |r| -> Result<Vec<Vec<(MetricsReport, MetricsReport)>>> {
        let rs = repeat_seed(seed, r);
        let sample = sample_subnetwork(graph, labels, derive_seed(rs, SAMPLE))?;
        let emb = train_embeddings(&specs, &sample.graph, derive_seed(rs, EMBED))?.pop().unwrap();
        let base = seed_dataset(&sample, &emb)?;
        let mut out = Vec::with_capacity(cfg.hide_counts.len());
        for &h in &cfg.hide_counts {
            let eng = engineer_pu_dataset(&base, h, derive_seed(rs, HIDE))?;
            let (train, test) = eng.data.split(cfg.train_fraction, derive_seed(rs, SPLIT))?;
            let mut reports = Vec::with_capacity(cfg.models.len());
            for m in &cfg.models {
                let (model, _) = m.fit(&train, derive_seed(rs, FIT))?;
                let pred = predict(&model, test.view(), cfg.threshold)?;
                reports.push(estimated_vs_defacto(&pred.labels, &test.s, test.y.as_deref())?);
            }
            out.push(reports);
        }
        Ok(out)
    }))?;

    let mut rows = Vec::new();
    for (hi, &h) in cfg.hide_counts.iter().enumerate() {
        for (mi, m) in cfg.models.iter().enumerate() {
            let est: Vec<MetricsReport> = per_repeat.iter().map(|r| r[hi][mi].0).collect();
            let def: Vec<MetricsReport> = per_repeat.iter().map(|r| r[hi][mi].1).collect();
            for (variant, reports) in [(Variant::Estimated, est), (Variant::Defacto, def)] {
                let summary = MetricSummary::of(&reports);
                for metric in Metric::ALL {
                    rows.push(SweepRow {
                        hide_count: h,
                        model: m.name.clone(),
                        metric,
                        variant,
                        mean: summary.mean_of(metric),
                        sd: summary.sd_of(metric),
                        n: summary.n,
                    });
                }
            }
        }
    }
    Ok(SweepTable {
        embedding: cfg.embeddings[emb_idx].name.clone(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubnetworkInfo {
    pub repeat_seed: u64,
    pub nodes: usize,
    pub edges: usize,
    pub seed_positives: usize,
    pub seed_negatives: usize,
    pub hidden: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateInfo {
    pub embedding: String,
    pub model: String,
    pub c_hat: Vec<Option<f64>>,
    pub pi_hat: Vec<Option<f64>>,
    pub c_hat_mean: Option<f64>,
    pub pi_hat_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchMetadata {
    pub rng_seed: u64,
    pub repeats: usize,
    pub train_fraction: f64,
    pub hide_fraction: f64,
    pub threshold: f64,
    pub subnetworks: Vec<SubnetworkInfo>,
    pub estimates: Vec<EstimateInfo>,
    /// Seconds summed over repeats.
    pub embedding_secs: BTreeMap<String, f64>,
    pub fit_secs: BTreeMap<String, f64>,
    pub total_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub cells: Vec<MatrixCell>,
    pub metadata: BenchMetadata,
}

impl BenchResult {
    pub fn cell(&self, embedding: &str, model: &str, variant: Variant) -> Option<&MatrixCell> {
        self.cells
            .iter()
            .find(|c| c.embedding == embedding && c.model == model && c.variant == variant)
    }

    /// Writes `matrix.csv`, `matrix.md` and `metadata.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_matrix_csv(&dir.join("matrix.csv"), &self.cells)?;
        let mut md = String::from("## Estimated\n\n");
        md.push_str(&render_markdown(&self.cells, Variant::Estimated));
        md.push_str("\n## Defacto\n\n");
        md.push_str(&render_markdown(&self.cells, Variant::Defacto));
        let path = dir.join("matrix.md");
        std::fs::write(&path, md).map_err(|e| Error::io(&path, e))?;
        let path = dir.join("metadata.json");
        let json = serde_json::to_string_pretty(&self.metadata)?;
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }
}

struct RepeatOutcome {
    info: SubnetworkInfo,
    /// `[embedding][model]`
    reports: Vec<Vec<(MetricsReport, MetricsReport, FitInfo)>>,
    embed_secs: Vec<f64>,
    fit_secs: Vec<f64>,
}

fn mean_of(values: &[Option<f64>]) -> Option<f64> {
    let v: Vec<f64> = values.iter().flatten().copied().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Embedding × model matrix. Each repeat samples one subnetwork, trains
/// every embedding on it once, hides `round(hide_fraction · |P|)` seed
/// positives, and fits every model on one shared split.
pub fn run_benchmark(
    cfg: &ExperimentConfig,
    graph: &TransactionGraph,
    labels: &LabelStore,
    seed: u64,
) -> Result<BenchResult> {
    cfg.validate()?;
    if cfg.embeddings.is_empty() || cfg.models.is_empty() {
        return Err(Error::Config("benchmark needs at least one embedding and one model".into()));
    }
    let clock = Stopwatch::start();
    let outcomes = collect(par::map_indexed(cfg.repeats, |r| -> Result<RepeatOutcome> {
        let rs = repeat_seed(seed, r);
        let sample = sample_subnetwork(graph, labels, derive_seed(rs, SAMPLE))?;
        let mut embed_secs = Vec::with_capacity(cfg.embeddings.len());
        let mut embs = Vec::with_capacity(cfg.embeddings.len());
        for spec in &cfg.embeddings {
            let t = Stopwatch::start();
            let emb = match &spec.method {
                EmbeddingMethod::Concat { .. } => None,
                _ => Some(spec.train(&sample.graph, derive_seed(rs, EMBED))?),
            };
            embed_secs.push(t.secs());
            embs.push(emb);
        }
        for (i, spec) in cfg.embeddings.iter().enumerate() {
            if let EmbeddingMethod::Concat { parts } = &spec.method {
                let get = |name: &str| {
                    let k = cfg.embeddings.iter().position(|s| s.name == name).unwrap();
                    embs[k].clone().unwrap()
                };
                embs[i] = Some(crate::embed::concat_embeddings(&get(&parts[0]), &get(&parts[1]))?);
            }
        }
        let n_pos = sample.seed_positives.len();
        let hide = (cfg.hide_fraction * n_pos as f64).round() as usize;
        let mut fit_secs = vec![0.0; cfg.models.len()];
        let mut reports = Vec::with_capacity(embs.len());
        for emb in &embs {
            let base = seed_dataset(&sample, emb.as_ref().unwrap())?;
            let eng = engineer_pu_dataset(&base, hide, derive_seed(rs, HIDE))?;
            let (train, test) = eng.data.split(cfg.train_fraction, derive_seed(rs, SPLIT))?;
            let mut row = Vec::with_capacity(cfg.models.len());
            for (mi, m) in cfg.models.iter().enumerate() {
                let t = Stopwatch::start();
                let (model, info) = m.fit(&train, derive_seed(rs, FIT))?;
                let pred = predict(&model, test.view(), cfg.threshold)?;
                fit_secs[mi] += t.secs();
                let (est, def) = estimated_vs_defacto(&pred.labels, &test.s, test.y.as_deref())?;
                row.push((est, def, info));
            }
            reports.push(row);
        }
        Ok(RepeatOutcome {
            info: SubnetworkInfo {
                repeat_seed: rs,
                nodes: sample.graph.node_count(),
                edges: sample.graph.edge_count(),
                seed_positives: n_pos,
                seed_negatives: sample.seed_negatives.len(),
                hidden: hide,
            },
            reports,
            embed_secs,
            fit_secs,
        })
    }))?;

    let mut cells = Vec::new();
    let mut estimates = Vec::new();
    for (ei, e) in cfg.embeddings.iter().enumerate() {
        for (mi, m) in cfg.models.iter().enumerate() {
            let at = |o: &RepeatOutcome| o.reports[ei][mi];
            for variant in [Variant::Estimated, Variant::Defacto] {
                let reports: Vec<MetricsReport> = outcomes
                    .iter()
                    .map(|o| if variant == Variant::Estimated { at(o).0 } else { at(o).1 })
                    .collect();
                cells.push(MatrixCell {
                    embedding: e.name.clone(),
                    model: m.name.clone(),
                    variant,
                    summary: MetricSummary::of(&reports),
                });
            }
            let c_hat: Vec<Option<f64>> = outcomes.iter().map(|o| at(o).2.c_hat).collect();
            let pi_hat: Vec<Option<f64>> = outcomes.iter().map(|o| at(o).2.pi_hat).collect();
            if c_hat.iter().chain(&pi_hat).any(Option::is_some) {
                estimates.push(EstimateInfo {
                    embedding: e.name.clone(),
                    model: m.name.clone(),
                    c_hat_mean: mean_of(&c_hat),
                    pi_hat_mean: mean_of(&pi_hat),
                    c_hat,
                    pi_hat,
                });
            }
        }
    }
    let mut embedding_secs = BTreeMap::new();
    for (ei, e) in cfg.embeddings.iter().enumerate() {
        embedding_secs.insert(e.name.clone(), outcomes.iter().map(|o| o.embed_secs[ei]).sum());
    }
    let mut fit_secs = BTreeMap::new();
    for (mi, m) in cfg.models.iter().enumerate() {
        *fit_secs.entry(m.name.clone()).or_insert(0.0) += outcomes.iter().map(|o| o.fit_secs[mi]).sum::<f64>();
    }
    Ok(BenchResult {
        cells,
        metadata: BenchMetadata {
            rng_seed: seed,
            repeats: cfg.repeats,
            train_fraction: cfg.train_fraction,
            hide_fraction: cfg.hide_fraction,
            threshold: cfg.threshold,
            subnetworks: outcomes.into_iter().map(|o| o.info).collect(),
            estimates,
            embedding_secs,
            fit_secs,
            total_secs: clock.secs(),
        },
    })
}
