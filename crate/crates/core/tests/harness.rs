use pugraph::embed::{MnmfConfig, PoincareConfig, SkipGramConfig};
use pugraph::harness::*;
use pugraph::metrics::{Metric, Variant};

fn small_spec() -> SyntheticSpec {
    SyntheticSpec {
        n_nodes: 300,
        n_illicit: 30,
        n_blocks: 4,
        p_in: 0.05,
        p_out: 0.005,
        illicit_bias: 4.0,
        label_frequency: 1.0,
    }
}

fn small_embeddings() -> Vec<EmbeddingSpec> {
    let mut specs = default_embeddings();
    for spec in &mut specs {
        match &mut spec.method {
            EmbeddingMethod::Node2vec { skipgram, .. } => *skipgram = SkipGramConfig { dim: 8, ..Default::default() },
            EmbeddingMethod::Poincare(c) => *c = PoincareConfig { dim: 4, epochs: 5, ..Default::default() },
            EmbeddingMethod::Role2vec(c) => c.skipgram.dim = 4,
            EmbeddingMethod::Mnmf(c) => *c = MnmfConfig { dim: 4, communities: 2, iterations: 10, ..Default::default() },
            EmbeddingMethod::Concat { .. } => {}
        }
    }
    specs
}

fn quick_models() -> Vec<ModelSpec> {
    let mut models = default_models();
    for m in &mut models {
        match &mut m.kind {
            ModelKind::RandomForest(c) => c.n_trees = 10,
            ModelKind::BaggingPu(c) => c.rounds = 5,
            _ => {}
        }
    }
    models
}

fn config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(DatasetSpec::Synthetic(small_spec()));
    cfg.embeddings = small_embeddings();
    cfg.models = quick_models();
    cfg.repeats = 2;
    cfg
}

#[test]
fn benchmark_fills_the_matrix() {
    let cfg = config();
    let (g, l) = cfg.dataset.load(None, 3).unwrap();
    let r = run_benchmark(&cfg, &g, &l, 3).unwrap();
    let est: Vec<_> = r.cells.iter().filter(|c| c.variant == Variant::Estimated).collect();
    assert_eq!(est.len() * Metric::ALL.len(), 144);
    assert_eq!(r.metadata.subnetworks.len(), 2);
    let et = r.metadata.estimates.iter().find(|e| e.model == "ET").unwrap();
    assert!(et.c_hat.iter().all(|c| c.is_some_and(|c| c > 0.0 && c <= 1.0)));
    for cell in &r.cells {
        for m in Metric::ALL {
            assert!(cell.summary.mean_of(m).is_finite());
        }
    }
}

#[test]
fn duplicate_models_and_reruns_agree() {
    let mut cfg = config();
    cfg.embeddings.truncate(1);
    let mut dup = cfg.models[0].clone();
    dup.name = "LR2".into();
    cfg.models = vec![cfg.models[0].clone(), dup, cfg.models[2].clone()];
    cfg.hide_fraction = 0.3;
    let (g, l) = cfg.dataset.load(None, 1).unwrap();
    let a = run_benchmark(&cfg, &g, &l, 9).unwrap();
    let b = run_benchmark(&cfg, &g, &l, 9).unwrap();
    assert_eq!(a.cells, b.cells);
    for v in [Variant::Estimated, Variant::Defacto] {
        assert_eq!(
            a.cell("node2vec", "LR", v).unwrap().summary,
            a.cell("node2vec", "LR2", v).unwrap().summary
        );
    }
    assert!(a.metadata.subnetworks.iter().all(|s| s.hidden == 9));
}

#[test]
fn sweep_rows_and_zero_hide_identity() {
    let mut cfg = config();
    cfg.embeddings.truncate(1);
    cfg.models = vec![cfg.models[0].clone(), cfg.models[2].clone()];
    cfg.hide_counts = vec![0, 5, 10];
    let (g, l) = cfg.dataset.load(None, 2).unwrap();
    let sweep = run_hidden_positive_sweep(&cfg, &g, &l, 2).unwrap();
    assert_eq!(sweep.rows.len(), 3 * 2 * 4 * 2);
    for model in ["LR", "SVM"] {
        for m in Metric::ALL {
            let e = sweep.mean(0, model, m, Variant::Estimated).unwrap();
            let d = sweep.mean(0, model, m, Variant::Defacto).unwrap();
            assert!((e - d).abs() <= 1e-12);
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    sweep.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1 + sweep.rows.len());
    assert!(text.starts_with("hide_count,model,metric,variant,mean,sd,n\n"));
}

#[test]
fn sweep_rejects_oversized_hide_count() {
    let mut cfg = config();
    cfg.embeddings.truncate(1);
    cfg.repeats = 1;
    cfg.hide_counts = vec![31];
    let (g, l) = cfg.dataset.load(None, 2).unwrap();
    assert!(run_hidden_positive_sweep(&cfg, &g, &l, 2).is_err());
}

#[test]
fn file_dataset_resolves_relative_paths() {
    let (g, l) = generate_synthetic(&small_spec(), 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    pugraph::graph::write_snapshot(dir.path(), &g, &l).unwrap();
    let toml = r#"
        [dataset]
        source = "files"
        edges = "edges.csv"
        labels = "labels.csv"
    "#;
    let path = dir.path().join("exp.toml");
    std::fs::write(&path, toml).unwrap();
    let cfg = ExperimentConfig::from_path(&path).unwrap();
    let (g2, l2) = cfg.dataset.load(cfg.base_dir.as_deref(), 0).unwrap();
    // An edge list cannot carry isolated nodes.
    let connected: Vec<usize> = (0..g.node_count()).filter(|&i| g.degree(i) > 0).collect();
    assert_eq!(g2.node_count(), connected.len());
    assert_eq!(g2.edge_count(), g.edge_count());
    assert_eq!(l2.labeled_count(), connected.iter().filter(|&&i| l.s[i]).count());
}

#[test]
fn bench_outputs_written() {
    let mut cfg = config();
    cfg.embeddings.truncate(1);
    cfg.repeats = 1;
    let (g, l) = cfg.dataset.load(None, 4).unwrap();
    let r = run_benchmark(&cfg, &g, &l, 4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    r.write(dir.path()).unwrap();
    for f in ["matrix.csv", "matrix.md", "metadata.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["repeats"], 1);
}
