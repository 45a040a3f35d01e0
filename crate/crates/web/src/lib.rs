//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string; the page
//! parses it and draws on a canvas. The `*_data` functions hold the logic
//! and are what the native tests exercise.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use pugraph::classify::{fit_linear_svm, fit_logreg, predict, LogregConfig, SvmConfig};
use pugraph::embed::{train_poincare, PoincareConfig};
use pugraph::error::Result;
use pugraph::graph::TransactionGraph;
use pugraph::harness::{engineer_pu_dataset, generate_scar_blobs, ScarBlobSpec};
use pugraph::metrics::{estimated_vs_defacto, Metric};
use pugraph::pu::{class_prior_from, fit_elkanoto, ElkanotoConfig};
use pugraph::rng::derive_seed;

#[derive(Debug, Serialize)]
pub struct TreeLayout {
    /// `[x, y, depth]` per node, breadth-first order.
    pub nodes: Vec<[f64; 3]>,
    pub edges: Vec<[usize; 2]>,
}

/// 2-d Poincaré embedding of a complete binary tree.
pub fn poincare_tree_data(depth: u32, epochs: u32, seed: u64) -> Result<TreeLayout> {
    let depth = depth.clamp(1, 7);
    let n = (1usize << (depth + 1)) - 1;
    let edges: Vec<(usize, usize)> = (1..n).map(|c| ((c - 1) / 2, c)).collect();
    let graph = TransactionGraph::from_dense_edges(n, &edges);
    let cfg = PoincareConfig {
        dim: 2,
        epochs: epochs.max(1) as usize,
        rng_seed: seed,
        ..Default::default()
    };
    let emb = train_poincare(&graph, &cfg)?;
    let nodes = (0..n)
        .map(|v| [emb.vectors[[v, 0]], emb.vectors[[v, 1]], (usize::BITS - (v + 1).leading_zeros() - 1) as f64])
        .collect();
    Ok(TreeLayout {
        nodes,
        edges: edges.into_iter().map(|(a, b)| [a, b]).collect(),
    })
}

#[derive(Debug, Serialize)]
pub struct CalibrationView {
    pub c_true: f64,
    pub c_hat: f64,
    pub pi_true: f64,
    pub pi_hat: f64,
    /// `[x0, x1, s, y, score]` per point.
    pub points: Vec<[f64; 5]>,
}

/// Labels a fraction `c` of the positives in a two-blob sample, fits the
/// calibrated PU model and reports its estimates of `c` and the prior.
pub fn c_hat_data(label_frequency: f64, prior: f64, separation: f64, seed: u64) -> Result<CalibrationView> {
    let spec = ScarBlobSpec {
        n: 1000,
        dim: 2,
        prior,
        label_frequency,
        separation,
    };
    let data = generate_scar_blobs(&spec, seed)?;
    let model = fit_elkanoto(&data, &ElkanotoConfig::default(), derive_seed(seed, 1))?;
    let y = data.y.as_deref().unwrap_or(&data.s);
    let points = (0..data.len())
        .map(|i| {
            let row = data.features.row(i);
            [row[0], row[1], data.s[i] as u8 as f64, y[i] as u8 as f64, model.score_row(row)]
        })
        .collect();
    Ok(CalibrationView {
        c_true: label_frequency,
        c_hat: model.c_hat,
        pi_true: y.iter().filter(|&&b| b).count() as f64 / y.len() as f64,
        pi_hat: class_prior_from(data.labeled_fraction(), model.c_hat),
        points,
    })
}

#[derive(Debug, Serialize)]
pub struct CurvePoint {
    pub hidden: usize,
    /// Means of precision, recall, F1, PUF1 against `s`.
    pub estimated: [f64; 4],
    /// The same against `y`.
    pub defacto: [f64; 4],
}

/// Hides `0, step, 2·step, ..` of 200 labeled positives, fits on `s` and
/// scores a held-out 20% against both label sets. `model` is `lr` or `svm`.
pub fn hidden_curve_data(model: &str, max_hidden: usize, step: usize, repeats: usize, seed: u64) -> Result<Vec<CurvePoint>> {
    let spec = ScarBlobSpec {
        n: 2000,
        dim: 2,
        prior: 0.1,
        label_frequency: 1.0,
        separation: 4.0,
    };
    let step = step.max(1);
    let repeats = repeats.clamp(1, 20);
    let mut out = Vec::new();
    for hidden in (0..=max_hidden.min(190)).step_by(step) {
        let (mut est, mut def) = ([0.0; 4], [0.0; 4]);
        for r in 0..repeats {
            let rs = derive_seed(seed, r as u64);
            let data = generate_scar_blobs(&spec, derive_seed(rs, 0))?;
            let eng = engineer_pu_dataset(&data, hidden, derive_seed(rs, 1))?;
            let (train, test) = eng.data.split(0.8, derive_seed(rs, 2))?;
            let fitted = match model {
                "svm" => fit_linear_svm(&train, &SvmConfig::default(), derive_seed(rs, 3))?,
                _ => fit_logreg(&train, &LogregConfig::default(), derive_seed(rs, 3))?,
            };
            let pred = predict(&fitted, test.view(), 0.5)?;
            let (e, d) = estimated_vs_defacto(&pred.labels, &test.s, test.y.as_deref())?;
            for (k, m) in Metric::ALL.iter().enumerate() {
                est[k] += e.get(*m) / repeats as f64;
                def[k] += d.get(*m) / repeats as f64;
            }
        }
        out.push(CurvePoint {
            hidden,
            estimated: est,
            defacto: def,
        });
    }
    Ok(out)
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn poincare_tree(depth: u32, epochs: u32, seed: u32) -> std::result::Result<String, JsError> {
    to_js(poincare_tree_data(depth, epochs, seed as u64))
}

#[wasm_bindgen]
pub fn c_hat_explorer(label_frequency: f64, prior: f64, separation: f64, seed: u32) -> std::result::Result<String, JsError> {
    to_js(c_hat_data(label_frequency, prior, separation, seed as u64))
}

#[wasm_bindgen]
pub fn hidden_curve(model: &str, max_hidden: u32, step: u32, repeats: u32, seed: u32) -> std::result::Result<String, JsError> {
    to_js(hidden_curve_data(model, max_hidden as usize, step as usize, repeats as usize, seed as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_layout_stays_in_disk() {
        let t = poincare_tree_data(3, 100, 1).unwrap();
        assert_eq!(t.nodes.len(), 15);
        assert_eq!(t.edges.len(), 14);
        assert!(t.nodes.iter().all(|p| p[0].hypot(p[1]) < 1.0));
        assert_eq!(t.nodes[0][2], 0.0);
        assert_eq!(t.nodes[14][2], 3.0);
    }

    #[test]
    fn c_hat_tracks_label_frequency() {
        let v = c_hat_data(0.5, 0.2, 16.0, 3).unwrap();
        assert!((v.c_hat - 0.5).abs() < 0.1, "c_hat {}", v.c_hat);
        assert!((v.pi_hat - v.pi_true).abs() < 0.1);
        assert_eq!(v.points.len(), 1000);
    }

    #[test]
    fn curve_starts_with_equal_variants() {
        let c = hidden_curve_data("lr", 100, 50, 2, 5).unwrap();
        assert_eq!(c.iter().map(|p| p.hidden).collect::<Vec<_>>(), [0, 50, 100]);
        assert_eq!(c[0].estimated, c[0].defacto);
        assert!(c[2].estimated[0] < c[2].defacto[0]);
    }

    #[test]
    fn invalid_label_frequency_errors() {
        assert!(hidden_curve_data("lr", 10, 5, 1, 0).is_ok());
        assert!(c_hat_data(0.0, 0.1, 4.0, 0).is_err());
    }
}
