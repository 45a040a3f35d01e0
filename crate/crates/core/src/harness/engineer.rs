use rand::seq::SliceRandom;

use crate::classify::PuDataset;
use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::SubnetworkSample;
use crate::rng::rng_from_seed;

/// A PU dataset with a known set of hidden positives.
#[derive(Debug, Clone, PartialEq)]
pub struct Engineered {
    pub data: PuDataset,
    /// Row indices whose `s` was flipped to 0, ascending.
    pub hidden: Vec<usize>,
}

/// Hides `hide_count` labeled positives chosen uniformly. `y` keeps the
/// input's `y` when present and is the input `s` otherwise. For a fixed
/// seed, larger hide counts hide supersets of smaller ones.
pub fn engineer_pu_dataset(data: &PuDataset, hide_count: usize, seed: u64) -> Result<Engineered> {
    let mut positives: Vec<usize> = (0..data.len()).filter(|&i| data.s[i]).collect();
    if hide_count > positives.len() {
        return Err(Error::Sampling(format!(
            "cannot hide {hide_count} of {} labeled positives",
            positives.len()
        )));
    }
    positives.shuffle(&mut rng_from_seed(seed));
    let mut hidden = positives[..hide_count].to_vec();
    hidden.sort_unstable();
    let mut out = data.clone();
    out.y = Some(data.y.clone().unwrap_or_else(|| data.s.clone()));
    for &i in &hidden {
        out.s[i] = false;
    }
    Ok(Engineered { data: out, hidden })
}

/// Seed rows (positives, then sampled negatives) of a subnetwork with their
/// embedding vectors as features. `rows` holds local node ids.
pub fn seed_dataset(sample: &SubnetworkSample, emb: &EmbeddingMatrix) -> Result<PuDataset> {
    let seeds = sample.seeds();
    let s = seeds.iter().map(|&i| sample.labels.s[i]).collect();
    let y = sample.labels.y.as_ref().map(|y| seeds.iter().map(|&i| y[i]).collect());
    let mut data = PuDataset::new(emb.select(&seeds), s, y)?;
    data.rows = seeds;
    Ok(data)
}
