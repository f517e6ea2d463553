//! Lexical and vector similarity measures.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::embedding::EmbeddingVector;

/// Edit distance with unit-cost insertion, deletion and substitution over
/// Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Unit of the sets compared by the Jaccard measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    /// Non-whitespace characters.
    #[default]
    Char,
    /// Whitespace-separated tokens.
    Token,
}

fn sets(a: &str, b: &str, granularity: Granularity) -> (BTreeSet<String>, BTreeSet<String>) {
    match granularity {
        Granularity::Char => {
            let f = |s: &str| s.chars().filter(|c| !c.is_whitespace()).map(String::from).collect();
            (f(a), f(b))
        }
        Granularity::Token => {
            let f = |s: &str| s.split_whitespace().map(String::from).collect();
            (f(a), f(b))
        }
    }
}

/// |A ∩ B| / |A ∪ B|; two empty sets are identical (similarity 1).
pub fn jaccard_similarity(a: &str, b: &str, granularity: Granularity) -> f64 {
    let (x, y) = sets(a, b, granularity);
    let union = x.union(&y).count();
    if union == 0 {
        return 1.0;
    }
    x.intersection(&y).count() as f64 / union as f64
}

/// (|A ∪ B| - |A ∩ B|) / |A ∪ B|, divided directly so a distance equal to a
/// decimal threshold compares equal to it.
pub fn jaccard_distance(a: &str, b: &str, granularity: Granularity) -> f64 {
    let (x, y) = sets(a, b, granularity);
    let union = x.union(&y).count();
    if union == 0 {
        return 0.0;
    }
    (union - x.intersection(&y).count()) as f64 / union as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("cosine similarity is undefined for a zero vector")]
pub struct ZeroVector;

/// Dot product of the L2-normalized inputs, clamped to [-1, 1].
pub fn cosine_similarity(x: &EmbeddingVector, y: &EmbeddingVector) -> Result<f64, ZeroVector> {
    let nx = x.norm();
    let ny = y.norm();
    if nx == 0.0 || ny == 0.0 || !nx.is_finite() || !ny.is_finite() {
        return Err(ZeroVector);
    }
    let dot: f64 = x
        .components()
        .iter()
        .zip(y.components())
        .map(|(a, b)| (a / nx) * (b / ny))
        .sum();
    Ok(dot.clamp(-1.0, 1.0))
}
