use serde::{Deserialize, Serialize};

use super::{decode_mst, DistanceMatrix, Edge, ProbeError, StructuralProbe};
use crate::bundle::{Bundle, BundleManifest};
use crate::corpus::{GardenPathItem, GoldRoles, Variant};
use crate::error::Result;
use crate::tensor::Tensor;
use crate::treebank::{adjacency, bfs, GoldTree};

pub type RoleWordIndices = GoldRoles;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The noun phrase sits nearer the first verb.
    Misinterpretation,
    /// The noun phrase sits nearer the disambiguating verb.
    Correct,
    Other,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Misinterpretation => "misinterpretation",
            Verdict::Correct => "correct",
            Verdict::Other => "other",
        }
    }
}

/// Compares tree-path distances from the noun-phrase head to both verbs.
///
/// Nearer the second verb is `Correct`, nearer the first is
/// `Misinterpretation`; ties, roles outside `0..n_words` and disconnected
/// inputs give `Other`.
pub fn judge_attachment(n_words: usize, edges: &[Edge], roles: &GoldRoles) -> Verdict {
    let GoldRoles {
        verb1_word,
        np_head_word,
        verb2_word,
    } = *roles;
    if [verb1_word, np_head_word, verb2_word].iter().any(|&w| w >= n_words) {
        return Verdict::Other;
    }
    if edges.iter().any(|e| e.0.max(e.1) >= n_words) {
        return Verdict::Other;
    }
    let adj = adjacency(n_words, edges);
    let mut dist = vec![u32::MAX; n_words];
    bfs(&adj, np_head_word, &mut dist);
    let (to_v1, to_v2) = (dist[verb1_word], dist[verb2_word]);
    if to_v1 == u32::MAX || to_v2 == u32::MAX {
        return Verdict::Other;
    }
    match to_v2.cmp(&to_v1) {
        std::cmp::Ordering::Less => Verdict::Correct,
        std::cmp::Ordering::Greater => Verdict::Misinterpretation,
        std::cmp::Ordering::Equal => Verdict::Other,
    }
}

/// Fraction of gold edges recovered, edges compared as unordered pairs.
pub fn uuas(predicted: &[Edge], gold: &GoldTree) -> Result<f64, ProbeError> {
    let n = gold.n_words();
    let max_word = predicted.iter().map(|e| e.0.max(e.1) + 1).max().unwrap_or(0);
    if predicted.len() != n - 1 || max_word > n {
        return Err(ProbeError::WordCountMismatch {
            predicted: max_word.max(predicted.len() + 1),
            gold: n,
        });
    }
    Ok(uuas_edges(predicted, gold.edges()))
}

/// `|predicted ∩ gold| / |gold|`; 1.0 when gold has no edges.
pub fn uuas_edges(predicted: &[Edge], gold: &[Edge]) -> f64 {
    if gold.is_empty() {
        return 1.0;
    }
    let predicted: std::collections::BTreeSet<Edge> = predicted.iter().map(|e| Edge::new(e.0, e.1)).collect();
    let hits = gold
        .iter()
        .filter(|e| predicted.contains(&Edge::new(e.0, e.1)))
        .count();
    hits as f64 / gold.len() as f64
}

/// Mean of the subword vectors of each word at one hidden layer.
pub fn pool_word_vectors(manifest: &BundleManifest, hidden: &Tensor, layer: usize) -> Result<Vec<Vec<f64>>, ProbeError> {
    let available = hidden.shape()[0];
    if layer >= available {
        return Err(ProbeError::LayerOutOfRange { layer, available });
    }
    let dim = hidden.shape()[2];
    (0..manifest.n_words())
        .map(|w| {
            let tokens = manifest.tokens_of_word(w);
            let count = tokens.len() as f64;
            let mut v = vec![0.0; dim];
            for t in tokens {
                for (acc, &x) in v.iter_mut().zip(hidden.row(&[layer, t])) {
                    *acc += x as f64;
                }
            }
            v.iter_mut().for_each(|x| *x /= count);
            Ok(v)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseTreeSnapshot {
    pub item_id: String,
    pub variant: Variant,
    pub prefix_index: usize,
    pub words: Vec<String>,
    pub edges: Vec<Edge>,
    pub distances: DistanceMatrix,
    pub verdict: Verdict,
}

/// Decodes the probe's tree for one prefix bundle and judges the attachment.
///
/// Prefixes with fewer than two words give an empty tree with verdict `Other`.
pub fn extract_snapshot(probe: &StructuralProbe, bundle: &Bundle, item: &GardenPathItem) -> Result<ParseTreeSnapshot> {
    let m = &bundle.manifest;
    bundle.check_item(item)?;
    let rendered = item.render(m.variant);
    let words: Vec<String> = rendered
        .prefix(m.prefix_index)
        .unwrap_or_default()
        .split_whitespace()
        .map(str::to_string)
        .collect();
    if words.len() < 2 {
        return Ok(ParseTreeSnapshot {
            item_id: m.item_id.clone(),
            variant: m.variant,
            prefix_index: m.prefix_index,
            distances: DistanceMatrix::from_fn(words.len(), |_, _| 0.0),
            words,
            edges: Vec::new(),
            verdict: Verdict::Other,
        });
    }
    if m.hidden_dim != probe.hidden_dim() {
        return Err(ProbeError::DimensionMismatch {
            expected: probe.hidden_dim(),
            actual: m.hidden_dim,
        }
        .into());
    }
    let vectors = pool_word_vectors(m, bundle.hidden()?, probe.layer())?;
    let distances = probe.distance_matrix(&vectors)?;
    let edges = decode_mst(&distances)?;
    let verdict = judge_attachment(words.len(), &edges, &item.gold_roles());
    Ok(ParseTreeSnapshot {
        item_id: m.item_id.clone(),
        variant: m.variant,
        prefix_index: m.prefix_index,
        words,
        edges,
        distances,
        verdict,
    })
}

/// Percentage of snapshots for (variant, prefix) with verdict `Correct`,
/// with the number of snapshots counted. `None` when there are none.
pub fn correct_shift_percent(snapshots: &[ParseTreeSnapshot], variant: Variant, prefix_index: usize) -> Option<(f64, usize)> {
    let selected: Vec<_> = snapshots
        .iter()
        .filter(|s| s.variant == variant && s.prefix_index == prefix_index)
        .collect();
    if selected.is_empty() {
        return None;
    }
    let correct = selected.iter().filter(|s| s.verdict == Verdict::Correct).count();
    Some((100.0 * correct as f64 / selected.len() as f64, selected.len()))
}
