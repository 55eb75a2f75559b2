//! Per-chunk surprisal, in bits, from exported token log-probabilities.

use serde::{Deserialize, Serialize};

use crate::bundle::{Bundle, BundleError};
use crate::corpus::{GardenPathItem, Variant};
use crate::error::{Error, Result};
use crate::N_CHUNKS;

/// Allowed disagreement between a prefix pass and the full pass on shared tokens.
pub const PREFIX_CONSISTENCY_TOL: f32 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkSurprisal {
    pub item_id: String,
    pub variant: Variant,
    /// 1-based chunk.
    pub chunk_index: usize,
    pub mean_surprisal_bits: f64,
    pub token_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurprisalProfile {
    pub chunks: Vec<ChunkSurprisal>,
    /// Tokens without left context (the first token), not scored.
    pub unscored_tokens: usize,
}

impl SurprisalProfile {
    pub fn scored_tokens(&self) -> usize {
        self.chunks.iter().map(|c| c.token_count).sum()
    }

    pub fn chunk(&self, chunk_index: usize) -> &ChunkSurprisal {
        &self.chunks[chunk_index - 1]
    }
}

/// `−log₂ p` from a natural-log probability.
pub fn bits(logprob: f64) -> f64 {
    -logprob / std::f64::consts::LN_2
}

/// Mean surprisal of each chunk from the full-sentence (prefix 5) bundle.
///
/// Tokens are assigned to chunks through their word, so a comma glued to
/// the first verb counts toward chunk 1.
pub fn chunk_surprisal(bundle: &Bundle, item: &GardenPathItem) -> Result<SurprisalProfile> {
    let m = &bundle.manifest;
    let logprobs = bundle
        .activations
        .token_logprob
        .as_ref()
        .ok_or_else(|| BundleError::SurprisalUnavailable {
            model_id: m.model_id.clone(),
        })?;
    if m.prefix_index != N_CHUNKS {
        return Err(Error::Analysis(format!(
            "surprisal needs the full-sentence bundle, got prefix {}",
            m.prefix_index
        )));
    }
    bundle.check_item(item)?;
    let mut sums = [0.0f64; N_CHUNKS];
    let mut counts = [0usize; N_CHUNKS];
    for (t, &lp) in logprobs.iter().enumerate().skip(1) {
        let word = m.word_of_token[t];
        let chunk = item.chunk_of_word(word).ok_or_else(|| {
            Error::Analysis(format!("token {t} (word {word}) is outside every chunk"))
        })?;
        sums[chunk] += bits(lp as f64);
        counts[chunk] += 1;
    }
    let chunks = (0..N_CHUNKS)
        .map(|k| {
            if counts[k] == 0 {
                return Err(Error::Analysis(format!(
                    "chunk {} of {} has no scored tokens",
                    k + 1,
                    m.item_id
                )));
            }
            Ok(ChunkSurprisal {
                item_id: m.item_id.clone(),
                variant: m.variant,
                chunk_index: k + 1,
                mean_surprisal_bits: sums[k] / counts[k] as f64,
                token_count: counts[k],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SurprisalProfile {
        chunks,
        unscored_tokens: logprobs.len().min(1),
    })
}

/// Checks that a shorter prefix pass agrees with the full pass on the tokens
/// they share. The last token of the shorter pass is skipped, since word
/// boundaries may tokenize differently at the end of a prefix.
pub fn check_prefix_consistency(prefix: &Bundle, full: &Bundle) -> Result<()> {
    let (Some(a), Some(b)) = (&prefix.activations.token_logprob, &full.activations.token_logprob) else {
        return Ok(());
    };
    let shared = prefix
        .manifest
        .tokens
        .iter()
        .zip(&full.manifest.tokens)
        .take_while(|(x, y)| x == y)
        .count()
        .min(prefix.manifest.n_tokens().saturating_sub(1));
    for t in 1..shared {
        if (a[t] - b[t]).abs() > PREFIX_CONSISTENCY_TOL {
            return Err(Error::Analysis(format!(
                "{}: token {t} log-probability {} differs from full pass {}",
                prefix.path.display(),
                a[t],
                b[t]
            )));
        }
    }
    Ok(())
}

/// Mean over items of one chunk's surprisal.
pub fn mean_chunk(profiles: &[SurprisalProfile], chunk_index: usize) -> Option<f64> {
    if profiles.is_empty() {
        return None;
    }
    Some(profiles.iter().map(|p| p.chunk(chunk_index).mean_surprisal_bits).sum::<f64>() / profiles.len() as f64)
}

/// Chunk-4 surprisal against the mean of chunks 1–3, averaged over items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisambiguationPeak {
    pub chunk4_mean_bits: f64,
    pub chunks1to3_mean_bits: f64,
}

impl DisambiguationPeak {
    pub fn rises(&self) -> bool {
        self.chunk4_mean_bits > self.chunks1to3_mean_bits
    }
}

pub fn disambiguation_peak(profiles: &[SurprisalProfile]) -> Option<DisambiguationPeak> {
    let chunk4 = mean_chunk(profiles, 4)?;
    let early = (1..=3).map(|k| mean_chunk(profiles, k).unwrap()).sum::<f64>() / 3.0;
    Some(DisambiguationPeak {
        chunk4_mean_bits: chunk4,
        chunks1to3_mean_bits: early,
    })
}
