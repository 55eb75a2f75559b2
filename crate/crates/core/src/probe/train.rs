use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::loss::{sentence_loss, sentence_loss_and_grad};
use super::mst::decode_mst;
use super::snapshot::uuas;
use super::{DistanceMatrix, ProbeError, StructuralProbe, TrainConfig};
use crate::treebank::GoldTree;

/// Word vectors of one sentence and the distances they should reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSentence {
    pub vectors: Vec<Vec<f64>>,
    pub target: DistanceMatrix,
}

impl TrainingSentence {
    pub fn from_tree(vectors: Vec<Vec<f64>>, tree: &GoldTree) -> Self {
        TrainingSentence {
            vectors,
            target: tree.distance_matrix(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-sentence loss of each epoch, accumulated during the pass.
    pub epoch_losses: Vec<f64>,
    /// Learning rate used in each epoch.
    pub learning_rates: Vec<f64>,
}

fn check_sentences(sentences: &[TrainingSentence]) -> Result<usize, ProbeError> {
    let first = sentences.first().ok_or(ProbeError::EmptyTrainingSet)?;
    let dim = first.vectors.first().map_or(0, Vec::len);
    for (index, s) in sentences.iter().enumerate() {
        let bad = |message: String| ProbeError::BadSentence { index, message };
        let n = s.vectors.len();
        if n < 2 {
            return Err(bad(format!("{n} words, need at least 2")));
        }
        if s.target.len() != n {
            return Err(bad(format!("{n} vectors but a {}-word target", s.target.len())));
        }
        if let Some(v) = s.vectors.iter().find(|v| v.len() != dim) {
            return Err(ProbeError::DimensionMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
        if s.vectors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(bad("non-finite word vector".into()));
        }
    }
    if dim == 0 {
        return Err(ProbeError::BadSentence {
            index: 0,
            message: "zero-dimensional vectors".into(),
        });
    }
    Ok(dim)
}

/// Fits `B` by minibatch SGD on the L1 distance loss.
///
/// The learning rate halves after any epoch whose mean loss does not improve
/// on the best seen so far. Runs single-threaded; the same seed yields
/// bit-identical weights. Weights are rounded to `f32` precision on return so
/// a saved checkpoint reloads to the same probe.
pub fn train_probe(
    sentences: &[TrainingSentence],
    layer: usize,
    config: &TrainConfig,
) -> Result<(StructuralProbe, TrainReport), ProbeError> {
    let dim = check_sentences(sentences)?;
    if config.rank == 0 || config.rank > dim {
        return Err(ProbeError::InvalidProbe(format!(
            "rank {} must be in 1..={dim}",
            config.rank
        )));
    }
    if config.batch_size == 0 || config.learning_rate.is_nan() || config.learning_rate <= 0.0 {
        return Err(ProbeError::InvalidProbe(
            "batch size and learning rate must be positive".into(),
        ));
    }
    let rank = config.rank;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let init = Normal::new(0.0, 1.0 / (dim as f64).sqrt()).expect("positive std");
    let mut weights: Vec<f64> = (0..rank * dim).map(|_| init.sample(&mut rng)).collect();

    let mut order: Vec<usize> = (0..sentences.len()).collect();
    let mut lr = config.learning_rate;
    let mut best = f64::INFINITY;
    let mut report = TrainReport {
        epoch_losses: Vec::with_capacity(config.epochs),
        learning_rates: Vec::with_capacity(config.epochs),
    };
    let mut grad_sum = vec![0.0; rank * dim];
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad_sum.fill(0.0);
            for &idx in batch {
                let s = &sentences[idx];
                let (loss, grad) = sentence_loss_and_grad(&weights, rank, dim, &s.vectors, &s.target);
                epoch_loss += loss;
                for (acc, g) in grad_sum.iter_mut().zip(&grad) {
                    *acc += g;
                }
            }
            let step = lr / batch.len() as f64;
            for (w, g) in weights.iter_mut().zip(&grad_sum) {
                *w -= step * g;
            }
        }
        let mean = epoch_loss / sentences.len() as f64;
        if !mean.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(ProbeError::Diverged { epoch, loss: mean });
        }
        log::debug!("epoch {epoch}: loss {mean:.6} lr {lr:.3e}");
        report.epoch_losses.push(mean);
        report.learning_rates.push(lr);
        if mean < best {
            best = mean;
        } else {
            lr *= 0.5;
        }
    }
    for w in weights.iter_mut() {
        *w = *w as f32 as f64;
    }
    let probe = StructuralProbe::new(rank, dim, layer, config.clone(), weights)?;
    Ok((probe, report))
}

/// Mean loss of a probe over a set of sentences.
pub fn mean_loss(probe: &StructuralProbe, sentences: &[TrainingSentence]) -> f64 {
    let total: f64 = sentences
        .iter()
        .map(|s| sentence_loss(probe.weights(), probe.rank(), probe.hidden_dim(), &s.vectors, &s.target))
        .sum();
    total / sentences.len().max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSweep {
    pub best_layer: usize,
    /// `(layer, mean dev UUAS)` for every candidate layer.
    pub dev_uuas: Vec<(usize, f64)>,
}

/// Candidate layer with its train and dev sentences. Dev sentences line up
/// with `dev_gold` passed to [`select_layer`].
pub struct LayerData {
    pub layer: usize,
    pub train: Vec<TrainingSentence>,
    pub dev: Vec<Vec<Vec<f64>>>,
}

/// Trains one probe per layer and keeps the one with highest mean dev UUAS.
/// Ties go to the lower layer.
pub fn select_layer(
    layers: &[LayerData],
    dev_gold: &[GoldTree],
    config: &TrainConfig,
) -> Result<(StructuralProbe, LayerSweep), ProbeError> {
    let mut best: Option<(f64, StructuralProbe)> = None;
    let mut dev_uuas = Vec::new();
    for data in layers {
        if data.dev.len() != dev_gold.len() {
            return Err(ProbeError::WordCountMismatch {
                predicted: data.dev.len(),
                gold: dev_gold.len(),
            });
        }
        let (probe, _) = train_probe(&data.train, data.layer, config)?;
        let mut total = 0.0;
        for (vectors, gold) in data.dev.iter().zip(dev_gold) {
            let edges = decode_mst(&probe.distance_matrix(vectors)?)?;
            total += uuas(&edges, gold)?;
        }
        let score = total / dev_gold.len().max(1) as f64;
        log::info!("layer {}: dev UUAS {score:.4}", data.layer);
        dev_uuas.push((data.layer, score));
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, probe));
        }
    }
    let (_, probe) = best.ok_or(ProbeError::EmptyTrainingSet)?;
    Ok((
        probe.clone(),
        LayerSweep {
            best_layer: probe.layer(),
            dev_uuas,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_sentences(seed: u64, count: usize, n: usize, d: usize) -> Vec<TrainingSentence> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let vectors: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
                let target = DistanceMatrix::from_fn(n, |i, j| (i as f64 - j as f64).abs());
                TrainingSentence { vectors, target }
            })
            .collect()
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        let cfg = TrainConfig {
            rank: 2,
            ..TrainConfig::default()
        };
        assert_eq!(train_probe(&[], 0, &cfg).unwrap_err(), ProbeError::EmptyTrainingSet);
        let mut s = random_sentences(1, 2, 3, 4);
        s[1].vectors[0].pop();
        assert!(matches!(train_probe(&s, 0, &cfg).unwrap_err(), ProbeError::DimensionMismatch { .. }));
        let mut s = random_sentences(1, 1, 3, 4);
        s[0].vectors.truncate(1);
        assert!(matches!(train_probe(&s, 0, &cfg).unwrap_err(), ProbeError::BadSentence { .. }));
    }

    #[test]
    fn divergence_is_reported() {
        let s = random_sentences(2, 4, 4, 4);
        let cfg = TrainConfig {
            rank: 4,
            learning_rate: 1e12,
            epochs: 20,
            batch_size: 1,
            seed: 0,
        };
        assert!(matches!(train_probe(&s, 0, &cfg).unwrap_err(), ProbeError::Diverged { .. }));
    }

    #[test]
    fn seeded_training_is_bit_reproducible() {
        let s = random_sentences(5, 10, 5, 6);
        let cfg = TrainConfig {
            rank: 3,
            learning_rate: 0.05,
            epochs: 5,
            batch_size: 3,
            seed: 42,
        };
        let (a, ra) = train_probe(&s, 1, &cfg).unwrap();
        let (b, rb) = train_probe(&s, 1, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        let (c, _) = train_probe(&s, 1, &TrainConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.weights(), c.weights());
    }

    #[test]
    fn loss_does_not_increase_overall() {
        let s = random_sentences(6, 30, 6, 8);
        let cfg = TrainConfig {
            rank: 4,
            learning_rate: 0.02,
            epochs: 30,
            batch_size: 5,
            seed: 1,
        };
        let (_, report) = train_probe(&s, 0, &cfg).unwrap();
        assert!(report.epoch_losses.last() <= report.epoch_losses.first());
    }

    #[test]
    fn two_word_sentence_converges_to_unit_distance() {
        let s = vec![TrainingSentence {
            vectors: vec![vec![0.2, -0.4, 0.9], vec![-0.5, 0.3, 0.1]],
            target: DistanceMatrix::from_fn(2, |i, j| if i == j { 0.0 } else { 1.0 }),
        }];
        let cfg = TrainConfig {
            rank: 2,
            learning_rate: 0.1,
            epochs: 300,
            batch_size: 1,
            seed: 9,
        };
        let (probe, _) = train_probe(&s, 0, &cfg).unwrap();
        let d = probe.distance(&s[0].vectors[0], &s[0].vectors[1]).unwrap();
        assert!((d - 1.0).abs() <= 0.05, "distance {d}");
        // the closed-form rescaling of B along Δh reaches exactly 1
        let start = super::super::loss::pairwise_distances(probe.weights(), 2, 3, &s[0].vectors).get(0, 1);
        let c = (1.0 / start).sqrt();
        let scaled: Vec<f64> = probe.weights().iter().map(|w| w * c).collect();
        let exact = super::super::loss::pairwise_distances(&scaled, 2, 3, &s[0].vectors).get(0, 1);
        assert!((exact - 1.0).abs() < 1e-9);
    }
}
