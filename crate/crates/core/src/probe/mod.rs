//! Structural probe: a rank-k linear map `B` whose squared distances
//! `‖B(h_i − h_j)‖²` approximate parse-tree path lengths, plus minimum
//! spanning tree decoding and attachment judgement.

mod checkpoint;
mod loss;
mod mst;
mod snapshot;
mod train;

use serde::{Deserialize, Serialize};

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_FORMAT};
pub use loss::{pairwise_distances, sentence_loss, sentence_loss_and_grad};
pub use mst::{decode_mst, tree_weight};
pub use snapshot::{
    correct_shift_percent, extract_snapshot, judge_attachment, pool_word_vectors, uuas, uuas_edges,
    ParseTreeSnapshot, RoleWordIndices, Verdict,
};
pub use train::{mean_loss, select_layer, train_probe, LayerData, LayerSweep, TrainReport, TrainingSentence};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProbeError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid probe: {0}")]
    InvalidProbe(String),
    #[error("distance matrix is asymmetric at ({i}, {j})")]
    Asymmetric { i: usize, j: usize },
    #[error("distance matrix has a negative entry at ({i}, {j})")]
    Negative { i: usize, j: usize },
    #[error("distance matrix has a non-finite entry at ({i}, {j})")]
    NonFinite { i: usize, j: usize },
    #[error("distance matrix has a non-zero diagonal at {i}")]
    NonZeroDiagonal { i: usize },
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("training sentence {index}: {message}")]
    BadSentence { index: usize, message: String },
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("word count mismatch: {predicted} vs {gold}")]
    WordCountMismatch { predicted: usize, gold: usize },
    #[error("probe layer {layer} not in bundle with {available} hidden layers")]
    LayerOutOfRange { layer: usize, available: usize },
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
}

/// Undirected edge stored as `(min, max)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge(pub usize, pub usize);

impl Edge {
    pub fn new(a: usize, b: usize) -> Self {
        Edge(a.min(b), a.max(b))
    }
}

/// Dense square matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self, ProbeError> {
        if data.len() != n * n {
            return Err(ProbeError::DimensionMismatch {
                expected: n * n,
                actual: data.len(),
            });
        }
        Ok(DistanceMatrix { n, data })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        DistanceMatrix { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, c: f64) -> Self {
        DistanceMatrix {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// Symmetric (relative tolerance 1e-9), non-negative, finite, zero diagonal.
    pub fn validate(&self) -> Result<(), ProbeError> {
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.get(i, j);
                if !v.is_finite() {
                    return Err(ProbeError::NonFinite { i, j });
                }
                if v < 0.0 {
                    return Err(ProbeError::Negative { i, j });
                }
                if i == j && v != 0.0 {
                    return Err(ProbeError::NonZeroDiagonal { i });
                }
                let w = self.get(j, i);
                if (v - w).abs() > 1e-9 * v.abs().max(w.abs()).max(1.0) {
                    return Err(ProbeError::Asymmetric { i, j });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Probe rank k.
    pub rank: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            rank: 64,
            learning_rate: 1e-3,
            epochs: 40,
            batch_size: 20,
            seed: 0,
        }
    }
}

/// Trained structural probe. `weights` is `B`, row-major `[rank, hidden_dim]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralProbe {
    rank: usize,
    hidden_dim: usize,
    layer: usize,
    config: TrainConfig,
    weights: Vec<f64>,
}

impl StructuralProbe {
    pub fn new(rank: usize, hidden_dim: usize, layer: usize, config: TrainConfig, weights: Vec<f64>) -> Result<Self, ProbeError> {
        if rank == 0 || rank > hidden_dim {
            return Err(ProbeError::InvalidProbe(format!(
                "rank {rank} must be in 1..={hidden_dim}"
            )));
        }
        if weights.len() != rank * hidden_dim {
            return Err(ProbeError::DimensionMismatch {
                expected: rank * hidden_dim,
                actual: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(ProbeError::InvalidProbe("non-finite weight".into()));
        }
        Ok(StructuralProbe {
            rank,
            hidden_dim,
            layer,
            config,
            weights,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn layer(&self) -> usize {
        self.layer
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `B·v`.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>, ProbeError> {
        if v.len() != self.hidden_dim {
            return Err(ProbeError::DimensionMismatch {
                expected: self.hidden_dim,
                actual: v.len(),
            });
        }
        Ok(loss::project(&self.weights, self.rank, self.hidden_dim, v))
    }

    /// `‖B(h_i − h_j)‖²`.
    pub fn distance(&self, h_i: &[f64], h_j: &[f64]) -> Result<f64, ProbeError> {
        if h_i.len() != h_j.len() {
            return Err(ProbeError::DimensionMismatch {
                expected: h_i.len(),
                actual: h_j.len(),
            });
        }
        let diff: Vec<f64> = h_i.iter().zip(h_j).map(|(a, b)| a - b).collect();
        Ok(self.project(&diff)?.iter().map(|x| x * x).sum())
    }

    /// Pairwise probe distances between word vectors.
    pub fn distance_matrix(&self, vectors: &[Vec<f64>]) -> Result<DistanceMatrix, ProbeError> {
        if let Some(v) = vectors.iter().find(|v| v.len() != self.hidden_dim) {
            return Err(ProbeError::DimensionMismatch {
                expected: self.hidden_dim,
                actual: v.len(),
            });
        }
        Ok(pairwise_distances(&self.weights, self.rank, self.hidden_dim, vectors))
    }
}

/// Free-function form of [`StructuralProbe::distance`].
pub fn probe_distance(probe: &StructuralProbe, h_i: &[f64], h_j: &[f64]) -> Result<f64, ProbeError> {
    probe.distance(h_i, h_j)
}
