//! Probe loss and its analytic gradient.
//!
//! Per sentence of n words:
//!
//! ```text
//! L = (1/n²) Σ_{i,j} | ‖B(h_i − h_j)‖² − d_T(i, j) |
//! ```
//!
//! With `P = H·Bᵀ` (projected vectors, `[n, k]`), `s_ij = sign(d_B − d_T)` and
//! the Laplacian `Λ = diag(Σ_j s_ij) − S`, the gradient is
//! `∂L/∂B = (4/n²) · Pᵀ Λ H`.

use super::DistanceMatrix;

pub(crate) fn project(weights: &[f64], rank: usize, dim: usize, v: &[f64]) -> Vec<f64> {
    (0..rank)
        .map(|r| {
            weights[r * dim..(r + 1) * dim]
                .iter()
                .zip(v)
                .map(|(w, x)| w * x)
                .sum()
        })
        .collect()
}

fn project_all(weights: &[f64], rank: usize, dim: usize, vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    vectors.iter().map(|v| project(weights, rank, dim, v)).collect()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// All pairwise `‖B(h_i − h_j)‖²`; exactly symmetric by construction.
pub fn pairwise_distances(weights: &[f64], rank: usize, dim: usize, vectors: &[Vec<f64>]) -> DistanceMatrix {
    let projected = project_all(weights, rank, dim, vectors);
    let n = vectors.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = squared_distance(&projected[i], &projected[j]);
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    DistanceMatrix::new(n, data).expect("n*n entries")
}

/// Loss of one sentence under `weights` (`[rank, dim]`, row-major).
pub fn sentence_loss(weights: &[f64], rank: usize, dim: usize, vectors: &[Vec<f64>], target: &DistanceMatrix) -> f64 {
    let n = vectors.len();
    let predicted = pairwise_distances(weights, rank, dim, vectors);
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            total += (predicted.get(i, j) - target.get(i, j)).abs();
        }
    }
    total / (n * n) as f64
}

/// Loss and `∂L/∂B` (same layout as `weights`).
pub fn sentence_loss_and_grad(
    weights: &[f64],
    rank: usize,
    dim: usize,
    vectors: &[Vec<f64>],
    target: &DistanceMatrix,
) -> (f64, Vec<f64>) {
    let n = vectors.len();
    let projected = project_all(weights, rank, dim, vectors);
    let norm = (n * n) as f64;

    // Laplacian of the sign matrix
    let mut lap = vec![0.0; n * n];
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let gap = squared_distance(&projected[i], &projected[j]) - target.get(i, j);
            total += 2.0 * gap.abs();
            let s = if gap > 0.0 {
                1.0
            } else if gap < 0.0 {
                -1.0
            } else {
                0.0
            };
            lap[i * n + j] -= s;
            lap[j * n + i] -= s;
            lap[i * n + i] += s;
            lap[j * n + j] += s;
        }
    }
    // diagonal target entries contribute |0 − d_T(i,i)|
    for i in 0..n {
        total += target.get(i, i).abs();
    }

    // M = Λ·H, [n, dim]
    let mut m = vec![0.0; n * dim];
    for i in 0..n {
        for j in 0..n {
            let l = lap[i * n + j];
            if l != 0.0 {
                let row = &mut m[i * dim..(i + 1) * dim];
                for (acc, x) in row.iter_mut().zip(&vectors[j]) {
                    *acc += l * x;
                }
            }
        }
    }
    // grad = (4/n²)·Pᵀ·M, [rank, dim]
    let scale = 4.0 / norm;
    let mut grad = vec![0.0; rank * dim];
    for i in 0..n {
        let m_row = &m[i * dim..(i + 1) * dim];
        for r in 0..rank {
            let p = projected[i][r] * scale;
            if p != 0.0 {
                let g_row = &mut grad[r * dim..(r + 1) * dim];
                for (g, x) in g_row.iter_mut().zip(m_row) {
                    *g += p * x;
                }
            }
        }
    }
    (total / norm, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn loss_value_matches_definition() {
        // k = d = 1, B = [2], h = [0, 1, 3]
        let vectors = vec![vec![0.0], vec![1.0], vec![3.0]];
        let target = DistanceMatrix::from_fn(3, |i, j| (i as f64 - j as f64).abs());
        // d_B: (0,1)=4, (0,2)=36, (1,2)=16 ; targets 1, 2, 1 ; gaps 3, 34, 15
        let expected = 2.0 * (3.0 + 34.0 + 15.0) / 9.0;
        assert!((sentence_loss(&[2.0], 1, 1, &vectors, &target) - expected).abs() < 1e-12);
        let (l, _) = sentence_loss_and_grad(&[2.0], 1, 1, &vectors, &target);
        assert!((l - expected).abs() < 1e-12);
    }

    #[test]
    fn grad_matches_pairwise_formula() {
        // direct sum of sign·2·(BΔ)Δᵀ/n² over ordered pairs
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (k, d, n) = (2, 3, 4);
        let w: Vec<f64> = (0..k * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let vectors: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let target = DistanceMatrix::from_fn(n, |i, j| if i == j { 0.0 } else { 1.0 });
        let (_, grad) = sentence_loss_and_grad(&w, k, d, &vectors, &target);
        let mut direct = vec![0.0; k * d];
        for i in 0..n {
            for j in 0..n {
                let delta: Vec<f64> = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a - b).collect();
                let bd = project(&w, k, d, &delta);
                let db: f64 = bd.iter().map(|x| x * x).sum();
                let s = (db - target.get(i, j)).signum() * if db == target.get(i, j) { 0.0 } else { 1.0 };
                for r in 0..k {
                    for c in 0..d {
                        direct[r * d + c] += s * 2.0 * bd[r] * delta[c] / (n * n) as f64;
                    }
                }
            }
        }
        for (a, b) in grad.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}
