//! Attention-head sensitivity to the correct attachment.
//!
//! Evidence for a link between two roles is the attention weight from the
//! later token to the earlier one, which exists under causal masking and in
//! bidirectional models alike. A head's index is
//! `evidence(verb2 → np) − evidence(np → verb1)`.

use serde::{Deserialize, Serialize};

use crate::bundle::{Bundle, TokenSpan, CAUSAL_TOL};
use crate::corpus::Variant;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Default threshold for difference maps.
pub const DEFAULT_THRESHOLD: f64 = 0.05;

/// How weights between multi-token role spans are reduced to one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanReduction {
    #[default]
    Max,
    Mean,
}

/// Values indexed `[layer][head]`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadMatrix {
    pub n_layers: usize,
    pub n_heads: usize,
    pub values: Vec<f64>,
}

impl HeadMatrix {
    pub fn zeros(n_layers: usize, n_heads: usize) -> Self {
        HeadMatrix {
            n_layers,
            n_heads,
            values: vec![0.0; n_layers * n_heads],
        }
    }

    pub fn get(&self, layer: usize, head: usize) -> f64 {
        self.values[layer * self.n_heads + head]
    }

    fn set(&mut self, layer: usize, head: usize, v: f64) {
        self.values[layer * self.n_heads + head] = v;
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityMap {
    pub model_id: String,
    pub variant: Variant,
    pub n_items: usize,
    pub matrix: HeadMatrix,
}

/// Reduced weight from tokens of `later` to tokens of `earlier`.
fn evidence(attn: &Tensor, layer: usize, head: usize, later: TokenSpan, earlier: TokenSpan, reduction: SpanReduction) -> f64 {
    let weights = later
        .tokens()
        .flat_map(|a| earlier.tokens().map(move |b| (a, b)))
        .map(|(a, b)| attn.get(&[layer, head, a, b]) as f64);
    match reduction {
        SpanReduction::Max => weights.fold(f64::NEG_INFINITY, f64::max),
        SpanReduction::Mean => {
            let (sum, n) = weights.fold((0.0, 0usize), |(s, n), w| (s + w, n + 1));
            sum / n as f64
        }
    }
}

/// Per-head sensitivity for one bundle (normally the full-sentence prefix).
pub fn head_sensitivity(bundle: &Bundle, reduction: SpanReduction) -> Result<HeadMatrix> {
    let m = &bundle.manifest;
    let attn = bundle.attention()?;
    let span = |name: &str, s: Option<TokenSpan>| {
        s.filter(|s| !s.is_empty()).ok_or_else(|| {
            Error::Analysis(format!("{}: missing role span {name}", bundle.path.display()))
        })
    };
    let verb1 = span("verb1", m.role_token_spans.verb1)?;
    let np = span("np_head", m.role_token_spans.np_head)?;
    let verb2 = span("verb2", m.role_token_spans.verb2)?;
    if !(verb1.end <= np.start && np.end <= verb2.start) {
        return Err(Error::Analysis(format!(
            "{}: role spans out of order",
            bundle.path.display()
        )));
    }
    let mut out = HeadMatrix::zeros(m.n_layers, m.n_heads);
    for layer in 0..m.n_layers {
        for head in 0..m.n_heads {
            if m.causal {
                // np must never see verb2 under a causal mask
                let leak = np
                    .tokens()
                    .flat_map(|a| verb2.tokens().map(move |b| (a, b)))
                    .any(|(a, b)| attn.get(&[layer, head, a, b]) > CAUSAL_TOL);
                if leak {
                    return Err(Error::Analysis(format!(
                        "{}: causal bundle attends from np to verb2 (layer {layer}, head {head})",
                        bundle.path.display()
                    )));
                }
            }
            let positive = evidence(attn, layer, head, verb2, np, reduction);
            let negative = evidence(attn, layer, head, np, verb1, reduction);
            out.set(layer, head, positive - negative);
        }
    }
    Ok(out)
}

/// Element-wise mean over items.
pub fn aggregate_maps(model_id: &str, variant: Variant, per_item: &[HeadMatrix]) -> Result<SensitivityMap> {
    let first = per_item
        .first()
        .ok_or_else(|| Error::Analysis("no sensitivity matrices to aggregate".into()))?;
    let mut matrix = HeadMatrix::zeros(first.n_layers, first.n_heads);
    for m in per_item {
        if (m.n_layers, m.n_heads) != (first.n_layers, first.n_heads) {
            return Err(Error::Analysis(format!(
                "shape mismatch: {}x{} vs {}x{}",
                m.n_layers, m.n_heads, first.n_layers, first.n_heads
            )));
        }
        for (acc, v) in matrix.values.iter_mut().zip(&m.values) {
            *acc += v;
        }
    }
    let n = per_item.len() as f64;
    matrix.values.iter_mut().for_each(|v| *v /= n);
    Ok(SensitivityMap {
        model_id: model_id.into(),
        variant,
        n_items: per_item.len(),
        matrix,
    })
}

/// `present − absent`, with cells whose difference is below `threshold` set to zero.
pub fn difference_map(present: &SensitivityMap, absent: &SensitivityMap, threshold: f64) -> Result<HeadMatrix> {
    let (p, a) = (&present.matrix, &absent.matrix);
    if (p.n_layers, p.n_heads) != (a.n_layers, a.n_heads) {
        return Err(Error::Analysis("difference of maps with different shapes".into()));
    }
    Ok(HeadMatrix {
        n_layers: p.n_layers,
        n_heads: p.n_heads,
        values: p
            .values
            .iter()
            .zip(&a.values)
            .map(|(x, y)| {
                let d = x - y;
                if d < threshold {
                    0.0
                } else {
                    d
                }
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(values: Vec<f64>) -> HeadMatrix {
        HeadMatrix {
            n_layers: 1,
            n_heads: values.len(),
            values,
        }
    }

    #[test]
    fn aggregation() {
        let one = aggregate_maps("x", Variant::CommaAbsent, &[m(vec![0.2, -0.1])]).unwrap();
        assert_eq!(one.matrix.values, vec![0.2, -0.1]);
        let cancel = aggregate_maps("x", Variant::CommaAbsent, &[m(vec![0.2, -0.1]), m(vec![-0.2, 0.1])]).unwrap();
        assert_eq!(cancel.matrix.values, vec![0.0, 0.0]);
        assert!(aggregate_maps("x", Variant::CommaAbsent, &[m(vec![0.0]), m(vec![0.0, 1.0])]).is_err());
        assert!(aggregate_maps("x", Variant::CommaAbsent, &[]).is_err());
    }

    #[test]
    fn real_model_grid_sizes() {
        for (layers, heads) in [(40, 40), (24, 16)] {
            let items = vec![HeadMatrix::zeros(layers, heads); 3];
            let map = aggregate_maps("x", Variant::CommaPresent, &items).unwrap();
            assert_eq!(map.matrix.values.len(), layers * heads);
        }
    }

    #[test]
    fn thresholded_difference() {
        let p = aggregate_maps("x", Variant::CommaPresent, &[m(vec![0.3, 0.1, 0.0])]).unwrap();
        let a = aggregate_maps("x", Variant::CommaAbsent, &[m(vec![0.1, 0.08, 0.2])]).unwrap();
        let d = difference_map(&p, &a, 0.05).unwrap();
        assert!((d.values[0] - 0.2).abs() < 1e-12);
        assert_eq!(d.values[1], 0.0);
        assert_eq!(d.values[2], 0.0);
    }
}
