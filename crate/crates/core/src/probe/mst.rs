use super::{DistanceMatrix, Edge, ProbeError};

/// Minimum spanning tree by Prim's algorithm, started at word 0.
///
/// Ties are broken by the lexicographically smallest `(min(i,j), max(i,j))`
/// edge, so the output is fully determined by the input. Edges are returned
/// in the order they were added.
pub fn decode_mst(distances: &DistanceMatrix) -> Result<Vec<Edge>, ProbeError> {
    distances.validate()?;
    let n = distances.len();
    if n <= 1 {
        return Ok(Vec::new());
    }
    let mut in_tree = vec![false; n];
    // best connection of each outside vertex: (weight, edge)
    let mut best: Vec<Option<(f64, Edge)>> = vec![None; n];
    in_tree[0] = true;
    for (v, b) in best.iter_mut().enumerate().skip(1) {
        *b = Some((distances.get(0, v), Edge::new(0, v)));
    }
    let mut edges = Vec::with_capacity(n - 1);
    for _ in 1..n {
        let (v, (_, edge)) = best
            .iter()
            .enumerate()
            .filter(|(v, _)| !in_tree[*v])
            .filter_map(|(v, b)| b.map(|b| (v, b)))
            .min_by(|(_, a), (_, b)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("graph is complete");
        in_tree[v] = true;
        edges.push(edge);
        for u in 0..n {
            if in_tree[u] {
                continue;
            }
            let candidate = (distances.get(v, u), Edge::new(v, u));
            let better = match best[u] {
                None => true,
                Some(cur) => candidate.0.total_cmp(&cur.0).then(candidate.1.cmp(&cur.1)).is_lt(),
            };
            if better {
                best[u] = Some(candidate);
            }
        }
    }
    Ok(edges)
}

/// Sum of edge weights.
///
/// Weights are summed in ascending order, so trees with the same multiset of
/// edge weights get bit-identical totals whatever the edge order.
pub fn tree_weight(distances: &DistanceMatrix, edges: &[Edge]) -> f64 {
    let mut w: Vec<f64> = edges.iter().map(|e| distances.get(e.0, e.1)).collect();
    w.sort_by(f64::total_cmp);
    w.iter().sum()
}
