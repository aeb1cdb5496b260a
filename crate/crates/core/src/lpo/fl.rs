//! Baseline: the generalized Fortescue-Lo protocol on a target-pair graph.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::ConfigGraph;

/// Success probability of the generalized Fortescue-Lo protocol on the
/// standard W state over all nodes of `graph`.
///
/// A complete induced subgraph succeeds (in the limit) with certainty; three
/// parties with at least one target pair succeed with ⅔; larger subsets
/// lose a uniformly random party first.
pub fn p_fl(graph: &ConfigGraph) -> Result<f64> {
    let n = graph.len();
    if n < 2 {
        return Err(Error::InvalidGraph("need at least two parties".into()));
    }
    if n > 63 {
        return Err(Error::InvalidGraph("at most 63 parties supported".into()));
    }
    let mut memo = HashMap::new();
    Ok(recurse(graph, (1u64 << n) - 1, &mut memo))
}

fn recurse(graph: &ConfigGraph, mask: u64, memo: &mut HashMap<u64, f64>) -> f64 {
    if let Some(&v) = memo.get(&mask) {
        return v;
    }
    let idx: Vec<usize> = (0..graph.len()).filter(|i| mask & (1 << i) != 0).collect();
    let g = graph.induced(&idx);
    let v = if idx.len() < 2 || g.edge_count() == 0 {
        0.0
    } else if g.is_complete() {
        1.0
    } else if idx.len() == 3 {
        2.0 / 3.0
    } else if idx.len() == 2 {
        0.0
    } else {
        let sum: f64 = idx
            .iter()
            .map(|&i| recurse(graph, mask & !(1 << i), memo))
            .sum();
        sum / idx.len() as f64
    };
    memo.insert(mask, v);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::graph_catalog;

    #[test]
    fn reference_values() {
        let v = |name: &str| p_fl(&graph_catalog(name, None).unwrap()).unwrap();
        assert!((v("VI") - 0.75).abs() < 1e-15);
        assert!((v("wedge") - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(v("triangle"), 1.0);
        assert_eq!(v("V"), 1.0);
        for n in 2..8 {
            assert_eq!(
                p_fl(&graph_catalog("complete", Some(n)).unwrap()).unwrap(),
                1.0
            );
        }
    }
}
