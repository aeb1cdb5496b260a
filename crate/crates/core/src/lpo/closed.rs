//! Closed forms of the protocol's success probability on small graphs, and
//! the weak-measurement perturbation on Configuration VI.
//!
//! All take `x₀ = 0` component vectors sorted in descending order, with the
//! labelling of the corresponding preset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ConfigGraph;

fn check_sorted(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::InvalidInput(format!(
            "expected {n} components, got {}",
            x.len()
        )));
    }
    if x.windows(2).any(|w| w[0] < w[1]) || x[0] <= 0.0 {
        return Err(Error::Precondition(
            "components must be sorted descending".into(),
        ));
    }
    Ok(())
}

/// Wedge `{AB, AC}` with `x_A ≥ x_B ≥ x_C`.
pub fn wedge_lpo(x: &[f64]) -> Result<f64> {
    check_sorted(x, 3)?;
    let (a, b, c) = (x[0], x[1], x[2]);
    Ok(2.0 * b + 2.0 * c - 2.0 * b * c / a)
}

/// Triangle with `x_A ≥ x_B ≥ x_C`.
pub fn triangle_lpo(x: &[f64]) -> Result<f64> {
    check_sorted(x, 3)?;
    let (a, b, c) = (x[0], x[1], x[2]);
    Ok(2.0 * b + 2.0 * c - b * c / a)
}

/// Configuration VI with `x_A ≥ x_B ≥ x_C ≥ x_D`, labelled so that A is the
/// three-edge party and C the pendant: edges `{AB, AC, AD, BD}` (see
/// [`vi_sorted_graph`]). The `VI` preset has its pendant at D instead.
pub fn vi_lpo(x: &[f64]) -> Result<f64> {
    check_sorted(x, 4)?;
    let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
    let k = (3.0 + 2.0 * 3f64.sqrt()) / 3.0;
    Ok(2.0 * (b + c + d) - b * d / a - 2.0 * b * c / a - 2.0 * c * d / a + k * b * c * d / (a * a))
}

/// Configuration VI in the labelling assumed by [`vi_lpo`].
pub fn vi_sorted_graph() -> ConfigGraph {
    ConfigGraph::from_edge_strings("ABCD", &["AB", "AC", "AD", "BD"]).expect("static graph")
}

/// Average change of the Configuration VI value under a weak diagonal
/// measurement by the largest party.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakImprovement {
    /// Two-outcome average of [`vi_lpo`] minus its value before measuring.
    pub numerical: f64,
    /// `−δ²·t²/(1−3t)·(20 − t(12 − 8√3)/(1−3t))`.
    pub printed: f64,
}

/// State `(1−3t, t, t, t)`; party A measures `diag(√a, √c)` /
/// `diag(√(1−a), √(1−c))` with `a = (1+δ)/2`, `c = (1−δ)/2`.
pub fn g6_weak_improvement(t: f64, delta: f64) -> Result<WeakImprovement> {
    if !(t > 0.0 && t < 0.25) {
        return Err(Error::InvalidInput(format!("t = {t} outside (0, 1/4)")));
    }
    if delta.is_nan() || delta.abs() >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "delta = {delta} outside (-1, 1)"
        )));
    }
    let x = [1.0 - 3.0 * t, t, t, t];
    let before = vi_lpo(&x)?;
    let a1 = 0.5 * (1.0 + delta);
    let c1 = 0.5 * (1.0 - delta);
    let mut avg = 0.0;
    for (a, c) in [(a1, c1), (1.0 - a1, 1.0 - c1)] {
        let mut y = x.map(|v| a * v);
        y[0] = c * x[0];
        let p: f64 = y.iter().sum();
        let post = y.map(|v| v / p);
        avg += p * vi_value_any_order(&post);
    }
    let s = 3f64.sqrt();
    let printed =
        -delta * delta * t * t / (1.0 - 3.0 * t) * (20.0 - t * (12.0 - 8.0 * s) / (1.0 - 3.0 * t));
    Ok(WeakImprovement {
        numerical: avg - before,
        printed,
    })
}

/// [`vi_lpo`] without the ordering check: near `t = ¼` a weak measurement
/// may push A just below the others.
fn vi_value_any_order(x: &[f64; 4]) -> f64 {
    let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
    let k = (3.0 + 2.0 * 3f64.sqrt()) / 3.0;
    2.0 * (b + c + d) - b * d / a - 2.0 * b * c / a - 2.0 * c * d / a + k * b * c * d / (a * a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_points() {
        assert!((wedge_lpo(&[0.5, 0.3, 0.2]).unwrap() - 0.76).abs() < 1e-14);
        assert!((triangle_lpo(&[0.5, 0.3, 0.2]).unwrap() - 0.88).abs() < 1e-14);
        let w4 = [0.25; 4];
        assert!((vi_lpo(&w4).unwrap() - (3.0 + 3f64.sqrt()) / 6.0).abs() < 1e-14);
        assert!(wedge_lpo(&[0.2, 0.3, 0.5]).is_err());
    }

    #[test]
    fn engine_agrees_on_sorted_states() {
        use crate::graph::graph_catalog;
        use crate::lpo::p_lpo;
        use crate::state::WState;
        let pts: [&[f64]; 4] = [
            &[0.4, 0.3, 0.2, 0.1],
            &[0.3, 0.25, 0.25, 0.2],
            &[0.5, 0.3, 0.15, 0.05],
            &[0.4, 0.3, 0.3, 0.0],
        ];
        let vi = vi_sorted_graph();
        assert!(vi.is_isomorphic(&graph_catalog("VI", None).unwrap()));
        for x in pts {
            let s = WState::from_components(x.to_vec()).unwrap();
            assert!(
                (p_lpo(&s, &vi).unwrap() - vi_lpo(x).unwrap()).abs() < 1e-12,
                "{x:?}"
            );
        }
        let wedge = graph_catalog("wedge", None).unwrap();
        let tri = graph_catalog("triangle", None).unwrap();
        for x in [[0.5, 0.3, 0.2], [0.6, 0.25, 0.15], [0.34, 0.33, 0.33]] {
            let s = WState::from_components(x.to_vec()).unwrap();
            assert!((p_lpo(&s, &wedge).unwrap() - wedge_lpo(&x).unwrap()).abs() < 1e-12);
            assert!((p_lpo(&s, &tri).unwrap() - triangle_lpo(&x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn weak_improvement_limits() {
        let z = g6_weak_improvement(0.1, 0.0).unwrap();
        assert!(z.numerical.abs() < 1e-15 && z.printed == 0.0);
        let small = g6_weak_improvement(1e-6, 0.02).unwrap();
        assert!(small.numerical.abs() < 1e-12 && small.printed.abs() < 1e-12);
        // the printed expression is never positive; the direct average is
        // positive near t = 1/4
        let near = g6_weak_improvement(0.24, 0.02).unwrap();
        assert!(near.printed < 0.0);
        assert!(near.numerical > 0.0);
        assert!(g6_weak_improvement(0.3, 0.01).is_err());
    }
}
