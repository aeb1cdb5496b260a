//! Removal of the vacuum component.
//!
//! The maximal party measures so that one outcome leaves a state with no
//! `|0…0⟩` term and the other zeroes its own component; the latter is
//! repeated on the remaining parties.

use crate::error::{Error, Result};
use crate::evroutine::{prune, require_aligned};
use crate::graph::ConfigGraph;
use crate::measurement::{apply_measurement, KrausOutcome, LocalMeasurement};
use crate::outcome::{OutcomeDistribution, Terminal};
use crate::state::WState;

/// `μ` with `(1 − μ)²·x_max = μ·x₀`, `μ < 1`.
fn mu(x0: f64, xmax: f64) -> f64 {
    // 1 − μ = (−x₀ + √(x₀² + 4 x_max x₀)) / (2 x_max), rationalized
    1.0 - 2.0 * x0 / (x0 + (x0 * x0 + 4.0 * xmax * x0).sqrt())
}

/// Two-outcome measurement by the maximal party. Outcome 0 removes the
/// vacuum; outcome 1 zeroes the measuring party's component.
pub fn phase1_measurement(state: &WState) -> Result<LocalMeasurement> {
    let x0 = state.x0();
    if x0 <= 0.0 {
        return Err(Error::Precondition("vacuum removal needs x0 > 0".into()));
    }
    let top = state.max_index();
    let xmax = state.component(top);
    if xmax <= 0.0 {
        return Err(Error::Precondition("state has no excitation".into()));
    }
    let mu = mu(x0, xmax);
    let b1 = -(mu * x0 / xmax).sqrt();
    let a2 = 1.0 - mu;
    let b2 = -mu.sqrt() * b1 / a2.sqrt();
    LocalMeasurement::new(
        state.labels()[top].clone(),
        vec![
            KrausOutcome::new(mu, b1, mu),
            KrausOutcome::new(a2, b2, 0.0),
        ],
    )
}

/// Closed form of the vacuum-free outcome probability.
pub fn phase1_success_probability(state: &WState) -> f64 {
    let x0 = state.x0();
    let xn = state.max_value();
    2.0 * xn * (1.0 - x0) / (x0 + 2.0 * xn + (x0 * x0 + 4.0 * xn * x0).sqrt())
}

/// Repeats the vacuum removal until every branch is vacuum-free
/// ([`Terminal::Residual`]) or disentangled ([`Terminal::Failure`]).
pub fn phase1_distribution(state: &WState, graph: &ConfigGraph) -> Result<OutcomeDistribution> {
    require_aligned(state, graph)?;
    let mut out = OutcomeDistribution::new();
    descend(state, graph, 1.0, &mut out)?;
    Ok(out)
}

fn descend(
    state: &WState,
    graph: &ConfigGraph,
    p: f64,
    out: &mut OutcomeDistribution,
) -> Result<()> {
    let Some((s, g)) = prune(state, graph) else {
        out.add(Terminal::Failure, p);
        return Ok(());
    };
    if s.is_product() {
        out.add(Terminal::Failure, p);
        return Ok(());
    }
    if !s.has_vacuum() {
        out.add(Terminal::Residual { state: s, graph: g }, p);
        return Ok(());
    }
    let m = phase1_measurement(&s)?;
    for b in apply_measurement(&s, &m)? {
        if let Some(post) = b.state {
            descend(&force_zero(post, &m)?, &g, p * b.probability, out)?;
        }
    }
    Ok(())
}

/// Snaps round-off: the measuring party's component after outcome 1, and the
/// vacuum after outcome 0, are exactly zero.
pub(crate) fn force_zero(post: WState, m: &LocalMeasurement) -> Result<WState> {
    let k = post.index_of(m.party())?;
    if post.component(k) < 1e-12 {
        let mut c = post.components().to_vec();
        c[k] = 0.0;
        return WState::new(c, post.labels().to_vec());
    }
    if post.x0() < 1e-12 {
        let total: f64 = post.components().iter().sum();
        let c = post.components().iter().map(|x| x / total).collect();
        return WState::new(c, post.labels().to_vec());
    }
    Ok(post)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(c: &[f64]) -> WState {
        WState::from_components(c.to_vec()).unwrap()
    }

    #[test]
    fn outcome_probability_matches_closed_form() {
        let s = st(&[0.3, 0.3, 0.2]);
        let m = phase1_measurement(&s).unwrap();
        assert_eq!(m.party(), "A");
        let out = apply_measurement(&s, &m).unwrap();
        let expect = 0.48 / (0.8 + 0.28f64.sqrt());
        assert!((out[0].probability - expect).abs() < 1e-12);
        assert!((phase1_success_probability(&s) - expect).abs() < 1e-14);
        assert!((expect - 0.361133).abs() < 1e-6);
        let post = out[0].state.as_ref().unwrap();
        assert!(post.x0() < 1e-12);
        for (x, y) in post.components().iter().zip([0.375, 0.375, 0.25]) {
            assert!((x - y).abs() < 1e-12);
        }
        let zeroed = out[1].state.as_ref().unwrap();
        assert!(zeroed.component(0) < 1e-12);
        assert!(zeroed.x0() > 0.0);
    }

    #[test]
    fn small_vacuum_limit() {
        let s = st(&[0.5, 0.5 - 1e-9]);
        assert!((phase1_success_probability(&s) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn vacuum_free_input_is_identity() {
        let s = st(&[0.5, 0.3, 0.2]);
        let g = ConfigGraph::from_edge_strings("ABC", &["AB", "AC"]).unwrap();
        assert!(phase1_measurement(&s).is_err());
        let d = phase1_distribution(&s, &g).unwrap();
        assert_eq!(d.entries().len(), 1);
        assert!(matches!(&d.entries()[0].0, Terminal::Residual { state, .. } if *state == s));
    }

    #[test]
    fn product_input_fails() {
        let s = st(&[0.6, 0.0, 0.0]);
        let g = ConfigGraph::from_edge_strings("ABC", &["AB", "AC"]).unwrap();
        let d = phase1_distribution(&s, &g).unwrap();
        assert_eq!(d.failure(), 1.0);
    }

    #[test]
    fn two_party_iterations_sum_to_one() {
        let s = st(&[0.4, 0.3]);
        let g = ConfigGraph::from_edge_strings("AB", &["AB"]).unwrap();
        let d = phase1_distribution(&s, &g).unwrap();
        d.validate().unwrap();
        let first = phase1_success_probability(&s);
        let residual: f64 = d
            .entries()
            .iter()
            .filter(|(t, _)| matches!(t, Terminal::Residual { .. }))
            .map(|(_, p)| p)
            .sum();
        // second round on a single party is a product state
        assert!((residual - first).abs() < 1e-12);
        assert!((d.failure() - (1.0 - first)).abs() < 1e-12);
    }

    #[test]
    fn three_party_iterations() {
        let s = st(&[0.3, 0.3, 0.2]);
        let g = ConfigGraph::from_edge_strings("ABC", &["AB", "AC", "BC"]).unwrap();
        let d = phase1_distribution(&s, &g).unwrap();
        d.validate().unwrap();
        for (t, _) in d.entries() {
            if let Terminal::Residual { state, graph } = t {
                assert!(!state.has_vacuum());
                assert_eq!(state.labels(), graph.labels());
            }
        }
        assert!(d.entries().len() >= 3);
    }
}
