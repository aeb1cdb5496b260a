//! The "equal or vanish" symmetrization subroutine.
//!
//! Starting from an `x₀ = 0` state, parties repeatedly either raise their
//! component to the current maximum or drop out, until a standard W state on
//! some subset remains (or the branch fails). Isolated parties disentangle
//! themselves first.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::ConfigGraph;
use crate::measurement::{apply_measurement, KrausOutcome, LocalMeasurement};
use crate::outcome::{OutcomeDistribution, Terminal};
use crate::state::WState;

/// Which end of the index order breaks ties when several parties qualify.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum PartyOrder {
    #[default]
    Ascending,
    Descending,
}

impl PartyOrder {
    fn pick(self, mut candidates: impl DoubleEndedIterator<Item = usize>) -> Option<usize> {
        match self {
            PartyOrder::Ascending => candidates.next(),
            PartyOrder::Descending => candidates.next_back(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EvAction {
    /// Isolated party disentangles itself (only when more than two remain).
    RemoveIsolated(usize),
    /// Two parties, no edge between them.
    FailTwoParty,
    /// Every component is maximal: a standard W state.
    Terminal,
    /// This party performs the e/v measurement.
    Measure(usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct EvNode {
    pub state: WState,
    pub graph: ConfigGraph,
    pub path_probability: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvTree {
    pub node: EvNode,
    pub step: EvStep,
}

#[derive(Clone, Debug, Serialize)]
pub enum EvStep {
    Leaf(Terminal),
    Split {
        party: String,
        measurement: LocalMeasurement,
        children: Vec<EvChild>,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct EvChild {
    pub outcome: &'static str,
    pub probability: f64,
    pub subtree: EvTree,
}

pub(crate) fn require_aligned(state: &WState, graph: &ConfigGraph) -> Result<()> {
    if state.labels() != graph.labels() {
        return Err(Error::InvalidInput(format!(
            "state parties [{}] differ from graph nodes [{}]",
            state.labels().join(","),
            graph.labels().join(",")
        )));
    }
    Ok(())
}

pub fn select_ev_action(state: &WState, graph: &ConfigGraph) -> Result<EvAction> {
    select_ev_action_ordered(state, graph, PartyOrder::Ascending)
}

pub fn select_ev_action_ordered(
    state: &WState,
    graph: &ConfigGraph,
    order: PartyOrder,
) -> Result<EvAction> {
    require_aligned(state, graph)?;
    if state.has_vacuum() {
        return Err(Error::Precondition(format!(
            "e/v subroutine needs x0 = 0, got {}",
            state.x0()
        )));
    }
    let n = state.len();
    if let Some(k) = order.pick((0..n).filter(|&i| graph.is_isolated(i))) {
        return Ok(if n == 2 {
            EvAction::FailTwoParty
        } else {
            EvAction::RemoveIsolated(k)
        });
    }
    if (0..n).all(|i| state.is_maximal(i)) {
        return Ok(EvAction::Terminal);
    }
    let non_max = || (0..n).filter(|&i| !state.is_maximal(i));
    let touching_max =
        non_max().filter(|&i| graph.neighbors(i).iter().any(|&j| state.is_maximal(j)));
    let k = order
        .pick(touching_max)
        .or_else(|| order.pick(non_max()))
        .expect("some component is non-maximal");
    Ok(EvAction::Measure(k))
}

/// Two-outcome e/v measurement for party `label`: outcome 1 raises its
/// component to the maximum, outcome 2 removes it.
pub fn ev_measurement(state: &WState, label: &str) -> Result<LocalMeasurement> {
    let k = state.index_of(label)?;
    if state.is_maximal(k) {
        return Err(Error::Precondition(format!(
            "component of `{label}` is already maximal"
        )));
    }
    let ratio = state.component(k) / state.max_value();
    LocalMeasurement::new(
        label,
        vec![
            KrausOutcome::diagonal(ratio, 1.0),
            KrausOutcome::diagonal(1.0 - ratio, 0.0),
        ],
    )
}

/// Projective `diag[1,0] / diag[0,1]` that detaches an isolated party.
pub fn isolation_measurement(label: &str) -> LocalMeasurement {
    LocalMeasurement::diagonal(label, &[(1.0, 0.0), (0.0, 1.0)]).expect("complete")
}

/// Drops zero-weight parties from both state and graph. `None` when at most
/// one party would remain.
pub(crate) fn prune(state: &WState, graph: &ConfigGraph) -> Option<(WState, ConfigGraph)> {
    let zeros = state.zero_indices();
    if zeros.is_empty() {
        return Some((state.clone(), graph.clone()));
    }
    let s = state.without_indices(&zeros)?;
    Some((s, graph.remove_indices(&zeros)))
}

pub fn ev_tree(state: &WState, graph: &ConfigGraph) -> Result<EvTree> {
    ev_tree_ordered(state, graph, PartyOrder::Ascending)
}

pub fn ev_tree_ordered(state: &WState, graph: &ConfigGraph, order: PartyOrder) -> Result<EvTree> {
    require_aligned(state, graph)?;
    if state.has_vacuum() {
        return Err(Error::Precondition(format!(
            "e/v subroutine needs x0 = 0, got {}",
            state.x0()
        )));
    }
    let max_depth = 2 * state.len();
    match prune(state, graph) {
        Some((s, g)) => expand(s, g, 1.0, 0, max_depth, order),
        None => Ok(leaf(state.clone(), graph.clone(), 1.0, Terminal::Failure)),
    }
}

fn leaf(state: WState, graph: ConfigGraph, p: f64, t: Terminal) -> EvTree {
    EvTree {
        node: EvNode {
            state,
            graph,
            path_probability: p,
        },
        step: EvStep::Leaf(t),
    }
}

fn expand(
    state: WState,
    graph: ConfigGraph,
    path: f64,
    depth: usize,
    max_depth: usize,
    order: PartyOrder,
) -> Result<EvTree> {
    assert!(
        depth <= max_depth,
        "e/v recursion exceeded depth {max_depth}"
    );
    if state.is_product() {
        return Ok(leaf(state, graph, path, Terminal::Failure));
    }
    let action = select_ev_action_ordered(&state, &graph, order)?;
    let (k, m) = match action {
        EvAction::FailTwoParty => return Ok(leaf(state, graph, path, Terminal::Failure)),
        EvAction::Terminal => {
            let t = Terminal::StandardW {
                parties: state.labels().to_vec(),
            };
            return Ok(leaf(state, graph, path, t));
        }
        EvAction::RemoveIsolated(k) => (k, isolation_measurement(&state.labels()[k])),
        EvAction::Measure(k) => (k, ev_measurement(&state, &state.labels()[k])?),
    };
    let branches = apply_measurement(&state, &m)?;
    let names: [&'static str; 2] = match action {
        EvAction::Measure(_) => ["equal", "vanish"],
        _ => ["detach", "collapse"],
    };
    let mut children = Vec::with_capacity(2);
    for (i, b) in branches.into_iter().enumerate() {
        let Some(post) = b.state else { continue };
        let p = path * b.probability;
        let subtree = if post.component(k) == 0.0 {
            match post.without_indices(&[k]) {
                Some(s) => expand(
                    s,
                    graph.remove_indices(&[k]),
                    p,
                    depth + 1,
                    max_depth,
                    order,
                )?,
                None => leaf(post, graph.clone(), p, Terminal::Failure),
            }
        } else {
            expand(post, graph.clone(), p, depth + 1, max_depth, order)?
        };
        children.push(EvChild {
            outcome: names[i],
            probability: b.probability,
            subtree,
        });
    }
    Ok(EvTree {
        node: EvNode {
            state,
            graph,
            path_probability: path,
        },
        step: EvStep::Split {
            party: m.party().to_string(),
            measurement: m,
            children,
        },
    })
}

impl EvTree {
    /// Leaves with their path probabilities.
    pub fn leaves(&self) -> Vec<(&EvNode, &Terminal)> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<(&'a EvNode, &'a Terminal)>) {
        match &self.step {
            EvStep::Leaf(t) => out.push((&self.node, t)),
            EvStep::Split { children, .. } => {
                for c in children {
                    c.subtree.collect(out);
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match &self.step {
            EvStep::Leaf(_) => 0,
            EvStep::Split { children, .. } => {
                1 + children
                    .iter()
                    .map(|c| c.subtree.depth())
                    .max()
                    .unwrap_or(0)
            }
        }
    }

    pub fn distribution(&self) -> OutcomeDistribution {
        let mut d = OutcomeDistribution::new();
        for (node, t) in self.leaves() {
            d.add(t.clone(), node.path_probability);
        }
        d
    }

    /// Graphviz rendering: nodes show component vectors, edges the outcome
    /// and its conditional probability.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph ev {\n  node [shape=box, fontname=\"monospace\"];\n");
        let mut next = 0usize;
        self.dot_node(&mut out, &mut next);
        out.push_str("}\n");
        out
    }

    fn dot_node(&self, out: &mut String, next: &mut usize) -> usize {
        let id = *next;
        *next += 1;
        let comps: Vec<String> = self
            .node
            .state
            .labels()
            .iter()
            .zip(self.node.state.components())
            .map(|(l, x)| format!("{l}:{x:.6}"))
            .collect();
        let head = match &self.step {
            EvStep::Leaf(t) => t.to_string(),
            EvStep::Split { party, .. } => format!("{party} measures"),
        };
        let _ = writeln!(
            out,
            "  n{id} [label=\"{head}\\n({})\\np={:.6}\"];",
            comps.join(", "),
            self.node.path_probability
        );
        if let EvStep::Split { children, .. } = &self.step {
            for c in children {
                let cid = c.subtree.dot_node(out, next);
                let _ = writeln!(
                    out,
                    "  n{id} -> n{cid} [label=\"{} {:.6}\"];",
                    c.outcome, c.probability
                );
            }
        }
        id
    }
}

/// Exact outcome distribution `λ_{x,𝒢}` of the subroutine: standard W
/// terminals and failure.
pub fn ev_distribution(state: &WState, graph: &ConfigGraph) -> Result<OutcomeDistribution> {
    ev_distribution_ordered(state, graph, PartyOrder::Ascending)
}

pub fn ev_distribution_ordered(
    state: &WState,
    graph: &ConfigGraph,
    order: PartyOrder,
) -> Result<OutcomeDistribution> {
    Ok(ev_tree_ordered(state, graph, order)?.distribution())
}

/// A standard-W terminal on `parties` is admissible for the input `state`
/// when every maximal party of the input is either in the terminal set or
/// has no neighbour inside it.
pub fn satisfies_support_condition(
    state: &WState,
    graph: &ConfigGraph,
    parties: &[String],
) -> bool {
    let inside = |i: usize| parties.contains(&state.labels()[i]);
    (0..state.len())
        .filter(|&i| state.is_maximal(i))
        .all(|star| inside(star) || !graph.neighbors(star).into_iter().any(inside))
}

/// `N·∏_{k≠n₁} x_k / x_{n₁}^{N−2}`: probability of reaching the standard W
/// state on all parties.
pub fn full_set_probability(state: &WState) -> f64 {
    let n = state.len();
    let top = state.max_index();
    let xmax = state.component(top);
    let prod: f64 = (0..n)
        .filter(|&i| i != top)
        .map(|i| state.component(i))
        .product();
    n as f64 * prod / xmax.powi(n as i32 - 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::graph_catalog;
    use crate::state::standard_w;

    fn y_alpha(alpha: f64) -> WState {
        let p = 1.0 + 3.0 * alpha;
        WState::from_components(vec![alpha / p, alpha / p, alpha / p, 1.0 / p]).unwrap()
    }

    fn w(parties: &str) -> Terminal {
        Terminal::StandardW {
            parties: parties.chars().map(|c| c.to_string()).collect(),
        }
    }

    #[test]
    fn standard_w_is_terminal() {
        let s = standard_w(crate::state::default_labels(4)).unwrap();
        for name in ["III-a", "III-c", "IV", "V", "VI", "I''"] {
            let g = graph_catalog(name, None).unwrap();
            assert_eq!(
                select_ev_action(&s, &g).unwrap(),
                EvAction::Terminal,
                "{name}"
            );
            let d = ev_distribution(&s, &g).unwrap();
            assert_eq!(d.probability_of(&w("ABCD")), 1.0);
        }
    }

    #[test]
    fn isolated_node_detaches_first() {
        let s = standard_w(crate::state::default_labels(4)).unwrap();
        let g = graph_catalog("II", None).unwrap();
        assert_eq!(
            select_ev_action(&s, &g).unwrap(),
            EvAction::RemoveIsolated(3)
        );
        let d = ev_distribution(&s, &g).unwrap();
        assert!((d.probability_of(&w("ABC")) - 0.75).abs() < 1e-15);
        assert!((d.failure() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn figure_four_selection() {
        let g = graph_catalog("VI", None).unwrap();
        assert_eq!(
            select_ev_action(&y_alpha(0.3), &g).unwrap(),
            EvAction::Measure(0)
        );
    }

    #[test]
    fn two_parties_without_edge_fail() {
        let s = WState::from_components(vec![0.5, 0.5]).unwrap();
        let g = crate::graph::graph_from_indices(2, &[]).unwrap();
        assert_eq!(select_ev_action(&s, &g).unwrap(), EvAction::FailTwoParty);
    }

    #[test]
    fn vacuum_is_rejected() {
        let s = WState::from_components(vec![0.4, 0.4]).unwrap();
        let g = crate::graph::graph_from_indices(2, &[(0, 1)]).unwrap();
        assert!(matches!(
            select_ev_action(&s, &g),
            Err(Error::Precondition(_))
        ));
        assert!(ev_distribution(&s, &g).is_err());
    }

    #[test]
    fn equal_branch_scales_others_by_alpha() {
        let alpha = 0.3;
        let s = y_alpha(alpha);
        let m = ev_measurement(&s, "A").unwrap();
        let out = apply_measurement(&s, &m).unwrap();
        let post = out[0].state.as_ref().unwrap();
        // ∝ (α, α², α², α)
        let base = post.component(0) / alpha;
        let expect = [alpha, alpha * alpha, alpha * alpha, alpha];
        for (x, e) in post.components().iter().zip(expect) {
            assert!((x - base * e).abs() < 1e-15);
        }
        assert!(post.is_maximal(0) && post.is_maximal(3));
        assert!(ev_measurement(&s, "D").is_err());
    }

    #[test]
    fn nearly_maximal_party_almost_surely_equalizes() {
        let xmax = 0.5;
        let s = WState::from_components(vec![xmax, xmax * (1.0 - 1e-11), 0.0]).unwrap();
        let m = ev_measurement(&s, "B").unwrap();
        let out = apply_measurement(&s, &m).unwrap();
        assert!(out[0].probability > 1.0 - 1e-10);
    }

    #[test]
    fn configuration_vi_lambda_list() {
        let g = graph_catalog("VI", None).unwrap();
        for &alpha in &[0.1, 0.366, 0.8] {
            let d = ev_distribution(&y_alpha(alpha), &g).unwrap();
            let p = 1.0 + 3.0 * alpha;
            let close = |t: Terminal, e: f64| {
                let got = d.probability_of(&t);
                assert!((got - e).abs() < 1e-12, "{t}: {got} vs {e}");
            };
            close(w("BC"), 2.0 * alpha * (1.0 - alpha) / p);
            close(w("AD"), 2.0 * alpha * (1.0 - alpha).powi(2) / p);
            close(w("ABD"), 3.0 * alpha * alpha * (1.0 - alpha) / p);
            close(w("ACD"), 3.0 * alpha * alpha * (1.0 - alpha) / p);
            d.validate().unwrap();
        }
    }

    #[test]
    fn three_party_closed_form() {
        let s = WState::from_components(vec![0.5, 0.3, 0.2]).unwrap();
        let g = graph_catalog("triangle", None).unwrap();
        let d = ev_distribution(&s, &g).unwrap();
        assert!((d.probability_of(&w("ABC")) - 0.36).abs() < 1e-12);
        assert!((full_set_probability(&s) - 0.36).abs() < 1e-12);
        d.validate().unwrap();
    }

    #[test]
    fn dot_export_mentions_terminals() {
        let g = graph_catalog("VI", None).unwrap();
        let dot = ev_tree(&y_alpha(0.4), &g).unwrap().to_dot();
        assert!(dot.starts_with("digraph"));
        assert!(dot.contains("W_3^{ABD}"));
        assert!(dot.contains("equal"));
    }
}
