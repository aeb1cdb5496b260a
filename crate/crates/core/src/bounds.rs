//! Closed-form upper bounds and entanglement monotones.
//!
//! Four-party configurations are matched up to relabeling against the
//! presets of [`graph_catalog`]; roles are reported as preset label → party.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{graph_catalog, ConfigGraph};
use crate::state::WState;

/// Separable-operations optimum for the standard four-party state on
/// Configuration VI. Cited, not computed.
pub const SEP_VI_W4: f64 = 5.0 / 6.0;

/// A bound value with the role assignment used to evaluate it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_name: String,
    pub value: f64,
    pub roles: BTreeMap<String, String>,
    /// `false` when the formula's precondition fails and `value` is the
    /// K-T fallback `2x_A`.
    pub applicable: bool,
    /// Reference constant from the literature rather than a computed bound.
    pub cited: bool,
}

impl BoundReport {
    fn new(name: &str, value: f64, roles: BTreeMap<String, String>) -> Self {
        Self {
            bound_name: name.to_string(),
            value,
            roles,
            applicable: true,
            cited: false,
        }
    }
}

/// Configurations handled by [`bound_config`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Config {
    Wedge,
    Triangle,
    I,
    IPrime,
    IDoublePrime,
    II,
    V,
}

impl Config {
    pub const ALL: [Config; 7] = [
        Config::Wedge,
        Config::Triangle,
        Config::I,
        Config::IPrime,
        Config::IDoublePrime,
        Config::II,
        Config::V,
    ];

    pub fn preset(self) -> &'static str {
        match self {
            Config::Wedge => "wedge",
            Config::Triangle => "triangle",
            Config::I => "I",
            Config::IPrime => "I'",
            Config::IDoublePrime => "I''",
            Config::II => "II",
            Config::V => "V",
        }
    }

    fn is_star(self) -> bool {
        matches!(
            self,
            Config::Wedge | Config::I | Config::IPrime | Config::IDoublePrime
        )
    }
}

fn preset(name: &str) -> ConfigGraph {
    graph_catalog(name, None).expect("built-in preset")
}

fn check_aligned(state: &WState, graph: &ConfigGraph) -> Result<()> {
    if state.labels() != graph.labels() {
        return Err(Error::InvalidInput(
            "state and graph party lists differ".into(),
        ));
    }
    Ok(())
}

/// Isomorphism onto `target` whose images, read in target order, carry the
/// lexicographically largest components: the first preset node gets the
/// largest weight available to it, and so on.
fn best_embedding(state: &WState, graph: &ConfigGraph, target: &ConfigGraph) -> Option<Vec<usize>> {
    graph.isomorphisms_to(target).into_iter().max_by(|p, q| {
        let a = p.iter().map(|&i| state.component(i));
        let b = q.iter().map(|&i| state.component(i));
        a.partial_cmp(b)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| q.cmp(p))
    })
}

fn role_map(target: &ConfigGraph, perm: &[usize], graph: &ConfigGraph) -> BTreeMap<String, String> {
    target
        .labels()
        .iter()
        .zip(perm)
        .map(|(r, &i)| (r.clone(), graph.labels()[i].clone()))
        .collect()
}

/// `num/den`, with `0/0 = 0` (terms whose numerator vanishes drop out).
fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Bound for the K-T-derived configurations (wedge, triangle, I, I′, I″,
/// II, V).
pub fn bound_config(state: &WState, graph: &ConfigGraph, config: Config) -> Result<BoundReport> {
    check_aligned(state, graph)?;
    let target = preset(config.preset());
    let perm = best_embedding(state, graph, &target).ok_or_else(|| {
        Error::ConfigMismatch(format!("graph is not configuration {}", config.preset()))
    })?;
    let x = |k: usize| state.component(perm[k]);
    let roles = role_map(&target, &perm, graph);
    let x0 = state.x0();
    let a = x(0);
    if config.is_star() && a < state.max_value() {
        return Ok(BoundReport {
            bound_name: "kt-2xA".into(),
            value: 2.0 * a,
            roles,
            applicable: false,
            cited: false,
        });
    }
    let value = match config {
        Config::I => 2.0 * x(1),
        Config::IPrime | Config::Wedge => 2.0 * a - 2.0 * ratio((a - x(1)) * (a - x(2)), a),
        Config::IDoublePrime => 2.0 * a - 2.0 * ratio((a - x(1)) * (a - x(2)) * (a - x(3)), a * a),
        Config::Triangle => 1.0 - x0 - ratio((a - x(1)) * (a - x(2)), a),
        Config::II => 1.0 - x0 - x(3) - ratio((a - x(1)) * (a - x(2)), a),
        Config::V => 1.0 - x0 - ratio((a - x(1)) * (a - x(2)) * (a - x(3)), a * a),
    };
    Ok(BoundReport::new(config.preset(), value, roles))
}

/// Roles of the monotone on Configurations III: the maximal party, the
/// largest party unconnected to it, and the other two (the fourth is the second
/// unconnected party when there are two).
fn tau_roles(state: &WState, graph: &ConfigGraph) -> Result<[usize; 4]> {
    check_aligned(state, graph)?;
    let is_iii = ["III-a", "III-b", "III-c"]
        .iter()
        .any(|name| graph.is_isomorphic(&preset(name)));
    if !is_iii {
        return Err(Error::ConfigMismatch(
            "graph is not a Configuration III".into(),
        ));
    }
    let top = state.max_index();
    let unconnected: Vec<usize> = (0..4)
        .filter(|&j| j != top && !graph.has_edge(top, j))
        .collect();
    let partner = largest(state, &unconnected);
    let rest: Vec<usize> = (0..4).filter(|&j| j != top && j != partner).collect();
    let (third, fourth) = if unconnected.len() == 2 {
        let other = unconnected
            .iter()
            .copied()
            .find(|&j| j != partner)
            .expect("two unconnected");
        (
            rest.iter()
                .copied()
                .find(|&j| j != other)
                .expect("two remain"),
            other,
        )
    } else {
        (rest[0], rest[1])
    };
    Ok([top, partner, third, fourth])
}

/// Largest component among `set`; lowest index wins ties.
fn largest(state: &WState, set: &[usize]) -> usize {
    let mut best = set[0];
    for &j in &set[1..] {
        if state.component(j) > state.component(best) {
            best = j;
        }
    }
    best
}

fn named_roles(graph: &ConfigGraph, names: &[&str], idx: &[usize]) -> BTreeMap<String, String> {
    names
        .iter()
        .zip(idx)
        .map(|(n, &i)| (n.to_string(), graph.labels()[i].clone()))
        .collect()
}

/// `τ = 2x₃ + 2x₄ − 2x₃x₄/x_max + ⅔ x₃x₄x_partner/x_max²` with `x₃, x₄` the
/// third and fourth roles.
pub fn tau(state: &WState, graph: &ConfigGraph) -> Result<BoundReport> {
    let [top, partner, third, fourth] = tau_roles(state, graph)?;
    let value = tau_formula(
        state.component(top),
        state.component(partner),
        state.component(third),
        state.component(fourth),
    );
    Ok(BoundReport::new(
        "tau",
        value,
        named_roles(
            graph,
            &["max", "partner", "third", "fourth"],
            &[top, partner, third, fourth],
        ),
    ))
}

fn tau_formula(top: f64, partner: f64, third: f64, fourth: f64) -> f64 {
    2.0 * third + 2.0 * fourth - 2.0 * ratio(third * fourth, top)
        + 2.0 / 3.0 * ratio(third * fourth * partner, top * top)
}

/// Γ on Configuration IV; the branch is chosen by the maximal party's degree.
pub fn gamma(state: &WState, graph: &ConfigGraph) -> Result<BoundReport> {
    check_aligned(state, graph)?;
    if !graph.is_isomorphic(&preset("IV")) {
        return Err(Error::ConfigMismatch(
            "graph is not Configuration IV".into(),
        ));
    }
    let top = state.max_index();
    let top_degree = graph.degree(top);
    let comp: Vec<usize> = (0..4).filter(|&j| graph.degree(j) != top_degree).collect();
    let partner = largest(state, &comp);
    let rest: Vec<usize> = (0..4).filter(|&j| j != top && j != partner).collect();
    let (two_edge, three_edge) = if graph.degree(rest[0]) == 2 {
        (rest[0], rest[1])
    } else {
        (rest[1], rest[0])
    };
    let x = |i: usize| state.component(i);
    let value = gamma_formula(
        top_degree == 3,
        x(top),
        x(partner),
        x(two_edge),
        x(three_edge),
    );
    Ok(BoundReport::new(
        "gamma",
        value,
        named_roles(
            graph,
            &["max", "partner", "two_edge", "three_edge"],
            &[top, partner, two_edge, three_edge],
        ),
    ))
}

fn gamma_formula(three_edged: bool, top: f64, partner: f64, two_edge: f64, three_edge: f64) -> f64 {
    if three_edged {
        2.0 * three_edge + (two_edge + partner) * (2.0 - ratio(three_edge, top))
            - 2.0 * ratio(partner * two_edge, top)
            + 4.0 / 3.0 * ratio(two_edge * three_edge * partner, top * top)
    } else {
        2.0 * partner + 2.0 * three_edge - ratio(partner * three_edge, top)
            + ratio(two_edge * three_edge * partner, 3.0 * top * top)
    }
}

/// Pair-distillation bound between one party and the rest for the uniform
/// state `(t, …, t)`: `1 − √(1 − 4(n−1)t²)`.
pub fn one_vs_rest_pair_bound(n: usize, t: f64) -> Result<f64> {
    check_uniform(n, t)?;
    let inner = (1.0 - 4.0 * (n as f64 - 1.0) * t * t).max(0.0);
    Ok(1.0 - inner.sqrt())
}

/// Upper bound on converting `(t, …, t)` into the standard `n`-party state:
/// `(n/2)(1 − √(1 − 4(n−1)t²))`.
pub fn w_target_bound(n: usize, t: f64) -> Result<f64> {
    Ok(0.5 * n as f64 * one_vs_rest_pair_bound(n, t)?)
}

fn check_uniform(n: usize, t: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("need n >= 2, got {n}")));
    }
    if !(0.0..=1.0 / n as f64).contains(&t) {
        return Err(Error::InvalidInput(format!("t = {t} outside [0, 1/{n}]")));
    }
    Ok(())
}

/// Protocol value on three disjoint pairs `(1,2), (3,4), (5,6)` for a
/// sorted `x₀ = 0` six-party state, as the printed ten-term expression.
pub fn tau6(state: &WState) -> Result<f64> {
    if state.len() != 6 {
        return Err(Error::InvalidInput(format!(
            "tau6 needs 6 parties, got {}",
            state.len()
        )));
    }
    let x = state.components();
    if x.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Precondition(
            "components must be sorted descending".into(),
        ));
    }
    let [x1, x2, x3, x4, x5, x6] = [x[0], x[1], x[2], x[3], x[4], x[5]];
    Ok(
        2.0 * (x2 + x4 + x6 - ratio(x2 * x4, x1) - ratio(x2 * x6, x1) - ratio(x4 * x6, x3))
            + 2.0 * ratio(x2 * x4 * x6, x1 * x3)
            + 2.0 * ratio(x4 * x5 * x6, x3 * x3)
            + ratio(2.0 * x2 * x3 * x4, 3.0 * x1 * x1)
            + ratio(2.0 * x2 * x5 * x6, 3.0 * x1 * x1)
            - 2.0 * ratio(x2 * x4 * x5 * x6, x1 * x3 * x3)
            - ratio(14.0 * x2 * x3 * x4 * x5 * x6, 15.0 * x1.powi(4)),
    )
}

/// Standard state on `n_pairs` disjoint pairs: protocol value `2/(2N−1)`
/// and the cited separable-operations value `√(1/N)`.
pub fn pairs_comparison(n_pairs: usize) -> Result<(f64, f64)> {
    if n_pairs < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 pairs, got {n_pairs}"
        )));
    }
    let n = n_pairs as f64;
    Ok((2.0 / (2.0 * n - 1.0), (1.0 / n).sqrt()))
}

fn is_perfect_matching(graph: &ConfigGraph) -> bool {
    let n = graph.len();
    n >= 4
        && n.is_multiple_of(2)
        && graph.edge_count() == n / 2
        && (0..n).all(|i| graph.degree(i) == 1)
}

/// The tightest implemented bound whose configuration matches `graph`, or
/// `None`. Configuration VI and disjoint pairs only have cited
/// separable-operations values, and only for the standard state.
pub fn upper_bound(state: &WState, graph: &ConfigGraph) -> Result<Option<BoundReport>> {
    check_aligned(state, graph)?;
    for c in Config::ALL {
        if graph.is_isomorphic(&preset(c.preset())) {
            return bound_config(state, graph, c).map(Some);
        }
    }
    if let Ok(r) = tau(state, graph) {
        return Ok(Some(r));
    }
    if let Ok(r) = gamma(state, graph) {
        return Ok(Some(r));
    }
    let cited = |name: &str, value: f64| BoundReport {
        bound_name: name.into(),
        value,
        roles: BTreeMap::new(),
        applicable: true,
        cited: true,
    };
    if state.is_standard_w() {
        if graph.is_isomorphic(&preset("VI")) {
            return Ok(Some(cited("sep-VI", SEP_VI_W4)));
        }
        if is_perfect_matching(graph) {
            let (_, sep) = pairs_comparison(graph.len() / 2)?;
            return Ok(Some(cited("sep-pairs", sep)));
        }
    }
    Ok(None)
}
